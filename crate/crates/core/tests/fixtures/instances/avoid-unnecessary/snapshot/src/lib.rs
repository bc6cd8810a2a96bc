pub fn sum_of_squares(xs: &[i64]) -> i64 {
    todo!()
}
