//! Library side of the `depdec` binary: argument parsing, dispatch, and
//! report rendering.

pub mod app;
pub mod render;
