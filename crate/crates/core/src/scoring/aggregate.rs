use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LabeledChange;
use crate::advisories::{severity_of, Severity};
use crate::changes::ChangeKind;
use crate::version::RemediationBucket;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthorKind {
    Agent,
    Human,
}

impl AuthorKind {
    pub const ALL: [AuthorKind; 2] = [AuthorKind::Agent, AuthorKind::Human];

    pub fn label(self) -> &'static str {
        match self {
            AuthorKind::Agent => "Agent",
            AuthorKind::Human => "Human",
        }
    }
}

/// An exact ratio. Percentages are rounded half-up only when rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Rate {
    pub numerator: u64,
    pub denominator: u64,
}

impl Rate {
    pub fn new(numerator: u64, denominator: u64) -> Rate {
        Rate {
            numerator,
            denominator,
        }
    }

    /// `100 * numerator / denominator` rounded half-up to `decimals` places;
    /// zero when the denominator is zero.
    pub fn percent(&self, decimals: u32) -> String {
        let scale = 10u128.pow(decimals);
        let scaled = if self.denominator == 0 {
            0
        } else {
            let d = u128::from(self.denominator);
            (2 * 100 * scale * u128::from(self.numerator) + d) / (2 * d)
        };
        let whole = scaled / scale;
        if decimals == 0 {
            whole.to_string()
        } else {
            format!(
                "{whole}.{:0width$}",
                scaled % scale,
                width = decimals as usize
            )
        }
    }

    /// Percentage at JSON precision (two decimals).
    pub fn percent_value(&self) -> f64 {
        self.percent(2).parse().unwrap()
    }

    /// Whether the percentage lies within `slack` of `target`, both in
    /// hundredths of a percentage point. Exact integer arithmetic.
    pub fn within_hundredths(&self, target: u64, slack: u64) -> bool {
        let d = i128::from(self.denominator);
        let lhs = 10_000 * i128::from(self.numerator) - i128::from(target) * d;
        lhs.abs() <= i128::from(slack) * d
    }
}

#[derive(Serialize, Deserialize)]
struct RateRepr {
    numerator: u64,
    denominator: u64,
    #[serde(default, skip_deserializing)]
    percent: f64,
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RateRepr {
            numerator: self.numerator,
            denominator: self.denominator,
            percent: self.percent_value(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RateRepr::deserialize(d)?;
        Ok(Rate::new(r.numerator, r.denominator))
    }
}

/// Mergeable counters for one author kind. Merging is associative and
/// commutative, so sharded counting yields the same totals in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    pub kinds: BTreeMap<ChangeKind, u64>,
    pub vulnerable: u64,
    pub fixed: u64,
    pub mitigatable: u64,
    pub unaudited: u64,
    pub introduced_severity: BTreeMap<Severity, u64>,
    pub fixed_severity: BTreeMap<Severity, u64>,
    pub remediation: BTreeMap<RemediationBucket, u64>,
}

impl Tally {
    pub fn add(&mut self, lc: &LabeledChange) {
        *self.kinds.entry(lc.change.kind).or_default() += 1;
        let label = &lc.label;
        if label.unaudited {
            self.unaudited += 1;
        }
        if label.is_vulnerable() {
            self.vulnerable += 1;
            if label.mitigatable == Some(true) {
                self.mitigatable += 1;
            }
            *self
                .remediation
                .entry(label.remediation.unwrap_or(RemediationBucket::Other))
                .or_default() += 1;
        }
        if label.is_fix() {
            self.fixed += 1;
        }
        for a in &label.introduced {
            *self.introduced_severity.entry(severity_of(a)).or_default() += 1;
        }
        for a in &label.fixed {
            *self.fixed_severity.entry(severity_of(a)).or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        fn add_map<K: Ord + Copy>(into: &mut BTreeMap<K, u64>, from: &BTreeMap<K, u64>) {
            for (k, n) in from {
                *into.entry(*k).or_default() += n;
            }
        }
        add_map(&mut self.kinds, &other.kinds);
        self.vulnerable += other.vulnerable;
        self.fixed += other.fixed;
        self.mitigatable += other.mitigatable;
        self.unaudited += other.unaudited;
        add_map(&mut self.introduced_severity, &other.introduced_severity);
        add_map(&mut self.fixed_severity, &other.fixed_severity);
        add_map(&mut self.remediation, &other.remediation);
    }

    fn kind(&self, k: ChangeKind) -> u64 {
        self.kinds.get(&k).copied().unwrap_or(0)
    }
}

fn full<K: Ord + Copy>(keys: &[K], from: &BTreeMap<K, u64>) -> BTreeMap<K, u64> {
    keys.iter()
        .map(|k| (*k, from.get(k).copied().unwrap_or(0)))
        .collect()
}

/// Derived study metrics for one author kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorMetrics {
    pub total_changes: u64,
    pub change_counts: BTreeMap<ChangeKind, u64>,
    pub kind_distribution: BTreeMap<ChangeKind, Rate>,
    /// Additions plus updates.
    pub introduced_dep_count: u64,
    pub vulnerable_dep_count: u64,
    /// Vulnerable over introduced.
    pub vulnerable_rate: Rate,
    pub fixed_dep_count: u64,
    pub introduced_severity: BTreeMap<Severity, u64>,
    pub fixed_severity: BTreeMap<Severity, u64>,
    pub mitigatable_fraction: Rate,
    pub remediation_histogram: BTreeMap<RemediationBucket, u64>,
    pub introduced_pct_all_changes: Rate,
    pub fixed_pct_all_changes: Rate,
    /// Fixing changes over removals plus updates.
    pub fix_rate: Rate,
    /// Fixed minus vulnerable.
    pub net_impact: i64,
    pub unaudited_changes: u64,
}

impl AuthorMetrics {
    pub fn from_tally(t: &Tally) -> AuthorMetrics {
        let change_counts = full(&ChangeKind::ALL, &t.kinds);
        let total: u64 = change_counts.values().sum();
        let (adds, removals, updates) = (
            t.kind(ChangeKind::Addition),
            t.kind(ChangeKind::Removal),
            t.kind(ChangeKind::Update),
        );
        AuthorMetrics {
            total_changes: total,
            kind_distribution: change_counts
                .iter()
                .map(|(k, n)| (*k, Rate::new(*n, total)))
                .collect(),
            change_counts,
            introduced_dep_count: adds + updates,
            vulnerable_dep_count: t.vulnerable,
            vulnerable_rate: Rate::new(t.vulnerable, adds + updates),
            fixed_dep_count: t.fixed,
            introduced_severity: full(&Severity::DESCENDING, &t.introduced_severity),
            fixed_severity: full(&Severity::DESCENDING, &t.fixed_severity),
            mitigatable_fraction: Rate::new(t.mitigatable, t.vulnerable),
            remediation_histogram: full(&RemediationBucket::ALL, &t.remediation),
            introduced_pct_all_changes: Rate::new(t.vulnerable, total),
            fixed_pct_all_changes: Rate::new(t.fixed, total),
            fix_rate: Rate::new(t.fixed, removals + updates),
            net_impact: t.fixed as i64 - t.vulnerable as i64,
            unaudited_changes: t.unaudited,
        }
    }
}

/// Per-author metrics; both author kinds are always present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusAggregate {
    pub by_author: BTreeMap<AuthorKind, AuthorMetrics>,
}

impl CorpusAggregate {
    pub fn from_tallies(tallies: &BTreeMap<AuthorKind, Tally>) -> CorpusAggregate {
        let empty = Tally::default();
        CorpusAggregate {
            by_author: AuthorKind::ALL
                .iter()
                .map(|k| {
                    (
                        *k,
                        AuthorMetrics::from_tally(tallies.get(k).unwrap_or(&empty)),
                    )
                })
                .collect(),
        }
    }

    pub fn author(&self, kind: AuthorKind) -> &AuthorMetrics {
        &self.by_author[&kind]
    }
}

pub fn aggregate<'a>(
    records: impl IntoIterator<Item = (AuthorKind, &'a [LabeledChange])>,
) -> CorpusAggregate {
    let mut tallies: BTreeMap<AuthorKind, Tally> = BTreeMap::new();
    for (author, changes) in records {
        let t = tallies.entry(author).or_default();
        for lc in changes {
            t.add(lc);
        }
    }
    CorpusAggregate::from_tallies(&tallies)
}
