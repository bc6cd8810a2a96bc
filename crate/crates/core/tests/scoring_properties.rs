use depdec_core::advisories::{load_snapshot, Advisory, AdvisoryStore};
use depdec_core::changes::{ChangeKind, DependencyChange};
use depdec_core::ecosystem::Ecosystem;
use depdec_core::manifests::Scope;
use depdec_core::scoring::{
    aggregate, label_change, AuthorKind, ChangeSecurityLabel, LabeledChange,
};
use depdec_core::time::{parse_utc, Timestamp};
use depdec_core::version::{parse_version, remediation_bucket, RemediationBucket, Version};
use proptest::prelude::*;
use serde_json::json;

fn npm(s: &str) -> Version {
    parse_version(Ecosystem::Npm, s).unwrap()
}

/// Table-definition oracle over version strings: `a.b.c` with an optional
/// `-tag` suffix.
fn literal_bucket(vuln: &str, patched: Option<&str>) -> RemediationBucket {
    let Some(patched) = patched else {
        return RemediationBucket::Other;
    };
    if vuln.contains('-') || patched.contains('-') {
        return RemediationBucket::Other;
    }
    let split = |s: &str| -> Vec<u64> { s.split('.').map(|x| x.parse().unwrap()).collect() };
    let (x, y) = (split(vuln), split(patched));
    if y <= x {
        RemediationBucket::Other
    } else if x[0] != y[0] {
        RemediationBucket::Major
    } else if x[1] != y[1] {
        RemediationBucket::Minor
    } else {
        RemediationBucket::BugFix
    }
}

#[test]
fn remediation_grid_matches_table_definitions() {
    let mut versions = Vec::new();
    for major in 0..=3 {
        for minor in 0..=5 {
            for patch in 0..=5 {
                versions.push(format!("{major}.{minor}.{patch}"));
                versions.push(format!("{major}.{minor}.{patch}-rc.1"));
            }
        }
    }
    let parsed: Vec<Version> = versions.iter().map(|s| npm(s)).collect();
    let mut checked = 0;
    for (vs, v) in versions.iter().zip(&parsed) {
        assert_eq!(remediation_bucket(v, None), literal_bucket(vs, None));
        for (ps, p) in versions.iter().zip(&parsed) {
            assert_eq!(
                remediation_bucket(v, Some(p)),
                literal_bucket(vs, Some(ps)),
                "{vs} -> {ps}"
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 288 * 288);
}

fn advisory(id: &str, published: &str, sev: &str, lo: &str, hi: &str) -> serde_json::Value {
    json!({"id": id, "ecosystem": "npm", "package": "pkg", "published": published,
           "severity": sev, "ranges": [{"introduced": lo, "fixed": hi}], "first_patched": hi})
}

fn store() -> AdvisoryStore {
    load_snapshot(vec![
        advisory("A1", "2023-01-01T00:00:00Z", "high", "1.0.0", "1.4.0"),
        advisory("A2", "2023-06-01T00:00:00Z", "critical", "1.2.0", "2.0.0"),
        advisory("A3", "2024-01-01T00:00:00Z", "low", "0.1.0", "1.1.0"),
        advisory("A4", "2024-06-01T00:00:00Z", "moderate", "2.0.0", "2.0.5"),
    ])
    .unwrap()
    .0
}

fn change(kind: ChangeKind, base: Option<&str>, head: Option<&str>) -> DependencyChange {
    DependencyChange {
        kind,
        ecosystem: Ecosystem::Npm,
        name: "pkg".into(),
        base_version: base.map(npm),
        base_spec: base.map(str::to_string),
        head_version: head.map(npm),
        head_spec: head.map(str::to_string),
        scope: Scope::Runtime,
        source_path: "package.json".into(),
    }
}

fn ids(list: &[Advisory]) -> Vec<&str> {
    list.iter().map(|a| a.id.as_str()).collect()
}

#[test]
fn hand_applied_labels() {
    let at = parse_utc("2024-03-01").unwrap();
    let cands: Vec<Version> = ["1.0.0", "1.3.0", "1.4.0", "2.0.0", "2.0.5"]
        .iter()
        .map(|s| npm(s))
        .collect();
    // 1.3.0 is hit by A1 and A2; the first release clear of both is 2.0.0
    let l = label_change(
        &change(ChangeKind::Addition, None, Some("1.3.0")),
        &store(),
        at,
        Some(&cands),
    );
    assert_eq!(ids(&l.introduced), ["A1", "A2"]);
    assert_eq!(
        (l.mitigatable, l.remediation),
        (Some(true), Some(RemediationBucket::Major))
    );
    assert_eq!(l.minimal_safe, Some(npm("2.0.0")));

    // 1.0.5 -> 1.3.0: A1 and A3 on the base; A1 persists, A3 is fixed, A2 is new
    let l = label_change(
        &change(ChangeKind::Update, Some("1.0.5"), Some("1.3.0")),
        &store(),
        at,
        Some(&cands),
    );
    assert_eq!(ids(&l.fixed), ["A3"]);
    assert_eq!(ids(&l.introduced), ["A1", "A2"]);

    // A4 is not yet published at the reference date
    let l = label_change(
        &change(ChangeKind::Addition, None, Some("2.0.1")),
        &store(),
        at,
        Some(&cands),
    );
    assert_eq!(l, ChangeSecurityLabel::default());
}

fn arb_change() -> impl Strategy<Value = DependencyChange> {
    let versions = proptest::sample::select(vec![
        "0.5.0", "1.0.0", "1.2.5", "1.3.0", "1.5.0", "2.0.1", "2.1.0",
    ]);
    (0..3usize, versions.clone(), versions).prop_map(|(k, a, b)| match k {
        0 => change(ChangeKind::Addition, None, Some(b)),
        1 => change(ChangeKind::Removal, Some(a), None),
        _ => change(
            ChangeKind::Update,
            Some(a),
            Some(if a == b { "2.1.0" } else { b }),
        ),
    })
}

fn arb_date() -> impl Strategy<Value = Timestamp> {
    (0i64..2_000).prop_map(|d| parse_utc("2022-06-01").unwrap() + chrono::Duration::days(d))
}

fn labeled(
    stream: &[(bool, DependencyChange)],
    at: Timestamp,
) -> Vec<(AuthorKind, Vec<LabeledChange>)> {
    let s = store();
    stream
        .iter()
        .map(|(agent, c)| {
            let kind = if *agent {
                AuthorKind::Agent
            } else {
                AuthorKind::Human
            };
            (
                kind,
                vec![LabeledChange {
                    change: c.clone(),
                    label: label_change(c, &s, at, None),
                }],
            )
        })
        .collect()
}

proptest! {
    #[test]
    fn shrinking_ref_date_never_grows_introduced(c in arb_change(), d1 in arb_date(), d2 in arb_date()) {
        let (early, late) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let s = store();
        let small = label_change(&c, &s, early, None);
        let big = label_change(&c, &s, late, None);
        let big_ids = ids(&big.introduced);
        prop_assert!(ids(&small.introduced).iter().all(|id| big_ids.contains(id)));
        prop_assert_eq!(small.remediation.is_some(), small.is_vulnerable());
        if small.is_vulnerable() {
            prop_assert!(c.kind != ChangeKind::Removal);
            prop_assert_eq!(small.mitigatable, Some(small.minimal_safe.is_some()));
        }
    }

    #[test]
    fn aggregate_is_order_independent(
        stream in proptest::collection::vec((any::<bool>(), arb_change()), 0..60),
        at in arb_date(),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let records = labeled(&stream, at);
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let a = aggregate(records.iter().map(|(k, v)| (*k, v.as_slice())));
        let b = aggregate(shuffled.iter().map(|(k, v)| (*k, v.as_slice())));
        prop_assert_eq!(&a, &b);

        for kind in AuthorKind::ALL {
            let m = a.author(kind);
            let mine: Vec<&LabeledChange> = records.iter().filter(|(k, _)| *k == kind).flat_map(|(_, v)| v).collect();
            // every change lands in exactly one kind bucket
            prop_assert_eq!(m.total_changes as usize, mine.len());
            prop_assert_eq!(m.change_counts.values().sum::<u64>(), m.total_changes);
            prop_assert_eq!(m.introduced_pct_all_changes.numerator, m.vulnerable_dep_count);
            prop_assert_eq!(m.introduced_pct_all_changes.denominator, m.total_changes);
            prop_assert_eq!(m.remediation_histogram.values().sum::<u64>(), m.vulnerable_dep_count);
            prop_assert!(m.introduced_severity.values().sum::<u64>() >= m.vulnerable_dep_count);
            prop_assert_eq!(m.net_impact, m.fixed_dep_count as i64 - m.vulnerable_dep_count as i64);
            let literal_vuln = mine.iter().filter(|l| !l.label.introduced.is_empty()).count();
            prop_assert_eq!(m.vulnerable_dep_count as usize, literal_vuln);
        }
    }
}

#[test]
fn every_vulnerable_change_mitigatable_gives_full_fraction() {
    let at = parse_utc("2024-03-01").unwrap();
    let s = store();
    let cands: Vec<Version> = ["1.3.0", "2.0.0", "2.1.0"].iter().map(|v| npm(v)).collect();
    let records: Vec<LabeledChange> = ["1.0.0", "1.2.5", "1.3.0", "1.5.0"]
        .iter()
        .map(|v| {
            let c = change(ChangeKind::Addition, None, Some(v));
            let label = label_change(&c, &s, at, Some(&cands));
            LabeledChange { change: c, label }
        })
        .collect();
    let agg = aggregate([(AuthorKind::Agent, records.as_slice())]);
    let m = agg.author(AuthorKind::Agent);
    assert_eq!(m.vulnerable_dep_count, 4);
    assert_eq!(m.mitigatable_fraction.percent(2), "100.00");
}
