//! Markdown rendering. Percentages are rounded half-up here and nowhere
//! else; JSON output carries exact counts alongside two-decimal values.

use std::collections::BTreeMap;

use depdec_core::advisories::Severity;
use depdec_core::changes::{ChangeKind, DependencyChange};
use depdec_core::corpus::DiagnosticsSummary;
use depdec_core::scoring::{AuthorKind, AuthorMetrics, CorpusAggregate, Rate, ScoreReport};
use depdec_core::version::RemediationBucket;
use serde::Serialize;

/// `37574` as `37,574`.
pub fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Explicit sign for nonzero values: `+1,316`, `-98`, `0`.
pub fn signed(n: i64) -> String {
    let body = thousands(n.unsigned_abs());
    match n.signum() {
        1 => format!("+{body}"),
        -1 => format!("-{body}"),
        _ => body,
    }
}

pub fn pct(rate: Rate, decimals: u32) -> String {
    format!("{}%", rate.percent(decimals))
}

/// `924 (2.5%)`.
pub fn count_pct(rate: Rate, decimals: u32) -> String {
    format!("{} ({})", thousands(rate.numerator), pct(rate, decimals))
}

fn numeric(cell: &str) -> bool {
    cell.trim_start_matches(['+', '-']).starts_with(|c: char| c.is_ascii_digit())
}

/// Columns whose cells are all numeric are right-aligned; the rest, and
/// always the first, are left-aligned.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n", headers.join(" | "));
    let align: Vec<&str> = (0..headers.len())
        .map(|i| {
            let right = i > 0 && !rows.is_empty() && rows.iter().all(|r| r.get(i).is_some_and(|c| numeric(c)));
            if right {
                "---:"
            } else {
                ":---"
            }
        })
        .collect();
    out.push_str(&format!("|{}|\n", align.join("|")));
    for row in rows {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}

fn by_author(agg: &CorpusAggregate, label: &str, cell: impl Fn(&AuthorMetrics) -> String) -> Vec<String> {
    let mut row = vec![label.to_string()];
    row.extend(AuthorKind::ALL.iter().map(|k| cell(agg.author(*k))));
    row
}

fn headers(first: &'static str) -> Vec<&'static str> {
    let mut h = vec![first];
    h.extend(AuthorKind::ALL.iter().map(|k| k.label()));
    h
}

fn kind_label(k: ChangeKind) -> &'static str {
    match k {
        ChangeKind::Addition => "Addition",
        ChangeKind::Removal => "Removal",
        ChangeKind::Update => "Update",
    }
}

fn bucket_label(b: RemediationBucket) -> &'static str {
    match b {
        RemediationBucket::BugFix => "Bug-fix (1.2.X -> 1.2.Y)",
        RemediationBucket::Minor => "Minor (1.X -> 1.Y)",
        RemediationBucket::Major => "Major (1 -> 2)",
        RemediationBucket::Other => "Other",
    }
}

fn share(map: &BTreeMap<Severity, u64>, s: Severity) -> Rate {
    Rate::new(map[&s], map.values().sum())
}

pub fn kind_distribution_table(agg: &CorpusAggregate) -> String {
    let mut rows: Vec<Vec<String>> = ChangeKind::ALL
        .iter()
        .map(|k| by_author(agg, kind_label(*k), |m| count_pct(m.kind_distribution[k], 1)))
        .collect();
    rows.push(by_author(agg, "Total", |m| thousands(m.total_changes)));
    table(&headers("Kind"), &rows)
}

pub fn vulnerability_table(agg: &CorpusAggregate) -> String {
    let mut rows = vec![
        by_author(agg, "Dependencies introduced", |m| thousands(m.introduced_dep_count)),
        by_author(agg, "Vulnerable dependencies", |m| count_pct(m.vulnerable_rate, 1)),
        by_author(agg, "Mitigatable (safe version available)", |m| pct(m.mitigatable_fraction, 2)),
    ];
    rows.extend(RemediationBucket::ALL.iter().map(|b| {
        by_author(agg, bucket_label(*b), |m| {
            count_pct(Rate::new(m.remediation_histogram[b], m.vulnerable_dep_count), 1)
        })
    }));
    table(&headers("Metric"), &rows)
}

fn severity_table(agg: &CorpusAggregate, pick: impl Fn(&AuthorMetrics) -> &BTreeMap<Severity, u64>) -> String {
    let rows: Vec<Vec<String>> = Severity::DESCENDING
        .iter()
        .map(|s| by_author(agg, s.label(), |m| count_pct(share(pick(m), *s), 1)))
        .collect();
    table(&headers("Severity"), &rows)
}

pub fn introduced_severity_table(agg: &CorpusAggregate) -> String {
    severity_table(agg, |m| &m.introduced_severity)
}

pub fn fixed_severity_table(agg: &CorpusAggregate) -> String {
    severity_table(agg, |m| &m.fixed_severity)
}

pub fn net_impact_table(agg: &CorpusAggregate) -> String {
    let rows = vec![
        by_author(agg, "Introduced (% all changes)", |m| pct(m.introduced_pct_all_changes, 2)),
        by_author(agg, "Fixed (% all changes)", |m| pct(m.fixed_pct_all_changes, 2)),
        by_author(agg, "Fix rate (remove/update)", |m| pct(m.fix_rate, 2)),
        by_author(agg, "Net impact (fixed - introduced)", |m| signed(m.net_impact)),
    ];
    table(&headers("Category"), &rows)
}

pub fn corpus_report(agg: &CorpusAggregate, diagnostics: &DiagnosticsSummary) -> String {
    let mut out = String::new();
    let sections = [
        ("Dependency changes by kind", kind_distribution_table(agg)),
        ("PR-time vulnerability and remediation (additions and updates)", vulnerability_table(agg)),
        ("(a) Introduced severity", introduced_severity_table(agg)),
        ("(b) Introductions vs. fixes", net_impact_table(agg)),
        ("(c) Fixed severity", fixed_severity_table(agg)),
    ];
    for (title, body) in sections {
        out.push_str(&format!("## {title}\n\n{body}\n"));
    }
    let rows = vec![
        vec!["Records processed".to_string(), thousands(diagnostics.records)],
        vec!["Records skipped".to_string(), thousands(diagnostics.skipped_records)],
        vec!["Files skipped".to_string(), thousands(diagnostics.skipped_files)],
        vec!["Unauditable changes".to_string(), thousands(diagnostics.unaudited_changes)],
    ];
    out.push_str(&format!("## Diagnostics\n\n{}", table(&["Item", "Count"], &rows)));
    for d in &diagnostics.messages {
        let line = d.line.map(|l| format!("line {l}")).unwrap_or_default();
        let what = [d.pr_id.as_deref(), d.path.as_deref()].into_iter().flatten().collect::<Vec<_>>().join(" ");
        out.push_str(&format!("\n- {line} {what}: {}", d.message));
    }
    if !diagnostics.messages.is_empty() {
        out.push('\n');
    }
    out
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

pub fn changes_table(changes: &[DependencyChange]) -> String {
    let rows: Vec<Vec<String>> = changes
        .iter()
        .map(|c| {
            vec![
                c.kind.label().to_string(),
                c.ecosystem.to_string(),
                c.name.clone(),
                opt(c.base_spec.as_deref()),
                opt(c.head_spec.as_deref()),
                format!("{:?}", c.scope).to_lowercase(),
                c.source_path.clone(),
            ]
        })
        .collect();
    table(&["Kind", "Ecosystem", "Name", "Base", "Head", "Scope", "File"], &rows)
}

/// One vulnerable pinned dependency and one advisory affecting it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditRow {
    pub package: String,
    pub version: String,
    pub advisory: String,
    pub severity: String,
}

pub fn audit_table(rows: &[AuditRow]) -> String {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.package.clone(), r.version.clone(), r.advisory.clone(), r.severity.clone()])
        .collect();
    table(&["Package", "Version", "Advisory", "Severity"], &rows)
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

pub fn score_report(r: &ScoreReport) -> String {
    let c = &r.compliance;
    let summary = vec![
        vec!["Instance".into(), r.instance_id.clone()],
        vec!["Family".into(), serde_json::to_value(r.family).unwrap().as_str().unwrap().to_string()],
        vec!["Track".into(), serde_json::to_value(r.track).unwrap().as_str().unwrap().to_string()],
        vec!["Tests pass".into(), r.functional_pass.map(yes_no).unwrap_or_else(|| "not run".into())],
        vec!["Reuse".into(), format!("{:.2}", r.reuse)],
        vec!["Unnecessary additions".into(), r.unnecessary_adds.to_string()],
        vec!["No PR-time vulnerable selection".into(), yes_no(r.vuln_compliant)],
        vec![
            "Policy (allow/deny/vuln/budget)".into(),
            [c.allowlist_ok, c.denylist_ok, c.vuln_ok, c.budget_ok].map(yes_no).join("/"),
        ],
        vec!["Family requirement met".into(), yes_no(r.family_ok)],
        vec!["Worst remediation".into(), opt(r.worst_remediation.map(bucket_label))],
        vec!["Unauditable change".into(), yes_no(r.unaudited)],
        vec!["Verdict".into(), if r.passed() { "PASS" } else { "FAIL" }.into()],
    ];
    let mut out = table(&["Metric", "Value"], &summary);
    if !r.labels.is_empty() {
        let rows: Vec<Vec<String>> = r
            .labels
            .iter()
            .map(|l| {
                let ids = |list: &[depdec_core::advisories::Advisory]| {
                    if list.is_empty() {
                        "-".to_string()
                    } else {
                        list.iter().map(|a| a.id.as_str()).collect::<Vec<_>>().join(", ")
                    }
                };
                vec![
                    l.change.kind.label().to_string(),
                    l.change.name.clone(),
                    opt(l.change.base_spec.as_deref()),
                    opt(l.change.head_spec.as_deref()),
                    ids(&l.label.introduced),
                    ids(&l.label.fixed),
                    opt(l.label.minimal_safe.as_ref().map(|v| v.raw().to_string())),
                ]
            })
            .collect();
        out.push('\n');
        out.push_str(&table(&["Change", "Name", "Base", "Head", "Introduces", "Fixes", "Minimal safe"], &rows));
    }
    for v in &c.violations {
        out.push_str(&format!("\n- {}: {}", serde_json::to_value(v.rule).unwrap().as_str().unwrap(), v.message));
    }
    if !c.violations.is_empty() {
        out.push('\n');
    }
    out
}
