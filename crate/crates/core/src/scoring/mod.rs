//! Security labels for individual changes, per-instance score reports, and
//! corpus aggregates.

mod aggregate;

use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate, AuthorKind, AuthorMetrics, CorpusAggregate, Rate, Tally};

use crate::advisories::{
    advisories_at, minimal_safe_version, Advisory, AdvisoryStore, ReleaseCatalog,
};
use crate::changes::{ChangeKind, DependencyChange};
use crate::policy::{
    capabilities_met, check_compliance, reuse_score, same_pin, unnecessary_add_penalty,
    AvailabilitySet, CapabilityMetadata, ComplianceVerdict, ExecutionEvidence, PolicyEnvelope,
    Track,
};
use crate::time::Timestamp;
use crate::version::{remediation_bucket, RemediationBucket, Version};

/// `remediation` is present exactly when `introduced` is non-empty;
/// `mitigatable` mirrors whether `minimal_safe` was found.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChangeSecurityLabel {
    pub introduced: Vec<Advisory>,
    pub fixed: Vec<Advisory>,
    pub mitigatable: Option<bool>,
    pub remediation: Option<RemediationBucket>,
    pub minimal_safe: Option<Version>,
    /// A side that needed auditing had no single pinned version.
    pub unaudited: bool,
}

impl ChangeSecurityLabel {
    pub fn is_vulnerable(&self) -> bool {
        !self.introduced.is_empty()
    }

    pub fn is_fix(&self) -> bool {
        !self.fixed.is_empty()
    }
}

fn owned(list: Vec<&Advisory>) -> Vec<Advisory> {
    list.into_iter().cloned().collect()
}

/// Labels one change at `ref_date`. Without a release list, the first
/// patched versions of the package's visible advisories serve as candidates.
pub fn label_change(
    change: &DependencyChange,
    store: &AdvisoryStore,
    ref_date: Timestamp,
    candidates: Option<&[Version]>,
) -> ChangeSecurityLabel {
    let mut label = ChangeSecurityLabel::default();
    if same_pin(change) {
        return label;
    }
    let at = |v: &Version| advisories_at(store, change.ecosystem, &change.name, v, ref_date);
    let head = change.head_version.as_ref();
    let base = change.base_version.as_ref();
    match change.kind {
        ChangeKind::Addition => match head {
            Some(h) => label.introduced = owned(at(h)),
            None => label.unaudited = true,
        },
        ChangeKind::Update => match (base, head) {
            (_, None) => label.unaudited = true,
            (b, Some(h)) => {
                let now = at(h);
                if let Some(b) = b {
                    label.fixed = owned(
                        at(b)
                            .into_iter()
                            .filter(|a| !now.iter().any(|n| n.id == a.id))
                            .collect(),
                    );
                } else {
                    label.unaudited = true;
                }
                label.introduced = owned(now);
            }
        },
        ChangeKind::Removal => match base {
            Some(b) => label.fixed = owned(at(b)),
            None => label.unaudited = true,
        },
    }

    if let (true, Some(h)) = (label.is_vulnerable(), head) {
        let fallback: Vec<Version>;
        let pool = match candidates {
            Some(c) => c,
            None => {
                fallback = store
                    .for_package(change.ecosystem, &change.name)
                    .iter()
                    .filter(|a| a.published <= ref_date)
                    .filter_map(|a| a.first_patched.clone())
                    .collect();
                &fallback
            }
        };
        let safe = minimal_safe_version(store, change.ecosystem, &change.name, h, ref_date, pool);
        label.mitigatable = Some(safe.is_some());
        label.remediation = Some(remediation_bucket(h, safe.as_ref()));
        label.minimal_safe = safe;
    }
    label
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskFamily {
    #[serde(alias = "ReuseAvailable")]
    ReuseAvailable,
    #[serde(alias = "JustifiedAdd")]
    JustifiedAdd,
    #[serde(alias = "AvoidUnnecessary")]
    AvoidUnnecessary,
    #[serde(alias = "PolicySafeSelection")]
    PolicySafeSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledChange {
    pub change: DependencyChange,
    pub label: ChangeSecurityLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub instance_id: String,
    pub family: TaskFamily,
    pub track: Track,
    pub functional_pass: Option<bool>,
    pub reuse: f64,
    pub unnecessary_adds: usize,
    pub compliance: ComplianceVerdict,
    /// No change introduces a PR-time advisory.
    pub vuln_compliant: bool,
    /// The family's decision-discipline requirement holds: full reuse and no
    /// unnecessary additions (reuse-available), no unnecessary additions
    /// (avoid-unnecessary), every capability met by an allowed addition or
    /// observed reuse (justified-add).
    pub family_ok: bool,
    pub worst_remediation: Option<RemediationBucket>,
    pub unaudited: bool,
    pub labels: Vec<LabeledChange>,
}

impl ScoreReport {
    pub fn passed(&self) -> bool {
        self.vuln_compliant
            && self.compliance.compliant()
            && self.family_ok
            && self.functional_pass != Some(false)
    }
}

/// Everything `score_instance` needs about one evaluated patch.
pub struct InstanceContext<'a> {
    pub instance_id: &'a str,
    pub family: TaskFamily,
    pub changes: &'a [DependencyChange],
    pub envelope: &'a PolicyEnvelope,
    pub availability: &'a AvailabilitySet,
    pub evidence: &'a ExecutionEvidence,
    pub capabilities: &'a CapabilityMetadata,
    pub functional_pass: Option<bool>,
    pub store: &'a AdvisoryStore,
    pub ref_date: Timestamp,
    pub catalog: Option<&'a ReleaseCatalog>,
}

pub fn score_instance(ctx: &InstanceContext<'_>) -> ScoreReport {
    let labels: Vec<LabeledChange> = ctx
        .changes
        .iter()
        .map(|c| {
            let candidates = ctx
                .catalog
                .and_then(|cat| cat.candidates(c.ecosystem, &c.name));
            LabeledChange {
                change: c.clone(),
                label: label_change(c, ctx.store, ctx.ref_date, candidates.as_deref()),
            }
        })
        .collect();
    let required = &ctx.capabilities.required_capabilities;
    let reuse = reuse_score(required, ctx.availability, ctx.evidence, ctx.changes);
    let unnecessary_adds = unnecessary_add_penalty(
        ctx.changes,
        ctx.availability,
        &ctx.capabilities.justified_names,
    );
    let family_ok = match ctx.family {
        TaskFamily::ReuseAvailable => reuse == 1.0 && unnecessary_adds == 0,
        TaskFamily::AvoidUnnecessary => unnecessary_adds == 0,
        TaskFamily::JustifiedAdd => capabilities_met(
            required,
            ctx.availability,
            ctx.evidence,
            ctx.changes,
            ctx.envelope,
        ),
        TaskFamily::PolicySafeSelection => true,
    };
    ScoreReport {
        instance_id: ctx.instance_id.to_string(),
        family: ctx.family,
        track: ctx.envelope.track,
        functional_pass: ctx.functional_pass,
        reuse,
        unnecessary_adds,
        compliance: check_compliance(ctx.changes, ctx.envelope, ctx.store, ctx.ref_date),
        vuln_compliant: labels.iter().all(|l| !l.label.is_vulnerable()),
        family_ok,
        worst_remediation: labels.iter().filter_map(|l| l.label.remediation).max(),
        unaudited: labels.iter().any(|l| l.label.unaudited),
        labels,
    }
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;
    use crate::advisories::load_snapshot;
    use crate::ecosystem::Ecosystem;
    use crate::manifests::Scope;
    use crate::policy::{default_policy, AvailabilityDefinition};
    use crate::time::parse_utc;
    use crate::version::parse_version;

    fn v(s: &str) -> Version {
        parse_version(Ecosystem::Npm, s).unwrap()
    }

    fn change(kind: ChangeKind, base: Option<&str>, head: Option<&str>) -> DependencyChange {
        DependencyChange {
            kind,
            ecosystem: Ecosystem::Npm,
            name: "pkg".into(),
            base_version: base.map(v),
            base_spec: base.map(str::to_string),
            head_version: head.map(v),
            head_spec: head.map(str::to_string),
            scope: Scope::Runtime,
            source_path: "package.json".into(),
        }
    }

    // one advisory on [1.0.0, 1.2.4), published 2024-03-01
    fn store() -> AdvisoryStore {
        let rec = json!({
            "id": "GHSA-x", "ecosystem": "npm", "package": "pkg", "published": "2024-03-01T00:00:00Z",
            "cvss_score": 7.5, "ranges": [{"introduced": "1.0.0", "fixed": "1.2.4"}], "first_patched": "1.2.4"
        });
        load_snapshot(vec![rec]).unwrap().0
    }

    fn at() -> Timestamp {
        parse_utc("2024-06-01").unwrap()
    }

    #[test]
    fn clean_addition() {
        let l = label_change(
            &change(ChangeKind::Addition, None, Some("2.0.0")),
            &store(),
            at(),
            None,
        );
        assert_eq!(l, ChangeSecurityLabel::default());
    }

    #[test]
    fn textbook_fix() {
        let l = label_change(
            &change(ChangeKind::Update, Some("1.2.3"), Some("1.2.4")),
            &store(),
            at(),
            None,
        );
        assert!(l.introduced.is_empty());
        assert_eq!(l.fixed.len(), 1);
        assert_eq!(l.remediation, None);
        let removal = label_change(
            &change(ChangeKind::Removal, Some("1.2.3"), None),
            &store(),
            at(),
            None,
        );
        assert_eq!(removal.fixed.len(), 1);
    }

    #[test]
    fn vulnerable_addition_with_major_remediation() {
        let cands = [v("1.0.0"), v("1.2.0"), v("2.0.0")];
        let l = label_change(
            &change(ChangeKind::Addition, None, Some("1.2.0")),
            &store(),
            at(),
            Some(&cands),
        );
        assert_eq!(l.introduced.len(), 1);
        assert_eq!(l.mitigatable, Some(true));
        assert_eq!(l.minimal_safe, Some(v("2.0.0")));
        assert_eq!(l.remediation, Some(RemediationBucket::Major));
    }

    #[test]
    fn non_mitigatable_is_other() {
        let cands = [v("1.0.0"), v("1.2.0")];
        let l = label_change(
            &change(ChangeKind::Addition, None, Some("1.2.0")),
            &store(),
            at(),
            Some(&cands),
        );
        assert_eq!(l.mitigatable, Some(false));
        assert_eq!(l.remediation, Some(RemediationBucket::Other));
    }

    #[test]
    fn fallback_candidates_use_first_patched() {
        let l = label_change(
            &change(ChangeKind::Addition, None, Some("1.2.3")),
            &store(),
            at(),
            None,
        );
        assert_eq!(l.minimal_safe, Some(v("1.2.4")));
        assert_eq!(l.remediation, Some(RemediationBucket::BugFix));
    }

    #[test]
    fn cutoff_hides_later_advisories() {
        let early = parse_utc("2024-01-01").unwrap();
        let l = label_change(
            &change(ChangeKind::Addition, None, Some("1.2.0")),
            &store(),
            early,
            None,
        );
        assert!(l.introduced.is_empty());
    }

    #[test]
    fn unaudited_and_same_pin() {
        let mut ranged = change(ChangeKind::Addition, None, None);
        ranged.head_spec = Some("^1.0.0".into());
        assert!(label_change(&ranged, &store(), at(), None).unaudited);
        let mut same = change(ChangeKind::Update, Some("1.2.0"), Some("1.2.0"));
        same.head_spec = Some("=1.2.0".into());
        assert_eq!(
            label_change(&same, &store(), at(), None),
            ChangeSecurityLabel::default()
        );
    }

    fn ctx_report(changes: &[DependencyChange], family: TaskFamily) -> ScoreReport {
        let store = store();
        let avail = AvailabilitySet::empty(AvailabilityDefinition::InManifest);
        let evidence = ExecutionEvidence::none();
        let caps = CapabilityMetadata::default();
        let envelope = default_policy();
        score_instance(&InstanceContext {
            instance_id: "t",
            family,
            changes,
            envelope: &envelope,
            availability: &avail,
            evidence: &evidence,
            capabilities: &caps,
            functional_pass: Some(true),
            store: &store,
            ref_date: at(),
            catalog: None,
        })
    }

    #[test]
    fn no_decision_patch() {
        let r = ctx_report(&[], TaskFamily::ReuseAvailable);
        assert!(r.vuln_compliant && r.passed());
        assert_eq!(
            (r.reuse, r.unnecessary_adds, r.worst_remediation),
            (1.0, 0, None)
        );
    }

    #[test]
    fn worst_remediation_is_the_maximum() {
        let mut other = change(ChangeKind::Addition, None, Some("1.0.0"));
        other.name = "other".into();
        let r = ctx_report(
            &[change(ChangeKind::Addition, None, Some("1.2.3")), other],
            TaskFamily::PolicySafeSelection,
        );
        assert!(!r.vuln_compliant && !r.passed());
        assert_eq!(r.worst_remediation, Some(RemediationBucket::BugFix));
        assert_eq!(r.unnecessary_adds, 2);
        let r = ctx_report(
            &[change(ChangeKind::Addition, None, Some("2.0.0"))],
            TaskFamily::AvoidUnnecessary,
        );
        assert!(r.vuln_compliant && !r.family_ok && !r.passed());
    }
}
