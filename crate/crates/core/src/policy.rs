//! Policy envelopes, availability sets, execution evidence, and the
//! compliance, reuse and unnecessary-addition verdicts built on them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::advisories::{advisories_at, AdvisoryStore};
use crate::changes::{ChangeKind, DependencyChange};
use crate::ecosystem::{normalize_name, Ecosystem};
use crate::manifests::{DependencyDecl, Scope};
use crate::time::Timestamp;
use crate::version::{parse_version, Version, VersionRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Track {
    #[serde(
        rename = "policy-specified",
        alias = "specified",
        alias = "PolicySpecified"
    )]
    PolicySpecified,
    #[serde(
        rename = "policy-unspecified",
        alias = "unspecified",
        alias = "PolicyUnspecified"
    )]
    PolicyUnspecified,
}

/// `introduced`/`fixed` are version strings read under the ecosystem of the
/// change being checked. Both absent denies every version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenyEntry {
    pub package: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub introduced: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<String>,
}

impl DenyEntry {
    pub fn package(pattern: &str) -> DenyEntry {
        DenyEntry {
            package: pattern.to_string(),
            introduced: None,
            fixed: None,
        }
    }

    /// `None` for a package-wide entry, or when the bounds do not parse as
    /// versions of `eco` (the entry then denies the whole package).
    fn range(&self, eco: Ecosystem) -> Option<VersionRange> {
        if self.introduced.is_none() && self.fixed.is_none() {
            return None;
        }
        let lowest = match eco {
            Ecosystem::Go => "v0.0.0",
            _ => "0",
        };
        let introduced = self.introduced.as_deref().unwrap_or(lowest);
        VersionRange::from_strs(eco, &[(introduced, self.fixed.as_deref())]).ok()
    }

    fn hits(&self, eco: Ecosystem, name: &str, version: Option<&Version>) -> bool {
        if !glob_match(&self.package.to_lowercase(), name) {
            return false;
        }
        match self.range(eco) {
            None => true,
            Some(range) => version.is_some_and(|v| range.contains(v).unwrap_or(false)),
        }
    }
}

/// An absent allowlist allows every package.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyEnvelope {
    pub track: Track,
    #[serde(default)]
    pub allowlist: Option<Vec<String>>,
    #[serde(default)]
    pub denylist: Vec<DenyEntry>,
    #[serde(default)]
    pub max_new_dependencies: Option<u32>,
    #[serde(default = "yes")]
    pub forbid_vulnerable: bool,
}

fn yes() -> bool {
    true
}

impl PolicyEnvelope {
    pub fn from_json(text: &str) -> Result<PolicyEnvelope, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn allows(&self, name: &str) -> bool {
        self.allowlist
            .as_ref()
            .is_none_or(|pats| pats.iter().any(|p| glob_match(&p.to_lowercase(), name)))
    }

    pub fn denies(&self, eco: Ecosystem, name: &str, version: Option<&Version>) -> bool {
        self.denylist.iter().any(|d| d.hits(eco, name, version))
    }
}

/// The envelope applied when an instance's policy is withheld.
pub fn default_policy() -> PolicyEnvelope {
    PolicyEnvelope {
        track: Track::PolicyUnspecified,
        allowlist: None,
        denylist: Vec::new(),
        max_new_dependencies: None,
        forbid_vulnerable: true,
    }
}

/// `*` matches any run of characters, `?` exactly one.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let n: Vec<char> = name.chars().collect();
    let (mut pi, mut ni) = (0, 0);
    let mut backtrack: Option<(usize, usize)> = None;
    while ni < n.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == n[ni]) {
            pi += 1;
            ni += 1;
        } else if pi < p.len() && p[pi] == '*' {
            backtrack = Some((pi, ni));
            pi += 1;
        } else if let Some((star, matched)) = backtrack {
            pi = star + 1;
            ni = matched + 1;
            backtrack = Some((star, matched + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AvailabilityDefinition {
    #[serde(alias = "InManifest")]
    InManifest,
    #[serde(alias = "InLockfile")]
    InLockfile,
    #[serde(alias = "InTree")]
    InTree,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AvailableMember {
    pub ecosystem: Ecosystem,
    pub name: String,
    pub version: Option<Version>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailabilitySet {
    pub definition: AvailabilityDefinition,
    pub members: BTreeSet<AvailableMember>,
}

impl AvailabilitySet {
    pub fn empty(definition: AvailabilityDefinition) -> AvailabilitySet {
        AvailabilitySet {
            definition,
            members: BTreeSet::new(),
        }
    }

    pub fn from_decls<'a>(decls: impl IntoIterator<Item = &'a DependencyDecl>) -> AvailabilitySet {
        let members = decls
            .into_iter()
            .map(|d| AvailableMember {
                ecosystem: d.ecosystem,
                name: d.name.clone(),
                version: d.pinned.clone(),
            })
            .collect();
        AvailabilitySet {
            definition: AvailabilityDefinition::InManifest,
            members,
        }
    }

    pub fn from_locked(
        eco: Ecosystem,
        pairs: impl IntoIterator<Item = (String, Version)>,
    ) -> AvailabilitySet {
        let members = pairs
            .into_iter()
            .map(|(name, v)| AvailableMember {
                ecosystem: eco,
                name: normalize_name(eco, &name),
                version: Some(v),
            })
            .collect();
        AvailabilitySet {
            definition: AvailabilityDefinition::InLockfile,
            members,
        }
    }

    /// Members from a vendored-package listing: one `ecosystem name [version]`
    /// per line, `#` comments allowed. Lines that do not parse are returned
    /// as errors with their line number.
    pub fn from_tree_listing(text: &str) -> Result<AvailabilitySet, (usize, String)> {
        let mut members = BTreeSet::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || (idx + 1, line.to_string());
            let (eco, name, version) = match parts.as_slice() {
                [e, n] => (e, n, None),
                [e, n, v] => (e, n, Some(*v)),
                _ => return Err(bad()),
            };
            let eco: Ecosystem = eco.parse().map_err(|_| bad())?;
            let version = version
                .map(|v| parse_version(eco, v))
                .transpose()
                .map_err(|_| bad())?;
            members.insert(AvailableMember {
                ecosystem: eco,
                name: normalize_name(eco, name),
                version,
            });
        }
        Ok(AvailabilitySet {
            definition: AvailabilityDefinition::InTree,
            members,
        })
    }

    pub fn contains_name(&self, eco: Ecosystem, name: &str) -> bool {
        let name = normalize_name(eco, name);
        self.members
            .iter()
            .any(|m| m.ecosystem == eco && m.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceSource {
    ImportTrace,
    ModuleLoadLog,
    Declared,
}

/// Package names seen during the specified test run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionEvidence {
    pub observed: BTreeSet<String>,
    pub source: EvidenceSource,
}

impl ExecutionEvidence {
    pub fn none() -> ExecutionEvidence {
        ExecutionEvidence {
            observed: BTreeSet::new(),
            source: EvidenceSource::Declared,
        }
    }

    pub fn new(
        source: EvidenceSource,
        names: impl IntoIterator<Item = String>,
    ) -> ExecutionEvidence {
        ExecutionEvidence {
            observed: names.into_iter().map(|n| n.trim().to_lowercase()).collect(),
            source,
        }
    }

    /// Whether `name` was observed, folding names under `eco`'s rules.
    pub fn observes(&self, eco: Ecosystem, name: &str) -> bool {
        let want = normalize_name(eco, name);
        self.observed.iter().any(|o| normalize_name(eco, o) == want)
    }
}

/// Per-instance capability requirements: for each capability, the package
/// names that would satisfy it; plus names whose addition is justified.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityMetadata {
    #[serde(default)]
    pub required_capabilities: Vec<BTreeSet<String>>,
    #[serde(default)]
    pub justified_names: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Allowlist,
    Denylist,
    Vulnerable,
    Budget,
    UnauditableRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRef {
    pub source_path: String,
    pub name: String,
    pub scope: Scope,
}

impl ChangeRef {
    fn of(c: &DependencyChange) -> ChangeRef {
        ChangeRef {
            source_path: c.source_path.clone(),
            name: c.name.clone(),
            scope: c.scope,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Absent for whole-patch rules such as the budget.
    pub change: Option<ChangeRef>,
    pub rule: Rule,
    pub message: String,
}

/// Unauditable-range entries are warnings and never clear a boolean.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceVerdict {
    pub allowlist_ok: bool,
    pub denylist_ok: bool,
    pub vuln_ok: bool,
    pub budget_ok: bool,
    pub violations: Vec<Violation>,
}

impl ComplianceVerdict {
    pub fn compliant(&self) -> bool {
        self.allowlist_ok && self.denylist_ok && self.vuln_ok && self.budget_ok
    }
}

/// An Update that keeps the same pinned version only rewrites the specifier.
pub(crate) fn same_pin(c: &DependencyChange) -> bool {
    c.kind == ChangeKind::Update && c.base_version.is_some() && c.base_version == c.head_version
}

pub fn check_compliance(
    changes: &[DependencyChange],
    envelope: &PolicyEnvelope,
    store: &AdvisoryStore,
    ref_date: Timestamp,
) -> ComplianceVerdict {
    let mut verdict = ComplianceVerdict {
        allowlist_ok: true,
        denylist_ok: true,
        vuln_ok: true,
        budget_ok: true,
        violations: Vec::new(),
    };
    let mut additions = 0u64;
    for c in changes.iter().filter(|c| c.kind != ChangeKind::Removal) {
        if c.kind == ChangeKind::Addition {
            additions += 1;
        }
        let head = c.head_version.as_ref();
        let mut flag = |rule: Rule, message: String| {
            verdict.violations.push(Violation {
                change: Some(ChangeRef::of(c)),
                rule,
                message,
            })
        };
        if !envelope.allows(&c.name) {
            flag(
                Rule::Allowlist,
                format!("{} is not on the allowlist", c.name),
            );
            verdict.allowlist_ok = false;
        }
        if envelope.denies(c.ecosystem, &c.name, head) {
            let at = head.map(|v| format!("@{v}")).unwrap_or_default();
            flag(Rule::Denylist, format!("{}{at} is denylisted", c.name));
            verdict.denylist_ok = false;
        }
        if envelope.forbid_vulnerable && !same_pin(c) {
            match head {
                Some(v) => {
                    let hits = advisories_at(store, c.ecosystem, &c.name, v, ref_date);
                    if !hits.is_empty() {
                        let ids: Vec<&str> = hits.iter().map(|a| a.id.as_str()).collect();
                        flag(
                            Rule::Vulnerable,
                            format!("{}@{v} is affected by {}", c.name, ids.join(", ")),
                        );
                        verdict.vuln_ok = false;
                    }
                }
                None => flag(
                    Rule::UnauditableRange,
                    format!(
                        "{} {:?} pins no single version",
                        c.name,
                        c.head_spec.as_deref().unwrap_or_default()
                    ),
                ),
            }
        }
    }
    if let Some(max) = envelope.max_new_dependencies {
        if additions > u64::from(max) {
            verdict.budget_ok = false;
            verdict.violations.push(Violation {
                change: None,
                rule: Rule::Budget,
                message: format!("{additions} new dependencies exceed the budget of {max}"),
            });
        }
    }
    verdict
}

fn acceptable(names: &BTreeSet<String>, eco: Ecosystem, name: &str) -> bool {
    names.iter().any(|n| normalize_name(eco, n) == name)
}

fn available_and_observed(
    names: &BTreeSet<String>,
    availability: &AvailabilitySet,
    evidence: &ExecutionEvidence,
) -> bool {
    availability
        .members
        .iter()
        .any(|m| acceptable(names, m.ecosystem, &m.name) && evidence.observes(m.ecosystem, &m.name))
}

/// Fraction of capabilities reused: an acceptable package is available,
/// observed in the evidence, and no Addition brings in an acceptable package
/// for the same capability. 1 when nothing is required.
pub fn reuse_score(
    required: &[BTreeSet<String>],
    availability: &AvailabilitySet,
    evidence: &ExecutionEvidence,
    changes: &[DependencyChange],
) -> f64 {
    if required.is_empty() {
        return 1.0;
    }
    let reused = required
        .iter()
        .filter(|names| {
            let present = available_and_observed(names, availability, evidence);
            let competing = changes
                .iter()
                .any(|c| c.kind == ChangeKind::Addition && acceptable(names, c.ecosystem, &c.name));
            present && !competing
        })
        .count();
    reused as f64 / required.len() as f64
}

/// Additions that are neither justified nor already available.
pub fn unnecessary_add_penalty(
    changes: &[DependencyChange],
    availability: &AvailabilitySet,
    justified: &BTreeSet<String>,
) -> usize {
    changes
        .iter()
        .filter(|c| c.kind == ChangeKind::Addition)
        .filter(|c| !acceptable(justified, c.ecosystem, &c.name))
        .filter(|c| !availability.contains_name(c.ecosystem, &c.name))
        .count()
}

/// Every capability is met either by an acceptable Addition that the
/// envelope allows and does not deny, or by an available acceptable package
/// observed in the evidence. Neither means the need was handled ad hoc.
pub fn capabilities_met(
    required: &[BTreeSet<String>],
    availability: &AvailabilitySet,
    evidence: &ExecutionEvidence,
    changes: &[DependencyChange],
    envelope: &PolicyEnvelope,
) -> bool {
    required.iter().all(|names| {
        let added = changes.iter().any(|c| {
            c.kind == ChangeKind::Addition
                && acceptable(names, c.ecosystem, &c.name)
                && envelope.allows(&c.name)
                && !envelope.denies(c.ecosystem, &c.name, c.head_version.as_ref())
        });
        added || available_and_observed(names, availability, evidence)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisories::load_snapshot;
    use crate::time::parse_utc;

    fn change(
        kind: ChangeKind,
        name: &str,
        base: Option<&str>,
        head: Option<&str>,
    ) -> DependencyChange {
        let v = |s: Option<&str>| s.map(|s| parse_version(Ecosystem::PyPi, s).unwrap());
        DependencyChange {
            kind,
            ecosystem: Ecosystem::PyPi,
            name: name.to_string(),
            base_version: v(base),
            base_spec: base.map(|s| format!("=={s}")),
            head_version: v(head),
            head_spec: head.map(|s| format!("=={s}")),
            scope: Scope::Runtime,
            source_path: "requirements.txt".into(),
        }
    }

    fn add(name: &str, v: &str) -> DependencyChange {
        change(ChangeKind::Addition, name, None, Some(v))
    }

    fn names(list: &[&str]) -> BTreeSet<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn avail(list: &[&str]) -> AvailabilitySet {
        AvailabilitySet {
            definition: AvailabilityDefinition::InManifest,
            members: list
                .iter()
                .map(|n| AvailableMember {
                    ecosystem: Ecosystem::PyPi,
                    name: n.to_string(),
                    version: None,
                })
                .collect(),
        }
    }

    fn store() -> AdvisoryStore {
        let rec = serde_json::json!({
            "id": "PYSEC-1", "ecosystem": "pypi", "package": "yaml-lib", "published": "2024-01-10T00:00:00Z",
            "cvss_score": 9.1, "ranges": [{"introduced": "0", "fixed": "5.4.0"}], "first_patched": "5.4.0"
        });
        load_snapshot(vec![rec]).unwrap().0
    }

    #[test]
    fn globs() {
        assert!(glob_match("*", "anything"));
        assert!(glob_match("left-*", "left-pad"));
        assert!(glob_match("l?ft-pad", "left-pad"));
        assert!(glob_match("*-pad", "left-pad"));
        assert!(glob_match("a*b*c", "axxbyyc"));
        assert!(!glob_match("a*b*c", "axxbyy"));
        assert!(!glob_match("left-?", "left-pad"));
        assert!(glob_match("", ""));
        assert!(!glob_match("", "x"));
    }

    #[test]
    fn default_envelope() {
        let p = default_policy();
        assert!(p.forbid_vulnerable);
        assert_eq!(p.allowlist, None);
        assert_eq!(p.track, Track::PolicyUnspecified);
        assert!(p.denylist.is_empty() && p.max_new_dependencies.is_none());
    }

    #[test]
    fn vacuous_compliance() {
        let v = check_compliance(
            &[],
            &default_policy(),
            &store(),
            parse_utc("2024-06-01").unwrap(),
        );
        assert!(v.compliant() && v.violations.is_empty());
    }

    #[test]
    fn package_wide_deny() {
        let mut p = default_policy();
        p.denylist.push(DenyEntry::package("left-pad"));
        let c = DependencyChange {
            ecosystem: Ecosystem::Npm,
            head_version: Some(parse_version(Ecosystem::Npm, "1.3.0").unwrap()),
            ..add("left-pad", "1.3.0")
        };
        let v = check_compliance(
            &[c],
            &p,
            &AdvisoryStore::default(),
            parse_utc("2024-06-01").unwrap(),
        );
        assert!(!v.denylist_ok);
        assert!(v.allowlist_ok && v.vuln_ok && v.budget_ok);
    }

    #[test]
    fn ranged_deny_and_removals() {
        let mut p = default_policy();
        p.denylist.push(DenyEntry {
            package: "req*".into(),
            introduced: Some("2.0".into()),
            fixed: Some("2.31".into()),
        });
        let at = parse_utc("2024-06-01").unwrap();
        let bad = check_compliance(&[add("requests", "2.30.0")], &p, &store(), at);
        assert!(!bad.denylist_ok);
        let ok = check_compliance(&[add("requests", "2.31.0")], &p, &store(), at);
        assert!(ok.denylist_ok);
        let removal = change(ChangeKind::Removal, "requests", Some("2.30.0"), None);
        assert!(check_compliance(&[removal], &p, &store(), at).compliant());
    }

    #[test]
    fn vulnerable_and_unauditable() {
        let at = parse_utc("2024-06-01").unwrap();
        let v = check_compliance(&[add("yaml-lib", "5.3.1")], &default_policy(), &store(), at);
        assert!(!v.vuln_ok);
        assert_eq!(v.violations[0].rule, Rule::Vulnerable);
        let before = check_compliance(
            &[add("yaml-lib", "5.3.1")],
            &default_policy(),
            &store(),
            parse_utc("2024-01-01").unwrap(),
        );
        assert!(before.vuln_ok);

        let mut ranged = add("yaml-lib", "5.3.1");
        ranged.head_version = None;
        ranged.head_spec = Some(">=5".into());
        let v = check_compliance(&[ranged], &default_policy(), &store(), at);
        assert!(v.compliant());
        assert_eq!(v.violations[0].rule, Rule::UnauditableRange);

        let mut lax = default_policy();
        lax.forbid_vulnerable = false;
        assert!(check_compliance(&[add("yaml-lib", "5.3.1")], &lax, &store(), at).vuln_ok);
    }

    #[test]
    fn same_pin_update_is_neutral() {
        let mut c = change(ChangeKind::Update, "yaml-lib", Some("5.3.1"), Some("5.3.1"));
        c.head_spec = Some("===5.3.1".into());
        let v = check_compliance(
            &[c],
            &default_policy(),
            &store(),
            parse_utc("2024-06-01").unwrap(),
        );
        assert!(v.vuln_ok);
    }

    #[test]
    fn allowlist_and_budget() {
        let p = PolicyEnvelope {
            track: Track::PolicySpecified,
            allowlist: Some(vec!["crypto*".into()]),
            denylist: vec![],
            max_new_dependencies: Some(1),
            forbid_vulnerable: true,
        };
        let at = parse_utc("2024-06-01").unwrap();
        let v = check_compliance(&[add("cryptography", "42.0.0")], &p, &store(), at);
        assert!(v.compliant());
        let v = check_compliance(
            &[add("cryptography", "42.0.0"), add("ecdsa", "0.18.0")],
            &p,
            &store(),
            at,
        );
        assert!(!v.allowlist_ok && !v.budget_ok && v.denylist_ok);
        assert_eq!(
            v.violations
                .iter()
                .filter(|x| x.rule == Rule::Budget)
                .count(),
            1
        );
    }

    #[test]
    fn envelope_file_shape() {
        let p = PolicyEnvelope::from_json(
            r#"{"track": "policy-specified", "allowlist": null, "denylist": [{"package": "left-pad"}],
                "max_new_dependencies": 0}"#,
        )
        .unwrap();
        assert!(p.forbid_vulnerable);
        assert_eq!(p.max_new_dependencies, Some(0));
        assert_eq!(p.denylist, vec![DenyEntry::package("left-pad")]);
    }

    #[test]
    fn reuse_cases() {
        let cap = vec![names(&["python-dateutil", "dateutil"])];
        let seen =
            ExecutionEvidence::new(EvidenceSource::ImportTrace, ["python_dateutil".to_string()]);
        let a = avail(&["python-dateutil"]);
        assert_eq!(reuse_score(&cap, &a, &seen, &[]), 1.0);

        let competing = vec![names(&["python-dateutil", "iso8601"])];
        assert_eq!(
            reuse_score(&competing, &a, &seen, &[add("iso8601", "2.1.0")]),
            0.0
        );

        assert_eq!(reuse_score(&[], &a, &ExecutionEvidence::none(), &[]), 1.0);
        assert_eq!(reuse_score(&cap, &a, &ExecutionEvidence::none(), &[]), 0.0);
        assert_eq!(reuse_score(&cap, &avail(&[]), &seen, &[]), 0.0);

        let two = vec![names(&["python-dateutil"]), names(&["requests"])];
        assert_eq!(reuse_score(&two, &a, &seen, &[]), 0.5);
    }

    #[test]
    fn unnecessary_adds() {
        let a = avail(&["requests"]);
        assert_eq!(unnecessary_add_penalty(&[], &a, &names(&[])), 0);
        assert_eq!(
            unnecessary_add_penalty(
                &[add("cryptography", "42.0.0")],
                &a,
                &names(&["cryptography"])
            ),
            0
        );
        let two = [add("cryptography", "42.0.0"), add("ecdsa", "0.18.0")];
        assert_eq!(
            unnecessary_add_penalty(&two, &a, &names(&["cryptography"])),
            1
        );
        assert_eq!(
            unnecessary_add_penalty(&[add("Requests", "2.0")], &a, &names(&[])),
            0
        );
    }

    #[test]
    fn capability_satisfaction() {
        let cap = vec![names(&["cryptography"])];
        let none = ExecutionEvidence::none();
        let empty = avail(&[]);
        let env = default_policy();
        assert!(capabilities_met(
            &cap,
            &empty,
            &none,
            &[add("cryptography", "42.0.0")],
            &env
        ));
        // neither added nor reused: handled ad hoc
        assert!(!capabilities_met(&cap, &empty, &none, &[], &env));
        assert!(!capabilities_met(
            &cap,
            &empty,
            &none,
            &[add("ecdsa", "0.18.0")],
            &env
        ));
        let mut deny = default_policy();
        deny.denylist.push(DenyEntry::package("cryptography"));
        assert!(!capabilities_met(
            &cap,
            &empty,
            &none,
            &[add("cryptography", "42.0.0")],
            &deny
        ));
        let seen =
            ExecutionEvidence::new(EvidenceSource::ImportTrace, ["cryptography".to_string()]);
        assert!(capabilities_met(
            &cap,
            &avail(&["cryptography"]),
            &seen,
            &[],
            &env
        ));
        assert!(capabilities_met(&[], &empty, &none, &[], &env));
    }

    #[test]
    fn tree_listing() {
        let set = AvailabilitySet::from_tree_listing(
            "# vendored\npypi python_dateutil 2.8.2\nnpm left-pad\n",
        )
        .unwrap();
        assert!(set.contains_name(Ecosystem::PyPi, "python-dateutil"));
        assert!(set.contains_name(Ecosystem::Npm, "left-pad"));
        assert_eq!(
            AvailabilitySet::from_tree_listing("bogus\n"),
            Err((1, "bogus".into()))
        );
    }
}
