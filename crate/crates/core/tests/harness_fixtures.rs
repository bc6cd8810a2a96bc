use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use depdec_core::advisories::{load_path, AdvisoryStore};
use depdec_core::harness::{apply_patch, apply_patch_into, run_instance, HeadSource, PatchError, TaskInstance};
use depdec_core::policy::Track;
use depdec_core::version::RemediationBucket;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Every regular file under `root`, keyed by relative path.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    WalkDir::new(root)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(root).unwrap().to_path_buf(), fs::read(e.path()).unwrap()))
        .collect()
}

fn tree_hash(root: &Path) -> String {
    let mut h = Sha256::new();
    for (path, bytes) in tree(root) {
        h.update(path.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(&bytes);
        h.update([0]);
    }
    hex::encode(h.finalize())
}

#[test]
fn recorded_diffs_reproduce_their_head_trees() {
    let root = fixtures().join("patch_pairs");
    let mut pairs = 0;
    for entry in fs::read_dir(&root).unwrap() {
        let dir = entry.unwrap().path();
        if !dir.join("b").is_dir() {
            continue;
        }
        let diff = fs::read_to_string(dir.join("patch.diff")).unwrap();
        let before = tree_hash(&dir.join("a"));
        let result = apply_patch(&dir.join("a"), &diff).unwrap_or_else(|e| panic!("{}: {e}", dir.display()));
        assert_eq!(result.rejected_hunks, 0);
        assert_eq!(tree(&result.head_dir), tree(&dir.join("b")), "{}", dir.display());
        assert_eq!(tree_hash(&dir.join("a")), before, "snapshot mutated: {}", dir.display());
        pairs += 1;
    }
    assert_eq!(pairs, 10);
}

#[test]
fn context_mismatch_rejects_the_patch() {
    let dir = fixtures().join("patch_pairs/mismatch");
    let diff = fs::read_to_string(dir.join("patch.diff")).unwrap();
    match apply_patch(&dir.join("a"), &diff) {
        Err(PatchError::PatchRejected { file, hunk }) => {
            assert_eq!(file, "package.json");
            assert_eq!(hunk, 1);
        }
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[derive(Debug, Deserialize)]
struct Expected {
    instance: String,
    patch: String,
    track: Track,
    exit: i32,
    functional_pass: Option<bool>,
    reuse: f64,
    unnecessary_adds: usize,
    vuln_compliant: bool,
    compliant: bool,
    family_ok: bool,
    worst_remediation: Option<RemediationBucket>,
    changes: Vec<String>,
}

fn instance_root() -> PathBuf {
    fixtures().join("instances")
}

fn store() -> AdvisoryStore {
    load_path(&instance_root().join("advisories.jsonl")).unwrap().0
}

fn load(name: &str, track: Track) -> TaskInstance {
    let inst = TaskInstance::load(&instance_root().join(name).join("instance.json")).unwrap();
    match track {
        Track::PolicySpecified => inst,
        Track::PolicyUnspecified => inst.without_policy(),
    }
}

fn diff(name: &str, patch: &str) -> HeadSource {
    HeadSource::Diff(fs::read_to_string(instance_root().join(name).join(format!("{patch}.diff"))).unwrap())
}

#[test]
fn family_instances_match_hand_derived_vectors() {
    let expected: Vec<Expected> =
        serde_json::from_str(&fs::read_to_string(instance_root().join("expected.json")).unwrap()).unwrap();
    assert_eq!(expected.len(), 18);
    let store = store();
    for e in &expected {
        let ctx = format!("{}/{} under {:?}", e.instance, e.patch, e.track);
        let inst = load(&e.instance, e.track);
        let before = tree_hash(&inst.snapshot_dir);
        let r = run_instance(&inst, &diff(&e.instance, &e.patch), &store).unwrap();
        assert_eq!(tree_hash(&inst.snapshot_dir), before, "{ctx}");
        assert_eq!(r.track, e.track, "{ctx}");
        assert_eq!(r.functional_pass, e.functional_pass, "{ctx}");
        assert_eq!(r.reuse, e.reuse, "{ctx}");
        assert_eq!(r.unnecessary_adds, e.unnecessary_adds, "{ctx}");
        assert_eq!(r.vuln_compliant, e.vuln_compliant, "{ctx}");
        assert_eq!(r.compliance.compliant(), e.compliant, "{ctx}");
        assert_eq!(r.family_ok, e.family_ok, "{ctx}");
        assert_eq!(r.worst_remediation, e.worst_remediation, "{ctx}");
        let changes: Vec<String> =
            r.labels.iter().map(|l| format!("{} {}", l.change.kind.label(), l.change.name)).collect();
        assert_eq!(changes, e.changes, "{ctx}");
        assert_eq!(i32::from(!r.passed()), e.exit, "{ctx}");
    }
}

#[test]
fn vulnerable_pin_is_labeled_against_the_catalog() {
    let r = run_instance(&load("policy-safe", Track::PolicySpecified), &diff("policy-safe", "vulnerable"), &store()).unwrap();
    let label = &r.labels[0].label;
    let ids: Vec<&str> = label.introduced.iter().map(|a| a.id.as_str()).collect();
    assert_eq!(ids, ["FIX-LODASH-0001"]);
    assert_eq!(label.minimal_safe.as_ref().map(|v| v.raw()), Some("4.17.21"));
    assert_eq!(label.mitigatable, Some(true));
    assert!(!r.compliance.vuln_ok);
}

#[test]
fn advisories_after_the_reference_date_are_invisible() {
    // js-yaml 4.1.0 and iso8601 2.1.0 carry advisories published after 2024-06-01
    for (name, patch) in [("justified-add", "pass"), ("reuse-available", "fail")] {
        let r = run_instance(&load(name, Track::PolicySpecified), &diff(name, patch), &store()).unwrap();
        assert!(r.labels.iter().all(|l| l.label.introduced.is_empty()), "{name}/{patch}");
    }
}

#[test]
fn runs_are_deterministic_without_a_test_command() {
    let store = store();
    for (name, patch) in [("policy-safe", "vulnerable"), ("reuse-available", "fail"), ("justified-add", "pass")] {
        let mut inst = load(name, Track::PolicySpecified);
        inst.test_command = None;
        let a = serde_json::to_string(&run_instance(&inst, &diff(name, patch), &store).unwrap()).unwrap();
        let b = serde_json::to_string(&run_instance(&inst, &diff(name, patch), &store).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn tracks_differ_only_in_compliance() {
    let store = store();
    for (name, patch) in [("reuse-available", "fail"), ("justified-add", "fail"), ("policy-safe", "vulnerable")] {
        let with = run_instance(&load(name, Track::PolicySpecified), &diff(name, patch), &store).unwrap();
        let without = run_instance(&load(name, Track::PolicyUnspecified), &diff(name, patch), &store).unwrap();
        assert_eq!(with.labels, without.labels);
        assert_eq!(
            (with.reuse, with.unnecessary_adds, with.vuln_compliant, with.family_ok, with.functional_pass),
            (without.reuse, without.unnecessary_adds, without.vuln_compliant, without.family_ok, without.functional_pass)
        );
    }
}

#[test]
fn a_materialized_head_scores_like_its_diff() {
    let store = store();
    let inst = load("reuse-available", Track::PolicySpecified);
    let text = fs::read_to_string(instance_root().join("reuse-available/fail.diff")).unwrap();
    let scratch = tempfile::tempdir().unwrap();
    let head = scratch.path().join("head");
    apply_patch_into(&inst.snapshot_dir, &text, &head).unwrap();
    let from_dir = run_instance(&inst, &HeadSource::Dir(head), &store).unwrap();
    let from_diff = run_instance(&inst, &HeadSource::Diff(text), &store).unwrap();
    assert_eq!(from_dir, from_diff);
}
