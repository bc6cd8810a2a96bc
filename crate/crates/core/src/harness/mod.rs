//! Benchmark instance loading and end-to-end scoring of one patch.

pub mod patch;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::advisories::{AdvisoryStore, ReleaseCatalog};
use crate::changes::{classify_from_pr, ChangeError, FileChange};
use crate::manifests::{detect_format, parse_lockfile, parse_manifest, ManifestError};
use crate::policy::{
    default_policy, AvailabilityDefinition, AvailabilitySet, CapabilityMetadata, EvidenceSource,
    ExecutionEvidence, PolicyEnvelope,
};
use crate::scoring::{score_instance, InstanceContext, ScoreReport, TaskFamily};
use crate::time::{parse_utc, Timestamp};

pub use patch::{apply_patch, apply_patch_into, copy_tree, PatchError, PatchResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Changes(#[from] ChangeError),
    #[error("{path}: {source}")]
    Manifest {
        path: String,
        #[source]
        source: ManifestError,
    },
    #[error("{0}")]
    Io(String),
}

/// A shell line run through `sh -c`, or an argv list run directly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestCommand {
    Shell(String),
    Argv(Vec<String>),
}

impl TestCommand {
    fn command(&self) -> Option<Command> {
        match self {
            TestCommand::Shell(line) => {
                let mut c = Command::new("sh");
                c.arg("-c").arg(line);
                Some(c)
            }
            TestCommand::Argv(argv) => {
                let (prog, args) = argv.split_first()?;
                let mut c = Command::new(prog);
                c.args(args);
                Some(c)
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceConfig {
    id: String,
    family: TaskFamily,
    snapshot_dir: PathBuf,
    reference_date: String,
    availability_definition: AvailabilityDefinition,
    #[serde(default)]
    policy: Option<PolicyEnvelope>,
    #[serde(default)]
    capability_metadata: CapabilityMetadata,
    #[serde(default)]
    test_command: Option<TestCommand>,
    #[serde(default)]
    evidence_path: Option<PathBuf>,
    #[serde(default)]
    candidates_path: Option<PathBuf>,
    #[serde(default)]
    tree_listing_path: Option<PathBuf>,
}

/// A loaded instance. Every path is resolved against the config file's
/// directory and `snapshot_dir` is known to exist.
#[derive(Debug, Clone)]
pub struct TaskInstance {
    pub id: String,
    pub family: TaskFamily,
    pub snapshot_dir: PathBuf,
    pub reference_date: Timestamp,
    pub availability_definition: AvailabilityDefinition,
    pub policy: Option<PolicyEnvelope>,
    pub capability_metadata: CapabilityMetadata,
    pub test_command: Option<TestCommand>,
    pub evidence_path: Option<PathBuf>,
    pub candidates_path: Option<PathBuf>,
    pub tree_listing_path: Option<PathBuf>,
}

impl TaskInstance {
    pub fn load(config_path: &Path) -> Result<TaskInstance, HarnessError> {
        let bad = |message: String| HarnessError::Config {
            path: config_path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(config_path).map_err(|e| bad(e.to_string()))?;
        let cfg: InstanceConfig = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let root = config_path.parent().unwrap_or(Path::new("."));
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { root.join(p) };
        let snapshot_dir = resolve(cfg.snapshot_dir);
        if !snapshot_dir.is_dir() {
            return Err(bad(format!(
                "snapshot_dir {} is not a directory",
                snapshot_dir.display()
            )));
        }
        fs::read_dir(&snapshot_dir).map_err(|e| bad(format!("snapshot_dir unreadable: {e}")))?;
        let reference_date = parse_utc(&cfg.reference_date).ok_or_else(|| {
            bad(format!(
                "reference_date {:?} is not a UTC timestamp",
                cfg.reference_date
            ))
        })?;
        if cfg.availability_definition == AvailabilityDefinition::InTree
            && cfg.tree_listing_path.is_none()
        {
            return Err(bad("in-tree availability needs tree_listing_path".into()));
        }
        Ok(TaskInstance {
            id: cfg.id,
            family: cfg.family,
            snapshot_dir,
            reference_date,
            availability_definition: cfg.availability_definition,
            policy: cfg.policy,
            capability_metadata: cfg.capability_metadata,
            test_command: cfg.test_command,
            evidence_path: cfg.evidence_path.map(resolve),
            candidates_path: cfg.candidates_path.map(resolve),
            tree_listing_path: cfg.tree_listing_path.map(resolve),
        })
    }

    /// The same instance with its policy withheld.
    pub fn without_policy(&self) -> TaskInstance {
        TaskInstance {
            policy: None,
            ..self.clone()
        }
    }

    pub fn effective_policy(&self) -> PolicyEnvelope {
        self.policy.clone().unwrap_or_else(default_policy)
    }
}

/// The evaluated head state: a diff against the snapshot, or a tree.
#[derive(Debug, Clone)]
pub enum HeadSource {
    Diff(String),
    Dir(PathBuf),
}

fn read_file(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

/// Relative paths (with `/` separators) of recognized manifests and
/// lockfiles under `root`, skipping VCS metadata and installed packages.
fn manifest_paths(root: &Path) -> Result<BTreeSet<String>, HarnessError> {
    let mut out = BTreeSet::new();
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            !(e.file_type().is_dir()
                && matches!(e.file_name().to_str(), Some(".git" | "node_modules")))
        });
    for entry in walker {
        let entry = entry.map_err(|e| HarnessError::Io(e.to_string()))?;
        if !entry.file_type().is_file() || detect_format(entry.path()).is_none() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap();
        let rel: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        out.insert(rel.join("/"));
    }
    Ok(out)
}

/// Manifest pairs between two trees, in path order; unchanged files are
/// omitted.
pub fn collect_manifest_pairs(base: &Path, head: &Path) -> Result<Vec<FileChange>, HarnessError> {
    let mut paths = manifest_paths(base)?;
    paths.extend(manifest_paths(head)?);
    let load = |root: &Path, rel: &str| -> Result<Option<String>, HarnessError> {
        let p = root.join(rel);
        if p.is_file() {
            read_file(&p).map(Some)
        } else {
            Ok(None)
        }
    };
    let mut out = Vec::new();
    for path in paths {
        let base_text = load(base, &path)?;
        let head_text = load(head, &path)?;
        if base_text != head_text {
            out.push(FileChange {
                path,
                base_text,
                head_text,
            });
        }
    }
    Ok(out)
}

/// Availability of the base state under `definition`.
pub fn base_availability(instance: &TaskInstance) -> Result<AvailabilitySet, HarnessError> {
    let root = &instance.snapshot_dir;
    let definition = instance.availability_definition;
    if definition == AvailabilityDefinition::InTree {
        let path = instance
            .tree_listing_path
            .as_ref()
            .ok_or_else(|| HarnessError::Config {
                path: root.clone(),
                message: "in-tree availability needs tree_listing_path".into(),
            })?;
        return AvailabilitySet::from_tree_listing(&read_file(path)?).map_err(|(line, text)| {
            HarnessError::Config {
                path: path.clone(),
                message: format!("line {line}: cannot read {text:?}"),
            }
        });
    }
    let mut set = AvailabilitySet::empty(definition);
    for rel in manifest_paths(root)? {
        let format = detect_format(Path::new(&rel)).expect("listed paths are manifests");
        let wrap = |source| HarnessError::Manifest {
            path: rel.clone(),
            source,
        };
        let text = read_file(&root.join(&rel))?;
        let part = match (definition, format.is_lockfile()) {
            (AvailabilityDefinition::InManifest, false) => AvailabilitySet::from_decls(
                &parse_manifest(format, &text, &rel).map_err(wrap)?.decls,
            ),
            (AvailabilityDefinition::InLockfile, true) => AvailabilitySet::from_locked(
                format.ecosystem(),
                parse_lockfile(format, &text).map_err(wrap)?,
            ),
            _ => continue,
        };
        set.members.extend(part.members);
    }
    Ok(set)
}

fn load_evidence(path: &Path) -> Result<ExecutionEvidence, HarnessError> {
    let names: Vec<String> =
        serde_json::from_str(&read_file(path)?).map_err(|e| HarnessError::Config {
            path: path.to_path_buf(),
            message: format!("evidence must be a JSON array of names: {e}"),
        })?;
    Ok(ExecutionEvidence::new(EvidenceSource::ImportTrace, names))
}

fn load_catalog(path: &Path) -> Result<ReleaseCatalog, HarnessError> {
    ReleaseCatalog::from_json(&read_file(path)?).map_err(|e| HarnessError::Config {
        path: path.to_path_buf(),
        message: format!("candidates must map names to version lists: {e}"),
    })
}

/// Runs the command inside `head`; a spawn failure counts as a failed run.
fn run_tests(cmd: &TestCommand, head: &Path, base: &Path) -> bool {
    let Some(mut c) = cmd.command() else {
        return false;
    };
    c.current_dir(head)
        .env("DEPDEC_HEAD_DIR", head)
        .env("DEPDEC_BASE_DIR", base)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .is_ok_and(|s| s.success())
}

/// Materializes the head state, classifies manifest changes, and scores
/// the patch. A failing test command is recorded, not raised.
pub fn run_instance(
    instance: &TaskInstance,
    head: &HeadSource,
    store: &AdvisoryStore,
) -> Result<ScoreReport, HarnessError> {
    let patched;
    let head_dir: &Path = match head {
        HeadSource::Diff(text) => {
            patched = apply_patch(&instance.snapshot_dir, text)?;
            &patched.head_dir
        }
        HeadSource::Dir(dir) => {
            if !dir.is_dir() {
                return Err(HarnessError::Io(format!(
                    "{} is not a directory",
                    dir.display()
                )));
            }
            dir
        }
    };
    let pairs = collect_manifest_pairs(&instance.snapshot_dir, head_dir)?;
    let changes = classify_from_pr(&pairs)?;
    let availability = base_availability(instance)?;
    let evidence = match &instance.evidence_path {
        Some(p) => load_evidence(p)?,
        None => ExecutionEvidence::none(),
    };
    let catalog = instance
        .candidates_path
        .as_deref()
        .map(load_catalog)
        .transpose()?;
    let envelope = instance.effective_policy();
    let functional_pass = instance
        .test_command
        .as_ref()
        .map(|cmd| run_tests(cmd, head_dir, &instance.snapshot_dir));
    Ok(score_instance(&InstanceContext {
        instance_id: &instance.id,
        family: instance.family,
        changes: &changes,
        envelope: &envelope,
        availability: &availability,
        evidence: &evidence,
        capabilities: &instance.capability_metadata,
        functional_pass,
        store,
        ref_date: instance.reference_date,
        catalog: catalog.as_ref(),
    }))
}
