//! Replay of pull-request records through classification and PR-time
//! labeling. Each record is labeled at its own `created_at`.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advisories::{AdvisoryStore, ReleaseCatalog};
use crate::changes::{classify_file, FileChange};
use crate::scoring::{label_change, AuthorKind, CorpusAggregate, LabeledChange, Tally};
use crate::time::Timestamp;

/// One file of a pull request. Texts may be inline or stored in files
/// relative to the corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrFile {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_file: Option<PathBuf>,
}

impl PrFile {
    pub fn inline(path: &str, base_text: Option<&str>, head_text: Option<&str>) -> PrFile {
        PrFile {
            path: path.to_string(),
            base_text: base_text.map(str::to_string),
            head_text: head_text.map(str::to_string),
            base_file: None,
            head_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrRecord {
    pub pr_id: String,
    pub repo: String,
    pub author_kind: AuthorKind,
    #[serde(with = "crate::time::rfc3339")]
    pub created_at: Timestamp,
    pub files: Vec<PrFile>,
}

/// A problem confined to one record or one file of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// 1-based line of the corpus file, when read from one.
    pub line: Option<usize>,
    pub pr_id: Option<String>,
    pub path: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub author_kind: AuthorKind,
    pub labeled: Vec<LabeledChange>,
    pub diagnostics: Vec<Diagnostic>,
}

/// A record read from disk, with externalized texts already inlined.
#[derive(Debug, Clone)]
pub struct LoadedRecord {
    pub line: usize,
    pub record: PrRecord,
}

fn resolve_side(root: &Path, text: &Option<String>, file: &Option<PathBuf>) -> Result<Option<String>, String> {
    match (text, file) {
        (Some(_), Some(_)) => Err("both inline text and file reference given".into()),
        (Some(t), None) => Ok(Some(t.clone())),
        (None, Some(f)) => {
            let p = root.join(f);
            fs::read_to_string(&p).map(Some).map_err(|e| format!("cannot read {}: {e}", p.display()))
        }
        (None, None) => Ok(None),
    }
}

/// Classifies and labels one record. Files that fail to parse or resolve
/// are skipped with a diagnostic; the rest of the record still counts.
pub fn process_record(
    rec: &PrRecord,
    root: &Path,
    store: &AdvisoryStore,
    catalog: Option<&ReleaseCatalog>,
) -> RecordOutcome {
    let mut labeled = Vec::new();
    let mut diagnostics = Vec::new();
    for f in &rec.files {
        let mut diag = |message: String| {
            diagnostics.push(Diagnostic {
                line: None,
                pr_id: Some(rec.pr_id.clone()),
                path: Some(f.path.clone()),
                message,
            })
        };
        let sides = resolve_side(root, &f.base_text, &f.base_file)
            .and_then(|b| resolve_side(root, &f.head_text, &f.head_file).map(|h| (b, h)));
        let fc = match sides {
            Ok((None, None)) => {
                diag("file has neither a base nor a head side".into());
                continue;
            }
            Ok((base_text, head_text)) => FileChange {
                path: f.path.clone(),
                base_text,
                head_text,
            },
            Err(message) => {
                diag(message);
                continue;
            }
        };
        match classify_file(&fc.path, fc.base_text.as_deref(), fc.head_text.as_deref()) {
            Ok(changes) => labeled.extend(changes.into_iter().map(|c| {
                let candidates = catalog.and_then(|cat| cat.candidates(c.ecosystem, &c.name));
                let label = label_change(&c, store, rec.created_at, candidates.as_deref());
                LabeledChange { change: c, label }
            })),
            Err(e) => diag(e.to_string()),
        }
    }
    RecordOutcome {
        author_kind: rec.author_kind,
        labeled,
        diagnostics,
    }
}

/// Reads a JSON Lines corpus. Lines that do not decode become diagnostics;
/// file references resolve against the corpus file's directory.
pub fn read_corpus(reader: impl BufRead) -> (Vec<LoadedRecord>, Vec<Diagnostic>) {
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let n = idx + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                diagnostics.push(Diagnostic {
                    line: Some(n),
                    pr_id: None,
                    path: None,
                    message: format!("unreadable line: {e}"),
                });
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<PrRecord>(&line) {
            Ok(record) => records.push(LoadedRecord { line: n, record }),
            Err(e) => diagnostics.push(Diagnostic {
                line: Some(n),
                pr_id: None,
                path: None,
                message: format!("malformed record: {e}"),
            }),
        }
    }
    (records, diagnostics)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub records: u64,
    pub skipped_records: u64,
    pub skipped_files: u64,
    pub unaudited_changes: u64,
    pub messages: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub aggregate: CorpusAggregate,
    pub diagnostics: DiagnosticsSummary,
}

/// Processes records in parallel and merges per-record tallies in input
/// order, so the report does not depend on scheduling.
pub fn run_corpus(
    records: &[LoadedRecord],
    read_diagnostics: Vec<Diagnostic>,
    root: &Path,
    store: &AdvisoryStore,
    catalog: Option<&ReleaseCatalog>,
) -> CorpusReport {
    let outcomes: Vec<(usize, AuthorKind, Tally, Vec<Diagnostic>)> = records
        .par_iter()
        .map(|lr| {
            let out = process_record(&lr.record, root, store, catalog);
            let mut tally = Tally::default();
            for lc in &out.labeled {
                tally.add(lc);
            }
            (lr.line, out.author_kind, tally, out.diagnostics)
        })
        .collect();
    let mut tallies: BTreeMap<AuthorKind, Tally> = BTreeMap::new();
    let mut summary = DiagnosticsSummary {
        records: records.len() as u64,
        skipped_records: read_diagnostics.len() as u64,
        ..DiagnosticsSummary::default()
    };
    summary.messages = read_diagnostics;
    for (line, kind, tally, diags) in outcomes {
        tallies.entry(kind).or_default().merge(&tally);
        summary.unaudited_changes += tally.unaudited;
        summary.skipped_files += diags.len() as u64;
        summary.messages.extend(diags.into_iter().map(|d| Diagnostic {
            line: Some(line),
            ..d
        }));
    }
    summary.messages.sort_by_key(|d| d.line);
    CorpusReport {
        aggregate: CorpusAggregate::from_tallies(&tallies),
        diagnostics: summary,
    }
}

/// Reads and processes the corpus at `path`.
pub fn run_corpus_file(
    path: &Path,
    store: &AdvisoryStore,
    catalog: Option<&ReleaseCatalog>,
) -> std::io::Result<CorpusReport> {
    let file = fs::File::open(path)?;
    let (records, diags) = read_corpus(std::io::BufReader::new(file));
    let root = path.parent().unwrap_or(Path::new("."));
    Ok(run_corpus(&records, diags, root, store, catalog))
}
