//! Unified-diff parsing and exact-context application.
//!
//! Application is all-or-nothing: every file is patched in memory first and
//! the head tree is written only when no hunk was rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use tempfile::TempDir;
use thiserror::Error;
use walkdir::WalkDir;

#[derive(Debug, Error)]
pub enum PatchError {
    #[error("malformed diff at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("hunk {hunk} of {file} does not apply")]
    PatchRejected { file: String, hunk: usize },
    #[error("diff path {path:?} resolves outside the snapshot")]
    PathEscape { path: String },
    #[error("{0}")]
    Io(String),
}

fn io(context: &str, e: std::io::Error) -> PatchError {
    PatchError::Io(format!("{context}: {e}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Line {
    Context(String),
    Remove(String),
    Add(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Hunk {
    old_start: usize,
    old_len: usize,
    new_len: usize,
    lines: Vec<Line>,
    old_missing_newline: bool,
    new_missing_newline: bool,
}

impl Hunk {
    fn old_lines(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| match l {
                Line::Context(s) | Line::Remove(s) => Some(s.as_str()),
                Line::Add(_) => None,
            })
            .collect()
    }

    fn new_lines(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| match l {
                Line::Context(s) | Line::Add(s) => Some(s.as_str()),
                Line::Remove(_) => None,
            })
            .collect()
    }
}

/// One file section of a diff. `None` paths stand for `/dev/null`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct FilePatch {
    old_path: Option<String>,
    new_path: Option<String>,
    hunks: Vec<Hunk>,
}

impl FilePatch {
    fn display_path(&self) -> &str {
        self.new_path
            .as_deref()
            .or(self.old_path.as_deref())
            .unwrap_or("?")
    }

    fn is_creation(&self) -> bool {
        self.old_path.is_none()
    }
}

static HUNK_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@").unwrap());

/// Header path: drops a trailing timestamp, unquotes, and strips the `a/`
/// or `b/` side prefix. `/dev/null` becomes `None`.
fn header_path(raw: &str, prefix: &str) -> Option<String> {
    let raw = raw.split('\t').next().unwrap_or(raw).trim_end();
    let raw = raw
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .map(|r| r.replace("\\\"", "\"").replace("\\\\", "\\"))
        .unwrap_or_else(|| raw.to_string());
    if raw == "/dev/null" {
        return None;
    }
    Some(raw.strip_prefix(prefix).map(str::to_string).unwrap_or(raw))
}

fn parse_diff(text: &str) -> Result<Vec<FilePatch>, PatchError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut files: Vec<FilePatch> = Vec::new();
    // git metadata seen since the last file section started
    let mut git_rename: (Option<String>, Option<String>) = (None, None);
    let mut git_new = false;
    let mut git_deleted = false;
    let mut git_paths: Option<(String, String)> = None;
    let mut i = 0;

    let flush_git = |files: &mut Vec<FilePatch>,
                     paths: &mut Option<(String, String)>,
                     rename: &mut (Option<String>, Option<String>),
                     new: &mut bool,
                     deleted: &mut bool| {
        // a git section with no ---/+++ headers: pure rename or empty add/delete
        if let Some((a, b)) = paths.take() {
            let old = rename.0.take().unwrap_or(a);
            let new_path = rename.1.take().unwrap_or(b);
            files.push(FilePatch {
                old_path: (!*new).then_some(old),
                new_path: (!*deleted).then_some(new_path),
                hunks: Vec::new(),
            });
        }
        *rename = (None, None);
        *new = false;
        *deleted = false;
    };

    while i < lines.len() {
        let line = lines[i];
        if let Some(rest) = line.strip_prefix("diff --git ") {
            flush_git(
                &mut files,
                &mut git_paths,
                &mut git_rename,
                &mut git_new,
                &mut git_deleted,
            );
            let (a, b) = rest.split_once(" b/").map_or((rest, rest), |(a, b)| (a, b));
            let a = a.strip_prefix("a/").unwrap_or(a).to_string();
            git_paths = Some((a, b.to_string()));
            i += 1;
            continue;
        }
        if let Some(p) = line.strip_prefix("rename from ") {
            git_rename.0 = Some(p.to_string());
        } else if let Some(p) = line.strip_prefix("rename to ") {
            git_rename.1 = Some(p.to_string());
        } else if line.starts_with("new file mode") {
            git_new = true;
        } else if line.starts_with("deleted file mode") {
            git_deleted = true;
        } else if line.starts_with("Binary files ") || line.starts_with("GIT binary patch") {
            return Err(PatchError::Malformed {
                line: i + 1,
                message: "binary diffs are not supported".into(),
            });
        }
        if let (Some(old), Some(new)) = (
            line.strip_prefix("--- "),
            lines.get(i + 1).and_then(|l| l.strip_prefix("+++ ")),
        ) {
            let mut old_path = header_path(old, "a/");
            let mut new_path = header_path(new, "b/");
            if git_paths.take().is_some() {
                if git_new {
                    old_path = None;
                }
                if git_deleted {
                    new_path = None;
                }
                if let Some(from) = git_rename.0.take() {
                    old_path = Some(from);
                }
                if let Some(to) = git_rename.1.take() {
                    new_path = Some(to);
                }
                git_new = false;
                git_deleted = false;
            }
            if old_path.is_none() && new_path.is_none() {
                return Err(PatchError::Malformed {
                    line: i + 1,
                    message: "both sides are /dev/null".into(),
                });
            }
            i += 2;
            let mut hunks = Vec::new();
            while i < lines.len() && lines[i].starts_with("@@") {
                let (hunk, next) = parse_hunk(&lines, i)?;
                hunks.push(hunk);
                i = next;
            }
            if hunks.is_empty() {
                return Err(PatchError::Malformed {
                    line: i + 1,
                    message: "file header without hunks".into(),
                });
            }
            files.push(FilePatch {
                old_path,
                new_path,
                hunks,
            });
            continue;
        }
        if line.starts_with("@@") {
            return Err(PatchError::Malformed {
                line: i + 1,
                message: "hunk without file headers".into(),
            });
        }
        i += 1;
    }
    flush_git(
        &mut files,
        &mut git_paths,
        &mut git_rename,
        &mut git_new,
        &mut git_deleted,
    );
    Ok(files)
}

fn parse_hunk(lines: &[&str], start: usize) -> Result<(Hunk, usize), PatchError> {
    let caps = HUNK_HEADER
        .captures(lines[start])
        .ok_or_else(|| PatchError::Malformed {
            line: start + 1,
            message: format!("bad hunk header {:?}", lines[start]),
        })?;
    let num = |idx: usize| {
        caps.get(idx)
            .map_or(1, |m| m.as_str().parse().unwrap_or(usize::MAX))
    };
    let mut hunk = Hunk {
        old_start: num(1),
        old_len: num(2),
        new_len: num(4),
        lines: Vec::new(),
        old_missing_newline: false,
        new_missing_newline: false,
    };
    let (mut old_seen, mut new_seen) = (0, 0);
    let mut i = start + 1;
    while i < lines.len() {
        let line = lines[i];
        if line.starts_with('\\') {
            match hunk.lines.last() {
                Some(Line::Context(_)) => {
                    hunk.old_missing_newline = true;
                    hunk.new_missing_newline = true;
                }
                Some(Line::Remove(_)) => hunk.old_missing_newline = true,
                Some(Line::Add(_)) => hunk.new_missing_newline = true,
                None => {
                    return Err(PatchError::Malformed {
                        line: i + 1,
                        message: "no-newline marker before any line".into(),
                    })
                }
            }
            i += 1;
            continue;
        }
        if old_seen == hunk.old_len && new_seen == hunk.new_len {
            break;
        }
        let (tag, body) = match line.chars().next() {
            Some(c) => (c, &line[c.len_utf8()..]),
            // some tools strip the single space of an empty context line
            None => (' ', ""),
        };
        match tag {
            ' ' => {
                hunk.lines.push(Line::Context(body.to_string()));
                old_seen += 1;
                new_seen += 1;
            }
            '-' => {
                hunk.lines.push(Line::Remove(body.to_string()));
                old_seen += 1;
            }
            '+' => {
                hunk.lines.push(Line::Add(body.to_string()));
                new_seen += 1;
            }
            _ => break,
        }
        if old_seen > hunk.old_len || new_seen > hunk.new_len {
            return Err(PatchError::Malformed {
                line: i + 1,
                message: "hunk body longer than its header".into(),
            });
        }
        i += 1;
    }
    if old_seen != hunk.old_len || new_seen != hunk.new_len {
        return Err(PatchError::Malformed {
            line: start + 1,
            message: "hunk body shorter than its header".into(),
        });
    }
    Ok((hunk, i))
}

/// Rejects absolute paths and any `..` component.
fn safe_relative(path: &str) -> Result<PathBuf, PatchError> {
    let p = Path::new(path);
    let ok = !path.is_empty()
        && p.components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
    if ok {
        Ok(p.to_path_buf())
    } else {
        Err(PatchError::PathEscape {
            path: path.to_string(),
        })
    }
}

struct Text {
    lines: Vec<String>,
    final_newline: bool,
}

impl Text {
    fn parse(text: &str) -> Text {
        Text {
            lines: text.lines().map(str::to_string).collect(),
            final_newline: text.is_empty() || text.ends_with('\n'),
        }
    }

    fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        if self.final_newline && !self.lines.is_empty() {
            out.push('\n');
        }
        out
    }
}

/// Applies hunks in order; each must match exactly at its stated position
/// or at the nearest offset that does not overlap an earlier hunk.
fn apply_hunks(file: &str, text: &str, hunks: &[Hunk]) -> Result<Text, PatchError> {
    let mut cur = Text::parse(text);
    let mut floor = 0usize;
    let mut shift: isize = 0;
    for (idx, hunk) in hunks.iter().enumerate() {
        let reject = || PatchError::PatchRejected {
            file: file.to_string(),
            hunk: idx + 1,
        };
        let old = hunk.old_lines();
        let fits = |pos: usize| {
            pos >= floor
                && pos + old.len() <= cur.lines.len()
                && old.iter().zip(&cur.lines[pos..]).all(|(a, b)| *a == b)
        };
        // a zero-length old side inserts after line `old_start`
        let stated = if hunk.old_len == 0 {
            hunk.old_start
        } else {
            hunk.old_start.saturating_sub(1)
        };
        let expected = (stated as isize + shift).max(0) as usize;
        let limit = cur.lines.len() + 1;
        let pos = (0..=limit)
            .flat_map(|d| {
                [
                    expected.checked_add(d),
                    expected.checked_sub(d).filter(|_| d > 0),
                ]
            })
            .flatten()
            .find(|&p| fits(p))
            .ok_or_else(reject)?;
        let at_end = pos + old.len() == cur.lines.len();
        if hunk.old_missing_newline && (!at_end || cur.final_newline) {
            return Err(reject());
        }
        let new: Vec<String> = hunk.new_lines().into_iter().map(str::to_string).collect();
        let added = new.len();
        cur.lines.splice(pos..pos + old.len(), new);
        if at_end {
            cur.final_newline = !hunk.new_missing_newline;
        }
        shift += pos as isize - expected as isize + added as isize - old.len() as isize;
        floor = pos + added;
    }
    Ok(cur)
}

/// Outcome of a successful application. The head tree lives as long as this
/// value unless it was written into a caller-supplied directory.
#[derive(Debug)]
pub struct PatchResult {
    pub applied_files: Vec<String>,
    pub rejected_hunks: usize,
    pub head_dir: PathBuf,
    _owned: Option<TempDir>,
}

pub fn copy_tree(from: &Path, to: &Path) -> Result<(), PatchError> {
    for entry in WalkDir::new(from).sort_by_file_name() {
        let entry = entry.map_err(|e| PatchError::Io(e.to_string()))?;
        let rel = entry.path().strip_prefix(from).unwrap();
        let dest = to.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest).map_err(|e| io(&dest.display().to_string(), e))?;
        } else {
            fs::copy(entry.path(), &dest)
                .map_err(|e| io(&entry.path().display().to_string(), e))?;
        }
    }
    Ok(())
}

enum Outcome {
    Write(String),
    Delete,
}

/// Copies `snapshot_dir` into a fresh temporary directory and applies the
/// diff there. The snapshot itself is only read.
pub fn apply_patch(snapshot_dir: &Path, diff: &str) -> Result<PatchResult, PatchError> {
    let tmp = tempfile::Builder::new()
        .prefix("depdec-head-")
        .tempdir()
        .map_err(|e| io("temporary directory", e))?;
    let head = tmp.path().join("head");
    let mut result = apply_patch_into(snapshot_dir, diff, &head)?;
    result._owned = Some(tmp);
    Ok(result)
}

/// Like [`apply_patch`], writing the head tree to `dest`, which must not exist.
pub fn apply_patch_into(
    snapshot_dir: &Path,
    diff: &str,
    dest: &Path,
) -> Result<PatchResult, PatchError> {
    let files = parse_diff(diff)?;
    let mut outcomes: BTreeMap<PathBuf, Outcome> = BTreeMap::new();
    let mut applied = Vec::new();
    let current =
        |outcomes: &BTreeMap<PathBuf, Outcome>, rel: &Path| -> Result<Option<String>, PatchError> {
            match outcomes.get(rel) {
                Some(Outcome::Write(t)) => Ok(Some(t.clone())),
                Some(Outcome::Delete) => Ok(None),
                None => {
                    let p = snapshot_dir.join(rel);
                    if p.is_file() {
                        fs::read_to_string(&p)
                            .map(Some)
                            .map_err(|e| io(&p.display().to_string(), e))
                    } else {
                        Ok(None)
                    }
                }
            }
        };
    for fp in &files {
        let name = fp.display_path().to_string();
        let reject = || PatchError::PatchRejected {
            file: name.clone(),
            hunk: 1,
        };
        let old_rel = fp.old_path.as_deref().map(safe_relative).transpose()?;
        let new_rel = fp.new_path.as_deref().map(safe_relative).transpose()?;
        let before = match &old_rel {
            Some(rel) => current(&outcomes, rel)?,
            None => None,
        };
        let source = match (fp.is_creation(), before) {
            (true, _) => {
                if let Some(rel) = &new_rel {
                    if current(&outcomes, rel)?.is_some() {
                        return Err(reject());
                    }
                }
                String::new()
            }
            (false, Some(text)) => text,
            // `diff -N` describes a new file as a change from an empty one
            (false, None) if fp.hunks.iter().all(|h| h.old_len == 0) => String::new(),
            (false, None) => return Err(reject()),
        };
        let patched = apply_hunks(&name, &source, &fp.hunks)?;
        // `diff -N` describes a deletion as a change to an empty file
        let emptied = !fp.hunks.is_empty()
            && patched.lines.is_empty()
            && fp.hunks.iter().all(|h| h.new_len == 0);
        if let Some(rel) = &old_rel {
            if new_rel.as_ref() != Some(rel) {
                outcomes.insert(rel.clone(), Outcome::Delete);
            }
        }
        match &new_rel {
            Some(rel) if !emptied || fp.is_creation() => {
                outcomes.insert(rel.clone(), Outcome::Write(patched.render()));
            }
            Some(rel) => {
                outcomes.insert(rel.clone(), Outcome::Delete);
            }
            None => {
                if !patched.lines.is_empty() {
                    return Err(reject());
                }
            }
        }
        applied.push(name);
    }

    if dest.exists() {
        return Err(PatchError::Io(format!("{} already exists", dest.display())));
    }
    copy_tree(snapshot_dir, dest)?;
    for (rel, outcome) in &outcomes {
        let path = dest.join(rel);
        match outcome {
            Outcome::Write(text) => {
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent).map_err(|e| io(&parent.display().to_string(), e))?;
                }
                fs::write(&path, text).map_err(|e| io(&path.display().to_string(), e))?;
            }
            Outcome::Delete => {
                if path.exists() {
                    fs::remove_file(&path).map_err(|e| io(&path.display().to_string(), e))?;
                }
            }
        }
    }
    applied.sort();
    applied.dedup();
    Ok(PatchResult {
        applied_files: applied,
        rejected_hunks: 0,
        head_dir: dest.to_path_buf(),
        _owned: None,
    })
}
