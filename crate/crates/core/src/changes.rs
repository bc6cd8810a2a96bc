//! Classified dependency changes between two manifest states.
//!
//! Identity is the `(ecosystem, name, scope)` key. Renames and scope moves
//! surface as a Removal plus an Addition.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ecosystem::Ecosystem;
use crate::manifests::{
    detect_format, parse_manifest, DependencyDecl, ManifestError, ManifestFormat, ManifestSnapshot,
    Scope,
};
use crate::version::Version;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Addition,
    Removal,
    Update,
}

impl ChangeKind {
    pub const ALL: [ChangeKind; 3] = [
        ChangeKind::Addition,
        ChangeKind::Removal,
        ChangeKind::Update,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ChangeKind::Addition => "addition",
            ChangeKind::Removal => "removal",
            ChangeKind::Update => "update",
        }
    }
}

/// Addition has only a head side, Removal only a base side, Update both with
/// differing specs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyChange {
    pub kind: ChangeKind,
    pub ecosystem: Ecosystem,
    pub name: String,
    pub base_version: Option<Version>,
    pub base_spec: Option<String>,
    pub head_version: Option<Version>,
    pub head_spec: Option<String>,
    pub scope: Scope,
    pub source_path: String,
}

impl DependencyChange {
    pub fn key(&self) -> (Ecosystem, &str, Scope) {
        (self.ecosystem, &self.name, self.scope)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ChangeError {
    #[error("cannot compare a {base:?} snapshot with a {head:?} snapshot")]
    FormatMismatch {
        base: ManifestFormat,
        head: ManifestFormat,
    },
    #[error("{source}")]
    Manifest {
        path: String,
        #[source]
        source: ManifestError,
    },
}

type Key = (Ecosystem, String, Scope);

fn index(snap: &ManifestSnapshot) -> BTreeMap<Key, &DependencyDecl> {
    snap.decls
        .iter()
        .map(|d| ((d.ecosystem, d.name.clone(), d.scope), d))
        .collect()
}

/// Changes from `base` to `head`, sorted by `(name, scope)`.
pub fn classify_changes(
    base: &ManifestSnapshot,
    head: &ManifestSnapshot,
) -> Result<Vec<DependencyChange>, ChangeError> {
    if base.format != head.format {
        return Err(ChangeError::FormatMismatch {
            base: base.format,
            head: head.format,
        });
    }
    let before = index(base);
    let after = index(head);
    let mut out = Vec::new();
    for (key, b) in &before {
        match after.get(key) {
            None => out.push(DependencyChange {
                kind: ChangeKind::Removal,
                ecosystem: key.0,
                name: key.1.clone(),
                base_version: b.pinned.clone(),
                base_spec: Some(b.spec.clone()),
                head_version: None,
                head_spec: None,
                scope: key.2,
                source_path: b.source_path.clone(),
            }),
            Some(h) if h.spec != b.spec => out.push(DependencyChange {
                kind: ChangeKind::Update,
                ecosystem: key.0,
                name: key.1.clone(),
                base_version: b.pinned.clone(),
                base_spec: Some(b.spec.clone()),
                head_version: h.pinned.clone(),
                head_spec: Some(h.spec.clone()),
                scope: key.2,
                source_path: h.source_path.clone(),
            }),
            Some(_) => {}
        }
    }
    for (key, h) in &after {
        if !before.contains_key(key) {
            out.push(DependencyChange {
                kind: ChangeKind::Addition,
                ecosystem: key.0,
                name: key.1.clone(),
                base_version: None,
                base_spec: None,
                head_version: h.pinned.clone(),
                head_spec: Some(h.spec.clone()),
                scope: key.2,
                source_path: h.source_path.clone(),
            });
        }
    }
    out.sort_by(|a, b| (&a.name, a.scope, a.ecosystem).cmp(&(&b.name, b.scope, b.ecosystem)));
    Ok(out)
}

/// Classifies one file of a pull request. Non-manifest paths and lockfiles
/// yield no changes; a missing side is an empty snapshot.
pub fn classify_file(
    path: &str,
    base: Option<&str>,
    head: Option<&str>,
) -> Result<Vec<DependencyChange>, ChangeError> {
    let Some(format) = detect_format(Path::new(path)) else {
        return Ok(Vec::new());
    };
    if format.is_lockfile() {
        return Ok(Vec::new());
    }
    let parse = |text: Option<&str>| match text {
        Some(t) => parse_manifest(format, t, path).map_err(|source| ChangeError::Manifest {
            path: path.to_string(),
            source,
        }),
        None => Ok(ManifestSnapshot::empty(format)),
    };
    classify_changes(&parse(base)?, &parse(head)?)
}

/// One entry of a pull request's file list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub base_text: Option<String>,
    pub head_text: Option<String>,
}

/// Concatenated per-file classifications, in file order.
pub fn classify_from_pr(files: &[FileChange]) -> Result<Vec<DependencyChange>, ChangeError> {
    let mut out = Vec::new();
    for f in files {
        out.extend(classify_file(
            &f.path,
            f.base_text.as_deref(),
            f.head_text.as_deref(),
        )?);
    }
    Ok(out)
}
