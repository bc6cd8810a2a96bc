//! Direct-dependency extraction from manifests and resolved pairs from
//! lockfiles.
//!
//! JSON, TOML and XML formats are parsed structurally. `requirements.txt`,
//! `Gemfile` and `go.mod` are line oriented and use pattern extraction.

mod cargo;
mod composer;
mod gemfile;
mod gomod;
mod lockfiles;
mod maven;
mod npm;
mod requirements;
pub mod spec;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ecosystem::{normalize_name, Ecosystem};
use crate::version::Version;

pub use lockfiles::parse_lockfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifestFormat {
    NpmManifest,
    NpmLockfile,
    PythonRequirements,
    PythonLockfile,
    MavenPom,
    CargoManifest,
    GoMod,
    Gemfile,
    ComposerManifest,
}

impl ManifestFormat {
    pub fn ecosystem(self) -> Ecosystem {
        match self {
            ManifestFormat::NpmManifest | ManifestFormat::NpmLockfile => Ecosystem::Npm,
            ManifestFormat::PythonRequirements | ManifestFormat::PythonLockfile => Ecosystem::PyPi,
            ManifestFormat::MavenPom => Ecosystem::Maven,
            ManifestFormat::CargoManifest => Ecosystem::Cargo,
            ManifestFormat::GoMod => Ecosystem::Go,
            ManifestFormat::Gemfile => Ecosystem::RubyGems,
            ManifestFormat::ComposerManifest => Ecosystem::Packagist,
        }
    }

    pub fn is_lockfile(self) -> bool {
        matches!(
            self,
            ManifestFormat::NpmLockfile | ManifestFormat::PythonLockfile
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Runtime,
    Dev,
    Optional,
}

/// One declared direct dependency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyDecl {
    pub ecosystem: Ecosystem,
    pub name: String,
    pub spec: String,
    pub pinned: Option<Version>,
    pub scope: Scope,
    pub source_path: String,
    pub source_line: usize,
}

/// Entries seen but not turned into declarations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipTally {
    pub comments: usize,
    /// VCS, URL, path, editable, workspace and platform entries.
    pub non_registry: usize,
    pub indirect: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestSnapshot {
    pub format: ManifestFormat,
    pub decls: Vec<DependencyDecl>,
    /// Hex SHA-256 of the source text.
    pub digest: String,
    pub skipped: SkipTally,
}

impl ManifestSnapshot {
    pub fn empty(format: ManifestFormat) -> Self {
        ManifestSnapshot {
            format,
            decls: Vec::new(),
            digest: digest(""),
            skipped: SkipTally::default(),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ManifestError {
    #[error("{path}{}: malformed manifest: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Malformed {
        path: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}: {format:?} is not a manifest format")]
    NotAManifest {
        path: String,
        format: ManifestFormat,
    },
    #[error("{format:?} is not a lockfile format")]
    NotALockfile { format: ManifestFormat },
}

pub(crate) fn malformed(
    path: &str,
    line: Option<usize>,
    message: impl Into<String>,
) -> ManifestError {
    ManifestError::Malformed {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub(crate) fn strip_bom(text: &str) -> &str {
    text.strip_prefix('\u{feff}').unwrap_or(text)
}

/// Maps a repository path to the manifest format its basename denotes.
pub fn detect_format(path: &Path) -> Option<ManifestFormat> {
    let base = path.file_name()?.to_str()?;
    let format = match base {
        "package.json" => ManifestFormat::NpmManifest,
        "package-lock.json" | "npm-shrinkwrap.json" => ManifestFormat::NpmLockfile,
        "Pipfile.lock" | "poetry.lock" | "uv.lock" => ManifestFormat::PythonLockfile,
        "pom.xml" => ManifestFormat::MavenPom,
        "Cargo.toml" => ManifestFormat::CargoManifest,
        "go.mod" => ManifestFormat::GoMod,
        "Gemfile" | "gems.rb" => ManifestFormat::Gemfile,
        "composer.json" => ManifestFormat::ComposerManifest,
        _ => {
            let lower = base.to_ascii_lowercase();
            let in_req_dir = path
                .parent()
                .and_then(|p| p.file_name())
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.eq_ignore_ascii_case("requirements"));
            let is_req = (lower.ends_with(".txt") || lower.ends_with(".in"))
                && (lower.contains("requirements") || in_req_dir);
            if is_req {
                ManifestFormat::PythonRequirements
            } else {
                return None;
            }
        }
    };
    Some(format)
}

/// Accumulates declarations, enforcing unique `(ecosystem, name, scope)` keys.
pub(crate) struct DeclSink<'a> {
    ecosystem: Ecosystem,
    path: &'a str,
    seen: HashSet<(String, Scope)>,
    decls: Vec<DependencyDecl>,
    pub skipped: SkipTally,
}

impl<'a> DeclSink<'a> {
    pub fn new(ecosystem: Ecosystem, path: &'a str) -> Self {
        DeclSink {
            ecosystem,
            path,
            seen: HashSet::new(),
            decls: Vec::new(),
            skipped: SkipTally::default(),
        }
    }

    pub fn path(&self) -> &'a str {
        self.path
    }

    pub fn push(&mut self, raw_name: &str, spec: &str, scope: Scope, line: usize) {
        let name = normalize_name(self.ecosystem, raw_name);
        if !self.seen.insert((name.clone(), scope)) {
            self.skipped.duplicates += 1;
            return;
        }
        let spec = spec.trim().to_string();
        let pinned = spec::pinned_version(self.ecosystem, &spec);
        self.decls.push(DependencyDecl {
            ecosystem: self.ecosystem,
            name,
            spec,
            pinned,
            scope,
            source_path: self.path.to_string(),
            source_line: line,
        });
    }

    fn finish(mut self, format: ManifestFormat, text: &str) -> ManifestSnapshot {
        self.decls.sort_by(|a, b| {
            (a.source_line, &a.name, a.scope).cmp(&(b.source_line, &b.name, b.scope))
        });
        ManifestSnapshot {
            format,
            decls: self.decls,
            digest: digest(text),
            skipped: self.skipped,
        }
    }
}

/// Parses a manifest into its direct-dependency declarations.
pub fn parse_manifest(
    format: ManifestFormat,
    text: &str,
    path: &str,
) -> Result<ManifestSnapshot, ManifestError> {
    if format.is_lockfile() {
        return Err(ManifestError::NotAManifest {
            path: path.to_string(),
            format,
        });
    }
    let body = strip_bom(text);
    let mut sink = DeclSink::new(format.ecosystem(), path);
    if !body.trim().is_empty() {
        match format {
            ManifestFormat::NpmManifest => npm::parse(body, &mut sink)?,
            ManifestFormat::PythonRequirements => requirements::parse(body, &mut sink)?,
            ManifestFormat::MavenPom => maven::parse(body, &mut sink)?,
            ManifestFormat::CargoManifest => cargo::parse(body, &mut sink)?,
            ManifestFormat::GoMod => gomod::parse(body, &mut sink)?,
            ManifestFormat::Gemfile => gemfile::parse(body, &mut sink)?,
            ManifestFormat::ComposerManifest => composer::parse(body, &mut sink)?,
            ManifestFormat::NpmLockfile | ManifestFormat::PythonLockfile => unreachable!(),
        }
    }
    Ok(sink.finish(format, text))
}

/// 1-based line of the first `"key":` after the line holding `"section":`.
pub(crate) fn json_key_line(text: &str, section: &str, key: &str) -> usize {
    let section_pat = format!("\"{section}\"");
    let key_pat = format!("\"{key}\"");
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| l.contains(&section_pat))
        .unwrap_or(0);
    lines
        .iter()
        .enumerate()
        .skip(start)
        .find(|(i, l)| {
            // a one-line section holds its keys on the section line itself
            let hay = if *i == start {
                l.split_once(&section_pat).map_or(**l, |(_, rest)| rest)
            } else {
                l
            };
            hay.contains(&key_pat)
        })
        .map_or(start + 1, |(i, _)| i + 1)
}
