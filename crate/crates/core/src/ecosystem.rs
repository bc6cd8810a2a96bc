use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Package registry a dependency is resolved against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ecosystem {
    Npm,
    #[serde(rename = "pypi")]
    PyPi,
    Maven,
    Cargo,
    Go,
    #[serde(rename = "rubygems")]
    RubyGems,
    Packagist,
}

impl Ecosystem {
    pub const ALL: [Ecosystem; 7] = [
        Ecosystem::Npm,
        Ecosystem::PyPi,
        Ecosystem::Maven,
        Ecosystem::Cargo,
        Ecosystem::Go,
        Ecosystem::RubyGems,
        Ecosystem::Packagist,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Ecosystem::Npm => "npm",
            Ecosystem::PyPi => "pypi",
            Ecosystem::Maven => "maven",
            Ecosystem::Cargo => "cargo",
            Ecosystem::Go => "go",
            Ecosystem::RubyGems => "rubygems",
            Ecosystem::Packagist => "packagist",
        }
    }
}

impl fmt::Display for Ecosystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown ecosystem {0:?}")]
pub struct UnknownEcosystem(pub String);

impl FromStr for Ecosystem {
    type Err = UnknownEcosystem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let eco = match s.trim().to_ascii_lowercase().as_str() {
            "npm" | "node" => Ecosystem::Npm,
            "pypi" | "pip" | "python" => Ecosystem::PyPi,
            "maven" => Ecosystem::Maven,
            "cargo" | "crates.io" | "rust" => Ecosystem::Cargo,
            "go" | "golang" => Ecosystem::Go,
            "rubygems" | "gem" | "ruby" => Ecosystem::RubyGems,
            "packagist" | "composer" | "php" => Ecosystem::Packagist,
            _ => return Err(UnknownEcosystem(s.to_string())),
        };
        Ok(eco)
    }
}

/// Canonical registry identity of a package name.
///
/// Everything is lowercased. PyPI additionally folds runs of `-`, `_` and `.`
/// into a single `-`, and crates.io treats `_` and `-` as the same character.
pub fn normalize_name(ecosystem: Ecosystem, name: &str) -> String {
    let lower = name.trim().to_lowercase();
    match ecosystem {
        Ecosystem::PyPi => {
            let mut out = String::with_capacity(lower.len());
            let mut in_sep = false;
            for c in lower.chars() {
                if matches!(c, '-' | '_' | '.') {
                    if !in_sep {
                        out.push('-');
                    }
                    in_sep = true;
                } else {
                    out.push(c);
                    in_sep = false;
                }
            }
            out
        }
        Ecosystem::Cargo => lower.replace('_', "-"),
        _ => lower,
    }
}
