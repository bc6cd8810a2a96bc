//! Ecosystem-tagged versions, affected-version ranges, and the semver
//! distance between a vulnerable release and its remediation target.
//!
//! Every ecosystem is folded into one `(major, minor, patch, extra, prerelease)`
//! model. Adapters handle the common decorations (PEP 440 epochs and local
//! labels, Maven release qualifiers, Go `+incompatible`, leading `v`), and
//! anything left over is kept best-effort with the version flagged as
//! approximate.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ecosystem::Ecosystem;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum VersionError {
    #[error("unparseable {ecosystem} version {text:?}")]
    Unparseable { ecosystem: Ecosystem, text: String },
    #[error("cannot compare a {left} version with a {right} version")]
    EcosystemMismatch { left: Ecosystem, right: Ecosystem },
    #[error("empty interval: introduced {introduced} is not below fixed {fixed}")]
    EmptyInterval { introduced: String, fixed: String },
}

/// One prerelease identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PreTag {
    Numeric(u64),
    Alpha(String),
}

impl PreTag {
    fn parse(token: &str, fold_case: bool) -> PreTag {
        if !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(n) = token.parse() {
                return PreTag::Numeric(n);
            }
        }
        if fold_case {
            PreTag::Alpha(token.to_ascii_lowercase())
        } else {
            PreTag::Alpha(token.to_string())
        }
    }
}

impl Ord for PreTag {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (PreTag::Numeric(a), PreTag::Numeric(b)) => a.cmp(b),
            _ => self.to_string().cmp(&other.to_string()),
        }
    }
}

impl PartialOrd for PreTag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PreTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreTag::Numeric(n) => write!(f, "{n}"),
            PreTag::Alpha(s) => f.write_str(s),
        }
    }
}

/// A parsed, normalized version. Equality and ordering ignore `raw`.
#[derive(Debug, Clone)]
pub struct Version {
    ecosystem: Ecosystem,
    major: u64,
    minor: u64,
    patch: u64,
    extra: Vec<u64>,
    prerelease: Vec<PreTag>,
    approximate: bool,
    raw: String,
}

impl Version {
    pub fn parse(ecosystem: Ecosystem, text: &str) -> Result<Version, VersionError> {
        parse_version(ecosystem, text)
    }

    pub fn ecosystem(&self) -> Ecosystem {
        self.ecosystem
    }

    pub fn major(&self) -> u64 {
        self.major
    }

    pub fn minor(&self) -> u64 {
        self.minor
    }

    pub fn patch(&self) -> u64 {
        self.patch
    }

    /// Release segments beyond the third (`1.2.3.4` → `[4]`), trailing zeros trimmed.
    pub fn extra(&self) -> &[u64] {
        &self.extra
    }

    pub fn prerelease(&self) -> &[PreTag] {
        &self.prerelease
    }

    pub fn is_prerelease(&self) -> bool {
        !self.prerelease.is_empty()
    }

    /// True when part of the input text could not be mapped onto the model.
    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// Canonical text form; parsing it again yields an equal version.
    pub fn normalized(&self) -> String {
        let mut out = format!("{}.{}.{}", self.major, self.minor, self.patch);
        for n in &self.extra {
            out.push('.');
            out.push_str(&n.to_string());
        }
        if !self.prerelease.is_empty() {
            out.push('-');
            let tags: Vec<String> = self.prerelease.iter().map(ToString::to_string).collect();
            out.push_str(&tags.join("."));
        }
        out
    }

    fn cmp_within(&self, other: &Version) -> Ordering {
        self.major
            .cmp(&other.major)
            .then(self.minor.cmp(&other.minor))
            .then(self.patch.cmp(&other.patch))
            .then_with(|| self.extra.cmp(&other.extra))
            .then_with(
                || match (self.prerelease.is_empty(), other.prerelease.is_empty()) {
                    (true, true) => Ordering::Equal,
                    (true, false) => Ordering::Greater,
                    (false, true) => Ordering::Less,
                    (false, false) => self.prerelease.cmp(&other.prerelease),
                },
            )
    }
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Version {}

impl Hash for Version {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.ecosystem.hash(state);
        self.major.hash(state);
        self.minor.hash(state);
        self.patch.hash(state);
        self.extra.hash(state);
        self.prerelease.hash(state);
    }
}

/// Total order for use in sorted collections: ecosystem first, then version
/// precedence. Use [`compare`] when mixing ecosystems is an error.
impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ecosystem
            .cmp(&other.ecosystem)
            .then_with(|| self.cmp_within(other))
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

#[derive(Serialize, Deserialize)]
struct VersionRepr {
    ecosystem: Ecosystem,
    raw: String,
}

impl Serialize for Version {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        VersionRepr {
            ecosystem: self.ecosystem,
            raw: self.raw.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = VersionRepr::deserialize(deserializer)?;
        parse_version(repr.ecosystem, &repr.raw).map_err(D::Error::custom)
    }
}

/// Ecosystems whose prerelease text splits at letter/digit boundaries
/// (`1.0a1` → `a.1`) and compares case-insensitively.
fn splits_alnum(ecosystem: Ecosystem) -> bool {
    matches!(
        ecosystem,
        Ecosystem::PyPi | Ecosystem::Maven | Ecosystem::RubyGems | Ecosystem::Packagist
    )
}

pub fn parse_version(ecosystem: Ecosystem, text: &str) -> Result<Version, VersionError> {
    let unparseable = || VersionError::Unparseable {
        ecosystem,
        text: text.to_string(),
    };

    let mut s = text.trim().trim_start_matches('\u{feff}');
    s = s.strip_prefix('=').unwrap_or(s).trim_start();
    if let Some(rest) = s.strip_prefix(['v', 'V']) {
        if rest.starts_with(|c: char| c.is_ascii_digit()) {
            s = rest;
        }
    }
    // build metadata, PEP 440 local labels, Go +incompatible
    if let Some(idx) = s.find('+') {
        s = &s[..idx];
    }
    if ecosystem == Ecosystem::PyPi {
        if let Some(idx) = s.find('!') {
            if idx > 0 && s[..idx].bytes().all(|b| b.is_ascii_digit()) {
                s = &s[idx + 1..];
            }
        }
    }

    let mut release = Vec::new();
    let mut rest = s;
    loop {
        let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            if release.is_empty() {
                return Err(unparseable());
            }
            break;
        }
        let n: u64 = rest[..digits].parse().map_err(|_| unparseable())?;
        release.push(n);
        rest = &rest[digits..];
        match rest.strip_prefix('.') {
            Some(after) if after.starts_with(|c: char| c.is_ascii_digit()) => rest = after,
            _ => break,
        }
    }

    let (prerelease, approximate) = parse_qualifier(ecosystem, rest);

    let mut extra: Vec<u64> = release.iter().skip(3).copied().collect();
    while extra.last() == Some(&0) {
        extra.pop();
    }
    Ok(Version {
        ecosystem,
        major: release[0],
        minor: release.get(1).copied().unwrap_or(0),
        patch: release.get(2).copied().unwrap_or(0),
        extra,
        prerelease,
        approximate,
        raw: text.trim().to_string(),
    })
}

fn parse_qualifier(ecosystem: Ecosystem, rest: &str) -> (Vec<PreTag>, bool) {
    if rest.is_empty() {
        return (Vec::new(), false);
    }
    let mut approximate = false;
    let mut tokens: Vec<String> = Vec::new();
    for piece in rest.split(|c: char| !c.is_ascii_alphanumeric()) {
        if piece.is_empty() {
            continue;
        }
        if splits_alnum(ecosystem) {
            let mut current = String::new();
            for c in piece.chars() {
                let boundary = current
                    .chars()
                    .last()
                    .is_some_and(|p| p.is_ascii_digit() != c.is_ascii_digit());
                if boundary {
                    tokens.push(std::mem::take(&mut current));
                }
                current.push(c);
            }
            tokens.push(current);
        } else {
            tokens.push(piece.to_string());
        }
    }
    if rest
        .chars()
        .any(|c| !c.is_ascii_alphanumeric() && !matches!(c, '.' | '-' | '_'))
    {
        approximate = true;
    }

    let fold = splits_alnum(ecosystem);
    if fold {
        for t in tokens.iter_mut() {
            t.make_ascii_lowercase();
        }
    }

    match ecosystem {
        Ecosystem::PyPi => {
            let mut kept = Vec::new();
            let mut iter = tokens.into_iter().peekable();
            while let Some(t) = iter.next() {
                match t.as_str() {
                    // post-releases sort after the release; the model has no slot for that
                    "post" | "rev" | "r" => {
                        approximate = true;
                        if iter
                            .peek()
                            .is_some_and(|n| n.bytes().all(|b| b.is_ascii_digit()))
                        {
                            iter.next();
                        }
                    }
                    "alpha" => kept.push("a".to_string()),
                    "beta" => kept.push("b".to_string()),
                    "c" | "pre" | "preview" => kept.push("rc".to_string()),
                    _ => kept.push(t),
                }
            }
            tokens = kept;
        }
        Ecosystem::Maven => {
            if tokens.len() == 1 && matches!(tokens[0].as_str(), "final" | "ga" | "release") {
                tokens.clear();
            }
            for t in tokens.iter_mut() {
                if t == "cr" {
                    *t = "rc".to_string();
                }
            }
        }
        _ => {}
    }

    let tags = tokens.iter().map(|t| PreTag::parse(t, fold)).collect();
    (tags, approximate)
}

/// Precedence of two versions of the same ecosystem.
pub fn compare(a: &Version, b: &Version) -> Result<Ordering, VersionError> {
    if a.ecosystem != b.ecosystem {
        return Err(VersionError::EcosystemMismatch {
            left: a.ecosystem,
            right: b.ecosystem,
        });
    }
    Ok(a.cmp_within(b))
}

/// Half-open interval `[introduced, fixed)`; `fixed = None` is unbounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub introduced: Version,
    pub fixed: Option<Version>,
}

impl Interval {
    pub fn contains(&self, v: &Version) -> bool {
        self.introduced.cmp_within(v) != Ordering::Greater
            && self
                .fixed
                .as_ref()
                .is_none_or(|f| v.cmp_within(f) == Ordering::Less)
    }
}

/// Sorted, non-overlapping set of affected intervals for one ecosystem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionRange {
    ecosystem: Ecosystem,
    intervals: Vec<Interval>,
}

impl VersionRange {
    /// Builds a range, sorting intervals and merging any that overlap or touch.
    pub fn new(ecosystem: Ecosystem, mut intervals: Vec<Interval>) -> Result<Self, VersionError> {
        for iv in &intervals {
            for v in std::iter::once(&iv.introduced).chain(iv.fixed.as_ref()) {
                if v.ecosystem != ecosystem {
                    return Err(VersionError::EcosystemMismatch {
                        left: ecosystem,
                        right: v.ecosystem,
                    });
                }
            }
            if let Some(fixed) = &iv.fixed {
                if fixed.cmp_within(&iv.introduced) != Ordering::Greater {
                    return Err(VersionError::EmptyInterval {
                        introduced: iv.introduced.raw.clone(),
                        fixed: fixed.raw.clone(),
                    });
                }
            }
        }
        intervals.sort_by(|a, b| a.introduced.cmp_within(&b.introduced));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            if let Some(last) = merged.last_mut() {
                let touches = match &last.fixed {
                    None => true,
                    Some(f) => iv.introduced.cmp_within(f) != Ordering::Greater,
                };
                if touches {
                    last.fixed = match (last.fixed.take(), iv.fixed) {
                        (Some(a), Some(b)) => Some(if a.cmp_within(&b) == Ordering::Less {
                            b
                        } else {
                            a
                        }),
                        _ => None,
                    };
                    continue;
                }
            }
            merged.push(iv);
        }
        Ok(VersionRange {
            ecosystem,
            intervals: merged,
        })
    }

    /// Convenience constructor from `(introduced, fixed)` text pairs.
    pub fn from_strs(
        ecosystem: Ecosystem,
        pairs: &[(&str, Option<&str>)],
    ) -> Result<Self, VersionError> {
        let intervals = pairs
            .iter()
            .map(|(i, f)| {
                Ok(Interval {
                    introduced: parse_version(ecosystem, i)?,
                    fixed: f.map(|f| parse_version(ecosystem, f)).transpose()?,
                })
            })
            .collect::<Result<Vec<_>, VersionError>>()?;
        VersionRange::new(ecosystem, intervals)
    }

    pub fn ecosystem(&self) -> Ecosystem {
        self.ecosystem
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains(&self, v: &Version) -> Result<bool, VersionError> {
        if v.ecosystem != self.ecosystem {
            return Err(VersionError::EcosystemMismatch {
                left: self.ecosystem,
                right: v.ecosystem,
            });
        }
        // intervals are sorted and disjoint: only the last one starting at or below v can hold it
        let idx = self
            .intervals
            .partition_point(|iv| iv.introduced.cmp_within(v) != Ordering::Greater);
        Ok(idx > 0 && self.intervals[idx - 1].contains(v))
    }
}

pub fn range_contains(range: &VersionRange, v: &Version) -> Result<bool, VersionError> {
    range.contains(v)
}

/// Size of the upgrade step from a vulnerable release to its patched target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemediationBucket {
    BugFix,
    Minor,
    Major,
    Other,
}

impl RemediationBucket {
    pub const ALL: [RemediationBucket; 4] = [
        RemediationBucket::BugFix,
        RemediationBucket::Minor,
        RemediationBucket::Major,
        RemediationBucket::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RemediationBucket::BugFix => "Bug-fix",
            RemediationBucket::Minor => "Minor",
            RemediationBucket::Major => "Major",
            RemediationBucket::Other => "Other",
        }
    }
}

pub fn remediation_bucket(vulnerable: &Version, patched: Option<&Version>) -> RemediationBucket {
    let Some(patched) = patched else {
        return RemediationBucket::Other;
    };
    if vulnerable.ecosystem != patched.ecosystem
        || vulnerable.is_prerelease()
        || patched.is_prerelease()
        || vulnerable.approximate
        || patched.approximate
        || patched.cmp_within(vulnerable) != Ordering::Greater
    {
        return RemediationBucket::Other;
    }
    if patched.major != vulnerable.major {
        RemediationBucket::Major
    } else if patched.minor != vulnerable.minor {
        RemediationBucket::Minor
    } else if patched.patch != vulnerable.patch {
        RemediationBucket::BugFix
    } else {
        // only a fourth-or-later segment moved
        RemediationBucket::Other
    }
}
