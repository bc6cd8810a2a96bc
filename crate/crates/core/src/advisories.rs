//! Advisory snapshot index with reference-date queries.
//!
//! An advisory counts at a reference date when `published <= ref_date`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::ecosystem::{normalize_name, Ecosystem};
use crate::time::{format_utc, parse_utc, Timestamp};
use crate::version::{parse_version, Interval, Version, VersionRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    Moderate,
    High,
    Critical,
}

impl Severity {
    /// Highest first, the order severity tables are printed in.
    pub const DESCENDING: [Severity; 4] = [
        Severity::Critical,
        Severity::High,
        Severity::Moderate,
        Severity::Low,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Severity::Critical => "Critical",
            Severity::High => "High",
            Severity::Moderate => "Moderate",
            Severity::Low => "Low",
        }
    }

    pub fn from_cvss(score: f64) -> Severity {
        if score >= 9.0 {
            Severity::Critical
        } else if score >= 7.0 {
            Severity::High
        } else if score >= 4.0 {
            Severity::Moderate
        } else {
            Severity::Low
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Severity {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "critical" => Ok(Severity::Critical),
            "high" => Ok(Severity::High),
            "moderate" | "medium" => Ok(Severity::Moderate),
            "low" => Ok(Severity::Low),
            _ => Err(()),
        }
    }
}

/// A validated advisory. `first_patched` is never inside `affected`, and at
/// least one of `cvss_score` and `severity_label` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Advisory {
    pub id: String,
    pub ecosystem: Ecosystem,
    pub package: String,
    pub published: Timestamp,
    pub cvss_score: Option<f64>,
    pub severity_label: Option<Severity>,
    pub affected: VersionRange,
    pub first_patched: Option<Version>,
}

/// Explicit label wins over the CVSS score.
pub fn severity_of(a: &Advisory) -> Severity {
    match (a.severity_label, a.cvss_score) {
        (Some(label), _) => label,
        (None, Some(score)) => Severity::from_cvss(score),
        (None, None) => Severity::Low,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdvisoryError {
    #[error("advisory record {ordinal}: invalid or missing `{field}`")]
    SchemaViolation { ordinal: usize, field: String },
    #[error("advisory snapshot: {0}")]
    Io(String),
}

fn violation(ordinal: usize, field: &str) -> AdvisoryError {
    AdvisoryError::SchemaViolation {
        ordinal,
        field: field.to_string(),
    }
}

/// Snapshot-file shape of one advisory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryRecord {
    pub id: String,
    pub ecosystem: String,
    pub package: String,
    pub published: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cvss_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<String>,
    pub ranges: Vec<RangeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_patched: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeRecord {
    pub introduced: String,
    pub fixed: Option<String>,
}

impl Advisory {
    pub fn to_record(&self) -> AdvisoryRecord {
        AdvisoryRecord {
            id: self.id.clone(),
            ecosystem: self.ecosystem.as_str().to_string(),
            package: self.package.clone(),
            published: format_utc(&self.published),
            cvss_score: self.cvss_score,
            severity: self.severity_label.map(|s| s.label().to_ascii_lowercase()),
            ranges: self
                .affected
                .intervals()
                .iter()
                .map(|iv| RangeRecord {
                    introduced: iv.introduced.raw().to_string(),
                    fixed: iv.fixed.as_ref().map(|f| f.raw().to_string()),
                })
                .collect(),
            first_patched: self.first_patched.as_ref().map(|v| v.raw().to_string()),
        }
    }
}

impl Serialize for Advisory {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Advisory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(d)?;
        match validate(&value, 1).map_err(serde::de::Error::custom)? {
            Some(a) => Ok(a),
            None => Err(serde::de::Error::custom("unknown advisory ecosystem")),
        }
    }
}

fn str_field<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    ordinal: usize,
) -> Result<&'a str, AdvisoryError> {
    match obj.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s),
        _ => Err(violation(ordinal, key)),
    }
}

fn opt_str_field<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    ordinal: usize,
) -> Result<Option<&'a str>, AdvisoryError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        _ => Err(violation(ordinal, key)),
    }
}

/// Validates one record. `Ok(None)` means a well-formed record for an
/// ecosystem outside the supported set.
fn validate(value: &Value, ordinal: usize) -> Result<Option<Advisory>, AdvisoryError> {
    let obj = value
        .as_object()
        .ok_or_else(|| violation(ordinal, "record"))?;
    let id = str_field(obj, "id", ordinal)?.to_string();
    let Ok(ecosystem) = str_field(obj, "ecosystem", ordinal)?.parse::<Ecosystem>() else {
        return Ok(None);
    };
    let package = normalize_name(ecosystem, str_field(obj, "package", ordinal)?);
    let published = parse_utc(str_field(obj, "published", ordinal)?)
        .ok_or_else(|| violation(ordinal, "published"))?;
    let cvss_score = match obj.get("cvss_score") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => {
            let score = n.as_f64().filter(|s| (0.0..=10.0).contains(s));
            Some(score.ok_or_else(|| violation(ordinal, "cvss_score"))?)
        }
        _ => return Err(violation(ordinal, "cvss_score")),
    };
    let severity_label = opt_str_field(obj, "severity", ordinal)?
        .map(|s| {
            s.parse::<Severity>()
                .map_err(|_| violation(ordinal, "severity"))
        })
        .transpose()?;
    if cvss_score.is_none() && severity_label.is_none() {
        return Err(violation(ordinal, "severity"));
    }

    let ranges = match obj.get("ranges") {
        Some(Value::Array(items)) if !items.is_empty() => items,
        _ => return Err(violation(ordinal, "ranges")),
    };
    let mut intervals = Vec::with_capacity(ranges.len());
    for item in ranges {
        let range = item
            .as_object()
            .ok_or_else(|| violation(ordinal, "ranges"))?;
        let introduced = str_field(range, "introduced", ordinal)
            .ok()
            .and_then(|s| parse_version(ecosystem, s).ok())
            .ok_or_else(|| violation(ordinal, "ranges.introduced"))?;
        let fixed = opt_str_field(range, "fixed", ordinal)
            .map_err(|_| violation(ordinal, "ranges.fixed"))?
            .map(|s| parse_version(ecosystem, s).map_err(|_| violation(ordinal, "ranges.fixed")))
            .transpose()?;
        intervals.push(Interval { introduced, fixed });
    }
    let affected =
        VersionRange::new(ecosystem, intervals).map_err(|_| violation(ordinal, "ranges"))?;

    let first_patched = opt_str_field(obj, "first_patched", ordinal)?
        .map(|s| parse_version(ecosystem, s).map_err(|_| violation(ordinal, "first_patched")))
        .transpose()?;
    if let Some(fp) = &first_patched {
        if affected.contains(fp).unwrap_or(true) {
            return Err(violation(ordinal, "first_patched"));
        }
    }
    Ok(Some(Advisory {
        id,
        ecosystem,
        package,
        published,
        cvss_score,
        severity_label,
        affected,
        first_patched,
    }))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub loaded: usize,
    /// Records for ecosystems outside the supported set.
    pub skipped: usize,
    /// Earlier records overwritten by a later one with the same id.
    pub replaced: usize,
}

/// Immutable after construction; every advisory is reachable through its
/// `(ecosystem, package)` key, each list sorted by `(published, id)`.
#[derive(Debug, Clone, Default)]
pub struct AdvisoryStore {
    index: BTreeMap<(Ecosystem, String), Vec<Advisory>>,
}

impl AdvisoryStore {
    pub fn from_advisories(advisories: impl IntoIterator<Item = Advisory>) -> AdvisoryStore {
        let mut by_id: BTreeMap<String, Advisory> = BTreeMap::new();
        for a in advisories {
            by_id.insert(a.id.clone(), a);
        }
        let mut index: BTreeMap<(Ecosystem, String), Vec<Advisory>> = BTreeMap::new();
        for a in by_id.into_values() {
            index
                .entry((a.ecosystem, a.package.clone()))
                .or_default()
                .push(a);
        }
        for list in index.values_mut() {
            list.sort_by(|a, b| (a.published, &a.id).cmp(&(b.published, &b.id)));
        }
        AdvisoryStore { index }
    }

    pub fn len(&self) -> usize {
        self.index.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Advisories for one package, sorted by `(published, id)`.
    pub fn for_package(&self, ecosystem: Ecosystem, package: &str) -> &[Advisory] {
        self.index
            .get(&(ecosystem, normalize_name(ecosystem, package)))
            .map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Advisory> {
        self.index.values().flatten()
    }

    /// All advisories in snapshot-file form, ordered by key then `(published, id)`.
    pub fn export(&self) -> Vec<AdvisoryRecord> {
        self.iter().map(Advisory::to_record).collect()
    }
}

/// Builds a store from parsed records. Duplicate ids keep the last occurrence.
pub fn load_snapshot(
    records: impl IntoIterator<Item = Value>,
) -> Result<(AdvisoryStore, LoadReport), AdvisoryError> {
    let mut report = LoadReport::default();
    let mut by_id: BTreeMap<String, Advisory> = BTreeMap::new();
    for (idx, record) in records.into_iter().enumerate() {
        match validate(&record, idx + 1)? {
            None => report.skipped += 1,
            Some(a) => {
                if by_id.insert(a.id.clone(), a).is_some() {
                    report.replaced += 1;
                }
            }
        }
    }
    report.loaded = by_id.len();
    Ok((AdvisoryStore::from_advisories(by_id.into_values()), report))
}

/// Reads a JSON Lines snapshot; blank lines are ignored and do not count as
/// records.
pub fn load_jsonl(reader: impl BufRead) -> Result<(AdvisoryStore, LoadReport), AdvisoryError> {
    let mut values = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| AdvisoryError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value =
            serde_json::from_str(&line).map_err(|_| violation(values.len() + 1, "record"))?;
        values.push(value);
    }
    load_snapshot(values)
}

pub fn load_path(path: &std::path::Path) -> Result<(AdvisoryStore, LoadReport), AdvisoryError> {
    let file = std::fs::File::open(path)
        .map_err(|e| AdvisoryError::Io(format!("cannot read {}: {e}", path.display())))?;
    load_jsonl(std::io::BufReader::new(file))
}

/// Advisories affecting `version` that were published at or before `ref_date`,
/// sorted by `(published, id)`.
pub fn advisories_at<'s>(
    store: &'s AdvisoryStore,
    ecosystem: Ecosystem,
    package: &str,
    version: &Version,
    ref_date: Timestamp,
) -> Vec<&'s Advisory> {
    let list = store.for_package(ecosystem, package);
    let visible = list.partition_point(|a| a.published <= ref_date);
    list[..visible]
        .iter()
        .filter(|a| a.affected.contains(version).unwrap_or(false))
        .collect()
}

/// Smallest safe candidate at or above `from`; otherwise the smallest safe
/// candidate overall; `None` when every candidate is affected.
pub fn minimal_safe_version(
    store: &AdvisoryStore,
    ecosystem: Ecosystem,
    package: &str,
    from: &Version,
    ref_date: Timestamp,
    candidates: &[Version],
) -> Option<Version> {
    let mut safe: Vec<&Version> = candidates
        .iter()
        .filter(|c| c.ecosystem() == ecosystem)
        .filter(|c| advisories_at(store, ecosystem, package, c, ref_date).is_empty())
        .collect();
    safe.sort();
    safe.iter()
        .find(|c| ***c >= *from)
        .or(safe.first())
        .map(|v| (*v).clone())
}

/// Known releases per package, as supplied alongside an instance or corpus.
/// Keys are package names; values are version strings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReleaseCatalog {
    releases: BTreeMap<String, Vec<String>>,
}

impl ReleaseCatalog {
    pub fn new(releases: BTreeMap<String, Vec<String>>) -> ReleaseCatalog {
        ReleaseCatalog { releases }
    }

    pub fn from_json(text: &str) -> Result<ReleaseCatalog, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Parsed releases of `package`, sorted; unparseable strings are dropped.
    /// `None` when the catalog has no entry for the package.
    pub fn candidates(&self, ecosystem: Ecosystem, package: &str) -> Option<Vec<Version>> {
        let wanted = normalize_name(ecosystem, package);
        let (_, raw) = self
            .releases
            .iter()
            .find(|(name, _)| normalize_name(ecosystem, name) == wanted)?;
        let mut out: Vec<Version> = raw
            .iter()
            .filter_map(|r| parse_version(ecosystem, r).ok())
            .collect();
        out.sort();
        out.dedup();
        Some(out)
    }

    pub fn is_empty(&self) -> bool {
        self.releases.is_empty()
    }
}
