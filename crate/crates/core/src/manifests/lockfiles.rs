use serde_json::Value as Json;
use toml::Value as Toml;

use super::{malformed, strip_bom, ManifestError, ManifestFormat};
use crate::ecosystem::{normalize_name, Ecosystem};
use crate::version::{parse_version, Version};

type Pairs = Vec<(String, Version)>;

/// Resolved `(name, version)` pairs recorded in a lockfile, transitive
/// entries included. Sorted and deduplicated.
pub fn parse_lockfile(format: ManifestFormat, text: &str) -> Result<Pairs, ManifestError> {
    let path = match format {
        ManifestFormat::NpmLockfile => "package-lock.json",
        ManifestFormat::PythonLockfile => "python lockfile",
        other => return Err(ManifestError::NotALockfile { format: other }),
    };
    let body = strip_bom(text);
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut pairs = match format {
        ManifestFormat::NpmLockfile => npm(body, path)?,
        _ if body.trim_start().starts_with('{') => pipfile(body, path)?,
        _ => toml_packages(body, path)?,
    };
    pairs.sort();
    pairs.dedup();
    Ok(pairs)
}

fn push(
    eco: Ecosystem,
    out: &mut Pairs,
    path: &str,
    name: &str,
    version: &str,
) -> Result<(), ManifestError> {
    let v =
        parse_version(eco, version).map_err(|e| malformed(path, None, format!("{name}: {e}")))?;
    out.push((normalize_name(eco, name), v));
    Ok(())
}

fn npm(text: &str, path: &str) -> Result<Pairs, ManifestError> {
    let root: Json =
        serde_json::from_str(text).map_err(|e| malformed(path, Some(e.line()), e.to_string()))?;
    let mut out = Vec::new();
    if let Some(packages) = root.get("packages").and_then(Json::as_object) {
        for (key, entry) in packages {
            // "" is the root project; entries without node_modules/ are workspace folders
            let Some(idx) = key.rfind("node_modules/") else {
                continue;
            };
            if entry.get("link").and_then(Json::as_bool) == Some(true) {
                continue;
            }
            let name = entry
                .get("name")
                .and_then(Json::as_str)
                .unwrap_or(&key[idx + "node_modules/".len()..]);
            let Some(version) = entry.get("version").and_then(Json::as_str) else {
                continue;
            };
            push(Ecosystem::Npm, &mut out, path, name, version)?;
        }
        return Ok(out);
    }
    if let Some(deps) = root.get("dependencies").and_then(Json::as_object) {
        npm_v1(deps, path, &mut out)?;
    }
    Ok(out)
}

fn npm_v1(
    deps: &serde_json::Map<String, Json>,
    path: &str,
    out: &mut Pairs,
) -> Result<(), ManifestError> {
    for (name, entry) in deps {
        if let Some(version) = entry.get("version").and_then(Json::as_str) {
            // file:, git and link entries record a location instead of a version
            if !version.contains(':') && !version.contains('/') {
                push(Ecosystem::Npm, out, path, name, version)?;
            }
        }
        if let Some(nested) = entry.get("dependencies").and_then(Json::as_object) {
            npm_v1(nested, path, out)?;
        }
    }
    Ok(())
}

fn pipfile(text: &str, path: &str) -> Result<Pairs, ManifestError> {
    let root: Json =
        serde_json::from_str(text).map_err(|e| malformed(path, Some(e.line()), e.to_string()))?;
    let mut out = Vec::new();
    for section in ["default", "develop"] {
        let Some(entries) = root.get(section).and_then(Json::as_object) else {
            continue;
        };
        for (name, entry) in entries {
            let Some(version) = entry.get("version").and_then(Json::as_str) else {
                continue;
            };
            let version = version.trim_start_matches("===").trim_start_matches("==");
            push(Ecosystem::PyPi, &mut out, path, name, version)?;
        }
    }
    Ok(out)
}

/// poetry.lock and uv.lock: `[[package]]` tables with `name` and `version`.
fn toml_packages(text: &str, path: &str) -> Result<Pairs, ManifestError> {
    let root: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        malformed(path, line, e.message().to_string())
    })?;
    let mut out = Vec::new();
    let Some(packages) = root.get("package") else {
        return Ok(out);
    };
    let Toml::Array(packages) = packages else {
        return Err(malformed(path, None, "`package` is not an array of tables"));
    };
    for pkg in packages {
        let (Some(name), Some(version)) = (
            pkg.get("name").and_then(Toml::as_str),
            pkg.get("version").and_then(Toml::as_str),
        ) else {
            continue;
        };
        let local = pkg.get("source").is_some_and(|s| {
            ["editable", "virtual", "directory", "path"]
                .iter()
                .any(|k| s.get(k).is_some())
                || s.get("type")
                    .and_then(Toml::as_str)
                    .is_some_and(|t| matches!(t, "directory" | "file" | "git"))
        });
        if !local {
            push(Ecosystem::PyPi, &mut out, path, name, version)?;
        }
    }
    Ok(out)
}
