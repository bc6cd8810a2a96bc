use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use super::{malformed, DeclSink, ManifestError, Scope};

// name [extras] specifier ; markers
static REQUIREMENT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?P<name>[A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?)\s*(?:\[[^\]]*\])?\s*(?P<spec>[^;]*?)\s*(?:;.*)?$").unwrap()
});

fn scope_for(path: &str) -> Scope {
    let p = Path::new(path);
    let stem = p
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase();
    let dev_words = ["dev", "test", "lint", "docs"];
    let tokens: Vec<&str> = stem.split(['-', '_', '.']).collect();
    if tokens.iter().any(|t| dev_words.contains(t)) {
        Scope::Dev
    } else {
        Scope::Runtime
    }
}

fn strip_comment(line: &str) -> (&str, bool) {
    if line.trim_start().starts_with('#') {
        return ("", true);
    }
    match line.find(" #").or_else(|| line.find("\t#")) {
        Some(idx) => (&line[..idx], false),
        None => (line, false),
    }
}

pub(super) fn parse(text: &str, sink: &mut DeclSink<'_>) -> Result<(), ManifestError> {
    let scope = scope_for(sink.path());
    let mut logical = String::new();
    let mut start_line = 0;
    for (idx, raw_line) in text.lines().enumerate() {
        if logical.is_empty() {
            start_line = idx + 1;
        }
        let (line, was_comment) = strip_comment(raw_line);
        if was_comment {
            sink.skipped.comments += 1;
            if logical.is_empty() {
                continue;
            }
        }
        if let Some(cont) = line.trim_end().strip_suffix('\\') {
            logical.push_str(cont);
            logical.push(' ');
            continue;
        }
        logical.push_str(line);
        let entry = std::mem::take(&mut logical);
        parse_entry(entry.trim(), start_line, scope, sink)?;
    }
    if !logical.trim().is_empty() {
        parse_entry(logical.trim(), start_line, scope, sink)?;
    }
    Ok(())
}

fn parse_entry(
    entry: &str,
    line: usize,
    scope: Scope,
    sink: &mut DeclSink<'_>,
) -> Result<(), ManifestError> {
    if entry.is_empty() {
        return Ok(());
    }
    if entry.starts_with('-') {
        // -e/--editable installs from a path or VCS; other options configure pip
        if entry.starts_with("-e") || entry.starts_with("--editable") {
            sink.skipped.non_registry += 1;
        }
        return Ok(());
    }
    let lower = entry.to_ascii_lowercase();
    let looks_like_location = [
        "git+", "hg+", "svn+", "bzr+", "http://", "https://", "file:", "./", "../", "/",
    ]
    .iter()
    .any(|p| lower.starts_with(p));
    // PEP 508 direct references: `name @ url`
    if looks_like_location || entry.contains('@') {
        sink.skipped.non_registry += 1;
        return Ok(());
    }
    let caps = REQUIREMENT.captures(entry).ok_or_else(|| {
        malformed(
            sink.path(),
            Some(line),
            format!("unreadable requirement {entry:?}"),
        )
    })?;
    let name = &caps["name"];
    let mut spec = caps["spec"].trim();
    if let Some(inner) = spec.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
        spec = inner.trim();
    }
    let spec = spec.split_whitespace().collect::<String>();
    if !spec.is_empty() && !spec.starts_with(['=', '<', '>', '!', '~']) {
        return Err(malformed(
            sink.path(),
            Some(line),
            format!("unreadable specifier in {entry:?}"),
        ));
    }
    sink.push(name, &spec, scope, line);
    Ok(())
}
