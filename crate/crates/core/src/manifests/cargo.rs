use toml::{Table, Value};

use super::{malformed, DeclSink, ManifestError, Scope};

const SECTIONS: [(&str, Scope); 3] = [
    ("dependencies", Scope::Runtime),
    ("dev-dependencies", Scope::Dev),
    ("build-dependencies", Scope::Dev),
];

/// 1-based line of `key` inside a table whose header ends with `section`,
/// or of a `[section.key]` header.
fn key_line(text: &str, section: &str, key: &str) -> usize {
    let mut in_section = false;
    let dotted_header = format!("{section}.{key}");
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(header) = trimmed.strip_prefix('[').and_then(|h| h.split(']').next()) {
            let header = header.trim();
            if header == dotted_header || header.ends_with(&format!(".{dotted_header}")) {
                return idx + 1;
            }
            in_section = header == section || header.ends_with(&format!(".{section}"));
            continue;
        }
        if in_section {
            let lhs = trimmed.trim_start_matches('"');
            if let Some(rest) = lhs.strip_prefix(key) {
                let rest = rest.trim_start_matches('"').trim_start();
                if rest.starts_with('=') || rest.starts_with('.') {
                    return idx + 1;
                }
            }
        }
    }
    1
}

fn collect(table: &Table, text: &str, sink: &mut DeclSink<'_>) -> Result<(), ManifestError> {
    for (section, scope) in SECTIONS {
        let Some(entries) = table.get(section) else {
            continue;
        };
        let Value::Table(entries) = entries else {
            return Err(malformed(
                sink.path(),
                None,
                format!("`{section}` is not a table"),
            ));
        };
        for (key, value) in entries {
            let line = key_line(text, section, key);
            match value {
                Value::String(spec) => sink.push(key, spec, scope, line),
                Value::Table(detail) => {
                    let version = detail.get("version").and_then(Value::as_str);
                    let local = detail.contains_key("path") || detail.contains_key("git");
                    let workspace = detail.get("workspace").and_then(Value::as_bool) == Some(true);
                    let Some(version) = version.filter(|_| !local && !workspace) else {
                        sink.skipped.non_registry += 1;
                        continue;
                    };
                    let name = detail.get("package").and_then(Value::as_str).unwrap_or(key);
                    let optional = detail.get("optional").and_then(Value::as_bool) == Some(true);
                    let scope = if optional && scope == Scope::Runtime {
                        Scope::Optional
                    } else {
                        scope
                    };
                    sink.push(name, version, scope, line);
                }
                _ => {
                    return Err(malformed(
                        sink.path(),
                        Some(line),
                        format!("`{section}.{key}` is neither a string nor a table"),
                    ))
                }
            }
        }
    }
    Ok(())
}

pub(super) fn parse(text: &str, sink: &mut DeclSink<'_>) -> Result<(), ManifestError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        malformed(sink.path(), line, e.message().to_string())
    })?;
    collect(&root, text, sink)?;
    if let Some(Value::Table(targets)) = root.get("target") {
        for target in targets.values() {
            if let Value::Table(t) = target {
                collect(t, text, sink)?;
            }
        }
    }
    Ok(())
}
