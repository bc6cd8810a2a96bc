use serde_json::Value;

use super::{json_key_line, malformed, DeclSink, ManifestError, Scope};

const SECTIONS: [(&str, Scope); 3] = [
    ("dependencies", Scope::Runtime),
    ("devDependencies", Scope::Dev),
    ("optionalDependencies", Scope::Optional),
];

fn is_registry_spec(spec: &str) -> bool {
    let spec = spec.trim();
    let non_registry = [
        "file:",
        "link:",
        "git",
        "github:",
        "gitlab:",
        "bitbucket:",
        "http:",
        "https:",
        "workspace:",
        "portal:",
        "patch:",
    ];
    if non_registry.iter().any(|p| spec.starts_with(p)) {
        return false;
    }
    // "user/repo" GitHub shorthand
    !(spec.contains('/') && !spec.starts_with("npm:"))
}

pub(super) fn parse(text: &str, sink: &mut DeclSink<'_>) -> Result<(), ManifestError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| malformed(sink.path(), Some(e.line()), e.to_string()))?;
    let Value::Object(root) = root else {
        return Err(malformed(
            sink.path(),
            None,
            "top level is not a JSON object",
        ));
    };
    for (section, scope) in SECTIONS {
        let Some(entries) = root.get(section) else {
            continue;
        };
        let Value::Object(entries) = entries else {
            return Err(malformed(
                sink.path(),
                None,
                format!("`{section}` is not an object"),
            ));
        };
        for (name, spec) in entries {
            let Value::String(spec) = spec else {
                return Err(malformed(
                    sink.path(),
                    None,
                    format!("`{section}.{name}` is not a string"),
                ));
            };
            if !is_registry_spec(spec) {
                sink.skipped.non_registry += 1;
                continue;
            }
            let line = json_key_line(text, section, name);
            sink.push(name, spec, scope, line);
        }
    }
    Ok(())
}
