use serde_json::Value;

use super::{json_key_line, malformed, DeclSink, ManifestError, Scope};

/// Platform requirements are not installable packages.
fn is_platform(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    matches!(
        lower.as_str(),
        "php"
            | "php-64bit"
            | "php-ipv6"
            | "php-zts"
            | "php-debug"
            | "hhvm"
            | "composer"
            | "composer-plugin-api"
            | "composer-runtime-api"
    ) || lower.starts_with("ext-")
        || lower.starts_with("lib-")
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
    for (section, scope) in [("require", Scope::Runtime), ("require-dev", Scope::Dev)] {
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
            if is_platform(name) || spec.starts_with("dev-") {
                sink.skipped.non_registry += 1;
                continue;
            }
            let line = json_key_line(text, section, name);
            sink.push(name, spec, scope, line);
        }
    }
    Ok(())
}
