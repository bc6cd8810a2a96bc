use super::{malformed, DeclSink, ManifestError, Scope};

/// Handles one `path version [// comment]` requirement line.
fn require_line(body: &str, line: usize, sink: &mut DeclSink<'_>) -> Result<(), ManifestError> {
    let (spec, comment) = match body.split_once("//") {
        Some((s, c)) => (s.trim(), Some(c.trim())),
        None => (body.trim(), None),
    };
    if spec.is_empty() {
        return Ok(());
    }
    let fields: Vec<&str> = spec.split_whitespace().collect();
    let [module, version] = fields.as_slice() else {
        return Err(malformed(
            sink.path(),
            Some(line),
            format!("expected `module version`, got {spec:?}"),
        ));
    };
    if comment.is_some_and(|c| c.split(';').any(|p| p.trim() == "indirect")) {
        sink.skipped.indirect += 1;
        return Ok(());
    }
    sink.push(module.trim_matches('"'), version, Scope::Runtime, line);
    Ok(())
}

pub(super) fn parse(text: &str, sink: &mut DeclSink<'_>) -> Result<(), ManifestError> {
    // directive of the currently open `( ... )` block, if any
    let mut block: Option<(String, usize)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with("//") {
            sink.skipped.comments += 1;
            continue;
        }
        if let Some((directive, _)) = &block {
            if trimmed == ")" {
                block = None;
            } else if directive == "require" {
                require_line(trimmed, line, sink)?;
            }
            continue;
        }
        let (directive, rest) = trimmed
            .split_once(char::is_whitespace)
            .map_or((trimmed, ""), |(d, r)| (d, r.trim()));
        match (directive, rest) {
            (d, "(") => block = Some((d.to_string(), line)),
            ("require", rest) => require_line(rest, line, sink)?,
            ("module" | "go" | "toolchain" | "replace" | "exclude" | "retract" | "godebug", _) => {}
            (")", _) => return Err(malformed(sink.path(), Some(line), "unbalanced `)`")),
            (other, _) => {
                return Err(malformed(
                    sink.path(),
                    Some(line),
                    format!("unknown directive {other:?}"),
                ));
            }
        }
    }
    if let Some((directive, opened)) = block {
        return Err(malformed(
            sink.path(),
            Some(opened),
            format!("unterminated `{directive} (` block"),
        ));
    }
    Ok(())
}
