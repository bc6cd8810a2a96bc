use std::sync::LazyLock;

use regex::Regex;

use super::{malformed, DeclSink, ManifestError, Scope};

static GEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"^gem\s*\(?\s*['"]([^'"]+)['"]\s*(.*?)\)?\s*$"#).unwrap());
static GROUP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^group\s*\(?(.*?)\)?\s+do\b").unwrap());
static BLOCK_OPENER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(\bdo\s*(\|[^|]*\|)?\s*$)|^(if|unless|case|begin|while|until)\b").unwrap()
});
static SYMBOL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#":?['"]?([A-Za-z_]+)['"]?"#).unwrap());

const DEV_GROUPS: [&str; 2] = ["development", "test"];

fn group_names(text: &str) -> Vec<String> {
    SYMBOL
        .captures_iter(text)
        .map(|c| c[1].to_string())
        .filter(|n| n != "do")
        .collect()
}

fn scope_of(groups: &[String]) -> Scope {
    if !groups.is_empty() && groups.iter().all(|g| DEV_GROUPS.contains(&g.as_str())) {
        Scope::Dev
    } else {
        Scope::Runtime
    }
}

/// Splits on commas outside quotes and brackets.
fn split_args(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    let mut depth = 0i32;
    for c in text.chars() {
        match (quote, c) {
            (Some(q), c) if c == q => {
                quote = None;
                current.push(c);
            }
            (Some(_), c) => current.push(c),
            (None, '\'' | '"') => {
                quote = Some(c);
                current.push(c);
            }
            (None, '[' | '{' | '(') => {
                depth += 1;
                current.push(c);
            }
            (None, ']' | '}' | ')') => {
                depth -= 1;
                current.push(c);
            }
            (None, ',') if depth == 0 => out.push(std::mem::take(&mut current)),
            (None, c) => current.push(c),
        }
    }
    if !current.trim().is_empty() {
        out.push(current);
    }
    out.into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// `key: value` or `:key => value`.
fn option_of(arg: &str) -> Option<(String, String)> {
    if let Some((k, v)) = arg.split_once("=>") {
        return Some((
            k.trim()
                .trim_start_matches(':')
                .trim_matches(['"', '\''])
                .to_string(),
            v.trim().to_string(),
        ));
    }
    let (k, v) = arg.split_once(':')?;
    let k = k.trim();
    if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    Some((k.to_string(), v.trim().to_string()))
}

pub(super) fn parse(text: &str, sink: &mut DeclSink<'_>) -> Result<(), ManifestError> {
    // each open block carries the groups it contributes (empty for non-group blocks)
    let mut blocks: Vec<(Vec<String>, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            sink.skipped.comments += 1;
            continue;
        }
        let code = match trimmed.find(" #") {
            Some(i) => trimmed[..i].trim_end(),
            None => trimmed,
        };
        if code == "end" {
            if blocks.pop().is_none() {
                return Err(malformed(
                    sink.path(),
                    Some(line),
                    "`end` without an open block",
                ));
            }
            continue;
        }
        if let Some(caps) = GROUP.captures(code) {
            blocks.push((group_names(&caps[1]), line));
            continue;
        }
        if let Some(caps) = GEM.captures(code) {
            let name = caps[1].to_string();
            let mut constraints = Vec::new();
            let mut groups: Vec<String> = blocks.iter().flat_map(|(g, _)| g.clone()).collect();
            let mut non_registry = false;
            for arg in split_args(&caps[2]) {
                if let Some((key, value)) = option_of(&arg) {
                    match key.as_str() {
                        "group" | "groups" => groups = group_names(&value),
                        "path" | "git" | "github" | "gitlab" | "bitbucket" => non_registry = true,
                        _ => {}
                    }
                } else if let Some(s) = arg
                    .strip_prefix(['\'', '"'])
                    .and_then(|a| a.strip_suffix(['\'', '"']))
                {
                    constraints.push(s.trim().to_string());
                } else {
                    return Err(malformed(
                        sink.path(),
                        Some(line),
                        format!("unreadable gem argument {arg:?}"),
                    ));
                }
            }
            if non_registry {
                sink.skipped.non_registry += 1;
                continue;
            }
            sink.push(&name, &constraints.join(", "), scope_of(&groups), line);
            continue;
        }
        if BLOCK_OPENER.is_match(code) {
            blocks.push((Vec::new(), line));
        }
    }
    if let Some((_, opened)) = blocks.last() {
        return Err(malformed(
            sink.path(),
            Some(*opened),
            "block is never closed with `end`",
        ));
    }
    Ok(())
}
