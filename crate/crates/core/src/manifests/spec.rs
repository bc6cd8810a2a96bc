//! Version-specifier helpers: exact-pin extraction and a small comparator
//! evaluator. Caret, tilde, wildcard and union syntax are not resolved.

use std::cmp::Ordering;
use std::sync::LazyLock;

use regex::Regex;

use crate::ecosystem::Ecosystem;
use crate::version::{compare, parse_version, Version};

static FULL_SEMVER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^v?\d+\.\d+\.\d+(-[0-9A-Za-z.-]+)?(\+[0-9A-Za-z.-]+)?$").unwrap()
});
static LOOSE_VERSION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^v?\d+(\.\d+)*([.\-_+]?[0-9A-Za-z][0-9A-Za-z.\-_+]*)?$").unwrap()
});

fn clean_version(eco: Ecosystem, text: &str) -> Option<Version> {
    let text = text.trim();
    if !LOOSE_VERSION.is_match(text) {
        return None;
    }
    parse_version(eco, text)
        .ok()
        .filter(|v| !v.is_approximate())
}

/// The single version a specifier admits, if it admits exactly one.
pub fn pinned_version(eco: Ecosystem, spec: &str) -> Option<Version> {
    let spec = spec.trim();
    match eco {
        Ecosystem::Npm => {
            let body = spec.strip_prefix('=').unwrap_or(spec).trim();
            FULL_SEMVER
                .is_match(body)
                .then(|| clean_version(eco, body))
                .flatten()
        }
        Ecosystem::Cargo => {
            let body = spec.strip_prefix('=')?.trim();
            FULL_SEMVER
                .is_match(body)
                .then(|| clean_version(eco, body))
                .flatten()
        }
        Ecosystem::PyPi => {
            let body = spec
                .strip_prefix("===")
                .or_else(|| spec.strip_prefix("=="))?
                .trim();
            if body.contains(['*', ',']) {
                return None;
            }
            clean_version(eco, body)
        }
        Ecosystem::Maven => {
            if spec.contains("${") {
                return None;
            }
            if let Some(inner) = spec.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                if inner.contains(',') {
                    return None;
                }
                return clean_version(eco, inner);
            }
            if spec.contains(['[', '(', ')', ']', ',']) {
                return None;
            }
            clean_version(eco, spec)
        }
        Ecosystem::Go => clean_version(eco, spec),
        Ecosystem::RubyGems => {
            if spec.contains(',') {
                return None;
            }
            let body = spec.strip_prefix('=').unwrap_or(spec).trim();
            clean_version(eco, body)
        }
        Ecosystem::Packagist => {
            let body = spec
                .strip_prefix("==")
                .or_else(|| spec.strip_prefix('='))
                .unwrap_or(spec)
                .trim();
            clean_version(eco, body)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
}

fn split_op(clause: &str) -> (Option<Op>, &str) {
    for (prefix, op) in [
        ("===", Op::Eq),
        ("==", Op::Eq),
        ("!=", Op::Ne),
        (">=", Op::Ge),
        ("<=", Op::Le),
        (">", Op::Gt),
        ("<", Op::Lt),
        ("=", Op::Eq),
    ] {
        if let Some(rest) = clause.strip_prefix(prefix) {
            return (Some(op), rest.trim());
        }
    }
    (None, clause)
}

/// Whether `v` satisfies `spec`; `None` when the specifier uses syntax this
/// evaluator does not model.
pub fn spec_admits(eco: Ecosystem, spec: &str, v: &Version) -> Option<bool> {
    let spec = spec.trim();
    if spec.is_empty() || spec.contains(['^', '~', '*', '|']) {
        return None;
    }
    if eco == Ecosystem::Maven {
        if spec.contains(['(', ')', ',']) {
            return None;
        }
        let inner = spec
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .unwrap_or(spec);
        let want = clean_version(eco, inner)?;
        return Some(compare(&want, v).ok()? == Ordering::Equal);
    }
    let clauses: Vec<&str> = match eco {
        Ecosystem::Npm => {
            // npm joins comparators with whitespace; glue operators to their operands first
            let mut out = Vec::new();
            let mut pending: Option<&str> = None;
            for tok in spec.split_whitespace() {
                if matches!(tok, "=" | ">" | ">=" | "<" | "<=") {
                    pending = Some(tok);
                    continue;
                }
                if let Some(op) = pending.take() {
                    out.push((op, tok));
                } else {
                    out.push(("", tok));
                }
            }
            return out
                .into_iter()
                .map(|(op, tok)| {
                    let clause = format!("{op}{tok}");
                    eval_clause(eco, &clause, v)
                })
                .try_fold(true, |acc, r| r.map(|b| acc && b));
        }
        _ => spec.split(',').map(str::trim).collect(),
    };
    clauses
        .into_iter()
        .map(|c| eval_clause(eco, c, v))
        .try_fold(true, |acc, r| r.map(|b| acc && b))
}

fn eval_clause(eco: Ecosystem, clause: &str, v: &Version) -> Option<bool> {
    let (op, rest) = split_op(clause.trim());
    let op = match op {
        Some(op) => op,
        None => match eco {
            // a bare version is a caret requirement in Cargo and a partial range in npm
            Ecosystem::Cargo | Ecosystem::PyPi => return None,
            Ecosystem::Npm if !FULL_SEMVER.is_match(rest) => return None,
            _ => Op::Eq,
        },
    };
    let bound = clean_version(eco, rest)?;
    let ord = compare(v, &bound).ok()?;
    Some(match op {
        Op::Eq => ord == Ordering::Equal,
        Op::Ne => ord != Ordering::Equal,
        Op::Gt => ord == Ordering::Greater,
        Op::Ge => ord != Ordering::Less,
        Op::Lt => ord == Ordering::Less,
        Op::Le => ord != Ordering::Greater,
    })
}
