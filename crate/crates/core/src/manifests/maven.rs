use std::collections::HashMap;

use roxmltree::{Document, Node};

use super::{malformed, DeclSink, ManifestError, Scope};

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name() == name)
}

fn child_text(node: Node<'_, '_>, name: &str) -> Option<String> {
    child(node, name)
        .and_then(|c| c.text())
        .map(|t| t.trim().to_string())
}

/// Expands `${name}` references from `<properties>` and the project coordinates.
fn interpolate(value: &str, props: &HashMap<String, String>) -> String {
    let mut out = value.to_string();
    for _ in 0..8 {
        let Some(start) = out.find("${") else { break };
        let Some(len) = out[start..].find('}') else {
            break;
        };
        let key = &out[start + 2..start + len];
        let Some(replacement) = props.get(key) else {
            break;
        };
        out = format!(
            "{}{}{}",
            &out[..start],
            replacement,
            &out[start + len + 1..]
        );
    }
    out
}

pub(super) fn parse(text: &str, sink: &mut DeclSink<'_>) -> Result<(), ManifestError> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        malformed(sink.path(), Some(pos.row as usize), e.to_string())
    })?;
    let project = doc.root_element();
    if project.tag_name().name() != "project" {
        return Err(malformed(
            sink.path(),
            None,
            "root element is not <project>",
        ));
    }

    let mut props = HashMap::new();
    if let Some(properties) = child(project, "properties") {
        for p in properties.children().filter(Node::is_element) {
            props.insert(
                p.tag_name().name().to_string(),
                p.text().unwrap_or_default().trim().to_string(),
            );
        }
    }
    let parent = child(project, "parent");
    for coord in ["version", "groupId", "artifactId"] {
        let value =
            child_text(project, coord).or_else(|| parent.and_then(|p| child_text(p, coord)));
        if let Some(value) = value {
            props.insert(format!("project.{coord}"), value.clone());
            props.insert(format!("pom.{coord}"), value);
        }
    }

    let Some(deps) = child(project, "dependencies") else {
        return Ok(());
    };
    for dep in deps
        .children()
        .filter(|c| c.is_element() && c.tag_name().name() == "dependency")
    {
        let line = doc.text_pos_at(dep.range().start).row as usize;
        let group = child_text(dep, "groupId")
            .map(|g| interpolate(&g, &props))
            .ok_or_else(|| malformed(sink.path(), Some(line), "<dependency> without <groupId>"))?;
        let artifact = child_text(dep, "artifactId")
            .map(|a| interpolate(&a, &props))
            .ok_or_else(|| {
                malformed(sink.path(), Some(line), "<dependency> without <artifactId>")
            })?;
        let scope_text = child_text(dep, "scope").unwrap_or_default();
        if scope_text == "system" {
            sink.skipped.non_registry += 1;
            continue;
        }
        let optional = child_text(dep, "optional").is_some_and(|o| o == "true");
        let scope = if scope_text == "test" {
            Scope::Dev
        } else if optional {
            Scope::Optional
        } else {
            Scope::Runtime
        };
        let version = child_text(dep, "version")
            .map(|v| interpolate(&v, &props))
            .unwrap_or_default();
        sink.push(&format!("{group}:{artifact}"), &version, scope, line);
    }
    Ok(())
}
