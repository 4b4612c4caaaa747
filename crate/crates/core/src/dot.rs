//! Graphviz renderings of protocols, games and their decision forms.

use std::fmt::Write;

use crate::dsl::ProtocolDocument;
use crate::gdf::{Gdf, INITIAL_STATE};
use crate::gif::{show_decision, Gif};
use crate::protocol::Protocol;
use crate::symbol::ProductChar;

/// Quotes a string for use as a DOT identifier or attribute value.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// One cluster per role; edges carry `input / output` and the decision label if any.
pub fn protocol_dot(doc: &ProtocolDocument) -> String {
    let p = &doc.protocol;
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(doc.name.as_str())).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    let channels: Vec<String> = p.channels().iter().map(|c| c.to_string()).collect();
    writeln!(out, "  label={};", quote(&format!("channels: {}", channels.join(", ")))).unwrap();
    for (id, a) in p.roles() {
        writeln!(out, "  subgraph {} {{", quote(&format!("cluster_{id}"))).unwrap();
        writeln!(out, "    label={};", quote(id.as_str())).unwrap();
        for q in a.states() {
            let shape = if q == a.initial_state() { "doublecircle" } else { "circle" };
            writeln!(
                out,
                "    {} [label={}, shape={shape}];",
                quote(&format!("{id}.{q}")),
                quote(q.as_str())
            )
            .unwrap();
        }
        writeln!(out, "  }}").unwrap();
        for t in a.transitions() {
            let mut label = format!("{} / {}", t.input, t.output);
            let tref = crate::protocol::TransitionRef::new(id.clone(), t.clone());
            if let Some(d) = doc.labels.get(&tref) {
                write!(label, " @{d}").unwrap();
            }
            writeln!(
                out,
                "  {} -> {} [label={}];",
                quote(&format!("{id}.{}", t.from)),
                quote(&format!("{id}.{}", t.to)),
                quote(&label)
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}

/// Reachable configurations; edges labelled `input,decision / output`.
pub fn gif_dot(name: &str, g: &Gif) -> String {
    let p: &Protocol = g.base();
    let product = g.product();
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    for (k, c) in product.configs().iter().enumerate() {
        let shape = if k == 0 { "doubleoctagon" } else { "box" };
        writeln!(out, "  {} [label={}, shape={shape}];", quote(&format!("c{k}")), quote(&p.describe(c))).unwrap();
    }
    for e in g.entries() {
        let from = product.id_of(e.from).unwrap();
        let to = product.id_of(e.to).unwrap();
        let label = format!(
            "{},{} / {}",
            ProductChar(e.input),
            show_decision(e.decision),
            ProductChar(e.output)
        );
        writeln!(
            out,
            "  {} -> {} [label={}];",
            quote(&format!("c{from}")),
            quote(&format!("c{to}")),
            quote(&label)
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// One node per decision-form state; edges labelled by decisions.
pub fn gdf_dot(name: &str, gdf: &Gdf, p: &Protocol) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    for (k, s) in gdf.states.iter().enumerate() {
        let members: Vec<String> = s.members.iter().map(|c| p.describe(c)).collect();
        let label = format!("G{k}\n{}", members.join("\n"));
        let shape = if s.accepting { "doubleoctagon" } else { "box" };
        let style = if k == INITIAL_STATE { ", style=bold" } else { "" };
        writeln!(out, "  {} [label={}, shape={shape}{style}];", quote(&format!("G{k}")), quote(&label)).unwrap();
    }
    for (from, d, to) in &gdf.edges {
        writeln!(
            out,
            "  {} -> {} [label={}];",
            quote(&format!("G{from}")),
            quote(&format!("G{to}")),
            quote(d.as_str())
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::IoAutomaton;
    use crate::gdf::build_gdf;
    use crate::gif::derive_decisions;
    use crate::product::Limits;
    use crate::symbol::sym;
    use std::collections::BTreeMap;

    #[test]
    fn quoting_escapes_specials() {
        assert_eq!(quote("a\"b\\c\nd"), "\"a\\\"b\\\\c\\nd\"");
    }

    #[test]
    fn single_state_without_transitions() {
        let a = IoAutomaton::builder().states(["p"]).build().unwrap();
        let p = Protocol::new([(sym("A"), a)], []).unwrap();
        let g = derive_decisions(&p, &BTreeMap::new(), &Limits::default()).unwrap();
        let dot = gdf_dot("single", &build_gdf(&g), &p);
        assert_eq!(dot.matches(" -> ").count(), 0);
        assert_eq!(dot.matches("shape=").count(), 1);
    }
}
