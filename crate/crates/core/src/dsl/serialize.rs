use std::collections::BTreeSet;
use std::fmt::Write;

use super::ProtocolDocument;
use crate::automaton::Acceptance;
use crate::protocol::TransitionRef;
use crate::symbol::Symbol;

fn set<'a>(items: impl IntoIterator<Item = &'a Symbol>) -> String {
    let items: Vec<&str> = items.into_iter().map(|s| s.as_str()).collect();
    if items.is_empty() {
        "{}".into()
    } else {
        format!("{{ {} }}", items.join(", "))
    }
}

/// Canonical text: roles, alphabets, transitions and channels in
/// lexicographic order, two-space indentation, no comments.
pub fn serialize(doc: &ProtocolDocument) -> String {
    let mut out = String::new();
    writeln!(out, "protocol {} {{", doc.name).unwrap();
    for (id, a) in doc.protocol.roles() {
        writeln!(out, "  role {id} {{").unwrap();
        writeln!(out, "    inputs {}", set(a.inputs())).unwrap();
        writeln!(out, "    outputs {}", set(a.outputs())).unwrap();
        writeln!(out, "    states {}", set(a.states())).unwrap();
        writeln!(out, "    init {} / {}", a.initial_state(), a.initial_output()).unwrap();
        match a.acceptance() {
            Acceptance::FiniteFinal(fin) => writeln!(out, "    accept final {}", set(fin)).unwrap(),
            Acceptance::Muller(family) => {
                let sets: Vec<String> = family.iter().map(|s: &BTreeSet<Symbol>| set(s)).collect();
                if sets.is_empty() {
                    writeln!(out, "    accept muller {{}}").unwrap();
                } else {
                    writeln!(out, "    accept muller {{ {} }}", sets.join(", ")).unwrap();
                }
            }
        }
        for t in a.transitions() {
            write!(out, "    {t}").unwrap();
            if let Some(l) = doc.labels.get(&TransitionRef::new(id.clone(), t.clone())) {
                write!(out, " @decision {l}").unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "  }}").unwrap();
    }
    for c in doc.protocol.channels() {
        writeln!(out, "  channel {c}").unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use crate::fixtures::{railway, railway_labels};
    use crate::symbol::sym;

    #[test]
    fn railway_round_trips() {
        let doc = ProtocolDocument {
            name: sym("railway"),
            protocol: railway(),
            labels: railway_labels(),
        };
        let text = serialize(&doc);
        assert_eq!(parse(&text).unwrap(), doc);
        assert_eq!(serialize(&parse(&text).unwrap()), text);
    }
}
