//! Canonical JSON for consistency reports, games and decision forms.
//!
//! Object keys are sorted, so equal inputs give byte-identical output.

use serde_json::{json, Map, Value};

use crate::consistency::{AcceptanceWitness, ConsistencyReport};
use crate::gdf::Gdf;
use crate::gif::Gif;
use crate::protocol::{Configuration, Protocol, TransitionRef};
use crate::symbol::{Qualified, Symbol};

pub const REPORT_SCHEMA: &str = "gifkit.consistency-report/1";
pub const GIF_SCHEMA: &str = "gifkit.gif/1";
pub const GDF_SCHEMA: &str = "gifkit.gdf/1";

pub fn configuration_json(p: &Protocol, c: &Configuration) -> Value {
    let states: Map<String, Value> = p
        .role_ids()
        .iter()
        .zip(&c.states)
        .map(|(r, q)| (r.to_string(), json!(q)))
        .collect();
    json!({ "states": states, "pendingOutput": qualified(&c.pending) })
}

fn qualified(q: &Option<Qualified>) -> Value {
    q.as_ref().map_or(Value::Null, |q| json!(q.to_string()))
}

fn symbol(d: &Option<Symbol>) -> Value {
    d.as_ref().map_or(Value::Null, |d| json!(d))
}

pub fn transition_json(t: &TransitionRef) -> Value {
    json!({
        "role": t.role,
        "from": t.transition.from,
        "input": t.transition.input.to_string(),
        "output": t.transition.output.to_string(),
        "to": t.transition.to,
    })
}

fn path(ts: &[TransitionRef]) -> Value {
    Value::Array(ts.iter().map(transition_json).collect())
}

fn configs<'a>(p: &Protocol, cs: impl IntoIterator<Item = &'a Configuration>) -> Value {
    Value::Array(cs.into_iter().map(|c| configuration_json(p, c)).collect())
}

pub fn report_json(name: &str, p: &Protocol, r: &ConsistencyReport) -> Value {
    let well_formed = r.well_formed.witness.as_ref().map(|w| {
        json!({
            "path": path(&w.path),
            "configuration": configuration_json(p, &w.configuration),
            "input": w.input.to_string(),
        })
    });
    let interruptible = r.interruptible.witness.as_ref().map(|w| {
        json!({
            "prefix": path(&w.prefix),
            "cycle": path(&w.cycle),
            "configurations": configs(p, &w.configurations),
        })
    });
    let accepting = r.accepting.witness.as_ref().map(|w| match w {
        AcceptanceWitness::NonFinalTerminal { path: ts, configuration } => json!({
            "kind": "nonFinalTerminal",
            "path": path(ts),
            "configuration": configuration_json(p, configuration),
        }),
        AcceptanceWitness::TerminalUnderMuller { path: ts, configuration } => json!({
            "kind": "terminalUnderMuller",
            "path": path(ts),
            "configuration": configuration_json(p, configuration),
        }),
        AcceptanceWitness::RejectedInfinitySet { prefix, cycle, set } => json!({
            "kind": "rejectedInfinitySet",
            "prefix": path(prefix),
            "cycle": path(cycle),
            "set": configs(p, set),
        }),
    });
    json!({
        "schema": REPORT_SCHEMA,
        "protocol": name,
        "configurations": r.configurations,
        "wellFormed": { "holds": r.well_formed.holds, "witness": well_formed },
        "interruptible": { "holds": r.interruptible.holds, "witness": interruptible },
        "accepting": { "holds": r.accepting.holds, "witness": accepting },
        "consistent": r.consistent,
    })
}

fn decisions_json(g: &Gif) -> Value {
    Value::Array(
        g.decisions()
            .values()
            .map(|d| json!({ "name": d.name, "kind": d.kind.to_string(), "owner": d.owner }))
            .collect(),
    )
}

pub fn gif_json(name: &str, g: &Gif) -> Value {
    let p = g.base();
    let mut entries: Vec<Value> = g
        .entries()
        .map(|e| {
            json!({
                "from": configuration_json(p, e.from),
                "input": qualified(e.input),
                "decision": symbol(e.decision),
                "output": qualified(e.output),
                "to": configuration_json(p, e.to),
                "transition": transition_json(e.fired),
            })
        })
        .collect();
    entries.sort_by_key(|v| v.to_string());
    json!({
        "schema": GIF_SCHEMA,
        "protocol": name,
        "initial": configuration_json(p, &p.initial_configuration()),
        "decisions": decisions_json(g),
        "deltaPrime": entries,
    })
}

pub fn gdf_json(name: &str, g: &Gif, gdf: &Gdf) -> Value {
    let p = g.base();
    let states: Vec<Value> = gdf
        .states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            json!({
                "id": format!("G{k}"),
                "accepting": s.accepting,
                "members": configs(p, &s.members),
                "seeds": configs(p, &s.seeds),
            })
        })
        .collect();
    let delta: Vec<Value> = gdf
        .edges
        .iter()
        .map(|(f, d, t)| json!({ "from": format!("G{f}"), "decision": d, "to": format!("G{t}") }))
        .collect();
    let overlaps: Vec<Value> = gdf
        .overlaps
        .iter()
        .map(|o| json!({ "state": format!("G{}", o.state), "seeds": configs(p, &o.seeds) }))
        .collect();
    json!({
        "schema": GDF_SCHEMA,
        "protocol": name,
        "initial": "G0",
        "decisions": decisions_json(g),
        "states": states,
        "delta": delta,
        "partitionViolations": overlaps,
        "deterministic": gdf.is_deterministic(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::check_consistent;
    use crate::fixtures::{railway, railway_labels, railway_without_arrival};
    use crate::gdf::build_gdf;
    use crate::gif::derive_decisions;
    use crate::product::Limits;

    #[test]
    fn report_has_schema_and_witness() {
        let p = railway_without_arrival();
        let r = check_consistent(&p, &Limits::default()).unwrap();
        let v = report_json("m", &p, &r);
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert_eq!(v["wellFormed"]["holds"], false);
        assert_eq!(v["wellFormed"]["witness"]["input"], "C.arrived");
        assert_eq!(
            v["wellFormed"]["witness"]["configuration"],
            json!({ "states": { "C": "away", "Z": "wait" }, "pendingOutput": "Z.arrived" })
        );
    }

    #[test]
    fn gdf_json_is_stable() {
        let g = derive_decisions(&railway(), &railway_labels(), &Limits::default()).unwrap();
        let a = gdf_json("railway", &g, &build_gdf(&g)).to_string();
        let g2 = derive_decisions(&railway(), &railway_labels(), &Limits::default()).unwrap();
        let b = gdf_json("railway", &g2, &build_gdf(&g2)).to_string();
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["states"].as_array().unwrap().len(), 3);
        assert_eq!(v["delta"].as_array().unwrap().len(), 3);
        assert_eq!(v["deterministic"], true);
    }
}
