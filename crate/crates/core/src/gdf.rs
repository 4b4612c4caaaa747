//! Closures under decision-free steps, the decision form of a game, and
//! the meaning of decisions and characters.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::consistency::sccs;
use crate::gif::{Gif, GifError, Meaning};
use crate::product::ConfigId;
use crate::protocol::{Configuration, Options, Protocol};
use crate::symbol::{ProductChar, Qualified, Symbol};

/// Everything reachable from `seed` without taking another decision.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Closure {
    pub seed: Configuration,
    pub members: BTreeSet<Configuration>,
}

fn closure_ids(g: &Gif, seed: ConfigId) -> BTreeSet<ConfigId> {
    let mut members = BTreeSet::from([seed]);
    let mut todo = vec![seed];
    while let Some(c) = todo.pop() {
        for &t in g.product().outgoing_indices(c) {
            if g.decision_of(t).is_none() {
                let to = g.product().transitions()[t].to;
                if members.insert(to) {
                    todo.push(to);
                }
            }
        }
    }
    members
}

fn to_closure(g: &Gif, seed: ConfigId, members: &BTreeSet<ConfigId>) -> Closure {
    Closure {
        seed: g.product().config(seed).clone(),
        members: members.iter().map(|&c| g.product().config(c).clone()).collect(),
    }
}

pub fn epsilon_closure(g: &Gif, q: &Configuration) -> Result<Closure, GifError> {
    let id = g.id_of(q)?;
    Ok(to_closure(g, id, &closure_ids(g, id)))
}

/// A state of the decision form: a union of overlapping closures.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GdfState {
    pub members: BTreeSet<Configuration>,
    /// Seeds whose closures were merged into this state.
    pub seeds: BTreeSet<Configuration>,
    pub accepting: bool,
}

/// Closures that had to be merged because they share configurations.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Overlap {
    pub state: usize,
    pub seeds: BTreeSet<Configuration>,
}

/// The game in decision form. State 0 is initial.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Gdf {
    pub states: Vec<GdfState>,
    pub decisions: BTreeSet<Symbol>,
    pub edges: BTreeSet<(usize, Symbol, usize)>,
    pub overlaps: Vec<Overlap>,
}

pub const INITIAL_STATE: usize = 0;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Builds the decision form of `g`.
///
/// Closures are seeded at the initial configuration and at the target of
/// every decision. Closures sharing a configuration are merged and each
/// merge is listed in [`Gdf::overlaps`].
pub fn build_gdf(g: &Gif) -> Gdf {
    let product = g.product();
    let decided: Vec<usize> = (0..product.transitions().len())
        .filter(|&t| g.decision_of(t).is_some())
        .collect();
    let seeds: BTreeSet<ConfigId> = std::iter::once(0)
        .chain(decided.iter().map(|&t| product.transitions()[t].to))
        .collect();
    let seeds: Vec<ConfigId> = seeds.into_iter().collect();
    let raw: Vec<BTreeSet<ConfigId>> = seeds.iter().map(|&s| closure_ids(g, s)).collect();

    let mut parent: Vec<usize> = (0..seeds.len()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; product.len()];
    for (k, members) in raw.iter().enumerate() {
        for &c in members {
            match owner[c] {
                None => owner[c] = Some(k),
                Some(j) => {
                    let (a, b) = (find(&mut parent, j), find(&mut parent, k));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, (BTreeSet<ConfigId>, BTreeSet<ConfigId>)> = BTreeMap::new();
    for k in 0..seeds.len() {
        let root = find(&mut parent, k);
        let entry = groups.entry(root).or_default();
        entry.0.insert(seeds[k]);
        entry.1.extend(&raw[k]);
    }
    let mut group_of = vec![usize::MAX; product.len()];
    for (&root, (_, members)) in &groups {
        for &c in members {
            group_of[c] = root;
        }
    }

    let mut raw_edges: BTreeMap<usize, BTreeSet<(Symbol, usize)>> = BTreeMap::new();
    for &t in &decided {
        let tr = &product.transitions()[t];
        let d = g.decision_of(t).unwrap().clone();
        raw_edges
            .entry(group_of[tr.from])
            .or_default()
            .insert((d, group_of[tr.to]));
    }

    // Number states breadth first from the initial one, decisions in name order.
    let initial = group_of[0];
    let mut number: BTreeMap<usize, usize> = BTreeMap::from([(initial, 0)]);
    let mut queue = VecDeque::from([initial]);
    while let Some(grp) = queue.pop_front() {
        for (_, to) in raw_edges.get(&grp).into_iter().flatten() {
            if !number.contains_key(to) {
                number.insert(*to, number.len());
                queue.push_back(*to);
            }
        }
    }
    for &root in groups.keys() {
        if !number.contains_key(&root) {
            number.insert(root, number.len());
        }
    }

    let cyclic = cyclic_configurations(g);
    let p = g.base();
    let muller = p.uses_muller();
    let mut states = vec![None; groups.len()];
    let mut overlaps = Vec::new();
    for (root, (seed_ids, members)) in &groups {
        let n = number[root];
        let accepting = members
            .iter()
            .any(|&c| if muller { cyclic[c] } else { p.is_final(product.config(c)) });
        let seeds: BTreeSet<Configuration> = seed_ids.iter().map(|&s| product.config(s).clone()).collect();
        if seeds.len() > 1 {
            overlaps.push(Overlap {
                state: n,
                seeds: seeds.clone(),
            });
        }
        states[n] = Some(GdfState {
            members: members.iter().map(|&c| product.config(c).clone()).collect(),
            seeds,
            accepting,
        });
    }
    overlaps.sort_by_key(|o| o.state);
    let edges = raw_edges
        .iter()
        .flat_map(|(from, out)| out.iter().map(|(d, to)| (number[from], d.clone(), number[to])))
        .collect();
    Gdf {
        states: states.into_iter().map(|s| s.expect("every group is numbered")).collect(),
        decisions: g.decisions().keys().cloned().collect(),
        edges,
        overlaps,
    }
}

/// Configurations that lie on some cycle of the product. In a consistent
/// protocol under Muller acceptance these are exactly the configurations
/// that belong to an accepted infinity set.
fn cyclic_configurations(g: &Gif) -> Vec<bool> {
    let product = g.product();
    let mut cyclic = vec![false; product.len()];
    for comp in sccs(product) {
        let nontrivial = comp.len() > 1 || product.outgoing(comp[0]).any(|t| t.to == comp[0]);
        if nontrivial {
            for c in comp {
                cyclic[c] = true;
            }
        }
    }
    cyclic
}

impl Gdf {
    pub fn successor(&self, state: usize, decision: &Symbol) -> Option<usize> {
        self.edges
            .range((state, decision.clone(), 0)..=(state, decision.clone(), usize::MAX))
            .next()
            .map(|(_, _, to)| *to)
    }

    /// Pairs `(state, decision)` with more than one successor.
    pub fn nondeterministic(&self) -> Vec<(usize, Symbol)> {
        let mut seen = BTreeMap::new();
        let mut bad = BTreeSet::new();
        for (from, d, to) in &self.edges {
            if let Some(prev) = seen.insert((*from, d.clone()), *to) {
                if prev != *to {
                    bad.insert((*from, d.clone()));
                }
            }
        }
        bad.into_iter().collect()
    }

    pub fn is_deterministic(&self) -> bool {
        self.nondeterministic().is_empty()
    }

    /// The state containing `cfg`, if any.
    pub fn state_of(&self, cfg: &Configuration) -> Option<usize> {
        self.states.iter().position(|s| s.members.contains(cfg))
    }

    /// Plain-text listing: states with their members, then edges, then merges.
    pub fn render_text(&self, name: &str, p: &Protocol) -> String {
        let set = |s: &BTreeSet<Configuration>| {
            let items: Vec<String> = s.iter().map(|c| p.describe(c)).collect();
            format!("{{{}}}", items.join(", "))
        };
        let mut out = format!("gdf {name}\ninitial G{INITIAL_STATE}\n");
        for (k, s) in self.states.iter().enumerate() {
            let acc = if s.accepting { "accepting" } else { "rejecting" };
            out.push_str(&format!("state G{k} {acc} {}\n", set(&s.members)));
        }
        for (from, d, to) in &self.edges {
            out.push_str(&format!("G{from} -- {d} --> G{to}\n"));
        }
        for o in &self.overlaps {
            out.push_str(&format!("overlap G{} seeds {}\n", o.state, set(&o.seeds)));
        }
        out
    }
}

/// The closure reached by `d` from each configuration where it is taken.
pub fn abstract_meaning_of_decision(g: &Gif, d: &Symbol) -> Result<BTreeMap<Configuration, Closure>, GifError> {
    g.decision(d.as_str())?;
    let product = g.product();
    Ok((0..product.transitions().len())
        .filter(|&t| g.decision_of(t) == Some(d))
        .map(|t| {
            let tr = &product.transitions()[t];
            (product.config(tr.from).clone(), to_closure(g, tr.to, &closure_ids(g, tr.to)))
        })
        .collect())
}

fn target_closures(g: &Gif, d: &Symbol) -> Result<BTreeSet<BTreeSet<Configuration>>, GifError> {
    Ok(abstract_meaning_of_decision(g, d)?
        .into_values()
        .map(|c| c.members)
        .collect())
}

/// Two decisions mean the same when they lead into the same closures,
/// wherever they are taken from.
pub fn decisions_equivalent(g: &Gif, d1: &Symbol, d2: &Symbol) -> Result<bool, GifError> {
    Ok(target_closures(g, d1)? == target_closures(g, d2)?)
}

fn forced_transitions(g: &Gif, input: &Qualified, at: &Configuration) -> Result<Vec<usize>, GifError> {
    let id = g.id_of(at)?;
    let not_deliverable = || GifError::NotDeliverable {
        input: input.to_string(),
        configuration: g.base().describe(at),
    };
    match g.base().options(at) {
        Options::Forced { input: forced, moves } if &forced == input && !moves.is_empty() => {
            Ok(g.product().outgoing_indices(id).to_vec())
        }
        _ => Err(not_deliverable()),
    }
}

/// The selection decisions among which the receiver of `input` chooses at `at`.
pub fn enforced_selections(g: &Gif, input: &Qualified, at: &Configuration) -> Result<BTreeSet<Symbol>, GifError> {
    Ok(forced_transitions(g, input, at)?
        .into_iter()
        .filter_map(|t| g.decision_of(t).cloned())
        .collect())
}

fn selection_meanings(g: &Gif, input: &Qualified, at: &Configuration) -> Result<Vec<BTreeSet<Configuration>>, GifError> {
    let product = g.product();
    let mut closures: Vec<BTreeSet<Configuration>> = forced_transitions(g, input, at)?
        .into_iter()
        .filter(|&t| g.decision_of(t).is_some())
        .map(|t| {
            let to = product.transitions()[t].to;
            closure_ids(g, to).into_iter().map(|c| product.config(c).clone()).collect()
        })
        .collect();
    closures.sort();
    Ok(closures)
}

/// Whether two characters, each received at its configuration, enforce
/// selections with the same meanings (compared as multisets of target
/// closures).
pub fn characters_same_meaning(
    g: &Gif,
    i1: &Qualified,
    p1: &Configuration,
    i2: &Qualified,
    p2: &Configuration,
) -> Result<bool, GifError> {
    Ok(selection_meanings(g, i1, p1)? == selection_meanings(g, i2, p2)?)
}

/// The stricter, configuration-free query: the characters have the same
/// meaning at every pair of reachable configurations where they are
/// delivered. Fails when either character is never delivered.
pub fn characters_same_meaning_everywhere(g: &Gif, i1: &Qualified, i2: &Qualified) -> Result<bool, GifError> {
    let at = |i: &Qualified| -> Vec<Configuration> {
        g.product()
            .configs()
            .iter()
            .filter(|c| forced_transitions(g, i, c).is_ok())
            .cloned()
            .collect()
    };
    let (a1, a2) = (at(i1), at(i2));
    for (i, a) in [(i1, &a1), (i2, &a2)] {
        if a.is_empty() {
            return Err(GifError::NotDeliverable {
                input: ProductChar(&Some(i.clone())).to_string(),
                configuration: "any reachable configuration".into(),
            });
        }
    }
    for p1 in &a1 {
        for p2 in &a2 {
            if !characters_same_meaning(g, i1, p1, i2, p2)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Composition {
    /// The meaning of the two steps together: the second one's result.
    Composed {
        output: Option<Qualified>,
        target: Configuration,
    },
    NonCompositional,
}

/// Composes two interpretations; only consecutive ones compose.
pub fn compose_meaning(m1: &Meaning, m2: &Meaning) -> Composition {
    if m2.source == m1.target {
        Composition::Composed {
            output: m2.output.clone(),
            target: m2.target.clone(),
        }
    } else {
        Composition::NonCompositional
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::IoAutomaton;
    use crate::fixtures::{railway, railway_labels};
    use crate::gif::derive_decisions;
    use crate::product::Limits;
    use crate::protocol::Channel;
    use crate::symbol::sym;

    fn railway_gif() -> Gif {
        derive_decisions(&railway(), &railway_labels(), &Limits::default()).unwrap()
    }

    fn describe_set(p: &Protocol, s: &BTreeSet<Configuration>) -> Vec<String> {
        s.iter().map(|c| p.describe(c)).collect()
    }

    fn gif(p: &Protocol) -> Gif {
        derive_decisions(p, &BTreeMap::new(), &Limits::default()).unwrap()
    }

    #[test]
    fn closure_of_a_delivery() {
        let g = railway_gif();
        let p = g.base();
        let q = p.parse_configuration("C=away, Z=wait | Z.arrived").unwrap();
        let c = epsilon_closure(&g, &q).unwrap();
        assert_eq!(c.seed, q);
        assert_eq!(
            describe_set(p, &c.members),
            ["(C=away, Z=wait | Z.arrived)", "(C=wait, Z=wait)"]
        );
        let unreachable = p.parse_configuration("C=wait, Z=away").unwrap();
        assert!(matches!(epsilon_closure(&g, &unreachable), Err(GifError::Unreachable(_))));
    }

    #[test]
    fn railway_gdf_is_a_three_cycle() {
        let g = railway_gif();
        let gdf = build_gdf(&g);
        assert_eq!(gdf.states.len(), 3);
        assert!(gdf.is_deterministic());
        assert!(gdf.states.iter().all(|s| s.accepting));
        let mut s = INITIAL_STATE;
        let mut labels = Vec::new();
        for _ in 0..3 {
            let (_, d, to) = gdf.edges.iter().find(|(f, _, _)| *f == s).unwrap();
            labels.push(d.to_string());
            s = *to;
        }
        assert_eq!(labels, ["IArrive", "ILetYouGo", "ILeave"]);
        assert_eq!(s, INITIAL_STATE);
        assert_eq!(gdf.overlaps.len(), 1);
    }

    #[test]
    fn gdf_without_decisions_is_one_state() {
        let a = IoAutomaton::builder().states(["p"]).build().unwrap();
        let p = Protocol::new([(sym("A"), a)], []).unwrap();
        let gdf = build_gdf(&gif(&p));
        assert_eq!(gdf.states.len(), 1);
        assert!(gdf.edges.is_empty());
    }

    #[test]
    fn meanings_of_railway_decisions() {
        let g = railway_gif();
        let p = g.base();
        let arrive = abstract_meaning_of_decision(&g, &sym("IArrive")).unwrap();
        assert_eq!(arrive.len(), 1);
        let c = arrive.values().next().unwrap();
        assert_eq!(
            describe_set(p, &c.members),
            ["(C=away, Z=wait | Z.arrived)", "(C=wait, Z=wait)"]
        );
        let leave = abstract_meaning_of_decision(&g, &sym("ILeave")).unwrap();
        assert!(leave
            .values()
            .next()
            .unwrap()
            .members
            .contains(&p.initial_configuration()));
        assert!(decisions_equivalent(&g, &sym("IArrive"), &sym("IArrive")).unwrap());
        assert!(!decisions_equivalent(&g, &sym("IArrive"), &sym("ILeave")).unwrap());
        assert!(matches!(
            abstract_meaning_of_decision(&g, &sym("Nope")),
            Err(GifError::UnknownDecision(_))
        ));
    }

    /// Two triggers, one outcome: from `p` and from `q` a spontaneous step
    /// leads to `r`.
    fn violin() -> Protocol {
        let a = IoAutomaton::builder()
            .states(["p", "q", "r"])
            .transition("p", "eps", "eps", "q")
            .transition("p", "eps", "eps", "r")
            .transition("q", "eps", "eps", "r")
            .build()
            .unwrap();
        Protocol::new([(sym("A"), a)], []).unwrap()
    }

    #[test]
    fn different_triggers_same_outcome_are_equivalent() {
        let g = gif(&violin());
        let into_r: Vec<Symbol> = g
            .assignment()
            .iter()
            .filter(|(t, _)| t.transition.to.as_str() == "r")
            .map(|(_, d)| d.name.clone())
            .collect();
        assert_eq!(into_r.len(), 2);
        assert!(decisions_equivalent(&g, &into_r[0], &into_r[1]).unwrap());
    }

    /// S emits `a` or `b`; R receives either one into `x` or `y`, with the
    /// receptions of `b` being `to_b_x`/`to_b_z` when `distinct` is set.
    fn selector(distinct: bool) -> Protocol {
        let s = IoAutomaton::builder()
            .outputs(["a", "b"])
            .states(["s0", "s1"])
            .transition("s0", "eps", "a", "s1")
            .transition("s0", "eps", "b", "s1")
            .build()
            .unwrap();
        let b_second = if distinct { "z" } else { "y" };
        let r = IoAutomaton::builder()
            .inputs(["a", "b"])
            .states(["r0", "x", "y", "z"])
            .transition("r0", "a", "eps", "x")
            .transition("r0", "a", "eps", "y")
            .transition("r0", "b", "eps", "x")
            .transition("r0", "b", "eps", b_second)
            .build()
            .unwrap();
        Protocol::new([(sym("R"), r), (sym("S"), s)], [Channel::new(sym("S"), sym("R"))]).unwrap()
    }

    #[test]
    fn enforced_selections_and_character_meaning() {
        let p = selector(false);
        let g = gif(&p);
        let at_a = p.parse_configuration("R=r0, S=s1 | S.a").unwrap();
        let at_b = p.parse_configuration("R=r0, S=s1 | S.b").unwrap();
        let ra = Qualified::parse("R.a").unwrap();
        let rb = Qualified::parse("R.b").unwrap();
        assert_eq!(enforced_selections(&g, &ra, &at_a).unwrap().len(), 2);
        assert!(characters_same_meaning(&g, &ra, &at_a, &ra, &at_a).unwrap());
        assert!(characters_same_meaning(&g, &ra, &at_a, &rb, &at_b).unwrap());
        assert!(characters_same_meaning_everywhere(&g, &ra, &rb).unwrap());
        assert!(matches!(
            enforced_selections(&g, &rb, &at_a),
            Err(GifError::NotDeliverable { .. })
        ));

        let p = selector(true);
        let g = gif(&p);
        let at_a = p.parse_configuration("R=r0, S=s1 | S.a").unwrap();
        let at_b = p.parse_configuration("R=r0, S=s1 | S.b").unwrap();
        assert!(!characters_same_meaning(&g, &ra, &at_a, &rb, &at_b).unwrap());
    }

    #[test]
    fn forced_delivery_enforces_nothing() {
        let g = railway_gif();
        let p = g.base();
        let at = p.parse_configuration("C=away, Z=wait | Z.arrived").unwrap();
        let arrived = Qualified::parse("C.arrived").unwrap();
        assert!(enforced_selections(&g, &arrived, &at).unwrap().is_empty());
    }

    #[test]
    fn composition_needs_consecutive_steps() {
        let g = railway_gif();
        let p = g.base();
        let start = p.initial_configuration();
        let m1 = g.interpret(&start, None, Some(&sym("IArrive"))).unwrap();
        let m2 = g
            .interpret(&m1.target, Some(&Qualified::parse("C.arrived").unwrap()), None)
            .unwrap();
        assert_eq!(
            compose_meaning(&m1, &m2),
            Composition::Composed {
                output: None,
                target: p.parse_configuration("C=wait, Z=wait").unwrap()
            }
        );
        let bridge = p.parse_configuration("C=bridge, Z=bridge").unwrap();
        let leave = g.interpret(&bridge, None, Some(&sym("ILeave"))).unwrap();
        assert_eq!(compose_meaning(&m1, &leave), Composition::NonCompositional);
    }

    #[test]
    fn self_loop_composes_with_itself() {
        let a = IoAutomaton::builder()
            .states(["p"])
            .transition("p", "eps", "eps", "p")
            .build()
            .unwrap();
        let p = Protocol::new([(sym("A"), a)], []).unwrap();
        let g = gif(&p);
        let d = g.decisions().keys().next().unwrap().clone();
        let m = g.interpret(&p.initial_configuration(), None, Some(&d)).unwrap();
        assert!(matches!(compose_meaning(&m, &m), Composition::Composed { .. }));
    }
}
