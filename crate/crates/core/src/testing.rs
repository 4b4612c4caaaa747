//! Random protocols and renamings for property tests.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::automaton::{Acceptance, Alphabet, IoAutomaton, Transition};
use crate::consistency::check_consistent;
use crate::product::Limits;
use crate::protocol::{Channel, Protocol};
use crate::symbol::{Character, Symbol};

#[derive(Clone, Copy, Debug)]
pub struct GenParams {
    pub max_roles: usize,
    pub max_states: usize,
    /// Bound on each input and each output alphabet.
    pub max_chars: usize,
    /// Extra random transitions per role, on top of the receptions.
    pub max_extra_transitions: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_roles: 3,
            max_states: 4,
            max_chars: 3,
            max_extra_transitions: 4,
        }
    }
}

fn name(s: &str) -> Symbol {
    Symbol::new(s).expect("generated names are identifiers")
}

fn pick<'a, T, R: Rng>(rng: &mut R, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// A random closed protocol. Roles are `R0`, `R1`, ...; the characters
/// carried by channel `Ri -> Rj` are `mij_0`, `mij_1`, ...
pub fn random_protocol<R: Rng>(rng: &mut R, params: &GenParams) -> Protocol {
    let n = rng.random_range(1..=params.max_roles);
    let mut outputs: Vec<Vec<Symbol>> = vec![Vec::new(); n];
    let mut inputs: Vec<Vec<Symbol>> = vec![Vec::new(); n];
    let mut channels = Vec::new();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    pairs.shuffle(rng);
    for (i, j) in pairs {
        if !rng.random_bool(0.6) {
            continue;
        }
        let room = params.max_chars.saturating_sub(outputs[i].len().max(inputs[j].len()));
        if room == 0 {
            continue;
        }
        let k = rng.random_range(1..=room);
        for c in 0..k {
            let m = name(&format!("m{i}{j}_{c}"));
            outputs[i].push(m.clone());
            inputs[j].push(m);
        }
        channels.push(Channel::new(name(&format!("R{i}")), name(&format!("R{j}"))));
    }
    let muller = rng.random_bool(0.5);
    let emitter = if rng.random_bool(0.2) { Some(rng.random_range(0..n)) } else { None };
    let roles = (0..n).map(|i| {
        let k = rng.random_range(1..=params.max_states);
        let states: Vec<Symbol> = (0..k).map(|s| name(&format!("s{s}"))).collect();
        let mut transitions = BTreeSet::new();
        let out_char = |rng: &mut R| {
            if outputs[i].is_empty() || rng.random_bool(0.5) {
                Character::Eps
            } else {
                Character::Named(pick(rng, &outputs[i]).clone())
            }
        };
        // Mostly total receptions keep a useful share of protocols well formed.
        for q in &states {
            for m in &inputs[i] {
                if rng.random_bool(0.85) {
                    let out = out_char(rng);
                    transitions.insert(Transition::new(q.clone(), Character::Named(m.clone()), out, pick(rng, &states).clone()));
                }
            }
        }
        for _ in 0..rng.random_range(0..=params.max_extra_transitions) {
            let input = if inputs[i].is_empty() || rng.random_bool(0.6) {
                Character::Eps
            } else {
                Character::Named(pick(rng, &inputs[i]).clone())
            };
            let out = out_char(rng);
            transitions.insert(Transition::new(pick(rng, &states).clone(), input, out, pick(rng, &states).clone()));
        }
        let initial_output = match emitter {
            Some(e) if e == i && !outputs[i].is_empty() => Character::Named(pick(rng, &outputs[i]).clone()),
            _ => Character::Eps,
        };
        let acceptance = if muller {
            Acceptance::Muller(
                (1u32..(1 << k))
                    .map(|mask| {
                        states
                            .iter()
                            .enumerate()
                            .filter(|(b, _)| mask & (1 << b) != 0)
                            .map(|(_, s)| s.clone())
                            .collect()
                    })
                    .collect(),
            )
        } else {
            Acceptance::FiniteFinal(states.iter().filter(|_| rng.random_bool(0.7)).cloned().collect())
        };
        let a = IoAutomaton::new(
            Alphabet::from_symbols(inputs[i].iter().cloned()).unwrap(),
            Alphabet::from_symbols(outputs[i].iter().cloned()).unwrap(),
            Alphabet::from_symbols(states.iter().cloned()).unwrap(),
            (states[0].clone(), initial_output),
            transitions,
            acceptance,
        )
        .expect("generated roles are well typed");
        (name(&format!("R{i}")), a)
    });
    let roles: Vec<_> = roles.collect();
    Protocol::new(roles, channels).expect("generated protocols are well typed")
}

/// Draws random protocols until `count` consistent ones are found.
/// Returns them with the number of draws it took.
pub fn consistent_corpus<R: Rng>(rng: &mut R, params: &GenParams, count: usize, limits: &Limits) -> (Vec<Protocol>, usize) {
    let mut out = Vec::with_capacity(count);
    let mut draws = 0;
    while out.len() < count {
        draws += 1;
        let p = random_protocol(rng, params);
        if check_consistent(&p, limits).is_ok_and(|r| r.consistent) {
            out.push(p);
        }
    }
    (out, draws)
}

/// A random injective renaming of every character and state value of `p`
/// to fresh names that cannot collide with role ids.
pub fn random_renaming<R: Rng>(rng: &mut R, p: &Protocol) -> BTreeMap<Symbol, Symbol> {
    let roles: BTreeSet<&Symbol> = p.role_ids().iter().collect();
    let used: Vec<Symbol> = p.names().into_iter().filter(|s| !roles.contains(s)).collect();
    let mut fresh: Vec<usize> = (0..used.len() * 4).collect();
    fresh.shuffle(rng);
    used.into_iter()
        .zip(fresh)
        .map(|(s, k)| (s, name(&format!("n{k}"))))
        .collect()
}
