//! Well-formedness, interruptibility and acceptance of closed protocols.
//!
//! Every negative verdict carries a witness made of fired transitions that
//! can be replayed through [`step`] from the initial configuration.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::error::AnalysisError;
use crate::product::{build_product, ConfigId, Limits, Product};
use crate::protocol::{step, Configuration, Protocol, Step, StepError, TransitionRef};
use crate::symbol::Qualified;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Verdict<W> {
    pub holds: bool,
    pub witness: Option<W>,
}

impl<W> Verdict<W> {
    fn from_witness(witness: Option<W>) -> Self {
        Verdict {
            holds: witness.is_none(),
            witness,
        }
    }
}

/// A reachable configuration whose forced input has no consuming transition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UndeliverableWitness {
    pub path: Vec<TransitionRef>,
    pub configuration: Configuration,
    pub input: Qualified,
}

/// A loop of forced deliveries in which the output never becomes empty.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FeedbackCycleWitness {
    pub prefix: Vec<TransitionRef>,
    pub cycle: Vec<TransitionRef>,
    /// Configurations on the loop, starting where the prefix ends.
    pub configurations: Vec<Configuration>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AcceptanceWitness {
    /// A run stops in a configuration that is not final.
    NonFinalTerminal {
        path: Vec<TransitionRef>,
        configuration: Configuration,
    },
    /// A run stops although acceptance only speaks about infinite runs.
    TerminalUnderMuller {
        path: Vec<TransitionRef>,
        configuration: Configuration,
    },
    /// A lasso whose set of infinitely often visited configurations is rejected.
    RejectedInfinitySet {
        prefix: Vec<TransitionRef>,
        cycle: Vec<TransitionRef>,
        set: Vec<Configuration>,
    },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConsistencyReport {
    pub well_formed: Verdict<UndeliverableWitness>,
    pub interruptible: Verdict<FeedbackCycleWitness>,
    pub accepting: Verdict<AcceptanceWitness>,
    pub consistent: bool,
    /// Number of reachable configurations.
    pub configurations: usize,
}

fn closed_product(p: &Protocol, limits: &Limits) -> Result<Product, AnalysisError> {
    if !p.check_closed() {
        return Err(AnalysisError::NotClosed);
    }
    build_product(p, limits)
}

pub fn check_well_formed(p: &Protocol, limits: &Limits) -> Result<Verdict<UndeliverableWitness>, AnalysisError> {
    Ok(well_formed_on(&closed_product(p, limits)?))
}

pub fn check_interruptible(p: &Protocol, limits: &Limits) -> Result<Verdict<FeedbackCycleWitness>, AnalysisError> {
    Ok(interruptible_on(&closed_product(p, limits)?))
}

pub fn check_accepting(p: &Protocol, limits: &Limits) -> Result<Verdict<AcceptanceWitness>, AnalysisError> {
    accepting_on(p, &closed_product(p, limits)?, limits)
}

pub fn check_consistent(p: &Protocol, limits: &Limits) -> Result<ConsistencyReport, AnalysisError> {
    let product = closed_product(p, limits)?;
    let well_formed = well_formed_on(&product);
    let interruptible = interruptible_on(&product);
    let accepting = accepting_on(p, &product, limits)?;
    Ok(ConsistencyReport {
        consistent: well_formed.holds && interruptible.holds && accepting.holds,
        well_formed,
        interruptible,
        accepting,
        configurations: product.len(),
    })
}

fn well_formed_on(product: &Product) -> Verdict<UndeliverableWitness> {
    let witness = product.stuck().iter().min_by_key(|(id, _)| *id).map(|(id, input)| UndeliverableWitness {
        path: product.path_to(*id),
        configuration: product.config(*id).clone(),
        input: input.clone(),
    });
    Verdict::from_witness(witness)
}

/// Searches the forced-feedback graph (forced deliveries that emit a
/// character again) for a cycle.
fn interruptible_on(product: &Product) -> Verdict<FeedbackCycleWitness> {
    let feedback = |t: usize| {
        let tr = &product.transitions()[t];
        tr.input.is_some() && tr.output.is_some()
    };
    let n = product.len();
    // Iterative three-colour DFS; the first back edge closes a cycle.
    let mut colour = vec![0u8; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    for root in 0..n {
        if colour[root] != 0 {
            continue;
        }
        let mut stack: Vec<(ConfigId, usize)> = vec![(root, 0)];
        colour[root] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let out = product.outgoing_indices(v);
            if *next == out.len() {
                colour[v] = 2;
                stack.pop();
                continue;
            }
            let t = out[*next];
            *next += 1;
            if !feedback(t) {
                continue;
            }
            let w = product.transitions()[t].to;
            match colour[w] {
                0 => {
                    colour[w] = 1;
                    via[w] = Some(t);
                    stack.push((w, 0));
                }
                1 => {
                    // Walk back along the DFS stack from v to w.
                    let mut cycle = vec![t];
                    let mut u = v;
                    while u != w {
                        let e = via[u].expect("stack nodes have a tree edge");
                        cycle.push(e);
                        u = product.transitions()[e].from;
                    }
                    cycle.reverse();
                    return Verdict::from_witness(Some(FeedbackCycleWitness {
                        prefix: product.path_to(w),
                        configurations: cycle
                            .iter()
                            .map(|&e| product.config(product.transitions()[e].from).clone())
                            .collect(),
                        cycle: cycle.iter().map(|&e| product.transitions()[e].fired.clone()).collect(),
                    }));
                }
                _ => {}
            }
        }
    }
    Verdict::from_witness(None)
}

fn accepting_on(p: &Protocol, product: &Product, limits: &Limits) -> Result<Verdict<AcceptanceWitness>, AnalysisError> {
    let muller = p.uses_muller();
    for id in product.terminal() {
        let cfg = product.config(id);
        if muller {
            return Ok(Verdict::from_witness(Some(AcceptanceWitness::TerminalUnderMuller {
                path: product.path_to(id),
                configuration: cfg.clone(),
            })));
        }
        if !p.is_final(cfg) {
            return Ok(Verdict::from_witness(Some(AcceptanceWitness::NonFinalTerminal {
                path: product.path_to(id),
                configuration: cfg.clone(),
            })));
        }
    }
    if !muller {
        return Ok(Verdict::from_witness(None));
    }
    let mut rejected = None;
    for_each_infinity_set(product, limits, |set| {
        let accepted = p.muller_accepts(set.iter().map(|&c| product.config(c)));
        if !accepted {
            rejected = Some(set.to_vec());
        }
        accepted
    })?;
    Ok(Verdict::from_witness(rejected.map(|set| lasso_witness(product, &set))))
}

/// Strongly connected components of the product graph (Tarjan), as sorted
/// lists of configuration ids, ordered by their smallest member.
pub(crate) fn sccs(product: &Product) -> Vec<Vec<ConfigId>> {
    use petgraph::graph::DiGraph;
    let mut g: DiGraph<ConfigId, ()> = DiGraph::with_capacity(product.len(), product.transitions().len());
    let nodes: Vec<_> = (0..product.len()).map(|i| g.add_node(i)).collect();
    for t in product.transitions() {
        g.add_edge(nodes[t.from], nodes[t.to], ());
    }
    let mut out: Vec<Vec<ConfigId>> = petgraph::algo::tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut ids: Vec<ConfigId> = c.into_iter().map(|n| g[n]).collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    out.sort();
    out
}

/// Calls `visit` with every feasible infinity set: every set of reachable
/// configurations that induces a strongly connected subgraph with at least
/// one edge. Stops early when `visit` returns `false`.
pub fn for_each_infinity_set(
    product: &Product,
    limits: &Limits,
    mut visit: impl FnMut(&[ConfigId]) -> bool,
) -> Result<(), AnalysisError> {
    let cap = limits.max_scc.min(64);
    let mut seen_total = 0usize;
    for comp in sccs(product) {
        let local: std::collections::HashMap<ConfigId, usize> =
            comp.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut adj = vec![0u64; comp.len()];
        let mut has_edge = false;
        for t in product.transitions() {
            if let (Some(&a), Some(&b)) = (local.get(&t.from), local.get(&t.to)) {
                if comp.len() > cap {
                    return Err(AnalysisError::SccTooLarge {
                        size: comp.len(),
                        limit: limits.max_scc,
                    });
                }
                adj[a] |= 1 << b;
                has_edge = true;
            }
        }
        if !has_edge {
            continue;
        }
        let full = if comp.len() == 64 { u64::MAX } else { (1u64 << comp.len()) - 1 };
        let mut memo = HashSet::new();
        let mut stack = vec![full];
        while let Some(set) = stack.pop() {
            if !memo.insert(set) {
                continue;
            }
            seen_total += 1;
            if seen_total > limits.max_runs {
                return Err(AnalysisError::Explosion {
                    what: "candidate infinity sets",
                    limit: limits.max_runs,
                });
            }
            let members: Vec<ConfigId> = bits(set).map(|i| comp[i]).collect();
            if !visit(&members) {
                return Ok(());
            }
            for v in bits(set) {
                stack.extend(strong_components(&adj, set & !(1 << v)));
            }
        }
    }
    Ok(())
}

fn bits(mut set: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if set == 0 {
            return None;
        }
        let i = set.trailing_zeros() as usize;
        set &= set - 1;
        Some(i)
    })
}

fn reach(adj: &[u64], within: u64, from: usize, forward: bool) -> u64 {
    let mut seen = 1u64 << from;
    let mut frontier = seen;
    while frontier != 0 {
        let mut next = 0;
        for v in bits(frontier) {
            if forward {
                next |= adj[v];
            } else {
                for u in bits(within) {
                    if adj[u] & (1 << v) != 0 {
                        next |= 1 << u;
                    }
                }
            }
        }
        next &= within & !seen;
        seen |= next;
        frontier = next;
    }
    seen
}

/// Strongly connected components of the subgraph induced by `within` that
/// contain at least one edge.
fn strong_components(adj: &[u64], within: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut left = within;
    while left != 0 {
        let v = left.trailing_zeros() as usize;
        let comp = reach(adj, within, v, true) & reach(adj, within, v, false);
        left &= !comp;
        let nontrivial = comp.count_ones() > 1 || adj[v] & (1 << v) != 0;
        if nontrivial {
            out.push(comp);
        }
    }
    out
}

/// A prefix to the smallest member of `set` and a cycle inside `set` that
/// visits every member and returns.
fn lasso_witness(product: &Product, set: &[ConfigId]) -> AcceptanceWitness {
    let inside: BTreeSet<ConfigId> = set.iter().copied().collect();
    let start = *set.iter().min().expect("infinity sets are nonempty");
    let mut cycle: Vec<usize> = Vec::new();
    let mut unvisited: BTreeSet<ConfigId> = inside.clone();
    unvisited.remove(&start);
    let mut here = start;
    loop {
        let target: Box<dyn Fn(ConfigId) -> bool> = if unvisited.is_empty() {
            Box::new(move |c| c == start)
        } else {
            let u = unvisited.clone();
            Box::new(move |c| u.contains(&c))
        };
        let leg = bfs_within(product, &inside, here, &*target).expect("set is strongly connected");
        for &t in &leg {
            unvisited.remove(&product.transitions()[t].to);
        }
        here = product.transitions()[*leg.last().unwrap()].to;
        cycle.extend(leg);
        if here == start && unvisited.is_empty() {
            break;
        }
    }
    AcceptanceWitness::RejectedInfinitySet {
        prefix: product.path_to(start),
        cycle: cycle.iter().map(|&t| product.transitions()[t].fired.clone()).collect(),
        set: set.iter().map(|&c| product.config(c).clone()).collect(),
    }
}

/// Shortest nonempty path from `from` to a configuration satisfying
/// `target`, using only transitions inside `inside`.
fn bfs_within(
    product: &Product,
    inside: &BTreeSet<ConfigId>,
    from: ConfigId,
    target: &dyn Fn(ConfigId) -> bool,
) -> Option<Vec<usize>> {
    let mut via: std::collections::HashMap<ConfigId, usize> = std::collections::HashMap::new();
    let mut queue = VecDeque::new();
    for &t in product.outgoing_indices(from) {
        let to = product.transitions()[t].to;
        if inside.contains(&to) && !via.contains_key(&to) {
            via.insert(to, t);
            queue.push_back(to);
        }
    }
    while let Some(c) = queue.pop_front() {
        if target(c) {
            let mut path = vec![via[&c]];
            let mut u = product.transitions()[via[&c]].from;
            while u != from {
                let t = via[&u];
                path.push(t);
                u = product.transitions()[t].from;
            }
            path.reverse();
            return Some(path);
        }
        for &t in product.outgoing_indices(c) {
            let to = product.transitions()[t].to;
            if inside.contains(&to) && !via.contains_key(&to) {
                via.insert(to, t);
                queue.push_back(to);
            }
        }
    }
    None
}

/// Replays `moves` from `start`, returning every configuration visited
/// (including `start`) and the final step outcome when `moves` is exhausted.
pub fn replay_from(
    p: &Protocol,
    start: &Configuration,
    moves: &[TransitionRef],
) -> Result<Vec<Configuration>, StepError> {
    let mut cfg = start.clone();
    let mut visited = vec![cfg.clone()];
    for (k, m) in moves.iter().enumerate() {
        match step(p, &cfg, k, Some(m))? {
            Step::Moved { next, fired, .. } => {
                if &fired != m {
                    return Err(StepError::InvalidChoice { choice: m.clone() });
                }
                cfg = next;
                visited.push(cfg.clone());
            }
            Step::Terminated { .. } => return Err(StepError::InvalidChoice { choice: m.clone() }),
        }
    }
    Ok(visited)
}

impl UndeliverableWitness {
    /// Replays the path and checks that the next step fails on the same input.
    pub fn reproduces(&self, p: &Protocol) -> bool {
        let Ok(visited) = replay_from(p, &p.initial_configuration(), &self.path) else {
            return false;
        };
        let end = visited.last().unwrap();
        end == &self.configuration
            && matches!(step(p, end, self.path.len(), None),
                Err(StepError::Undeliverable { input, .. }) if input == self.input)
    }
}

impl FeedbackCycleWitness {
    /// Replays prefix and loop, checking that the loop returns to its start
    /// while a character is in flight at every configuration on it.
    pub fn reproduces(&self, p: &Protocol) -> bool {
        let Ok(visited) = replay_from(p, &p.initial_configuration(), &self.prefix) else {
            return false;
        };
        let start = visited.last().unwrap().clone();
        let Ok(lap) = replay_from(p, &start, &self.cycle) else {
            return false;
        };
        !self.cycle.is_empty()
            && lap.last() == Some(&start)
            && lap.iter().all(|c| c.pending.is_some())
            && lap[..lap.len() - 1] == self.configurations[..]
    }
}

impl AcceptanceWitness {
    /// Replays the witness and checks that the acceptance condition fails on it.
    pub fn reproduces(&self, p: &Protocol) -> bool {
        let init = p.initial_configuration();
        match self {
            AcceptanceWitness::NonFinalTerminal { path, configuration }
            | AcceptanceWitness::TerminalUnderMuller { path, configuration } => {
                let Ok(visited) = replay_from(p, &init, path) else {
                    return false;
                };
                let end = visited.last().unwrap();
                let terminated = matches!(step(p, end, path.len(), None), Ok(Step::Terminated { .. }));
                let rejected = match self {
                    AcceptanceWitness::NonFinalTerminal { .. } => !p.is_final(end),
                    _ => p.uses_muller(),
                };
                end == configuration && terminated && rejected
            }
            AcceptanceWitness::RejectedInfinitySet { prefix, cycle, set } => {
                let Ok(visited) = replay_from(p, &init, prefix) else {
                    return false;
                };
                let start = visited.last().unwrap().clone();
                let Ok(lap) = replay_from(p, &start, cycle) else {
                    return false;
                };
                let seen: BTreeSet<&Configuration> = lap.iter().collect();
                let expected: BTreeSet<&Configuration> = set.iter().collect();
                !cycle.is_empty() && lap.last() == Some(&start) && seen == expected && !p.muller_accepts(set)
            }
        }
    }
}
