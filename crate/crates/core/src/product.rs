//! The reachable product automaton of a protocol.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::automaton::Acceptance;
use crate::error::AnalysisError;
use crate::protocol::{Configuration, Options, Protocol, TransitionRef};
use crate::symbol::Qualified;

pub const DEFAULT_MAX_STATES: usize = 100_000;
pub const DEFAULT_MAX_SCC: usize = 20;
pub const DEFAULT_MAX_RUNS: usize = 1_000_000;

/// Resource guards for state-space exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of reachable configurations.
    pub max_states: usize,
    /// Maximum size of a strongly connected component whose subsets are
    /// enumerated for Muller acceptance.
    pub max_scc: usize,
    /// Maximum number of runs or chains returned by enumeration.
    pub max_runs: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: DEFAULT_MAX_STATES,
            max_scc: DEFAULT_MAX_SCC,
            max_runs: DEFAULT_MAX_RUNS,
        }
    }
}

impl Limits {
    pub fn with_max_states(max_states: usize) -> Self {
        Limits {
            max_states,
            ..Limits::default()
        }
    }
}

pub type ConfigId = usize;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProductTransition {
    pub from: ConfigId,
    pub to: ConfigId,
    pub input: Option<Qualified>,
    pub output: Option<Qualified>,
    pub fired: TransitionRef,
}

/// Reachable configurations and the transitions the execution rule admits
/// between them. Configuration 0 is the initial one.
#[derive(Clone, Debug)]
pub struct Product {
    configs: Vec<Configuration>,
    index: HashMap<Configuration, ConfigId>,
    transitions: Vec<ProductTransition>,
    outgoing: Vec<Vec<usize>>,
    stuck: Vec<(ConfigId, Qualified)>,
    parent: Vec<Option<usize>>,
}

/// Explores the protocol breadth first from its initial configuration.
///
/// Configurations where a forced input has no consuming transition are kept
/// (they are reachable) but have no outgoing transitions; they are listed by
/// [`Product::stuck`].
pub fn build_product(p: &Protocol, limits: &Limits) -> Result<Product, AnalysisError> {
    let mut product = Product {
        configs: Vec::new(),
        index: HashMap::new(),
        transitions: Vec::new(),
        outgoing: Vec::new(),
        stuck: Vec::new(),
        parent: Vec::new(),
    };
    product.intern(p.initial_configuration(), None, limits)?;
    let mut queue = VecDeque::from([0]);
    while let Some(id) = queue.pop_front() {
        let cfg = product.configs[id].clone();
        let options = p.options(&cfg);
        if let Options::Forced { input, moves } = &options {
            if moves.is_empty() {
                product.stuck.push((id, input.clone()));
            }
        }
        for fired in options.moves() {
            let next = p.apply(&cfg, fired);
            let t_idx = product.transitions.len();
            let (to, fresh) = product.intern(next, Some(t_idx), limits)?;
            if fresh {
                queue.push_back(to);
            }
            product.transitions.push(ProductTransition {
                from: id,
                to,
                input: p.input_of(fired),
                output: p.output_of(fired),
                fired: fired.clone(),
            });
            product.outgoing[id].push(t_idx);
        }
    }
    Ok(product)
}

impl Product {
    fn intern(
        &mut self,
        cfg: Configuration,
        via: Option<usize>,
        limits: &Limits,
    ) -> Result<(ConfigId, bool), AnalysisError> {
        if let Some(&id) = self.index.get(&cfg) {
            return Ok((id, false));
        }
        if self.configs.len() >= limits.max_states {
            return Err(AnalysisError::StateLimit {
                limit: limits.max_states,
            });
        }
        let id = self.configs.len();
        self.index.insert(cfg.clone(), id);
        self.configs.push(cfg);
        self.outgoing.push(Vec::new());
        self.parent.push(via);
        Ok((id, true))
    }

    pub const INITIAL: ConfigId = 0;

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn config(&self, id: ConfigId) -> &Configuration {
        &self.configs[id]
    }

    pub fn id_of(&self, cfg: &Configuration) -> Option<ConfigId> {
        self.index.get(cfg).copied()
    }

    pub fn transitions(&self) -> &[ProductTransition] {
        &self.transitions
    }

    pub fn outgoing(&self, id: ConfigId) -> impl Iterator<Item = &ProductTransition> {
        self.outgoing[id].iter().map(|&t| &self.transitions[t])
    }

    pub fn outgoing_indices(&self, id: ConfigId) -> &[usize] {
        &self.outgoing[id]
    }

    /// Configurations whose forced input cannot be processed.
    pub fn stuck(&self) -> &[(ConfigId, Qualified)] {
        &self.stuck
    }

    /// Configurations where the run ends normally: nothing forced, nothing enabled.
    pub fn terminal(&self) -> impl Iterator<Item = ConfigId> + '_ {
        (0..self.len())
            .filter(|&id| self.outgoing[id].is_empty() && !self.stuck.iter().any(|(s, _)| *s == id))
    }

    /// A shortest sequence of fired transitions from the initial configuration.
    pub fn path_to(&self, id: ConfigId) -> Vec<TransitionRef> {
        self.transition_path_to(id)
            .into_iter()
            .map(|t| self.transitions[t].fired.clone())
            .collect()
    }

    pub fn transition_path_to(&self, mut id: ConfigId) -> Vec<usize> {
        let mut path = Vec::new();
        while let Some(t) = self.parent[id] {
            path.push(t);
            id = self.transitions[t].from;
        }
        path.reverse();
        path
    }

    /// The `(from, to)` pairs of all transitions.
    pub fn edge_set(&self) -> BTreeSet<(ConfigId, ConfigId)> {
        self.transitions.iter().map(|t| (t.from, t.to)).collect()
    }
}

impl Protocol {
    pub fn uses_muller(&self) -> bool {
        self.roles().values().any(|a| a.acceptance().is_muller())
    }

    /// Finite acceptance lifted to configurations: every role is in a final state.
    pub fn is_final(&self, cfg: &Configuration) -> bool {
        self.roles()
            .values()
            .zip(&cfg.states)
            .all(|(a, q)| match a.acceptance() {
                Acceptance::FiniteFinal(fin) => fin.contains(q),
                Acceptance::Muller(_) => false,
            })
    }

    /// Muller acceptance lifted to configurations: the projection of the set
    /// onto every role is in that role's acceptance family.
    pub fn muller_accepts<'a>(&self, set: impl IntoIterator<Item = &'a Configuration>) -> bool {
        let set: Vec<&Configuration> = set.into_iter().collect();
        self.roles().values().enumerate().all(|(idx, a)| match a.acceptance() {
            Acceptance::Muller(family) => {
                let projection: BTreeSet<_> = set.iter().map(|c| c.states[idx].clone()).collect();
                family.contains(&projection)
            }
            Acceptance::FiniteFinal(_) => false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::IoAutomaton;
    use crate::fixtures::railway;
    use crate::protocol::{step, Step};
    use crate::symbol::sym;

    #[test]
    fn railway_has_six_configurations() {
        let p = railway();
        let prod = build_product(&p, &Limits::default()).unwrap();
        let described: BTreeSet<String> = prod.configs().iter().map(|c| p.describe(c)).collect();
        let expected: BTreeSet<String> = [
            "(C=away, Z=away)",
            "(C=away, Z=wait | Z.arrived)",
            "(C=wait, Z=wait)",
            "(C=bridge, Z=wait | C.go)",
            "(C=bridge, Z=bridge)",
            "(C=bridge, Z=away | Z.left)",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(described, expected);
        assert_eq!(prod.transitions().len(), 6);
        assert!(prod.stuck().is_empty());
        assert_eq!(prod.terminal().count(), 0);
    }

    #[test]
    fn silent_role_gives_single_configuration() {
        let a = IoAutomaton::builder().states(["p"]).build().unwrap();
        let p = Protocol::new([(sym("A"), a)], []).unwrap();
        let prod = build_product(&p, &Limits::default()).unwrap();
        assert_eq!(prod.len(), 1);
        assert!(prod.transitions().is_empty());
        assert_eq!(prod.terminal().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn uncoupled_cycles_interleave() {
        let cyc = |a: &str, b: &str| {
            IoAutomaton::builder()
                .states([a, b])
                .transition(a, "eps", "eps", b)
                .transition(b, "eps", "eps", a)
                .build()
                .unwrap()
        };
        let p = Protocol::new([(sym("A"), cyc("a0", "a1")), (sym("B"), cyc("b0", "b1"))], []).unwrap();
        let prod = build_product(&p, &Limits::default()).unwrap();
        // Brute force: every pair of role states, each role moving alone.
        let mut expected = BTreeSet::new();
        for a in ["a0", "a1"] {
            for b in ["b0", "b1"] {
                let flip = |s: &str| match s {
                    "a0" => "a1",
                    "a1" => "a0",
                    "b0" => "b1",
                    _ => "b0",
                };
                expected.insert(((a, b), (flip(a), b)));
                expected.insert(((a, b), (a, flip(b))));
            }
        }
        let got: BTreeSet<_> = prod
            .transitions()
            .iter()
            .map(|t| {
                let f = prod.config(t.from);
                let g = prod.config(t.to);
                (
                    (f.states[0].to_string(), f.states[1].to_string()),
                    (g.states[0].to_string(), g.states[1].to_string()),
                )
            })
            .collect();
        let expected: BTreeSet<_> = expected
            .into_iter()
            .map(|((a, b), (c, d))| ((a.to_string(), b.to_string()), (c.to_string(), d.to_string())))
            .collect();
        assert_eq!(prod.len(), 4);
        assert_eq!(got, expected);
    }

    #[test]
    fn state_cap_is_enforced() {
        let p = railway();
        assert_eq!(
            build_product(&p, &Limits::with_max_states(3)).unwrap_err(),
            AnalysisError::StateLimit { limit: 3 }
        );
    }

    #[test]
    fn product_edges_match_step_over_all_selectors() {
        let p = railway();
        let prod = build_product(&p, &Limits::default()).unwrap();
        let mut observed = BTreeSet::new();
        for (id, cfg) in prod.configs().iter().enumerate() {
            for choice in p.options(cfg).moves() {
                if let Ok(Step::Moved { next, .. }) = step(&p, cfg, 0, Some(choice)) {
                    observed.insert((id, prod.id_of(&next).unwrap()));
                }
            }
        }
        assert_eq!(observed, prod.edge_set());
    }

    #[test]
    fn paths_replay_to_their_target() {
        let p = railway();
        let prod = build_product(&p, &Limits::default()).unwrap();
        for id in 0..prod.len() {
            let mut cfg = p.initial_configuration();
            for (k, m) in prod.path_to(id).iter().enumerate() {
                match step(&p, &cfg, k, Some(m)).unwrap() {
                    Step::Moved { next, .. } => cfg = next,
                    Step::Terminated { .. } => panic!("terminated early"),
                }
            }
            assert_eq!(&cfg, prod.config(id));
        }
    }

    #[test]
    fn lifted_muller_uses_projections() {
        let p = railway();
        let prod = build_product(&p, &Limits::default()).unwrap();
        assert!(p.muller_accepts(prod.configs()));
        assert!(!p.muller_accepts(prod.configs().iter().take(2)));
    }
}
