//! Brute-force run enumeration and interaction chains.

use std::collections::HashSet;

use crate::error::AnalysisError;
use crate::product::{build_product, ConfigId, Limits, Product};
use crate::protocol::{
    step, Configuration, Options, Protocol, ProtocolFragment, ProtocolTriple, Step, StepError, TransitionRef,
};
use crate::run::StateTriple;

/// Why an enumerated run stopped.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum RunEnd {
    /// No transition was possible.
    Terminated,
    /// A forced input could not be processed.
    ExecutionError,
    /// The depth bound was reached.
    DepthCutoff,
    /// The last configuration already occurred earlier in the run (only with
    /// [`Pruning::AtRepeat`]).
    Repeated,
}

/// Whether enumeration continues past a repeated configuration.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Pruning {
    /// Every run up to the depth bound.
    Exhaustive,
    /// Stop a run at its first repeated configuration. Everything reachable
    /// after the repetition is also reachable from the first occurrence with
    /// more depth to spare, so verdicts about reachable errors and feedback
    /// cycles are unchanged.
    AtRepeat,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EnumeratedRun {
    pub fragment: ProtocolFragment,
    pub moves: Vec<TransitionRef>,
    pub end: RunEnd,
}

impl EnumeratedRun {
    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        self.fragment.steps().iter().map(|t| &t.state)
    }

    /// True iff some configuration repeats while a character stays in flight
    /// the whole time in between, i.e. the run contains a feedback loop that
    /// never lets the output become empty.
    pub fn has_unbounded_chain(&self) -> bool {
        let cfgs: Vec<&Configuration> = self.configurations().collect();
        let mut segment_start = 0;
        for k in 0..cfgs.len() {
            if cfgs[k].pending.is_none() {
                segment_start = k + 1;
                continue;
            }
            if cfgs[segment_start..k].contains(&cfgs[k]) {
                return true;
            }
        }
        false
    }

    /// Lengths of the interaction chains in the run: maximal segments that
    /// start with a spontaneous step and continue while the produced output
    /// is non-empty. An unfinished chain at the end of the run is included.
    pub fn chain_lengths(&self) -> Vec<usize> {
        let steps = self.fragment.steps();
        let mut out = Vec::new();
        let mut current: Option<usize> = None;
        for k in 0..self.moves.len() {
            let produced = &steps[k + 1].output;
            match current.as_mut() {
                Some(n) => *n += 1,
                None if steps[k].input.is_none() => current = Some(1),
                None => {}
            }
            if produced.is_none() {
                if let Some(n) = current.take() {
                    out.push(n);
                }
            }
        }
        out.extend(current);
        out
    }
}

/// All runs from the initial configuration with at most `max_depth` steps,
/// resolving every choice point in every possible way.
///
/// Runs are returned in depth-first order with choices taken in their sorted
/// order, so the result is deterministic.
pub fn enumerate_runs(p: &Protocol, max_depth: usize, limits: &Limits) -> Result<Vec<EnumeratedRun>, AnalysisError> {
    enumerate_runs_with(p, max_depth, Pruning::Exhaustive, limits)
}

pub fn enumerate_runs_with(
    p: &Protocol,
    max_depth: usize,
    pruning: Pruning,
    limits: &Limits,
) -> Result<Vec<EnumeratedRun>, AnalysisError> {
    let mut runs = Vec::new();
    visit_runs(p, max_depth, pruning, limits, |r| runs.push(r.clone()))?;
    Ok(runs)
}

/// Like [`enumerate_runs_with`] but hands each run to `visit` instead of
/// collecting them.
pub fn visit_runs(
    p: &Protocol,
    max_depth: usize,
    pruning: Pruning,
    limits: &Limits,
    mut visit: impl FnMut(&EnumeratedRun),
) -> Result<usize, AnalysisError> {
    let mut walker = Walker {
        p,
        max_depth,
        pruning,
        limit: limits.max_runs,
        count: 0,
        fragment: ProtocolFragment::new(),
        moves: Vec::new(),
        on_path: Vec::new(),
    };
    walker.walk(p.initial_configuration(), &mut visit)?;
    Ok(walker.count)
}

struct Walker<'a> {
    p: &'a Protocol,
    max_depth: usize,
    pruning: Pruning,
    limit: usize,
    count: usize,
    fragment: ProtocolFragment,
    moves: Vec<TransitionRef>,
    on_path: Vec<Configuration>,
}

impl Walker<'_> {
    fn emit(
        &mut self,
        last: ProtocolTriple,
        end: RunEnd,
        visit: &mut impl FnMut(&EnumeratedRun),
    ) -> Result<(), AnalysisError> {
        self.count += 1;
        if self.count > self.limit {
            return Err(AnalysisError::Explosion {
                what: "runs",
                limit: self.limit,
            });
        }
        let mut fragment = self.fragment.clone();
        fragment.push(last);
        visit(&EnumeratedRun {
            fragment,
            moves: self.moves.clone(),
            end,
        });
        Ok(())
    }

    fn walk(&mut self, cfg: Configuration, visit: &mut impl FnMut(&EnumeratedRun)) -> Result<(), AnalysisError> {
        let time = self.moves.len();
        let idle = StateTriple::new(None, cfg.pending.clone(), cfg.clone());
        if self.pruning == Pruning::AtRepeat && self.on_path.contains(&cfg) {
            return self.emit(idle, RunEnd::Repeated, visit);
        }
        if time == self.max_depth {
            return self.emit(idle, RunEnd::DepthCutoff, visit);
        }
        let choices: Vec<Option<TransitionRef>> = match self.p.options(&cfg) {
            Options::Forced { moves, .. } if moves.len() <= 1 => vec![None],
            Options::Free { moves } if moves.is_empty() => vec![None],
            options => options.moves().iter().cloned().map(Some).collect(),
        };
        for choice in choices {
            match step(self.p, &cfg, time, choice.as_ref()) {
                Ok(Step::Terminated { triple }) => self.emit(triple, RunEnd::Terminated, visit)?,
                Ok(Step::Moved { triple, fired, next }) => {
                    self.fragment.push(triple);
                    self.moves.push(fired);
                    self.on_path.push(cfg.clone());
                    let r = self.walk(next, visit);
                    self.on_path.pop();
                    self.moves.pop();
                    self.fragment.pop();
                    r?;
                }
                Err(StepError::Undeliverable { input, .. }) => {
                    let last = StateTriple::new(Some(input), cfg.pending.clone(), cfg.clone());
                    self.emit(last, RunEnd::ExecutionError, visit)?
                }
                Err(e) => unreachable!("enumeration offered an invalid choice: {e}"),
            }
        }
        Ok(())
    }
}

/// How an interaction chain ends.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ChainEnd {
    /// A step produced the empty output.
    Finished,
    /// A configuration repeated with a character in flight: the chain never ends.
    Infinite,
    /// A forced input could not be processed.
    Undeliverable,
}

/// A segment of execution from a spontaneous transition until the output
/// becomes empty.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InteractionChain {
    pub start: Configuration,
    pub moves: Vec<TransitionRef>,
    pub configurations: Vec<Configuration>,
    pub end: ChainEnd,
}

impl InteractionChain {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn is_infinite(&self) -> bool {
        self.end == ChainEnd::Infinite
    }
}

/// Every interaction chain starting at a reachable configuration, following
/// forced deliveries and branching at selection points.
pub fn interaction_chains(p: &Protocol, limits: &Limits) -> Result<Vec<InteractionChain>, AnalysisError> {
    let product = build_product(p, limits)?;
    chains_of(&product, limits)
}

pub(crate) fn chains_of(product: &Product, limits: &Limits) -> Result<Vec<InteractionChain>, AnalysisError> {
    let stuck: HashSet<ConfigId> = product.stuck().iter().map(|(c, _)| *c).collect();
    let mut chains = Vec::new();
    for start in 0..product.len() {
        if product.config(start).pending.is_some() {
            continue;
        }
        for &t in product.outgoing_indices(start) {
            let mut path = vec![t];
            extend_chain(product, &stuck, start, &mut path, &mut chains, limits)?;
        }
    }
    Ok(chains)
}

fn extend_chain(
    product: &Product,
    stuck: &HashSet<ConfigId>,
    start: ConfigId,
    path: &mut Vec<usize>,
    out: &mut Vec<InteractionChain>,
    limits: &Limits,
) -> Result<(), AnalysisError> {
    let last = &product.transitions()[*path.last().unwrap()];
    let here = last.to;
    let revisits = path[..path.len() - 1]
        .iter()
        .any(|&t| product.transitions()[t].to == here);
    let end = if last.output.is_none() {
        Some(ChainEnd::Finished)
    } else if revisits {
        Some(ChainEnd::Infinite)
    } else if stuck.contains(&here) {
        Some(ChainEnd::Undeliverable)
    } else {
        None
    };
    if let Some(end) = end {
        if out.len() >= limits.max_runs {
            return Err(AnalysisError::Explosion {
                what: "interaction chains",
                limit: limits.max_runs,
            });
        }
        out.push(InteractionChain {
            start: product.config(start).clone(),
            moves: path.iter().map(|&t| product.transitions()[t].fired.clone()).collect(),
            configurations: path.iter().map(|&t| product.config(product.transitions()[t].to).clone()).collect(),
            end,
        });
        return Ok(());
    }
    for &next in product.outgoing_indices(here) {
        path.push(next);
        extend_chain(product, stuck, start, path, out, limits)?;
        path.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::IoAutomaton;
    use crate::fixtures::{echo, railway, railway_without_arrival};
    use crate::symbol::sym;

    #[test]
    fn railway_runs_contain_the_cycle_and_no_error() {
        let p = railway();
        let runs = enumerate_runs(&p, 6, &Limits::default()).unwrap();
        assert!(runs.iter().all(|r| r.end != RunEnd::ExecutionError));
        let cycle = runs
            .iter()
            .find(|r| r.moves.len() == 6)
            .expect("a six-step run");
        let first = cycle.fragment.steps().first().unwrap();
        let last = cycle.fragment.steps().last().unwrap();
        assert_eq!(first.state, last.state);
        assert_eq!(cycle.chain_lengths(), vec![2, 2, 2]);
    }

    #[test]
    fn depth_zero_is_the_initial_triple() {
        let p = railway();
        let runs = enumerate_runs(&p, 0, &Limits::default()).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].fragment.len(), 1);
        assert_eq!(runs[0].fragment.steps()[0].state, p.initial_configuration());
    }

    #[test]
    fn missing_receiver_yields_execution_error() {
        let p = railway_without_arrival();
        let runs = enumerate_runs(&p, 2, &Limits::default()).unwrap();
        assert!(runs.iter().any(|r| r.end == RunEnd::ExecutionError));
    }

    #[test]
    fn enumerated_runs_replay_under_step() {
        let p = railway();
        for run in enumerate_runs(&p, 8, &Limits::default()).unwrap() {
            let mut cfg = p.initial_configuration();
            for (k, m) in run.moves.iter().enumerate() {
                let Ok(Step::Moved { next, triple, .. }) = step(&p, &cfg, k, Some(m)) else {
                    panic!("replay failed")
                };
                assert_eq!(&triple, &run.fragment.steps()[k]);
                cfg = next;
            }
            assert_eq!(&cfg, &run.fragment.steps().last().unwrap().state);
        }
    }

    #[test]
    fn run_cap_is_enforced() {
        let p = railway();
        let limits = Limits {
            max_runs: 0,
            ..Limits::default()
        };
        assert!(matches!(
            enumerate_runs(&p, 3, &limits),
            Err(AnalysisError::Explosion { .. })
        ));
    }

    #[test]
    fn railway_has_three_chains_of_length_two() {
        let chains = interaction_chains(&railway(), &Limits::default()).unwrap();
        assert_eq!(chains.len(), 3);
        assert!(chains.iter().all(|c| c.len() == 2 && c.end == ChainEnd::Finished));
    }

    #[test]
    fn echo_chain_is_infinite() {
        let chains = interaction_chains(&echo(), &Limits::default()).unwrap();
        assert_eq!(chains.len(), 1);
        assert!(chains[0].is_infinite());
    }

    #[test]
    fn no_spontaneous_transitions_no_chains() {
        let a = IoAutomaton::builder()
            .inputs(["m"])
            .states(["p"])
            .transition("p", "m", "eps", "p")
            .build()
            .unwrap();
        let b = IoAutomaton::builder().outputs(["m"]).states(["q"]).build().unwrap();
        let p = crate::protocol::Protocol::new(
            [(sym("A"), a), (sym("B"), b)],
            [crate::protocol::Channel::new(sym("B"), sym("A"))],
        )
        .unwrap();
        assert!(interaction_chains(&p, &Limits::default()).unwrap().is_empty());
    }

    #[test]
    fn pruned_enumeration_detects_echo_loop() {
        let runs = enumerate_runs_with(&echo(), 5, Pruning::AtRepeat, &Limits::default()).unwrap();
        assert!(runs.iter().any(|r| r.has_unbounded_chain()));
        assert!(runs.iter().all(|r| r.end == RunEnd::Repeated || r.end == RunEnd::DepthCutoff));
    }
}
