//! Decisions that determinize a consistent protocol, and the resulting game.
//!
//! Decisions are attached to role transitions. Every spontaneous transition
//! gets one; a transition consuming a named input gets one when another
//! transition of the same role consumes that input from the same state.
//! Every other transition is taken without a decision.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::consistency::{check_consistent, ConsistencyReport};
use crate::error::AnalysisError;
use crate::product::{build_product, ConfigId, Limits, Product};
use crate::protocol::{Configuration, Options, Protocol, ProtocolFragment, ProtocolTriple, TransitionRef};
use crate::symbol::{ProductChar, Qualified, Symbol};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum DecisionKind {
    /// Fires a transition that consumes no input.
    Spontaneous,
    /// Picks one of several receptions of the same input.
    Selection,
}

impl fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionKind::Spontaneous => "spontaneous",
            DecisionKind::Selection => "selection",
        })
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Decision {
    pub name: Symbol,
    pub kind: DecisionKind,
    /// The role whose transition the decision fires.
    pub owner: Symbol,
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum GifError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("protocol is not consistent")]
    Inconsistent(Box<ConsistencyReport>),
    #[error("label `{label}` names no transition of the protocol ({transition})")]
    UnknownTransition { transition: String, label: String },
    #[error("transition {transition} needs no decision but is labelled `{label}`")]
    NeedlessLabel { transition: String, label: String },
    #[error("decision label `{label}` {reason}")]
    NamingConflict { label: String, reason: String },
    #[error("two entries share input {input}, decision {decision} at {configuration}")]
    NotDeterministic {
        configuration: String,
        input: String,
        decision: String,
    },
    #[error("no transition for input {input} and decision {decision} at {configuration}")]
    NoSuchTransition {
        configuration: String,
        input: String,
        decision: String,
    },
    #[error("decision {decision} at position {position} is not enabled at {configuration}")]
    NotEnabled {
        position: usize,
        decision: String,
        configuration: String,
    },
    #[error("unknown decision `{0}`")]
    UnknownDecision(String),
    #[error("configuration {0} is not reachable")]
    Unreachable(String),
    #[error("{0}")]
    IllPosed(String),
    #[error("input {input} is not deliverable at {configuration}")]
    NotDeliverable { input: String, configuration: String },
}

/// A consistent protocol together with the decisions that make it deterministic.
#[derive(Clone, Debug)]
pub struct Gif {
    base: Protocol,
    product: Product,
    /// Decision of every role transition that needs one, reachable or not.
    assignment: BTreeMap<TransitionRef, Decision>,
    /// Decisions used by reachable transitions.
    decisions: BTreeMap<Symbol, Decision>,
    /// Decision of each product transition.
    decision_of: Vec<Option<Symbol>>,
    delta: HashMap<(ConfigId, Option<Qualified>, Option<Symbol>), usize>,
}

/// One entry of the transition function, viewed from outside.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GifEntry<'a> {
    pub from: &'a Configuration,
    pub input: &'a Option<Qualified>,
    pub decision: &'a Option<Symbol>,
    pub output: &'a Option<Qualified>,
    pub to: &'a Configuration,
    pub fired: &'a TransitionRef,
}

/// The image of one interpretation step: what `input` under `decision`
/// means at `source`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Meaning {
    pub source: Configuration,
    pub input: Option<Qualified>,
    pub decision: Option<Symbol>,
    pub output: Option<Qualified>,
    pub target: Configuration,
}

fn needs_decision(p: &Protocol, t: &TransitionRef) -> Option<DecisionKind> {
    if t.transition.is_spontaneous() {
        return Some(DecisionKind::Spontaneous);
    }
    let siblings = p.roles()[&t.role]
        .transitions_from(&t.transition.from, &t.transition.input)
        .count();
    (siblings > 1).then_some(DecisionKind::Selection)
}

/// Checks that every label names a transition needing a decision and that
/// labels are distinct from each other and from every protocol name.
pub fn validate_labels(p: &Protocol, labels: &BTreeMap<TransitionRef, Symbol>) -> Result<(), GifError> {
    let taken = p.names();
    let mut used: BTreeSet<&Symbol> = BTreeSet::new();
    for (t, label) in labels {
        let exists = p.role(&t.role).is_some_and(|a| a.transitions().contains(&t.transition));
        if !exists {
            return Err(GifError::UnknownTransition {
                transition: t.to_string(),
                label: label.to_string(),
            });
        }
        if needs_decision(p, t).is_none() {
            return Err(GifError::NeedlessLabel {
                transition: t.to_string(),
                label: label.to_string(),
            });
        }
        if taken.contains(label) {
            return Err(GifError::NamingConflict {
                label: label.to_string(),
                reason: "is already a role, state or character name".into(),
            });
        }
        if !used.insert(label) {
            return Err(GifError::NamingConflict {
                label: label.to_string(),
                reason: "labels more than one transition".into(),
            });
        }
    }
    Ok(())
}

/// Derives the decisions of a consistent protocol.
///
/// `labels` names decisions explicitly; unlabelled transitions that need a
/// decision get `D_<role>_<from>_<n>`.
pub fn derive_decisions(
    p: &Protocol,
    labels: &BTreeMap<TransitionRef, Symbol>,
    limits: &Limits,
) -> Result<Gif, GifError> {
    let report = check_consistent(p, limits)?;
    if !report.consistent {
        return Err(GifError::Inconsistent(Box::new(report)));
    }
    validate_labels(p, labels)?;
    let taken = p.names();
    let mut used: BTreeSet<Symbol> = labels.values().cloned().collect();

    let mut assignment = BTreeMap::new();
    for (role, a) in p.roles() {
        let mut counters: BTreeMap<&Symbol, usize> = BTreeMap::new();
        for t in a.transitions() {
            let tref = TransitionRef::new(role.clone(), t.clone());
            let Some(kind) = needs_decision(p, &tref) else {
                continue;
            };
            let name = match labels.get(&tref) {
                Some(l) => l.clone(),
                None => loop {
                    let n = counters.entry(&t.from).or_insert(0);
                    *n += 1;
                    let candidate = Symbol::new(&format!("D_{role}_{}_{n}", t.from)).expect("generated names are identifiers");
                    if !taken.contains(&candidate) && used.insert(candidate.clone()) {
                        break candidate;
                    }
                },
            };
            assignment.insert(
                tref,
                Decision {
                    name,
                    kind,
                    owner: role.clone(),
                },
            );
        }
    }

    let product = build_product(p, limits)?;
    let mut decisions = BTreeMap::new();
    let mut decision_of = Vec::with_capacity(product.transitions().len());
    let mut delta = HashMap::new();
    for (idx, t) in product.transitions().iter().enumerate() {
        let d = assignment.get(&t.fired).map(|d: &Decision| {
            decisions.insert(d.name.clone(), d.clone());
            d.name.clone()
        });
        let key = (t.from, t.input.clone(), d.clone());
        if delta.insert(key, idx).is_some() {
            return Err(GifError::NotDeterministic {
                configuration: p.describe(product.config(t.from)),
                input: ProductChar(&t.input).to_string(),
                decision: show_decision(&d),
            });
        }
        decision_of.push(d);
    }
    Ok(Gif {
        base: p.clone(),
        product,
        assignment,
        decisions,
        decision_of,
        delta,
    })
}

pub fn show_decision(d: &Option<Symbol>) -> String {
    d.as_ref().map_or_else(|| "eps".to_string(), |d| d.to_string())
}

impl Gif {
    pub fn base(&self) -> &Protocol {
        &self.base
    }

    pub fn product(&self) -> &Product {
        &self.product
    }

    /// The decision alphabet: decisions that occur on reachable transitions.
    pub fn decisions(&self) -> &BTreeMap<Symbol, Decision> {
        &self.decisions
    }

    /// The decision of every role transition that needs one.
    pub fn assignment(&self) -> &BTreeMap<TransitionRef, Decision> {
        &self.assignment
    }

    /// Decision of the product transition with index `t`.
    pub fn decision_of(&self, t: usize) -> Option<&Symbol> {
        self.decision_of[t].as_ref()
    }

    pub fn entries(&self) -> impl Iterator<Item = GifEntry<'_>> {
        self.product.transitions().iter().zip(&self.decision_of).map(|(t, d)| GifEntry {
            from: self.product.config(t.from),
            input: &t.input,
            decision: d,
            output: &t.output,
            to: self.product.config(t.to),
            fired: &t.fired,
        })
    }

    /// Index of the product transition selected by `(input, decision)` at `from`.
    pub fn lookup(&self, from: ConfigId, input: &Option<Qualified>, decision: &Option<Symbol>) -> Option<usize> {
        self.delta.get(&(from, input.clone(), decision.clone())).copied()
    }

    pub fn id_of(&self, cfg: &Configuration) -> Result<ConfigId, GifError> {
        self.product
            .id_of(cfg)
            .ok_or_else(|| GifError::Unreachable(self.base.describe(cfg)))
    }

    pub fn decision(&self, name: &str) -> Result<&Decision, GifError> {
        self.decisions
            .get(name)
            .ok_or_else(|| GifError::UnknownDecision(name.to_string()))
    }

    /// Applies the transition function once.
    pub fn interpret(
        &self,
        cfg: &Configuration,
        input: Option<&Qualified>,
        decision: Option<&Symbol>,
    ) -> Result<Meaning, GifError> {
        let input = input.cloned();
        let decision = decision.cloned();
        let t = self
            .product
            .id_of(cfg)
            .and_then(|id| self.lookup(id, &input, &decision))
            .ok_or_else(|| GifError::NoSuchTransition {
                configuration: self.base.describe(cfg),
                input: ProductChar(&input).to_string(),
                decision: show_decision(&decision),
            })?;
        Ok(self.meaning_of(t))
    }

    /// The interpretation carried out by product transition `t`.
    pub fn meaning_of(&self, t: usize) -> Meaning {
        let tr = &self.product.transitions()[t];
        Meaning {
            source: self.product.config(tr.from).clone(),
            input: tr.input.clone(),
            decision: self.decision_of[t].clone(),
            output: tr.output.clone(),
            target: self.product.config(tr.to).clone(),
        }
    }

    /// The product transition taken from `from` without any decision, if any.
    pub fn eps_step(&self, from: ConfigId) -> Option<usize> {
        match self.base.options(self.product.config(from)) {
            Options::Forced { input, .. } => self.lookup(from, &Some(input), &None),
            Options::Free { .. } => None,
        }
    }

    /// Decisions enabled at `from`, with the product transition each one fires.
    pub fn enabled(&self, from: ConfigId) -> Vec<(Symbol, usize)> {
        self.product
            .outgoing_indices(from)
            .iter()
            .filter_map(|&t| self.decision_of[t].clone().map(|d| (d, t)))
            .collect()
    }

    /// The product transition fired by `decision` at `from`.
    fn decided_step(&self, from: ConfigId, decision: &Symbol) -> Option<usize> {
        let input = match self.base.options(self.product.config(from)) {
            Options::Forced { input, .. } => Some(input),
            Options::Free { .. } => None,
        };
        self.lookup(from, &input, &Some(decision.clone()))
    }
}

/// Decisions to feed a game: a finite prefix, optionally followed by a
/// cycle repeated forever.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DecisionSequence {
    pub prefix: Vec<Symbol>,
    pub cycle: Option<Vec<Symbol>>,
}

impl DecisionSequence {
    pub fn finite(prefix: Vec<Symbol>) -> Self {
        DecisionSequence { prefix, cycle: None }
    }

    pub fn lasso(prefix: Vec<Symbol>, cycle: Vec<Symbol>) -> Self {
        DecisionSequence {
            prefix,
            cycle: Some(cycle),
        }
    }
}

/// One step of a game run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GifStep {
    pub transition: usize,
    pub meaning: Meaning,
}

/// The periodic part of an infinite run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LassoLoop {
    /// Index of the first step of the repeating segment.
    pub loop_start: usize,
    /// Configurations visited infinitely often.
    pub infinity_set: BTreeSet<Configuration>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GifRun {
    pub start: Configuration,
    /// Steps in order. For lassos this covers the prefix and the cycle laps
    /// replayed until a lap boundary repeated.
    pub steps: Vec<GifStep>,
    pub lasso: Option<LassoLoop>,
}

impl GifRun {
    pub fn last_configuration(&self) -> &Configuration {
        self.steps.last().map_or(&self.start, |s| &s.meaning.target)
    }

    /// The run as time-indexed triples, ending with the last configuration.
    pub fn fragment(&self) -> ProtocolFragment {
        let mut f = ProtocolFragment::new();
        for s in &self.steps {
            let m = &s.meaning;
            f.push(ProtocolTriple::new(m.input.clone(), m.source.pending.clone(), m.source.clone()).with_decision(m.decision.clone()));
        }
        let last = self.last_configuration();
        f.push(ProtocolTriple::new(None, last.pending.clone(), last.clone()));
        f
    }
}

struct Replay<'a> {
    gif: &'a Gif,
    here: ConfigId,
    steps: Vec<GifStep>,
    consumed: usize,
}

impl Replay<'_> {
    fn take(&mut self, t: usize) {
        self.steps.push(GifStep {
            transition: t,
            meaning: self.gif.meaning_of(t),
        });
        self.here = self.gif.product.transitions()[t].to;
    }

    /// Takes every step that needs no decision.
    fn drain(&mut self) {
        // Interruptibility bounds every forced segment by the number of configurations.
        for _ in 0..=self.gif.product.len() {
            match self.gif.eps_step(self.here) {
                Some(t) => self.take(t),
                None => return,
            }
        }
    }

    fn decide(&mut self, d: &Symbol) -> Result<(), GifError> {
        self.consumed += 1;
        self.drain();
        match self.gif.decided_step(self.here, d) {
            Some(t) => {
                self.take(t);
                Ok(())
            }
            None => Err(GifError::NotEnabled {
                position: self.consumed,
                decision: d.to_string(),
                configuration: self.gif.base.describe(self.gif.product.config(self.here)),
            }),
        }
    }
}

/// Replays a decision sequence from the initial configuration.
pub fn run_gif(g: &Gif, seq: &DecisionSequence) -> Result<GifRun, GifError> {
    run_gif_from(g, g.product.config(Product::INITIAL), seq)
}

/// Replays a decision sequence from a reachable configuration.
///
/// Steps that need no decision are taken automatically. A cycle is repeated
/// until the configuration at a lap boundary recurs; the configurations
/// between the two occurrences form the infinity set.
pub fn run_gif_from(g: &Gif, start: &Configuration, seq: &DecisionSequence) -> Result<GifRun, GifError> {
    for d in seq.prefix.iter().chain(seq.cycle.iter().flatten()) {
        g.decision(d.as_str())?;
    }
    let mut r = Replay {
        gif: g,
        here: g.id_of(start)?,
        steps: Vec::new(),
        consumed: 0,
    };
    for d in &seq.prefix {
        r.decide(d)?;
    }
    r.drain();
    let lasso = match &seq.cycle {
        None => None,
        Some(cycle) if cycle.is_empty() => return Err(GifError::IllPosed("the cycle of a lasso must not be empty".into())),
        Some(cycle) => {
            let mut boundaries: HashMap<ConfigId, usize> = HashMap::new();
            loop {
                if let Some(&at) = boundaries.get(&r.here) {
                    let infinity_set = r.steps[at..].iter().map(|s| s.meaning.source.clone()).collect();
                    break Some(LassoLoop {
                        loop_start: at,
                        infinity_set,
                    });
                }
                boundaries.insert(r.here, r.steps.len());
                for d in cycle {
                    r.decide(d)?;
                }
                r.drain();
            }
        }
    };
    Ok(GifRun {
        start: start.clone(),
        steps: r.steps,
        lasso,
    })
}

/// Whether the run induced by `seq` from `q0` is accepted.
///
/// A decision that is not enabled makes the answer `false`. Under Muller
/// acceptance the sequence must be a lasso; under finite acceptance it must
/// not be one, and the run has to stop in a final configuration.
pub fn fulfills(g: &Gif, q0: &Configuration, seq: &DecisionSequence) -> Result<bool, GifError> {
    let muller = g.base.uses_muller();
    match (muller, &seq.cycle) {
        (true, None) => {
            return Err(GifError::IllPosed(
                "Muller acceptance needs a decision cycle (--cycle)".into(),
            ))
        }
        (false, Some(_)) => {
            return Err(GifError::IllPosed(
                "finite acceptance is decided on finite decision sequences; drop the cycle".into(),
            ))
        }
        _ => {}
    }
    let run = match run_gif_from(g, q0, seq) {
        Ok(run) => run,
        Err(GifError::NotEnabled { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    Ok(match &run.lasso {
        Some(l) => g.base.muller_accepts(&l.infinity_set),
        None => {
            let end = g.id_of(run.last_configuration())?;
            let terminal = g.product.outgoing_indices(end).is_empty() && g.product.stuck().iter().all(|(s, _)| *s != end);
            terminal && g.base.is_final(run.last_configuration())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::IoAutomaton;
    use crate::fixtures::{railway, railway_labels, railway_without_arrival};
    use crate::protocol::Channel;
    use crate::symbol::sym;

    fn railway_gif() -> Gif {
        derive_decisions(&railway(), &railway_labels(), &Limits::default()).unwrap()
    }

    fn syms(names: &[&str]) -> Vec<Symbol> {
        names.iter().map(|n| sym(n)).collect()
    }

    #[test]
    fn railway_decisions_are_the_three_labels() {
        let g = railway_gif();
        let names: Vec<&str> = g.decisions().keys().map(|s| s.as_str()).collect();
        assert_eq!(names, ["IArrive", "ILeave", "ILetYouGo"]);
        assert!(g.decisions().values().all(|d| d.kind == DecisionKind::Spontaneous));
        assert_eq!(g.decisions()["ILetYouGo"].owner, sym("C"));
        assert_eq!(g.decisions()["IArrive"].owner, sym("Z"));
    }

    #[test]
    fn generated_names_without_labels() {
        let g = derive_decisions(&railway(), &BTreeMap::new(), &Limits::default()).unwrap();
        let names: Vec<&str> = g.decisions().keys().map(|s| s.as_str()).collect();
        assert_eq!(names, ["D_C_wait_1", "D_Z_away_1", "D_Z_bridge_1"]);
    }

    #[test]
    fn deterministic_protocol_has_no_decisions() {
        // A sends on start, B answers once, both stop.
        let a = IoAutomaton::builder()
            .inputs(["pong"])
            .outputs(["ping"])
            .states(["a0", "a1"])
            .initial("a0", "ping")
            .transition("a0", "pong", "eps", "a1")
            .build()
            .unwrap();
        let b = IoAutomaton::builder()
            .inputs(["ping"])
            .outputs(["pong"])
            .states(["b0", "b1"])
            .transition("b0", "ping", "pong", "b1")
            .build()
            .unwrap();
        let p = Protocol::new(
            [(sym("A"), a), (sym("B"), b)],
            [Channel::new(sym("A"), sym("B")), Channel::new(sym("B"), sym("A"))],
        )
        .unwrap();
        let g = derive_decisions(&p, &BTreeMap::new(), &Limits::default()).unwrap();
        assert!(g.decisions().is_empty());
        let run = run_gif(&g, &DecisionSequence::default()).unwrap();
        assert_eq!(run.steps.len(), 2);
        assert!(fulfills(&g, &p.initial_configuration(), &DecisionSequence::default()).unwrap());
    }

    #[test]
    fn two_spontaneous_transitions_get_two_decisions() {
        let a = IoAutomaton::builder()
            .states(["p", "q", "r"])
            .transition("p", "eps", "eps", "q")
            .transition("p", "eps", "eps", "r")
            .build()
            .unwrap();
        let p = Protocol::new([(sym("A"), a)], []).unwrap();
        let g = derive_decisions(&p, &BTreeMap::new(), &Limits::default()).unwrap();
        assert_eq!(g.decisions().len(), 2);
        assert!(g.decisions().values().all(|d| d.kind == DecisionKind::Spontaneous));
    }

    #[test]
    fn inconsistent_protocols_are_refused() {
        let r = derive_decisions(&railway_without_arrival(), &BTreeMap::new(), &Limits::default());
        assert!(matches!(r, Err(GifError::Inconsistent(_))));
    }

    #[test]
    fn label_validation() {
        let p = railway();
        let mut labels = railway_labels();
        let first = labels.keys().next().unwrap().clone();
        labels.insert(first.clone(), sym("away"));
        assert!(matches!(
            derive_decisions(&p, &labels, &Limits::default()),
            Err(GifError::NamingConflict { .. })
        ));
        let mut dup = railway_labels();
        for v in dup.values_mut() {
            *v = sym("Same");
        }
        assert!(matches!(
            derive_decisions(&p, &dup, &Limits::default()),
            Err(GifError::NamingConflict { .. })
        ));
        let forced = p.roles()[&sym("C")]
            .transitions()
            .iter()
            .find(|t| !t.is_spontaneous())
            .unwrap()
            .clone();
        let mut needless = railway_labels();
        needless.insert(TransitionRef::new(sym("C"), forced), sym("Extra"));
        assert!(matches!(
            derive_decisions(&p, &needless, &Limits::default()),
            Err(GifError::NeedlessLabel { .. })
        ));
    }

    #[test]
    fn interpret_follows_the_transition_function() {
        let g = railway_gif();
        let p = g.base();
        let start = p.parse_configuration("C=away, Z=away").unwrap();
        let m = g.interpret(&start, None, Some(&sym("IArrive"))).unwrap();
        assert_eq!(m.output, Some(Qualified::parse("Z.arrived").unwrap()));
        assert_eq!(p.describe(&m.target), "(C=away, Z=wait | Z.arrived)");
        let arrived = Qualified::parse("C.arrived").unwrap();
        let m2 = g.interpret(&m.target, Some(&arrived), None).unwrap();
        assert_eq!(m2.output, None);
        assert_eq!(p.describe(&m2.target), "(C=wait, Z=wait)");
        assert!(matches!(
            g.interpret(&start, None, Some(&sym("ILeave"))),
            Err(GifError::NoSuchTransition { .. })
        ));
    }

    #[test]
    fn railway_lasso_visits_the_whole_cycle() {
        let g = railway_gif();
        let run = run_gif(&g, &DecisionSequence::lasso(vec![], syms(&["IArrive", "ILetYouGo", "ILeave"]))).unwrap();
        let l = run.lasso.as_ref().unwrap();
        assert_eq!(l.loop_start, 0);
        assert_eq!(l.infinity_set.len(), 6);
        assert_eq!(run.steps.len(), 6);
        let q0 = g.base().initial_configuration();
        assert!(fulfills(&g, &q0, &DecisionSequence::lasso(vec![], syms(&["IArrive", "ILetYouGo", "ILeave"]))).unwrap());
    }

    #[test]
    fn repeated_arrival_is_not_enabled() {
        let g = railway_gif();
        let e = run_gif(&g, &DecisionSequence::finite(syms(&["IArrive", "IArrive"]))).unwrap_err();
        assert!(matches!(e, GifError::NotEnabled { position: 2, .. }));
        let q0 = g.base().initial_configuration();
        assert!(!fulfills(&g, &q0, &DecisionSequence::lasso(vec![], syms(&["IArrive"]))).unwrap());
    }

    #[test]
    fn empty_sequence_stays_at_the_start() {
        let g = railway_gif();
        let run = run_gif(&g, &DecisionSequence::default()).unwrap();
        assert!(run.steps.is_empty());
        assert_eq!(run.fragment().len(), 1);
    }

    #[test]
    fn ill_posed_queries() {
        let g = railway_gif();
        let q0 = g.base().initial_configuration();
        assert!(matches!(
            fulfills(&g, &q0, &DecisionSequence::finite(syms(&["IArrive"]))),
            Err(GifError::IllPosed(_))
        ));
        assert!(matches!(
            run_gif(&g, &DecisionSequence::lasso(vec![], vec![])),
            Err(GifError::IllPosed(_))
        ));
        assert!(matches!(
            run_gif(&g, &DecisionSequence::finite(syms(&["Nope"]))),
            Err(GifError::UnknownDecision(_))
        ));
    }

    #[test]
    fn replay_is_deterministic_and_matches_fragment_times() {
        let g = railway_gif();
        let seq = DecisionSequence::lasso(syms(&["IArrive"]), syms(&["ILetYouGo", "ILeave", "IArrive"]));
        let a = run_gif(&g, &seq).unwrap();
        let b = run_gif(&g, &seq).unwrap();
        assert_eq!(a, b);
        let f = a.fragment();
        assert!(f.steps().iter().enumerate().all(|(k, t)| t.time == k));
        assert_eq!(a.lasso.unwrap().infinity_set.len(), 6);
    }

    #[test]
    fn selection_decisions_for_branching_receptions() {
        // S emits m once; R may take it into r1 or r2.
        let s = IoAutomaton::builder()
            .outputs(["m"])
            .states(["s0", "s1"])
            .transition("s0", "eps", "m", "s1")
            .build()
            .unwrap();
        let r = IoAutomaton::builder()
            .inputs(["m"])
            .states(["r0", "r1", "r2"])
            .transition("r0", "m", "eps", "r1")
            .transition("r0", "m", "eps", "r2")
            .build()
            .unwrap();
        let p = Protocol::new([(sym("R"), r), (sym("S"), s)], [Channel::new(sym("S"), sym("R"))]).unwrap();
        let g = derive_decisions(&p, &BTreeMap::new(), &Limits::default()).unwrap();
        let kinds: Vec<DecisionKind> = g.decisions().values().map(|d| d.kind).collect();
        assert_eq!(kinds.iter().filter(|k| **k == DecisionKind::Selection).count(), 2);
        let sel: Vec<Symbol> = g
            .decisions()
            .values()
            .filter(|d| d.kind == DecisionKind::Selection)
            .map(|d| d.name.clone())
            .collect();
        let spont = g
            .decisions()
            .values()
            .find(|d| d.kind == DecisionKind::Spontaneous)
            .unwrap()
            .name
            .clone();
        let run = run_gif(&g, &DecisionSequence::finite(vec![spont.clone(), sel[1].clone()])).unwrap();
        assert_eq!(run.steps.len(), 2);
        assert_eq!(run.steps[1].meaning.decision.as_ref(), Some(&sel[1]));
        // The spontaneous step alone leaves the selection open: not terminal.
        let q0 = p.initial_configuration();
        assert!(!fulfills(&g, &q0, &DecisionSequence::finite(vec![spont.clone()])).unwrap());
        assert!(fulfills(&g, &q0, &DecisionSequence::finite(vec![spont, sel[0].clone()])).unwrap());
    }
}
