//! Single I/O automata: alphabets, transitions, acceptance components.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::ModelError;
use crate::run::ExecutionFragment;
use crate::symbol::{Character, Symbol};

/// A finite set of symbols. Iteration order is lexicographic.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Alphabet(BTreeSet<Symbol>);

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an alphabet, rejecting duplicate names.
    pub fn from_symbols<I: IntoIterator<Item = Symbol>>(symbols: I) -> Result<Self, ModelError> {
        let mut set = BTreeSet::new();
        for s in symbols {
            if !set.insert(s.clone()) {
                return Err(ModelError::Duplicate(s.to_string()));
            }
        }
        Ok(Alphabet(set))
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.0.contains(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Symbol> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn admits(&self, c: &Character) -> bool {
        match c {
            Character::Eps => true,
            Character::Named(s) => self.contains(s),
        }
    }
}

impl<'a> IntoIterator for &'a Alphabet {
    type Item = &'a Symbol;
    type IntoIter = std::collections::btree_set::Iter<'a, Symbol>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// One element of the transition relation: `from --input/output--> to`.
///
/// Field order makes the derived ordering group transitions by source state.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Transition {
    pub from: Symbol,
    pub input: Character,
    pub output: Character,
    pub to: Symbol,
}

impl Transition {
    pub fn new(from: Symbol, input: Character, output: Character, to: Symbol) -> Self {
        Transition {
            from,
            input,
            output,
            to,
        }
    }

    /// A transition without input character.
    pub fn is_spontaneous(&self) -> bool {
        self.input.is_eps()
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -- {} / {} --> {}", self.from, self.input, self.output, self.to)
    }
}

/// The success model of an automaton.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Acceptance {
    /// Finite runs succeed when they stop in one of these state values.
    FiniteFinal(BTreeSet<Symbol>),
    /// Infinite runs succeed when their set of infinitely often visited
    /// state values is one of these sets.
    Muller(BTreeSet<BTreeSet<Symbol>>),
}

impl Acceptance {
    pub fn is_muller(&self) -> bool {
        matches!(self, Acceptance::Muller(_))
    }

    fn states(&self) -> Box<dyn Iterator<Item = &Symbol> + '_> {
        match self {
            Acceptance::FiniteFinal(set) => Box::new(set.iter()),
            Acceptance::Muller(family) => Box::new(family.iter().flatten()),
        }
    }

    fn map(&self, f: impl Fn(&Symbol) -> Symbol) -> Acceptance {
        match self {
            Acceptance::FiniteFinal(set) => Acceptance::FiniteFinal(set.iter().map(&f).collect()),
            Acceptance::Muller(family) => Acceptance::Muller(
                family
                    .iter()
                    .map(|set| set.iter().map(&f).collect())
                    .collect(),
            ),
        }
    }
}

/// An input/output automaton `(I, O, Q, (q0, o0), Δ, Acc)`.
///
/// Every value of this type is well typed: transitions and acceptance only
/// mention declared names, and the three alphabets are pairwise disjoint.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IoAutomaton {
    inputs: Alphabet,
    outputs: Alphabet,
    states: Alphabet,
    initial_state: Symbol,
    initial_output: Character,
    transitions: BTreeSet<Transition>,
    acceptance: Acceptance,
}

impl IoAutomaton {
    pub fn new(
        inputs: Alphabet,
        outputs: Alphabet,
        states: Alphabet,
        initial: (Symbol, Character),
        transitions: impl IntoIterator<Item = Transition>,
        acceptance: Acceptance,
    ) -> Result<Self, ModelError> {
        if states.is_empty() {
            return Err(ModelError::NoStates);
        }
        let kinds = [
            (&inputs, "an input"),
            (&outputs, "an output"),
            (&states, "a state value"),
        ];
        for (i, (a, first)) in kinds.iter().enumerate() {
            for (b, second) in &kinds[i + 1..] {
                if let Some(s) = a.iter().find(|s| b.contains(s)) {
                    return Err(ModelError::AlphabetOverlap {
                        name: s.to_string(),
                        first,
                        second,
                    });
                }
            }
        }
        let (initial_state, initial_output) = initial;
        if !states.contains(&initial_state) {
            return Err(ModelError::UnknownState(initial_state.to_string()));
        }
        if !outputs.admits(&initial_output) {
            return Err(ModelError::UnknownOutput(initial_output.to_string()));
        }
        let mut set = BTreeSet::new();
        for t in transitions {
            for q in [&t.from, &t.to] {
                if !states.contains(q) {
                    return Err(ModelError::UnknownState(q.to_string()));
                }
            }
            if !inputs.admits(&t.input) {
                return Err(ModelError::UnknownInput(t.input.to_string()));
            }
            if !outputs.admits(&t.output) {
                return Err(ModelError::UnknownOutput(t.output.to_string()));
            }
            if let Some(dup) = set.replace(t) {
                return Err(ModelError::Duplicate(dup.to_string()));
            }
        }
        if let Some(q) = acceptance.states().find(|q| !states.contains(q)) {
            return Err(ModelError::UnknownState(q.to_string()));
        }
        Ok(IoAutomaton {
            inputs,
            outputs,
            states,
            initial_state,
            initial_output,
            transitions: set,
            acceptance,
        })
    }

    pub fn builder() -> IoAutomatonBuilder {
        IoAutomatonBuilder::default()
    }

    pub fn inputs(&self) -> &Alphabet {
        &self.inputs
    }

    pub fn outputs(&self) -> &Alphabet {
        &self.outputs
    }

    pub fn states(&self) -> &Alphabet {
        &self.states
    }

    pub fn initial_state(&self) -> &Symbol {
        &self.initial_state
    }

    pub fn initial_output(&self) -> &Character {
        &self.initial_output
    }

    pub fn transitions(&self) -> &BTreeSet<Transition> {
        &self.transitions
    }

    pub fn acceptance(&self) -> &Acceptance {
        &self.acceptance
    }

    /// Transitions leaving `state` that consume `input` (`Eps` selects the
    /// spontaneous ones).
    pub fn transitions_from<'a>(
        &'a self,
        state: &'a Symbol,
        input: &'a Character,
    ) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions
            .iter()
            .filter(move |t| &t.from == state && &t.input == input)
    }

    /// All names used by the automaton: inputs, outputs and state values.
    pub fn names(&self) -> impl Iterator<Item = &Symbol> {
        self.inputs
            .iter()
            .chain(self.outputs.iter())
            .chain(self.states.iter())
    }

    /// True iff every `(input, state)` pair has at most one transition and no
    /// transition is spontaneous.
    ///
    /// A spontaneous transition is always a choice point, even when it is the
    /// only transition leaving its state: the automaton may fire it now or
    /// later. This keeps the property in line with decision derivation, where
    /// every spontaneous transition receives a decision.
    pub fn is_deterministic(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.transitions
            .iter()
            .all(|t| !t.is_spontaneous() && seen.insert((&t.input, &t.from)))
    }

    /// Replaces names according to `mapping`; names not in the mapping are kept.
    ///
    /// The mapping must be injective on the names this automaton uses, and no
    /// image may coincide with a name that stays unmapped.
    pub fn rename_characters(&self, mapping: &BTreeMap<Symbol, Symbol>) -> Result<Self, ModelError> {
        let used: BTreeSet<&Symbol> = self.names().collect();
        check_renaming(used.iter().copied(), mapping)?;
        let f = |s: &Symbol| mapping.get(s).cloned().unwrap_or_else(|| s.clone());
        let fc = |c: &Character| match c {
            Character::Eps => Character::Eps,
            Character::Named(s) => Character::Named(f(s)),
        };
        let alpha = |a: &Alphabet| Alphabet(a.iter().map(f).collect());
        Ok(IoAutomaton {
            inputs: alpha(&self.inputs),
            outputs: alpha(&self.outputs),
            states: alpha(&self.states),
            initial_state: f(&self.initial_state),
            initial_output: fc(&self.initial_output),
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition::new(f(&t.from), fc(&t.input), fc(&t.output), f(&t.to)))
                .collect(),
            acceptance: self.acceptance.map(f),
        })
    }

    /// Checks that consecutive triples are linked by a transition, with input
    /// and source state at time `k` and output and target state at `k + 1`.
    pub fn admits_fragment(&self, fragment: &ExecutionFragment<Character, Symbol>) -> bool {
        fragment.steps().windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            self.transitions.contains(&Transition::new(
                a.state.clone(),
                a.input.clone(),
                b.output.clone(),
                b.state.clone(),
            ))
        })
    }

    /// A fragment is a run when it starts in the initial state and output.
    pub fn is_run(&self, fragment: &ExecutionFragment<Character, Symbol>) -> bool {
        match fragment.steps().first() {
            Some(first) => {
                first.state == self.initial_state
                    && first.output == self.initial_output
                    && self.admits_fragment(fragment)
            }
            None => false,
        }
    }
}

/// Validates a renaming restricted to `used` names.
pub(crate) fn check_renaming<'a>(
    used: impl Iterator<Item = &'a Symbol>,
    mapping: &BTreeMap<Symbol, Symbol>,
) -> Result<(), ModelError> {
    let used: BTreeSet<&Symbol> = used.collect();
    let mut images: BTreeMap<&Symbol, &Symbol> = BTreeMap::new();
    for s in &used {
        if let Some(t) = mapping.get(*s) {
            if let Some(prev) = images.insert(t, s) {
                return Err(ModelError::NonInjective {
                    first: prev.to_string(),
                    second: s.to_string(),
                    target: t.to_string(),
                });
            }
        }
    }
    for (t, s) in &images {
        if used.contains(t) && !mapping.contains_key(*t) {
            return Err(ModelError::NamingConflict {
                source_name: s.to_string(),
                target: t.to_string(),
            });
        }
    }
    Ok(())
}

/// Convenience builder taking plain strings; `"eps"` denotes the empty character.
#[derive(Default)]
pub struct IoAutomatonBuilder {
    inputs: Vec<String>,
    outputs: Vec<String>,
    states: Vec<String>,
    initial: Option<(String, String)>,
    transitions: Vec<[String; 4]>,
    acceptance: Option<AcceptanceSpec>,
}

enum AcceptanceSpec {
    Final(Vec<String>),
    Muller(Vec<Vec<String>>),
}

fn owned<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    names.into_iter().map(str::to_string).collect()
}

impl IoAutomatonBuilder {
    pub fn inputs<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        self.inputs = owned(names);
        self
    }

    pub fn outputs<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        self.outputs = owned(names);
        self
    }

    pub fn states<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        self.states = owned(names);
        self
    }

    pub fn initial(mut self, state: &str, output: &str) -> Self {
        self.initial = Some((state.to_string(), output.to_string()));
        self
    }

    pub fn transition(mut self, from: &str, input: &str, output: &str, to: &str) -> Self {
        self.transitions
            .push([from, input, output, to].map(str::to_string));
        self
    }

    pub fn final_states<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        self.acceptance = Some(AcceptanceSpec::Final(owned(names)));
        self
    }

    pub fn muller<'a, S>(mut self, family: impl IntoIterator<Item = S>) -> Self
    where
        S: IntoIterator<Item = &'a str>,
    {
        self.acceptance = Some(AcceptanceSpec::Muller(
            family.into_iter().map(owned).collect(),
        ));
        self
    }

    /// Defaults: initial state is the first listed state with empty output;
    /// acceptance is "every state is final".
    pub fn build(self) -> Result<IoAutomaton, ModelError> {
        let syms = |v: &[String]| -> Result<Vec<Symbol>, ModelError> {
            v.iter().map(|s| Symbol::new(s)).collect()
        };
        let states = syms(&self.states)?;
        let initial = match &self.initial {
            Some((q, o)) => (Symbol::new(q)?, Character::parse(o)?),
            None => (
                states.first().cloned().ok_or(ModelError::NoStates)?,
                Character::Eps,
            ),
        };
        let acceptance = match &self.acceptance {
            None => Acceptance::FiniteFinal(states.iter().cloned().collect()),
            Some(AcceptanceSpec::Final(v)) => Acceptance::FiniteFinal(syms(v)?.into_iter().collect()),
            Some(AcceptanceSpec::Muller(fam)) => Acceptance::Muller(
                fam.iter()
                    .map(|v| syms(v).map(|s| s.into_iter().collect()))
                    .collect::<Result<_, _>>()?,
            ),
        };
        let transitions = self
            .transitions
            .iter()
            .map(|[f, i, o, t]| {
                Ok(Transition::new(
                    Symbol::new(f)?,
                    Character::parse(i)?,
                    Character::parse(o)?,
                    Symbol::new(t)?,
                ))
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        IoAutomaton::new(
            Alphabet::from_symbols(syms(&self.inputs)?)?,
            Alphabet::from_symbols(syms(&self.outputs)?)?,
            Alphabet::from_symbols(states)?,
            initial,
            transitions,
            acceptance,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::StateTriple;
    use crate::symbol::sym;

    fn controller() -> IoAutomaton {
        IoAutomaton::builder()
            .inputs(["arrived", "left"])
            .outputs(["go"])
            .states(["away", "wait", "bridge"])
            .transition("away", "arrived", "eps", "wait")
            .transition("wait", "eps", "go", "bridge")
            .transition("bridge", "left", "eps", "away")
            .muller([["away", "wait", "bridge"]])
            .build()
            .unwrap()
    }

    #[test]
    fn spontaneous_transition_makes_controller_nondeterministic() {
        // One transition per (input, state), but `wait` fires spontaneously.
        assert!(!controller().is_deterministic());
    }

    #[test]
    fn empty_delta_is_deterministic() {
        let a = IoAutomaton::builder().states(["p"]).build().unwrap();
        assert!(a.is_deterministic());
    }

    #[test]
    fn duplicate_input_choice_is_nondeterministic() {
        let a = IoAutomaton::builder()
            .inputs(["a"])
            .states(["p", "q1", "q2"])
            .transition("p", "a", "eps", "q1")
            .transition("p", "a", "eps", "q2")
            .build()
            .unwrap();
        assert!(!a.is_deterministic());
        let b = IoAutomaton::builder()
            .inputs(["a", "b"])
            .states(["p", "q1"])
            .transition("p", "a", "eps", "q1")
            .transition("p", "b", "eps", "q1")
            .transition("q1", "a", "eps", "p")
            .build()
            .unwrap();
        assert!(b.is_deterministic());
    }

    #[test]
    fn construction_rejects_ill_typed_parts() {
        let base = || {
            IoAutomaton::builder()
                .inputs(["a"])
                .outputs(["b"])
                .states(["p"])
        };
        assert!(matches!(
            base().transition("p", "a", "eps", "zz").build(),
            Err(ModelError::UnknownState(_))
        ));
        assert!(matches!(
            base().transition("p", "b", "eps", "p").build(),
            Err(ModelError::UnknownInput(_))
        ));
        assert!(matches!(
            base().initial("p", "a").build(),
            Err(ModelError::UnknownOutput(_))
        ));
        assert!(matches!(
            base().final_states(["q"]).build(),
            Err(ModelError::UnknownState(_))
        ));
        assert!(matches!(
            IoAutomaton::builder().inputs(["p"]).states(["p"]).build(),
            Err(ModelError::AlphabetOverlap { .. })
        ));
        assert!(matches!(
            IoAutomaton::builder().states(Vec::<&str>::new()).build(),
            Err(ModelError::NoStates)
        ));
        assert!(matches!(
            IoAutomaton::builder().states(["p", "p"]).build(),
            Err(ModelError::Duplicate(_))
        ));
    }

    #[test]
    fn identity_renaming_is_identity() {
        let a = controller();
        assert_eq!(a.rename_characters(&BTreeMap::new()).unwrap(), a);
        let id: BTreeMap<_, _> = a.names().map(|s| (s.clone(), s.clone())).collect();
        assert_eq!(a.rename_characters(&id).unwrap(), a);
    }

    #[test]
    fn swap_renaming_round_trips() {
        let a = controller();
        let swap: BTreeMap<_, _> = [(sym("arrived"), sym("left")), (sym("left"), sym("arrived"))]
            .into_iter()
            .collect();
        let b = a.rename_characters(&swap).unwrap();
        assert_ne!(a, b);
        assert_eq!(b.rename_characters(&swap).unwrap(), a);
    }

    #[test]
    fn non_injective_and_colliding_renamings_fail() {
        let a = controller();
        let merge: BTreeMap<_, _> = [(sym("arrived"), sym("x")), (sym("left"), sym("x"))]
            .into_iter()
            .collect();
        assert!(matches!(
            a.rename_characters(&merge),
            Err(ModelError::NonInjective { .. })
        ));
        let collide: BTreeMap<_, _> = [(sym("arrived"), sym("go"))].into_iter().collect();
        assert!(matches!(
            a.rename_characters(&collide),
            Err(ModelError::NamingConflict { .. })
        ));
    }

    #[test]
    fn fragments_follow_transition_timing() {
        let a = controller();
        let mut f = ExecutionFragment::new();
        let t = |input: &str, output: &str, state: &str| {
            (Character::parse(input).unwrap(), Character::parse(output).unwrap(), sym(state))
        };
        for (i, o, q) in [
            t("arrived", "eps", "away"),
            t("eps", "eps", "wait"),
            t("eps", "go", "bridge"),
        ] {
            f.push(StateTriple::new(i, o, q));
        }
        assert!(a.is_run(&f));
        assert_eq!(f.path(), vec![sym("away"), sym("wait"), sym("bridge")]);
        let mut bad = ExecutionFragment::new();
        bad.push(StateTriple::new(Character::Eps, Character::Eps, sym("away")));
        bad.push(StateTriple::new(Character::Eps, Character::Eps, sym("wait")));
        assert!(!a.admits_fragment(&bad));
    }
}
