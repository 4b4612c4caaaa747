//! Roles coupled by Shannon-state channels, and the protocol execution rule.
//!
//! A channel `A -> B` couples every output character of role `A` to the
//! equally named input character of role `B`. Because every product
//! character has at most one non-empty component and a pending output is
//! delivered in the very next step, a configuration holds at most one
//! in-flight character.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::automaton::{check_renaming, IoAutomaton, Transition};
use crate::error::ModelError;
use crate::run::{ExecutionFragment, StateTriple};
use crate::symbol::{Character, ProductChar, Qualified, Symbol};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Channel {
    pub sender: Symbol,
    pub receiver: Symbol,
}

impl Channel {
    pub fn new(sender: Symbol, receiver: Symbol) -> Self {
        Channel { sender, receiver }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.sender, self.receiver)
    }
}

/// A transition of one role, as seen from the protocol.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TransitionRef {
    pub role: Symbol,
    pub transition: Transition,
}

impl TransitionRef {
    pub fn new(role: Symbol, transition: Transition) -> Self {
        TransitionRef { role, transition }
    }
}

impl fmt::Display for TransitionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.role, self.transition)
    }
}

/// The global state of a protocol: one state value per role (in role order)
/// plus the character currently in flight, if any.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Configuration {
    pub states: Vec<Symbol>,
    pub pending: Option<Qualified>,
}

pub type ProtocolTriple = StateTriple<Option<Qualified>, Configuration>;
pub type ProtocolFragment = ExecutionFragment<Option<Qualified>, Configuration>;

/// A set of roles and the channels coupling them.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Protocol {
    roles: BTreeMap<Symbol, IoAutomaton>,
    channels: BTreeSet<Channel>,
    order: Vec<Symbol>,
    routes: BTreeMap<(Symbol, Symbol), Symbol>,
}

impl Protocol {
    pub fn new(
        roles: impl IntoIterator<Item = (Symbol, IoAutomaton)>,
        channels: impl IntoIterator<Item = Channel>,
    ) -> Result<Self, ModelError> {
        let mut role_map = BTreeMap::new();
        for (id, a) in roles {
            if role_map.insert(id.clone(), a).is_some() {
                return Err(ModelError::Duplicate(id.to_string()));
            }
        }
        if role_map.is_empty() {
            return Err(ModelError::NoRoles);
        }
        let mut channel_set = BTreeSet::new();
        let mut routes: BTreeMap<(Symbol, Symbol), Symbol> = BTreeMap::new();
        for c in channels {
            let sender = role_map
                .get(&c.sender)
                .ok_or_else(|| ModelError::UnknownRole(c.sender.to_string()))?;
            let receiver = role_map
                .get(&c.receiver)
                .ok_or_else(|| ModelError::UnknownRole(c.receiver.to_string()))?;
            if c.sender == c.receiver {
                return Err(ModelError::SelfChannel(c.sender.to_string()));
            }
            let carried: Vec<&Symbol> = sender
                .outputs()
                .iter()
                .filter(|o| receiver.inputs().contains(o))
                .collect();
            if carried.is_empty() {
                return Err(ModelError::UnroutableChannel {
                    sender: c.sender.to_string(),
                    receiver: c.receiver.to_string(),
                });
            }
            for ch in carried {
                let key = (c.sender.clone(), ch.clone());
                if let Some(prev) = routes.insert(key, c.receiver.clone()) {
                    return Err(ModelError::AmbiguousRoute {
                        sender: c.sender.to_string(),
                        character: ch.to_string(),
                        first: prev.to_string(),
                        second: c.receiver.to_string(),
                    });
                }
            }
            if !channel_set.insert(c.clone()) {
                return Err(ModelError::DuplicateChannel {
                    sender: c.sender.to_string(),
                    receiver: c.receiver.to_string(),
                });
            }
        }
        let finite = role_map.iter().find(|(_, a)| !a.acceptance().is_muller());
        let muller = role_map.iter().find(|(_, a)| a.acceptance().is_muller());
        if let (Some((f, _)), Some((m, _))) = (finite, muller) {
            return Err(ModelError::MixedAcceptance {
                finite: f.to_string(),
                muller: m.to_string(),
            });
        }
        let mut emitting = role_map.iter().filter(|(_, a)| !a.initial_output().is_eps());
        if let (Some((a, _)), Some((b, _))) = (emitting.next(), emitting.next()) {
            return Err(ModelError::MultipleInitialOutputs {
                first: a.to_string(),
                second: b.to_string(),
            });
        }
        Ok(Protocol {
            order: role_map.keys().cloned().collect(),
            roles: role_map,
            channels: channel_set,
            routes,
        })
    }

    pub fn roles(&self) -> &BTreeMap<Symbol, IoAutomaton> {
        &self.roles
    }

    pub fn role(&self, id: &Symbol) -> Option<&IoAutomaton> {
        self.roles.get(id)
    }

    pub fn channels(&self) -> &BTreeSet<Channel> {
        &self.channels
    }

    /// Role ids in configuration order.
    pub fn role_ids(&self) -> &[Symbol] {
        &self.order
    }

    pub fn role_index(&self, id: &Symbol) -> Option<usize> {
        self.order.binary_search(id).ok()
    }

    /// The receiving role for an output character of `sender`, if routed.
    pub fn route(&self, sender: &Symbol, character: &Symbol) -> Option<&Symbol> {
        self.routes.get(&(sender.clone(), character.clone()))
    }

    /// True iff every output is routed to some receiver and every input is fed
    /// by some channel, i.e. the protocol has no external characters.
    pub fn check_closed(&self) -> bool {
        self.roles.iter().all(|(id, a)| {
            a.outputs().iter().all(|o| self.route(id, o).is_some())
                && a.inputs().iter().all(|i| {
                    self.channels.iter().any(|c| {
                        &c.receiver == id && self.roles[&c.sender].outputs().contains(i)
                    })
                })
        })
    }

    /// All names used by any role, plus the role ids.
    pub fn names(&self) -> BTreeSet<Symbol> {
        self.roles
            .iter()
            .flat_map(|(id, a)| std::iter::once(id).chain(a.names()))
            .cloned()
            .collect()
    }

    /// Applies one renaming to the characters and state values of every role.
    pub fn rename_characters(&self, mapping: &BTreeMap<Symbol, Symbol>) -> Result<Self, ModelError> {
        let used: BTreeSet<&Symbol> = self.roles.values().flat_map(|a| a.names()).collect();
        check_renaming(used.into_iter(), mapping)?;
        if let Some(id) = self.order.iter().find(|id| mapping.values().any(|v| v == *id)) {
            return Err(ModelError::NamingConflict {
                source_name: mapping
                    .iter()
                    .find(|(_, v)| v == &id)
                    .map(|(k, _)| k.to_string())
                    .unwrap_or_default(),
                target: id.to_string(),
            });
        }
        let roles = self
            .roles
            .iter()
            .map(|(id, a)| Ok((id.clone(), a.rename_characters(mapping)?)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        Protocol::new(roles, self.channels.iter().cloned())
    }

    pub fn initial_configuration(&self) -> Configuration {
        let pending = self.roles.iter().find_map(|(id, a)| {
            a.initial_output()
                .symbol()
                .map(|o| Qualified::new(id.clone(), o.clone()))
        });
        Configuration {
            states: self.roles.values().map(|a| a.initial_state().clone()).collect(),
            pending,
        }
    }

    /// Checks that a configuration assigns a declared state value to every role.
    pub fn validate_configuration(&self, cfg: &Configuration) -> Result<(), ModelError> {
        if cfg.states.len() != self.order.len() {
            return Err(ModelError::BadConfiguration(format!(
                "expected {} state values, got {}",
                self.order.len(),
                cfg.states.len()
            )));
        }
        for (id, q) in self.order.iter().zip(&cfg.states) {
            if !self.roles[id].states().contains(q) {
                return Err(ModelError::UnknownState(format!("{id}.{q}")));
            }
        }
        if let Some(p) = &cfg.pending {
            let ok = self.roles.get(&p.role).is_some_and(|a| a.outputs().contains(&p.name));
            if !ok {
                return Err(ModelError::BadConfiguration(format!("`{p}` is not an output")));
            }
        }
        Ok(())
    }

    /// What the execution rule allows at `cfg`.
    ///
    /// A routed pending output forces the input of its receiver; otherwise any
    /// role may fire a spontaneous transition. An unrouted pending output
    /// leaves the protocol and does not constrain the next step.
    pub fn options(&self, cfg: &Configuration) -> Options {
        if let Some(p) = &cfg.pending {
            if let Some(receiver) = self.route(&p.role, &p.name) {
                let idx = self.role_index(receiver).expect("routes point at roles");
                let input = Character::Named(p.name.clone());
                let moves = self.roles[receiver]
                    .transitions_from(&cfg.states[idx], &input)
                    .map(|t| TransitionRef::new(receiver.clone(), t.clone()))
                    .collect();
                return Options::Forced {
                    input: Qualified::new(receiver.clone(), p.name.clone()),
                    moves,
                };
            }
        }
        let moves = self
            .order
            .iter()
            .zip(&cfg.states)
            .flat_map(|(id, q)| {
                self.roles[id]
                    .transitions_from(q, &Character::Eps)
                    .map(move |t| TransitionRef::new(id.clone(), t.clone()))
            })
            .collect();
        Options::Free { moves }
    }

    /// The configuration reached by firing `fired` at `cfg`.
    pub fn apply(&self, cfg: &Configuration, fired: &TransitionRef) -> Configuration {
        let idx = self.role_index(&fired.role).expect("transition of a known role");
        let mut states = cfg.states.clone();
        states[idx] = fired.transition.to.clone();
        let pending = fired
            .transition
            .output
            .symbol()
            .map(|o| Qualified::new(fired.role.clone(), o.clone()));
        Configuration { states, pending }
    }

    /// The product-level input consumed when `fired` is taken.
    pub fn input_of(&self, fired: &TransitionRef) -> Option<Qualified> {
        fired
            .transition
            .input
            .symbol()
            .map(|i| Qualified::new(fired.role.clone(), i.clone()))
    }

    pub fn output_of(&self, fired: &TransitionRef) -> Option<Qualified> {
        fired
            .transition
            .output
            .symbol()
            .map(|o| Qualified::new(fired.role.clone(), o.clone()))
    }

    /// Renders `(C=away, Z=wait | Z.arrived)`.
    pub fn describe(&self, cfg: &Configuration) -> String {
        let states: Vec<String> = self
            .order
            .iter()
            .zip(&cfg.states)
            .map(|(id, q)| format!("{id}={q}"))
            .collect();
        match &cfg.pending {
            None => format!("({})", states.join(", ")),
            Some(p) => format!("({} | {p})", states.join(", ")),
        }
    }

    /// Parses the form produced by [`Protocol::describe`]. Parentheses and
    /// whitespace are optional, and `+` may replace `|`.
    pub fn parse_configuration(&self, text: &str) -> Result<Configuration, ModelError> {
        let compact: String = text
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '(' && *c != ')')
            .collect();
        let (assign, pending) = match compact.split_once(['|', '+']) {
            Some((a, p)) => (a, Some(p)),
            None => (compact.as_str(), None),
        };
        let mut map = BTreeMap::new();
        for part in assign.split(',').filter(|p| !p.is_empty()) {
            let (role, state) = part
                .split_once('=')
                .ok_or_else(|| ModelError::BadConfiguration(format!("expected ROLE=STATE, got `{part}`")))?;
            map.insert(Symbol::new(role)?, Symbol::new(state)?);
        }
        let states = self
            .order
            .iter()
            .map(|id| {
                map.remove(id)
                    .ok_or_else(|| ModelError::BadConfiguration(format!("no state given for role {id}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some((extra, _)) = map.into_iter().next() {
            return Err(ModelError::UnknownRole(extra.to_string()));
        }
        let pending = match pending {
            None | Some("eps") | Some("") => None,
            Some(p) => Some(Qualified::parse(p)?),
        };
        let cfg = Configuration { states, pending };
        self.validate_configuration(&cfg)?;
        Ok(cfg)
    }
}

/// The moves the execution rule offers at a configuration.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Options {
    /// A pending output forces this input; `moves` are the receiver's
    /// transitions consuming it (empty means the protocol is stuck).
    Forced {
        input: Qualified,
        moves: Vec<TransitionRef>,
    },
    /// No forced input; `moves` are the enabled spontaneous transitions.
    Free { moves: Vec<TransitionRef> },
}

impl Options {
    pub fn moves(&self) -> &[TransitionRef] {
        match self {
            Options::Forced { moves, .. } | Options::Free { moves } => moves,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Step {
    Moved {
        triple: ProtocolTriple,
        fired: TransitionRef,
        next: Configuration,
    },
    /// No transition is possible; the run ends normally.
    Terminated { triple: ProtocolTriple },
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum StepError {
    /// The forced input has no consuming transition: the protocol is not
    /// well formed.
    #[error("input {input} cannot be processed")]
    Undeliverable {
        configuration: Configuration,
        input: Qualified,
    },
    #[error("{} transitions are possible; a choice is required", options.len())]
    ChoiceRequired { options: Vec<TransitionRef> },
    #[error("{choice} is not enabled")]
    InvalidChoice { choice: TransitionRef },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Performs one step of the execution rule at time `time`.
///
/// A routed pending output is delivered first and the selector is only
/// consulted when the receiver has several transitions for it. Otherwise the
/// selector picks among the enabled spontaneous transitions; a single enabled
/// transition is taken without a selector.
pub fn step(
    p: &Protocol,
    cfg: &Configuration,
    time: usize,
    choice: Option<&TransitionRef>,
) -> Result<Step, StepError> {
    p.validate_configuration(cfg)?;
    let triple = |input: Option<Qualified>| {
        let mut t = StateTriple::new(input, cfg.pending.clone(), cfg.clone());
        t.time = time;
        t
    };
    let fired = match p.options(cfg) {
        Options::Forced { input, moves } => match moves.len() {
            0 => {
                return Err(StepError::Undeliverable {
                    configuration: cfg.clone(),
                    input,
                })
            }
            1 => moves.into_iter().next().unwrap(),
            _ => select(moves, choice)?,
        },
        Options::Free { moves } => match moves.len() {
            0 => return Ok(Step::Terminated { triple: triple(None) }),
            1 if choice.is_none() => moves.into_iter().next().unwrap(),
            _ => select(moves, choice)?,
        },
    };
    Ok(Step::Moved {
        triple: triple(p.input_of(&fired)),
        next: p.apply(cfg, &fired),
        fired,
    })
}

fn select(moves: Vec<TransitionRef>, choice: Option<&TransitionRef>) -> Result<TransitionRef, StepError> {
    match choice {
        None => Err(StepError::ChoiceRequired { options: moves }),
        Some(c) if moves.contains(c) => Ok(c.clone()),
        Some(c) => Err(StepError::InvalidChoice { choice: c.clone() }),
    }
}

/// Formats a product-level character for display.
pub fn show_char(c: &Option<Qualified>) -> String {
    ProductChar(c).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::railway;
    use crate::symbol::sym;

    fn cfg(p: &Protocol, text: &str) -> Configuration {
        p.parse_configuration(text).unwrap()
    }

    #[test]
    fn railway_is_closed() {
        assert!(railway().check_closed());
    }

    #[test]
    fn removing_a_channel_opens_the_protocol() {
        let p = railway();
        let open = Protocol::new(
            p.roles().iter().map(|(k, v)| (k.clone(), v.clone())),
            [Channel::new(sym("Z"), sym("C"))],
        )
        .unwrap();
        assert!(!open.check_closed());
    }

    #[test]
    fn single_silent_role_is_closed() {
        let a = IoAutomaton::builder().states(["p"]).build().unwrap();
        let p = Protocol::new([(sym("A"), a)], []).unwrap();
        assert!(p.check_closed());
    }

    #[test]
    fn spontaneous_arrival_then_forced_delivery() {
        let p = railway();
        let start = p.initial_configuration();
        assert_eq!(start, cfg(&p, "C=away,Z=away"));
        let arrive = TransitionRef::new(
            sym("Z"),
            Transition::new(sym("away"), Character::Eps, Character::Named(sym("arrived")), sym("wait")),
        );
        let Step::Moved { next, .. } = step(&p, &start, 0, Some(&arrive)).unwrap() else {
            panic!("expected a move")
        };
        assert_eq!(next, cfg(&p, "C=away,Z=wait | Z.arrived"));

        // Delivery is forced; a bogus selector is never consulted.
        let bogus = TransitionRef::new(
            sym("Z"),
            Transition::new(sym("bridge"), Character::Eps, Character::Named(sym("left")), sym("away")),
        );
        let Step::Moved { next: after, triple, fired } = step(&p, &next, 1, Some(&bogus)).unwrap() else {
            panic!("expected a move")
        };
        assert_eq!(after, cfg(&p, "C=wait,Z=wait"));
        assert_eq!(fired.role, sym("C"));
        assert_eq!(triple.input, Some(Qualified::parse("C.arrived").unwrap()));
        assert_eq!(triple.output, Some(Qualified::parse("Z.arrived").unwrap()));
        assert_eq!(triple.time, 1);
    }

    #[test]
    fn empty_options_terminate() {
        let a = IoAutomaton::builder().states(["p"]).build().unwrap();
        let p = Protocol::new([(sym("A"), a)], []).unwrap();
        let s = step(&p, &p.initial_configuration(), 0, None).unwrap();
        assert!(matches!(s, Step::Terminated { .. }));
    }

    #[test]
    fn choices_are_required_and_checked() {
        let a = IoAutomaton::builder()
            .states(["p", "q", "r"])
            .transition("p", "eps", "eps", "q")
            .transition("p", "eps", "eps", "r")
            .build()
            .unwrap();
        let p = Protocol::new([(sym("A"), a)], []).unwrap();
        let start = p.initial_configuration();
        assert!(matches!(step(&p, &start, 0, None), Err(StepError::ChoiceRequired { options }) if options.len() == 2));
        let wrong = TransitionRef::new(
            sym("A"),
            Transition::new(sym("q"), Character::Eps, Character::Eps, sym("p")),
        );
        assert!(matches!(step(&p, &start, 0, Some(&wrong)), Err(StepError::InvalidChoice { .. })));
    }

    #[test]
    fn configuration_text_round_trips() {
        let p = railway();
        let c = cfg(&p, "(C=wait, Z=away | Z.arrived)");
        assert_eq!(p.describe(&c), "(C=wait, Z=away | Z.arrived)");
        assert_eq!(cfg(&p, "Z=away,C=wait+Z.arrived"), c);
        assert!(p.parse_configuration("C=away").is_err());
        assert!(p.parse_configuration("C=away,Z=nowhere").is_err());
        assert!(p.parse_configuration("C=away,Z=away,Q=x").is_err());
    }

    #[test]
    fn protocol_validation() {
        let p = railway();
        let roles = || p.roles().iter().map(|(k, v)| (k.clone(), v.clone()));
        assert!(matches!(
            Protocol::new(roles(), [Channel::new(sym("Z"), sym("Z"))]),
            Err(ModelError::SelfChannel(_))
        ));
        assert!(matches!(
            Protocol::new(roles(), [Channel::new(sym("Z"), sym("X"))]),
            Err(ModelError::UnknownRole(_))
        ));
        assert!(matches!(
            Protocol::new(Vec::<(Symbol, IoAutomaton)>::new(), []),
            Err(ModelError::NoRoles)
        ));
        let finite = IoAutomaton::builder().states(["p"]).build().unwrap();
        let mut mixed: Vec<_> = roles().collect();
        mixed.push((sym("F"), finite));
        assert!(matches!(
            Protocol::new(mixed, []),
            Err(ModelError::MixedAcceptance { .. })
        ));
    }

    #[test]
    fn routing_must_be_unambiguous() {
        let sender = IoAutomaton::builder().outputs(["m"]).states(["p"]).build().unwrap();
        let rx = || IoAutomaton::builder().inputs(["m"]).states(["q"]).build().unwrap();
        let r = Protocol::new(
            [(sym("S"), sender), (sym("R1"), rx()), (sym("R2"), rx())],
            [Channel::new(sym("S"), sym("R1")), Channel::new(sym("S"), sym("R2"))],
        );
        assert!(matches!(r, Err(ModelError::AmbiguousRoute { .. })));
    }
}
