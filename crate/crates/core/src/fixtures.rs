//! Reference protocols: the single-track railway bridge and a few mutants.
//!
//! `fixtures/railway.gif` in the repository is the textual form of
//! [`railway`] together with [`railway_labels`].

use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::{Acceptance, IoAutomaton, Transition};
use crate::protocol::{Channel, Protocol, TransitionRef};
use crate::symbol::{sym, Character, Symbol};

fn train() -> IoAutomaton {
    IoAutomaton::builder()
        .inputs(["go"])
        .outputs(["arrived", "left"])
        .states(["away", "wait", "bridge"])
        .initial("away", "eps")
        .transition("away", "eps", "arrived", "wait")
        .transition("wait", "go", "eps", "bridge")
        .transition("bridge", "eps", "left", "away")
        .muller([["away", "wait", "bridge"]])
        .build()
        .expect("train role is well typed")
}

fn controller_builder() -> crate::automaton::IoAutomatonBuilder {
    IoAutomaton::builder()
        .inputs(["arrived", "left"])
        .outputs(["go"])
        .states(["away", "wait", "bridge"])
        .initial("away", "eps")
        .muller([["away", "wait", "bridge"]])
}

fn controller() -> IoAutomaton {
    controller_builder()
        .transition("away", "arrived", "eps", "wait")
        .transition("wait", "eps", "go", "bridge")
        .transition("bridge", "left", "eps", "away")
        .build()
        .expect("controller role is well typed")
}

fn couple(train: IoAutomaton, controller: IoAutomaton) -> Protocol {
    Protocol::new(
        [(sym("Z"), train), (sym("C"), controller)],
        [Channel::new(sym("Z"), sym("C")), Channel::new(sym("C"), sym("Z"))],
    )
    .expect("railway protocol is well typed")
}

/// Train `Z` and controller `C` sharing a single-track bridge.
pub fn railway() -> Protocol {
    couple(train(), controller())
}

fn tref(role: &str, from: &str, input: &str, output: &str, to: &str) -> TransitionRef {
    TransitionRef::new(
        sym(role),
        Transition::new(
            sym(from),
            Character::parse(input).unwrap(),
            Character::parse(output).unwrap(),
            sym(to),
        ),
    )
}

/// Decision names for the three spontaneous railway transitions.
pub fn railway_labels() -> BTreeMap<TransitionRef, Symbol> {
    [
        (tref("Z", "away", "eps", "arrived", "wait"), sym("IArrive")),
        (tref("Z", "bridge", "eps", "left", "away"), sym("ILeave")),
        (tref("C", "wait", "eps", "go", "bridge"), sym("ILetYouGo")),
    ]
    .into_iter()
    .collect()
}

/// The controller no longer consumes `arrived` in state `away`.
pub fn railway_without_arrival() -> Protocol {
    let c = controller_builder()
        .transition("wait", "eps", "go", "bridge")
        .transition("bridge", "left", "eps", "away")
        .build()
        .unwrap();
    couple(train(), c)
}

/// Both roles only accept runs that visit exactly `away` and `wait` infinitely often.
pub fn railway_shrunk_muller() -> Protocol {
    let shrink = |a: &IoAutomaton| {
        let family: BTreeSet<BTreeSet<Symbol>> = [[sym("away"), sym("wait")].into_iter().collect()].into_iter().collect();
        IoAutomaton::new(
            a.inputs().clone(),
            a.outputs().clone(),
            a.states().clone(),
            (a.initial_state().clone(), a.initial_output().clone()),
            a.transitions().iter().cloned(),
            Acceptance::Muller(family),
        )
        .unwrap()
    };
    couple(shrink(&train()), shrink(&controller()))
}

/// Every subset of the role states is a Muller acceptance set.
pub fn railway_all_subsets() -> Protocol {
    let widen = |a: &IoAutomaton| {
        let states: Vec<Symbol> = a.states().iter().cloned().collect();
        let family = (1u32..(1 << states.len()))
            .map(|mask| {
                states
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, s)| s.clone())
                    .collect()
            })
            .collect();
        IoAutomaton::new(
            a.inputs().clone(),
            a.outputs().clone(),
            a.states().clone(),
            (a.initial_state().clone(), a.initial_output().clone()),
            a.transitions().iter().cloned(),
            Acceptance::Muller(family),
        )
        .unwrap()
    };
    couple(widen(&train()), widen(&controller()))
}

/// Two roles that bounce a character back and forth forever once started.
pub fn echo() -> Protocol {
    let a = IoAutomaton::builder()
        .inputs(["pong"])
        .outputs(["ping"])
        .states(["a0", "a1"])
        .transition("a0", "eps", "ping", "a1")
        .transition("a1", "pong", "ping", "a1")
        .build()
        .unwrap();
    let b = IoAutomaton::builder()
        .inputs(["ping"])
        .outputs(["pong"])
        .states(["b0"])
        .transition("b0", "ping", "pong", "b0")
        .build()
        .unwrap();
    Protocol::new(
        [(sym("A"), a), (sym("B"), b)],
        [Channel::new(sym("A"), sym("B")), Channel::new(sym("B"), sym("A"))],
    )
    .unwrap()
}
