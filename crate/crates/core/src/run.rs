//! Time-indexed execution records.

use crate::symbol::Symbol;

/// The values of the input, output and state functions at one time step.
///
/// `input` is consumed at this step; `output` was produced by the previous
/// step (or is the initial output at time 0).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct StateTriple<C, S> {
    pub time: usize,
    pub input: C,
    pub output: C,
    pub state: S,
    /// The decision taken together with `input`, when running a decision game.
    pub decision: Option<Symbol>,
}

impl<C, S> StateTriple<C, S> {
    /// A triple whose time is assigned when it is pushed onto a fragment.
    pub fn new(input: C, output: C, state: S) -> Self {
        StateTriple {
            time: 0,
            input,
            output,
            state,
            decision: None,
        }
    }

    pub fn with_decision(mut self, decision: Option<Symbol>) -> Self {
        self.decision = decision;
        self
    }
}

/// A sequence of triples with consecutive time indices.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ExecutionFragment<C, S> {
    start: usize,
    steps: Vec<StateTriple<C, S>>,
}

impl<C, S> Default for ExecutionFragment<C, S> {
    fn default() -> Self {
        Self::starting_at(0)
    }
}

impl<C, S> ExecutionFragment<C, S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(start: usize) -> Self {
        ExecutionFragment {
            start,
            steps: Vec::new(),
        }
    }

    /// Appends a triple, stamping it with the next time index.
    pub fn push(&mut self, mut triple: StateTriple<C, S>) {
        triple.time = self.start + self.steps.len();
        self.steps.push(triple);
    }

    pub fn pop(&mut self) -> Option<StateTriple<C, S>> {
        self.steps.pop()
    }

    pub fn steps(&self) -> &[StateTriple<C, S>] {
        &self.steps
    }

    pub fn last_mut(&mut self) -> Option<&mut StateTriple<C, S>> {
        self.steps.last_mut()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn start_time(&self) -> usize {
        self.start
    }

    /// The state projection of the fragment.
    pub fn path(&self) -> Vec<S>
    where
        S: Clone,
    {
        self.steps.iter().map(|t| t.state.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times_are_consecutive_from_start() {
        let mut f: ExecutionFragment<u8, u8> = ExecutionFragment::starting_at(5);
        f.push(StateTriple::new(0, 0, 1));
        f.push(StateTriple::new(0, 0, 2));
        let times: Vec<_> = f.steps().iter().map(|t| t.time).collect();
        assert_eq!(times, vec![5, 6]);
        assert_eq!(f.path(), vec![1, 2]);
    }
}
