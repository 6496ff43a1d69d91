//! Running fused grammars: a direct interpreter, a compiled
//! character-class automaton, and a source printer for the automaton.

mod automaton;
mod emit;
mod interp;

pub use automaton::{
    compile_automaton, compile_automaton_with_budget, run_automaton, run_automaton_traced, Action, CompileError,
    CompiledAutomaton, Exit, NoTrace, State, Stats, Tracer, STATE_BUDGET,
};
pub use emit::{emit_source, Backend};
pub use interp::{fparse_interp, fparse_interp_probed, InterpProbe, NoProbe};

use crate::normalize::Nt;

/// What a scan does once its live regexes run out.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Continuation {
    No,
    Back,
    /// Commit to the production with this ordinal and parse its tail.
    On { production: usize, then: Vec<Nt> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Failure {
    pub offset: usize,
    pub nonterminal: Nt,
}

/// One committed match: which production, and the bytes it covered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub nonterminal: Nt,
    pub production: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseOutcome {
    pub accepted: bool,
    pub consumed: usize,
    pub failure: Option<Failure>,
    pub events: Option<Vec<Event>>,
}

impl ParseOutcome {
    /// Accepted and nothing left over.
    pub fn complete(&self, len: usize) -> bool {
        self.accepted && self.consumed == len
    }

    /// The part compared across pipelines.
    pub fn verdict(&self) -> (bool, usize) {
        (self.accepted, self.consumed)
    }
}
