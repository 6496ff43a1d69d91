use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::fusion::{FusedGrammar, FusedProduction};
use crate::normalize::Nt;
use crate::regex::{class_partition, Partition, Regex};

use super::{Continuation, Event, Failure, ParseOutcome};

pub const STATE_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("automaton exceeds {budget} states")]
    StateBudgetExceeded { budget: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Goto(u32),
    /// Remember the position after this byte as the best match so far.
    Commit(u32),
    Exhaust,
}

/// What happens when a state runs out of input or of live regexes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Fail,
    Back,
    /// Index into the tail table.
    Push(u32),
}

#[derive(Clone, Debug)]
pub struct State {
    pub nt: Nt,
    /// Live regexes, each tagged with its production ordinal.
    pub live: Vec<(usize, Regex)>,
    pub cont: Continuation,
    pub classes: Partition,
    pub actions: Vec<Action>,
    pub exit: Exit,
}

#[derive(Clone, Debug)]
pub struct CompiledAutomaton {
    pub states: Vec<State>,
    pub entry: BTreeMap<Nt, u32>,
    pub start: Nt,
    /// Tails as entry states, in order.
    tails: Vec<Vec<u32>>,
    tail_events: Vec<(Nt, usize)>,
    /// Per tail: its first entry state, then the rest reversed for pushing.
    flat_tails: Vec<u32>,
    tail_spans: Vec<(u32, u32)>,
    /// Indexed by `state * 256 + byte`.
    dispatch: Vec<u32>,
    /// Like `dispatch`, but a scan whose successor is known when it ends
    /// runs straight into that successor. Used when events are not wanted.
    chained: Vec<u32>,
    /// Per state: `EXIT_FAIL`, `EXIT_BACK`, or `EXIT_PUSH + tail`.
    exits: Vec<u32>,
}

const EXHAUST: u32 = u32::MAX;
const COMMIT: u32 = 1 << 31;
/// The target exhausts on every byte, so the scan can stop right away.
const DEAD: u32 = 1 << 30;
/// Set `pos` and `best` to the current index before taking the action.
const RESTART: u32 = 1 << 29;
/// After a restart, stop in the target without consuming.
const STOP: u32 = 1 << 28;
/// Set `pos` to the index after the byte once it is consumed.
const JUMP: u32 = 1 << 27;
const RARE: u32 = RESTART | STOP | JUMP;
const STATE: u32 = JUMP - 1;
const EXIT_FAIL: u32 = 0;
const EXIT_BACK: u32 = 1;
const EXIT_PUSH: u32 = 2;

type Key = (Nt, Vec<(usize, Regex)>, Continuation);

pub fn compile_automaton(f: &FusedGrammar) -> Result<CompiledAutomaton, CompileError> {
    compile_automaton_with_budget(f, STATE_BUDGET)
}

pub fn compile_automaton_with_budget(f: &FusedGrammar, budget: usize) -> Result<CompiledAutomaton, CompileError> {
    let mut index: HashMap<Key, u32> = HashMap::new();
    let mut keys: Vec<Key> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |key: Key, keys: &mut Vec<Key>, queue: &mut VecDeque<u32>| -> Result<u32, CompileError> {
        if let Some(&id) = index.get(&key) {
            return Ok(id);
        }
        if keys.len() >= budget {
            return Err(CompileError::StateBudgetExceeded { budget });
        }
        let id = keys.len() as u32;
        index.insert(key.clone(), id);
        keys.push(key);
        queue.push_back(id);
        Ok(id)
    };

    let mut entry = BTreeMap::new();
    for (&n, prods) in &f.prods {
        let live = prods
            .iter()
            .enumerate()
            .filter_map(|(i, p)| match p {
                FusedProduction::Match { regex, .. } if !regex.is_bot() => Some((i, regex.clone())),
                _ => None,
            })
            .collect();
        let k = if f.has_lookahead(n) { Continuation::Back } else { Continuation::No };
        entry.insert(n, intern((n, live, k), &mut keys, &mut queue)?);
    }

    let mut actions: Vec<(Partition, Vec<Action>)> = Vec::new();
    while let Some(id) = queue.pop_front() {
        let (n, live, k) = keys[id as usize].clone();
        let regexes: Vec<Regex> = live.iter().map(|(_, r)| r.clone()).collect();
        let classes = class_partition(&regexes);
        let mut acts = Vec::with_capacity(classes.len());
        for class in classes.classes() {
            let c = class.min().expect("classes are non-empty");
            let next: Vec<(usize, Regex)> =
                live.iter().map(|(o, r)| (*o, r.deriv(c))).filter(|(_, d)| !d.is_bot()).collect();
            if next.is_empty() {
                acts.push(Action::Exhaust);
                continue;
            }
            match next.iter().find(|(_, r)| r.nullable()).map(|(o, _)| *o) {
                Some(o) => {
                    let then = match &f.productions(n)[o] {
                        FusedProduction::Match { then, .. } => then.clone(),
                        FusedProduction::Lookahead(_) => unreachable!(),
                    };
                    let to = intern((n, next, Continuation::On { production: o, then }), &mut keys, &mut queue)?;
                    acts.push(Action::Commit(to));
                }
                None => acts.push(Action::Goto(intern((n, next, k.clone()), &mut keys, &mut queue)?)),
            }
        }
        debug_assert_eq!(actions.len(), id as usize);
        actions.push((classes, acts));
    }

    let mut tails: Vec<Vec<u32>> = Vec::new();
    let mut tail_events = Vec::new();
    let mut tail_index: HashMap<(Nt, usize), u32> = HashMap::new();
    let mut states = Vec::with_capacity(keys.len());
    for ((n, live, cont), (classes, acts)) in keys.into_iter().zip(actions) {
        let exit = match &cont {
            Continuation::No => Exit::Fail,
            Continuation::Back => Exit::Back,
            Continuation::On { production, then } => Exit::Push(*tail_index.entry((n, *production)).or_insert_with(|| {
                tails.push(then.iter().map(|m| entry[m]).collect());
                tail_events.push((n, *production));
                (tails.len() - 1) as u32
            })),
        };
        states.push(State { nt: n, live, cont, classes, actions: acts, exit });
    }

    let dead: Vec<bool> = states.iter().map(|s| s.actions.iter().all(|a| *a == Action::Exhaust)).collect();
    let flag = |t: u32| if dead[t as usize] { t | DEAD } else { t };
    let mut dispatch = vec![EXHAUST; states.len() * 256];
    for (s, st) in states.iter().enumerate() {
        for b in 0..=255u8 {
            dispatch[s * 256 + b as usize] = match st.actions[st.classes.class_of(b)] {
                Action::Goto(t) => flag(t),
                Action::Commit(t) => flag(t) | COMMIT,
                Action::Exhaust => EXHAUST,
            };
        }
    }
    // a committed dead state whose tail is one nonterminal hands over to that
    // nonterminal's entry directly
    let single = |t: u32| match states[t as usize].exit {
        Exit::Push(p) if tails[p as usize].len() == 1 => Some(tails[p as usize][0]),
        _ => None,
    };
    let consume = |t: u32, commit: bool| match (commit && dead[t as usize], single(t)) {
        (true, Some(e)) => flag(e) | COMMIT | JUMP,
        _ if commit => flag(t) | COMMIT,
        _ => flag(t),
    };
    let accepting: Vec<bool> = states.iter().map(|s| s.live.iter().any(|(_, r)| r.nullable())).collect();
    let mut chained = vec![EXHAUST; states.len() * 256];
    for (s, st) in states.iter().enumerate() {
        for b in 0..=255u8 {
            let act = |st: &State| st.actions[st.classes.class_of(b)];
            chained[s * 256 + b as usize] = match act(st) {
                Action::Goto(t) => consume(t, false),
                Action::Commit(t) => consume(t, true),
                // the match ends here, so the next scan starts on this byte
                Action::Exhaust => match single(s as u32).filter(|_| accepting[s]) {
                    None => EXHAUST,
                    Some(e) => match act(&states[e as usize]) {
                        Action::Goto(t) => RESTART | consume(t, false),
                        Action::Commit(t) => RESTART | consume(t, true),
                        Action::Exhaust => RESTART | STOP | e,
                    },
                },
            };
        }
    }
    let mut flat_tails = Vec::new();
    let mut tail_spans = Vec::new();
    for t in &tails {
        let from = flat_tails.len() as u32;
        if let Some((first, rest)) = t.split_first() {
            flat_tails.push(*first);
            flat_tails.extend(rest.iter().rev());
        }
        tail_spans.push((from, flat_tails.len() as u32));
    }
    let exits = states
        .iter()
        .map(|s| match s.exit {
            Exit::Fail => EXIT_FAIL,
            Exit::Back => EXIT_BACK,
            Exit::Push(p) => EXIT_PUSH + p,
        })
        .collect();
    Ok(CompiledAutomaton {
        states,
        entry,
        start: f.start,
        tails,
        tail_events,
        flat_tails,
        tail_spans,
        dispatch,
        chained,
        exits,
    })
}

/// Hooks into the automaton's main loop. The defaults compile away.
pub trait Tracer {
    /// Whether `commit` does anything; event bookkeeping is skipped if not.
    const EVENTS: bool = false;
    #[inline(always)]
    fn read(&mut self, _index: usize, _state: u32) {}
    #[inline(always)]
    fn commit(&mut self, _event: Event) {}
}

pub struct NoTrace;

impl Tracer for NoTrace {}

/// Counts bytes looked at, to check the rescanning bound.
#[derive(Default, Debug, Clone, Copy)]
pub struct Stats {
    pub bytes_inspected: usize,
    pub len: usize,
}

impl Tracer for Stats {
    fn read(&mut self, index: usize, _state: u32) {
        if index < self.len {
            self.bytes_inspected += 1;
        }
    }
}

pub fn run_automaton(a: &CompiledAutomaton, input: &[u8]) -> ParseOutcome {
    a.run(input, &mut NoTrace)
}

/// Runs with a tracer; commit events are collected into the outcome.
pub fn run_automaton_traced<T: Tracer>(a: &CompiledAutomaton, input: &[u8], t: &mut T) -> ParseOutcome {
    a.run(input, t)
}

impl CompiledAutomaton {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn run_with_events(&self, input: &[u8]) -> ParseOutcome {
        struct Collect(Vec<Event>);
        impl Tracer for Collect {
            const EVENTS: bool = true;
            fn commit(&mut self, e: Event) {
                self.0.push(e);
            }
        }
        let mut c = Collect(Vec::new());
        let mut out = self.run(input, &mut c);
        out.events = Some(c.0);
        out
    }

    /// Reuses `stack` across calls; the only other allocation is the outcome.
    #[inline]
    pub fn run_in<T: Tracer>(&self, input: &[u8], t: &mut T, stack: &mut Vec<u32>) -> Result<usize, Failure> {
        let len = input.len();
        let dispatch = if T::EVENTS { &self.dispatch[..] } else { &self.chained[..] };
        stack.clear();
        let mut next = Some(self.entry[&self.start]);
        let mut pos = 0;
        loop {
            // the first nonterminal of a tail runs without touching the stack
            let mut s = match next.take().or_else(|| stack.pop()) {
                Some(e) => e,
                None => break,
            };
            let mut i = pos;
            let mut best = pos;
            loop {
                t.read(i, s);
                if i >= len {
                    break;
                }
                let at = (s as usize) << 8 | input[i] as usize;
                // SAFETY: every state id stored in the table or the tails is
                // below `states.len()`, and the table has 256 slots per state.
                let a = unsafe { *dispatch.get_unchecked(at) };
                if a == EXHAUST {
                    break;
                }
                if a & RARE != 0 {
                    if a & RESTART != 0 {
                        pos = i;
                        best = i;
                    }
                    if a & STOP != 0 {
                        s = a & STATE;
                        break;
                    }
                    i += 1;
                    if a & COMMIT != 0 {
                        best = i;
                    }
                    if a & JUMP != 0 {
                        pos = i;
                        best = i;
                    }
                    s = a & STATE;
                    if a & DEAD != 0 {
                        break;
                    }
                    continue;
                }
                i += 1;
                if a & COMMIT != 0 {
                    best = i;
                }
                s = a & STATE;
                if a & DEAD != 0 {
                    break;
                }
            }
            match self.exits[s as usize] {
                EXIT_FAIL => return Err(Failure { offset: pos, nonterminal: self.states[s as usize].nt }),
                EXIT_BACK => {}
                code => {
                    let p = (code - EXIT_PUSH) as usize;
                    if T::EVENTS {
                        let (nonterminal, production) = self.tail_events[p];
                        t.commit(Event { nonterminal, production, start: pos, end: best });
                    }
                    pos = best;
                    let (from, to) = self.tail_spans[p];
                    if from < to {
                        next = Some(self.flat_tails[from as usize]);
                        for &e in &self.flat_tails[from as usize + 1..to as usize] {
                            stack.push(e);
                        }
                    }
                }
            }
        }
        Ok(pos)
    }

    fn run<T: Tracer>(&self, input: &[u8], t: &mut T) -> ParseOutcome {
        match self.run_in(input, t, &mut Vec::new()) {
            Ok(consumed) => ParseOutcome { accepted: true, consumed, failure: None, events: None },
            Err(f) => ParseOutcome { accepted: false, consumed: f.offset, failure: Some(f), events: None },
        }
    }

    /// The bytes `state` treats alike when run without events.
    pub fn read_classes(&self, state: u32) -> Partition {
        let row = &self.chained[state as usize * 256..][..256];
        Partition::from_labels(|b| row[b as usize])
    }

    /// Entry states of a production tail, in order.
    pub fn tail(&self, p: u32) -> impl Iterator<Item = u32> + '_ {
        self.tails[p as usize].iter().copied()
    }

    pub fn dump(&self, f: &FusedGrammar) -> String {
        let mut out = String::new();
        for (id, s) in self.states.iter().enumerate() {
            let k = match &s.cont {
                Continuation::No => "no".to_string(),
                Continuation::Back => "back".to_string(),
                Continuation::On { production, .. } => format!("on {production}"),
            };
            let _ = writeln!(out, "state {id} {} k={k}", f.name(s.nt));
            for (class, act) in s.classes.classes().iter().zip(&s.actions) {
                let act = match act {
                    Action::Goto(t) => format!("goto {t}"),
                    Action::Commit(t) => format!("commit goto {t}"),
                    Action::Exhaust => "exhaust".to_string(),
                };
                let _ = writeln!(out, "  {} -> {act}", crate::regex::Regex::class(*class));
            }
        }
        out
    }
}
