use crate::fusion::{FusedGrammar, FusedProduction};
use crate::regex::Regex;

use super::{Continuation, Event, Failure, ParseOutcome};

/// Sees every attempt to read the input, including the end-of-input check.
pub trait InterpProbe {
    fn read(&mut self, _index: usize, _live: &[(usize, Regex)]) {}
}

pub struct NoProbe;

impl InterpProbe for NoProbe {}

pub fn fparse_interp(f: &FusedGrammar, input: &[u8], emit_events: bool) -> ParseOutcome {
    fparse_interp_probed(f, input, emit_events, &mut NoProbe)
}

pub fn fparse_interp_probed<P: InterpProbe>(
    f: &FusedGrammar,
    input: &[u8],
    emit_events: bool,
    probe: &mut P,
) -> ParseOutcome {
    let mut events = emit_events.then(Vec::new);
    let mut stack = vec![f.start];
    let mut pos = 0;
    while let Some(n) = stack.pop() {
        let prods = f.productions(n);
        let mut live: Vec<(usize, Regex)> = prods
            .iter()
            .enumerate()
            .filter_map(|(i, p)| match p {
                FusedProduction::Match { regex, .. } if !regex.is_bot() => Some((i, regex.clone())),
                _ => None,
            })
            .collect();
        let mut k = if f.has_lookahead(n) { Continuation::Back } else { Continuation::No };
        let mut best = pos;
        let mut i = pos;
        loop {
            probe.read(i, &live);
            let Some(&c) = input.get(i) else { break };
            live = live.iter().filter_map(|(o, r)| Some((*o, r.deriv(c))).filter(|(_, d)| !d.is_bot())).collect();
            if live.is_empty() {
                break;
            }
            i += 1;
            if let Some((o, _)) = live.iter().find(|(_, r)| r.nullable()) {
                let then = match &prods[*o] {
                    FusedProduction::Match { then, .. } => then.clone(),
                    FusedProduction::Lookahead(_) => unreachable!(),
                };
                k = Continuation::On { production: *o, then };
                best = i;
            }
        }
        match k {
            Continuation::No => {
                return ParseOutcome {
                    accepted: false,
                    consumed: pos,
                    failure: Some(Failure { offset: pos, nonterminal: n }),
                    events,
                }
            }
            Continuation::Back => {}
            Continuation::On { production, then } => {
                if let Some(ev) = events.as_mut() {
                    ev.push(Event { nonterminal: n, production, start: pos, end: best });
                }
                pos = best;
                stack.extend(then.iter().rev());
            }
        }
    }
    ParseOutcome { accepted: true, consumed: pos, failure: None, events }
}
