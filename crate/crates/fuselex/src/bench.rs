//! Throughput measurements for the three parsing pipelines.

use std::time::Instant;

use thiserror::Error;

use crate::engine::{fparse_interp, NoTrace};
use crate::pipeline::Compiled;
use crate::token_parser::Buffers;

pub const SIZES_MB: [usize; 4] = [1, 2, 4, 8];
pub const CSV_HEADER: &str = "pipeline,bytes,seconds,mbps";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    /// Lex into a token vector, then parse the tokens.
    Unfused,
    Interp,
    Auto,
}

impl Pipeline {
    pub const ALL: [Pipeline; 3] = [Pipeline::Unfused, Pipeline::Interp, Pipeline::Auto];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Unfused => "unfused",
            Pipeline::Interp => "interp",
            Pipeline::Auto => "auto",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{pipeline} did not accept the whole input ({consumed} of {len} bytes)")]
pub struct Rejected {
    pub pipeline: &'static str,
    pub consumed: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub pipeline: Pipeline,
    pub bytes: usize,
    pub seconds: f64,
}

impl Row {
    pub fn mbps(&self) -> f64 {
        self.bytes as f64 / 1e6 / self.seconds
    }

    pub fn csv(&self) -> String {
        format!("{},{},{:.6},{:.1}", self.pipeline.name(), self.bytes, self.seconds, self.mbps())
    }
}

/// Working memory a pipeline keeps between parses: the automaton's stack
/// and the unfused pipeline's token buffers.
#[derive(Default)]
pub struct Scratch {
    stack: Vec<u32>,
    tokens: Buffers,
}

/// Parses once, returning how many bytes were consumed if the input was accepted.
pub fn parse_once(c: &Compiled, p: Pipeline, input: &[u8], scratch: &mut Scratch) -> Option<usize> {
    match p {
        Pipeline::Unfused => {
            let out = c.unfused.parse_in(input, &mut scratch.tokens);
            out.accepted.then_some(out.consumed)
        }
        Pipeline::Interp => {
            let out = fparse_interp(&c.fused, input, false);
            out.accepted.then_some(out.consumed)
        }
        Pipeline::Auto => c.automaton.run_in(input, &mut NoTrace, &mut scratch.stack).ok(),
    }
}

/// Median wall time of `runs` parses. Fails unless the whole input is accepted.
pub fn time(c: &Compiled, p: Pipeline, input: &[u8], runs: usize) -> Result<f64, Rejected> {
    let mut scratch = Scratch::default();
    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs.max(1) {
        let t = Instant::now();
        let consumed = parse_once(c, p, input, &mut scratch);
        times.push(t.elapsed().as_secs_f64());
        if consumed != Some(input.len()) {
            return Err(Rejected { pipeline: p.name(), consumed: consumed.unwrap_or(0), len: input.len() });
        }
    }
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}

/// Every pipeline checks the input before any is timed.
pub fn measure(c: &Compiled, pipelines: &[Pipeline], input: &[u8], runs: usize) -> Result<Vec<Row>, Rejected> {
    for &p in pipelines {
        time(c, p, input, 1)?;
    }
    pipelines
        .iter()
        .map(|&p| Ok(Row { pipeline: p, bytes: input.len(), seconds: time(c, p, input, runs)? }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;

    #[test]
    fn row_format() {
        let r = Row { pipeline: Pipeline::Auto, bytes: 4194304, seconds: 0.012345 };
        assert_eq!(r.csv(), "auto,4194304,0.012345,339.8");
    }

    #[test]
    fn refuses_rejected_input() {
        let c = Compiled::shipped("sexp");
        let err = measure(&c, &Pipeline::ALL, b"(a", 1).unwrap_err();
        assert_eq!(err.pipeline, "unfused");
        let doc = Corpus::Sexp.generate(10_000, 1);
        assert_eq!(measure(&c, &Pipeline::ALL, &doc, 3).unwrap().len(), 3);
    }
}
