#![allow(dead_code)]

use std::collections::HashMap;

use fuselex::corpus::Corpus;
use fuselex::engine::{fparse_interp_probed, run_automaton_traced, InterpProbe, Tracer};
use fuselex::lexer::{lex_prefix_probed, LexProbe};
use fuselex::pipeline::Compiled;
use fuselex::regex::{class_partition, Partition, Regex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Verdict = (bool, usize);

/// Verdicts of lex + parse_tokens (reference lexer), the compiled unfused
/// pipeline, the interpreter and the automaton.
pub fn verdicts(c: &Compiled, input: &[u8]) -> [Verdict; 4] {
    let ts = fuselex::lexer::lex_prefix(&c.lexer, input);
    let reference = c.unfused.parser.run_stream(c.unfused.start, &ts, &mut Vec::new()).0.verdict();
    [
        reference,
        c.unfused.parse(input).verdict(),
        fuselex::engine::fparse_interp(&c.fused, input, false).verdict(),
        fuselex::engine::run_automaton(&c.automaton, input).verdict(),
    ]
}

pub fn agree(v: &[Verdict; 4]) -> bool {
    v.iter().all(|x| x == &v[0])
}

const NONE: u32 = u32::MAX;

/// Partitions numbered once, with refinement memoized by number.
#[derive(Default)]
struct Parts {
    all: Vec<Partition>,
    ids: HashMap<Vec<u16>, u32>,
    by_live: HashMap<Vec<Regex>, u32>,
    refined: HashMap<(u32, u32), u32>,
}

impl Parts {
    fn intern(&mut self, p: Partition) -> u32 {
        let key: Vec<u16> = (0..=255u8).map(|b| p.class_of(b) as u16).collect();
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.all.len() as u32;
        self.all.push(p);
        self.ids.insert(key, id);
        id
    }

    fn of(&mut self, live: &[(usize, Regex)]) -> u32 {
        let key: Vec<Regex> = live.iter().map(|(_, r)| r.clone()).collect();
        if let Some(&id) = self.by_live.get(&key) {
            return id;
        }
        let id = self.intern(class_partition(&key));
        self.by_live.insert(key, id);
        id
    }

    fn refine(&mut self, a: u32, b: u32) -> u32 {
        if a == b || b == NONE {
            return a;
        }
        if a == NONE {
            return b;
        }
        let key = (a.min(b), a.max(b));
        if let Some(&id) = self.refined.get(&key) {
            return id;
        }
        let p = self.all[a as usize].refine(&self.all[b as usize]);
        let id = self.intern(p);
        self.refined.insert(key, id);
        id
    }
}

struct AutoReads(Vec<(usize, u32)>);

impl Tracer for AutoReads {
    fn read(&mut self, index: usize, state: u32) {
        self.0.push((index, state));
    }
}

struct InterpReads<'a> {
    parts: &'a mut Parts,
    out: Vec<(usize, u32)>,
}

impl InterpProbe for InterpReads<'_> {
    fn read(&mut self, index: usize, live: &[(usize, Regex)]) {
        let p = self.parts.of(live);
        self.out.push((index, p));
    }
}

struct LexReads<'a> {
    parts: &'a mut Parts,
    out: Vec<(usize, usize, u32)>,
}

impl LexProbe for LexReads<'_> {
    fn read(&mut self, index: usize, slot: usize, live: &[(usize, Regex)]) {
        let p = self.parts.of(live);
        self.out.push((index, slot, p));
    }
}

/// Walks every input up to `max_len` bytes without enumerating them one by
/// one. At each prefix, every pipeline reports which bytes it could tell
/// apart wherever it looked; only one byte per distinguishable class is
/// tried, and a prefix whose runs never look past its end stands for all of
/// its extensions.
pub struct Explorer<'a> {
    c: &'a Compiled,
    max_len: usize,
    extra: Vec<u8>,
    parts: Parts,
    /// Partition of each automaton state.
    states: Vec<u32>,
    pub runs: usize,
    pub discrepancies: Vec<(Vec<u8>, [Verdict; 4])>,
}

/// Per input index, the common refinement of everything read there.
type Observed = Vec<u32>;

impl<'a> Explorer<'a> {
    pub fn new(c: &'a Compiled, max_len: usize) -> Explorer<'a> {
        let mut parts = Parts::default();
        let states = (0..c.automaton.state_count() as u32).map(|s| parts.intern(c.automaton.read_classes(s))).collect();
        Explorer { c, max_len, extra: dead_bytes(c), parts, states, runs: 0, discrepancies: Vec::new() }
    }

    /// Bytes no token can start with, tried at every position.
    pub fn extra(&self) -> &[u8] {
        &self.extra
    }

    pub fn run(&mut self) {
        let mut prefix = Vec::new();
        self.visit(&mut prefix);
    }

    fn note(&mut self, obs: &mut Observed, i: usize, p: u32) {
        if i < obs.len() {
            obs[i] = self.parts.refine(obs[i], p);
        }
    }

    fn observe(&mut self, input: &[u8]) -> Observed {
        self.runs += 1;
        let c = self.c;
        let mut obs: Observed = vec![NONE; self.max_len + 1];

        let mut auto = AutoReads(Vec::new());
        let a = run_automaton_traced(&c.automaton, input, &mut auto).verdict();
        for &(i, s) in &auto.0 {
            let p = self.states[s as usize];
            self.note(&mut obs, i, p);
        }

        let mut ip = InterpReads { parts: &mut self.parts, out: Vec::new() };
        let b = fparse_interp_probed(&c.fused, input, false, &mut ip).verdict();
        for (i, p) in std::mem::take(&mut ip.out) {
            self.note(&mut obs, i, p);
        }

        let mut lp = LexReads { parts: &mut self.parts, out: Vec::new() };
        let ts = lex_prefix_probed(&c.lexer, input, &mut lp);
        let reads = std::mem::take(&mut lp.out);
        let (out, run) = c.unfused.parser.run_stream(c.unfused.start, &ts, &mut Vec::new());
        // scans producing tokens the parser never looked at cannot matter
        if let Some(m) = run.max_inspected {
            for (i, slot, p) in reads {
                if slot <= m {
                    self.note(&mut obs, i, p);
                }
            }
        }
        let v = [out.verdict(), c.unfused.parse(input).verdict(), b, a];
        if !agree(&v) {
            self.discrepancies.push((input.to_vec(), v));
        }
        obs
    }

    fn visit(&mut self, prefix: &mut Vec<u8>) -> Observed {
        let len = prefix.len();
        let mut obs = self.observe(prefix);
        if len == self.max_len || obs[len] == NONE {
            return obs;
        }
        let mut tried: Vec<u8> = Vec::new();
        let mut pending: Vec<u8> = self.extra.clone();
        loop {
            for class in self.parts.all[obs[len] as usize].classes() {
                if !tried.iter().chain(&pending).any(|&b| class.contains(b)) {
                    pending.push(class.min().unwrap());
                }
            }
            if pending.is_empty() {
                break;
            }
            for b in std::mem::take(&mut pending) {
                tried.push(b);
                prefix.push(b);
                let sub = self.visit(prefix);
                prefix.pop();
                for (i, p) in sub.into_iter().enumerate().take(len + 1) {
                    obs[i] = self.parts.refine(obs[i], p);
                }
            }
        }
        obs
    }
}

/// Up to two bytes that cannot start any token, preferring 0x00 and 0xff.
pub fn dead_bytes(c: &Compiled) -> Vec<u8> {
    let dead: Vec<u8> =
        (0..=255u8).filter(|&b| c.lexer.rules.iter().all(|r| r.pattern.deriv(b).is_bot())).collect();
    let mut out: Vec<u8> = [0x00, 0xff].into_iter().filter(|b| dead.contains(b)).collect();
    for b in dead.iter().copied().chain(dead.iter().rev().copied()) {
        if out.len() == 2 {
            break;
        }
        if !out.contains(&b) {
            out.push(b);
        }
    }
    out
}

/// Random inputs up to 256 bytes: half over the bytes of valid documents
/// plus dead bytes, half damaged valid documents.
pub fn random_inputs(c: &Compiled, corpus: Corpus, n: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alphabet: Vec<u8> = corpus.generate(4096, seed).into_iter().collect();
    alphabet.sort_unstable();
    alphabet.dedup();
    alphabet.extend(dead_bytes(c));
    (0..n)
        .map(|k| {
            let len = rng.gen_range(0..=256usize);
            if k % 2 == 0 {
                (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
            } else {
                let mut doc = corpus.generate(rng.gen_range(0..200), rng.gen());
                doc.truncate(len.max(1));
                if !doc.is_empty() && rng.gen_bool(0.7) {
                    let at = rng.gen_range(0..doc.len());
                    doc[at] = alphabet[rng.gen_range(0..alphabet.len())];
                }
                doc
            }
        })
        .collect()
}

/// Valid documents of assorted small sizes.
pub fn valid_inputs(corpus: Corpus, n: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| corpus.generate(rng.gen_range(0..300), rng.gen())).collect()
}

/// Matches straight off the syntax tree, no derivatives involved.
pub fn naive(r: &Regex, w: &[u8]) -> bool {
    use fuselex::regex::RegexKind;
    match r.kind() {
        RegexKind::Bot => false,
        RegexKind::Eps => w.is_empty(),
        RegexKind::Class(s) => w.len() == 1 && s.contains(w[0]),
        RegexKind::Seq(a, b) => (0..=w.len()).any(|i| naive(a, &w[..i]) && naive(b, &w[i..])),
        RegexKind::Alt(v) => v.iter().any(|x| naive(x, w)),
        RegexKind::And(v) => v.iter().all(|x| naive(x, w)),
        RegexKind::Not(x) => !naive(x, w),
        RegexKind::Star(x) => w.is_empty() || (1..=w.len()).any(|i| naive(x, &w[..i]) && naive(r, &w[i..])),
    }
}

/// Every word over `sigma` of length at most `max`.
pub fn words_over(sigma: &[u8], max: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut layer: Vec<Vec<u8>> = vec![vec![]];
    for _ in 0..max {
        let next: Vec<Vec<u8>> = layer
            .iter()
            .flat_map(|w| sigma.iter().map(move |&c| [w.as_slice(), &[c]].concat()))
            .collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// A random regex whose classes are drawn from subsets of `sigma`.
pub fn random_regex(rng: &mut impl Rng, depth: usize, sigma: &[u8]) -> Regex {
    use fuselex::regex::ByteSet;
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..6) {
            0 => Regex::eps(),
            1 => Regex::bot(),
            _ => {
                let picked: Vec<u8> = sigma.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
                let b = sigma[rng.gen_range(0..sigma.len())];
                Regex::class(ByteSet::from_bytes(if picked.is_empty() { std::slice::from_ref(&b) } else { &picked }))
            }
        };
    }
    let sub = |rng: &mut _| random_regex(rng, depth - 1, sigma);
    match rng.gen_range(0..5) {
        0 => Regex::seq(sub(rng), sub(rng)),
        1 => Regex::alt(sub(rng), sub(rng)),
        2 => Regex::and(sub(rng), sub(rng)),
        3 => Regex::star(sub(rng)),
        _ => Regex::not(sub(rng)),
    }
}
