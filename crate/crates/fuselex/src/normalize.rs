//! Normalization of typed expressions to deterministic Greibach normal form.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::cfe::{Cfe, Word};
use crate::lexer::TokenId;

/// A nonterminal.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Nt(pub u32);

/// A production body. The variant order gives the stable production order:
/// token-headed by token id, then variable-headed, then ε.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Production {
    Tok(TokenId, Vec<Nt>),
    /// Internal form headed by the nonterminal of a bound variable.
    Var(Nt, Vec<Nt>),
    Eps,
}

impl Production {
    pub fn tail(&self) -> &[Nt] {
        match self {
            Production::Tok(_, t) | Production::Var(_, t) => t,
            Production::Eps => &[],
        }
    }

    fn append(&self, extra: &[Nt]) -> Option<Production> {
        match self {
            Production::Eps if extra.is_empty() => Some(Production::Eps),
            Production::Eps => None,
            Production::Tok(t, tail) => Some(Production::Tok(*t, [tail.as_slice(), extra].concat())),
            Production::Var(a, tail) => Some(Production::Var(*a, [tail.as_slice(), extra].concat())),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NormalGrammar {
    pub start: Nt,
    pub prods: BTreeMap<Nt, Vec<Production>>,
    /// Debug name of every allocated nonterminal, indexed by id.
    pub names: Vec<String>,
    pub var_nts: BTreeMap<String, Nt>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("variable `{var}` is not bound")]
    UnboundVar { var: String },
    #[error("nonterminal {nt} would need a production of the form ε followed by nonterminals")]
    EpsilonPrefix { nt: String },
    #[error("internal variable-headed production survived at {nt}")]
    InternalFormLeak { nt: String },
}

/// Knobs for [`normalize_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormalizeOptions {
    /// A sequence whose right operand is a bound variable appends that
    /// variable's own nonterminal instead of a fresh `n → α` copy.
    pub share_vars: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { share_vars: true }
    }
}

/// Normalizes with the default options.
pub fn normalize(g: &Cfe) -> Result<NormalGrammar, NormalizeError> {
    normalize_with(g, NormalizeOptions::default())
}

/// The seven rules applied literally, one fresh nonterminal per node.
pub fn normalize_literal(g: &Cfe) -> Result<NormalGrammar, NormalizeError> {
    normalize_with(g, NormalizeOptions { share_vars: false })
}

pub fn normalize_with(g: &Cfe, opts: NormalizeOptions) -> Result<NormalGrammar, NormalizeError> {
    let mut n = Normalizer { prods: Vec::new(), names: Vec::new(), used: HashSet::new(), env: Vec::new(), var_nts: BTreeMap::new(), opts };
    let start = n.go(g)?;
    let mut prods = BTreeMap::new();
    for (i, mut ps) in n.prods.into_iter().enumerate() {
        ps.sort();
        ps.dedup();
        if ps.iter().any(|p| matches!(p, Production::Var(..))) {
            return Err(NormalizeError::InternalFormLeak { nt: n.names[i].clone() });
        }
        prods.insert(Nt(i as u32), ps);
    }
    Ok(NormalGrammar { start, prods, names: n.names, var_nts: n.var_nts })
}

struct Normalizer {
    prods: Vec<Vec<Production>>,
    names: Vec<String>,
    used: HashSet<String>,
    env: Vec<(String, Nt)>,
    var_nts: BTreeMap<String, Nt>,
    opts: NormalizeOptions,
}

impl Normalizer {
    fn fresh(&mut self, name: Option<&str>) -> Nt {
        let id = self.prods.len() as u32;
        let base = name.map(str::to_string).unwrap_or_else(|| format!("n{}", id + 1));
        let mut unique = base.clone();
        let mut k = 2;
        while self.used.contains(&unique) {
            unique = format!("{base}'{k}");
            k += 1;
        }
        self.used.insert(unique.clone());
        self.names.push(unique);
        self.prods.push(Vec::new());
        Nt(id)
    }

    fn lookup(&self, x: &str) -> Result<Nt, NormalizeError> {
        self.env
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .map(|(_, nt)| *nt)
            .ok_or_else(|| NormalizeError::UnboundVar { var: x.to_string() })
    }

    fn go(&mut self, g: &Cfe) -> Result<Nt, NormalizeError> {
        match g {
            Cfe::Eps => {
                let n = self.fresh(None);
                self.prods[n.0 as usize].push(Production::Eps);
                Ok(n)
            }
            Cfe::Tok(t) => {
                let n = self.fresh(None);
                self.prods[n.0 as usize].push(Production::Tok(*t, vec![]));
                Ok(n)
            }
            Cfe::Bot => Ok(self.fresh(None)),
            Cfe::Var(x) => {
                let a = self.lookup(x)?;
                let n = self.fresh(None);
                self.prods[n.0 as usize].push(Production::Var(a, vec![]));
                Ok(n)
            }
            Cfe::Seq(a, b) => {
                let n1 = self.go(a)?;
                let n2 = match &**b {
                    Cfe::Var(x) if self.opts.share_vars => self.lookup(x)?,
                    _ => self.go(b)?,
                };
                let n = self.fresh(None);
                let mut out = Vec::new();
                for p in &self.prods[n1.0 as usize] {
                    match p.append(&[n2]) {
                        Some(q) => out.push(q),
                        None => return Err(NormalizeError::EpsilonPrefix { nt: self.names[n.0 as usize].clone() }),
                    }
                }
                self.prods[n.0 as usize] = out;
                Ok(n)
            }
            Cfe::Alt(a, b) => {
                let n1 = self.go(a)?;
                let n2 = self.go(b)?;
                let n = self.fresh(None);
                let mut out = self.prods[n1.0 as usize].clone();
                for p in &self.prods[n2.0 as usize] {
                    if !out.contains(p) {
                        out.push(p.clone());
                    }
                }
                self.prods[n.0 as usize] = out;
                Ok(n)
            }
            Cfe::Fix(x, body) => {
                let alpha = self.fresh(Some(x));
                self.var_nts.insert(self.names[alpha.0 as usize].clone(), alpha);
                self.env.push((x.clone(), alpha));
                let n = self.go(body)?;
                self.env.pop();
                // (1) alpha takes the body's productions
                let own = self.prods[n.0 as usize].clone();
                if own.iter().any(|p| matches!(p, Production::Var(a, _) if *a == alpha)) {
                    return Err(NormalizeError::InternalFormLeak { nt: self.names[alpha.0 as usize].clone() });
                }
                self.prods[alpha.0 as usize] = own.clone();
                // (2) and (3): alpha-headed productions are replaced by alpha's own
                for i in 0..self.prods.len() {
                    if !self.prods[i].iter().any(|p| matches!(p, Production::Var(a, _) if *a == alpha)) {
                        continue;
                    }
                    let mut out = Vec::new();
                    for p in std::mem::take(&mut self.prods[i]) {
                        match p {
                            Production::Var(a, tail) if a == alpha => {
                                for q in &own {
                                    match q.append(&tail) {
                                        Some(r) => out.push(r),
                                        None => {
                                            return Err(NormalizeError::EpsilonPrefix { nt: self.names[i].clone() })
                                        }
                                    }
                                }
                            }
                            p => out.push(p),
                        }
                    }
                    out.dedup();
                    self.prods[i] = out;
                }
                Ok(alpha)
            }
        }
    }
}

/// Keeps only the nonterminals reachable from the start symbol.
pub fn trim_unreachable(g: &NormalGrammar) -> NormalGrammar {
    let reach = g.reachable();
    NormalGrammar {
        start: g.start,
        prods: g.prods.iter().filter(|(n, _)| reach.contains(n)).map(|(n, p)| (*n, p.clone())).collect(),
        names: g.names.clone(),
        var_nts: g.var_nts.iter().filter(|(_, n)| reach.contains(n)).map(|(k, n)| (k.clone(), *n)).collect(),
    }
}

/// A reason a grammar is not in DGNF.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    /// A production shape other than `ε` or `t n̄`.
    Shape { nt: Nt, line: usize, reason: String },
    /// Two productions of `nt` start with the same token.
    Determinism { nt: Nt, token: TokenId, productions: (usize, usize) },
    /// `first` can vanish while `second` follows it, and both can start with `token`.
    GuardedEpsilon { first: Nt, second: Nt, token: TokenId },
    InternalForm { nt: Nt },
    Undefined { nt: Nt },
}

impl NormalGrammar {
    pub fn name(&self, n: Nt) -> &str {
        self.names.get(n.0 as usize).map(String::as_str).unwrap_or("?")
    }

    pub fn productions(&self, n: Nt) -> &[Production] {
        self.prods.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn nonterminal_count(&self) -> usize {
        self.prods.len()
    }

    pub fn production_count(&self) -> usize {
        self.prods.values().map(Vec::len).sum()
    }

    pub fn reachable(&self) -> BTreeSet<Nt> {
        let mut seen = BTreeSet::from([self.start]);
        let mut queue = VecDeque::from([self.start]);
        while let Some(n) = queue.pop_front() {
            for p in self.productions(n) {
                let head = match p {
                    Production::Var(a, _) => Some(*a),
                    _ => None,
                };
                for m in head.iter().chain(p.tail()) {
                    if seen.insert(*m) {
                        queue.push_back(*m);
                    }
                }
            }
        }
        seen
    }

    /// Head tokens of `n`'s productions.
    pub fn first(&self, n: Nt) -> BTreeSet<TokenId> {
        self.productions(n)
            .iter()
            .filter_map(|p| match p {
                Production::Tok(t, _) => Some(*t),
                _ => None,
            })
            .collect()
    }

    pub fn has_eps(&self, n: Nt) -> bool {
        self.productions(n).contains(&Production::Eps)
    }

    /// Nonterminal pairs that may become adjacent during expansion.
    pub fn adjacency(&self) -> BTreeSet<(Nt, Nt)> {
        let reach = self.reachable();
        let mut adj = BTreeSet::new();
        for n in &reach {
            for p in self.productions(*n) {
                for w in p.tail().windows(2) {
                    adj.insert((w[0], w[1]));
                }
            }
        }
        loop {
            let mut added = Vec::new();
            for &(a, b) in &adj {
                for p in self.productions(a) {
                    if let Production::Tok(_, tail) = p {
                        if let Some(&last) = tail.last() {
                            added.push((last, b));
                        }
                    }
                }
                if self.has_eps(b) {
                    for &(b2, c) in adj.range((b, Nt(0))..) {
                        if b2 != b {
                            break;
                        }
                        added.push((a, c));
                    }
                }
            }
            let before = adj.len();
            adj.extend(added);
            if adj.len() == before {
                return adj;
            }
        }
    }

    /// Checks the DGNF conditions over the reachable part of the grammar.
    pub fn check_dgnf(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let reach = self.reachable();
        for &n in &reach {
            if !self.prods.contains_key(&n) {
                out.push(Violation::Undefined { nt: n });
                continue;
            }
            let ps = self.productions(n);
            if ps.iter().any(|p| matches!(p, Production::Var(..))) {
                out.push(Violation::InternalForm { nt: n });
            }
            let mut seen: HashMap<TokenId, usize> = HashMap::new();
            for (i, p) in ps.iter().enumerate() {
                if let Production::Tok(t, _) = p {
                    if let Some(&j) = seen.get(t) {
                        out.push(Violation::Determinism { nt: n, token: *t, productions: (j, i) });
                    } else {
                        seen.insert(*t, i);
                    }
                }
            }
        }
        for (a, b) in self.adjacency() {
            if self.has_eps(a) {
                for t in self.first(a).intersection(&self.first(b)) {
                    out.push(Violation::GuardedEpsilon { first: a, second: b, token: *t });
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Smallest word length derivable from each nonterminal.
    pub fn min_lengths(&self) -> HashMap<Nt, usize> {
        let mut m: HashMap<Nt, usize> = HashMap::new();
        loop {
            let mut changed = false;
            for (n, ps) in &self.prods {
                for p in ps {
                    let l = match p {
                        Production::Eps => Some(0),
                        Production::Tok(_, tail) => {
                            tail.iter().try_fold(1usize, |acc, m2| m.get(m2).map(|l| acc + l))
                        }
                        Production::Var(..) => None,
                    };
                    if let Some(l) = l {
                        if m.get(n).is_none_or(|&cur| l < cur) {
                            m.insert(*n, l);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return m;
            }
        }
    }

    /// Every complete word of length at most `max_len` derivable from `n`,
    /// with the number of distinct leftmost derivations of each.
    pub fn expand_counted(&self, n: Nt, max_len: usize) -> BTreeMap<Word, usize> {
        let minlen = self.min_lengths();
        let mut out = BTreeMap::new();
        if let Some(&l) = minlen.get(&n) {
            if l <= max_len {
                let mut word = Vec::new();
                let mut pending = vec![n];
                self.expand_dfs(&minlen, max_len, &mut word, &mut pending, l, &mut out);
            }
        }
        out
    }

    fn expand_dfs(
        &self,
        minlen: &HashMap<Nt, usize>,
        max_len: usize,
        word: &mut Word,
        pending: &mut Vec<Nt>,
        pending_min: usize,
        out: &mut BTreeMap<Word, usize>,
    ) {
        let Some(n) = pending.pop() else {
            *out.entry(word.clone()).or_insert(0) += 1;
            return;
        };
        let rest_min = pending_min - minlen[&n];
        for p in self.productions(n) {
            match p {
                Production::Eps => self.expand_dfs(minlen, max_len, word, pending, rest_min, out),
                Production::Tok(t, tail) => {
                    let Some(tail_min) = tail.iter().try_fold(0usize, |acc, m| minlen.get(m).map(|l| acc + l)) else {
                        continue;
                    };
                    if word.len() + 1 + tail_min + rest_min > max_len {
                        continue;
                    }
                    word.push(*t);
                    let depth = pending.len();
                    pending.extend(tail.iter().rev());
                    self.expand_dfs(minlen, max_len, word, pending, rest_min + tail_min, out);
                    pending.truncate(depth);
                    word.pop();
                }
                Production::Var(..) => {}
            }
        }
        pending.push(n);
    }

    /// The words of length at most `max_len` that `n` expands to.
    pub fn expand_enumerate(&self, n: Nt, max_len: usize) -> BTreeSet<Word> {
        self.expand_counted(n, max_len).into_keys().collect()
    }

    /// One line per production, start symbol's productions first.
    pub fn dump(&self, tokens: &[String]) -> String {
        let mut order = vec![self.start];
        order.extend(self.prods.keys().copied().filter(|n| *n != self.start));
        let tok = |t: &TokenId| tokens.get(t.0 as usize).cloned().unwrap_or_else(|| format!("#{}", t.0));
        let mut out = String::new();
        for n in order {
            let ps = self.productions(n);
            if ps.is_empty() {
                out.push_str(&format!("{} -> <bot>\n", self.name(n)));
            }
            for p in ps {
                let body = match p {
                    Production::Eps => "<eps>".to_string(),
                    Production::Tok(t, tail) => {
                        std::iter::once(tok(t)).chain(tail.iter().map(|m| self.name(*m).to_string())).collect::<Vec<_>>().join(" ")
                    }
                    Production::Var(a, tail) => std::iter::once(format!("%{}", self.name(*a)))
                        .chain(tail.iter().map(|m| self.name(*m).to_string()))
                        .collect::<Vec<_>>()
                        .join(" "),
                };
                out.push_str(&format!("{} -> {}\n", self.name(n), body));
            }
        }
        out
    }

    /// Equality up to a renaming of nonterminals.
    pub fn isomorphic(&self, other: &NormalGrammar) -> bool {
        self.canonical_shape() == other.canonical_shape()
    }

    // Renumbers reachable nonterminals in breadth-first order from the start.
    fn canonical_shape(&self) -> Vec<Vec<Production>> {
        let mut index: HashMap<Nt, u32> = HashMap::new();
        let mut order = vec![self.start];
        index.insert(self.start, 0);
        let mut i = 0;
        while i < order.len() {
            for p in self.productions(order[i]) {
                for m in p.tail() {
                    if !index.contains_key(m) {
                        index.insert(*m, order.len() as u32);
                        order.push(*m);
                    }
                }
            }
            i += 1;
        }
        let unreachable: Vec<Nt> = self.prods.keys().copied().filter(|n| !index.contains_key(n)).collect();
        for n in unreachable {
            index.insert(n, order.len() as u32);
            order.push(n);
        }
        order
            .iter()
            .map(|n| {
                let mut ps: Vec<Production> = self
                    .productions(*n)
                    .iter()
                    .map(|p| match p {
                        Production::Tok(t, tail) => Production::Tok(*t, tail.iter().map(|m| Nt(index[m])).collect()),
                        Production::Var(a, tail) => {
                            Production::Var(Nt(index.get(a).copied().unwrap_or(u32::MAX)), tail.iter().map(|m| Nt(index[m])).collect())
                        }
                        Production::Eps => Production::Eps,
                    })
                    .collect();
                ps.sort();
                ps
            })
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DumpError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown symbol `{symbol}`")]
    UnknownSymbol { line: usize, symbol: String },
    #[error("grammar is not in Greibach shape: {0:?}")]
    Shape(Vec<Violation>),
}

/// Reads the format written by [`NormalGrammar::dump`]. Symbols that are not
/// token names must be nonterminals defined on some left-hand side.
pub fn parse_dump(text: &str, tokens: &[String]) -> Result<NormalGrammar, DumpError> {
    let mut lines = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (lhs, rhs) = line
            .split_once("->")
            .ok_or_else(|| DumpError::Syntax { line: i + 1, message: "expected `->`".into() })?;
        let lhs = lhs.trim();
        if lhs.is_empty() || lhs.contains(char::is_whitespace) {
            return Err(DumpError::Syntax { line: i + 1, message: "bad left-hand side".into() });
        }
        if tokens.iter().any(|t| t == lhs) {
            return Err(DumpError::Syntax { line: i + 1, message: format!("`{lhs}` is a token") });
        }
        if !names.iter().any(|n| n == lhs) {
            names.push(lhs.to_string());
        }
        lines.push((i + 1, lhs.to_string(), rhs.split_whitespace().map(str::to_string).collect::<Vec<_>>()));
    }
    if names.is_empty() {
        return Err(DumpError::Syntax { line: 0, message: "no productions".into() });
    }
    let nt = |s: &str| names.iter().position(|n| n == s).map(|i| Nt(i as u32));
    let tok = |s: &str| tokens.iter().position(|n| n == s).map(|i| TokenId(i as u32));
    let mut prods: BTreeMap<Nt, Vec<Production>> = names.iter().enumerate().map(|(i, _)| (Nt(i as u32), Vec::new())).collect();
    let mut shape = Vec::new();
    for (line, lhs, body) in lines {
        let n = nt(&lhs).unwrap();
        match body.as_slice() {
            [one] if one == "<eps>" => prods.get_mut(&n).unwrap().push(Production::Eps),
            [one] if one == "<bot>" => {}
            [] => return Err(DumpError::Syntax { line, message: "empty body".into() }),
            [head, rest @ ..] => {
                let Some(t) = tok(head) else {
                    if nt(head).is_some() {
                        shape.push(Violation::Shape { nt: n, line, reason: format!("body starts with nonterminal `{head}`") });
                        continue;
                    }
                    return Err(DumpError::UnknownSymbol { line, symbol: head.clone() });
                };
                let mut tail = Vec::new();
                for s in rest {
                    match (nt(s), tok(s)) {
                        (Some(m), _) => tail.push(m),
                        (None, Some(_)) => {
                            shape.push(Violation::Shape { nt: n, line, reason: format!("terminal `{s}` after the head") });
                        }
                        (None, None) => return Err(DumpError::UnknownSymbol { line, symbol: s.clone() }),
                    }
                }
                prods.get_mut(&n).unwrap().push(Production::Tok(t, tail));
            }
        }
    }
    if !shape.is_empty() {
        return Err(DumpError::Shape(shape));
    }
    for ps in prods.values_mut() {
        ps.sort();
        ps.dedup();
    }
    Ok(NormalGrammar { start: Nt(0), prods, names, var_nts: BTreeMap::new() })
}

/// Outcome of checking a textual grammar against the DGNF conditions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DgnfVerdict {
    Ok,
    ShapeInvalid(Vec<Violation>),
    Violations(Vec<Violation>),
}

pub fn classify_dgnf(text: &str, tokens: &[String]) -> Result<DgnfVerdict, DumpError> {
    match parse_dump(text, tokens) {
        Err(DumpError::Shape(v)) => Ok(DgnfVerdict::ShapeInvalid(v)),
        Err(e) => Err(e),
        Ok(g) => Ok(match g.check_dgnf() {
            Ok(()) => DgnfVerdict::Ok,
            Err(v) => DgnfVerdict::Violations(v),
        }),
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { line, reason, .. } => write!(f, "line {line}: {reason}"),
            Violation::Determinism { nt, token, productions } => {
                write!(f, "nonterminal {} has productions {} and {} both starting with token {}", nt.0, productions.0, productions.1, token.0)
            }
            Violation::GuardedEpsilon { first, second, token } => {
                write!(f, "nullable {} may be followed by {} and both start with token {}", first.0, second.0, token.0)
            }
            Violation::InternalForm { nt } => write!(f, "nonterminal {} has a variable-headed production", nt.0),
            Violation::Undefined { nt } => write!(f, "nonterminal {} has no entry", nt.0),
        }
    }
}
