//! Typed context-free expressions.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::lexer::TokenId;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Cfe {
    Bot,
    Eps,
    Tok(TokenId),
    Var(String),
    Seq(Box<Cfe>, Box<Cfe>),
    Alt(Box<Cfe>, Box<Cfe>),
    Fix(String, Box<Cfe>),
}

impl Cfe {
    pub fn eps() -> Cfe {
        Cfe::Eps
    }

    pub fn bot() -> Cfe {
        Cfe::Bot
    }

    pub fn tok(t: TokenId) -> Cfe {
        Cfe::Tok(t)
    }

    pub fn var(name: &str) -> Cfe {
        Cfe::Var(name.to_string())
    }

    pub fn seq(a: Cfe, b: Cfe) -> Cfe {
        Cfe::Seq(Box::new(a), Box::new(b))
    }

    pub fn alt(a: Cfe, b: Cfe) -> Cfe {
        Cfe::Alt(Box::new(a), Box::new(b))
    }

    pub fn fix(name: &str, body: Cfe) -> Cfe {
        Cfe::Fix(name.to_string(), Box::new(body))
    }

    /// Left-nested sequence; ε when empty.
    pub fn seq_all<I: IntoIterator<Item = Cfe>>(items: I) -> Cfe {
        items.into_iter().reduce(Cfe::seq).unwrap_or(Cfe::Eps)
    }

    /// Left-nested alternation; ⊥ when empty.
    pub fn alt_all<I: IntoIterator<Item = Cfe>>(items: I) -> Cfe {
        items.into_iter().reduce(Cfe::alt).unwrap_or(Cfe::Bot)
    }

    /// Zero or more repetitions of `e`, as `μx. ε ∨ e·x`.
    pub fn star(e: Cfe) -> Cfe {
        let mut used = HashSet::new();
        e.names(&mut used);
        let x = (0..).map(|k| format!("star{k}")).find(|n| !used.contains(n)).unwrap();
        Cfe::fix(&x, Cfe::alt(Cfe::Eps, Cfe::seq(e, Cfe::Var(x.clone()))))
    }

    fn names(&self, out: &mut HashSet<String>) {
        match self {
            Cfe::Var(x) => {
                out.insert(x.clone());
            }
            Cfe::Fix(x, b) => {
                out.insert(x.clone());
                b.names(out);
            }
            Cfe::Seq(a, b) | Cfe::Alt(a, b) => {
                a.names(out);
                b.names(out);
            }
            _ => {}
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(g: &Cfe, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match g {
                Cfe::Var(x) if !bound.contains(x) => {
                    out.insert(x.clone());
                }
                Cfe::Fix(x, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                Cfe::Seq(a, b) | Cfe::Alt(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                _ => {}
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            Cfe::Seq(a, b) | Cfe::Alt(a, b) => 1 + a.size() + b.size(),
            Cfe::Fix(_, b) => 1 + b.size(),
            _ => 1,
        }
    }

    /// Deepest nesting of `Fix` binders.
    pub fn fix_depth(&self) -> usize {
        match self {
            Cfe::Seq(a, b) | Cfe::Alt(a, b) => a.fix_depth().max(b.fix_depth()),
            Cfe::Fix(_, b) => 1 + b.fix_depth(),
            _ => 0,
        }
    }

    /// Alpha-equivalence, treating `∨` as commutative.
    pub fn alpha_eq(&self, other: &Cfe) -> bool {
        fn go(a: &Cfe, b: &Cfe, env: &mut Vec<(String, String)>) -> bool {
            match (a, b) {
                (Cfe::Bot, Cfe::Bot) | (Cfe::Eps, Cfe::Eps) => true,
                (Cfe::Tok(x), Cfe::Tok(y)) => x == y,
                (Cfe::Var(x), Cfe::Var(y)) => match env.iter().rev().find(|(l, r)| l == x || r == y) {
                    Some((l, r)) => l == x && r == y,
                    None => x == y,
                },
                (Cfe::Seq(a1, a2), Cfe::Seq(b1, b2)) => go(a1, b1, env) && go(a2, b2, env),
                (Cfe::Alt(a1, a2), Cfe::Alt(b1, b2)) => {
                    (go(a1, b1, env) && go(a2, b2, env)) || (go(a1, b2, env) && go(a2, b1, env))
                }
                (Cfe::Fix(x, a1), Cfe::Fix(y, b1)) => {
                    env.push((x.clone(), y.clone()));
                    let r = go(a1, b1, env);
                    env.pop();
                    r
                }
                _ => false,
            }
        }
        go(self, other, &mut Vec::new())
    }

    /// Renders with token names from `tokens`.
    pub fn display<'a>(&'a self, tokens: &'a [String]) -> CfeDisplay<'a> {
        CfeDisplay { g: self, tokens }
    }
}

pub struct CfeDisplay<'a> {
    g: &'a Cfe,
    tokens: &'a [String],
}

impl fmt::Display for CfeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(g: &Cfe, tokens: &[String], prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match g {
                Cfe::Bot => write!(f, "⊥"),
                Cfe::Eps => write!(f, "ε"),
                Cfe::Tok(t) => match tokens.get(t.0 as usize) {
                    Some(n) => write!(f, "{n}"),
                    None => write!(f, "#{}", t.0),
                },
                Cfe::Var(x) => write!(f, "{x}"),
                Cfe::Seq(a, b) => {
                    if prec > 1 {
                        write!(f, "(")?;
                    }
                    go(a, tokens, 1, f)?;
                    write!(f, " · ")?;
                    go(b, tokens, 2, f)?;
                    if prec > 1 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                Cfe::Alt(a, b) => {
                    if prec > 0 {
                        write!(f, "(")?;
                    }
                    go(a, tokens, 0, f)?;
                    write!(f, " ∨ ")?;
                    go(b, tokens, 1, f)?;
                    if prec > 0 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                Cfe::Fix(x, b) => {
                    write!(f, "(μ {x}. ")?;
                    go(b, tokens, 0, f)?;
                    write!(f, ")")
                }
            }
        }
        go(self.g, self.tokens, 0, f)
    }
}

pub type TokenSet = BTreeSet<TokenId>;

/// Nullability, first tokens, and tokens that may follow a word's last token.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CfeType {
    pub null: bool,
    pub first: TokenSet,
    pub flast: TokenSet,
}

impl CfeType {
    pub fn eps() -> CfeType {
        CfeType { null: true, ..Default::default() }
    }

    pub fn tok(t: TokenId) -> CfeType {
        CfeType { null: false, first: [t].into(), flast: TokenSet::new() }
    }

    pub fn bot() -> CfeType {
        CfeType::default()
    }

    pub fn seq(&self, o: &CfeType) -> CfeType {
        let mut first = self.first.clone();
        if self.null {
            first.extend(o.first.iter().copied());
        }
        let mut flast = o.flast.clone();
        if o.null {
            flast.extend(o.first.iter().copied());
            flast.extend(self.flast.iter().copied());
        }
        CfeType { null: self.null && o.null, first, flast }
    }

    pub fn alt(&self, o: &CfeType) -> CfeType {
        CfeType {
            null: self.null || o.null,
            first: self.first.union(&o.first).copied().collect(),
            flast: self.flast.union(&o.flast).copied().collect(),
        }
    }

    /// `self ⊛ o`.
    pub fn separable(&self, o: &CfeType) -> bool {
        !self.null && self.flast.is_disjoint(&o.first)
    }

    /// `self # o`.
    pub fn apart(&self, o: &CfeType) -> bool {
        !(self.null && o.null) && self.first.is_disjoint(&o.first)
    }

    pub fn display<'a>(&'a self, tokens: &'a [String]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a CfeType, &'a [String]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let set = |s: &TokenSet| {
                    s.iter()
                        .map(|t| self.1.get(t.0 as usize).cloned().unwrap_or_else(|| format!("#{}", t.0)))
                        .collect::<Vec<_>>()
                        .join(",")
                };
                write!(f, "null={} first={{{}}} flast={{{}}}", self.0.null, set(&self.0.first), set(&self.0.flast))
            }
        }
        D(self, tokens)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TypeErrorKind {
    /// Alternatives share first tokens, or are both nullable.
    ApartnessViolation { tokens: Vec<TokenId>, both_nullable: bool },
    /// Left of a sequence is nullable, or its FLast meets the right's First.
    SeparabilityViolation { nullable_left: bool, tokens: Vec<TokenId> },
    /// A recursive variable used before any token was consumed.
    GuardedVarUse { var: String },
    UnboundVar { var: String },
}

/// A type error and the path (child indices from the root) to the
/// offending subexpression.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
#[error("{kind:?} at path {path:?}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub path: Vec<usize>,
}

/// Variables in scope: `gamma` may be used, `delta` is guarded.
#[derive(Clone, Debug, Default)]
pub struct TypeContexts {
    pub gamma: Vec<(String, CfeType)>,
    pub delta: Vec<(String, CfeType)>,
}

/// Figures gathered while typing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TypeStats {
    /// Most iterations any single `Fix` needed to reach its type.
    pub max_fix_iterations: usize,
}

struct Typer {
    strict: bool,
    stats: TypeStats,
}

impl Typer {
    fn go(
        &mut self,
        gamma: &mut Vec<(String, CfeType)>,
        delta: &mut Vec<(String, CfeType)>,
        g: &Cfe,
        path: &mut Vec<usize>,
    ) -> Result<CfeType, TypeError> {
        let fail = |kind, path: &Vec<usize>| Err(TypeError { kind, path: path.clone() });
        match g {
            Cfe::Bot => Ok(CfeType::bot()),
            Cfe::Eps => Ok(CfeType::eps()),
            Cfe::Tok(t) => Ok(CfeType::tok(*t)),
            Cfe::Var(x) => {
                if let Some((_, t)) = gamma.iter().rev().find(|(n, _)| n == x) {
                    return Ok(t.clone());
                }
                if delta.iter().any(|(n, _)| n == x) {
                    return fail(TypeErrorKind::GuardedVarUse { var: x.clone() }, path);
                }
                fail(TypeErrorKind::UnboundVar { var: x.clone() }, path)
            }
            Cfe::Seq(a, b) => {
                path.push(0);
                let t1 = self.go(gamma, delta, a, path)?;
                path.pop();
                let mut gamma2 = gamma.clone();
                gamma2.extend(delta.iter().cloned());
                path.push(1);
                let t2 = self.go(&mut gamma2, &mut Vec::new(), b, path)?;
                path.pop();
                if self.strict && !t1.separable(&t2) {
                    let tokens = t1.flast.intersection(&t2.first).copied().collect();
                    return fail(TypeErrorKind::SeparabilityViolation { nullable_left: t1.null, tokens }, path);
                }
                Ok(t1.seq(&t2))
            }
            Cfe::Alt(a, b) => {
                path.push(0);
                let t1 = self.go(gamma, delta, a, path)?;
                path.pop();
                path.push(1);
                let t2 = self.go(gamma, delta, b, path)?;
                path.pop();
                if self.strict && !t1.apart(&t2) {
                    let tokens = t1.first.intersection(&t2.first).copied().collect();
                    return fail(TypeErrorKind::ApartnessViolation { tokens, both_nullable: t1.null && t2.null }, path);
                }
                Ok(t1.alt(&t2))
            }
            Cfe::Fix(x, body) => {
                let strict = self.strict;
                self.strict = false;
                let mut t = CfeType::bot();
                let mut iterations = 0;
                path.push(0);
                loop {
                    iterations += 1;
                    delta.push((x.clone(), t.clone()));
                    let next = self.go(gamma, delta, body, path);
                    delta.pop();
                    let next = match next {
                        Ok(n) => n,
                        Err(e) => {
                            self.strict = strict;
                            return Err(e);
                        }
                    };
                    if next == t {
                        break;
                    }
                    t = next;
                }
                self.stats.max_fix_iterations = self.stats.max_fix_iterations.max(iterations);
                self.strict = strict;
                if strict {
                    delta.push((x.clone(), t.clone()));
                    let checked = self.go(gamma, delta, body, path);
                    delta.pop();
                    debug_assert!(checked.as_ref().map_or(true, |c| *c == t));
                    checked?;
                }
                path.pop();
                Ok(t)
            }
        }
    }
}

/// Types `g` under the given contexts.
pub fn type_of(ctx: &TypeContexts, g: &Cfe) -> Result<CfeType, TypeError> {
    type_of_with_stats(ctx, g).map(|(t, _)| t)
}

pub fn type_of_with_stats(ctx: &TypeContexts, g: &Cfe) -> Result<(CfeType, TypeStats), TypeError> {
    let mut typer = Typer { strict: true, stats: TypeStats::default() };
    let mut gamma = ctx.gamma.clone();
    let mut delta = ctx.delta.clone();
    let t = typer.go(&mut gamma, &mut delta, g, &mut Vec::new())?;
    Ok((t, typer.stats))
}

/// Types a closed expression.
pub fn type_closed(g: &Cfe) -> Result<CfeType, TypeError> {
    type_of(&TypeContexts::default(), g)
}

pub type Word = Vec<TokenId>;
pub type WordSet = BTreeSet<Word>;

/// The words of `g` of length at most `max_len`, by bounded Kleene iteration.
pub fn denote_enumerate(g: &Cfe, env: &HashMap<String, WordSet>, max_len: usize) -> WordSet {
    let mut d = Denoter { max_len, env: env.iter().map(|(k, v)| (k.clone(), v.clone())).collect(), warm: HashMap::new() };
    d.go(g)
}

struct Denoter {
    max_len: usize,
    env: Vec<(String, WordSet)>,
    // last fixed point per Fix node; later iterations start from it
    warm: HashMap<*const Cfe, WordSet>,
}

impl Denoter {
    fn go(&mut self, g: &Cfe) -> WordSet {
        match g {
            Cfe::Bot => WordSet::new(),
            Cfe::Eps => [vec![]].into(),
            Cfe::Tok(t) => {
                if self.max_len == 0 {
                    WordSet::new()
                } else {
                    [vec![*t]].into()
                }
            }
            Cfe::Var(x) => self.env.iter().rev().find(|(n, _)| n == x).map(|(_, s)| s.clone()).unwrap_or_default(),
            Cfe::Alt(a, b) => {
                let mut l = self.go(a);
                l.extend(self.go(b));
                l
            }
            Cfe::Seq(a, b) => {
                let l1 = self.go(a);
                if l1.is_empty() {
                    return l1;
                }
                let l2 = self.go(b);
                let mut by_len: Vec<Vec<&Word>> = vec![Vec::new(); self.max_len + 1];
                for w in &l2 {
                    by_len[w.len()].push(w);
                }
                let mut out = WordSet::new();
                for w1 in &l1 {
                    for bucket in &by_len[..=self.max_len - w1.len()] {
                        for w2 in bucket {
                            let mut w = w1.clone();
                            w.extend_from_slice(w2);
                            out.insert(w);
                        }
                    }
                }
                out
            }
            Cfe::Fix(x, body) => {
                let key = g as *const Cfe;
                let mut cur = self.warm.get(&key).cloned().unwrap_or_default();
                loop {
                    self.env.push((x.clone(), cur.clone()));
                    let next = self.go(body);
                    self.env.pop();
                    if next.len() == cur.len() {
                        break;
                    }
                    cur = next;
                }
                self.warm.insert(key, cur.clone());
                cur
            }
        }
    }
}
