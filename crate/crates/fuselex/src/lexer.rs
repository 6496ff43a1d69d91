//! Lexer specifications and longest-match lexing.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::regex::{class_partition, Regex, RegexError};

/// Index into a lexer's token universe.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TokenId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Action {
    Return(TokenId),
    Skip,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LexRule {
    pub pattern: Regex,
    pub action: Action,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Lexer {
    pub rules: Vec<LexRule>,
    pub token_names: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexerError {
    #[error("lexer has no rules")]
    NoRules,
    #[error("rule {rule} matches the empty string")]
    NullablePattern { rule: usize },
    #[error("rule {rule} matches nothing")]
    EmptyPattern { rule: usize },
    #[error("rule {rule} ({action}) is shadowed by earlier rules")]
    Shadowed { rule: usize, action: String },
    #[error(transparent)]
    Regex(#[from] RegexError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexWarning {
    pub message: String,
}

impl fmt::Display for LexWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("no lexer rule matches at byte {offset}")]
pub struct LexError {
    pub offset: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Token {
    pub id: TokenId,
    pub start: usize,
    pub end: usize,
}

impl Lexer {
    pub fn new(token_names: Vec<String>) -> Lexer {
        Lexer { rules: Vec::new(), token_names }
    }

    /// Adds a token name if absent and returns its id.
    pub fn intern(&mut self, name: &str) -> TokenId {
        if let Some(t) = self.token_id(name) {
            return t;
        }
        self.token_names.push(name.to_string());
        TokenId(self.token_names.len() as u32 - 1)
    }

    pub fn token_id(&self, name: &str) -> Option<TokenId> {
        self.token_names.iter().position(|n| n == name).map(|i| TokenId(i as u32))
    }

    pub fn token_name(&self, t: TokenId) -> &str {
        self.token_names.get(t.0 as usize).map(String::as_str).unwrap_or("?")
    }

    pub fn push(&mut self, pattern: Regex, action: Action) {
        self.rules.push(LexRule { pattern, action });
    }

    /// The pattern returning `t`, if any.
    pub fn return_rule(&self, t: TokenId) -> Option<&Regex> {
        self.rules.iter().find(|r| r.action == Action::Return(t)).map(|r| &r.pattern)
    }

    /// The skip pattern, or ⊥.
    pub fn skip_regex(&self) -> Regex {
        Regex::alt_all(self.rules.iter().filter(|r| r.action == Action::Skip).map(|r| r.pattern.clone()))
    }

    fn action_name(&self, a: Action) -> String {
        match a {
            Action::Return(t) => self.token_name(t).to_string(),
            Action::Skip => "skip".to_string(),
        }
    }
}

impl fmt::Display for Lexer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{} => {}", r.pattern, self.action_name(r.action))?;
        }
        Ok(())
    }
}

/// Rewrites `raw` into pairwise-disjoint rules, one per action. Earlier
/// rules win overlaps. In strict mode a rule that loses everything is an
/// error instead of a warning.
pub fn canonicalize_lexer(raw: &Lexer, strict: bool) -> Result<(Lexer, Vec<LexWarning>), LexerError> {
    if raw.rules.is_empty() {
        return Err(LexerError::NoRules);
    }
    for (i, r) in raw.rules.iter().enumerate() {
        if r.pattern.nullable() {
            return Err(LexerError::NullablePattern { rule: i });
        }
        if r.pattern.is_empty_language()? {
            return Err(LexerError::EmptyPattern { rule: i });
        }
    }

    let mut merged: Vec<(Action, Regex, usize)> = Vec::new();
    let mut slot: HashMap<Action, usize> = HashMap::new();
    for (i, r) in raw.rules.iter().enumerate() {
        match slot.get(&r.action) {
            Some(&j) => merged[j].1 = Regex::alt(merged[j].1.clone(), r.pattern.clone()),
            None => {
                slot.insert(r.action, merged.len());
                merged.push((r.action, r.pattern.clone(), i));
            }
        }
    }

    let mut out = Lexer::new(raw.token_names.clone());
    let mut warnings = Vec::new();
    let mut earlier: Vec<Regex> = Vec::new();
    for (action, pattern, origin) in merged {
        let prior = Regex::alt_all(earlier.iter().cloned());
        let mut p = pattern.clone();
        if !Regex::and(pattern.clone(), prior.clone()).is_empty_language()? {
            p = Regex::and(pattern.clone(), Regex::not(prior));
            if p.is_empty_language()? {
                if strict {
                    return Err(LexerError::Shadowed { rule: origin, action: raw.action_name(action) });
                }
                warnings.push(LexWarning {
                    message: format!("rule {} ({}) is shadowed and was dropped", origin, raw.action_name(action)),
                });
                earlier.push(pattern);
                continue;
            }
        }
        earlier.push(pattern);
        out.push(p, action);
    }
    Ok((out, warnings))
}

/// The output of lexing as far as possible: tokens, and where lexing
/// stopped (the input length, or the offset of a lexing error).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub end: usize,
    pub error: Option<usize>,
}

/// Sees every attempt to read the input, including the end-of-input check.
pub trait LexProbe {
    /// `slot` is the number of tokens emitted before the current scan.
    fn read(&mut self, _index: usize, _slot: usize, _live: &[(usize, Regex)]) {}
}

struct NoProbe;

impl LexProbe for NoProbe {}

/// Lexes the whole input; fails at the first byte where no rule matches.
pub fn lex(l: &Lexer, input: &[u8]) -> Result<Vec<Token>, LexError> {
    let ts = lex_prefix(l, input);
    match ts.error {
        Some(offset) => Err(LexError { offset }),
        None => Ok(ts.tokens),
    }
}

/// Lexes until the end of input or the first error.
pub fn lex_prefix(l: &Lexer, input: &[u8]) -> TokenStream {
    lex_prefix_probed(l, input, &mut NoProbe)
}

pub fn lex_prefix_probed(l: &Lexer, input: &[u8], probe: &mut dyn LexProbe) -> TokenStream {
    let initial: Vec<(usize, Regex)> = l.rules.iter().map(|r| r.pattern.clone()).enumerate().collect();
    let mut tokens = Vec::new();
    let mut pos = 0;
    loop {
        let mut live = initial.clone();
        let mut best: Option<(usize, usize)> = None;
        let mut i = pos;
        loop {
            probe.read(i, tokens.len(), &live);
            if i == input.len() {
                break;
            }
            let c = input[i];
            live = live
                .into_iter()
                .map(|(k, r)| (k, r.deriv(c)))
                .filter(|(_, r)| !r.is_bot())
                .collect();
            if live.is_empty() {
                break;
            }
            i += 1;
            if let Some((k, _)) = live.iter().find(|(_, r)| r.nullable()) {
                best = Some((*k, i));
            }
        }
        if pos == input.len() {
            return TokenStream { tokens, end: pos, error: None };
        }
        match best {
            None => return TokenStream { tokens, end: pos, error: Some(pos) },
            Some((k, end)) => {
                if let Action::Return(id) = l.rules[k].action {
                    tokens.push(Token { id, start: pos, end });
                }
                pos = end;
            }
        }
    }
}

const DEAD: u32 = u32::MAX;

/// A lexer with every derivative precomputed into a DFA.
#[derive(Clone, Debug)]
pub struct CompiledLexer {
    trans: Vec<u32>,
    accept: Vec<Option<Action>>,
}

impl CompiledLexer {
    pub fn new(l: &Lexer) -> Result<CompiledLexer, RegexError> {
        type Key = Vec<(usize, Regex)>;
        let start: Key = l.rules.iter().map(|r| r.pattern.clone()).enumerate().collect();
        let mut index: HashMap<Key, u32> = HashMap::new();
        let mut states: Vec<Key> = Vec::new();
        index.insert(start.clone(), 0);
        states.push(start);
        let mut trans = Vec::new();
        let mut accept = Vec::new();
        let mut n = 0;
        while n < states.len() {
            let live = states[n].clone();
            accept.push(live.iter().find(|(_, r)| r.nullable()).map(|(k, _)| l.rules[*k].action));
            let rs: Vec<Regex> = live.iter().map(|(_, r)| r.clone()).collect();
            let part = class_partition(&rs);
            let mut row = vec![DEAD; 256];
            for class in part.classes() {
                let c = class.min().unwrap();
                let next: Key = live
                    .iter()
                    .map(|(k, r)| (*k, r.deriv(c)))
                    .filter(|(_, r)| !r.is_bot())
                    .collect();
                if next.is_empty() {
                    continue;
                }
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        if states.len() >= crate::regex::CLOSURE_LIMIT {
                            return Err(RegexError::ClosureLimit { limit: crate::regex::CLOSURE_LIMIT });
                        }
                        let id = states.len() as u32;
                        index.insert(next.clone(), id);
                        states.push(next);
                        id
                    }
                };
                for b in class.iter() {
                    row[b as usize] = id;
                }
            }
            trans.extend(row);
            n += 1;
        }
        Ok(CompiledLexer { trans, accept })
    }

    pub fn state_count(&self) -> usize {
        self.accept.len()
    }

    /// Same contract as [`lex_prefix`].
    pub fn lex_prefix(&self, input: &[u8]) -> TokenStream {
        let mut tokens = Vec::new();
        self.lex_into(input, &mut tokens)
    }

    /// Lexes into a caller-provided buffer, which is cleared first.
    pub fn lex_into(&self, input: &[u8], tokens: &mut Vec<Token>) -> TokenStream {
        tokens.clear();
        let mut pos = 0;
        let len = input.len();
        while pos < len {
            let mut s = 0u32;
            let mut best: Option<(Action, usize)> = None;
            let mut i = pos;
            while i < len {
                s = self.trans[(s as usize) << 8 | input[i] as usize];
                if s == DEAD {
                    break;
                }
                i += 1;
                if let Some(a) = self.accept[s as usize] {
                    best = Some((a, i));
                }
            }
            match best {
                None => return TokenStream { tokens: std::mem::take(tokens), end: pos, error: Some(pos) },
                Some((a, end)) => {
                    if let Action::Return(id) = a {
                        tokens.push(Token { id, start: pos, end });
                    }
                    pos = end;
                }
            }
        }
        TokenStream { tokens: std::mem::take(tokens), end: len, error: None }
    }
}
