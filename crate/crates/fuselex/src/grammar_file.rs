//! Grammar definition files.
//!
//! ```text
//! # comment
//! token ATOM = [a-z]+ ;
//! skip = " " | "\n" ;
//! start sexp ;
//! sexp  ::= LPAR sexps RPAR | ATOM ;
//! sexps ::= sexp sexps | ;
//! ```
//!
//! Rules are lowered to one closed expression by inlining: a reference to a
//! rule that is already being expanded becomes a variable bound by a `Fix`
//! around that rule, anything else is expanded in place.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::cfe::Cfe;
use crate::lexer::{canonicalize_lexer, Action, LexWarning, Lexer, LexerError};
use crate::regex::{parse_regex_until, Regex};

/// How many mutually recursive rules may be open at once while inlining.
pub const MAX_RECURSION_DEPTH: usize = 8;
/// Lowered expressions bigger than this many nodes get a warning.
pub const SIZE_WARNING: usize = 5_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    Token { name: String, regex: Regex },
    Skip(Regex),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    /// Each alternative is a symbol sequence; empty means ε.
    pub alternatives: Vec<Vec<(String, Pos)>>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrammarFile {
    /// Token and skip rules in file order, which is also their priority.
    pub lex_rules: Vec<Statement>,
    pub rules: Vec<Rule>,
    pub start: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{line}:{col}: undefined name `{name}`")]
    Unresolved { name: String, line: usize, col: usize },
    #[error("`{name}` is defined twice")]
    Duplicate { name: String },
    #[error("no start rule given")]
    NoStart,
    #[error(
        "rule `{rule}` sits under {depth} open mutually recursive rules (limit {MAX_RECURSION_DEPTH}); \
         factor the cycle through fewer rules"
    )]
    TooDeep { rule: String, depth: usize },
    #[error("lexer: {0}")]
    Lexer(#[from] LexerError),
    #[error("{0}")]
    Io(String),
}

struct Scanner<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn position(&self, at: usize) -> Pos {
        let before = &self.s[..at];
        let line = before.matches('\n').count() + 1;
        let col = at - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        Pos { line, col }
    }

    fn err(&self, at: usize, message: impl Into<String>) -> GrammarError {
        let Pos { line, col } = self.position(at);
        GrammarError::Syntax { line, col, message: message.into() }
    }

    fn skip_trivia(&mut self) {
        let b = self.s.as_bytes();
        while self.pos < b.len() {
            match b[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < b.len() && b[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_trivia();
        self.pos >= self.s.len()
    }

    fn ident(&mut self) -> Option<(String, Pos)> {
        self.skip_trivia();
        let start = self.pos;
        let b = self.s.as_bytes();
        while self.pos < b.len() && (b[self.pos].is_ascii_alphanumeric() || b[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos || b[start].is_ascii_digit() {
            self.pos = start;
            return None;
        }
        Some((self.s[start..self.pos].to_string(), self.position(start)))
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Pos), GrammarError> {
        self.ident().ok_or_else(|| self.err(self.pos, format!("expected {what}")))
    }

    fn eat(&mut self, lit: &str) -> bool {
        self.skip_trivia();
        if self.s[self.pos..].starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), GrammarError> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(self.err(self.pos, format!("expected `{lit}`")))
        }
    }

    fn regex(&mut self) -> Result<Regex, GrammarError> {
        self.skip_trivia();
        let rest = &self.s[self.pos..];
        match parse_regex_until(rest, Some(b';')) {
            Ok((r, used)) => {
                self.pos += used;
                self.expect(";")?;
                Ok(r)
            }
            Err(e) => Err(self.err(self.pos + e.offset, format!("bad regex: {}", e.message))),
        }
    }
}

pub fn parse_grammar_file(text: &str) -> Result<GrammarFile, GrammarError> {
    let mut sc = Scanner { s: text, pos: 0 };
    let mut lex_rules = Vec::new();
    let mut rules: Vec<Rule> = Vec::new();
    let mut start = None;
    while !sc.at_end() {
        let at = sc.pos;
        let (word, pos) = sc.expect_ident("a statement")?;
        match word.as_str() {
            "token" => {
                let (name, _) = sc.expect_ident("a token name")?;
                sc.expect("=")?;
                lex_rules.push(Statement::Token { name, regex: sc.regex()? });
            }
            "skip" => {
                sc.expect("=")?;
                lex_rules.push(Statement::Skip(sc.regex()?));
            }
            "start" => {
                let (name, _) = sc.expect_ident("a rule name")?;
                sc.expect(";")?;
                if start.replace(name).is_some() {
                    return Err(sc.err(at, "start given twice"));
                }
            }
            _ => {
                sc.expect("::=")?;
                let mut alternatives = vec![vec![]];
                loop {
                    if sc.eat(";") {
                        break;
                    }
                    if sc.eat("|") {
                        alternatives.push(vec![]);
                        continue;
                    }
                    match sc.ident() {
                        Some(sym) => alternatives.last_mut().unwrap().push(sym),
                        None if sc.at_end() => return Err(sc.err(sc.pos, "unterminated rule, expected `;`")),
                        None => return Err(sc.err(sc.pos, "expected a symbol, `|` or `;`")),
                    }
                }
                rules.push(Rule { name: word, alternatives, pos });
            }
        }
    }
    Ok(GrammarFile { lex_rules, rules, start: start.ok_or(GrammarError::NoStart)? })
}

/// A grammar file turned into a lexer and a closed expression.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub lexer: Lexer,
    pub cfe: Cfe,
    pub warnings: Vec<String>,
}

pub fn load_grammar(path: &Path) -> Result<Loaded, GrammarError> {
    let text = std::fs::read_to_string(path).map_err(|e| GrammarError::Io(format!("{}: {e}", path.display())))?;
    load_grammar_str(&text)
}

pub fn load_grammar_str(text: &str) -> Result<Loaded, GrammarError> {
    lower(&parse_grammar_file(text)?)
}

pub fn lower(file: &GrammarFile) -> Result<Loaded, GrammarError> {
    let mut names = BTreeSet::new();
    let mut token_names = Vec::new();
    for s in &file.lex_rules {
        if let Statement::Token { name, .. } = s {
            if !names.insert(name.clone()) {
                return Err(GrammarError::Duplicate { name: name.clone() });
            }
            token_names.push(name.clone());
        }
    }
    let mut rules: HashMap<&str, &Rule> = HashMap::new();
    for r in &file.rules {
        if !names.insert(r.name.clone()) || rules.insert(&r.name, r).is_some() {
            return Err(GrammarError::Duplicate { name: r.name.clone() });
        }
    }
    let mut raw = Lexer::new(token_names);
    for s in &file.lex_rules {
        match s {
            Statement::Token { name, regex } => {
                let t = raw.token_id(name).expect("interned above");
                raw.push(regex.clone(), Action::Return(t));
            }
            Statement::Skip(r) => raw.push(r.clone(), Action::Skip),
        }
    }
    for r in &file.rules {
        for (sym, pos) in r.alternatives.iter().flatten() {
            if !names.contains(sym) {
                return Err(GrammarError::Unresolved { name: sym.clone(), line: pos.line, col: pos.col });
            }
        }
    }
    if !rules.contains_key(file.start.as_str()) {
        return Err(GrammarError::Unresolved { name: file.start.clone(), line: 0, col: 0 });
    }
    let (lexer, lex_warnings) = canonicalize_lexer(&raw, false)?;
    let cyclic = cyclic_rules(file);
    let mut lw = Lowering { raw: &raw, rules: &rules, cyclic: &cyclic, open: Vec::new() };
    let cfe = lw.rule(&file.start)?;
    let mut warnings: Vec<String> = lex_warnings.into_iter().map(|LexWarning { message }| message).collect();
    let size = cfe.size();
    if size > SIZE_WARNING {
        warnings.push(format!("inlining mutually recursive rules produced an expression of {size} nodes"));
    }
    Ok(Loaded { lexer, cfe, warnings })
}

struct Lowering<'a> {
    raw: &'a Lexer,
    rules: &'a HashMap<&'a str, &'a Rule>,
    cyclic: &'a BTreeSet<String>,
    open: Vec<String>,
}

impl Lowering<'_> {
    fn rule(&mut self, name: &str) -> Result<Cfe, GrammarError> {
        if self.open.iter().any(|o| o == name) {
            return Ok(Cfe::var(name));
        }
        let depth = self.open.iter().filter(|o| self.cyclic.contains(*o)).count();
        if self.cyclic.contains(name) && depth >= MAX_RECURSION_DEPTH {
            return Err(GrammarError::TooDeep { rule: name.to_string(), depth: depth + 1 });
        }
        self.open.push(name.to_string());
        let rule = self.rules[name];
        let mut alts = Vec::new();
        for alt in &rule.alternatives {
            let mut seq = Vec::new();
            for (sym, _) in alt {
                seq.push(match self.raw.token_id(sym) {
                    Some(t) => Cfe::tok(t),
                    None => self.rule(sym)?,
                });
            }
            alts.push(Cfe::seq_all(seq));
        }
        self.open.pop();
        let body = Cfe::alt_all(alts);
        Ok(if body.free_vars().contains(name) { Cfe::fix(name, body) } else { body })
    }
}

// Rules on a cycle of the reference graph, self-loops included.
fn cyclic_rules(file: &GrammarFile) -> BTreeSet<String> {
    let graph: BTreeMap<&str, BTreeSet<&str>> = file
        .rules
        .iter()
        .map(|r| (r.name.as_str(), r.alternatives.iter().flatten().map(|(s, _)| s.as_str()).collect()))
        .collect();
    let reaches = |from: &str, to: &str| {
        let mut seen = BTreeSet::new();
        let mut todo: Vec<&str> = graph.get(from).into_iter().flatten().copied().collect();
        while let Some(n) = todo.pop() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                todo.extend(graph.get(n).into_iter().flatten().copied());
            }
        }
        false
    };
    graph.keys().filter(|r| reaches(r, r)).map(|r| r.to_string()).collect()
}

/// The grammars that ship with the crate.
pub mod shipped {
    pub const SEXP: &str = include_str!("../grammars/sexp.grammar");
    pub const CSV: &str = include_str!("../grammars/csv.grammar");
    pub const JSON: &str = include_str!("../grammars/json.grammar");

    pub const ALL: [(&str, &str); 3] = [("sexp", SEXP), ("csv", CSV), ("json", JSON)];

    pub fn by_name(name: &str) -> Option<&'static str> {
        ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }
}
