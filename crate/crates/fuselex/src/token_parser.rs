//! Single-token-lookahead parsing of DGNF grammars over token streams.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::engine::{Failure, ParseOutcome};
use crate::lexer::{CompiledLexer, Lexer, Token, TokenId, TokenStream};
use crate::normalize::{NormalGrammar, Nt, Production};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse failed at token {token_index} in nonterminal {nonterminal:?}")]
pub struct ParseFail {
    pub token_index: usize,
    pub nonterminal: Nt,
    pub expected: BTreeSet<TokenId>,
}

const NONE: u32 = u32::MAX;

/// A grammar flattened into a dense (nonterminal × token) table.
#[derive(Clone, Debug)]
pub struct TokenParser {
    index: HashMap<Nt, u32>,
    nts: Vec<Nt>,
    ntok: usize,
    table: Vec<u32>,
    eps: Vec<bool>,
    tails: Vec<Vec<u32>>,
}

/// What a token-level parse did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TokenRun {
    /// Index of the first unconsumed token.
    pub remainder: usize,
    pub steps: usize,
    /// Highest token index looked at; the token count means end of stream.
    pub max_inspected: Option<usize>,
    /// Whether the final step took an ε production.
    pub ended_on_eps: bool,
}

impl TokenParser {
    /// `ntok` is the size of the token universe.
    pub fn new(g: &NormalGrammar, ntok: usize) -> TokenParser {
        let nts: Vec<Nt> = g.prods.keys().copied().collect();
        let index: HashMap<Nt, u32> = nts.iter().enumerate().map(|(i, n)| (*n, i as u32)).collect();
        let mut table = vec![NONE; nts.len() * ntok];
        let mut eps = vec![false; nts.len()];
        let mut tails = Vec::new();
        for (i, n) in nts.iter().enumerate() {
            for p in g.productions(*n) {
                match p {
                    Production::Eps => eps[i] = true,
                    Production::Tok(t, tail) => {
                        let slot = &mut table[i * ntok + t.0 as usize];
                        if *slot == NONE {
                            *slot = tails.len() as u32;
                            tails.push(tail.iter().rev().map(|m| index[m]).collect());
                        }
                    }
                    Production::Var(..) => {}
                }
            }
        }
        TokenParser { index, nts, ntok, table, eps, tails }
    }

    fn expected(&self, n: u32) -> BTreeSet<TokenId> {
        (0..self.ntok)
            .filter(|t| self.table[n as usize * self.ntok + t] != NONE)
            .map(|t| TokenId(t as u32))
            .collect()
    }

    /// Parses from `start`, looking only at the head token at each step.
    pub fn run(&self, start: Nt, ids: &[TokenId]) -> Result<TokenRun, (ParseFail, TokenRun)> {
        let mut stack = vec![self.index[&start]];
        let mut i = 0;
        let mut steps = 0;
        let mut max_inspected = None;
        let mut ended_on_eps = false;
        while let Some(n) = stack.pop() {
            steps += 1;
            if let Some(t) = ids.get(i) {
                max_inspected = Some(i);
                let t = t.0 as usize;
                if t < self.ntok {
                    let p = self.table[n as usize * self.ntok + t];
                    if p != NONE {
                        i += 1;
                        ended_on_eps = false;
                        stack.extend_from_slice(&self.tails[p as usize]);
                        continue;
                    }
                }
            } else {
                max_inspected = Some(ids.len());
            }
            if !self.eps[n as usize] {
                let fail = ParseFail { token_index: i, nonterminal: self.nts[n as usize], expected: self.expected(n) };
                return Err((fail, TokenRun { remainder: i, steps, max_inspected, ended_on_eps }));
            }
            ended_on_eps = true;
        }
        Ok(TokenRun { remainder: i, steps, max_inspected, ended_on_eps })
    }

    /// Runs over a lexed stream and reports in bytes. A lexing error acts
    /// as a token that no production accepts.
    pub fn run_stream(&self, start: Nt, ts: &TokenStream, ids: &mut Vec<TokenId>) -> (ParseOutcome, TokenRun) {
        ids.clear();
        ids.extend(ts.tokens.iter().map(|t| t.id));
        let offset_of = |i: usize| ts.tokens.get(i).map_or(ts.end, |t| t.start);
        match self.run(start, ids) {
            Ok(run) => {
                // an ε step leaves the position just before the token it saw
                let consumed = if run.ended_on_eps { offset_of(run.remainder) } else { ts.tokens[run.remainder - 1].end };
                (ParseOutcome { accepted: true, consumed, failure: None, events: None }, run)
            }
            Err((fail, run)) => {
                let offset = offset_of(fail.token_index);
                let failure = Failure { offset, nonterminal: fail.nonterminal };
                (ParseOutcome { accepted: false, consumed: offset, failure: Some(failure), events: None }, run)
            }
        }
    }
}

/// Parses `ts` from `start`; returns the index of the first unconsumed token.
pub fn parse_tokens(g: &NormalGrammar, start: Nt, ts: &TokenStream) -> Result<usize, ParseFail> {
    let ntok = ts.tokens.iter().map(|t| t.id.0 as usize + 1).max().unwrap_or(0).max(max_token(g));
    let ids: Vec<TokenId> = ts.tokens.iter().map(|t| t.id).collect();
    TokenParser::new(g, ntok).run(start, &ids).map(|r| r.remainder).map_err(|(f, _)| f)
}

/// Parses a bare token word.
pub fn parse_word(g: &NormalGrammar, start: Nt, ids: &[TokenId]) -> Result<usize, ParseFail> {
    let ntok = ids.iter().map(|t| t.0 as usize + 1).max().unwrap_or(0).max(max_token(g));
    TokenParser::new(g, ntok).run(start, ids).map(|r| r.remainder).map_err(|(f, _)| f)
}

fn max_token(g: &NormalGrammar) -> usize {
    g.prods
        .values()
        .flatten()
        .filter_map(|p| match p {
            Production::Tok(t, _) => Some(t.0 as usize + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Token storage reused across parses.
#[derive(Default)]
pub struct Buffers {
    pub tokens: Vec<Token>,
    pub ids: Vec<TokenId>,
}

/// The token-materializing pipeline: compiled lexer, then the table parser.
pub struct Unfused {
    pub lexer: CompiledLexer,
    pub parser: TokenParser,
    pub start: Nt,
}

impl Unfused {
    pub fn new(l: &Lexer, g: &NormalGrammar) -> Result<Unfused, crate::regex::RegexError> {
        Ok(Unfused { lexer: CompiledLexer::new(l)?, parser: TokenParser::new(g, l.token_names.len()), start: g.start })
    }

    pub fn parse(&self, input: &[u8]) -> ParseOutcome {
        self.parse_in(input, &mut Buffers::default())
    }

    /// Same as [`Unfused::parse`], lexing into buffers kept by the caller.
    pub fn parse_in(&self, input: &[u8], buf: &mut Buffers) -> ParseOutcome {
        let ts = self.lexer.lex_into(input, &mut buf.tokens);
        let out = self.parser.run_stream(self.start, &ts, &mut buf.ids).0;
        buf.tokens = ts.tokens;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::lex_prefix;
    use crate::normalize::{normalize, trim_unreachable};
    use crate::testutil::{sexp_cfe, sexp_lexer, ATOM, LPAR, RPAR};

    fn sexp_normal() -> NormalGrammar {
        trim_unreachable(&normalize(&sexp_cfe()).unwrap())
    }

    #[test]
    fn hand_traced_runs() {
        let g = sexp_normal();
        assert_eq!(parse_word(&g, g.start, &[LPAR, ATOM, RPAR]), Ok(3));
        let err = parse_word(&g, g.start, &[RPAR]).unwrap_err();
        assert_eq!(err.token_index, 0);
        assert_eq!(err.nonterminal, g.start);
        assert_eq!(err.expected, [ATOM, LPAR].into_iter().collect());
        // trailing tokens are left over, not an error
        assert_eq!(parse_word(&g, g.start, &[ATOM, ATOM]), Ok(1));
    }

    #[test]
    fn epsilon_only() {
        let mut prods = std::collections::BTreeMap::new();
        prods.insert(Nt(0), vec![Production::Eps]);
        let g = NormalGrammar { start: Nt(0), prods, names: vec!["n".into()], var_nts: Default::default() };
        assert_eq!(parse_word(&g, Nt(0), &[]), Ok(0));
        assert_eq!(parse_word(&g, Nt(0), &[ATOM]), Ok(0));
    }

    #[test]
    fn stream_positions() {
        let l = sexp_lexer();
        let g = sexp_normal();
        let p = TokenParser::new(&g, 3);
        let run = |s: &[u8]| p.run_stream(g.start, &lex_prefix(&l, s), &mut Vec::new()).0;
        let ok = run(b"(ab c)");
        assert!(ok.accepted && ok.consumed == 6);
        // trailing blanks are not part of the parse
        assert_eq!(run(b"(a)  ").consumed, 3);
        assert_eq!(run(b"a b").consumed, 1);
        let bad = run(b"(a 9");
        assert!(!bad.accepted);
        assert_eq!(bad.failure.unwrap().offset, 3);
        assert_eq!(run(b"").failure.unwrap().offset, 0);
    }

    #[test]
    fn steps_are_linear() {
        let g = sexp_normal();
        let p = TokenParser::new(&g, 3);
        let mut w = vec![LPAR; 50];
        w.extend(vec![RPAR; 50]);
        let run = p.run(g.start, &w).unwrap();
        assert_eq!(run.remainder, 100);
        assert!(run.steps <= 4 * w.len() * 4);
    }
}
