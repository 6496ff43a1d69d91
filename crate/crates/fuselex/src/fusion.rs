//! Fusing a lexer into a DGNF grammar: tokens become regexes, skip rules
//! become self-loops, and ε-productions become negative lookaheads.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::lexer::{Lexer, TokenId};
use crate::normalize::{NormalGrammar, Nt, Production};
use crate::regex::{Regex, RegexKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FusedProduction {
    Match { regex: Regex, then: Vec<Nt> },
    Lookahead(Regex),
}

impl FusedProduction {
    pub fn is_lookahead(&self) -> bool {
        matches!(self, FusedProduction::Lookahead(_))
    }
}

#[derive(Clone, Debug)]
pub struct FusedGrammar {
    pub start: Nt,
    pub prods: BTreeMap<Nt, Vec<FusedProduction>>,
    pub skip: Regex,
    pub names: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FuseError {
    #[error("token {token} has no lexer rule")]
    MissingTokenRule { token: String },
    #[error("nonterminal {nt} still has a variable production")]
    InternalForm { nt: String },
}

pub fn fuse(l: &Lexer, g: &NormalGrammar) -> Result<FusedGrammar, FuseError> {
    let skip = l.skip_regex();
    let token_regex = |t: TokenId| {
        l.return_rule(t).cloned().ok_or_else(|| FuseError::MissingTokenRule {
            token: l.token_names.get(t.0 as usize).cloned().unwrap_or_else(|| format!("#{}", t.0)),
        })
    };
    let mut prods = BTreeMap::new();
    for (&n, ps) in &g.prods {
        let mut out = Vec::new();
        let mut has_eps = false;
        for p in ps {
            match p {
                Production::Tok(t, tail) => out.push(FusedProduction::Match { regex: token_regex(*t)?, then: tail.clone() }),
                Production::Eps => has_eps = true,
                Production::Var(..) => return Err(FuseError::InternalForm { nt: g.name(n).to_string() }),
            }
        }
        if !skip.is_bot() {
            out.push(FusedProduction::Match { regex: skip.clone(), then: vec![n] });
        }
        if has_eps {
            let heads = out.iter().filter_map(|p| match p {
                FusedProduction::Match { regex, .. } => Some(regex.clone()),
                FusedProduction::Lookahead(_) => None,
            });
            out.push(FusedProduction::Lookahead(Regex::not(Regex::alt_all(heads))));
        }
        prods.insert(n, out);
    }
    Ok(FusedGrammar { start: g.start, prods, skip, names: g.names.clone() })
}

impl FusedGrammar {
    pub fn name(&self, n: Nt) -> &str {
        &self.names[n.0 as usize]
    }

    pub fn productions(&self, n: Nt) -> &[FusedProduction] {
        self.prods.get(&n).map_or(&[], |v| v.as_slice())
    }

    pub fn production_count(&self) -> usize {
        self.prods.values().map(Vec::len).sum()
    }

    pub fn has_lookahead(&self, n: Nt) -> bool {
        self.productions(n).iter().any(FusedProduction::is_lookahead)
    }

    /// Start nonterminal first, then the rest by id.
    pub fn dump(&self) -> String {
        let mut order = vec![self.start];
        order.extend(self.prods.keys().copied().filter(|n| *n != self.start));
        let mut out = String::new();
        for n in order {
            for p in self.productions(n) {
                let _ = write!(out, "{} -> ", self.name(n));
                match p {
                    FusedProduction::Match { regex, then } => {
                        out.push_str(&bracket(regex));
                        for m in then {
                            let _ = write!(out, " {}", self.name(*m));
                        }
                    }
                    FusedProduction::Lookahead(r) => match r.kind() {
                        RegexKind::Not(inner) => {
                            let _ = write!(out, "?! {}", bracket(inner));
                        }
                        _ => {
                            let _ = write!(out, "? {}", bracket(r));
                        }
                    },
                }
                out.push('\n');
            }
        }
        out
    }
}

fn bracket(r: &Regex) -> String {
    match r.kind() {
        RegexKind::Alt(_) | RegexKind::And(_) => format!("({r})"),
        _ => r.to_string(),
    }
}
