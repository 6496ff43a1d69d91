use crate::cfe::Cfe;
use crate::lexer::{canonicalize_lexer, Action, Lexer};
use crate::regex::parse_regex;
use crate::TokenId;

pub const ATOM: TokenId = TokenId(0);
pub const LPAR: TokenId = TokenId(1);
pub const RPAR: TokenId = TokenId(2);

pub fn sexp_lexer() -> Lexer {
    let mut l = Lexer::new(vec!["ATOM".into(), "LPAR".into(), "RPAR".into()]);
    l.push(parse_regex("[a-z]+").unwrap(), Action::Return(ATOM));
    l.push(parse_regex("\"(\"").unwrap(), Action::Return(LPAR));
    l.push(parse_regex("\")\"").unwrap(), Action::Return(RPAR));
    l.push(parse_regex("\" \"").unwrap(), Action::Skip);
    l.push(parse_regex("\"\\n\"").unwrap(), Action::Skip);
    canonicalize_lexer(&l, true).unwrap().0
}

pub fn sexp_cfe() -> Cfe {
    let sexps = Cfe::fix("sexps", Cfe::alt(Cfe::eps(), Cfe::seq(Cfe::var("sexp"), Cfe::var("sexps"))));
    Cfe::fix("sexp", Cfe::alt(Cfe::seq_all(vec![Cfe::tok(LPAR), sexps, Cfe::tok(RPAR)]), Cfe::tok(ATOM)))
}

pub fn sexp_normal() -> crate::normalize::NormalGrammar {
    crate::normalize::trim_unreachable(&crate::normalize::normalize(&sexp_cfe()).unwrap())
}
