//! Maximal munch checked against a brute-force search over every prefix.

mod common;

use fuselex::corpus::Corpus;
use fuselex::lexer::{lex_prefix, Action, CompiledLexer, Lexer, Token, TokenStream};
use fuselex::pipeline::Compiled;

/// Longest prefix matched by any rule, ties to the earliest rule.
fn munch(l: &Lexer, rest: &[u8]) -> Option<(usize, Action)> {
    (1..=rest.len())
        .rev()
        .find_map(|n| l.rules.iter().find(|r| common::naive(&r.pattern, &rest[..n])).map(|r| (n, r.action)))
}

fn brute(l: &Lexer, input: &[u8]) -> TokenStream {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < input.len() {
        match munch(l, &input[pos..]) {
            None => return TokenStream { tokens, end: pos, error: Some(pos) },
            Some((n, action)) => {
                if let Action::Return(id) = action {
                    tokens.push(Token { id, start: pos, end: pos + n });
                }
                pos += n;
            }
        }
    }
    TokenStream { tokens, end: pos, error: None }
}

#[test]
fn lexers_match_brute_force() {
    for corpus in Corpus::ALL {
        let c = Compiled::shipped(corpus.name());
        let dfa = CompiledLexer::new(&c.lexer).unwrap();
        let mut inputs = common::random_inputs(&c, corpus, 600, 11);
        inputs.iter_mut().for_each(|i| i.truncate(24));
        for input in inputs {
            let want = brute(&c.lexer, &input);
            let shown = String::from_utf8_lossy(&input);
            assert_eq!(lex_prefix(&c.lexer, &input), want, "{}: {shown:?}", corpus.name());
            assert_eq!(dfa.lex_prefix(&input), want, "{}: {shown:?}", corpus.name());
        }
    }
}

const KEYWORDS: &str = r#"
token IF = "if" ;
token ID = [a-z]+ ;
skip = " " ;
start s ;
s ::= IF s | ID | ;
"#;

#[test]
fn earlier_rule_wins_ties() {
    let l = fuselex::grammar_file::load_grammar_str(KEYWORDS).unwrap().lexer;
    let names = |input: &[u8]| -> Vec<String> {
        let ts = lex_prefix(&l, input);
        assert_eq!(ts, brute(&l, input));
        ts.tokens.iter().map(|t| l.token_name(t.id).to_string()).collect()
    };
    assert_eq!(names(b"if iff i if"), ["IF", "ID", "ID", "IF"]);
    for w in common::words_over(b"if ", 6) {
        names(&w);
    }
}
