pub mod bench;
pub mod cfe;
pub mod corpus;
pub mod engine;
pub mod fusion;
pub mod grammar_file;
pub mod lexer;
pub mod normalize;
pub mod pipeline;
pub mod regex;
pub mod token_parser;

#[cfg(test)]
mod testutil;

pub use lexer::TokenId;
