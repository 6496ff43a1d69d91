//! Every stage, from a grammar file to the compiled automaton.

use thiserror::Error;

use crate::cfe::{type_closed, Cfe, CfeType, TypeError};
use crate::engine::{compile_automaton, CompileError, CompiledAutomaton};
use crate::fusion::{fuse, FuseError, FusedGrammar};
use crate::grammar_file::{load_grammar_str, shipped, GrammarError, Loaded};
use crate::lexer::Lexer;
use crate::normalize::{normalize, trim_unreachable, NormalGrammar, NormalizeError, Violation};
use crate::regex::RegexError;
use crate::token_parser::Unfused;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error("not in DGNF: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Dgnf(Vec<Violation>),
    #[error(transparent)]
    Fuse(#[from] FuseError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Regex(#[from] RegexError),
}

pub struct Compiled {
    pub lexer: Lexer,
    pub cfe: Cfe,
    pub ty: CfeType,
    /// Trimmed to what the start symbol reaches.
    pub normal: NormalGrammar,
    pub fused: FusedGrammar,
    pub automaton: CompiledAutomaton,
    pub unfused: Unfused,
    pub warnings: Vec<String>,
}

impl Compiled {
    pub fn build(loaded: Loaded) -> Result<Compiled, PipelineError> {
        let Loaded { lexer, cfe, warnings } = loaded;
        let ty = type_closed(&cfe)?;
        let normal = trim_unreachable(&normalize(&cfe)?);
        normal.check_dgnf().map_err(PipelineError::Dgnf)?;
        let fused = fuse(&lexer, &normal)?;
        let automaton = compile_automaton(&fused)?;
        let unfused = Unfused::new(&lexer, &normal)?;
        Ok(Compiled { lexer, cfe, ty, normal, fused, automaton, unfused, warnings })
    }

    pub fn from_source(text: &str) -> Result<Compiled, PipelineError> {
        Compiled::build(load_grammar_str(text)?)
    }

    /// One of the grammars that ship with the crate, by name.
    pub fn shipped(name: &str) -> Compiled {
        let text = shipped::by_name(name).unwrap_or_else(|| panic!("no shipped grammar {name}"));
        Compiled::from_source(text).expect("shipped grammars compile")
    }
}
