use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fuselex::bench::{self, Pipeline, CSV_HEADER, SIZES_MB};
use fuselex::cfe::{denote_enumerate, type_closed, Word};
use fuselex::corpus::Corpus;
use fuselex::engine::{emit_source, fparse_interp, Backend, ParseOutcome};
use fuselex::grammar_file::{load_grammar, load_grammar_str, shipped, Loaded};
use fuselex::normalize::{normalize, normalize_literal, trim_unreachable};
use fuselex::pipeline::Compiled;

/// Type-check, normalize, fuse and run lexer-fused grammars.
#[derive(Parser)]
#[command(name = "fuselex", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Type-check a grammar and print its type.
    Check { grammar: String },
    /// Print the grammar in normal form.
    Normalize {
        grammar: String,
        /// One nonterminal per node, unreachable ones kept.
        #[arg(long)]
        no_trim: bool,
        /// One nonterminal per node, then trimmed.
        #[arg(long, conflicts_with = "no_trim")]
        literal: bool,
    },
    /// Print the grammar with the lexer fused in.
    Fuse { grammar: String },
    /// Print the compiled automaton, or source code for it.
    Compile {
        grammar: String,
        #[arg(long)]
        emit_source: bool,
        #[arg(long, value_enum, default_value_t = SourceBackend::Pseudo, requires = "emit_source")]
        backend: SourceBackend,
        /// Write here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Parse a file, or stdin when no file is given.
    Run {
        grammar: String,
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = RunBackend::Auto)]
        backend: RunBackend,
        /// Print every committed production.
        #[arg(long)]
        events: bool,
    },
    /// Print every word of at most K tokens, one per line.
    Enumerate {
        grammar: String,
        #[arg(long = "max-len", value_name = "K")]
        max_len: usize,
        #[arg(long, value_enum, default_value_t = Side::Cfe)]
        side: Side,
    },
    /// Time the three pipelines on generated documents.
    Bench {
        /// sexp, csv or json.
        corpus: String,
        /// Directory holding `<corpus>-<n>mb.txt` files.
        #[arg(long, default_value = "corpus")]
        dir: PathBuf,
        /// Write documents of every size into DIR and stop.
        #[arg(long, value_name = "DIR")]
        generate: Option<PathBuf>,
        /// Sizes in MB.
        #[arg(long, value_delimiter = ',', default_values_t = SIZES_MB)]
        sizes: Vec<usize>,
        /// Runs per measurement; the median is reported.
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceBackend {
    Pseudo,
    Rust,
}

#[derive(Clone, Copy, ValueEnum)]
enum RunBackend {
    Interp,
    Auto,
    Unfused,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Cfe,
    Dgnf,
}

const GRAMMAR_ERROR: u8 = 1;
const PARSE_FAILURE: u8 = 2;
/// A panic, which means a broken invariant.
const INTERNAL: u8 = 3;

/// A path if one exists, else the name of a shipped grammar.
fn load(grammar: &str) -> Result<Loaded> {
    let path = Path::new(grammar);
    let loaded = if path.exists() {
        load_grammar(path)?
    } else if let Some(text) = shipped::by_name(grammar) {
        load_grammar_str(text)?
    } else {
        bail!("no grammar file `{grammar}`, and no shipped grammar by that name");
    };
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded)
}

fn compiled(grammar: &str) -> Result<Compiled> {
    Ok(Compiled::build(load(grammar)?)?)
}

fn read_input(input: Option<&Path>) -> Result<Vec<u8>> {
    match input {
        Some(p) if p != Path::new("-") => std::fs::read(p).with_context(|| p.display().to_string()),
        _ => {
            let mut buf = Vec::new();
            std::io::stdin().read_to_end(&mut buf)?;
            Ok(buf)
        }
    }
}

fn word(w: &Word, names: &[String]) -> String {
    if w.is_empty() {
        return "ε".into();
    }
    w.iter().map(|t| names[t.0 as usize].as_str()).collect::<Vec<_>>().join(" ")
}

fn corpus_file(dir: &Path, corpus: Corpus, mb: usize) -> PathBuf {
    dir.join(format!("{}-{mb}mb.txt", corpus.name()))
}

fn run(cmd: Cmd) -> Result<u8> {
    let mut out = std::io::stdout().lock();
    match cmd {
        Cmd::Check { grammar } => {
            let l = load(&grammar)?;
            let ty = type_closed(&l.cfe)?;
            writeln!(out, "{}", ty.display(&l.lexer.token_names))?;
        }
        Cmd::Normalize { grammar, no_trim, literal } => {
            let l = load(&grammar)?;
            type_closed(&l.cfe)?;
            let g = match (no_trim, literal) {
                (true, _) => normalize_literal(&l.cfe)?,
                (_, true) => trim_unreachable(&normalize_literal(&l.cfe)?),
                _ => trim_unreachable(&normalize(&l.cfe)?),
            };
            write!(out, "{}", g.dump(&l.lexer.token_names))?;
        }
        Cmd::Fuse { grammar } => write!(out, "{}", compiled(&grammar)?.fused.dump())?,
        Cmd::Compile { grammar, emit_source: source, backend, output } => {
            let c = compiled(&grammar)?;
            let text = if source {
                let b = match backend {
                    SourceBackend::Pseudo => Backend::Pseudo,
                    SourceBackend::Rust => Backend::Rust,
                };
                emit_source(&c.automaton, &c.fused, b)
            } else {
                c.automaton.dump(&c.fused)
            };
            match output {
                Some(p) => std::fs::write(&p, text).with_context(|| p.display().to_string())?,
                None => write!(out, "{text}")?,
            }
        }
        Cmd::Run { grammar, input, backend, events } => {
            let c = compiled(&grammar)?;
            let input = read_input(input.as_deref())?;
            let o: ParseOutcome = match backend {
                RunBackend::Interp => fparse_interp(&c.fused, &input, events),
                RunBackend::Auto if events => c.automaton.run_with_events(&input),
                RunBackend::Auto => fuselex::engine::run_automaton(&c.automaton, &input),
                RunBackend::Unfused if events => bail!("--events needs the interp or auto backend"),
                RunBackend::Unfused => c.unfused.parse(&input),
            };
            for e in o.events.iter().flatten() {
                writeln!(out, "event {} {} {}..{}", c.fused.name(e.nonterminal), e.production, e.start, e.end)?;
            }
            writeln!(out, "accepted: {}", o.accepted)?;
            writeln!(out, "consumed: {} of {}", o.consumed, input.len())?;
            if let Some(f) = o.failure {
                writeln!(out, "failure: offset {} in {}", f.offset, c.fused.name(f.nonterminal))?;
            } else if !o.complete(input.len()) {
                writeln!(out, "failure: offset {} (trailing input)", o.consumed)?;
            }
            if !o.complete(input.len()) {
                return Ok(PARSE_FAILURE);
            }
        }
        Cmd::Enumerate { grammar, max_len, side } => {
            let c = compiled(&grammar)?;
            let words: BTreeSet<Word> = match side {
                Side::Cfe => denote_enumerate(&c.cfe, &HashMap::new(), max_len),
                Side::Dgnf => c.normal.expand_enumerate(c.normal.start, max_len),
            };
            for w in &words {
                writeln!(out, "{}", word(w, &c.lexer.token_names))?;
            }
        }
        Cmd::Bench { corpus, dir, generate, sizes, runs } => {
            let Some(k) = Corpus::from_name(&corpus) else {
                bail!("unknown corpus `{corpus}` (expected sexp, csv or json)");
            };
            if let Some(dir) = generate {
                std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
                for mb in sizes {
                    let p = corpus_file(&dir, k, mb);
                    std::fs::write(&p, k.generate(mb << 20, mb as u64)).with_context(|| p.display().to_string())?;
                    eprintln!("wrote {}", p.display());
                }
                return Ok(0);
            }
            let c = Compiled::shipped(k.name());
            let mut rows = Vec::new();
            for mb in sizes {
                let p = corpus_file(&dir, k, mb);
                let doc = std::fs::read(&p).with_context(|| format!("{} (run bench --generate first)", p.display()))?;
                match bench::measure(&c, &Pipeline::ALL, &doc, runs) {
                    Ok(r) => rows.extend(r),
                    Err(e) => {
                        eprintln!("error: {}: {e}", p.display());
                        return Ok(PARSE_FAILURE);
                    }
                }
            }
            writeln!(out, "{CSV_HEADER}")?;
            for r in rows {
                writeln!(out, "{}", r.csv())?;
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    // usage errors share the grammar-error code; 2 means the input was rejected
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { GRAMMAR_ERROR } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli.cmd)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(GRAMMAR_ERROR)
        }
        Err(_) => ExitCode::from(INTERNAL),
    }
}
