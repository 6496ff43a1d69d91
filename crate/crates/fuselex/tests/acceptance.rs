//! One PASS/FAIL line per acceptance criterion. Pass criterion numbers as
//! arguments to run a subset.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fuselex::bench::{self, Pipeline};
use fuselex::cfe::{denote_enumerate, type_closed, Cfe, TypeErrorKind};
use fuselex::corpus::Corpus;
use fuselex::engine::{emit_source, Backend};
use fuselex::normalize::{classify_dgnf, normalize_literal, parse_dump, trim_unreachable, DgnfVerdict, Violation};
use fuselex::pipeline::Compiled;
use fuselex::regex::{class_partition, ByteSet, Regex};
use fuselex::TokenId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const SEXP_NORMAL: &str = "sexp -> LPAR sexps rpar
sexp -> ATOM
rpar -> RPAR
sexps -> LPAR sexps rpar sexps
sexps -> ATOM sexps
sexps -> <eps>
";

// literal normalization, unreachable productions removed; n3 duplicates sexps
const SEXP_LITERAL: &str = "sexp -> LPAR sexps rpar
sexp -> ATOM
sexps -> <eps>
sexps -> LPAR sexps rpar n3
sexps -> ATOM n3
n3 -> <eps>
n3 -> LPAR sexps rpar n3
n3 -> ATOM n3
rpar -> RPAR
";

const SEXP_FUSED: &str = r#"sexp -> [a-z]+
sexp -> "(" sexps rpar
sexp -> [\n ] sexp
sexps -> [a-z]+ sexps
sexps -> "(" sexps rpar sexps
sexps -> [\n ] sexps
sexps -> ?! ([\n (] | [a-z]+)
rpar -> ")"
rpar -> [\n ] rpar
"#;

fn criterion_1() -> Result<String, String> {
    let c = Compiled::shipped("sexp");
    let names = &c.lexer.token_names;
    let tok = |n: &str| Cfe::tok(c.lexer.token_id(n).unwrap());
    let sexps = Cfe::fix("sexps", Cfe::alt(Cfe::Eps, Cfe::seq(Cfe::var("sexp"), Cfe::var("sexps"))));
    let sexp_cfe = Cfe::fix("sexp", Cfe::alt(Cfe::seq(Cfe::seq(tok("LPAR"), sexps), tok("RPAR")), tok("ATOM")));
    ensure!(c.cfe.alpha_eq(&sexp_cfe), "grammar file does not lower to the sexp expression");
    let counts = (c.normal.nonterminal_count(), c.normal.production_count());
    ensure!(counts == (3, 6), "trimmed counts {counts:?}");
    let sexp_normal = parse_dump(SEXP_NORMAL, names).map_err(|e| e.to_string())?;
    ensure!(c.normal.isomorphic(&sexp_normal), "not the expected shape:\n{}", c.normal.dump(names));
    let raw = normalize_literal(&c.cfe).map_err(|e| e.to_string())?;
    let reachable = trim_unreachable(&raw);
    let literal = parse_dump(SEXP_LITERAL, names).map_err(|e| e.to_string())?;
    ensure!(reachable.isomorphic(&literal), "literal mode differs:\n{}", reachable.dump(names));
    ensure!(raw.nonterminal_count() > reachable.nonterminal_count(), "untrimmed output has no unreachable rules");
    Ok(format!(
        "3 nonterminals / 6 productions; untrimmed literal output has {} nonterminals, its reachable part is the 4-nonterminal derivation",
        raw.nonterminal_count()
    ))
}

/// Renames nonterminals in order of first appearance.
fn canonical_names(dump: &str) -> String {
    let heads: Vec<&str> = dump.lines().filter_map(|l| l.split(" -> ").next()).collect();
    let mut order: Vec<&str> = Vec::new();
    for h in &heads {
        if !order.contains(h) {
            order.push(h);
        }
    }
    dump.lines()
        .map(|l| {
            l.split(' ')
                .map(|w| match order.iter().position(|n| n == &w) {
                    Some(i) => format!("N{i}"),
                    None => w.to_string(),
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_2() -> Result<String, String> {
    let c = Compiled::shipped("sexp");
    let dump = c.fused.dump();
    ensure!(c.fused.production_count() == 9, "{} fused productions", c.fused.production_count());
    ensure!(canonical_names(&dump) == canonical_names(SEXP_FUSED), "fused grammar differs:\n{dump}");
    Ok("9 fused productions, sexps has ?! ([\\n (] | [a-z]+)".into())
}

fn criterion_3() -> Result<String, String> {
    let toks: Vec<String> = ["A", "B", "C", "E"].iter().map(|s| s.to_string()).collect();
    let grammars = [
        "n -> A n1 n2\nn -> B\nn1 -> C\nn2 -> E\n",
        "n -> A B n1\nn1 -> C\n",
        "n -> A n1\nn -> A n2\nn1 -> C\nn2 -> E\n",
        "n -> A n1 n2\nn1 -> C\nn1 -> <eps>\nn2 -> C\n",
    ];
    let v: Vec<DgnfVerdict> =
        grammars.iter().map(|g| classify_dgnf(g, &toks)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    ensure!(v[0] == DgnfVerdict::Ok, "(1) {:?}", v[0]);
    ensure!(matches!(v[1], DgnfVerdict::ShapeInvalid(_)), "(2) {:?}", v[1]);
    ensure!(
        matches!(&v[2], DgnfVerdict::Violations(x) if matches!(x[..], [Violation::Determinism { .. }])),
        "(3) {:?}",
        v[2]
    );
    ensure!(
        matches!(&v[3], DgnfVerdict::Violations(x) if matches!(x[..], [Violation::GuardedEpsilon { .. }])),
        "(4) {:?}",
        v[3]
    );
    Ok("ok / shape-invalid / determinism / guarded-epsilon".into())
}

fn criterion_4() -> Result<String, String> {
    let mut sizes = Vec::new();
    for corpus in Corpus::ALL {
        let c = Compiled::shipped(corpus.name());
        let normal = c.normal.expand_enumerate(c.normal.start, 8);
        let denoted: BTreeSet<Vec<TokenId>> = denote_enumerate(&c.cfe, &HashMap::new(), 8).into_iter().collect();
        ensure!(normal == denoted, "{}: {} vs {} words", corpus.name(), normal.len(), denoted.len());
        sizes.push(format!("{} {}", corpus.name(), normal.len()));
    }
    Ok(format!("equal word sets up to 8 tokens ({})", sizes.join(", ")))
}

fn criterion_5() -> Result<String, String> {
    let mut notes = Vec::new();
    for corpus in Corpus::ALL {
        let c = Compiled::shipped(corpus.name());
        let mut e = common::Explorer::new(&c, 10);
        e.run();
        if let Some((input, v)) = e.discrepancies.first() {
            return Err(format!("{}: {:?} gives {v:?}", corpus.name(), String::from_utf8_lossy(input)));
        }
        for input in common::random_inputs(&c, corpus, 10_000, 5) {
            let v = common::verdicts(&c, &input);
            ensure!(common::agree(&v), "{}: {:?} gives {v:?}", corpus.name(), String::from_utf8_lossy(&input));
        }
        for input in common::valid_inputs(corpus, 1_000, 6) {
            let v = common::verdicts(&c, &input);
            ensure!(v.iter().all(|&x| x == (true, input.len())), "{}: valid input rejected: {v:?}", corpus.name());
        }
        notes.push(format!("{} {} prefixes", corpus.name(), e.runs));
    }
    Ok(format!("no discrepancies ({}; plus 10000 random and 1000 valid each)", notes.join(", ")))
}

fn criterion_6() -> Result<String, String> {
    let a = TokenId(0);
    let alt = type_closed(&Cfe::alt(Cfe::tok(a), Cfe::tok(a))).map(|_| ()).map_err(|e| e.kind);
    ensure!(matches!(alt, Err(TypeErrorKind::ApartnessViolation { .. })), "A | A: {alt:?}");
    let left = type_closed(&Cfe::fix("x", Cfe::seq(Cfe::var("x"), Cfe::tok(a)))).map(|_| ()).map_err(|e| e.kind);
    ensure!(matches!(left, Err(TypeErrorKind::GuardedVarUse { .. })), "left recursion: {left:?}");
    let seq = type_closed(&Cfe::seq(Cfe::Eps, Cfe::tok(a))).map(|_| ()).map_err(|e| e.kind);
    ensure!(
        matches!(seq, Err(TypeErrorKind::SeparabilityViolation { nullable_left: true, .. })),
        "nullable left: {seq:?}"
    );
    Ok("apartness / guarded variable / separability".into())
}

const MB: usize = 1 << 20;

fn criterion_7() -> Result<String, String> {
    let c = Compiled::shipped("sexp");
    let doc = Corpus::Sexp.generate(4 * MB, 7);
    let rows = bench::measure(&c, &[Pipeline::Unfused, Pipeline::Auto], &doc, 7).map_err(|e| e.to_string())?;
    let (unfused, auto) = (rows[0].mbps(), rows[1].mbps());
    let ratio = auto / unfused;
    ensure!(ratio >= 1.5, "auto {auto:.1} MB/s vs unfused {unfused:.1} MB/s, ratio {ratio:.2}");
    Ok(format!("auto {auto:.1} MB/s, unfused {unfused:.1} MB/s, ratio {ratio:.2}"))
}

/// Fastest of `rounds` parses per input, taking the inputs in turn each
/// round so that a slow spell hits every size alike.
fn fastest(c: &Compiled, p: Pipeline, docs: &[Vec<u8>], rounds: usize) -> Result<Vec<f64>, String> {
    let mut best = vec![f64::INFINITY; docs.len()];
    let mut scratch = bench::Scratch::default();
    for _ in 0..rounds {
        for (k, d) in docs.iter().enumerate() {
            let t = Instant::now();
            let consumed = bench::parse_once(c, p, d, &mut scratch);
            best[k] = best[k].min(t.elapsed().as_secs_f64());
            ensure!(consumed == Some(d.len()), "{} rejected a generated document", p.name());
        }
    }
    Ok(best)
}

fn criterion_8() -> Result<String, String> {
    let mut worst: (f64, String) = (2.0, String::new());
    let mut bad = Vec::new();
    for corpus in [Corpus::Sexp, Corpus::Json] {
        let c = Compiled::shipped(corpus.name());
        let docs: Vec<Vec<u8>> = bench::SIZES_MB.iter().map(|&n| corpus.generate(n * MB, 8)).collect();
        for p in Pipeline::ALL {
            let times = fastest(&c, p, &docs, if p == Pipeline::Interp { 5 } else { 15 })?;
            if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
                eprintln!("{} {} {:?}", corpus.name(), p.name(), times);
            }
            for (k, w) in times.windows(2).enumerate() {
                let r = w[1] / w[0];
                let what = format!("{} {} {}->{} MB: {r:.2}", corpus.name(), p.name(), bench::SIZES_MB[k], bench::SIZES_MB[k + 1]);
                if !(1.7..=2.6).contains(&r) {
                    bad.push(what.clone());
                }
                if (r - 2.0).abs() > (worst.0 - 2.0).abs() {
                    worst = (r, what);
                }
            }
        }
    }
    ensure!(bad.is_empty(), "{}", bad.join("; "));
    Ok(format!("all doubling ratios in [1.7, 2.6]; furthest from 2 is {}", worst.1))
}

fn criterion_9() -> Result<String, String> {
    let c = Compiled::shipped("sexp");
    let src = emit_source(&c.automaton, &c.fused, Backend::Pseudo);
    let functions = src.lines().filter(|l| l.starts_with("let rec parse_") || l.starts_with("and parse_")).count();
    ensure!((6..=16).contains(&functions), "{functions} functions");
    let counts = (c.normal.nonterminal_count(), c.normal.production_count());
    ensure!(counts == (3, 6), "normalized counts {counts:?}");
    Ok(format!("{functions} functions, 3 nonterminals / 6 productions"))
}

fn criterion_10() -> Result<String, String> {
    let sigma = *b"abc";
    let words = common::words_over(&sigma, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..500 {
        let r = common::random_regex(&mut rng, 5, &sigma);
        for w in &words {
            ensure!(r.matches(w) == common::naive(&r, w), "{r} on {:?}", String::from_utf8_lossy(w));
        }
    }
    // partitions over the full byte range, with random classes
    let all: Vec<u8> = (0..=255).collect();
    for _ in 0..500 {
        let picks: Vec<u8> = (0..rng.gen_range(2..8)).map(|_| rng.gen()).collect();
        let rs: Vec<Regex> = (0..rng.gen_range(1..4))
            .map(|_| {
                let r = common::random_regex(&mut rng, 4, &picks);
                let lo = rng.gen();
                Regex::alt(r, Regex::class(ByteSet::range(lo, lo.saturating_add(rng.gen_range(0..64)))))
            })
            .collect();
        let p = class_partition(&rs);
        for &b in &all {
            let rep = ByteSet::min(&p.classes()[p.class_of(b)]).unwrap();
            for r in &rs {
                ensure!(r.deriv(b) == r.deriv(rep), "{r}: byte {b} vs {rep}");
            }
        }
    }
    Ok(format!("500 regexes x {} words, 500 partitions x 256 bytes", words.len()))
}

fn main() {
    let checks: [(&str, Check, Duration); 10] = [
        ("golden normalization", criterion_1, Duration::from_secs(1)),
        ("golden fusion", criterion_2, Duration::from_secs(1)),
        ("DGNF triage", criterion_3, Duration::from_secs(1)),
        ("soundness oracle", criterion_4, Duration::from_secs(60)),
        ("fused equivalence", criterion_5, Duration::from_secs(300)),
        ("type-system gate", criterion_6, Duration::from_secs(1)),
        ("performance floor", criterion_7, Duration::from_secs(300)),
        ("linearity", criterion_8, Duration::from_secs(300)),
        ("code size", criterion_9, Duration::from_secs(1)),
        ("regex properties", criterion_10, Duration::from_secs(120)),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check, budget)) in checks.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = t.elapsed();
        let result = result.and_then(|d| {
            if took > *budget {
                Err(format!("{d}; took {took:.1?}, over the {budget:?} budget"))
            } else {
                Ok(d)
            }
        });
        match result {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail} [{:.2}s]", took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {why} [{:.2}s]", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
