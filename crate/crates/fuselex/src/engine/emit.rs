use std::fmt::Write as _;

use crate::fusion::FusedGrammar;
use crate::regex::ByteSet;

use super::automaton::{Action, CompiledAutomaton, Exit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    /// ML-flavoured pseudocode, for reading.
    #[default]
    Pseudo,
    /// A self-contained Rust module exposing `parse(&[u8]) -> Result<usize, usize>`.
    Rust,
}

/// One function per state. Bytes with the same behaviour share a range arm,
/// and a NUL arm checks the length to tell a real NUL from end of input.
pub fn emit_source(a: &CompiledAutomaton, f: &FusedGrammar, backend: Backend) -> String {
    match backend {
        Backend::Pseudo => pseudo(a, f),
        Backend::Rust => rust(a),
    }
}

struct Arms {
    nul: Action,
    arms: Vec<(Vec<(u8, u8)>, Action)>,
    default: Action,
}

// NUL is split out; the largest remaining class (exhausting ones first)
// becomes the default arm.
fn arms(a: &CompiledAutomaton, s: usize) -> Arms {
    let st = &a.states[s];
    let nul = st.actions[st.classes.class_of(0)];
    let not_nul = ByteSet::singleton(0).complement();
    let mut arms: Vec<(ByteSet, Action)> = st
        .classes
        .classes()
        .iter()
        .zip(&st.actions)
        .map(|(c, act)| (c.intersect(&not_nul), *act))
        .filter(|(c, _)| !c.is_empty())
        .collect();
    let default = (0..arms.len()).max_by_key(|&i| (arms[i].1 == Action::Exhaust, arms[i].0.len(), std::cmp::Reverse(i)));
    let default = match default {
        Some(i) => arms.remove(i).1,
        None => Action::Exhaust,
    };
    arms.sort_by_key(|(c, _)| c.min());
    Arms { nul, arms: arms.into_iter().map(|(c, act)| (c.ranges(), act)).collect(), default }
}

fn ml_char(b: u8) -> String {
    match b {
        b'\'' => "'\\''".into(),
        b'\\' => "'\\\\'".into(),
        b'\n' => "'\\n'".into(),
        b'\t' => "'\\t'".into(),
        b'\r' => "'\\r'".into(),
        0x20..=0x7e => format!("'{}'", b as char),
        _ => format!("'\\{b:03}'"),
    }
}

fn rust_byte(b: u8) -> String {
    match b {
        b'\'' => "b'\\''".into(),
        b'\\' => "b'\\\\'".into(),
        0x21..=0x7e => format!("b'{}'", b as char),
        _ => format!("0x{b:02x}"),
    }
}

fn pseudo(a: &CompiledAutomaton, f: &FusedGrammar) -> String {
    let exit = |s: u32| -> String {
        match a.states[s as usize].exit {
            Exit::Fail => "fail r".into(),
            Exit::Back => "r".into(),
            Exit::Push(p) => {
                let names: Vec<&str> = a.tail(p).map(|e| f.name(a.states[e as usize].nt)).collect();
                format!("t [{}] b", names.join("; "))
            }
        }
    };
    let step = |s: u32, act: Action| -> String {
        match act {
            Action::Goto(t) => format!("parse_{t} r (i + 1) b len s"),
            Action::Commit(t) => format!("parse_{t} r (i + 1) (i + 1) len s"),
            Action::Exhaust => exit(s),
        }
    };
    let mut out = String::new();
    for (n, e) in &a.entry {
        let _ = writeln!(out, "(* {}: parse_{e} *)", f.name(*n));
    }
    for s in 0..a.states.len() {
        let id = s as u32;
        let Arms { nul, arms, default } = arms(a, s);
        let kw = if s == 0 { "let rec" } else { "and" };
        let _ = writeln!(out, "{kw} parse_{s} r i b len s = match s.[i] with");
        for (ranges, act) in arms {
            let pats: Vec<String> = ranges
                .iter()
                .map(|&(lo, hi)| if lo == hi { ml_char(lo) } else { format!("{}..{}", ml_char(lo), ml_char(hi)) })
                .collect();
            let _ = writeln!(out, "  | {} -> {}", pats.join("|"), step(id, act));
        }
        let _ = writeln!(out, "  | '\\000' -> if i = len then {} else {}", exit(id), step(id, nul));
        let _ = writeln!(out, "  | _ -> {}", step(id, default));
    }
    out
}

fn rust(a: &CompiledAutomaton) -> String {
    let exit = |s: u32| -> String {
        let code = match a.states[s as usize].exit {
            Exit::Fail => 0,
            Exit::Back => 1,
            Exit::Push(p) => p + 2,
        };
        format!("({code}, b)")
    };
    let step = |s: u32, act: Action| -> String {
        match act {
            Action::Goto(t) => format!("s{t}(s, i + 1, b)"),
            Action::Commit(t) => format!("s{t}(s, i + 1, i + 1)"),
            Action::Exhaust => exit(s),
        }
    };
    let mut out = String::new();
    out.push_str("// Generated parser: returns the bytes consumed, or the offset of the failing scan.\n\n");
    let mut tails = Vec::new();
    let mut p = 0;
    while a.states.iter().any(|s| s.exit == Exit::Push(p)) {
        let t: Vec<String> = a.tail(p).collect::<Vec<_>>().iter().rev().map(u32::to_string).collect();
        tails.push(format!("&[{}]", t.join(", ")));
        p += 1;
    }
    let _ = writeln!(out, "const TAILS: &[&[u32]] = &[{}];\n", tails.join(", "));
    out.push_str("pub fn parse(s: &[u8]) -> Result<usize, usize> {\n");
    let _ = writeln!(out, "    let mut stack: Vec<u32> = vec![{}];", a.entry[&a.start]);
    out.push_str(
        "    let mut pos = 0;
    while let Some(e) = stack.pop() {
        let (exit, best) = enter(e, s, pos);
        match exit {
            0 => return Err(pos),
            1 => {}
            p => {
                pos = best;
                stack.extend_from_slice(TAILS[p as usize - 2]);
            }
        }
    }
    Ok(pos)
}

fn enter(e: u32, s: &[u8], i: usize) -> (u32, usize) {
    match e {
",
    );
    for e in a.entry.values() {
        let _ = writeln!(out, "        {e} => s{e}(s, i, i),");
    }
    out.push_str("        _ => unreachable!(),\n    }\n}\n");
    for s in 0..a.states.len() {
        let id = s as u32;
        let Arms { nul, arms, default } = arms(a, s);
        let _ = writeln!(out, "\nfn s{s}(s: &[u8], i: usize, b: usize) -> (u32, usize) {{");
        out.push_str("    match s.get(i).copied().unwrap_or(0) {\n");
        let _ = writeln!(out, "        0 if i == s.len() => {},", exit(id));
        if nul != default {
            let _ = writeln!(out, "        0 => {},", step(id, nul));
        }
        for (ranges, act) in arms {
            let pats: Vec<String> = ranges
                .iter()
                .map(|&(lo, hi)| if lo == hi { rust_byte(lo) } else { format!("{}..={}", rust_byte(lo), rust_byte(hi)) })
                .collect();
            let _ = writeln!(out, "        {} => {},", pats.join(" | "), step(id, act));
        }
        let _ = writeln!(out, "        _ => {},", step(id, default));
        out.push_str("    }\n}\n");
    }
    out
}
