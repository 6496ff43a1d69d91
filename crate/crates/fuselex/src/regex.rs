//! Extended regular expressions over bytes.
//!
//! Values are built only through the smart constructors on [`Regex`], which
//! keep every term in a canonical form (associativity, commutativity and
//! idempotence of `|` and `&`, unit and annihilator laws). Two regexes that
//! are similar in that sense compare equal, which is what keeps the set of
//! derivatives of a regex finite.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

/// Exploration cap for derivative closures.
pub const CLOSURE_LIMIT: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegexError {
    #[error("derivative closure exceeded {limit} states")]
    ClosureLimit { limit: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("regex syntax error at byte {offset}: {message}")]
pub struct RegexSyntaxError {
    pub offset: usize,
    pub message: String,
}

/// A set of byte values, stored as a 256-bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ByteSet([u64; 4]);

impl ByteSet {
    pub const EMPTY: ByteSet = ByteSet([0; 4]);
    pub const FULL: ByteSet = ByteSet([u64::MAX; 4]);

    pub fn singleton(b: u8) -> ByteSet {
        let mut s = ByteSet::EMPTY;
        s.insert(b);
        s
    }

    pub fn range(lo: u8, hi: u8) -> ByteSet {
        let mut s = ByteSet::EMPTY;
        for b in lo..=hi {
            s.insert(b);
        }
        s
    }

    pub fn from_bytes(bytes: &[u8]) -> ByteSet {
        let mut s = ByteSet::EMPTY;
        for &b in bytes {
            s.insert(b);
        }
        s
    }

    #[inline]
    pub fn contains(&self, b: u8) -> bool {
        self.0[(b >> 6) as usize] & (1u64 << (b & 63)) != 0
    }

    #[inline]
    pub fn insert(&mut self, b: u8) {
        self.0[(b >> 6) as usize] |= 1u64 << (b & 63);
    }

    pub fn union(&self, o: &ByteSet) -> ByteSet {
        let mut r = *self;
        for i in 0..4 {
            r.0[i] |= o.0[i];
        }
        r
    }

    pub fn intersect(&self, o: &ByteSet) -> ByteSet {
        let mut r = *self;
        for i in 0..4 {
            r.0[i] &= o.0[i];
        }
        r
    }

    pub fn complement(&self) -> ByteSet {
        ByteSet([!self.0[0], !self.0[1], !self.0[2], !self.0[3]])
    }

    pub fn is_empty(&self) -> bool {
        self.0 == [0; 4]
    }

    pub fn is_full(&self) -> bool {
        self.0 == [u64::MAX; 4]
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn min(&self) -> Option<u8> {
        self.iter().next()
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=255u8).filter(move |&b| self.contains(b))
    }

    /// Maximal runs of consecutive members, ascending.
    pub fn ranges(&self) -> Vec<(u8, u8)> {
        let mut out = Vec::new();
        let mut start: Option<u8> = None;
        for b in 0..=255u8 {
            match (self.contains(b), start) {
                (true, None) => start = Some(b),
                (false, Some(s)) => {
                    out.push((s, b - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, 255));
        }
        out
    }
}

impl fmt::Debug for ByteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        write_class_body(f, self)?;
        write!(f, "]")
    }
}

/// A canonical extended regex. Cloning is a reference-count bump.
#[derive(Clone)]
pub struct Regex(Arc<Inner>);

struct Inner {
    kind: RegexKind,
    nullable: bool,
    hash: u64,
}

/// The shape of a canonical regex. `Alt` and `And` are n-ary, sorted and
/// deduplicated; `Seq` is right-nested.
#[derive(Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegexKind {
    Bot,
    Eps,
    Class(ByteSet),
    Seq(Regex, Regex),
    Alt(Vec<Regex>),
    Star(Regex),
    And(Vec<Regex>),
    Not(Regex),
}

impl PartialEq for Regex {
    fn eq(&self, other: &Regex) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Regex {}

impl Hash for Regex {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialOrd for Regex {
    fn partial_cmp(&self, other: &Regex) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Regex {
    fn cmp(&self, other: &Regex) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.kind.cmp(&other.0.kind)
    }
}

impl fmt::Debug for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Regex {
    fn mk(kind: RegexKind) -> Regex {
        let nullable = match &kind {
            RegexKind::Bot | RegexKind::Class(_) => false,
            RegexKind::Eps | RegexKind::Star(_) => true,
            RegexKind::Seq(a, b) => a.nullable() && b.nullable(),
            RegexKind::Alt(v) => v.iter().any(|r| r.nullable()),
            RegexKind::And(v) => v.iter().all(|r| r.nullable()),
            RegexKind::Not(r) => !r.nullable(),
        };
        let mut h = DefaultHasher::new();
        kind.hash(&mut h);
        Regex(Arc::new(Inner { kind, nullable, hash: h.finish() }))
    }

    pub fn kind(&self) -> &RegexKind {
        &self.0.kind
    }

    pub fn bot() -> Regex {
        Regex::mk(RegexKind::Bot)
    }

    pub fn eps() -> Regex {
        Regex::mk(RegexKind::Eps)
    }

    /// The language of all strings, `!⊥`.
    pub fn top() -> Regex {
        Regex::mk(RegexKind::Not(Regex::bot()))
    }

    pub fn class(s: ByteSet) -> Regex {
        if s.is_empty() {
            Regex::bot()
        } else {
            Regex::mk(RegexKind::Class(s))
        }
    }

    pub fn byte(b: u8) -> Regex {
        Regex::class(ByteSet::singleton(b))
    }

    pub fn literal(bytes: &[u8]) -> Regex {
        bytes.iter().rev().fold(Regex::eps(), |acc, &b| Regex::seq(Regex::byte(b), acc))
    }

    pub fn is_bot(&self) -> bool {
        matches!(self.kind(), RegexKind::Bot)
    }

    pub fn is_eps(&self) -> bool {
        matches!(self.kind(), RegexKind::Eps)
    }

    pub fn is_top(&self) -> bool {
        matches!(self.kind(), RegexKind::Not(r) if r.is_bot())
    }

    pub fn seq(a: Regex, b: Regex) -> Regex {
        match (a.kind(), b.kind()) {
            (RegexKind::Bot, _) | (_, RegexKind::Bot) => Regex::bot(),
            (RegexKind::Eps, _) => b,
            (_, RegexKind::Eps) => a,
            (RegexKind::Seq(x, y), _) => Regex::seq(x.clone(), Regex::seq(y.clone(), b)),
            _ => Regex::mk(RegexKind::Seq(a, b)),
        }
    }

    pub fn alt(a: Regex, b: Regex) -> Regex {
        Regex::alt_all([a, b])
    }

    pub fn alt_all<I: IntoIterator<Item = Regex>>(items: I) -> Regex {
        let mut out: Vec<Regex> = Vec::new();
        let mut chars: Option<ByteSet> = None;
        let mut stack: Vec<Regex> = items.into_iter().collect();
        while let Some(r) = stack.pop() {
            match r.kind() {
                RegexKind::Bot => {}
                RegexKind::Alt(v) => stack.extend(v.iter().cloned()),
                RegexKind::Class(s) => chars = Some(chars.unwrap_or_default().union(s)),
                _ if r.is_top() => return r,
                _ => out.push(r),
            }
        }
        if let Some(s) = chars {
            out.push(Regex::class(s));
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => Regex::bot(),
            1 => out.pop().unwrap(),
            _ => Regex::mk(RegexKind::Alt(out)),
        }
    }

    pub fn and(a: Regex, b: Regex) -> Regex {
        Regex::and_all([a, b])
    }

    pub fn and_all<I: IntoIterator<Item = Regex>>(items: I) -> Regex {
        let mut out: Vec<Regex> = Vec::new();
        let mut chars: Option<ByteSet> = None;
        let mut stack: Vec<Regex> = items.into_iter().collect();
        while let Some(r) = stack.pop() {
            match r.kind() {
                RegexKind::Bot => return r,
                RegexKind::And(v) => stack.extend(v.iter().cloned()),
                RegexKind::Class(s) => {
                    let s = chars.map_or(*s, |c| c.intersect(s));
                    if s.is_empty() {
                        return Regex::bot();
                    }
                    chars = Some(s);
                }
                _ if r.is_top() => {}
                _ => out.push(r),
            }
        }
        if let Some(s) = chars {
            out.push(Regex::class(s));
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => Regex::top(),
            1 => out.pop().unwrap(),
            _ => Regex::mk(RegexKind::And(out)),
        }
    }

    pub fn star(r: Regex) -> Regex {
        match r.kind() {
            RegexKind::Star(_) => r,
            RegexKind::Bot | RegexKind::Eps => Regex::eps(),
            RegexKind::Class(s) if s.is_full() => Regex::top(),
            _ if r.is_top() => r,
            _ => Regex::mk(RegexKind::Star(r)),
        }
    }

    pub fn not(r: Regex) -> Regex {
        match r.kind() {
            RegexKind::Not(inner) => inner.clone(),
            _ => Regex::mk(RegexKind::Not(r)),
        }
    }

    /// `r+` as `r r*`.
    pub fn plus(r: Regex) -> Regex {
        Regex::seq(r.clone(), Regex::star(r))
    }

    /// `r?` as `ε | r`.
    pub fn opt(r: Regex) -> Regex {
        Regex::alt(Regex::eps(), r)
    }

    #[inline]
    pub fn nullable(&self) -> bool {
        self.0.nullable
    }

    /// Brzozowski derivative with respect to `c`.
    pub fn deriv(&self, c: u8) -> Regex {
        match self.kind() {
            RegexKind::Bot | RegexKind::Eps => Regex::bot(),
            RegexKind::Class(s) => {
                if s.contains(c) {
                    Regex::eps()
                } else {
                    Regex::bot()
                }
            }
            RegexKind::Seq(a, b) => {
                let d = Regex::seq(a.deriv(c), b.clone());
                if a.nullable() {
                    Regex::alt(d, b.deriv(c))
                } else {
                    d
                }
            }
            RegexKind::Alt(v) => Regex::alt_all(v.iter().map(|r| r.deriv(c))),
            RegexKind::And(v) => Regex::and_all(v.iter().map(|r| r.deriv(c))),
            RegexKind::Star(r) => Regex::seq(r.deriv(c), self.clone()),
            RegexKind::Not(r) => Regex::not(r.deriv(c)),
        }
    }

    /// Membership by folding derivatives over `w`.
    pub fn matches(&self, w: &[u8]) -> bool {
        let mut r = self.clone();
        for &c in w {
            if r.is_bot() {
                return false;
            }
            r = r.deriv(c);
        }
        r.nullable()
    }

    /// All distinct derivatives reachable from `self` (including itself).
    pub fn derivative_closure(&self, limit: usize) -> Result<Vec<Regex>, RegexError> {
        let mut seen: HashSet<Regex> = HashSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(self.clone());
        queue.push_back(self.clone());
        while let Some(r) = queue.pop_front() {
            order.push(r.clone());
            let part = class_partition(std::slice::from_ref(&r));
            for class in part.classes() {
                let d = r.deriv(class.min().unwrap());
                if seen.insert(d.clone()) {
                    if seen.len() > limit {
                        return Err(RegexError::ClosureLimit { limit });
                    }
                    queue.push_back(d);
                }
            }
        }
        Ok(order)
    }

    /// Whether the language is empty, decided over the derivative closure.
    pub fn is_empty_language(&self) -> Result<bool, RegexError> {
        if self.is_bot() {
            return Ok(true);
        }
        if self.nullable() {
            return Ok(false);
        }
        let mut seen: HashSet<Regex> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(self.clone());
        queue.push_back(self.clone());
        while let Some(r) = queue.pop_front() {
            let part = class_partition(std::slice::from_ref(&r));
            for class in part.classes() {
                let d = r.deriv(class.min().unwrap());
                if d.nullable() {
                    return Ok(false);
                }
                if !d.is_bot() && seen.insert(d.clone()) {
                    if seen.len() > CLOSURE_LIMIT {
                        return Err(RegexError::ClosureLimit { limit: CLOSURE_LIMIT });
                    }
                    queue.push_back(d);
                }
            }
        }
        Ok(true)
    }

    fn collect_splitters(&self, out: &mut Vec<ByteSet>) {
        match self.kind() {
            RegexKind::Bot | RegexKind::Eps => {}
            RegexKind::Class(s) => out.push(*s),
            RegexKind::Seq(a, b) => {
                a.collect_splitters(out);
                if a.nullable() {
                    b.collect_splitters(out);
                }
            }
            RegexKind::Alt(v) | RegexKind::And(v) => v.iter().for_each(|r| r.collect_splitters(out)),
            RegexKind::Star(r) | RegexKind::Not(r) => r.collect_splitters(out),
        }
    }
}

/// `is_empty_language` as a free function.
pub fn is_empty_language(r: &Regex) -> Result<bool, RegexError> {
    r.is_empty_language()
}

/// A partition of the 256 byte values into classes, numbered in order of
/// their smallest member.
#[derive(Clone, PartialEq, Eq)]
pub struct Partition {
    class_of: [u16; 256],
    classes: Vec<ByteSet>,
}

impl Partition {
    pub fn class_of(&self, b: u8) -> usize {
        self.class_of[b as usize] as usize
    }

    pub fn classes(&self) -> &[ByteSet] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Groups bytes by `label`.
    pub fn from_labels<K: Eq + Hash>(label: impl Fn(u8) -> K) -> Partition {
        from_labels(label)
    }

    /// Common refinement of two partitions.
    pub fn refine(&self, other: &Partition) -> Partition {
        from_labels(|b| (self.class_of(b), other.class_of(b)))
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.classes.iter()).finish()
    }
}

fn from_labels<K: Eq + Hash>(label: impl Fn(u8) -> K) -> Partition {
    let mut ids: HashMap<K, u16> = HashMap::new();
    let mut class_of = [0u16; 256];
    let mut classes: Vec<ByteSet> = Vec::new();
    for b in 0..=255u8 {
        let next = ids.len() as u16;
        let id = *ids.entry(label(b)).or_insert(next);
        if id as usize == classes.len() {
            classes.push(ByteSet::EMPTY);
        }
        classes[id as usize].insert(b);
        class_of[b as usize] = id;
    }
    Partition { class_of, classes }
}

/// Bytes that every regex in `rs` treats alike end up in the same class.
pub fn class_partition(rs: &[Regex]) -> Partition {
    let mut splitters = Vec::new();
    for r in rs {
        r.collect_splitters(&mut splitters);
    }
    splitters.sort();
    splitters.dedup();
    let mut labels = [0u32; 256];
    for s in &splitters {
        let mut remap: HashMap<(u32, bool), u32> = HashMap::new();
        for b in 0..=255u8 {
            let n = remap.len() as u32;
            labels[b as usize] = *remap.entry((labels[b as usize], s.contains(b))).or_insert(n);
        }
    }
    from_labels(|b| labels[b as usize])
}

// ---------------------------------------------------------------------------
// Concrete syntax

/// Parses a complete regex.
pub fn parse_regex(text: &str) -> Result<Regex, RegexSyntaxError> {
    let (r, used) = parse_regex_until(text, None)?;
    if used != text.len() {
        return Err(RegexSyntaxError { offset: used, message: "unexpected character".into() });
    }
    Ok(r)
}

/// Parses a regex prefix of `text`, stopping before a top-level `stop` byte.
/// Returns the regex and the offset where parsing stopped.
pub fn parse_regex_until(text: &str, stop: Option<u8>) -> Result<(Regex, usize), RegexSyntaxError> {
    let mut p = RegexParser { s: text.as_bytes(), pos: 0 };
    let r = p.alt()?;
    p.ws();
    if p.pos < p.s.len() && Some(p.s[p.pos]) != stop {
        return Err(p.err("unexpected character"));
    }
    Ok((r, p.pos))
}

struct RegexParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl RegexParser<'_> {
    fn err(&self, message: &str) -> RegexSyntaxError {
        RegexSyntaxError { offset: self.pos, message: message.to_string() }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn alt(&mut self) -> Result<Regex, RegexSyntaxError> {
        let mut r = self.and()?;
        loop {
            self.ws();
            if self.peek() != Some(b'|') {
                return Ok(r);
            }
            self.pos += 1;
            r = Regex::alt(r, self.and()?);
        }
    }

    fn and(&mut self) -> Result<Regex, RegexSyntaxError> {
        let mut r = self.seq()?;
        loop {
            self.ws();
            if self.peek() != Some(b'&') {
                return Ok(r);
            }
            self.pos += 1;
            r = Regex::and(r, self.seq()?);
        }
    }

    fn seq(&mut self) -> Result<Regex, RegexSyntaxError> {
        let mut items = Vec::new();
        loop {
            self.ws();
            match self.peek() {
                Some(b'(' | b'[' | b'"' | b'!') => items.push(self.not()?),
                _ => break,
            }
        }
        Ok(items.into_iter().rev().fold(Regex::eps(), |acc, r| Regex::seq(r, acc)))
    }

    fn not(&mut self) -> Result<Regex, RegexSyntaxError> {
        self.ws();
        if self.peek() == Some(b'!') {
            self.pos += 1;
            return Ok(Regex::not(self.not()?));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Regex, RegexSyntaxError> {
        let mut r = self.atom()?;
        loop {
            match self.peek() {
                Some(b'*') => r = Regex::star(r),
                Some(b'+') => r = Regex::plus(r),
                Some(b'?') => r = Regex::opt(r),
                _ => return Ok(r),
            }
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> Result<Regex, RegexSyntaxError> {
        self.ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let r = self.alt()?;
                self.ws();
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(r)
            }
            Some(b'[') => self.class(),
            Some(b'"') => self.literal(),
            _ => Err(self.err("expected an atom")),
        }
    }

    fn escape(&mut self) -> Result<u8, RegexSyntaxError> {
        // positioned after the backslash
        let c = self.peek().ok_or_else(|| self.err("unfinished escape"))?;
        self.pos += 1;
        Ok(match c {
            b'n' => b'\n',
            b't' => b'\t',
            b'r' => b'\r',
            b'x' => {
                let hex = self.s.get(self.pos..self.pos + 2).ok_or_else(|| self.err("short \\x escape"))?;
                let v = std::str::from_utf8(hex)
                    .ok()
                    .and_then(|h| u8::from_str_radix(h, 16).ok())
                    .ok_or_else(|| self.err("bad \\x escape"))?;
                self.pos += 2;
                v
            }
            b'\\' | b'"' | b']' | b'[' | b'-' | b'^' => c,
            _ => {
                self.pos -= 1;
                return Err(self.err("unknown escape"));
            }
        })
    }

    fn literal(&mut self) -> Result<Regex, RegexSyntaxError> {
        self.pos += 1;
        let mut bytes = Vec::new();
        loop {
            match self.peek() {
                None => return Err(self.err("unterminated literal")),
                Some(b'"') => {
                    self.pos += 1;
                    return Ok(Regex::literal(&bytes));
                }
                Some(b'\\') => {
                    self.pos += 1;
                    bytes.push(self.escape()?);
                }
                Some(c) => {
                    self.pos += 1;
                    bytes.push(c);
                }
            }
        }
    }

    fn class_byte(&mut self) -> Result<u8, RegexSyntaxError> {
        match self.peek() {
            None => Err(self.err("unterminated class")),
            Some(b'\\') => {
                self.pos += 1;
                self.escape()
            }
            Some(c) => {
                self.pos += 1;
                Ok(c)
            }
        }
    }

    fn class(&mut self) -> Result<Regex, RegexSyntaxError> {
        let open = self.pos;
        self.pos += 1;
        let negated = self.peek() == Some(b'^');
        if negated {
            self.pos += 1;
        }
        let mut set = ByteSet::EMPTY;
        let mut any = false;
        while self.peek() != Some(b']') {
            let lo = self.class_byte()?;
            let hi = if self.peek() == Some(b'-') && self.s.get(self.pos + 1) != Some(&b']') {
                self.pos += 1;
                self.class_byte()?
            } else {
                lo
            };
            if hi < lo {
                return Err(self.err("reversed range"));
            }
            set = set.union(&ByteSet::range(lo, hi));
            any = true;
        }
        self.pos += 1;
        if negated {
            set = set.complement();
        }
        if !any || set.is_empty() {
            return Err(RegexSyntaxError { offset: open, message: "empty character class".into() });
        }
        Ok(Regex::class(set))
    }
}

// ---------------------------------------------------------------------------
// Printing, in the same concrete syntax

fn write_byte_escaped(f: &mut fmt::Formatter<'_>, b: u8, in_class: bool) -> fmt::Result {
    match b {
        b'\n' => write!(f, "\\n"),
        b'\t' => write!(f, "\\t"),
        b'\r' => write!(f, "\\r"),
        b'\\' => write!(f, "\\\\"),
        b'"' if !in_class => write!(f, "\\\""),
        b']' | b'[' | b'-' | b'^' if in_class => write!(f, "\\{}", b as char),
        0x20..=0x7e => write!(f, "{}", b as char),
        _ => write!(f, "\\x{:02x}", b),
    }
}

fn write_class_body(f: &mut fmt::Formatter<'_>, s: &ByteSet) -> fmt::Result {
    for (lo, hi) in s.ranges() {
        write_byte_escaped(f, lo, true)?;
        if hi > lo {
            if hi > lo + 1 {
                write!(f, "-")?;
            }
            write_byte_escaped(f, hi, true)?;
        }
    }
    Ok(())
}

fn write_class(f: &mut fmt::Formatter<'_>, s: &ByteSet) -> fmt::Result {
    let comp = s.complement();
    if !comp.is_empty() && comp.ranges().len() < s.ranges().len() {
        write!(f, "[^")?;
        write_class_body(f, &comp)?;
    } else {
        write!(f, "[")?;
        write_class_body(f, s)?;
    }
    write!(f, "]")
}

fn singleton(r: &Regex) -> Option<u8> {
    match r.kind() {
        RegexKind::Class(s) if s.len() == 1 => s.min(),
        _ => None,
    }
}

impl Regex {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        let open = |f: &mut fmt::Formatter<'_>, needed: bool| if needed { write!(f, "(") } else { Ok(()) };
        let close = |f: &mut fmt::Formatter<'_>, needed: bool| if needed { write!(f, ")") } else { Ok(()) };
        match self.kind() {
            RegexKind::Bot => write!(f, "![\\x00-\\xff]*"),
            RegexKind::Eps => write!(f, "\"\""),
            _ if self.is_top() => write!(f, "[\\x00-\\xff]*"),
            RegexKind::Class(s) => match singleton(self) {
                Some(b) => {
                    write!(f, "\"")?;
                    write_byte_escaped(f, b, false)?;
                    write!(f, "\"")
                }
                None => write_class(f, s),
            },
            RegexKind::Alt(v) => {
                open(f, prec > 0)?;
                for (i, r) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    r.fmt_prec(f, 1)?;
                }
                close(f, prec > 0)
            }
            RegexKind::And(v) => {
                open(f, prec > 1)?;
                for (i, r) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    r.fmt_prec(f, 2)?;
                }
                close(f, prec > 1)
            }
            RegexKind::Seq(..) => {
                let mut items = Vec::new();
                let mut cur = self;
                while let RegexKind::Seq(a, b) = cur.kind() {
                    items.push(a);
                    cur = b;
                }
                items.push(cur);
                open(f, prec > 2)?;
                let mut i = 0;
                let mut first = true;
                while i < items.len() {
                    if !first {
                        write!(f, " ")?;
                    }
                    first = false;
                    if singleton(items[i]).is_some() && items.get(i + 1).and_then(|r| singleton(r)).is_some() {
                        write!(f, "\"")?;
                        while let Some(b) = items.get(i).and_then(|r| singleton(r)) {
                            write_byte_escaped(f, b, false)?;
                            i += 1;
                        }
                        write!(f, "\"")?;
                        continue;
                    }
                    let plus = matches!(items.get(i + 1).map(|r| r.kind()), Some(RegexKind::Star(x)) if x == items[i]);
                    if plus {
                        items[i].fmt_prec(f, 4)?;
                        write!(f, "+")?;
                        i += 2;
                    } else {
                        items[i].fmt_prec(f, 3)?;
                        i += 1;
                    }
                }
                close(f, prec > 2)
            }
            RegexKind::Not(r) => {
                open(f, prec > 3)?;
                write!(f, "!")?;
                r.fmt_prec(f, 3)?;
                close(f, prec > 3)
            }
            RegexKind::Star(r) => {
                r.fmt_prec(f, 4)?;
                write!(f, "*")
            }
        }
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cls(lo: u8, hi: u8) -> Regex {
        Regex::class(ByteSet::range(lo, hi))
    }

    #[test]
    fn nullable_examples() {
        assert!(Regex::eps().nullable());
        assert!(!Regex::seq(Regex::byte(b'a'), Regex::byte(b'b')).nullable());
        assert!(Regex::not(Regex::bot()).nullable());
    }

    #[test]
    fn deriv_examples() {
        let ab = Regex::seq(Regex::byte(b'a'), Regex::byte(b'b'));
        assert_eq!(ab.deriv(b'a'), Regex::byte(b'b'));
        assert_eq!(Regex::byte(b'a').deriv(b'b'), Regex::bot());
        let az = Regex::star(cls(b'a', b'z'));
        assert_eq!(az.deriv(b'q'), az);
    }

    #[test]
    fn emptiness_examples() {
        assert!(Regex::bot().is_empty_language().unwrap());
        assert!(Regex::and(Regex::byte(b'a'), Regex::byte(b'b')).is_empty_language().unwrap());
        assert!(!Regex::not(Regex::bot()).is_empty_language().unwrap());
        let kw = parse_regex("[a-z]+ & !\"if\"").unwrap();
        assert!(!kw.is_empty_language().unwrap());
        let none = parse_regex("\"if\" & ![a-z]+").unwrap();
        assert!(none.is_empty_language().unwrap());
    }

    #[test]
    fn canonical_laws() {
        let a = Regex::byte(b'a');
        let r = parse_regex("[a-z]+").unwrap();
        assert_eq!(Regex::seq(Regex::bot(), r.clone()), Regex::bot());
        assert_eq!(Regex::seq(Regex::eps(), r.clone()), r);
        assert_eq!(Regex::alt(r.clone(), r.clone()), r);
        assert_eq!(Regex::and(Regex::bot(), r.clone()), Regex::bot());
        assert_eq!(Regex::not(Regex::not(r.clone())), r);
        assert_eq!(Regex::star(Regex::star(a.clone())), Regex::star(a.clone()));
        assert_eq!(Regex::alt(r.clone(), a.clone()), Regex::alt(a, r));
    }

    #[test]
    fn partition_examples() {
        let p = class_partition(&[cls(b'a', b'z')]);
        assert_eq!(p.len(), 2);
        assert_eq!(class_partition(&[Regex::bot()]).len(), 1);
        let p = class_partition(&[cls(b'a', b'm'), cls(b'h', b'z')]);
        assert_eq!(p.len(), 4);
        assert_eq!(p.class_of(b'a'), p.class_of(b'g'));
        assert_ne!(p.class_of(b'g'), p.class_of(b'h'));
        assert_eq!(p.class_of(b'h'), p.class_of(b'm'));
        assert_ne!(p.class_of(b'm'), p.class_of(b'n'));
        assert_eq!(p.class_of(b'n'), p.class_of(b'z'));
        assert_eq!(p.class_of(0), p.class_of(b'{'));
    }

    #[test]
    fn parse_examples() {
        let az = cls(b'a', b'z');
        assert_eq!(parse_regex("[a-z]+").unwrap(), Regex::seq(az.clone(), Regex::star(az)));
        assert_eq!(parse_regex("\"(\"").unwrap(), Regex::byte(b'('));
        assert_eq!(parse_regex("(\" \"|\"\\n\")").unwrap(), Regex::class(ByteSet::from_bytes(b" \n")));
        assert!(parse_regex("[]").is_err());
        assert!(parse_regex("[^\\x00-\\xff]").is_err());
        assert_eq!(parse_regex("\"ab").unwrap_err().offset, 3);
    }

    #[test]
    fn precedence() {
        let a = Regex::byte(b'a');
        let b = Regex::byte(b'b');
        assert_eq!(parse_regex("!\"a\"*").unwrap(), Regex::not(Regex::star(a.clone())));
        assert_eq!(parse_regex("!\"a\" \"b\"").unwrap(), Regex::seq(Regex::not(a.clone()), b.clone()));
        let c = Regex::byte(b'c');
        assert_eq!(
            parse_regex("\"a\" \"b\" & \"c\" | \"a\"").unwrap(),
            Regex::alt(Regex::and(Regex::seq(a.clone(), b), c), a)
        );
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "[a-z]+",
            "\"(\" | [\\n ]",
            "!([a-z]+ | \"(\")",
            "\"if\" \"x\"* & ![0-9]",
            "[^,\"\\r\\n]+",
            "\"\\\"\" ([^\"] | \"\\\"\\\"\")* \"\\\"\"",
        ] {
            let r = parse_regex(text).unwrap();
            assert_eq!(parse_regex(&r.to_string()).unwrap(), r, "{text} printed as {r}");
        }
        assert_eq!(parse_regex(&Regex::bot().to_string()).unwrap(), Regex::bot());
        assert_eq!(parse_regex(&Regex::top().to_string()).unwrap(), Regex::top());
    }
}
