//! Random valid inputs for the shipped grammars.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Corpus {
    Sexp,
    Csv,
    Json,
}

impl Corpus {
    pub const ALL: [Corpus; 3] = [Corpus::Sexp, Corpus::Csv, Corpus::Json];

    pub fn name(self) -> &'static str {
        match self {
            Corpus::Sexp => "sexp",
            Corpus::Csv => "csv",
            Corpus::Json => "json",
        }
    }

    pub fn from_name(name: &str) -> Option<Corpus> {
        Corpus::ALL.into_iter().find(|c| c.name() == name)
    }

    /// A valid document of roughly `target` bytes (at least a minimal one).
    pub fn generate(self, target: usize, seed: u64) -> Vec<u8> {
        let mut g = Gen { rng: StdRng::seed_from_u64(seed), out: Vec::with_capacity(target + 256) };
        match self {
            Corpus::Sexp => g.sexp_doc(target),
            Corpus::Csv => g.csv_doc(target),
            Corpus::Json => g.json_doc(target),
        }
        g.out
    }
}

struct Gen {
    rng: StdRng,
    out: Vec<u8>,
}

const MAX_DEPTH: usize = 6;

impl Gen {
    fn pick(&mut self, bytes: &[u8]) -> u8 {
        bytes[self.rng.gen_range(0..bytes.len())]
    }

    fn word(&mut self, alphabet: &[u8], min: usize, max: usize) {
        for _ in 0..self.rng.gen_range(min..=max) {
            let b = self.pick(alphabet);
            self.out.push(b);
        }
    }

    fn blank(&mut self, p: f64) {
        while self.rng.gen_bool(p) {
            let b = self.pick(b"  \n");
            self.out.push(b);
        }
    }

    fn sexp_doc(&mut self, target: usize) {
        self.out.push(b'(');
        while self.out.len() < target {
            self.blank(0.3);
            self.sexp(1);
            self.out.push(b' ');
        }
        self.out.push(b')');
    }

    fn sexp(&mut self, depth: usize) {
        if depth >= MAX_DEPTH || self.rng.gen_bool(0.6) {
            self.word(b"abcdefghijklmnopqrstuvwxyz", 1, 8);
            return;
        }
        self.out.push(b'(');
        for i in 0..self.rng.gen_range(0..5) {
            if i > 0 {
                self.out.push(b' ');
            }
            self.blank(0.2);
            self.sexp(depth + 1);
        }
        self.blank(0.2);
        self.out.push(b')');
    }

    fn csv_doc(&mut self, target: usize) {
        let cols = self.rng.gen_range(1..8);
        while self.out.len() < target {
            for c in 0..cols {
                if c > 0 {
                    self.out.push(b',');
                }
                match self.rng.gen_range(0..10) {
                    0 => {}
                    1..=2 => {
                        self.out.push(b'"');
                        for _ in 0..self.rng.gen_range(0..12) {
                            match self.rng.gen_range(0..12) {
                                0 => self.out.extend_from_slice(b"\"\""),
                                1 => self.out.extend_from_slice(b"\r\n"),
                                2 => self.out.push(b','),
                                _ => self.word(b"abc xyz019", 1, 1),
                            }
                        }
                        self.out.push(b'"');
                    }
                    _ => self.word(b"abcdefghijklmnopqrstuvwxyz0123456789 .-", 1, 12),
                }
            }
            self.out.extend_from_slice(b"\r\n");
        }
    }

    fn json_doc(&mut self, target: usize) {
        self.out.push(b'[');
        let mut first = true;
        while self.out.len() < target || first {
            if !first {
                self.out.push(b',');
            }
            first = false;
            self.ws();
            self.json_object(1);
            self.ws();
        }
        self.out.push(b']');
    }

    fn ws(&mut self) {
        while self.rng.gen_bool(0.2) {
            let b = self.pick(b" \t\n\r");
            self.out.push(b);
        }
    }

    fn json_value(&mut self, depth: usize) {
        let choice = if depth >= MAX_DEPTH { self.rng.gen_range(2..7) } else { self.rng.gen_range(0..9) };
        match choice {
            0 => self.json_object(depth + 1),
            1 => self.json_array(depth + 1),
            2 | 7 => self.json_string(),
            3 | 8 => self.json_number(),
            4 => self.out.extend_from_slice(b"true"),
            5 => self.out.extend_from_slice(b"false"),
            _ => self.out.extend_from_slice(b"null"),
        }
    }

    fn json_object(&mut self, depth: usize) {
        self.out.push(b'{');
        self.ws();
        for i in 0..self.rng.gen_range(0..5) {
            if i > 0 {
                self.out.push(b',');
                self.ws();
            }
            self.json_string();
            self.ws();
            self.out.push(b':');
            self.ws();
            self.json_value(depth);
            self.ws();
        }
        self.out.push(b'}');
    }

    fn json_array(&mut self, depth: usize) {
        self.out.push(b'[');
        self.ws();
        for i in 0..self.rng.gen_range(0..5) {
            if i > 0 {
                self.out.push(b',');
                self.ws();
            }
            self.json_value(depth);
            self.ws();
        }
        self.out.push(b']');
    }

    fn json_string(&mut self) {
        self.out.push(b'"');
        for _ in 0..self.rng.gen_range(0..12) {
            match self.rng.gen_range(0..20) {
                0 => {
                    let e = self.pick(b"\"\\/bfnrt");
                    self.out.extend_from_slice(&[b'\\', e]);
                }
                1 => {
                    self.out.extend_from_slice(b"\\u");
                    self.word(b"0123456789abcdefABCDEF", 4, 4);
                }
                _ => self.word(b"abcdefghijklmnopqrstuvwxyz ABC0123456789_-", 1, 1),
            }
        }
        self.out.push(b'"');
    }

    fn json_number(&mut self) {
        if self.rng.gen_bool(0.3) {
            self.out.push(b'-');
        }
        if self.rng.gen_bool(0.2) {
            self.out.push(b'0');
        } else {
            self.word(b"123456789", 1, 1);
            self.word(b"0123456789", 0, 6);
        }
        if self.rng.gen_bool(0.3) {
            self.out.push(b'.');
            self.word(b"0123456789", 1, 4);
        }
        if self.rng.gen_bool(0.2) {
            let e = self.pick(b"eE");
            self.out.push(e);
            if self.rng.gen_bool(0.5) {
                let s = self.pick(b"+-");
                self.out.push(s);
            }
            self.word(b"0123456789", 1, 3);
        }
    }
}
