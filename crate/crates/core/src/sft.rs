//! One-sided subshifts of finite type.
//!
//! A subshift of finite type (SFT) is the space of one-sided symbol
//! sequences admissible under a 0/1 transition matrix `A`, together with
//! the left shift. This module holds the symbolic model: admissibility,
//! cylinder enumeration, periodic orbits, and the connector words used to
//! splice admissible blocks together.
//!
//! Admission requires irreducibility (every symbol reaches every symbol),
//! not full mixing; aperiodicity is computed and reported as a flag.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the alphabet size; dense matrices throughout.
pub const MAX_ALPHABET: usize = 64;

/// Hard cap on dense cylinder enumeration depth.
pub const MAX_ENUM_DEPTH: usize = 16;

/// Rendering alphabet for words-as-strings (indices into this table).
const SYMBOL_CHARS: &[u8; 64] = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ+/";

/// A finite word over the alphabet. Consecutive symbols are admissible
/// under the transition matrix of the shift it was built against.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub(crate) Vec<u8>);

impl Word {
    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Render as a symbol string (one character per symbol, `0-9a-zA-Z+/`).
    pub fn to_symbol_string(&self) -> String {
        self.0
            .iter()
            .map(|&s| SYMBOL_CHARS[s as usize] as char)
            .collect()
    }

    /// Parse a symbol string produced by [`Word::to_symbol_string`].
    pub fn from_symbol_string(s: &str) -> Result<Word> {
        let mut out = Vec::with_capacity(s.len());
        for c in s.bytes() {
            match SYMBOL_CHARS.iter().position(|&x| x == c) {
                Some(i) => out.push(i as u8),
                None => return Err(Error::InadmissibleWord),
            }
        }
        Ok(Word(out))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_symbol_string())
    }
}

impl From<Vec<u8>> for Word {
    fn from(v: Vec<u8>) -> Self {
        Word(v)
    }
}

/// A periodic orbit of the shift, stored as the lexicographically least
/// rotation of its defining word. The word's cyclic closure is admissible
/// and its least period equals `word.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicOrbit {
    pub word: Word,
}

impl PeriodicOrbit {
    pub fn period(&self) -> usize {
        self.word.len()
    }

    /// The first `n` symbols of the infinite repetition.
    pub fn repeat_to(&self, n: usize) -> Vec<u8> {
        self.word.0.iter().copied().cycle().take(n).collect()
    }
}

/// Serialized form of [`Sft`]: `{"alphabet_size": p, "transitions": [[..]]}`.
#[derive(Serialize, Deserialize)]
struct SftRepr {
    alphabet_size: usize,
    transitions: Vec<Vec<u8>>,
}

/// An irreducible one-sided subshift of finite type.
///
/// Immutable after construction; all operations are pure.
#[derive(Debug, Clone)]
pub struct Sft {
    alphabet_size: usize,
    transitions: Vec<Vec<u8>>,
    aperiodic: bool,
}

impl Sft {
    /// Validate a 0/1 matrix and build the shift.
    ///
    /// Accepts iff the matrix is irreducible with no empty row or column;
    /// otherwise reports the failing index or pair.
    pub fn validate(transitions: Vec<Vec<u8>>) -> Result<Arc<Sft>> {
        let p = transitions.len();
        if !(2..=MAX_ALPHABET).contains(&p) {
            return Err(Error::AlphabetSize(p, MAX_ALPHABET));
        }
        for (i, row) in transitions.iter().enumerate() {
            if row.len() != p {
                return Err(Error::AlphabetSize(row.len(), p));
            }
            for (j, &e) in row.iter().enumerate() {
                if e > 1 {
                    return Err(Error::NonBinaryEntry(i, j));
                }
            }
        }
        for i in 0..p {
            if transitions[i].iter().all(|&e| e == 0) {
                return Err(Error::EmptyRowOrColumn(i));
            }
            if (0..p).all(|k| transitions[k][i] == 0) {
                return Err(Error::EmptyRowOrColumn(i));
            }
        }
        // Irreducibility: reachability closure from each symbol.
        for i in 0..p {
            let reach = reachable_from(&transitions, i);
            if let Some(j) = (0..p).find(|&j| !reach[j]) {
                return Err(Error::ReducibleMatrix(i, j));
            }
        }
        let aperiodic = is_aperiodic(&transitions);
        Ok(Arc::new(Sft {
            alphabet_size: p,
            transitions,
            aperiodic,
        }))
    }

    /// Full shift on `p` symbols (all transitions allowed).
    pub fn full_shift(p: usize) -> Result<Arc<Sft>> {
        Sft::validate(vec![vec![1; p]; p])
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn transitions(&self) -> &[Vec<u8>] {
        &self.transitions
    }

    /// Whether the transition matrix is aperiodic (primitive). Reported,
    /// not required.
    pub fn is_aperiodic(&self) -> bool {
        self.aperiodic
    }

    pub fn allows(&self, a: u8, b: u8) -> bool {
        self.transitions[a as usize][b as usize] == 1
    }

    /// Scan a symbol sequence for admissibility.
    pub fn is_admissible(&self, symbols: &[u8]) -> bool {
        if symbols.iter().any(|&s| (s as usize) >= self.alphabet_size) {
            return false;
        }
        symbols.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    /// Build a [`Word`] after an admissibility scan.
    pub fn word(&self, symbols: Vec<u8>) -> Result<Word> {
        if self.is_admissible(&symbols) {
            Ok(Word(symbols))
        } else {
            Err(Error::InadmissibleWord)
        }
    }

    /// All admissible words of length `depth`, in lexicographic order.
    pub fn cylinders(&self, depth: usize) -> Result<Vec<Word>> {
        if depth == 0 || depth > MAX_ENUM_DEPTH {
            return Err(Error::DepthTooLarge(depth, MAX_ENUM_DEPTH));
        }
        let mut out = Vec::new();
        // Depth-first traversal in symbol order yields lexicographic output.
        self.enumerate_rec(&mut Vec::new(), depth, &mut out);
        Ok(out)
    }

    fn enumerate_rec(&self, prefix: &mut Vec<u8>, depth: usize, out: &mut Vec<Word>) {
        if prefix.len() == depth {
            out.push(Word(prefix.clone()));
            return;
        }
        for s in 0..self.alphabet_size as u8 {
            if prefix.last().map_or(true, |&last| self.allows(last, s)) {
                prefix.push(s);
                self.enumerate_rec(prefix, depth, out);
                prefix.pop();
            }
        }
    }

    /// Every periodic orbit of least period `<= max_period`, once each,
    /// as lexicographically minimal rotations, ordered by (period, word).
    pub fn periodic_orbits(&self, max_period: usize) -> Result<Vec<PeriodicOrbit>> {
        if max_period == 0 || max_period > MAX_ENUM_DEPTH {
            return Err(Error::DepthTooLarge(max_period, MAX_ENUM_DEPTH));
        }
        let mut out = Vec::new();
        for n in 1..=max_period {
            let mut word = Vec::with_capacity(n);
            self.necklace_rec(&mut word, n, &mut out);
        }
        Ok(out)
    }

    fn necklace_rec(&self, word: &mut Vec<u8>, n: usize, out: &mut Vec<PeriodicOrbit>) {
        if word.len() == n {
            if self.allows(word[n - 1], word[0])
                && least_period(word) == n
                && is_minimal_rotation(word)
            {
                out.push(PeriodicOrbit {
                    word: Word(word.clone()),
                });
            }
            return;
        }
        for s in 0..self.alphabet_size as u8 {
            if word.last().map_or(true, |&last| self.allows(last, s)) {
                word.push(s);
                self.necklace_rec(word, n, out);
                word.pop();
            }
        }
    }

    /// Shortest (possibly empty) word `u` with `a·u·b` admissible.
    /// Existence is guaranteed by irreducibility; `|u| <= p`.
    pub fn connector(&self, a: u8, b: u8) -> Word {
        debug_assert!((a as usize) < self.alphabet_size && (b as usize) < self.alphabet_size);
        if self.allows(a, b) {
            return Word(Vec::new());
        }
        // BFS over interior symbols from the successors of `a`.
        let p = self.alphabet_size;
        let mut prev = vec![usize::MAX; p];
        let mut queue = std::collections::VecDeque::new();
        for s in 0..p {
            if self.transitions[a as usize][s] == 1 {
                prev[s] = p; // sentinel: direct successor of a
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            if self.transitions[x][b as usize] == 1 {
                let mut path = vec![x as u8];
                let mut cur = x;
                while prev[cur] != p {
                    cur = prev[cur];
                    path.push(cur as u8);
                }
                path.reverse();
                return Word(path);
            }
            for s in 0..p {
                if self.transitions[x][s] == 1 && prev[s] == usize::MAX {
                    prev[s] = x;
                    queue.push_back(s);
                }
            }
        }
        unreachable!("irreducibility guarantees a connector exists");
    }

    pub fn to_json(&self) -> String {
        let repr = SftRepr {
            alphabet_size: self.alphabet_size,
            transitions: self.transitions.clone(),
        };
        serde_json::to_string(&repr).expect("serializing a matrix cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Arc<Sft>> {
        let repr: SftRepr = serde_json::from_str(s).map_err(|_| Error::InadmissibleWord)?;
        if repr.transitions.len() != repr.alphabet_size {
            return Err(Error::AlphabetSize(
                repr.transitions.len(),
                repr.alphabet_size,
            ));
        }
        Sft::validate(repr.transitions)
    }
}

/// Symbols reachable from `start` in one or more steps.
fn reachable_from(transitions: &[Vec<u8>], start: usize) -> Vec<bool> {
    let p = transitions.len();
    let mut seen = vec![false; p];
    let mut stack: Vec<usize> = (0..p).filter(|&j| transitions[start][j] == 1).collect();
    for &j in &stack {
        seen[j] = true;
    }
    while let Some(x) = stack.pop() {
        for j in 0..p {
            if transitions[x][j] == 1 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Aperiodicity via the gcd of cycle-length differences along a BFS tree.
fn is_aperiodic(transitions: &[Vec<u8>]) -> bool {
    let p = transitions.len();
    let mut level = vec![usize::MAX; p];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut g = 0usize;
    while let Some(x) = queue.pop_front() {
        for j in 0..p {
            if transitions[x][j] == 1 {
                if level[j] == usize::MAX {
                    level[j] = level[x] + 1;
                    queue.push_back(j);
                } else {
                    let diff = (level[x] + 1).abs_diff(level[j]);
                    g = gcd(g, diff);
                }
            }
        }
    }
    g == 1
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn least_period(word: &[u8]) -> usize {
    let n = word.len();
    'outer: for d in 1..n {
        if n % d == 0 {
            for i in d..n {
                if word[i] != word[i - d] {
                    continue 'outer;
                }
            }
            return d;
        }
    }
    n
}

fn is_minimal_rotation(word: &[u8]) -> bool {
    let n = word.len();
    let doubled: Vec<u8> = word.iter().chain(word.iter()).copied().collect();
    (1..n).all(|r| word <= &doubled[r..r + n])
}
