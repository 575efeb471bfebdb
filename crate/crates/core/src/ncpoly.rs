//! Free words in `d` letters and noncommutative polynomials, evaluated on
//! matrix tuples.
//!
//! Letters are stored 0-based; `Display` prints them 1-based.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{identity, CMat, C64};
use crate::pick::RowTuple;

/// A word `i_1 i_2 … i_k`; the empty word is the unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    fn check(&self, d: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l >= d) {
            Some(&letter) => Err(Error::LetterOutOfRange { letter: letter + 1, d }),
            None => Ok(()),
        }
    }
}

// length first, then lexicographic
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        let parts: Vec<String> = self.0.iter().map(|l| format!("x{}", l + 1)).collect();
        write!(f, "{}", parts.join(""))
    }
}

/// `X^w = X_{i_1} ⋯ X_{i_k}`; the empty word gives `I_n`.
pub fn eval_word(w: &Word, x: &RowTuple) -> Result<CMat> {
    w.check(x.d())?;
    let mut out = identity(x.n());
    for &l in &w.0 {
        out *= &x.mats()[l];
    }
    Ok(out)
}

/// All words of length ≤ `max_len` over `d` letters, length-then-lex order.
pub fn words_up_to(d: usize, max_len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut level = vec![Word::empty()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(level.len() * d);
        for w in &level {
            for l in 0..d {
                let mut letters = w.0.clone();
                letters.push(l);
                next.push(Word(letters));
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

/// Evaluates `X^w` for every word of length ≤ L in [`words_up_to`] order,
/// reusing the value of each word's prefix: one multiplication per word.
pub struct WordEvaluator {
    words: Vec<Word>,
    values: Vec<CMat>,
}

impl WordEvaluator {
    pub fn new(x: &RowTuple, max_len: usize) -> Self {
        let d = x.d();
        let words = words_up_to(d, max_len);
        let mut values: Vec<CMat> = Vec::with_capacity(words.len());
        values.push(identity(x.n()));
        // level k occupies a contiguous run; word `parent·l` is pushed in lex order
        let mut level_start = 0usize;
        let mut level_size = 1usize;
        for _ in 0..max_len {
            let next_start = level_start + level_size;
            for parent in level_start..next_start {
                for l in 0..d {
                    let v = &values[parent] * &x.mats()[l];
                    values.push(v);
                }
            }
            level_start = next_start;
            level_size *= d;
        }
        debug_assert_eq!(values.len(), words.len());
        Self { words, values }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &CMat)> {
        self.words.iter().zip(self.values.iter())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// A noncommutative polynomial `Σ_w c_w x^w` in `d` letters.
#[derive(Debug, Clone, PartialEq)]
pub struct NcPoly {
    d: usize,
    terms: BTreeMap<Word, C64>,
}

impl NcPoly {
    pub fn zero(d: usize) -> Self {
        Self { d, terms: BTreeMap::new() }
    }

    pub fn constant(d: usize, c: C64) -> Self {
        Self::zero(d).with_term(Word::empty(), c).expect("empty word is always valid")
    }

    pub fn monomial(d: usize, w: Word, c: C64) -> Result<Self> {
        Self::zero(d).with_term(w, c)
    }

    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (Word, C64)>) -> Result<Self> {
        let mut p = Self::zero(d);
        for (w, c) in terms {
            p = p.with_term(w, c)?;
        }
        Ok(p)
    }

    /// Adds `c x^w`, dropping the term if the coefficient cancels to zero.
    pub fn with_term(mut self, w: Word, c: C64) -> Result<Self> {
        w.check(self.d)?;
        let entry = self.terms.entry(w).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        self.terms.retain(|_, v| *v != C64::new(0.0, 0.0));
        Ok(self)
    }

    pub fn letter_count(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Word::len).max()
    }

    pub fn add(&self, other: &NcPoly) -> Result<NcPoly> {
        self.same_alphabet(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out = out.with_term(w.clone(), *c)?;
        }
        Ok(out)
    }

    pub fn mul(&self, other: &NcPoly) -> Result<NcPoly> {
        self.same_alphabet(other)?;
        let mut out = NcPoly::zero(self.d);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out = out.with_term(u.concat(v), a * b)?;
            }
        }
        Ok(out)
    }

    fn same_alphabet(&self, other: &NcPoly) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch(format!(
                "polynomials over {} and {} letters",
                self.d, other.d
            )));
        }
        Ok(())
    }
}

/// `Σ_w c_w X^w` for square matrices of any size (the tuple need not be a row
/// contraction; dilation evaluates on the compressed `n²×n²` tuple).
pub fn eval_poly(p: &NcPoly, x: &RowTuple) -> Result<CMat> {
    let mut out = CMat::zeros(x.n(), x.n());
    for (w, c) in &p.terms {
        out += eval_word(w, x)? * *c;
    }
    Ok(out)
}
