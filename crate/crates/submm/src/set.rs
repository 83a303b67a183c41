//! Ground sets and subsets stored as packed bit masks.
//!
//! Elements are indexed `0..n-1` internally. Serialized output and `Display`
//! use 1-based ids; conversion happens only at that boundary.

use std::fmt;

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};

const WORD: usize = 64;

/// The finite ground set `{0, .., n-1}` an instance is defined over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundSet {
    n: usize,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("ground set must have at least one element"));
        }
        Ok(GroundSet { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    pub fn empty(&self) -> SubsetMask {
        SubsetMask::empty(self.n)
    }

    pub fn full(&self) -> SubsetMask {
        SubsetMask::full(self.n)
    }

    pub fn singleton(&self, j: usize) -> SubsetMask {
        let mut m = self.empty();
        m.insert(j);
        m
    }
}

/// Subset of a ground set. Bits at positions `>= n` stay zero; the
/// cardinality is cached so `len` is O(1).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    n: usize,
    ones: usize,
    words: Vec<u64>,
}

fn word_count(n: usize) -> usize {
    n.div_ceil(WORD)
}

impl SubsetMask {
    pub fn empty(n: usize) -> Self {
        assert!(n > 0, "empty ground set");
        SubsetMask {
            n,
            ones: 0,
            words: vec![0; word_count(n)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut m = SubsetMask::empty(n);
        for w in &mut m.words {
            *w = u64::MAX;
        }
        m.clear_tail();
        m.ones = n;
        m
    }

    /// Zero out bits at positions `n..` of the last word.
    fn clear_tail(&mut self) {
        let rem = self.n % WORD;
        if rem != 0 {
            *self.words.last_mut().unwrap() &= (1u64 << rem) - 1;
        }
    }

    fn recount(&mut self) {
        self.ones = self.words.iter().map(|w| w.count_ones() as usize).sum();
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut m = SubsetMask::empty(n);
        for j in indices {
            if j >= n {
                return Err(Error::invalid(format!(
                    "element index {j} out of range for ground set of size {n}"
                )));
            }
            m.insert(j);
        }
        Ok(m)
    }

    /// Build from the 1-based ids used in serialized formats.
    pub fn from_one_based(n: usize, ids: &[usize]) -> Result<Self> {
        let mut m = SubsetMask::empty(n);
        for &id in ids {
            if id == 0 || id > n {
                return Err(Error::invalid(format!(
                    "element id {id} out of range 1..={n}"
                )));
            }
            m.insert(id - 1);
        }
        Ok(m)
    }

    /// Build from the low `n` bits of `bits`. Requires `n <= 64`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        assert!(n <= WORD, "from_bits needs n <= 64");
        assert!(n == WORD || bits < (1u64 << n), "bits out of range");
        let mut m = SubsetMask::empty(n);
        m.words[0] = bits;
        m.recount();
        m
    }

    /// Pack into a single word. Requires `n <= 64`.
    pub fn bits(&self) -> u64 {
        assert!(self.n <= WORD, "bits needs n <= 64");
        self.words[0]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ground(&self) -> GroundSet {
        GroundSet { n: self.n }
    }

    pub fn len(&self) -> usize {
        self.ones
    }

    pub fn is_empty(&self) -> bool {
        self.ones == 0
    }

    pub fn is_full(&self) -> bool {
        self.ones == self.n
    }

    pub fn contains(&self, j: usize) -> bool {
        assert!(j < self.n, "element index out of range");
        self.words[j / WORD] >> (j % WORD) & 1 == 1
    }

    /// Returns true when the set changed.
    pub fn insert(&mut self, j: usize) -> bool {
        assert!(j < self.n, "element index out of range");
        let w = &mut self.words[j / WORD];
        let bit = 1u64 << (j % WORD);
        if *w & bit == 0 {
            *w |= bit;
            self.ones += 1;
            true
        } else {
            false
        }
    }

    /// Returns true when the set changed.
    pub fn remove(&mut self, j: usize) -> bool {
        assert!(j < self.n, "element index out of range");
        let w = &mut self.words[j / WORD];
        let bit = 1u64 << (j % WORD);
        if *w & bit != 0 {
            *w &= !bit;
            self.ones -= 1;
            true
        } else {
            false
        }
    }

    pub fn toggle(&mut self, j: usize) {
        if !self.insert(j) {
            self.remove(j);
        }
    }

    pub fn with(&self, j: usize) -> Self {
        let mut m = self.clone();
        m.insert(j);
        m
    }

    pub fn without(&self, j: usize) -> Self {
        let mut m = self.clone();
        m.remove(j);
        m
    }

    fn zip_words(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.n, other.n, "ground set size mismatch");
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| op(a, b))
            .collect();
        let mut m = SubsetMask {
            n: self.n,
            ones: 0,
            words,
        };
        m.recount();
        m
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_words(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_words(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> Self {
        let mut m = SubsetMask {
            n: self.n,
            ones: 0,
            words: self.words.iter().map(|&w| !w).collect(),
        };
        m.clear_tail();
        m.ones = self.n - self.ones;
        m
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        assert_eq!(self.n, other.n, "ground set size mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .all(|(&a, &b)| a & !b == 0)
    }

    pub fn is_disjoint_from(&self, other: &Self) -> bool {
        assert_eq!(self.n, other.n, "ground set size mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .all(|(&a, &b)| a & b == 0)
    }

    pub fn iter(&self) -> BitIter<'_> {
        BitIter {
            words: &self.words,
            word_index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    /// Sorted 1-based ids, the form used in serialized output.
    pub fn one_based(&self) -> Vec<usize> {
        self.iter().map(|j| j + 1).collect()
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", j + 1)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for SubsetMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.ones))?;
        for j in self.iter() {
            seq.serialize_element(&(j + 1))?;
        }
        seq.end()
    }
}

pub struct BitIter<'a> {
    words: &'a [u64],
    word_index: usize,
    current: u64,
}

impl Iterator for BitIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.word_index += 1;
            if self.word_index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_index];
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.word_index * WORD + bit)
    }
}
