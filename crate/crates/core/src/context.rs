//! Sparse contexts: finite sequences of symbol sets read past-to-present.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::alphabet::{Alphabet, SymbolSet};
use crate::error::{Error, Result};

/// A sparse context `(w_{-k}, ..., w_{-1})`.
///
/// `sets()[0]` is the deepest position `w_{-k}` and the last element is the
/// most recent position `w_{-1}`. Length is at least one.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SparseContext {
    sets: Vec<SymbolSet>,
}

impl SparseContext {
    pub fn new(sets: Vec<SymbolSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidContext("a context has length >= 1".into()));
        }
        Ok(Self { sets })
    }

    /// The length-one context holding the whole alphabet.
    pub fn root(alphabet: &Alphabet) -> Self {
        Self {
            sets: vec![alphabet.full_set()],
        }
    }

    /// Parses the text form `abc|ac` (deepest position first).
    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self> {
        let sets = text
            .split('|')
            .map(|part| SymbolSet::from_symbols(alphabet, part.trim()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sets)
    }

    pub fn to_text(&self, alphabet: &Alphabet) -> String {
        let parts: Vec<String> = self.sets.iter().map(|s| s.to_symbols(alphabet)).collect();
        parts.join("|")
    }

    /// `l(w)`.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sets in past-to-present order.
    pub fn sets(&self) -> &[SymbolSet] {
        &self.sets
    }

    /// `w_{-lag}` for `lag` in `1..=len()`.
    pub fn at_lag(&self, lag: usize) -> SymbolSet {
        self.sets[self.sets.len() - lag]
    }

    /// `s(w)`, the product of the set cardinalities.
    pub fn size(&self) -> BigUint {
        self.sets
            .iter()
            .fold(BigUint::one(), |acc, s| acc * BigUint::from(s.len()))
    }

    /// `s(w) |A|^{-l(w)}` as an exact rational.
    pub fn weight(&self, alphabet_size: usize) -> BigRational {
        let denom = BigInt::from(alphabet_size).pow(self.sets.len() as u32);
        BigRational::new(BigInt::from(self.size()), denom)
    }

    /// Floating-point value of [`weight`](Self::weight).
    pub fn weight_f64(&self, alphabet_size: usize) -> f64 {
        // both integers exact in f64: one division is correctly rounded
        const EXACT: u64 = 1 << f64::MANTISSA_DIGITS;
        let mut num: u64 = 1;
        let mut den: u64 = 1;
        for s in &self.sets {
            num *= s.len() as u64;
            den *= alphabet_size as u64;
            if den > EXACT {
                break;
            }
        }
        if den <= EXACT {
            return num as f64 / den as f64;
        }
        let w = self.weight(alphabet_size);
        w.to_f64().unwrap_or_else(|| {
            self.sets
                .iter()
                .map(|s| s.len() as f64 / alphabet_size as f64)
                .product()
        })
    }

    /// Positionwise intersection aligned at lag 1.
    ///
    /// Returns `None` when some aligned position within the shorter length
    /// has an empty intersection. Deeper positions of the longer context are
    /// copied unchanged, so the operation is commutative.
    pub fn intersect(&self, other: &SparseContext) -> Option<SparseContext> {
        let (long, short) = if self.len() >= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let offset = long.len() - short.len();
        if long.sets[offset..]
            .iter()
            .zip(&short.sets)
            .any(|(a, b)| a.is_disjoint(*b))
        {
            return None;
        }
        let mut sets = long.sets.clone();
        for (slot, &s) in sets[offset..].iter_mut().zip(&short.sets) {
            *slot = slot.intersect(s)?;
        }
        Some(SparseContext { sets })
    }

    /// True when some aligned position within the shorter length has an
    /// empty intersection.
    pub fn is_separated_from(&self, other: &SparseContext) -> bool {
        self.sets
            .iter()
            .rev()
            .zip(other.sets.iter().rev())
            .any(|(a, b)| a.is_disjoint(*b))
    }

    /// True when every history in `other`'s cylinder is in this one.
    pub fn contains(&self, other: &SparseContext, alphabet_size: usize) -> bool {
        (1..=self.len()).all(|lag| {
            let mine = self.at_lag(lag);
            if lag <= other.len() {
                other.at_lag(lag).is_subset_of(mine)
            } else {
                mine.is_full(alphabet_size)
            }
        })
    }

    /// Length once the deepest full-set positions are dropped; zero for a
    /// context made of full sets only.
    pub fn effective_len(&self, alphabet_size: usize) -> usize {
        let leading_full = self
            .sets
            .iter()
            .take_while(|s| s.is_full(alphabet_size))
            .count();
        self.sets.len() - leading_full
    }

    /// Whether the history (symbol indices, most recent last) lies in this
    /// context. Positions beyond the history match only full sets.
    pub fn matches(&self, history: &[u8], alphabet_size: usize) -> bool {
        (1..=self.len()).all(|lag| {
            let set = self.at_lag(lag);
            if lag <= history.len() {
                set.contains(history[history.len() - lag] as usize)
            } else {
                set.is_full(alphabet_size)
            }
        })
    }

    /// A context one position deeper, with `set` at the new deepest lag.
    pub fn extended(&self, set: SymbolSet) -> SparseContext {
        let mut sets = Vec::with_capacity(self.sets.len() + 1);
        sets.push(set);
        sets.extend_from_slice(&self.sets);
        SparseContext { sets }
    }

    pub(crate) fn from_sets_unchecked(sets: Vec<SymbolSet>) -> Self {
        debug_assert!(!sets.is_empty());
        SparseContext { sets }
    }
}

/// `s(w) |A|^{-l(w)}`.
pub fn context_weight(w: &SparseContext, alphabet: &Alphabet) -> BigRational {
    w.weight(alphabet.len())
}

/// Intersection of two contexts over the same alphabet; `None` is the
/// empty intersection.
pub fn context_intersect(w: &SparseContext, v: &SparseContext) -> Option<SparseContext> {
    w.intersect(v)
}
