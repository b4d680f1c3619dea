//! Finite alphabets and nonempty subsets of them.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported alphabet; symbol sets are stored as 64-bit masks.
pub const MAX_ALPHABET_SIZE: usize = 64;

/// An ordered set of distinct single-character symbols.
///
/// The order is fixed at construction and drives every canonical form
/// built over the alphabet.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
    ascii_index: [u8; 128],
}

const NO_INDEX: u8 = u8::MAX;

impl Alphabet {
    /// Builds an alphabet from symbols in the given order.
    ///
    /// Symbols must be distinct printable ASCII characters other than `|`,
    /// and there must be between 2 and 64 of them.
    pub fn new<I: IntoIterator<Item = char>>(symbols: I) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.len() < 2 {
            return Err(Error::InvalidAlphabet(format!(
                "need at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        if symbols.len() > MAX_ALPHABET_SIZE {
            return Err(Error::InvalidAlphabet(format!(
                "at most {MAX_ALPHABET_SIZE} symbols are supported, got {}",
                symbols.len()
            )));
        }
        let mut ascii_index = [NO_INDEX; 128];
        for (i, &c) in symbols.iter().enumerate() {
            if !c.is_ascii_graphic() || c == '|' {
                return Err(Error::InvalidAlphabet(format!(
                    "symbol {c:?} is not a printable ASCII character other than '|'"
                )));
            }
            let slot = &mut ascii_index[c as usize];
            if *slot != NO_INDEX {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol {c:?}")));
            }
            *slot = i as u8;
        }
        Ok(Self {
            symbols,
            ascii_index,
        })
    }

    /// Parses an alphabet written as a string of symbols, e.g. `"abcd"`.
    pub fn from_str_symbols(s: &str) -> Result<Self> {
        Self::new(s.chars())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Always false; an alphabet has at least two symbols.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> char {
        self.symbols[index]
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        if c.is_ascii() {
            match self.ascii_index[c as usize] {
                NO_INDEX => None,
                i => Some(i as usize),
            }
        } else {
            None
        }
    }

    /// The set containing every symbol.
    pub fn full_set(&self) -> SymbolSet {
        SymbolSet::full(self.len())
    }

    /// Converts a string to symbol indices, naming the first offending
    /// symbol and its (0-based) position on failure.
    pub fn encode(&self, text: &str) -> Result<Vec<u8>> {
        text.chars()
            .enumerate()
            .map(|(position, symbol)| {
                self.index_of(symbol)
                    .map(|i| i as u8)
                    .ok_or(Error::UnknownSymbol { symbol, position })
            })
            .collect()
    }

    pub fn decode(&self, indices: &[u8]) -> String {
        indices.iter().map(|&i| self.symbols[i as usize]).collect()
    }

    pub fn as_string(&self) -> String {
        self.symbols.iter().collect()
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({:?})", self.as_string())
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_string())
    }
}

/// A nonempty subset of an alphabet, stored as a bit mask over symbol
/// indices. Iteration is always in alphabet order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolSet(u64);

impl SymbolSet {
    /// Builds a set from a raw mask. Returns `None` for the empty mask.
    pub fn from_mask(mask: u64) -> Option<Self> {
        (mask != 0).then_some(Self(mask))
    }

    pub fn singleton(index: usize) -> Self {
        debug_assert!(index < MAX_ALPHABET_SIZE);
        Self(1u64 << index)
    }

    pub fn full(size: usize) -> Self {
        debug_assert!((1..=MAX_ALPHABET_SIZE).contains(&size));
        if size == MAX_ALPHABET_SIZE {
            Self(u64::MAX)
        } else {
            Self((1u64 << size) - 1)
        }
    }

    /// Builds a set from symbol characters; every symbol must belong to
    /// `alphabet` and at least one must be given. Duplicates collapse.
    pub fn from_symbols(alphabet: &Alphabet, symbols: &str) -> Result<Self> {
        let mut mask = 0u64;
        for (position, symbol) in symbols.chars().enumerate() {
            let i = alphabet
                .index_of(symbol)
                .ok_or(Error::UnknownSymbol { symbol, position })?;
            mask |= 1u64 << i;
        }
        Self::from_mask(mask)
            .ok_or_else(|| Error::InvalidContext("empty symbol set".to_string()))
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    /// Number of members, `|w_i|`.
    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    /// Always false; symbol sets are nonempty.
    pub fn is_empty(self) -> bool {
        false
    }

    pub fn contains(self, index: usize) -> bool {
        index < MAX_ALPHABET_SIZE && self.0 & (1u64 << index) != 0
    }

    pub fn is_subset_of(self, other: SymbolSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_full(self, alphabet_size: usize) -> bool {
        self == Self::full(alphabet_size)
    }

    pub fn intersect(self, other: SymbolSet) -> Option<SymbolSet> {
        Self::from_mask(self.0 & other.0)
    }

    pub fn union(self, other: SymbolSet) -> SymbolSet {
        Self(self.0 | other.0)
    }

    pub fn difference(self, other: SymbolSet) -> Option<SymbolSet> {
        Self::from_mask(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: SymbolSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Index of the first member in alphabet order.
    pub fn first(self) -> usize {
        self.0.trailing_zeros() as usize
    }

    /// Member indices in alphabet order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    pub fn to_symbols(self, alphabet: &Alphabet) -> String {
        self.iter().map(|i| alphabet.symbol(i)).collect()
    }
}

impl fmt::Debug for SymbolSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
