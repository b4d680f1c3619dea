//! Sparse context trees: canonical form, validation, join and completion.
//!
//! A tree is stored as its set of contexts in canonical order. The text
//! form is a header line `alphabet=<symbols>` followed by one context per
//! line, e.g.
//!
//! ```text
//! alphabet=abcd
//! abc|ac
//! bd
//! d|ac
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::alphabet::{Alphabet, SymbolSet};
use crate::context::SparseContext;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SparseContextTree {
    alphabet: Alphabet,
    contexts: Vec<SparseContext>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ViolationKind {
    /// Two distinct contexts intersect at every aligned position.
    Overlap,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Indices into [`SparseContextTree::contexts`].
    pub first: usize,
    pub second: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ValidationReport {
    pub is_consistent: bool,
    /// `sum_w s(w) |A|^{-l(w)}`, exact.
    pub coverage: BigRational,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_complete(&self) -> bool {
        self.is_consistent && self.coverage.is_one()
    }
}

impl SparseContextTree {
    /// Builds a tree in canonical form: members ordered by the alphabet,
    /// contexts sorted by their text form, duplicates removed.
    ///
    /// Fails if a context mentions a symbol index outside the alphabet or
    /// if no contexts are given. Consistency is not checked here; see
    /// [`validate`](Self::validate).
    pub fn new(alphabet: Alphabet, contexts: Vec<SparseContext>) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::EmptyInput("a tree needs at least one context".into()));
        }
        let full = alphabet.full_set();
        if let Some(bad) = contexts
            .iter()
            .find(|c| c.sets().iter().any(|s| !s.is_subset_of(full)))
        {
            return Err(Error::InvalidContext(format!(
                "context {bad:?} uses symbols outside alphabet {alphabet}"
            )));
        }
        Ok(Self::canonical(alphabet, contexts))
    }

    fn canonical(alphabet: Alphabet, mut contexts: Vec<SparseContext>) -> Self {
        contexts.sort_by_cached_key(|c| c.to_text(&alphabet));
        contexts.dedup();
        Self { alphabet, contexts }
    }

    /// The single-context tree `{(A)}`.
    pub fn root(alphabet: Alphabet) -> Self {
        let root = SparseContext::root(&alphabet);
        Self {
            alphabet,
            contexts: vec![root],
        }
    }

    /// Builds a tree from context texts such as `["abc|ac", "d|ac", "bd"]`.
    pub fn from_texts<S: AsRef<str>>(alphabet: Alphabet, texts: &[S]) -> Result<Self> {
        let contexts = texts
            .iter()
            .map(|t| SparseContext::parse(&alphabet, t.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, contexts)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn contexts(&self) -> &[SparseContext] {
        &self.contexts
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// Longest context length.
    pub fn max_depth(&self) -> usize {
        self.contexts.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    pub fn is_root(&self) -> bool {
        self.contexts.len() == 1 && self.contexts[0].effective_len(self.alphabet.len()) == 0
    }

    /// Exact `sum_w s(w) |A|^{-l(w)}`.
    pub fn coverage(&self) -> BigRational {
        let n = BigUint::from(self.alphabet.len());
        let depth = self.max_depth() as u32;
        let numer: BigUint = self
            .contexts
            .iter()
            .map(|c| c.size() * n.pow(depth - c.len() as u32))
            .sum();
        BigRational::new(BigInt::from(numer), BigInt::from(n.pow(depth)))
    }

    /// Checks pairwise separation and computes coverage.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (i, w) in self.contexts.iter().enumerate() {
            for (j, v) in self.contexts.iter().enumerate().skip(i + 1) {
                if !w.is_separated_from(v) {
                    violations.push(Violation {
                        kind: ViolationKind::Overlap,
                        first: i,
                        second: j,
                    });
                }
            }
        }
        ValidationReport {
            is_consistent: violations.is_empty(),
            coverage: self.coverage(),
            violations,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.contexts.iter().enumerate().all(|(i, w)| {
            self.contexts[i + 1..]
                .iter()
                .all(|v| w.is_separated_from(v))
        })
    }

    pub fn is_complete(&self) -> bool {
        self.is_consistent() && self.coverage().is_one()
    }

    fn check_alphabet(&self, other: &SparseContextTree) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch {
                left: self.alphabet.as_string(),
                right: other.alphabet.as_string(),
            });
        }
        Ok(())
    }

    /// `tau v sigma`: every nonempty pairwise intersection, canonicalized.
    pub fn join(&self, other: &SparseContextTree) -> Result<SparseContextTree> {
        self.check_alphabet(other)?;
        let contexts = self
            .contexts
            .iter()
            .flat_map(|w| other.contexts.iter().filter_map(move |v| w.intersect(v)))
            .collect::<Vec<_>>();
        if contexts.is_empty() {
            return Err(Error::InconsistentTree(
                "join of the two trees has no nonempty intersection".into(),
            ));
        }
        Ok(Self::canonical(self.alphabet.clone(), contexts))
    }

    /// True when both complete trees induce the same partition of histories.
    pub fn same_partition(&self, other: &SparseContextTree) -> Result<bool> {
        let joined = self.join(other)?;
        Ok(joined.len() == self.len() && joined.len() == other.len())
    }

    /// True when this complete tree's partition refines `other`'s.
    pub fn refines(&self, other: &SparseContextTree) -> Result<bool> {
        Ok(self.join(other)?.len() == self.len())
    }

    /// Index of the context matching a history (symbol indices, most recent
    /// last), if any.
    pub fn find_context(&self, history: &[u8]) -> Option<usize> {
        let n = self.alphabet.len();
        self.contexts.iter().position(|c| c.matches(history, n))
    }

    /// Returns a complete tree covering the same histories plus the
    /// uncovered remainder.
    ///
    /// The remainder is found by splitting the root region against the
    /// existing contexts; fragments are then merged back wherever sibling
    /// sets at the deepest position cover the alphabet, and deepest
    /// full-set positions are dropped.
    pub fn completed(&self) -> Result<SparseContextTree> {
        let report = self.validate();
        if !report.is_consistent {
            let v = &report.violations[0];
            return Err(Error::InconsistentTree(format!(
                "contexts {} and {} overlap",
                self.contexts[v.first].to_text(&self.alphabet),
                self.contexts[v.second].to_text(&self.alphabet)
            )));
        }
        if report.coverage.is_one() {
            return Ok(self.clone());
        }
        let n = self.alphabet.len();
        let mut remainder = Vec::new();
        let all: Vec<&SparseContext> = self.contexts.iter().collect();
        uncovered(Vec::new(), &all, n, &mut remainder);
        let remainder = merge_full_siblings(remainder, n);
        let mut contexts = self.contexts.clone();
        contexts.extend(remainder.into_iter().map(|sets| {
            if sets.is_empty() {
                SparseContext::root(&self.alphabet)
            } else {
                SparseContext::from_sets_unchecked(sets)
            }
        }));
        let tree = Self::canonical(self.alphabet.clone(), contexts);
        debug_assert!(tree.is_complete());
        Ok(tree)
    }

    /// Canonical text form; byte-identical for equal trees.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "alphabet={}", self.alphabet).unwrap();
        for c in &self.contexts {
            out.push_str(&c.to_text(&self.alphabet));
            out.push('\n');
        }
        out
    }

    /// Parses the text form. Blank lines and lines starting with `#` are
    /// ignored; the first remaining line must be the alphabet header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut alphabet: Option<Alphabet> = None;
        let mut contexts = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            match &alphabet {
                None => {
                    let symbols = line
                        .strip_prefix("alphabet=")
                        .ok_or_else(|| err("expected `alphabet=<symbols>` header".into()))?;
                    alphabet =
                        Some(Alphabet::from_str_symbols(symbols).map_err(|e| err(e.to_string()))?);
                }
                Some(a) => {
                    contexts.push(SparseContext::parse(a, line).map_err(|e| err(e.to_string()))?)
                }
            }
        }
        let alphabet = alphabet.ok_or(Error::Parse {
            line: 0,
            message: "missing `alphabet=` header".into(),
        })?;
        Self::new(alphabet, contexts)
    }
}

/// Canonical form of a tree (sorted, deduplicated). Trees are kept in this
/// form on construction, so this is a clone.
pub fn canonicalize(tree: &SparseContextTree) -> SparseContextTree {
    SparseContextTree::canonical(tree.alphabet.clone(), tree.contexts.clone())
}

pub fn tree_join(tau: &SparseContextTree, sigma: &SparseContextTree) -> Result<SparseContextTree> {
    tau.join(sigma)
}

pub fn validate_tree(tree: &SparseContextTree) -> ValidationReport {
    tree.validate()
}

fn overlaps(region: &[SymbolSet], c: &SparseContext) -> bool {
    region
        .iter()
        .rev()
        .zip(c.sets().iter().rev())
        .all(|(a, b)| !a.is_disjoint(*b))
}

/// Smallest lag at which `c` fails to contain the region, if any.
fn first_cut(region: &[SymbolSet], c: &SparseContext, n: usize) -> Option<usize> {
    (1..=c.len()).find(|&lag| {
        let set = c.at_lag(lag);
        if lag <= region.len() {
            !region[region.len() - lag].is_subset_of(set)
        } else {
            !set.is_full(n)
        }
    })
}

fn uncovered(region: Vec<SymbolSet>, candidates: &[&SparseContext], n: usize, out: &mut Vec<Vec<SymbolSet>>) {
    let hits: Vec<&SparseContext> = candidates
        .iter()
        .copied()
        .filter(|c| overlaps(&region, c))
        .collect();
    if hits.is_empty() {
        out.push(region);
        return;
    }
    let mut cut: Option<(usize, &SparseContext)> = None;
    for c in &hits {
        match first_cut(&region, c, n) {
            None => return,
            Some(lag) if cut.is_none_or(|(best, _)| lag < best) => cut = Some((lag, c)),
            Some(_) => {}
        }
    }
    let (lag, c) = cut.expect("overlapping contexts that do not contain the region cut it");
    let split = c.at_lag(lag);
    let mut base = region;
    if lag > base.len() {
        let full = SymbolSet::full(n);
        let mut deeper = vec![full; lag - base.len()];
        deeper.extend(base);
        base = deeper;
    }
    let idx = base.len() - lag;
    let current = base[idx];
    for part in [current.intersect(split), current.difference(split)]
        .into_iter()
        .flatten()
    {
        let mut next = base.clone();
        next[idx] = part;
        uncovered(next, &hits, n, out);
    }
}

fn merge_full_siblings(mut blocks: Vec<Vec<SymbolSet>>, n: usize) -> Vec<Vec<SymbolSet>> {
    let full = SymbolSet::full(n);
    loop {
        let mut changed = false;
        // drop deepest full positions
        for b in blocks.iter_mut() {
            while b.len() > 1 && b[0] == full {
                b.remove(0);
                changed = true;
            }
        }
        let mut groups: BTreeMap<Vec<SymbolSet>, Vec<usize>> = BTreeMap::new();
        for (i, b) in blocks.iter().enumerate() {
            if b.len() > 1 {
                groups.entry(b[1..].to_vec()).or_default().push(i);
            }
        }
        let mut remove = vec![false; blocks.len()];
        let mut merged = Vec::new();
        for (suffix, members) in groups {
            if members.len() < 2 {
                continue;
            }
            let mut union = 0u64;
            let mut disjoint = true;
            for &i in &members {
                let m = blocks[i][0].mask();
                disjoint &= union & m == 0;
                union |= m;
            }
            if disjoint && union == full.mask() {
                for &i in &members {
                    remove[i] = true;
                }
                merged.push(suffix);
                changed = true;
            }
        }
        if !changed {
            return blocks;
        }
        let mut kept: Vec<Vec<SymbolSet>> = blocks
            .into_iter()
            .zip(remove)
            .filter_map(|(b, r)| (!r).then_some(b))
            .collect();
        kept.extend(merged);
        blocks = kept;
    }
}

/// Coverage as a plain fraction string, e.g. `3/8`.
pub(crate) fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else if r.is_zero() {
        "0".into()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abcd() -> Alphabet {
        Alphabet::from_str_symbols("abcd").unwrap()
    }

    fn tree(texts: &[&str]) -> SparseContextTree {
        SparseContextTree::from_texts(abcd(), texts).unwrap()
    }

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn three_block() -> SparseContextTree {
        tree(&["abc|ac", "d|ac", "bd"])
    }

    #[test]
    fn three_block_is_complete() {
        let report = validate_tree(&three_block());
        assert!(report.is_consistent);
        assert_eq!(report.coverage, rational(1, 1));
        assert!(report.is_complete());
    }

    #[test]
    fn overlapping_contexts_are_reported() {
        let report = validate_tree(&tree(&["ac", "ab"]));
        assert!(!report.is_consistent);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::Overlap);
    }

    #[test]
    fn partial_coverage() {
        let report = validate_tree(&tree(&["ab"]));
        assert!(report.is_consistent);
        assert_eq!(report.coverage, rational(1, 2));
        assert!(!report.is_complete());
    }

    #[test]
    fn canonical_form() {
        let t = tree(&["ca"]);
        assert_eq!(t.contexts()[0].to_text(t.alphabet()), "ac");
        let t = tree(&["bd", "bd"]);
        assert_eq!(t.len(), 1);
        let f = three_block();
        assert_eq!(canonicalize(&canonicalize(&f)), canonicalize(&f));
        assert_eq!(tree(&["bd", "d|ca", "cba|ac"]), f);
    }

    #[test]
    fn join_examples() {
        let a = three_block();
        let root = SparseContextTree::root(abcd());
        assert_eq!(tree_join(&a, &root).unwrap(), a);
        assert_eq!(tree_join(&a, &a).unwrap(), a);
        let b = tree(&["ab", "abcd|cd"]);
        let joined = tree_join(&a, &b).unwrap();
        let expected = tree(&["abc|a", "abc|c", "d|a", "d|c", "b", "abcd|d"]);
        assert_eq!(joined, expected);
        assert!(joined.is_complete());
    }

    #[test]
    fn join_rejects_alphabet_mismatch() {
        let other = SparseContextTree::root(Alphabet::from_str_symbols("abc").unwrap());
        assert!(matches!(
            three_block().join(&other),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn completion() {
        let t = tree(&["abc|ac", "d|ac"]).completed().unwrap();
        assert_eq!(t, three_block());

        let t = tree(&["a"]).completed().unwrap();
        assert_eq!(t, tree(&["a", "bcd"]));

        let t = tree(&["ab|c"]).completed().unwrap();
        assert!(t.is_complete());
        assert_eq!(t, tree(&["ab|c", "cd|c", "abd"]));

        assert_eq!(three_block().completed().unwrap(), three_block());
        assert!(tree(&["ab", "a"]).completed().is_err());
    }

    #[test]
    fn text_round_trip() {
        let f = three_block();
        let text = f.to_text();
        assert_eq!(text, "alphabet=abcd\nabc|ac\nbd\nd|ac\n");
        assert_eq!(SparseContextTree::parse(&text).unwrap(), f);
        let with_comment = format!("# comment\n\n{text}");
        assert_eq!(SparseContextTree::parse(&with_comment).unwrap(), f);
        match SparseContextTree::parse("alphabet=abcd\nab\nax\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SparseContextTree::parse("ab\n").is_err());
    }

    #[test]
    fn partition_relations() {
        let a = three_block();
        let b = tree(&["ab", "abcd|cd"]);
        let j = a.join(&b).unwrap();
        assert!(j.refines(&a).unwrap());
        assert!(j.refines(&b).unwrap());
        assert!(!a.refines(&b).unwrap());
        assert!(a.same_partition(&a).unwrap());
        assert!(tree(&["ab", "cd"]).same_partition(&tree(&["ab", "abcd|cd"])).unwrap());
    }
}
