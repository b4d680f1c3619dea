//! Estimation of a sparse context tree and its transition probabilities
//! from a single sequence, and sampling from an estimated model.
//!
//! The estimator grows a suffix tree over past positions. At each node the
//! candidate one-symbol extensions are clustered by agglomerative merging
//! (symmetrized Kullback-Leibler divergence of their smoothed next-symbol
//! distributions, closest pair first), the resulting groups become child
//! contexts, and a split whose children are all leaves is undone when its
//! divergence gain `sum_g N(g) KL(P(.|g) || P(.|parent))` falls below the
//! keep threshold. Because every split partitions the alphabet, the result
//! is always consistent and complete.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{Alphabet, SymbolSet};
use crate::context::SparseContext;
use crate::error::{Error, Result};
use crate::tree::SparseContextTree;

/// Deepest supported context; suffixes are packed 6 bits per symbol.
pub const MAX_DEPTH: usize = 10;

const BITS: usize = 6;
const SYMBOL_MASK: u64 = (1 << BITS) - 1;

/// Transition counts for every plain suffix up to a maximum depth.
///
/// `N(u, a)` counts positions `t` where the `|u|` symbols before `t` spell
/// `u` and symbol `a` sits at `t`. Only positions with a full history inside
/// the sequence are used (no wrap-around), and an occurrence of `u` is
/// counted only when a next symbol exists, so `N(u) = sum_a N(u, a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextCounts {
    alphabet: Alphabet,
    max_depth: usize,
    // by_length[j - 1]: packed suffix of length j (lag 1 in the low bits)
    by_length: Vec<BTreeMap<u64, Vec<u64>>>,
}

fn pack(suffix: &[u8]) -> u64 {
    suffix
        .iter()
        .rev()
        .enumerate()
        .fold(0, |acc, (lag0, &s)| acc | (s as u64) << (BITS * lag0))
}

fn symbol_at_lag(key: u64, lag: usize) -> usize {
    ((key >> (BITS * (lag - 1))) & SYMBOL_MASK) as usize
}

fn compatible(key: u64, sets: &[SymbolSet]) -> bool {
    sets.iter()
        .rev()
        .enumerate()
        .all(|(lag0, set)| set.contains(symbol_at_lag(key, lag0 + 1)))
}

impl ContextCounts {
    fn from_indices(alphabet: Alphabet, seq: &[u8], max_depth: usize) -> Self {
        let n = alphabet.len();
        let mut by_length = vec![BTreeMap::new(); max_depth];
        for t in 1..seq.len() {
            let next = seq[t] as usize;
            let mut key = 0u64;
            for j in 1..=max_depth.min(t) {
                key |= (seq[t - j] as u64) << (BITS * (j - 1));
                by_length[j - 1].entry(key).or_insert_with(|| vec![0u64; n])[next] += 1;
            }
        }
        Self {
            alphabet,
            max_depth,
            by_length,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// `N(u, .)` for a plain suffix given as symbol indices, oldest first.
    /// `None` when the suffix never occurs with a successor.
    pub fn transitions(&self, suffix: &[u8]) -> Option<&[u64]> {
        if suffix.is_empty() || suffix.len() > self.max_depth {
            return None;
        }
        self.by_length[suffix.len() - 1]
            .get(&pack(suffix))
            .map(|v| v.as_slice())
    }

    /// `N(u, a)` with `u` and `a` given as symbols.
    pub fn count(&self, suffix: &str, next: char) -> u64 {
        let (Ok(u), Some(a)) = (self.alphabet.encode(suffix), self.alphabet.index_of(next)) else {
            return 0;
        };
        self.transitions(&u).map_or(0, |v| v[a])
    }

    /// `N(u)`.
    pub fn occurrences(&self, suffix: &str) -> u64 {
        self.alphabet
            .encode(suffix)
            .ok()
            .and_then(|u| self.transitions(&u).map(|v| v.iter().sum()))
            .unwrap_or(0)
    }

    /// Summed transition counts over plain suffixes compatible with `sets`
    /// (oldest first, length at most `max_depth`).
    fn aggregate(&self, sets: &[SymbolSet]) -> Vec<u64> {
        let mut total = vec![0u64; self.alphabet.len()];
        for (&key, counts) in &self.by_length[sets.len() - 1] {
            if compatible(key, sets) {
                for (t, c) in total.iter_mut().zip(counts) {
                    *t += c;
                }
            }
        }
        total
    }

    /// Per-symbol counts of one-position extensions of `sets` (which may be
    /// empty, meaning the root).
    fn extension_counts(&self, sets: &[SymbolSet]) -> Vec<Vec<u64>> {
        let n = self.alphabet.len();
        let depth = sets.len() + 1;
        let mut out = vec![vec![0u64; n]; n];
        for (&key, counts) in &self.by_length[depth - 1] {
            if compatible(key, sets) {
                let row = &mut out[symbol_at_lag(key, depth)];
                for (t, c) in row.iter_mut().zip(counts) {
                    *t += c;
                }
            }
        }
        out
    }
}

/// Counts transitions in `sequence` for every suffix length `1..=depth`.
pub fn scan_counts(sequence: &str, alphabet: &Alphabet, depth: usize) -> Result<ContextCounts> {
    if !(1..=MAX_DEPTH).contains(&depth) {
        return Err(Error::InvalidConfig(format!(
            "depth must be in 1..={MAX_DEPTH}, got {depth}"
        )));
    }
    let seq = alphabet.encode(sequence)?;
    if seq.len() < 2 {
        return Err(Error::SequenceTooShort {
            len: seq.len(),
            min: 2,
        });
    }
    Ok(ContextCounts::from_indices(alphabet.clone(), &seq, depth))
}

/// Smoothed next-symbol distribution for a sparse context.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    /// Set when no compatible occurrence exists and no pseudocount was
    /// given, in which case the distribution is uniform.
    pub uniform_fallback: bool,
}

fn smooth(counts: &[u64], pseudocount: f64) -> Prediction {
    let n = counts.len() as f64;
    let total: u64 = counts.iter().sum();
    let denom = n * pseudocount + total as f64;
    if denom <= 0.0 {
        return Prediction {
            probabilities: vec![1.0 / n; counts.len()],
            uniform_fallback: true,
        };
    }
    Prediction {
        probabilities: counts
            .iter()
            .map(|&c| (pseudocount + c as f64) / denom)
            .collect(),
        uniform_fallback: false,
    }
}

/// `P(a | w) = (pc + sum_u N(u, a)) / (|A| pc + sum_u N(u))` over plain
/// suffixes `u` of length `l(w)` with `u_{-i}` in `w_{-i}` for every `i`.
pub fn predictive_distribution(
    counts: &ContextCounts,
    context: &SparseContext,
    pseudocount: f64,
) -> Result<Prediction> {
    if context.len() > counts.max_depth {
        return Err(Error::InvalidContext(format!(
            "context length {} exceeds counted depth {}",
            context.len(),
            counts.max_depth
        )));
    }
    if !(pseudocount.is_finite() && pseudocount >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "pseudocount must be finite and >= 0, got {pseudocount}"
        )));
    }
    Ok(smooth(&counts.aggregate(context.sets()), pseudocount))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    /// Deepest context considered, `D`.
    pub max_depth: usize,
    /// A node is expanded only if its context occurs at least this often.
    pub min_count: u64,
    /// Largest symmetrized KL divergence (bits) at which sibling symbols
    /// are fused into one set.
    pub merge_threshold: f64,
    /// Smallest divergence gain (bits x count) for keeping a split.
    pub keep_threshold: f64,
    pub pseudocount: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            max_depth: 5,
            min_count: 2,
            merge_threshold: 0.10,
            keep_threshold: 1.0,
            pseudocount: 0.5,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(1..=MAX_DEPTH).contains(&self.max_depth) {
            return bad(format!("max_depth must be in 1..={MAX_DEPTH}, got {}", self.max_depth));
        }
        if self.min_count == 0 {
            return bad("min_count must be positive".into());
        }
        for (name, v) in [
            ("merge_threshold", self.merge_threshold),
            ("keep_threshold", self.keep_threshold),
            ("pseudocount", self.pseudocount),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }

    /// One-line `key=value` rendering used in file headers.
    pub fn describe(&self) -> String {
        format!(
            "max_depth={} min_count={} merge_threshold={:.6} keep_threshold={:.6} pseudocount={:.6}",
            self.max_depth, self.min_count, self.merge_threshold, self.keep_threshold, self.pseudocount
        )
    }
}

/// A sparse context tree with a next-symbol distribution per context.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedModel {
    tree: SparseContextTree,
    // aligned with tree.contexts()
    probabilities: Vec<Vec<f64>>,
    config: Option<EstimatorConfig>,
}

/// Distributions must sum to one within this tolerance.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

impl EstimatedModel {
    /// Builds a model from `(context, distribution)` pairs. The contexts
    /// must form a consistent, complete tree and each distribution must
    /// cover the alphabet and sum to one.
    pub fn new(alphabet: Alphabet, entries: Vec<(SparseContext, Vec<f64>)>) -> Result<Self> {
        let mut by_context: BTreeMap<SparseContext, Vec<f64>> = BTreeMap::new();
        for (c, p) in entries {
            if by_context.insert(c.clone(), p).is_some() {
                return Err(Error::InvalidModel(format!(
                    "context {} given twice",
                    c.to_text(&alphabet)
                )));
            }
        }
        let tree = SparseContextTree::new(alphabet, by_context.keys().cloned().collect())?;
        if !tree.is_complete() {
            return Err(Error::InvalidModel(
                "model contexts must form a consistent, complete tree".into(),
            ));
        }
        let probabilities = tree
            .contexts()
            .iter()
            .map(|c| by_context.remove(c).expect("context present"))
            .collect();
        let model = Self {
            tree,
            probabilities,
            config: None,
        };
        model.check_distributions()?;
        Ok(model)
    }

    fn check_distributions(&self) -> Result<()> {
        let n = self.tree.alphabet().len();
        for (c, p) in self.tree.contexts().iter().zip(&self.probabilities) {
            let name = || c.to_text(self.tree.alphabet());
            if p.len() != n {
                return Err(Error::InvalidModel(format!(
                    "distribution for {} has {} entries, expected {n}",
                    name(),
                    p.len()
                )));
            }
            if p.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                return Err(Error::InvalidModel(format!(
                    "distribution for {} has a negative or non-finite entry",
                    name()
                )));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(Error::InvalidModel(format!(
                    "distribution for {} sums to {sum}",
                    name()
                )));
            }
        }
        Ok(())
    }

    pub fn tree(&self) -> &SparseContextTree {
        &self.tree
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.tree.alphabet()
    }

    pub fn config(&self) -> Option<&EstimatorConfig> {
        self.config.as_ref()
    }

    /// Distributions in the tree's canonical context order.
    pub fn probabilities(&self) -> &[Vec<f64>] {
        &self.probabilities
    }

    pub fn distribution(&self, context: &SparseContext) -> Option<&[f64]> {
        self.tree
            .contexts()
            .iter()
            .position(|c| c == context)
            .map(|i| self.probabilities[i].as_slice())
    }

    /// Number of past symbols needed before every history has a context.
    pub fn warmup_len(&self) -> usize {
        let n = self.alphabet().len();
        self.tree
            .contexts()
            .iter()
            .map(|c| c.effective_len(n))
            .max()
            .unwrap_or(0)
    }

    /// Text form: a comment echoing the configuration (when known), the
    /// canonical tree, then one `context -> p(a)=... p(b)=...` line per
    /// context with 6 decimals.
    pub fn to_text(&self) -> String {
        let alphabet = self.alphabet();
        let mut out = String::new();
        if let Some(cfg) = &self.config {
            writeln!(out, "# {}", cfg.describe()).unwrap();
        }
        out.push_str(&self.tree.to_text());
        for (c, p) in self.tree.contexts().iter().zip(&self.probabilities) {
            out.push_str(&c.to_text(alphabet));
            out.push_str(" ->");
            for (i, x) in p.iter().enumerate() {
                write!(out, " p({})={:.6}", alphabet.symbol(i), x).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output. Distributions are
    /// renormalized after reading, since they were rounded on output.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tree_lines = String::new();
        let mut prob_lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.contains("->") {
                prob_lines.push((i + 1, line));
            } else {
                tree_lines.push_str(line);
                tree_lines.push('\n');
            }
        }
        let tree = SparseContextTree::parse(&tree_lines)?;
        let alphabet = tree.alphabet().clone();
        let mut entries = Vec::new();
        for (lineno, line) in prob_lines {
            let err = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            let (ctx, rest) = line.split_once("->").expect("line contains ->");
            let ctx = SparseContext::parse(&alphabet, ctx.trim()).map_err(|e| err(e.to_string()))?;
            let mut p = vec![f64::NAN; alphabet.len()];
            for field in rest.split_whitespace() {
                let parsed = field
                    .strip_prefix("p(")
                    .and_then(|f| f.split_once(")="))
                    .and_then(|(sym, v)| {
                        let mut chars = sym.chars();
                        let c = chars.next()?;
                        chars.next().is_none().then_some(())?;
                        Some((alphabet.index_of(c)?, v.parse::<f64>().ok()?))
                    });
                let (idx, v) = parsed.ok_or_else(|| err(format!("bad probability field {field:?}")))?;
                p[idx] = v;
            }
            if p.iter().any(|x| x.is_nan()) {
                return Err(err("missing probability for some symbol".into()));
            }
            let sum: f64 = p.iter().sum();
            if !(sum.is_finite() && (sum - 1.0).abs() <= 1e-4) {
                return Err(err(format!("probabilities sum to {sum}")));
            }
            p.iter_mut().for_each(|x| *x /= sum);
            entries.push((ctx, p));
        }
        let model = Self::new(alphabet, entries)?;
        if model.tree != tree {
            return Err(Error::InvalidModel(
                "probability lines do not match the listed contexts".into(),
            ));
        }
        Ok(model)
    }
}

struct Node {
    sets: Vec<SymbolSet>,
    counts: Vec<u64>,
    children: Vec<Node>,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn collect_leaves(self, alphabet: &Alphabet, out: &mut Vec<SparseContext>) {
        if self.children.is_empty() {
            out.push(if self.sets.is_empty() {
                SparseContext::root(alphabet)
            } else {
                SparseContext::from_sets_unchecked(self.sets)
            });
        } else {
            for c in self.children {
                c.collect_leaves(alphabet, out);
            }
        }
    }
}

fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| if b > 0.0 { a * (a / b).log2() } else { f64::INFINITY })
        .sum()
}

fn symmetric_kl(p: &[f64], q: &[f64]) -> f64 {
    kl_bits(p, q) + kl_bits(q, p)
}

struct Group {
    set: SymbolSet,
    counts: Vec<u64>,
}

struct Grower<'a> {
    counts: &'a ContextCounts,
    config: EstimatorConfig,
}

impl Grower<'_> {
    fn grow(&self, sets: Vec<SymbolSet>, counts: Vec<u64>) -> Node {
        let total: u64 = counts.iter().sum();
        let mut node = Node {
            sets,
            counts,
            children: Vec::new(),
        };
        if node.sets.len() >= self.config.max_depth || total < self.config.min_count {
            return node;
        }
        let groups = self.merge(self.counts.extension_counts(&node.sets));
        if groups.len() < 2 {
            return node;
        }
        node.children = groups
            .into_iter()
            .map(|g| {
                let mut sets = Vec::with_capacity(node.sets.len() + 1);
                sets.push(g.set);
                sets.extend_from_slice(&node.sets);
                self.grow(sets, g.counts)
            })
            .collect();
        if node.children.iter().all(Node::is_leaf) && self.split_gain(&node) < self.config.keep_threshold {
            node.children.clear();
        }
        node
    }

    /// Initial groups are the frequent symbols plus one pooled group of rare
    /// symbols; the closest pair is merged while its divergence is within
    /// the merge threshold.
    fn merge(&self, per_symbol: Vec<Vec<u64>>) -> Vec<Group> {
        let mut groups: Vec<Group> = Vec::new();
        let mut rare: Option<Group> = None;
        for (i, counts) in per_symbol.into_iter().enumerate() {
            let occurrences: u64 = counts.iter().sum();
            if occurrences >= self.config.min_count {
                groups.push(Group {
                    set: SymbolSet::singleton(i),
                    counts,
                });
            } else if let Some(r) = rare.as_mut() {
                r.set = r.set.union(SymbolSet::singleton(i));
                r.counts.iter_mut().zip(&counts).for_each(|(a, b)| *a += b);
            } else {
                rare = Some(Group {
                    set: SymbolSet::singleton(i),
                    counts,
                });
            }
        }
        groups.extend(rare);
        groups.sort_by_key(|g| g.set.first());

        let pc = self.config.pseudocount;
        let mut dists: Vec<Vec<f64>> = groups.iter().map(|g| smooth(&g.counts, pc).probabilities).collect();
        while groups.len() > 1 {
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..groups.len() {
                for j in i + 1..groups.len() {
                    let d = symmetric_kl(&dists[i], &dists[j]);
                    if best.is_none_or(|(b, _, _)| d < b) {
                        best = Some((d, i, j));
                    }
                }
            }
            let (d, i, j) = best.expect("at least one pair");
            if d.is_nan() || d > self.config.merge_threshold {
                break;
            }
            let absorbed = groups.remove(j);
            dists.remove(j);
            let g = &mut groups[i];
            g.set = g.set.union(absorbed.set);
            g.counts.iter_mut().zip(&absorbed.counts).for_each(|(a, b)| *a += b);
            dists[i] = smooth(&g.counts, pc).probabilities;
        }
        groups
    }

    fn split_gain(&self, node: &Node) -> f64 {
        let pc = self.config.pseudocount;
        let parent = smooth(&node.counts, pc).probabilities;
        node.children
            .iter()
            .map(|c| {
                let n: u64 = c.counts.iter().sum();
                if n == 0 {
                    0.0
                } else {
                    n as f64 * kl_bits(&smooth(&c.counts, pc).probabilities, &parent)
                }
            })
            .sum()
    }
}

/// Estimates a sparse context tree and its transition probabilities.
///
/// Deterministic for a fixed sequence, alphabet and configuration. The
/// returned tree is consistent, complete and no deeper than `max_depth`.
pub fn estimate_tree(
    sequence: &str,
    alphabet: &Alphabet,
    config: &EstimatorConfig,
) -> Result<EstimatedModel> {
    config.validate()?;
    let seq = alphabet.encode(sequence)?;
    let min = (config.min_count as usize).max(2);
    if seq.len() < min {
        return Err(Error::SequenceTooShort { len: seq.len(), min });
    }
    let counts = ContextCounts::from_indices(alphabet.clone(), &seq, config.max_depth);
    estimate_from_counts(&counts, config)
}

/// Runs the estimator on precomputed counts. `counts` must have been
/// scanned to at least `config.max_depth`.
pub fn estimate_from_counts(counts: &ContextCounts, config: &EstimatorConfig) -> Result<EstimatedModel> {
    config.validate()?;
    if counts.max_depth < config.max_depth {
        return Err(Error::InvalidConfig(format!(
            "counts cover depth {} but max_depth is {}",
            counts.max_depth, config.max_depth
        )));
    }
    let grower = Grower {
        counts,
        config: *config,
    };
    let root_counts = counts
        .extension_counts(&[])
        .into_iter()
        .fold(vec![0u64; counts.alphabet.len()], |mut acc, row| {
            acc.iter_mut().zip(&row).for_each(|(a, b)| *a += b);
            acc
        });
    let root = grower.grow(Vec::new(), root_counts);
    let mut leaves = Vec::new();
    root.collect_leaves(&counts.alphabet, &mut leaves);
    let tree = SparseContextTree::new(counts.alphabet.clone(), leaves)?.completed()?;
    let probabilities = tree
        .contexts()
        .iter()
        .map(|c| predictive_distribution(counts, c, config.pseudocount).map(|p| p.probabilities))
        .collect::<Result<Vec<_>>>()?;
    let model = EstimatedModel {
        tree,
        probabilities,
        config: Some(*config),
    };
    debug_assert!(model.check_distributions().is_ok());
    Ok(model)
}

fn sample(p: &[f64], rng: &mut ChaCha8Rng) -> u8 {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > 0.0 {
            cumulative += x;
            last_positive = i;
            if u < cumulative {
                return i as u8;
            }
        }
    }
    last_positive as u8
}

/// Samples a sequence of `length` symbols. The first
/// [`EstimatedModel::warmup_len`] symbols are drawn uniformly; each later
/// symbol is drawn from the distribution of the unique context matching
/// the history.
pub fn generate_sequence(model: &EstimatedModel, length: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.alphabet().len();
    let warmup = model.warmup_len().min(length);
    let prefix: Vec<u8> = (0..warmup).map(|_| rng.gen_range(0..n) as u8).collect();
    model.alphabet().decode(&continue_from(model, prefix, length, &mut rng))
}

/// Like [`generate_sequence`] but starting from a given prefix (which is
/// part of the output). The prefix must be at least
/// [`EstimatedModel::warmup_len`] symbols long.
pub fn generate_from(model: &EstimatedModel, prefix: &str, length: usize, seed: u64) -> Result<String> {
    let prefix = model.alphabet().encode(prefix)?;
    if prefix.len() < model.warmup_len() {
        return Err(Error::SequenceTooShort {
            len: prefix.len(),
            min: model.warmup_len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(model.alphabet().decode(&continue_from(model, prefix, length, &mut rng)))
}

fn continue_from(model: &EstimatedModel, mut seq: Vec<u8>, length: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = model.alphabet().len();
    let window = model.tree().max_depth();
    let contexts = model.tree().contexts();
    seq.reserve(length.saturating_sub(seq.len()));
    while seq.len() < length {
        let history = &seq[seq.len().saturating_sub(window)..];
        let mut matching = contexts.iter().enumerate().filter(|(_, c)| c.matches(history, n));
        let (idx, _) = matching
            .next()
            .expect("a complete tree has a context for every history");
        debug_assert!(matching.next().is_none(), "history matches two contexts");
        seq.push(sample(&model.probabilities[idx], rng));
    }
    seq
}
