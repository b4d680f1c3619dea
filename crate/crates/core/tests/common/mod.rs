//! Test-only generators and brute-force oracles. Nothing here calls the
//! library's matching, join or entropy code.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use spst::{Alphabet, DistanceMatrix, SparseContext, SparseContextTree, SymbolSet};

pub const SYMBOLS: &str = "abcde";

pub fn alphabet(k: usize) -> Alphabet {
    Alphabet::from_str_symbols(&SYMBOLS[..k]).unwrap()
}

pub fn three_block() -> SparseContextTree {
    SparseContextTree::from_texts(alphabet(4), &["abc|ac", "d|ac", "bd"]).unwrap()
}

pub fn two_block() -> SparseContextTree {
    SparseContextTree::from_texts(alphabet(4), &["ab", "abcd|cd"]).unwrap()
}

/// Random consistent complete tree: starting from the root, each node at
/// depth `j < max_depth` splits the alphabet at lag `j + 1` into 2..=k
/// nonempty blocks with probability `0.7^(j+1)`.
pub fn random_tree<R: Rng>(rng: &mut R, k: usize, max_depth: usize) -> SparseContextTree {
    let mut out = Vec::new();
    grow(rng, k, max_depth, Vec::new(), &mut out);
    let a = alphabet(k);
    let contexts = out
        .into_iter()
        .map(|sets| {
            if sets.is_empty() {
                SparseContext::root(&a)
            } else {
                SparseContext::new(sets).unwrap()
            }
        })
        .collect();
    SparseContextTree::new(a, contexts).unwrap()
}

fn grow<R: Rng>(rng: &mut R, k: usize, max_depth: usize, suffix: Vec<SymbolSet>, out: &mut Vec<Vec<SymbolSet>>) {
    let depth = suffix.len();
    if depth < max_depth && rng.gen_bool(0.7f64.powi(depth as i32 + 1)) {
        let blocks = rng.gen_range(2..=k);
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(rng);
        let mut masks = vec![0u64; blocks];
        for (pos, &sym) in order.iter().enumerate() {
            let b = if pos < blocks { pos } else { rng.gen_range(0..blocks) };
            masks[b] |= 1 << sym;
        }
        for m in masks {
            let mut next = vec![SymbolSet::from_mask(m).unwrap()];
            next.extend_from_slice(&suffix);
            grow(rng, k, max_depth, next, out);
        }
    } else {
        out.push(suffix);
    }
}

/// Context texts split into per-lag member strings, most recent first.
fn lag_sets(tree: &SparseContextTree) -> Vec<Vec<Vec<char>>> {
    tree.contexts()
        .iter()
        .map(|c| {
            c.to_text(tree.alphabet())
                .split('|')
                .rev()
                .map(|s| s.chars().collect())
                .collect()
        })
        .collect()
}

/// Every history of length `depth` over the first `k` symbols, oldest first.
pub fn histories(k: usize, depth: usize) -> Vec<Vec<char>> {
    let symbols: Vec<char> = SYMBOLS[..k].chars().collect();
    let total = k.pow(depth as u32);
    (0..total)
        .map(|mut idx| {
            let mut h = vec![' '; depth];
            for slot in h.iter_mut().rev() {
                *slot = symbols[idx % k];
                idx /= k;
            }
            h
        })
        .collect()
}

/// For each history in `histories(k, depth)`, the indices of all contexts
/// containing it. Contexts must be no longer than `depth`.
pub fn matches_per_history(tree: &SparseContextTree, depth: usize) -> Vec<Vec<usize>> {
    let k = tree.alphabet().len();
    let sets = lag_sets(tree);
    histories(k, depth)
        .iter()
        .map(|h| {
            sets.iter()
                .enumerate()
                .filter(|(_, lags)| {
                    assert!(lags.len() <= depth);
                    lags.iter()
                        .enumerate()
                        .all(|(lag0, members)| members.contains(&h[depth - 1 - lag0]))
                })
                .map(|(i, _)| i)
                .collect()
        })
        .collect()
}

/// Block label of each history; panics unless the tree partitions `A^depth`.
pub fn partition_labels(tree: &SparseContextTree, depth: usize) -> Vec<usize> {
    matches_per_history(tree, depth)
        .into_iter()
        .map(|m| {
            assert_eq!(m.len(), 1, "history matched {} contexts", m.len());
            m[0]
        })
        .collect()
}

/// Block sizes of a labelling.
pub fn block_sizes(labels: &[usize]) -> Vec<usize> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let mut v: Vec<usize> = counts.into_values().collect();
    v.sort_unstable();
    v
}

/// True when two labellings define the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd: HashMap<usize, usize> = HashMap::new();
    let mut back: HashMap<usize, usize> = HashMap::new();
    a.iter().zip(b).all(|(&x, &y)| {
        *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x
    })
}

/// Common refinement of two labellings, as pair labels.
pub fn refinement(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let next = ids.len();
            *ids.entry((x, y)).or_insert(next)
        })
        .collect()
}

/// Entropy of a partition of `total` equally likely histories, evaluated
/// straight from the textbook closed forms.
pub fn partition_entropy(sizes: &[usize], total: usize, beta: f64) -> f64 {
    let probs = sizes.iter().map(|&s| s as f64 / total as f64);
    if beta == 1.0 {
        -probs.map(|p| p * p.log2()).sum::<f64>()
    } else {
        (probs.map(|p| p.powf(beta)).sum::<f64>() - 1.0) / (2f64.powf(1.0 - beta) - 1.0)
    }
}

pub fn oracle_entropy(tree: &SparseContextTree, depth: usize, beta: f64) -> f64 {
    let k = tree.alphabet().len();
    partition_entropy(&block_sizes(&partition_labels(tree, depth)), k.pow(depth as u32), beta)
}

/// A random unrooted binary tree on `n >= 3` leaves `t0..`, with branch
/// lengths drawn from `[0.1, 2.0]`. Returns its additive distance matrix and
/// its splits (side without `t0`) with edge lengths.
pub fn random_additive<R: Rng>(rng: &mut R, n: usize) -> (DistanceMatrix, Vec<(BTreeSet<String>, f64)>) {
    assert!(n >= 3);
    // nodes 0..n are leaves; internal nodes follow
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut next_internal = n;
    let centre = next_internal;
    next_internal += 1;
    for leaf in 0..3 {
        edges.push((centre, leaf, rng.gen_range(0.1..=2.0)));
    }
    for leaf in 3..n {
        let e = rng.gen_range(0..edges.len());
        let (a, b, _) = edges[e];
        let mid = next_internal;
        next_internal += 1;
        edges[e] = (a, mid, rng.gen_range(0.1..=2.0));
        edges.push((mid, b, rng.gen_range(0.1..=2.0)));
        edges.push((mid, leaf, rng.gen_range(0.1..=2.0)));
    }
    let nodes = next_internal;
    let mut adj = vec![Vec::new(); nodes];
    for &(a, b, l) in &edges {
        adj[a].push((b, l));
        adj[b].push((a, l));
    }
    let labels: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        let mut dist = vec![f64::NAN; nodes];
        dist[i] = 0.0;
        let mut stack = vec![i];
        while let Some(v) = stack.pop() {
            for &(w, l) in &adj[v] {
                if dist[w].is_nan() {
                    dist[w] = dist[v] + l;
                    stack.push(w);
                }
            }
        }
        row.copy_from_slice(&dist[..n]);
    }
    let mut splits = Vec::new();
    for &(a, b, l) in &edges {
        let mut side = BTreeSet::new();
        let mut stack = vec![(b, a)];
        while let Some((v, p)) = stack.pop() {
            if v < n {
                side.insert(labels[v].clone());
            }
            for &(w, _) in &adj[v] {
                if w != p {
                    stack.push((w, v));
                }
            }
        }
        if side.contains("t0") {
            side = labels.iter().filter(|l| !side.contains(*l)).cloned().collect();
        }
        splits.push((side, l));
    }
    splits.sort_by(|x, y| x.0.cmp(&y.0));
    (DistanceMatrix::new(labels, rows).unwrap(), splits)
}

/// Compares split sets exactly and lengths within `tol`.
pub fn splits_match(got: &[(BTreeSet<String>, f64)], want: &[(BTreeSet<String>, f64)], tol: f64) -> bool {
    got.len() == want.len()
        && got
            .iter()
            .zip(want)
            .all(|((s1, l1), (s2, l2))| s1 == s2 && (l1 - l2).abs() <= tol)
}

/// Builds a model over the first `k` symbols from `(context text, probs)`.
pub fn model(k: usize, entries: &[(&str, [f64; 4])]) -> spst::EstimatedModel {
    let a = alphabet(k);
    let entries = entries
        .iter()
        .map(|(c, p)| (SparseContext::parse(&a, c).unwrap(), p[..k].to_vec()))
        .collect();
    spst::EstimatedModel::new(a, entries).unwrap()
}

/// Two lag-one contexts `{a,b}` and `{c,d}` whose next-symbol
/// distributions are 0.6 apart in total variation.
pub fn two_context_model() -> spst::EstimatedModel {
    model(4, &[("ab", [0.7, 0.1, 0.1, 0.1]), ("cd", [0.1, 0.1, 0.1, 0.7])])
}

pub fn uniform_model() -> spst::EstimatedModel {
    model(4, &[("abcd", [0.25; 4])])
}

/// Family models over `ACGT`: family 0 splits lag 1 into `{A,C}` and
/// `{G,T}`, family 1 into `{A,G}` and `{C,T}`. Within a family the two
/// contexts are 0.6 apart in total variation.
pub fn family_model(family: usize) -> spst::EstimatedModel {
    let a = Alphabet::from_str_symbols("ACGT").unwrap();
    let (first, second) = if family == 0 { ("AC", "GT") } else { ("AG", "CT") };
    let entries = vec![
        (SparseContext::parse(&a, first).unwrap(), vec![0.7, 0.1, 0.1, 0.1]),
        (SparseContext::parse(&a, second).unwrap(), vec![0.1, 0.1, 0.1, 0.7]),
    ];
    spst::EstimatedModel::new(a, entries).unwrap()
}

/// FASTA text with `per_family` sequences from each family model, ids
/// `f0_0, f0_1, ..., f1_0, ...`, 60 residues per line.
pub fn family_fasta(per_family: usize, length: usize, seed: u64) -> String {
    let mut out = String::new();
    for family in 0..2 {
        let m = family_model(family);
        for i in 0..per_family {
            let seq = spst::generate_sequence(&m, length, seed + (family * 1000 + i) as u64);
            out.push_str(&format!(">f{family}_{i} synthetic\n"));
            for chunk in seq.as_bytes().chunks(60) {
                out.push_str(std::str::from_utf8(chunk).unwrap());
                out.push('\n');
            }
        }
    }
    out
}
