//! Beta-entropy of context trees and the beta-distance between them.
//!
//! Tree weights `s(w)|A|^{-l(w)}` are exact rationals; they are converted to
//! `f64` only here. For beta != 1,
//!
//! `H_beta = (sum_w p_w^beta - 1) / (2^{1-beta} - 1)`
//!
//! and for beta == 1 the Shannon entropy in bits. The distance is
//! `d_beta = 2 H_beta(tau v sigma) - H_beta(tau) - H_beta(sigma)`, where the
//! refinement is the tree join (the common refinement of both partitions).

use crate::error::{Error, Result};
use crate::tree::SparseContextTree;

/// Distances in `[-NEGATIVE_TOLERANCE, 0)` are rounding noise and clamp to 0.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct BetaParam(f64);

impl BetaParam {
    pub const SHANNON: BetaParam = BetaParam(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidBeta(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_shannon(self) -> bool {
        self.0 == 1.0
    }
}

impl Default for BetaParam {
    fn default() -> Self {
        Self::SHANNON
    }
}

/// Entropy of a probability vector summing to one.
///
/// The beta != 1 branch is evaluated as
/// `sum_i p_i expm1((beta-1) ln p_i) / expm1((1-beta) ln 2)`, which equals
/// the closed form when the weights sum to one and stays accurate near 1.
pub fn entropy_of_weights<I>(weights: I, beta: BetaParam) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let b = beta.value();
    if beta.is_shannon() {
        -weights
            .into_iter()
            .filter(|&p| p > 0.0)
            .map(|p| p * p.log2())
            .sum::<f64>()
    } else {
        let numer: f64 = weights
            .into_iter()
            .filter(|&p| p > 0.0)
            .map(|p| p * ((b - 1.0) * p.ln()).exp_m1())
            .sum();
        numer / ((1.0 - b) * std::f64::consts::LN_2).exp_m1()
    }
}

fn require_complete(tree: &SparseContextTree) -> Result<()> {
    let report = tree.validate();
    if !report.is_consistent {
        return Err(Error::InconsistentTree(format!(
            "{} overlapping context pairs",
            report.violations.len()
        )));
    }
    if !report.is_complete() {
        return Err(Error::IncompleteTree(crate::tree::fmt_rational(&report.coverage)));
    }
    Ok(())
}

/// Entropy of a tree already known to be complete.
pub(crate) fn entropy_unchecked(tree: &SparseContextTree, beta: BetaParam) -> f64 {
    let n = tree.alphabet().len();
    entropy_of_weights(tree.contexts().iter().map(|c| c.weight_f64(n)), beta)
}

/// `H_beta(tau)`. The tree must be consistent and complete; call
/// [`SparseContextTree::completed`] first for partial trees.
pub fn beta_entropy(tree: &SparseContextTree, beta: BetaParam) -> Result<f64> {
    require_complete(tree)?;
    Ok(entropy_unchecked(tree, beta))
}

pub(crate) fn clamp_distance(d: f64) -> f64 {
    debug_assert!(d >= -1e-9, "distance {d} is far below zero");
    if d < 0.0 {
        0.0
    } else {
        d
    }
}

/// Combines precomputed entropies into a distance. The sum of the two
/// marginal entropies is formed first so the result is symmetric bit for bit.
pub(crate) fn distance_from_entropies(joined: f64, first: f64, second: f64) -> f64 {
    let d = 2.0 * joined - (first + second);
    if (-NEGATIVE_TOLERANCE..0.0).contains(&d) {
        0.0
    } else {
        clamp_distance(d)
    }
}

/// `d_beta(tau, sigma)` for complete trees over the same alphabet.
pub fn beta_distance(
    tau: &SparseContextTree,
    sigma: &SparseContextTree,
    beta: BetaParam,
) -> Result<f64> {
    let joined = tau.join(sigma)?;
    require_complete(tau)?;
    require_complete(sigma)?;
    Ok(distance_from_entropies(
        entropy_unchecked(&joined, beta),
        entropy_unchecked(tau, beta),
        entropy_unchecked(sigma, beta),
    ))
}
