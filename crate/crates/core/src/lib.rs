//! Sparse context trees estimated from symbol sequences, a beta-entropy
//! distance between trees, and neighbor-joining phylogenies built from the
//! resulting distance matrices.
//!
//! The pipeline is: [`estimator::estimate_tree`] per sequence, then
//! [`matrix::distance_matrix`] over the trees, then
//! [`phylo::neighbor_join`] and [`phylo::PhyloTree::to_newick`].

pub mod alphabet;
pub mod compare;
pub mod context;
pub mod entropy;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod fasta;
pub mod matrix;
pub mod phylo;
pub mod tree;

pub use alphabet::{Alphabet, SymbolSet};
pub use compare::{compare_matrices, PairedDistances};
pub use context::{context_intersect, context_weight, SparseContext};
pub use entropy::{beta_distance, beta_entropy, BetaParam};
pub use error::{Error, Result};
pub use estimator::{
    estimate_tree, generate_sequence, predictive_distribution, scan_counts, ContextCounts,
    EstimatedModel, EstimatorConfig,
};
pub use exec::Execution;
pub use fasta::{parse_fasta, SequenceRecord};
pub use matrix::{distance_matrix, distance_matrix_with, DistanceMatrix};
pub use phylo::{neighbor_join, root_at_outgroup, PhyloTree};
pub use tree::{canonicalize, tree_join, validate_tree, SparseContextTree, ValidationReport};
