//! Pairing two distance matrices over the same taxa, e.g. for scatter plots.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::matrix::DistanceMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct PairRow {
    pub taxon_i: String,
    pub taxon_j: String,
    pub d_first: f64,
    pub d_second: f64,
}

/// One row per unordered taxon pair, ordered by the first matrix's taxa.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedDistances {
    pub rows: Vec<PairRow>,
}

impl PairedDistances {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV with header `taxon_i,taxon_j,d1,d2` and 6-decimal values.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["taxon_i", "taxon_j", "d1", "d2"])?;
        for r in &self.rows {
            w.write_record([
                r.taxon_i.as_str(),
                r.taxon_j.as_str(),
                &format!("{:.6}", r.d_first + 0.0),
                &format!("{:.6}", r.d_second + 0.0),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Pairs up entries of two matrices over the same taxon set (in any order).
pub fn compare_matrices(first: &DistanceMatrix, second: &DistanceMatrix) -> Result<PairedDistances> {
    let a: BTreeSet<&str> = first.labels().iter().map(String::as_str).collect();
    let b: BTreeSet<&str> = second.labels().iter().map(String::as_str).collect();
    if a != b {
        let diff: Vec<&str> = a.symmetric_difference(&b).copied().collect();
        return Err(Error::TaxonMismatch(format!(
            "present in only one matrix: {}",
            diff.join(", ")
        )));
    }
    let to_second: Vec<usize> = first
        .labels()
        .iter()
        .map(|l| second.index_of(l).expect("same taxon set"))
        .collect();
    let n = first.len();
    let mut rows = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            rows.push(PairRow {
                taxon_i: first.labels()[i].clone(),
                taxon_j: first.labels()[j].clone(),
                d_first: first.get(i, j),
                d_second: second.get(to_second[i], to_second[j]),
            });
        }
    }
    Ok(PairedDistances { rows })
}
