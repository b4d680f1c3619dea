//! Labelled distance matrices, all-pairs tree distances and the PHYLIP
//! square format.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::entropy::{distance_from_entropies, entropy_unchecked, BetaParam};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::tree::SparseContextTree;

/// PHYLIP names occupy a fixed 10-character field.
pub const PHYLIP_NAME_WIDTH: usize = 10;

/// Asymmetry tolerated (and averaged away) when reading a matrix.
pub const READ_SYMMETRY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from labels and rows. Checks shape, label
    /// uniqueness and finiteness only; see [`check_metric`](Self::check_metric).
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyInput("distance matrix has no taxa".into()));
        }
        check_unique(&labels)?;
        if rows.len() != n {
            return Err(Error::InvalidMatrix(format!("{n} labels but {} rows", rows.len())));
        }
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {} ({}) has {} entries, expected {n}",
                    i + 1,
                    labels[i],
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidMatrix(format!(
                    "row {} ({}) has non-finite entry {v}",
                    i + 1,
                    labels[i]
                )));
            }
            values.extend(row);
        }
        Ok(Self { labels, values })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Verifies symmetry, zero diagonal and nonnegativity within `tol`.
    pub fn check_metric(&self, tol: f64) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.get(i, i).abs() > tol {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry for {} is {}",
                    self.labels[i],
                    self.get(i, i)
                )));
            }
            for j in 0..n {
                let v = self.get(i, j);
                if v < -tol {
                    return Err(Error::InvalidMatrix(format!(
                        "negative distance {v} between {} and {}",
                        self.labels[i], self.labels[j]
                    )));
                }
                if (v - self.get(j, i)).abs() > tol {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetric entries between {} and {}: {v} vs {}",
                        self.labels[i],
                        self.labels[j],
                        self.get(j, i)
                    )));
                }
            }
        }
        Ok(())
    }

    /// PHYLIP square format: taxon count, then one row per taxon with the
    /// name padded or truncated to 10 characters and values to 6 decimals.
    ///
    /// Fails if two names coincide after truncation.
    pub fn to_phylip(&self) -> Result<String> {
        let names: Vec<String> = self.labels.iter().map(|l| phylip_name(l)).collect();
        check_unique(&names).map_err(|_| {
            Error::InvalidMatrix("taxon names collide after truncation to 10 characters".into())
        })?;
        let mut out = String::new();
        writeln!(out, "{}", self.len()).unwrap();
        for (i, name) in names.iter().enumerate() {
            write!(out, "{name:<width$}", width = PHYLIP_NAME_WIDTH).unwrap();
            for &v in self.row(i) {
                write!(out, " {:.6}", v + 0.0).unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses PHYLIP square format.
    ///
    /// Names are read from the fixed 10-character field when the rest of the
    /// line holds exactly `n` numbers, otherwise from the first
    /// whitespace-delimited token. Asymmetry up to 1e-6 is averaged away;
    /// larger asymmetry is an error.
    pub fn from_phylip(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (header_line, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty matrix file".into(),
        })?;
        let n: usize = header
            .split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Parse {
                line: header_line + 1,
                message: format!("expected a positive taxon count, found {:?}", header.trim()),
            })?;
        let mut labels = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if rows.len() == n {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("more rows than the declared {n} taxa"),
                });
            }
            let (name, row) = parse_phylip_row(line, n, lineno)?;
            labels.push(name);
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("declared {n} taxa but found {} rows", rows.len()),
            });
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > READ_SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidMatrix(format!(
                        "entries ({}, {}) = {a} and ({}, {}) = {b} differ by more than {READ_SYMMETRY_TOLERANCE}",
                        labels[i], labels[j], labels[j], labels[i]
                    )));
                }
                let mean = 0.5 * (a + b);
                rows[i][j] = mean;
                rows[j][i] = mean;
            }
        }
        Self::new(labels, rows)
    }
}

fn phylip_name(label: &str) -> String {
    label.chars().take(PHYLIP_NAME_WIDTH).collect()
}

fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn parse_values(fields: &[&str], lineno: usize) -> Result<Vec<f64>> {
    fields
        .iter()
        .enumerate()
        .map(|(k, f)| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("entry {} ({f:?}) is not a number", k + 1),
                })
        })
        .collect()
}

fn parse_phylip_row(line: &str, n: usize, lineno: usize) -> Result<(String, Vec<f64>)> {
    let chars: Vec<char> = line.chars().collect();
    if chars.len() > PHYLIP_NAME_WIDTH {
        let name: String = chars[..PHYLIP_NAME_WIDTH].iter().collect::<String>().trim().to_string();
        let rest: String = chars[PHYLIP_NAME_WIDTH..].iter().collect();
        let fields: Vec<&str> = rest.split_whitespace().collect();
        if !name.is_empty() && fields.len() == n {
            if let Ok(values) = parse_values(&fields, lineno) {
                return Ok((name, values));
            }
        }
    }
    let mut tokens = line.split_whitespace();
    let name = tokens.next().unwrap_or_default().to_string();
    let fields: Vec<&str> = tokens.collect();
    if fields.len() != n {
        return Err(Error::Parse {
            line: lineno,
            message: format!("row for {name:?} has {} entries, expected {n}", fields.len()),
        });
    }
    Ok((name, parse_values(&fields, lineno)?))
}

/// All-pairs beta-distances between labelled trees.
pub fn distance_matrix(
    trees: &[(String, SparseContextTree)],
    beta: BetaParam,
) -> Result<DistanceMatrix> {
    distance_matrix_with(trees, beta, Execution::default())
}

/// As [`distance_matrix`], with explicit control over parallelism.
///
/// Incomplete trees are completed first. Each tree's entropy is computed
/// once; each unordered pair `i < j` is an independent work item written to
/// cells `(i, j)` and `(j, i)`.
pub fn distance_matrix_with(
    trees: &[(String, SparseContextTree)],
    beta: BetaParam,
    exec: Execution,
) -> Result<DistanceMatrix> {
    if trees.is_empty() {
        return Err(Error::EmptyInput("no trees to compare".into()));
    }
    let labels: Vec<String> = trees.iter().map(|(l, _)| l.clone()).collect();
    check_unique(&labels)?;
    let alphabet = trees[0].1.alphabet();
    if let Some((_, t)) = trees.iter().find(|(_, t)| t.alphabet() != alphabet) {
        return Err(Error::AlphabetMismatch {
            left: alphabet.as_string(),
            right: t.alphabet().as_string(),
        });
    }
    let completed = exec
        .map_slice(trees, |(_, t)| t.completed())
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let entropies = exec.map_slice(&completed, |t| entropy_unchecked(t, beta));

    let n = trees.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let distances = exec
        .map_slice(&pairs, |&(i, j)| -> Result<f64> {
            let joined = completed[i].join(&completed[j])?;
            Ok(distance_from_entropies(
                entropy_unchecked(&joined, beta),
                entropies[i],
                entropies[j],
            ))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut rows = vec![vec![0.0; n]; n];
    for (&(i, j), d) in pairs.iter().zip(distances) {
        rows[i][j] = d;
        rows[j][i] = d;
    }
    DistanceMatrix::new(labels, rows)
}
