//! Neighbor-joining reconstruction, outgroup and midpoint rooting, and
//! canonical Newick output.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::matrix::DistanceMatrix;

/// Input asymmetry or negativity beyond this is rejected by
/// [`neighbor_join`].
pub const NJ_INPUT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// A phylogeny with labelled leaves and branch lengths, unrooted unless a
/// root node has been placed.
#[derive(Clone, Debug, PartialEq)]
pub struct PhyloTree {
    labels: Vec<Option<String>>,
    edges: Vec<Edge>,
    root: Option<usize>,
}

impl PhyloTree {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn label(&self, node: usize) -> Option<&str> {
        self.labels[node].as_deref()
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn is_rooted(&self) -> bool {
        self.root.is_some()
    }

    /// Leaf labels in node order.
    pub fn leaves(&self) -> Vec<&str> {
        self.labels.iter().filter_map(|l| l.as_deref()).collect()
    }

    pub fn leaf_node(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.as_deref() == Some(label))
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.labels.len()];
        for e in &self.edges {
            adj[e.a].push((e.b, e.length));
            adj[e.b].push((e.a, e.length));
        }
        adj
    }

    /// The unrooted tree: the root node (if any) is removed and its two
    /// edges fused.
    pub fn unrooted(&self) -> PhyloTree {
        let Some(r) = self.root else {
            return self.clone();
        };
        let incident: Vec<&Edge> = self.edges.iter().filter(|e| e.a == r || e.b == r).collect();
        debug_assert_eq!(incident.len(), 2);
        let other = |e: &Edge| if e.a == r { e.b } else { e.a };
        let fused = Edge {
            a: other(incident[0]),
            b: other(incident[1]),
            length: incident[0].length + incident[1].length,
        };
        let remap = |v: usize| if v > r { v - 1 } else { v };
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| e.a != r && e.b != r)
            .copied()
            .chain(std::iter::once(fused))
            .collect();
        for e in &mut edges {
            e.a = remap(e.a);
            e.b = remap(e.b);
        }
        let mut labels = self.labels.clone();
        labels.remove(r);
        PhyloTree {
            labels,
            edges,
            root: None,
        }
    }

    /// Places a root on edge `edge_index`, `offset` away from its `a` end.
    fn rooted_on_edge(mut self, edge_index: usize, offset: f64) -> PhyloTree {
        let e = self.edges[edge_index];
        let offset = offset.clamp(0.0, e.length);
        let r = self.labels.len();
        self.labels.push(None);
        self.edges[edge_index] = Edge {
            a: r,
            b: e.a,
            length: offset,
        };
        self.edges.push(Edge {
            a: r,
            b: e.b,
            length: e.length - offset,
        });
        self.root = Some(r);
        self
    }

    /// Roots the tree at the midpoint of the longest leaf-to-leaf path.
    /// Ties between paths go to the lexicographically smallest label pair.
    pub fn root_at_midpoint(&self) -> PhyloTree {
        let base = self.unrooted();
        let adj = base.adjacency();
        let leaves: Vec<usize> = (0..base.labels.len()).filter(|&v| base.labels[v].is_some()).collect();
        let mut best: Option<(f64, &str, &str, usize, usize)> = None;
        for &u in &leaves {
            let (dist, _) = base.distances_from(u, &adj);
            for &v in &leaves {
                let (lu, lv) = (base.label(u).unwrap(), base.label(v).unwrap());
                if lu >= lv {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((d, a, b, _, _)) => dist[v] > d || (dist[v] == d && (lu, lv) < (a, b)),
                };
                if better {
                    best = Some((dist[v], lu, lv, u, v));
                }
            }
        }
        let Some((total, _, _, from, to)) = best else {
            return base;
        };
        let (_, parent) = base.distances_from(from, &adj);
        let mut path = vec![to];
        while *path.last().unwrap() != from {
            path.push(parent[*path.last().unwrap()].unwrap());
        }
        path.reverse();
        let half = total / 2.0;
        let mut walked = 0.0;
        for w in path.windows(2) {
            let (x, y) = (w[0], w[1]);
            let idx = base
                .edges
                .iter()
                .position(|e| (e.a == x && e.b == y) || (e.a == y && e.b == x))
                .expect("path edge exists");
            let len = base.edges[idx].length;
            if walked + len >= half {
                let from_x = half - walked;
                let offset = if base.edges[idx].a == x { from_x } else { len - from_x };
                return base.rooted_on_edge(idx, offset);
            }
            walked += len;
        }
        unreachable!("midpoint lies on the longest path")
    }

    fn distances_from(&self, start: usize, adj: &[Vec<(usize, f64)>]) -> (Vec<f64>, Vec<Option<usize>>) {
        let mut dist = vec![f64::NAN; self.labels.len()];
        let mut parent = vec![None; self.labels.len()];
        dist[start] = 0.0;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &(w, len) in &adj[v] {
                if dist[w].is_nan() {
                    dist[w] = dist[v] + len;
                    parent[w] = Some(v);
                    stack.push(w);
                }
            }
        }
        (dist, parent)
    }

    /// Leaf sets below every non-root node of a rooted tree, or every
    /// split (as the side without the smallest label) of an unrooted one,
    /// paired with the length of the edge above / across.
    pub fn bipartitions(&self) -> Vec<(BTreeSet<String>, f64)> {
        let base = self.unrooted();
        let all: BTreeSet<String> = base.leaves().into_iter().map(String::from).collect();
        let Some(smallest) = all.iter().next().cloned() else {
            return Vec::new();
        };
        let adj = base.adjacency();
        let mut out = Vec::new();
        for e in &base.edges {
            let side = base.leaves_beyond(e.b, e.a, &adj);
            let side = if side.contains(&smallest) {
                all.difference(&side).cloned().collect()
            } else {
                side
            };
            out.push((side, e.length));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn leaves_beyond(&self, node: usize, from: usize, adj: &[Vec<(usize, f64)>]) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(node, from)];
        while let Some((v, p)) = stack.pop() {
            if let Some(l) = &self.labels[v] {
                out.insert(l.clone());
            }
            for &(w, _) in &adj[v] {
                if w != p {
                    stack.push((w, v));
                }
            }
        }
        out
    }

    /// Whether `taxa` is exactly the leaf set below some node of this
    /// rooted tree. Always false for an unrooted tree.
    pub fn is_monophyletic<S: AsRef<str>>(&self, taxa: &[S]) -> bool {
        let Some(root) = self.root else {
            return false;
        };
        let want: BTreeSet<String> = taxa.iter().map(|t| t.as_ref().to_string()).collect();
        let adj = self.adjacency();
        let mut stack = vec![(root, usize::MAX)];
        while let Some((v, p)) = stack.pop() {
            if self.leaves_beyond(v, p, &adj) == want {
                return true;
            }
            for &(w, _) in &adj[v] {
                if w != p {
                    stack.push((w, v));
                }
            }
        }
        false
    }

    fn display_root(&self, adj: &[Vec<(usize, f64)>]) -> usize {
        if let Some(r) = self.root {
            return r;
        }
        let smallest = (0..self.labels.len())
            .filter(|&v| self.labels[v].is_some())
            .min_by(|&a, &b| self.labels[a].cmp(&self.labels[b]))
            .expect("tree has leaves");
        adj[smallest].first().map_or(smallest, |&(w, _)| w)
    }

    fn min_label(&self, node: usize, from: usize, adj: &[Vec<(usize, f64)>]) -> String {
        self.leaves_beyond(node, from, adj)
            .into_iter()
            .next()
            .unwrap_or_default()
    }

    fn ordered_children(&self, node: usize, from: usize, adj: &[Vec<(usize, f64)>]) -> Vec<(usize, f64)> {
        let mut kids: Vec<(String, usize, f64)> = adj[node]
            .iter()
            .filter(|&&(w, _)| w != from)
            .map(|&(w, len)| (self.min_label(w, node, adj), w, len))
            .collect();
        kids.sort_by(|a, b| a.0.cmp(&b.0));
        kids.into_iter().map(|(_, w, len)| (w, len)).collect()
    }

    /// Canonical Newick with 6-decimal branch lengths.
    ///
    /// Children are ordered by the smallest leaf label beneath them. A
    /// rooted tree is written from its root. An unrooted tree with two
    /// leaves is written as `(A:x/2,B:x/2);`; larger unrooted trees are
    /// written from the internal node next to the smallest leaf label, giving
    /// a top-level trifurcation.
    pub fn to_newick(&self) -> String {
        let adj = self.adjacency();
        let leaf_count = self.labels.iter().filter(|l| l.is_some()).count();
        if leaf_count == 1 && self.edges.is_empty() {
            return format!("{};", newick_label(self.labels[0].as_deref().unwrap_or("")));
        }
        if self.root.is_none() && leaf_count == 2 {
            return self.root_at_midpoint().to_newick();
        }
        let start = self.display_root(&adj);
        let mut out = String::new();
        self.write_subtree(start, usize::MAX, &adj, &mut out);
        out.push(';');
        out
    }

    fn write_subtree(&self, node: usize, from: usize, adj: &[Vec<(usize, f64)>], out: &mut String) {
        let kids = self.ordered_children(node, from, adj);
        if !kids.is_empty() {
            out.push('(');
            for (k, (w, len)) in kids.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                self.write_subtree(*w, node, adj, out);
                write!(out, ":{}", fmt_length(*len)).unwrap();
            }
            out.push(')');
        }
        if let Some(l) = &self.labels[node] {
            out.push_str(&newick_label(l));
        }
    }

    /// Tab-separated `parent child length` lines (with a header) walked
    /// from the same node as [`to_newick`](Self::to_newick). Internal
    /// nodes are named `node<k>` in visiting order.
    pub fn to_edge_list(&self) -> String {
        let adj = self.adjacency();
        let mut names = vec![String::new(); self.labels.len()];
        let mut next = 0;
        let mut name = |v: usize, names: &mut Vec<String>| {
            if names[v].is_empty() {
                names[v] = match &self.labels[v] {
                    Some(l) => l.clone(),
                    None => {
                        next += 1;
                        format!("node{next}")
                    }
                };
            }
            names[v].clone()
        };
        let mut out = String::from("parent\tchild\tlength\n");
        if self.edges.is_empty() {
            return out;
        }
        let start = self.display_root(&adj);
        let mut stack = vec![(start, usize::MAX)];
        while let Some((v, p)) = stack.pop() {
            let parent_name = name(v, &mut names);
            let kids = self.ordered_children(v, p, &adj);
            for &(w, len) in &kids {
                let child_name = name(w, &mut names);
                writeln!(out, "{parent_name}\t{child_name}\t{}", fmt_length(len)).unwrap();
            }
            for &(w, _) in kids.iter().rev() {
                stack.push((w, v));
            }
        }
        out
    }
}

fn fmt_length(len: f64) -> String {
    format!("{:.6}", len.max(0.0) + 0.0)
}

fn newick_label(label: &str) -> String {
    let needs_quotes = label.is_empty()
        || label
            .chars()
            .any(|c| c.is_whitespace() || "()[]':;,".contains(c));
    if needs_quotes {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

/// Saitou-Nei neighbor joining.
///
/// At each step the pair minimizing `Q(i,j) = (r-2) d(i,j) - R_i - R_j` is
/// joined, scanning pairs in index order so the first minimum wins. The
/// joined node takes the smaller index. A negative branch length is set to
/// zero and its deficit is taken from the sister branch, preserving their
/// sum.
pub fn neighbor_join(matrix: &DistanceMatrix) -> Result<PhyloTree> {
    let n = matrix.len();
    if n < 2 {
        return Err(Error::InvalidMatrix("neighbor joining needs at least 2 taxa".into()));
    }
    matrix.check_metric(NJ_INPUT_TOLERANCE)?;

    let mut labels: Vec<Option<String>> = matrix.labels().iter().cloned().map(Some).collect();
    let mut edges = Vec::with_capacity(2 * n - 3);
    let mut active: Vec<usize> = (0..n).collect();
    let mut d: Vec<Vec<f64>> = (0..n).map(|i| matrix.row(i).to_vec()).collect();

    while active.len() > 2 {
        let r = active.len();
        let totals: Vec<f64> = d.iter().map(|row| row.iter().sum()).collect();
        let mut best = (f64::INFINITY, 0, 1);
        for i in 0..r {
            for j in i + 1..r {
                let q = (r as f64 - 2.0) * d[i][j] - totals[i] - totals[j];
                if q < best.0 {
                    best = (q, i, j);
                }
            }
        }
        let (_, f, g) = best;
        let dfg = d[f][g];
        let mut len_f = 0.5 * dfg + (totals[f] - totals[g]) / (2.0 * (r as f64 - 2.0));
        let mut len_g = dfg - len_f;
        if len_f < 0.0 {
            len_g += len_f;
            len_f = 0.0;
        }
        if len_g < 0.0 {
            len_f += len_g;
            len_g = 0.0;
        }
        let u = labels.len();
        labels.push(None);
        edges.push(Edge {
            a: u,
            b: active[f],
            length: len_f.max(0.0),
        });
        edges.push(Edge {
            a: u,
            b: active[g],
            length: len_g.max(0.0),
        });
        let merged: Vec<f64> = (0..r)
            .map(|k| if k == f { 0.0 } else { 0.5 * (d[f][k] + d[g][k] - dfg) })
            .collect();
        for k in 0..r {
            d[f][k] = merged[k];
            d[k][f] = merged[k];
        }
        d.remove(g);
        for row in &mut d {
            row.remove(g);
        }
        active[f] = u;
        active.remove(g);
    }
    edges.push(Edge {
        a: active[0],
        b: active[1],
        length: d[0][1].max(0.0),
    });
    Ok(PhyloTree {
        labels,
        edges,
        root: None,
    })
}

/// Roots the tree at the midpoint of the edge leading to `taxon`.
pub fn root_at_outgroup(tree: &PhyloTree, taxon: &str) -> Result<PhyloTree> {
    let base = tree.unrooted();
    let leaf = base
        .leaf_node(taxon)
        .ok_or_else(|| Error::UnknownTaxon(taxon.to_string()))?;
    let idx = base
        .edges
        .iter()
        .position(|e| e.a == leaf || e.b == leaf)
        .ok_or_else(|| Error::UnknownTaxon(taxon.to_string()))?;
    let len = base.edges[idx].length;
    Ok(base.rooted_on_edge(idx, 0.5 * len))
}
