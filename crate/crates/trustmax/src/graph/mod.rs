//! Directed signed trust graphs and their (absolute-degree) Laplacian.

pub mod io;
pub mod spectral;
pub mod synth;

use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One directed trust relation. `weight` lies in [-1, 1] and is nonzero;
/// negative weight means distrust.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// A directed signed weighted graph with contiguous node indices `0..n`.
///
/// Nodes keep the identifier they had in the source data (`original_id`),
/// which is what all file output uses; indices are an internal detail.
#[derive(Debug, Clone)]
pub struct SignedTrustGraph {
    n: usize,
    /// Out-neighbours per node, sorted by target index.
    out_rows: Vec<Vec<(usize, f64)>>,
    edge_count: usize,
    original_ids: Vec<String>,
    id_index: HashMap<String, usize>,
    /// Sum of |w_ij| over the out-edges of i (the Laplacian diagonal).
    row_connectivity: Vec<f64>,
    /// Sum of |w_ji| over the in-edges of i: how much absolute trust i receives.
    trust_received_abs: Vec<f64>,
    /// Same, without the absolute value.
    trust_received_signed: Vec<f64>,
    dropped_self_loops: usize,
    merged_duplicates: usize,
}

impl SignedTrustGraph {
    /// Build a graph from already-contiguous indices. Rejects self-loops,
    /// duplicate ordered pairs, and weights outside [-1, 1] \ {0}; the
    /// loader in [`io`] applies the configurable policies before calling this.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::with_ids(n, edges, ids, 0, 0)
    }

    pub(crate) fn with_ids(
        n: usize,
        edges: Vec<Edge>,
        original_ids: Vec<String>,
        dropped_self_loops: usize,
        merged_duplicates: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("graph needs at least one node".into()));
        }
        if original_ids.len() != n {
            return Err(Error::Validation(format!(
                "{} ids for {} nodes",
                original_ids.len(),
                n
            )));
        }
        let mut out_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in &edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::Validation(format!(
                    "edge ({}, {}) out of range for n = {n}",
                    e.src, e.dst
                )));
            }
            if e.src == e.dst {
                return Err(Error::Validation(format!("self-loop at node {}", e.src)));
            }
            if !e.weight.is_finite() || e.weight == 0.0 || e.weight.abs() > 1.0 {
                return Err(Error::Validation(format!(
                    "weight {} on edge ({}, {}) outside [-1, 1] \\ {{0}}",
                    e.weight, e.src, e.dst
                )));
            }
            out_rows[e.src].push((e.dst, e.weight));
        }
        for (i, row) in out_rows.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(j, _)| j);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Validation(format!(
                    "duplicate edges out of node {i}"
                )));
            }
        }

        let mut row_connectivity = vec![0.0; n];
        let mut trust_received_abs = vec![0.0; n];
        let mut trust_received_signed = vec![0.0; n];
        for (i, row) in out_rows.iter().enumerate() {
            for &(j, w) in row {
                row_connectivity[i] += w.abs();
                trust_received_abs[j] += w.abs();
                trust_received_signed[j] += w;
            }
        }

        let mut id_index = HashMap::with_capacity(n);
        for (i, id) in original_ids.iter().enumerate() {
            if id_index.insert(id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate node id {id:?}")));
            }
        }

        Ok(SignedTrustGraph {
            n,
            edge_count: edges.len(),
            out_rows,
            original_ids,
            id_index,
            row_connectivity,
            trust_received_abs,
            trust_received_signed,
            dropped_self_loops,
            merged_duplicates,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Out-edges of `i` as `(target, weight)`, sorted by target.
    pub fn out_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.out_rows[i]
    }

    pub fn weight(&self, src: usize, dst: usize) -> Option<f64> {
        let row = &self.out_rows[src];
        row.binary_search_by_key(&dst, |&(j, _)| j)
            .ok()
            .map(|k| row[k].1)
    }

    /// All edges, sorted by (src, dst).
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (src, row) in self.out_rows.iter().enumerate() {
            for &(dst, weight) in row {
                out.push(Edge { src, dst, weight });
            }
        }
        out
    }

    pub fn original_id(&self, i: usize) -> &str {
        &self.original_ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    /// Laplacian diagonal entry d_ii = sum of |w_ij| over out-edges.
    pub fn row_connectivity(&self, i: usize) -> f64 {
        self.row_connectivity[i]
    }

    /// Absolute trust received per node (column sums of |A|).
    pub fn trust_received(&self) -> &[f64] {
        &self.trust_received_abs
    }

    /// Net trust received per node (column sums of A).
    pub fn trust_received_signed(&self) -> &[f64] {
        &self.trust_received_signed
    }

    pub fn dropped_self_loops(&self) -> usize {
        self.dropped_self_loops
    }

    pub fn merged_duplicates(&self) -> usize {
        self.merged_duplicates
    }

    /// Dense adjacency with a_ij = w_ij.
    pub fn adjacency_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (i, row) in self.out_rows.iter().enumerate() {
            for &(j, w) in row {
                a[(i, j)] = w;
            }
        }
        a
    }
}

/// The signed Laplacian `L = D - A` with `d_ii = sum_j |a_ij|`, kept in
/// sparse row form. This is the operator behind every solve in the crate:
/// equilibria and fundamental matrices come from `L_U + I` where the rows
/// of pinned nodes are replaced by identity rows.
#[derive(Debug, Clone)]
pub struct LaplacianSystem {
    n: usize,
    /// Off-diagonal entries per row: (column j, -w_ij), sorted by column.
    off_diag: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
}

impl LaplacianSystem {
    pub fn new(g: &SignedTrustGraph) -> Self {
        let n = g.n();
        let mut off_diag = Vec::with_capacity(n);
        let mut degrees = Vec::with_capacity(n);
        for i in 0..n {
            off_diag.push(g.out_edges(i).iter().map(|&(j, w)| (j, -w)).collect());
            degrees.push(g.row_connectivity(i));
        }
        LaplacianSystem {
            n,
            off_diag,
            degrees,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    /// Row i of L including the diagonal, sparse, sorted by column.
    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        let mut row = Vec::with_capacity(self.off_diag[i].len() + 1);
        let mut placed = false;
        for &(j, v) in &self.off_diag[i] {
            if !placed && j > i {
                row.push((i, self.degrees[i]));
                placed = true;
            }
            row.push((j, v));
        }
        if !placed {
            row.push((i, self.degrees[i]));
        }
        row
    }

    pub fn lbar_dense(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            l[(i, i)] = self.degrees[i];
            for &(j, v) in &self.off_diag[i] {
                l[(i, j)] = v;
            }
        }
        l
    }

    /// Dense `L_U + I`: rows in `pinned` are replaced by identity rows.
    /// Strictly row diagonally dominant with gap 1, hence invertible.
    pub fn system_matrix(&self, pinned: &BTreeSet<usize>) -> Result<DMatrix<f64>> {
        for &i in pinned {
            if i >= self.n {
                return Err(Error::Usage(format!(
                    "pinned node {i} out of range for n = {}",
                    self.n
                )));
            }
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            if pinned.contains(&i) {
                m[(i, i)] = 1.0;
                continue;
            }
            m[(i, i)] = self.degrees[i] + 1.0;
            for &(j, v) in &self.off_diag[i] {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }
}
