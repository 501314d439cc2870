//! Opinion vectors, equilibria and the fundamental matrix.
//!
//! Each node i holds a fixed internal opinion s_i in [-1, 1] and an
//! expressed opinion z_i that relaxes to the weighted average
//!
//!   z_i = (s_i + sum_j w_ij z_j) / (1 + sum_j |w_ij|).
//!
//! Stacked, the equilibrium solves (L_U + I) z = s where pinned rows (set U)
//! are identity rows, so z_i = s_i for i in U. The inverse Q = (L_U + I)^-1
//! is the fundamental matrix; its column sums form the contribution index
//! and its diagonal drives the pinning updates in the `eop` module.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{LaplacianSystem, SignedTrustGraph};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Equilibria of internal-valid inputs stay in [-1, 1] up to solver noise;
/// anything past this slack is treated as a numerical failure.
pub const RANGE_SLACK: f64 = 1e-9;

/// Rank-one pin updates divide by q_ii; below this the pivot is degenerate.
pub const PIVOT_GUARD: f64 = 1e-12;

/// Dense fundamental matrices above this size are refused unless
/// `TRUSTMAX_MEMCAP_MB` grants more memory.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpinionKind {
    Internal,
    Expressed,
}

/// A per-node opinion assignment tagged with what it means. Internal
/// opinions are validated into [-1, 1]; expressed ones are solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionVector {
    kind: OpinionKind,
    values: DVector<f64>,
}

impl OpinionVector {
    pub fn internal(values: DVector<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v.abs() > 1.0 {
                return Err(Error::Validation(format!(
                    "internal opinion {v} at node index {i} outside [-1, 1]"
                )));
            }
        }
        Ok(OpinionVector {
            kind: OpinionKind::Internal,
            values,
        })
    }

    pub fn internal_from_slice(values: &[f64]) -> Result<Self> {
        Self::internal(DVector::from_column_slice(values))
    }

    pub fn expressed(values: DVector<f64>) -> Self {
        OpinionVector {
            kind: OpinionKind::Expressed,
            values,
        }
    }

    pub fn kind(&self) -> OpinionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Read a `node,opinion` CSV as internal opinions. Every node of the
    /// graph must appear exactly once (any order); ids are original ids.
    pub fn read_csv(path: &Path, g: &SignedTrustGraph) -> Result<Self> {
        let file = File::open(path)?;
        let mut values = vec![f64::NAN; g.n()];
        let mut seen = vec![false; g.n()];
        let mut saw_data_line = false;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected 2 fields, got {}", fields.len()),
                });
            }
            let value: f64 = match fields[1].parse() {
                Ok(v) => v,
                Err(_) if !saw_data_line => continue, // header
                Err(_) => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("opinion {:?} is not a number", fields[1]),
                    })
                }
            };
            saw_data_line = true;
            let i = g.index_of(fields[0]).ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("unknown node id {:?}", fields[0]),
            })?;
            if seen[i] {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("node {:?} listed twice", fields[0]),
                });
            }
            seen[i] = true;
            values[i] = value;
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(Error::Validation(format!(
                "no opinion for node {:?}",
                g.original_id(i)
            )));
        }
        Self::internal(DVector::from_vec(values))
    }

    /// Write `node,opinion` with original ids, ordered by node index.
    pub fn write_csv(&self, path: &Path, g: &SignedTrustGraph) -> Result<()> {
        if self.len() != g.n() {
            return Err(Error::Usage(format!(
                "opinion vector of length {} on a graph with {} nodes",
                self.len(),
                g.n()
            )));
        }
        let mut out = String::from("node,opinion\n");
        for i in 0..g.n() {
            out.push_str(&format!("{},{}\n", g.original_id(i), self.values[i]));
        }
        let mut f = File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Sum of expressed opinions, the quantity both optimization problems push up.
pub fn overall_opinion(z: &OpinionVector) -> f64 {
    z.values.sum()
}

fn check_inputs(n: usize, s: &OpinionVector, pinned: &BTreeSet<usize>) -> Result<()> {
    if s.kind() != OpinionKind::Internal {
        return Err(Error::Usage(
            "equilibrium needs internal opinions as input".into(),
        ));
    }
    if s.len() != n {
        return Err(Error::Usage(format!(
            "opinion vector of length {} on a graph with {n} nodes",
            s.len()
        )));
    }
    if let Some(&i) = pinned.iter().next_back() {
        if i >= n {
            return Err(Error::Usage(format!(
                "pinned node {i} out of range for n = {n}"
            )));
        }
    }
    Ok(())
}

fn check_range(z: &DVector<f64>) -> Result<()> {
    for (i, &v) in z.iter().enumerate() {
        if !v.is_finite() || v.abs() > 1.0 + RANGE_SLACK {
            return Err(Error::Numerical(format!(
                "equilibrium entry {v} at node index {i} escaped [-1, 1]"
            )));
        }
    }
    Ok(())
}

/// Equilibrium via one LU solve of (L_U + I) z = s. Pinned entries are set
/// to s_i exactly afterwards.
pub fn equilibrium_direct(
    ls: &LaplacianSystem,
    s: &OpinionVector,
    pinned: &BTreeSet<usize>,
) -> Result<OpinionVector> {
    check_inputs(ls.n(), s, pinned)?;
    let m = ls.system_matrix(pinned)?;
    let mut z = m
        .lu()
        .solve(s.values())
        .ok_or_else(|| Error::Numerical("singular equilibrium system".into()))?;
    for &i in pinned {
        z[i] = s.get(i);
    }
    check_range(&z)?;
    Ok(OpinionVector::expressed(z))
}

/// Equilibrium via synchronous fixed-point sweeps of the update rule,
/// starting from z = s. Converges for every admissible graph (the
/// iteration matrix has infinity norm max_i d_i/(1+d_i) < 1); returns the
/// number of sweeps used.
pub fn equilibrium_iterative(
    g: &SignedTrustGraph,
    s: &OpinionVector,
    pinned: &BTreeSet<usize>,
    tol: f64,
    max_iters: usize,
) -> Result<(OpinionVector, usize)> {
    check_inputs(g.n(), s, pinned)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Usage(format!("tolerance must be > 0, got {tol}")));
    }
    let n = g.n();
    let mut z = s.values().clone();
    let mut next = z.clone();
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iters {
        residual = 0.0;
        for i in 0..n {
            if pinned.contains(&i) {
                continue;
            }
            let mut acc = s.get(i);
            for &(j, w) in g.out_edges(i) {
                acc += w * z[j];
            }
            let v = acc / (1.0 + g.row_connectivity(i));
            residual = residual.max((v - z[i]).abs());
            next[i] = v;
        }
        std::mem::swap(&mut z, &mut next);
        if residual < tol {
            check_range(&z)?;
            return Ok((OpinionVector::expressed(z), iter));
        }
    }
    Err(Error::Convergence {
        iters: max_iters,
        residual,
    })
}

/// Quadratic cost node i pays at the profile (s, z): disagreement with its
/// own internal opinion plus trust-weighted disagreement with neighbours
/// (sign-adjusted, so distrusted neighbours are cheapest to oppose).
pub fn node_cost(g: &SignedTrustGraph, s: &OpinionVector, z: &OpinionVector, i: usize) -> f64 {
    let zi = z.get(i);
    let mut cost = (zi - s.get(i)).powi(2);
    for &(j, w) in g.out_edges(i) {
        cost += w.abs() * (zi - w.signum() * z.get(j)).powi(2);
    }
    cost
}

fn dense_cap() -> usize {
    match std::env::var("TRUSTMAX_MEMCAP_MB") {
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(mb) if mb > 0.0 => (mb * 1024.0 * 1024.0 / 8.0).sqrt() as usize,
            _ => DEFAULT_DENSE_CAP,
        },
        Err(_) => DEFAULT_DENSE_CAP,
    }
}

/// Dense inverse Q = (L_U + I)^-1 together with the pin set it belongs to.
/// Rows of pinned nodes are held at identity rows exactly.
#[derive(Debug, Clone)]
pub struct FundamentalMatrix {
    q: DMatrix<f64>,
    pinned: BTreeSet<usize>,
}

impl FundamentalMatrix {
    pub fn compute(ls: &LaplacianSystem, pinned: &BTreeSet<usize>) -> Result<Self> {
        let n = ls.n();
        let cap = dense_cap();
        if n > cap {
            return Err(Error::Size(format!(
                "dense fundamental matrix for n = {n} exceeds cap {cap}; \
                 set TRUSTMAX_MEMCAP_MB to allow more"
            )));
        }
        let m = ls.system_matrix(pinned)?;
        let mut q = m
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular system matrix".into()))?;
        for &i in pinned {
            q.row_mut(i).fill(0.0);
            q[(i, i)] = 1.0;
        }
        Ok(FundamentalMatrix {
            q,
            pinned: pinned.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn pinned(&self) -> &BTreeSet<usize> {
        &self.pinned
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.q[(i, i)]
    }

    /// Extend the pin set by one node with a rank-one update:
    ///
    ///   Q' = Q + (Q e_i) (l_i Q) / q_ii,
    ///
    /// where l_i is row i of L. Because row i of (L_U + I) is still the
    /// original row while i is unpinned, l_i Q = e_i^T - Q_i: and the
    /// denominator 1 - l_i Q e_i equals q_ii, so the update only reads
    /// row and column i of Q. Row i is forced to e_i^T afterwards.
    pub(crate) fn pin_in_place(&mut self, node: usize) -> Result<()> {
        let n = self.n();
        if node >= n {
            return Err(Error::Usage(format!(
                "pinned node {node} out of range for n = {n}"
            )));
        }
        if self.pinned.contains(&node) {
            return Err(Error::Usage(format!("node {node} is already pinned")));
        }
        let qii = self.q[(node, node)];
        if qii.abs() <= PIVOT_GUARD {
            return Err(Error::DegeneratePivot {
                node,
                value: qii.abs(),
            });
        }
        let u = self.q.column(node).clone_owned();
        let mut v = -self.q.row(node).transpose();
        v[node] += 1.0;
        self.q.ger(1.0 / qii, &u, &v, 1.0);
        self.q.row_mut(node).fill(0.0);
        self.q[(node, node)] = 1.0;
        self.pinned.insert(node);
        Ok(())
    }
}

pub fn fundamental_matrix(ls: &LaplacianSystem, pinned: &BTreeSet<usize>) -> Result<FundamentalMatrix> {
    FundamentalMatrix::compute(ls, pinned)
}
