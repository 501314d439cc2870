//! Contribution index: how much each internal opinion moves the overall
//! expressed opinion.
//!
//! With z = Q s the overall opinion is p = 1^T Q s = g^T s, so
//! g = Q^T 1 (the column sums of Q) measures the marginal effect of each
//! s_i. It can be negative: pushing a widely distrusted node up drags the
//! total down.

use std::collections::BTreeSet;

use nalgebra::DVector;

use crate::dynamics::FundamentalMatrix;
use crate::error::{Error, Result};
use crate::graph::LaplacianSystem;

#[derive(Debug, Clone)]
pub struct ContributionIndex {
    g: DVector<f64>,
    pinned: BTreeSet<usize>,
}

impl ContributionIndex {
    #[cfg(test)]
    pub(crate) fn from_values(g: DVector<f64>) -> Self {
        ContributionIndex {
            g,
            pinned: BTreeSet::new(),
        }
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn get(&self, i: usize) -> f64 {
        self.g[i]
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.len() == 0
    }

    pub fn pinned(&self) -> &BTreeSet<usize> {
        &self.pinned
    }
}

/// Column sums of an already-computed fundamental matrix.
pub fn contribution_index(fm: &FundamentalMatrix) -> ContributionIndex {
    ContributionIndex {
        g: fm.q().row_sum().transpose(),
        pinned: fm.pinned().clone(),
    }
}

/// g from one transposed solve (L_U + I)^T g = 1, without materializing Q.
pub fn contribution_index_from_system(
    ls: &LaplacianSystem,
    pinned: &BTreeSet<usize>,
) -> Result<ContributionIndex> {
    let m = ls.system_matrix(pinned)?;
    let ones = DVector::repeat(ls.n(), 1.0);
    let g = m
        .transpose()
        .lu()
        .solve(&ones)
        .ok_or_else(|| Error::Numerical("singular system matrix".into()))?;
    Ok(ContributionIndex {
        g,
        pinned: pinned.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankBy {
    /// Sort by |g_i| descending: how much leverage a node has either way.
    Absolute,
    /// Sort by g_i descending.
    Signed,
}

/// Nodes with their contribution, ordered per `by`, ties broken by index.
pub fn rank_by_contribution(ci: &ContributionIndex, by: RankBy) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = ci.g.iter().copied().enumerate().collect();
    match by {
        RankBy::Absolute => out.sort_by(|a, b| {
            b.1.abs()
                .total_cmp(&a.1.abs())
                .then_with(|| a.0.cmp(&b.0))
        }),
        RankBy::Signed => out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))),
    }
    out
}
