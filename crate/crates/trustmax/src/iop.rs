//! Budgeted modification of internal opinions.
//!
//! Given a total l1 budget mu, choose a perturbation ds with
//! s + ds in [-1, 1]^n and ||ds||_1 <= mu maximizing the equilibrium
//! overall opinion. Since p = g^T (s + ds), the problem is a fractional
//! knapsack on |g|: saturate nodes in descending |g_i| toward sign(g_i)
//! until the budget runs out. That greedy is exactly optimal, which the
//! grid/LP oracle below double-checks on small instances.

use std::collections::BTreeSet;

use nalgebra::DVector;

use crate::contribution::{contribution_index_from_system, ContributionIndex};
use crate::dynamics::{OpinionKind, OpinionVector};
use crate::error::{Error, Result};
use crate::graph::LaplacianSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct IopStep {
    pub node: usize,
    /// Signed change applied to s_node.
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct IopPlan {
    pub delta_s: DVector<f64>,
    pub steps: Vec<IopStep>,
    /// Budget actually used (can be under mu when everything saturates).
    pub spent: f64,
    /// Predicted gain g^T delta_s, equal to the realized change of the
    /// overall opinion.
    pub benefit: f64,
}

fn check_iop_inputs(ci: &ContributionIndex, s: &OpinionVector, mu: f64) -> Result<()> {
    if s.kind() != OpinionKind::Internal {
        return Err(Error::Usage("opinion changes apply to internal opinions".into()));
    }
    if s.len() != ci.len() {
        return Err(Error::Usage(format!(
            "opinion vector of length {} against contribution index of length {}",
            s.len(),
            ci.len()
        )));
    }
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::Usage(format!("budget must be >= 0, got {mu}")));
    }
    Ok(())
}

fn spend(
    order: &[usize],
    ci: &ContributionIndex,
    s: &OpinionVector,
    mu: f64,
    stop_at_zero: bool,
) -> IopPlan {
    let n = ci.len();
    let mut delta_s = DVector::zeros(n);
    let mut steps = Vec::new();
    let mut remaining = mu;
    let mut spent = 0.0;
    let mut benefit = 0.0;
    for &i in order {
        if remaining <= 0.0 {
            break;
        }
        let gi = ci.get(i);
        if gi == 0.0 {
            if stop_at_zero {
                break;
            }
            continue;
        }
        let sign = gi.signum();
        let headroom = 1.0 - sign * s.get(i);
        if headroom <= 0.0 {
            continue;
        }
        let x = headroom.min(remaining);
        delta_s[i] = sign * x;
        steps.push(IopStep { node: i, delta: sign * x });
        remaining -= x;
        spent += x;
        benefit += gi.abs() * x;
    }
    IopPlan {
        delta_s,
        steps,
        spent,
        benefit,
    }
}

/// Greedy budget spend in descending |g_i|, ties by index. Nodes already
/// saturated in the profitable direction cost nothing and are skipped;
/// once g_i = 0 is reached the remaining budget cannot help and is kept.
pub fn solve_iop(ci: &ContributionIndex, s: &OpinionVector, mu: f64) -> Result<IopPlan> {
    check_iop_inputs(ci, s, mu)?;
    let n = ci.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        ci.get(b)
            .abs()
            .total_cmp(&ci.get(a).abs())
            .then_with(|| a.cmp(&b))
    });
    Ok(spend(&order, ci, s, mu, true))
}

/// Spend the budget along a caller-provided node order (the heuristics in
/// `baselines` go through here). Per-node rules match the solver, but
/// zero-contribution nodes are merely skipped since later entries of an
/// arbitrary order can still be useful.
pub fn solve_iop_along_order(
    order: &[usize],
    ci: &ContributionIndex,
    s: &OpinionVector,
    mu: f64,
) -> Result<IopPlan> {
    check_iop_inputs(ci, s, mu)?;
    let mut seen = vec![false; ci.len()];
    for &i in order {
        if i >= ci.len() {
            return Err(Error::Usage(format!(
                "node {i} out of range for n = {}",
                ci.len()
            )));
        }
        if seen[i] {
            return Err(Error::Usage(format!("node {i} listed twice in the order")));
        }
        seen[i] = true;
    }
    Ok(spend(order, ci, s, mu, false))
}

/// Benefit of the unconstrained optimum (mu >= 2n always reaches it):
/// every node saturated toward sign(g_i).
pub fn saturated_benefit(ci: &ContributionIndex, s: &OpinionVector) -> f64 {
    (0..ci.len())
        .map(|i| {
            let gi = ci.get(i);
            gi.abs() * (1.0 - gi.signum() * s.get(i))
        })
        .sum()
}

/// Exhaustive cross-check for small instances, independent of the greedy:
/// the best objective over (a) every split of the budget into `grid`
/// equal quanta across nodes and (b) the LP relaxation solved by simplex.
/// Both bound the optimum from below; the LP attains it.
pub fn iop_oracle(ls: &LaplacianSystem, s: &OpinionVector, mu: f64, grid: usize) -> Result<f64> {
    let n = ls.n();
    if n > 8 {
        return Err(Error::Size(format!("oracle is exponential; n = {n} > 8")));
    }
    if grid == 0 || grid > 21 {
        return Err(Error::Usage(format!("grid must be in 1..=21, got {grid}")));
    }
    let ci = contribution_index_from_system(ls, &BTreeSet::new())?;
    check_iop_inputs(&ci, s, mu)?;

    // Grid search over weak compositions of the budget.
    let unit = mu / grid as f64;
    let mut alloc = vec![0usize; n];
    let mut best_grid = 0.0f64;
    fn walk(
        alloc: &mut Vec<usize>,
        node: usize,
        left: usize,
        unit: f64,
        ci: &ContributionIndex,
        s: &OpinionVector,
        best: &mut f64,
    ) {
        if node + 1 == alloc.len() {
            alloc[node] = left;
            let mut value = 0.0;
            for (i, &k) in alloc.iter().enumerate() {
                let gi = ci.get(i);
                let headroom = 1.0 - gi.signum() * s.get(i);
                value += gi.abs() * headroom.min(k as f64 * unit);
            }
            *best = best.max(value);
            return;
        }
        for k in 0..=left {
            alloc[node] = k;
            walk(alloc, node + 1, left - k, unit, ci, s, best);
        }
    }
    walk(&mut alloc, 0, grid, unit, &ci, s, &mut best_grid);

    // LP relaxation: ds_i = up_i - dn_i with box bounds and one l1 row.
    let mut problem = minilp::Problem::new(minilp::OptimizationDirection::Maximize);
    let mut l1_row = Vec::with_capacity(2 * n);
    for i in 0..n {
        let gi = ci.get(i);
        let up = problem.add_var(gi, (0.0, 1.0 - s.get(i)));
        let dn = problem.add_var(-gi, (0.0, 1.0 + s.get(i)));
        l1_row.push((up, 1.0));
        l1_row.push((dn, 1.0));
    }
    problem.add_constraint(&l1_row, minilp::ComparisonOp::Le, mu);
    let lp = problem
        .solve()
        .map_err(|e| Error::Numerical(format!("oracle LP failed: {e}")))?
        .objective();

    Ok(best_grid.max(lp))
}
