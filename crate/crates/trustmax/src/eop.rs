//! Budgeted pinning of expressed opinions.
//!
//! Pinning node i fixes z_i = s_i (the node keeps broadcasting its
//! internal opinion, immune to neighbours). Choosing which mu nodes to pin
//! to maximize the overall opinion is combinatorial; the greedy here adds
//! the node with the best one-step gain, which for candidate i under pin
//! set U is
//!
//!   b_i = g_i (s_i - z_i) / q_ii
//!
//! with g = Q^T 1, z = Q s, q_ii the diagonal of the current fundamental
//! matrix. The fast mode evaluates all candidates from those three shared
//! quantities in O(n^2) per iteration; the naive mode instead prices every
//! candidate by an explicit rank-one evaluation (a dense row-times-matrix
//! product each), costing O(n^2) per candidate and O(n^3) per sweep. Both
//! then commit the chosen pin through the same rank-one update of Q.

use std::collections::BTreeSet;

use nalgebra::DVector;

use crate::dynamics::{FundamentalMatrix, OpinionKind, OpinionVector, PIVOT_GUARD};
use crate::error::{Error, Result};
use crate::graph::LaplacianSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EopMode {
    Fast,
    Naive,
}

/// Marginal gain of pinning each currently unpinned node, from the shared
/// g, z, and diag(Q). Entries of already-pinned nodes are 0. Errors on a
/// degenerate diagonal; the greedy driver downgrades that to a skip.
pub fn benefit_vector(fm: &FundamentalMatrix, s: &OpinionVector) -> Result<DVector<f64>> {
    let (b, degenerate) = benefit_entries(fm, s)?;
    if let Some(&i) = degenerate.first() {
        return Err(Error::DegeneratePivot {
            node: i,
            value: fm.diag(i).abs(),
        });
    }
    Ok(b)
}

fn check_eop_inputs(n: usize, s: &OpinionVector) -> Result<()> {
    if s.kind() != OpinionKind::Internal {
        return Err(Error::Usage("pinning takes internal opinions as input".into()));
    }
    if s.len() != n {
        return Err(Error::Usage(format!(
            "opinion vector of length {} on a graph with {n} nodes",
            s.len()
        )));
    }
    Ok(())
}

fn benefit_entries(
    fm: &FundamentalMatrix,
    s: &OpinionVector,
) -> Result<(DVector<f64>, Vec<usize>)> {
    check_eop_inputs(fm.n(), s)?;
    let q = fm.q();
    let g = q.row_sum();
    let z = q * s.values();
    let mut b = DVector::zeros(fm.n());
    let mut degenerate = Vec::new();
    for i in 0..fm.n() {
        if fm.pinned().contains(&i) {
            continue;
        }
        let qii = q[(i, i)];
        if qii.abs() <= PIVOT_GUARD {
            degenerate.push(i);
            continue;
        }
        b[i] = g[i] * (s.get(i) - z[i]) / qii;
    }
    Ok((b, degenerate))
}

/// Pin one more node, returning the updated fundamental matrix. The input
/// is untouched; the greedy uses the in-place variant internally.
pub fn apply_pin(fm: &FundamentalMatrix, node: usize) -> Result<FundamentalMatrix> {
    let mut next = fm.clone();
    next.pin_in_place(node)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EopStep {
    pub node: usize,
    pub benefit: f64,
    pub p_after: f64,
}

#[derive(Debug, Clone)]
pub struct EopPlan {
    /// Pinned nodes in pin order.
    pub order: Vec<usize>,
    pub step_benefits: Vec<f64>,
    /// Overall opinion before any pinning.
    pub p_initial: f64,
    /// Overall opinion after each step.
    pub p_trajectory: Vec<f64>,
    pub total_benefit: f64,
    pub warnings: Vec<String>,
}

/// Stepwise greedy pinner. Exposed so callers can drive it one pin at a
/// time (early stopping, per-iteration timing); `solve_eop` just runs it
/// for a fixed number of steps.
pub struct EopGreedy<'a> {
    ls: &'a LaplacianSystem,
    s: &'a OpinionVector,
    mode: EopMode,
    fm: FundamentalMatrix,
    p: f64,
    warnings: Vec<String>,
}

impl<'a> EopGreedy<'a> {
    pub fn new(ls: &'a LaplacianSystem, s: &'a OpinionVector, mode: EopMode) -> Result<Self> {
        check_eop_inputs(ls.n(), s)?;
        let fm = FundamentalMatrix::compute(ls, &BTreeSet::new())?;
        let p = (fm.q() * s.values()).sum();
        Ok(EopGreedy {
            ls,
            s,
            mode,
            fm,
            p,
            warnings: Vec::new(),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn fm(&self) -> &FundamentalMatrix {
        &self.fm
    }

    pub fn pinned(&self) -> &BTreeSet<usize> {
        self.fm.pinned()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn take_warnings(&mut self) -> Vec<String> {
        std::mem::take(&mut self.warnings)
    }

    /// One greedy iteration: price all candidates, pin the best one.
    /// Ties break toward the lower index; degenerate candidates are
    /// skipped with a warning.
    pub fn step(&mut self) -> Result<EopStep> {
        let n = self.ls.n();
        if self.fm.pinned().len() == n {
            return Err(Error::Usage("every node is already pinned".into()));
        }
        let (best, benefit) = match self.mode {
            EopMode::Fast => self.price_fast()?,
            EopMode::Naive => self.price_naive()?,
        };
        self.fm.pin_in_place(best)?;
        self.p += benefit;
        Ok(EopStep {
            node: best,
            benefit,
            p_after: self.p,
        })
    }

    fn select(&mut self, candidates: impl Iterator<Item = (usize, Option<f64>)>) -> Result<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, b) in candidates {
            match b {
                None => self.warnings.push(format!(
                    "skipping node {i}: degenerate pivot |q_ii| <= {PIVOT_GUARD:e}"
                )),
                Some(b) => {
                    if best.map_or(true, |(_, bb)| b > bb) {
                        best = Some((i, b));
                    }
                }
            }
        }
        best.ok_or_else(|| Error::Numerical("no pinnable candidate left".into()))
    }

    fn price_fast(&mut self) -> Result<(usize, f64)> {
        let (b, degenerate) = benefit_entries(&self.fm, self.s)?;
        let pinned = self.fm.pinned().clone();
        let n = self.ls.n();
        let items = (0..n).filter_map(move |i| {
            if pinned.contains(&i) {
                None
            } else if degenerate.contains(&i) {
                Some((i, None))
            } else {
                Some((i, Some(b[i])))
            }
        });
        self.select(items)
    }

    fn price_naive(&mut self) -> Result<(usize, f64)> {
        let n = self.ls.n();
        let q = self.fm.q();
        let s = self.s.values();
        let mut priced: Vec<(usize, Option<f64>)> = Vec::with_capacity(n);
        for i in 0..n {
            if self.fm.pinned().contains(&i) {
                continue;
            }
            let qii = q[(i, i)];
            if qii.abs() <= PIVOT_GUARD {
                priced.push((i, None));
                continue;
            }
            // Price the rank-one update Q e_i (l_i Q) / q_ii directly:
            // 1^T (Q e_i) * (l_i Q) s / q_ii.
            let mut lrow = DVector::zeros(n);
            for (j, v) in self.ls.row_entries(i) {
                lrow[j] = v;
            }
            let v = q.tr_mul(&lrow);
            let colsum = q.column(i).sum();
            priced.push((i, Some(colsum * v.dot(s) / qii)));
        }
        self.select(priced.into_iter())
    }
}

/// Greedy pin placement for a budget of `mu` nodes.
pub fn solve_eop(
    ls: &LaplacianSystem,
    s: &OpinionVector,
    mu: usize,
    mode: EopMode,
) -> Result<EopPlan> {
    if mu == 0 || mu > ls.n() {
        return Err(Error::Usage(format!(
            "pin budget must be in 1..=n (= {}), got {mu}",
            ls.n()
        )));
    }
    let mut greedy = EopGreedy::new(ls, s, mode)?;
    let p_initial = greedy.p();
    let mut order = Vec::with_capacity(mu);
    let mut step_benefits = Vec::with_capacity(mu);
    let mut p_trajectory = Vec::with_capacity(mu);
    for _ in 0..mu {
        let step = greedy.step()?;
        order.push(step.node);
        step_benefits.push(step.benefit);
        p_trajectory.push(step.p_after);
    }
    Ok(EopPlan {
        order,
        step_benefits,
        p_initial,
        p_trajectory,
        total_benefit: greedy.p() - p_initial,
        warnings: greedy.take_warnings(),
    })
}

/// Try every pin set of size mu with a fresh solve per subset; refuses
/// when there are more than 10^6 subsets. Ties resolve to the
/// lexicographically first subset.
pub fn eop_exhaustive_oracle(
    ls: &LaplacianSystem,
    s: &OpinionVector,
    mu: usize,
) -> Result<(Vec<usize>, f64)> {
    use crate::dynamics::{equilibrium_direct, overall_opinion};

    let n = ls.n();
    if mu == 0 || mu > n {
        return Err(Error::Usage(format!(
            "pin budget must be in 1..=n (= {n}), got {mu}"
        )));
    }
    let mut subsets = 1.0f64;
    for k in 0..mu {
        subsets *= (n - k) as f64 / (k + 1) as f64;
    }
    if subsets > 1e6 {
        return Err(Error::Size(format!(
            "C({n}, {mu}) ~ {subsets:.2e} subsets is past the 1e6 oracle limit"
        )));
    }

    let p_empty = overall_opinion(&equilibrium_direct(ls, s, &BTreeSet::new())?);
    let mut comb: Vec<usize> = (0..mu).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let pinned: BTreeSet<usize> = comb.iter().copied().collect();
        let p = overall_opinion(&equilibrium_direct(ls, s, &pinned)?);
        if best.as_ref().map_or(true, |&(_, bp)| p > bp) {
            best = Some((comb.clone(), p));
        }
        // Next mu-combination of 0..n in lexicographic order.
        let mut k = mu;
        loop {
            if k == 0 {
                let (set, p_best) = best.unwrap();
                return Ok((set, p_best - p_empty));
            }
            k -= 1;
            if comb[k] != k + n - mu {
                comb[k] += 1;
                for j in k + 1..mu {
                    comb[j] = comb[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{equilibrium_direct, overall_opinion};
    use crate::graph::synth::random_graph;
    use crate::graph::{Edge, SignedTrustGraph};
    use crate::rng::SplitMix64;
    use nalgebra::DMatrix;

    fn uniform_s(n: usize, seed: u64) -> OpinionVector {
        let mut rng = SplitMix64::new(seed);
        OpinionVector::internal(DVector::from_fn(n, |_, _| rng.uniform_open())).unwrap()
    }

    #[test]
    fn pair_benefit_and_pin() {
        // Node 0 trusts node 1, s = [1, -1]. Unpinned: z = [0, -1] and
        // p = -1. Pinning 0 restores z_0 = 1 for a gain of exactly 1.
        let g = SignedTrustGraph::new(
            2,
            vec![Edge { src: 0, dst: 1, weight: 1.0 }],
        )
        .unwrap();
        let ls = LaplacianSystem::new(&g);
        let s = OpinionVector::internal_from_slice(&[1.0, -1.0]).unwrap();
        let fm = FundamentalMatrix::compute(&ls, &BTreeSet::new()).unwrap();
        let b = benefit_vector(&fm, &s).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12, "b = {b:?}");
        assert!(b[1].abs() < 1e-12);

        let plan = solve_eop(&ls, &s, 1, EopMode::Fast).unwrap();
        assert_eq!(plan.order, vec![0]);
        assert!((plan.p_initial + 1.0).abs() < 1e-12);
        assert!((plan.p_trajectory[0] - 0.0).abs() < 1e-12);
        assert!((plan.total_benefit - 1.0).abs() < 1e-12);

        let pinned = apply_pin(&fm, 0).unwrap();
        let expect = DMatrix::identity(2, 2);
        assert!((pinned.q() - expect).abs().max() < 1e-12);
    }

    #[test]
    fn benefit_matches_true_one_step_gain() {
        for seed in 0..6 {
            let g = random_graph(25, 0.2, seed + 400).unwrap();
            let ls = LaplacianSystem::new(&g);
            let s = uniform_s(25, seed);
            let fm = FundamentalMatrix::compute(&ls, &BTreeSet::new()).unwrap();
            let b = benefit_vector(&fm, &s).unwrap();
            let p0 = overall_opinion(&equilibrium_direct(&ls, &s, &BTreeSet::new()).unwrap());
            for i in 0..25 {
                let pinned: BTreeSet<usize> = [i].into_iter().collect();
                let p1 = overall_opinion(&equilibrium_direct(&ls, &s, &pinned).unwrap());
                assert!(
                    (b[i] - (p1 - p0)).abs() < 1e-9,
                    "seed {seed} node {i}: b {} vs {}",
                    b[i],
                    p1 - p0
                );
            }
        }
    }

    #[test]
    fn fast_and_naive_agree() {
        for seed in 0..5 {
            let g = random_graph(30, 0.15, seed + 500).unwrap();
            let ls = LaplacianSystem::new(&g);
            let s = uniform_s(30, seed + 11);
            let fast = solve_eop(&ls, &s, 6, EopMode::Fast).unwrap();
            let naive = solve_eop(&ls, &s, 6, EopMode::Naive).unwrap();
            assert_eq!(fast.order, naive.order, "seed {seed}");
            for (a, b) in fast.step_benefits.iter().zip(&naive.step_benefits) {
                assert!((a - b).abs() < 1e-9, "seed {seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn trajectory_matches_direct_recomputation() {
        for seed in 0..4 {
            let g = random_graph(28, 0.2, seed + 600).unwrap();
            let ls = LaplacianSystem::new(&g);
            let s = uniform_s(28, seed + 3);
            let plan = solve_eop(&ls, &s, 8, EopMode::Fast).unwrap();
            let mut pinned = BTreeSet::new();
            for (t, &node) in plan.order.iter().enumerate() {
                pinned.insert(node);
                let p = overall_opinion(&equilibrium_direct(&ls, &s, &pinned).unwrap());
                assert!(
                    (plan.p_trajectory[t] - p).abs() < 1e-8,
                    "seed {seed} step {t}: {} vs {p}",
                    plan.p_trajectory[t]
                );
            }
            let total: f64 = plan.step_benefits.iter().sum();
            assert!((total - plan.total_benefit).abs() < 1e-10);
        }
    }

    #[test]
    fn greedy_finds_optimum_when_budget_is_n() {
        let g = random_graph(10, 0.3, 700).unwrap();
        let ls = LaplacianSystem::new(&g);
        let s = uniform_s(10, 1);
        let plan = solve_eop(&ls, &s, 10, EopMode::Fast).unwrap();
        let p_all: f64 = s.values().sum();
        let last = plan.p_trajectory.last().unwrap();
        assert!((last - p_all).abs() < 1e-9, "{last} vs {p_all}");
    }

    #[test]
    fn oracle_brackets_greedy() {
        for seed in 0..5 {
            let g = random_graph(9, 0.3, seed + 800).unwrap();
            let ls = LaplacianSystem::new(&g);
            let s = uniform_s(9, seed + 21);
            let (_, best) = eop_exhaustive_oracle(&ls, &s, 2).unwrap();
            let plan = solve_eop(&ls, &s, 2, EopMode::Fast).unwrap();
            assert!(
                plan.total_benefit <= best + 1e-9,
                "seed {seed}: greedy {} beat oracle {best}",
                plan.total_benefit
            );
            // First pinned node must be the single best pin.
            let (set1, best1) = eop_exhaustive_oracle(&ls, &s, 1).unwrap();
            assert_eq!(plan.order[0], set1[0]);
            assert!((plan.step_benefits[0] - best1).abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_full_budget_reaches_sum_of_s() {
        let g = random_graph(7, 0.4, 900).unwrap();
        let ls = LaplacianSystem::new(&g);
        let s = uniform_s(7, 5);
        let (_, benefit) = eop_exhaustive_oracle(&ls, &s, 7).unwrap();
        let p0 = overall_opinion(&equilibrium_direct(&ls, &s, &BTreeSet::new()).unwrap());
        let expect = s.values().sum() - p0;
        assert!((benefit - expect).abs() < 1e-10);
    }

    #[test]
    fn oracle_size_guard() {
        let g = random_graph(60, 0.05, 901).unwrap();
        let ls = LaplacianSystem::new(&g);
        let s = uniform_s(60, 6);
        assert!(matches!(
            eop_exhaustive_oracle(&ls, &s, 8),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn budget_bounds_are_enforced() {
        let g = random_graph(5, 0.3, 902).unwrap();
        let ls = LaplacianSystem::new(&g);
        let s = uniform_s(5, 7);
        assert!(matches!(solve_eop(&ls, &s, 0, EopMode::Fast), Err(Error::Usage(_))));
        assert!(matches!(solve_eop(&ls, &s, 6, EopMode::Fast), Err(Error::Usage(_))));
    }
}
