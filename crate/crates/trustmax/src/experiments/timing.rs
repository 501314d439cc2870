//! Per-iteration timing of the two greedy pinning modes.

use std::time::Instant;

use serde::Serialize;

use crate::dynamics::OpinionVector;
use crate::eop::{EopGreedy, EopMode};
use crate::error::{Error, Result};
use crate::experiments::sample::{sample_opinions, DistKind, OpinionDistribution};
use crate::graph::{LaplacianSystem, SignedTrustGraph};
use crate::rng::derive_seed;

/// Beyond this many nodes the naive sweep is left out: one full pricing
/// pass costs a dense matrix-vector product per candidate and stops being
/// worth the wait long before the fast path does.
pub const NAIVE_TIMING_CAP: usize = 5000;

pub fn naive_allowed(n: usize) -> bool {
    n <= NAIVE_TIMING_CAP
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingReport {
    pub nodes: usize,
    pub edges: usize,
    /// Greedy iterations timed per mode.
    pub iterations: usize,
    pub fast_ms_per_iter: f64,
    /// None when the graph exceeds the naive-mode node cap.
    pub naive_ms_per_iter: Option<f64>,
    /// naive / fast.
    pub ratio: Option<f64>,
}

/// Time `mu` greedy pinning iterations in fast mode, and in naive mode as
/// well while the graph is small enough, reporting the median
/// per-iteration wall time. Opinions are drawn uniform from a seed
/// derived off `seed`, so reruns price the same instances (the times
/// themselves still vary, of course).
pub fn timing_comparison(g: &SignedTrustGraph, mu: usize, seed: u64) -> Result<TimingReport> {
    let n = g.n();
    if mu == 0 || mu > n {
        return Err(Error::Usage(format!(
            "iteration count must be in 1..={n}, got {mu}"
        )));
    }
    let dist = OpinionDistribution {
        kind: DistKind::Uniform,
        seed: derive_seed(seed, "timing"),
    };
    let s = sample_opinions(&dist, g);
    let ls = LaplacianSystem::new(g);

    let fast = median_step_ms(&ls, &s, EopMode::Fast, mu)?;
    let naive = if naive_allowed(n) {
        Some(median_step_ms(&ls, &s, EopMode::Naive, mu)?)
    } else {
        log::warn!(
            "skipping the naive timing pass: {n} nodes exceed the {NAIVE_TIMING_CAP}-node guard"
        );
        None
    };
    Ok(TimingReport {
        nodes: n,
        edges: g.edge_count(),
        iterations: mu,
        fast_ms_per_iter: fast,
        naive_ms_per_iter: naive,
        // Clock resolution floor so a sub-tick fast step cannot yield inf.
        ratio: naive.map(|nv| nv / fast.max(1e-6)),
    })
}

fn median_step_ms(
    ls: &LaplacianSystem,
    s: &OpinionVector,
    mode: EopMode,
    mu: usize,
) -> Result<f64> {
    let mut engine = EopGreedy::new(ls, s, mode)?;
    let mut times = Vec::with_capacity(mu);
    for _ in 0..mu {
        let t = Instant::now();
        engine.step()?;
        times.push(t.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    Ok(if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    })
}
