//! Seeded random graphs for experiments and stress tests.

use crate::error::{Error, Result};
use crate::graph::{Edge, SignedTrustGraph};
use crate::rng::SplitMix64;

/// Directed G(n, p) with signed weights: every ordered pair (i, j), i != j,
/// independently gets an edge with probability `density`, weighted uniform
/// on (-1, 1) excluding exact zero. Draw order is row-major over (i, j),
/// one probability draw per pair plus weight draws, so a seed fully pins
/// the graph.
pub fn random_graph(n: usize, density: f64, seed: u64) -> Result<SignedTrustGraph> {
    if n == 0 {
        return Err(Error::Validation("graph needs at least one node".into()));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Usage(format!("density must be in [0, 1], got {density}")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if rng.open01() < density {
                let mut w = rng.uniform_open();
                while w == 0.0 {
                    w = rng.uniform_open();
                }
                edges.push(Edge {
                    src: i,
                    dst: j,
                    weight: w,
                });
            }
        }
    }
    SignedTrustGraph::with_ids(
        n,
        edges,
        (0..n).map(|i| i.to_string()).collect(),
        0,
        0,
    )
}
