//! Internal-opinion distributions for experiments.
//!
//! All five samplers draw in node-index order with a fixed number of
//! generator calls per node, so (distribution, seed, graph) pins the
//! vector exactly.

use nalgebra::DVector;

use crate::dynamics::OpinionVector;
use crate::error::{Error, Result};
use crate::graph::SignedTrustGraph;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistKind {
    /// s_i ~ U(-1, 1).
    Uniform,
    /// s_i ~ N(0, 1), clamped to [-1, 1] (about 31.7% of mass clamps).
    Normal,
    /// |s_i| = u^(1/alpha) for u ~ U(0, 1], i.e. pdf proportional to
    /// x^(alpha-1) on (0, 1]; sign flipped with probability 1/2.
    /// alpha = 1 degenerates to a uniform magnitude.
    PowerLaw(f64),
    /// s_i = (received trust of i) / (max received trust), sign flipped
    /// with probability 1/2. Nodes receiving no trust get 0.
    DegreeCorrelated,
}

impl DistKind {
    /// Parse "uniform", "normal", "powerlaw<alpha>" (e.g. "powerlaw2"),
    /// or "degree".
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(DistKind::Uniform),
            "normal" => Ok(DistKind::Normal),
            "degree" => Ok(DistKind::DegreeCorrelated),
            other => {
                if let Some(rest) = other.strip_prefix("powerlaw") {
                    let alpha: f64 = rest
                        .parse()
                        .map_err(|_| Error::Usage(format!("unknown distribution {other:?}")))?;
                    if !(alpha.is_finite() && alpha > 0.0) {
                        return Err(Error::Usage(format!(
                            "power-law exponent must be > 0, got {alpha}"
                        )));
                    }
                    Ok(DistKind::PowerLaw(alpha))
                } else {
                    Err(Error::Usage(format!("unknown distribution {other:?}")))
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            DistKind::Uniform => "uniform".into(),
            DistKind::Normal => "normal".into(),
            DistKind::PowerLaw(alpha) => format!("powerlaw{alpha}"),
            DistKind::DegreeCorrelated => "degree".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OpinionDistribution {
    pub kind: DistKind,
    pub seed: u64,
}

/// The five distributions every experiment sweeps by default, with
/// per-distribution seeds derived from a base seed.
pub fn standard_distributions(base_seed: u64) -> Vec<OpinionDistribution> {
    [
        DistKind::Uniform,
        DistKind::Normal,
        DistKind::PowerLaw(1.0),
        DistKind::PowerLaw(2.0),
        DistKind::DegreeCorrelated,
    ]
    .into_iter()
    .map(|kind| OpinionDistribution {
        kind,
        seed: crate::rng::derive_seed(base_seed, &kind.name()),
    })
    .collect()
}

pub fn sample_opinions(dist: &OpinionDistribution, g: &SignedTrustGraph) -> OpinionVector {
    let n = g.n();
    let mut rng = SplitMix64::new(dist.seed);
    let values: DVector<f64> = match dist.kind {
        DistKind::Uniform => DVector::from_fn(n, |_, _| rng.uniform_open()),
        DistKind::Normal => DVector::from_fn(n, |_, _| rng.gauss().clamp(-1.0, 1.0)),
        DistKind::PowerLaw(alpha) => DVector::from_fn(n, |_, _| {
            let magnitude = rng.open01().powf(1.0 / alpha);
            if rng.open01() < 0.5 {
                -magnitude
            } else {
                magnitude
            }
        }),
        DistKind::DegreeCorrelated => {
            let trust = g.trust_received();
            let max = trust.iter().cloned().fold(0.0f64, f64::max);
            if max == 0.0 {
                log::warn!(
                    "degree-correlated sampling on a graph with no received trust; \
                     all opinions are 0"
                );
            }
            DVector::from_fn(n, |i, _| {
                // The sign draw happens for every node, so draw positions
                // do not depend on the trust values.
                let negate = rng.open01() < 0.5;
                if max == 0.0 {
                    return 0.0;
                }
                let magnitude = trust[i] / max;
                if negate {
                    -magnitude
                } else {
                    magnitude
                }
            })
        }
    };
    OpinionVector::internal(values).expect("samplers stay inside [-1, 1]")
}
