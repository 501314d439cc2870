//! Opinion dynamics and opinion maximization on signed trust graphs.
//!
//! Nodes hold internal opinions in [-1, 1] and express opinions that
//! equilibrate under trust-weighted averaging over a directed signed
//! graph. The crate computes equilibria, contribution indices, and
//! budget-optimal interventions of two kinds: changing internal opinions
//! (`iop`) and pinning expressed opinions (`eop`), plus the heuristic
//! baselines and experiment harness used to compare them.

pub mod baselines;
pub mod contribution;
pub mod dynamics;
pub mod eop;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod iop;
pub mod rng;

pub use contribution::{contribution_index, contribution_index_from_system, ContributionIndex};
pub use dynamics::{
    equilibrium_direct, equilibrium_iterative, fundamental_matrix, node_cost, overall_opinion,
    FundamentalMatrix, OpinionKind, OpinionVector,
};
pub use eop::{apply_pin, benefit_vector, solve_eop, EopMode, EopPlan};
pub use error::{Error, Result};
pub use experiments::{
    run_experiment, sample_opinions, timing_comparison, DatasetSpec, ExperimentConfig,
    ExperimentReport, OpinionDistribution,
};
pub use graph::{LaplacianSystem, SignedTrustGraph};
pub use iop::{solve_iop, IopPlan};

pub use nalgebra;
