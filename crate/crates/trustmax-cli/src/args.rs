//! Flag definitions and the loading helpers they map to.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use trustmax::error::{Error, Result};
use trustmax::experiments::sample::DistKind;
use trustmax::experiments::{sample_opinions, OpinionDistribution};
use trustmax::graph::io::{
    load_edge_list, DuplicatePolicy, EdgeFormat, LoadOptions, SelfLoopPolicy,
};
use trustmax::graph::synth::random_graph;
use trustmax::rng::derive_seed;
use trustmax::{OpinionVector, SignedTrustGraph};

#[derive(Parser)]
#[command(
    name = "trustmax",
    version,
    about = "Opinion dynamics and budgeted opinion maximization on signed trust graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Equilibrium expressed opinions and their sum p.
    Solve(SolveArgs),
    /// Contribution index of every node.
    Contribution(ContributionArgs),
    /// Optimal budgeted internal-opinion changes.
    Iop(IopArgs),
    /// Greedy expressed-opinion pinning.
    Eop(EopArgs),
    /// One heuristic baseline on either problem.
    Baseline(BaselineArgs),
    /// Benefit-table sweep over budgets, methods and distributions.
    Experiment(ExperimentArgs),
    /// Per-iteration wall time of fast vs naive pinning.
    Timing(TimingArgs),
    /// Load a graph and report size, weights and the spectral bracket.
    Validate(ValidateArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    /// Seed for every random draw (synthesis, sampling, rand baseline).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Machine-readable JSON on stdout instead of the human summary.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct GraphArgs {
    /// Edge-list file.
    #[arg(short = 'g', long)]
    pub graph: Option<PathBuf>,
    /// Edge-list format: csv (src,dst,weight) or snap_rating
    /// (SOURCE,TARGET,RATING,TIME).
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Divide raw weights by this (default 1 for csv, 10 for snap_rating).
    #[arg(long)]
    pub normalize: Option<f64>,
    /// What to do with self loops: drop or reject.
    #[arg(long, default_value = "drop")]
    pub self_loops: String,
    /// What to do with repeated (src,dst) pairs: keep_last or reject.
    #[arg(long, default_value = "keep_last")]
    pub duplicates: String,
    /// Generate a seeded random graph with this many nodes instead of
    /// loading one.
    #[arg(long, value_name = "N", conflicts_with = "graph")]
    pub synthetic: Option<usize>,
    /// Edge probability for --synthetic.
    #[arg(long, default_value_t = 0.05)]
    pub density: f64,
}

impl GraphArgs {
    pub fn load_options(&self) -> Result<LoadOptions> {
        Ok(LoadOptions {
            format: EdgeFormat::parse(&self.format)?,
            normalize_divisor: self.normalize,
            self_loops: match self.self_loops.as_str() {
                "drop" => SelfLoopPolicy::Drop,
                "reject" => SelfLoopPolicy::Reject,
                other => {
                    return Err(Error::Usage(format!(
                        "--self-loops takes drop or reject, got {other:?}"
                    )))
                }
            },
            duplicates: match self.duplicates.as_str() {
                "keep_last" => DuplicatePolicy::KeepLast,
                "reject" => DuplicatePolicy::Reject,
                other => {
                    return Err(Error::Usage(format!(
                        "--duplicates takes keep_last or reject, got {other:?}"
                    )))
                }
            },
        })
    }

    pub fn load(&self, seed: u64) -> Result<SignedTrustGraph> {
        if let Some(n) = self.synthetic {
            return random_graph(n, self.density, derive_seed(seed, "graph"));
        }
        match &self.graph {
            Some(path) => load_edge_list(path, &self.load_options()?).map_err(|e| in_file(path, e)),
            None => Err(Error::Usage(
                "provide a graph file (-g) or --synthetic <N>".into(),
            )),
        }
    }
}

/// Prefix file-level errors with the path so the user knows which input broke.
fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    }
}

#[derive(Args)]
pub struct OpinionArgs {
    /// Internal opinions as CSV (node,opinion), one row per node.
    #[arg(short = 's', long)]
    pub opinions: Option<PathBuf>,
    /// Sample internal opinions instead: uniform, normal, powerlaw<a>
    /// (e.g. powerlaw2), or degree.
    #[arg(long, conflicts_with = "opinions")]
    pub dist: Option<String>,
}

impl OpinionArgs {
    pub fn load(&self, g: &SignedTrustGraph, seed: u64) -> Result<OpinionVector> {
        match (&self.opinions, &self.dist) {
            (Some(path), None) => OpinionVector::read_csv(path, g).map_err(|e| in_file(path, e)),
            (None, Some(name)) => {
                let kind = DistKind::parse(name)?;
                let dist = OpinionDistribution {
                    seed: derive_seed(seed, &kind.name()),
                    kind,
                };
                Ok(sample_opinions(&dist, g))
            }
            _ => Err(Error::Usage(
                "provide internal opinions with -s <file> or --dist <name>".into(),
            )),
        }
    }
}

#[derive(Args)]
pub struct OutputArgs {
    /// Directory for output files, created if absent.
    #[arg(short = 'o', long, default_value = "./trustmax_out")]
    pub out: PathBuf,
    /// Overwrite files already present in the output directory.
    #[arg(long)]
    pub force: bool,
}

impl OutputArgs {
    /// Resolve a file inside the output directory, refusing to clobber
    /// existing files unless --force was given.
    pub fn path_for(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        if path.exists() && !self.force {
            return Err(Error::Usage(format!(
                "{} already exists; pass --force to overwrite",
                path.display()
            )));
        }
        Ok(path)
    }
}

#[derive(Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub opinions: OpinionArgs,
    /// Pin this node's expressed opinion to its internal one (repeatable).
    #[arg(long = "pin", value_name = "NODE")]
    pub pins: Vec<usize>,
    /// Use fixed-point iteration instead of the direct solve.
    #[arg(long)]
    pub iterative: bool,
    /// Convergence tolerance for --iterative.
    #[arg(long, default_value_t = trustmax::dynamics::DEFAULT_TOL)]
    pub tol: f64,
    /// Iteration cap for --iterative.
    #[arg(long, default_value_t = trustmax::dynamics::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct ContributionArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// How many top nodes to display.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Ranking order: abs (leverage either way) or signed.
    #[arg(long, default_value = "abs")]
    pub rank_by: String,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct IopArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub opinions: OpinionArgs,
    /// Total l1 budget for internal-opinion changes.
    #[arg(long)]
    pub budget: f64,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct EopArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub opinions: OpinionArgs,
    /// Number of nodes to pin.
    #[arg(long)]
    pub budget: usize,
    /// Pricing mode: fast (rank-one updates) or naive (full sweeps).
    #[arg(long, default_value = "fast")]
    pub mode: String,
    /// Stop pinning once the best remaining step gains nothing.
    #[arg(long)]
    pub stop_when_nonpositive: bool,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub opinions: OpinionArgs,
    /// Which problem the ordering is spent on: iop or eop.
    #[arg(long)]
    pub problem: String,
    /// Heuristic ordering: rand, trust, io, eo (iop) or rand, io, iots (eop).
    #[arg(long)]
    pub heuristic: String,
    /// l1 budget (iop) or whole number of pins (eop).
    #[arg(long)]
    pub budget: f64,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// JSON experiment config; replaces the inline flags below.
    #[arg(
        long,
        conflicts_with_all = ["graph", "synthetic", "problem", "budgets", "dists", "methods"]
    )]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// iop or eop.
    #[arg(long)]
    pub problem: Option<String>,
    /// Comma-separated ascending budgets, e.g. --budgets 10,50,100.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Vec<f64>,
    /// Comma-separated distribution names (default: all five).
    #[arg(long, value_delimiter = ',')]
    pub dists: Vec<String>,
    /// Comma-separated methods (default: solver plus every heuristic).
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct TimingArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Greedy iterations to time per mode.
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Largest node count for which eigenvalues are computed.
    #[arg(long, default_value_t = trustmax::graph::spectral::DEFAULT_SPECTRAL_CAP)]
    pub spectral_cap: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}
