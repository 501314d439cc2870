//! Experiment harness: budget sweeps of the solvers against the
//! heuristic baselines, with CSV/JSON/SVG artifacts.
//!
//! A run is pinned by (dataset, problem, seed): opinion samples, random
//! orders and synthetic graphs all derive their seeds from the config
//! seed, so `report.csv` and `summary.json` are byte-identical across
//! repeat runs. Wall times go to a separate `timings.csv` precisely
//! because they are not reproducible.
//!
//! Every benefit cell is recomputed end to end (perturb or pin, solve the
//! equilibrium directly, difference the overall opinion) and the run
//! aborts if the solver's claim drifts past `CROSS_CHECK_TOL`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    rank_nodes, run_eop_heuristic, run_iop_heuristic, validate_pair, HeuristicName, ProblemKind,
};
use crate::contribution::{contribution_index_from_system, ContributionIndex};
use crate::dynamics::{equilibrium_direct, overall_opinion, OpinionVector};
use crate::eop::{solve_eop, EopMode, EopPlan};
use crate::error::{Error, Result};
use crate::graph::io::{load_edge_list, EdgeFormat, LoadOptions};
use crate::graph::synth::random_graph;
use crate::graph::{LaplacianSystem, SignedTrustGraph};
use crate::iop::{solve_iop, IopPlan};
use crate::rng::derive_seed;

pub mod sample;
pub mod svg;
pub mod timing;

pub use sample::{sample_opinions, standard_distributions, DistKind, OpinionDistribution};
pub use timing::{timing_comparison, TimingReport, NAIVE_TIMING_CAP};

/// Reported benefits must match an independent recomputation this tightly.
pub const CROSS_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum DatasetSpec {
    File {
        name: String,
        path: PathBuf,
        options: LoadOptions,
    },
    Synthetic {
        n: usize,
        density: f64,
        seed: u64,
    },
}

impl DatasetSpec {
    pub fn file(name: &str, path: impl Into<PathBuf>, options: LoadOptions) -> Self {
        DatasetSpec::File {
            name: name.to_string(),
            path: path.into(),
            options,
        }
    }

    pub fn synthetic(n: usize, density: f64, seed: u64) -> Self {
        DatasetSpec::Synthetic { n, density, seed }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSpec::File { name, .. } => name.clone(),
            DatasetSpec::Synthetic { n, .. } => format!("synthetic{n}"),
        }
    }

    pub fn load(&self) -> Result<SignedTrustGraph> {
        match self {
            DatasetSpec::File { path, options, .. } => load_edge_list(path, options),
            DatasetSpec::Synthetic { n, density, seed } => random_graph(*n, *density, *seed),
        }
    }
}

/// A column of the benefit table: the solver for the configured problem,
/// or one of the heuristic orderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Solver,
    Heuristic(HeuristicName),
}

impl Method {
    pub fn parse(name: &str, problem: ProblemKind) -> Result<Self> {
        match (name, problem) {
            ("siop", ProblemKind::Iop) | ("seop", ProblemKind::Eop) => Ok(Method::Solver),
            ("siop", _) | ("seop", _) => Err(Error::Usage(format!(
                "method {name:?} does not solve problem {:?}",
                problem.as_str()
            ))),
            _ => {
                let h = HeuristicName::parse(name)?;
                validate_pair(problem, h)?;
                Ok(Method::Heuristic(h))
            }
        }
    }

    pub fn name(&self, problem: ProblemKind) -> &'static str {
        match self {
            Method::Solver => match problem {
                ProblemKind::Iop => "siop",
                ProblemKind::Eop => "seop",
            },
            Method::Heuristic(h) => h.as_str(),
        }
    }
}

/// Distributions by name, each seeded off `seed` and its canonical name,
/// so a name list plus one seed pins every sample.
pub fn distributions_from_names<S: AsRef<str>>(
    names: &[S],
    seed: u64,
) -> Result<Vec<OpinionDistribution>> {
    names
        .iter()
        .map(|nm| {
            let kind = DistKind::parse(nm.as_ref())?;
            Ok(OpinionDistribution {
                seed: derive_seed(seed, &kind.name()),
                kind,
            })
        })
        .collect()
}

/// Solver plus every heuristic defined for the problem.
pub fn default_methods(problem: ProblemKind) -> Vec<Method> {
    match problem {
        ProblemKind::Iop => vec![
            Method::Solver,
            Method::Heuristic(HeuristicName::Rand),
            Method::Heuristic(HeuristicName::Trust),
            Method::Heuristic(HeuristicName::Io),
            Method::Heuristic(HeuristicName::Eo),
        ],
        ProblemKind::Eop => vec![
            Method::Solver,
            Method::Heuristic(HeuristicName::Rand),
            Method::Heuristic(HeuristicName::Io),
            Method::Heuristic(HeuristicName::Iots),
        ],
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub problem: ProblemKind,
    pub distributions: Vec<OpinionDistribution>,
    /// Ascending budgets; opinion-change budgets are any nonnegative
    /// reals, pin budgets must be whole node counts. A budget of 0 is
    /// allowed and yields benefit-0 rows without invoking a solver.
    pub budgets: Vec<f64>,
    pub methods: Vec<Method>,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Standard sweep: all five distributions, solver plus every
    /// heuristic, seeds derived from `seed`.
    pub fn new(dataset: DatasetSpec, problem: ProblemKind, budgets: Vec<f64>, seed: u64) -> Self {
        ExperimentConfig {
            dataset,
            problem,
            distributions: standard_distributions(seed),
            budgets,
            methods: default_methods(problem),
            seed,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| Error::Usage(format!("bad experiment config: {e}")))?;
        let problem = ProblemKind::parse(&raw.problem)?;
        let seed = raw.seed;
        let dataset = raw.dataset.resolve(seed)?;
        let distributions = match raw.distributions {
            None => standard_distributions(seed),
            Some(names) => distributions_from_names(&names, seed)?,
        };
        let methods = match raw.methods {
            None => default_methods(problem),
            Some(names) => names
                .iter()
                .map(|nm| Method::parse(nm, problem))
                .collect::<Result<_>>()?,
        };
        let config = ExperimentConfig {
            dataset,
            problem,
            distributions,
            budgets: raw.budgets,
            methods,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.is_empty() {
            return Err(Error::Usage("no budgets given".into()));
        }
        for &b in &self.budgets {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Usage(format!("budgets must be >= 0, got {b}")));
            }
            if self.problem == ProblemKind::Eop && b.fract() != 0.0 {
                return Err(Error::Usage(format!(
                    "pin budgets count nodes and must be whole numbers, got {b}"
                )));
            }
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage("budgets must be strictly ascending".into()));
        }
        if self.distributions.is_empty() {
            return Err(Error::Usage("no opinion distributions given".into()));
        }
        let mut dist_names: Vec<String> =
            self.distributions.iter().map(|d| d.kind.name()).collect();
        dist_names.sort();
        if dist_names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Usage("duplicate opinion distribution".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Usage("no methods given".into()));
        }
        let mut method_names: Vec<&str> = self
            .methods
            .iter()
            .map(|m| m.name(self.problem))
            .collect();
        method_names.sort_unstable();
        if method_names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Usage("duplicate method".into()));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: RawDataset,
    problem: String,
    distributions: Option<Vec<String>>,
    budgets: Vec<f64>,
    methods: Option<Vec<String>>,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    path: Option<String>,
    name: Option<String>,
    format: Option<String>,
    normalize: Option<f64>,
    synthetic: Option<RawSynthetic>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynthetic {
    n: usize,
    density: f64,
    seed: Option<u64>,
}

impl RawDataset {
    fn resolve(self, experiment_seed: u64) -> Result<DatasetSpec> {
        match (self.path, self.synthetic) {
            (Some(_), Some(_)) => Err(Error::Usage(
                "dataset takes either a path or a synthetic block, not both".into(),
            )),
            (None, None) => Err(Error::Usage(
                "dataset needs a path or a synthetic block".into(),
            )),
            (Some(path), None) => {
                let mut options = LoadOptions::default();
                if let Some(f) = &self.format {
                    options.format = EdgeFormat::parse(f)?;
                }
                options.normalize_divisor = self.normalize;
                let path = PathBuf::from(path);
                let name = match self.name {
                    Some(n) => n,
                    None => path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "dataset".into()),
                };
                Ok(DatasetSpec::File {
                    name,
                    path,
                    options,
                })
            }
            (None, Some(sy)) => {
                if self.name.is_some() || self.format.is_some() || self.normalize.is_some() {
                    return Err(Error::Usage(
                        "synthetic datasets take only n/density/seed".into(),
                    ));
                }
                Ok(DatasetSpec::Synthetic {
                    n: sy.n,
                    density: sy.density,
                    seed: sy
                        .seed
                        .unwrap_or_else(|| derive_seed(experiment_seed, "graph")),
                })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub dist: String,
    pub method: String,
    pub budget: f64,
    pub benefit: f64,
    /// Wall time of the solver call for this cell on this run.
    pub ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineRow {
    pub dist: String,
    /// Overall opinion of the untouched equilibrium.
    pub p0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub budget: f64,
    pub method: String,
    /// Benefit averaged over the distributions at this budget.
    pub avg_benefit: f64,
    /// Solver average over this method's average, ">10x" once the
    /// heuristic trails by an order of magnitude (or gains nothing).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub dataset: String,
    pub problem: String,
    pub nodes: usize,
    pub edges: usize,
    pub seed: u64,
    pub distributions: Vec<String>,
    pub budgets: Vec<f64>,
    pub baseline: Vec<BaselineRow>,
    pub table: Vec<SummaryRow>,
}

#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub report_csv: PathBuf,
    pub timings_csv: PathBuf,
    pub summary_json: PathBuf,
    pub curves: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub dataset: String,
    pub problem: ProblemKind,
    pub seed: u64,
    pub nodes: usize,
    pub edges: usize,
    pub budgets: Vec<f64>,
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
    pub warnings: Vec<String>,
    pub files: OutputFiles,
}

impl ExperimentReport {
    pub fn report_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# trustmax experiment report");
        let _ = writeln!(
            out,
            "# dataset: {} problem: {} seed: {} nodes: {} edges: {}",
            self.dataset,
            self.problem.as_str(),
            self.seed,
            self.nodes,
            self.edges
        );
        let _ = writeln!(
            out,
            "# normal opinions are N(0,1) draws clamped to [-1,1] (about 31.7% of draws clamp)"
        );
        let _ = writeln!(out, "dataset,dist,method,budget,benefit");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.dataset, r.dist, r.method, r.budget, r.benefit
            );
        }
        out
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# wall time per cell on this run; unlike report.csv this is not reproducible"
        );
        let _ = writeln!(out, "dataset,dist,method,budget,ms");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.3}",
                self.dataset, r.dist, r.method, r.budget, r.ms
            );
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(&self.summary)
            .map_err(|e| Error::Numerical(format!("summary serialization failed: {e}")))?;
        text.push('\n');
        Ok(text)
    }

    fn benefit_series(&self, dist: &str, method: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.dist == dist && r.method == method)
            .map(|r| (r.budget, r.benefit))
            .collect()
    }
}

pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    force: bool,
) -> Result<ExperimentReport> {
    config.validate()?;
    let graph = config.dataset.load()?;
    let n = graph.n();
    if config.problem == ProblemKind::Eop {
        if let Some(&max_b) = config.budgets.last() {
            if max_b > n as f64 {
                return Err(Error::Usage(format!(
                    "pin budget {max_b} exceeds the {n} nodes of {}",
                    config.dataset.name()
                )));
            }
        }
    }
    prepare_out_dir(out_dir, force)?;

    let ls = LaplacianSystem::new(&graph);
    let none = BTreeSet::new();
    // The contribution index does not depend on the opinions, so one
    // transposed solve covers every distribution.
    let ci = match config.problem {
        ProblemKind::Iop => Some(contribution_index_from_system(&ls, &none)?),
        ProblemKind::Eop => None,
    };

    let dataset_name = config.dataset.name();
    let mut rows = Vec::new();
    let mut baseline = Vec::new();
    let mut warnings = Vec::new();

    for dist in &config.distributions {
        let dist_name = dist.kind.name();
        let s = sample_opinions(dist, &graph);
        let z0 = equilibrium_direct(&ls, &s, &none)?;
        let p0 = overall_opinion(&z0);
        baseline.push(BaselineRow {
            dist: dist_name.clone(),
            p0,
        });

        for method in &config.methods {
            let method_name = method.name(config.problem);
            let order = match method {
                Method::Solver => None,
                Method::Heuristic(h) => Some(rank_nodes(
                    config.problem,
                    *h,
                    &graph,
                    &s,
                    Some(&z0),
                    derive_seed(dist.seed, &format!("order:{method_name}")),
                )?),
            };
            for &budget in &config.budgets {
                let cell = run_cell(
                    config.problem,
                    method,
                    order.as_deref(),
                    &ls,
                    ci.as_ref(),
                    &s,
                    p0,
                    budget,
                )?;
                for w in cell.warnings {
                    warnings.push(format!("{dist_name}/{method_name}/budget {budget}: {w}"));
                }
                rows.push(ReportRow {
                    dist: dist_name.clone(),
                    method: method_name.to_string(),
                    budget,
                    benefit: cell.benefit,
                    ms: cell.ms,
                });
            }
        }
    }

    for w in &warnings {
        log::warn!("{w}");
    }

    let summary = build_summary(config, &dataset_name, n, graph.edge_count(), &baseline, &rows);
    let mut report = ExperimentReport {
        dataset: dataset_name,
        problem: config.problem,
        seed: config.seed,
        nodes: n,
        edges: graph.edge_count(),
        budgets: config.budgets.clone(),
        rows,
        summary,
        warnings,
        files: OutputFiles {
            report_csv: out_dir.join("report.csv"),
            timings_csv: out_dir.join("timings.csv"),
            summary_json: out_dir.join("summary.json"),
            curves: Vec::new(),
        },
    };
    write_outputs(&mut report, config, out_dir)?;
    Ok(report)
}

struct CellResult {
    benefit: f64,
    ms: f64,
    warnings: Vec<String>,
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    problem: ProblemKind,
    method: &Method,
    order: Option<&[usize]>,
    ls: &LaplacianSystem,
    ci: Option<&ContributionIndex>,
    s: &OpinionVector,
    p0: f64,
    budget: f64,
) -> Result<CellResult> {
    if budget == 0.0 {
        return Ok(CellResult {
            benefit: 0.0,
            ms: 0.0,
            warnings: Vec::new(),
        });
    }
    let start = Instant::now();
    match problem {
        ProblemKind::Iop => {
            let ci = ci.expect("contribution index precomputed for opinion-change runs");
            let plan = match method {
                Method::Solver => solve_iop(ci, s, budget)?,
                Method::Heuristic(_) => {
                    run_iop_heuristic(order.expect("heuristics carry an order"), ci, s, budget)?
                }
            };
            let ms = elapsed_ms(start);
            verify_iop_benefit(ls, s, p0, &plan)?;
            Ok(CellResult {
                benefit: plan.benefit,
                ms,
                warnings: Vec::new(),
            })
        }
        ProblemKind::Eop => {
            let mu = budget as usize;
            let plan = match method {
                Method::Solver => solve_eop(ls, s, mu, EopMode::Fast)?,
                Method::Heuristic(_) => {
                    run_eop_heuristic(order.expect("heuristics carry an order"), ls, s, mu)?
                }
            };
            let ms = elapsed_ms(start);
            verify_eop_benefit(ls, s, p0, &plan)?;
            Ok(CellResult {
                benefit: plan.total_benefit,
                ms,
                warnings: plan.warnings,
            })
        }
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn verify_iop_benefit(
    ls: &LaplacianSystem,
    s: &OpinionVector,
    p0: f64,
    plan: &IopPlan,
) -> Result<()> {
    let mut shifted = s.values() + &plan.delta_s;
    for v in shifted.iter_mut() {
        // Saturating moves land on +-1 up to rounding; pull them back in.
        *v = v.clamp(-1.0, 1.0);
    }
    let s2 = OpinionVector::internal(shifted)?;
    let z = equilibrium_direct(ls, &s2, &BTreeSet::new())?;
    check_close("opinion-change benefit", plan.benefit, overall_opinion(&z) - p0)
}

fn verify_eop_benefit(
    ls: &LaplacianSystem,
    s: &OpinionVector,
    p0: f64,
    plan: &EopPlan,
) -> Result<()> {
    let pinned: BTreeSet<usize> = plan.order.iter().copied().collect();
    let z = equilibrium_direct(ls, s, &pinned)?;
    check_close("pinning benefit", plan.total_benefit, overall_opinion(&z) - p0)
}

fn check_close(what: &str, reported: f64, realized: f64) -> Result<()> {
    if (reported - realized).abs() > CROSS_CHECK_TOL {
        return Err(Error::Numerical(format!(
            "{what} {reported} is off the recomputed value {realized} by more than {CROSS_CHECK_TOL:e}"
        )));
    }
    Ok(())
}

fn build_summary(
    config: &ExperimentConfig,
    dataset: &str,
    nodes: usize,
    edges: usize,
    baseline: &[BaselineRow],
    rows: &[ReportRow],
) -> Summary {
    let problem = config.problem;
    let avg = |name: &str, budget: f64| -> f64 {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == name && r.budget == budget)
            .map(|r| r.benefit)
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let solver_name = config
        .methods
        .iter()
        .find(|m| matches!(m, Method::Solver))
        .map(|m| m.name(problem));
    let mut table = Vec::new();
    for &budget in &config.budgets {
        let solver_avg = solver_name.map(|nm| avg(nm, budget));
        for m in &config.methods {
            let name = m.name(problem);
            let avg_benefit = avg(name, budget);
            let ratio = match (m, solver_avg) {
                (Method::Solver, _) | (_, None) => None,
                (Method::Heuristic(_), Some(sv)) => Some(format_ratio(sv, avg_benefit)),
            };
            table.push(SummaryRow {
                budget,
                method: name.to_string(),
                avg_benefit,
                ratio,
            });
        }
    }
    Summary {
        dataset: dataset.to_string(),
        problem: problem.as_str().to_string(),
        nodes,
        edges,
        seed: config.seed,
        distributions: config.distributions.iter().map(|d| d.kind.name()).collect(),
        budgets: config.budgets.clone(),
        baseline: baseline.to_vec(),
        table,
    }
}

fn format_ratio(solver_avg: f64, heuristic_avg: f64) -> String {
    if heuristic_avg <= 0.0 || heuristic_avg <= solver_avg / 10.0 {
        ">10x".to_string()
    } else {
        format!("{:.2}x", solver_avg / heuristic_avg)
    }
}

fn prepare_out_dir(out_dir: &Path, force: bool) -> Result<()> {
    let report = out_dir.join("report.csv");
    if report.exists() && !force {
        return Err(Error::Usage(format!(
            "{} already exists; enable overwriting (force) to replace it",
            report.display()
        )));
    }
    fs::create_dir_all(out_dir.join("curves"))?;
    Ok(())
}

fn write_outputs(
    report: &mut ExperimentReport,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<()> {
    fs::write(&report.files.report_csv, report.report_csv())?;
    fs::write(&report.files.timings_csv, report.timings_csv())?;
    fs::write(&report.files.summary_json, report.summary_json()?)?;

    let problem = config.problem;
    let solver_name = config
        .methods
        .iter()
        .find(|m| matches!(m, Method::Solver))
        .map(|m| m.name(problem));
    for (dist, base) in config.distributions.iter().zip(&report.summary.baseline) {
        let dist_name = dist.kind.name();
        let mut left = Vec::new();
        for m in &config.methods {
            let name = m.name(problem);
            // Anchor every curve at the untouched equilibrium.
            let mut points = vec![(0.0, base.p0)];
            points.extend(
                report
                    .benefit_series(&dist_name, name)
                    .into_iter()
                    .filter(|&(b, _)| b > 0.0)
                    .map(|(b, benefit)| (b, base.p0 + benefit)),
            );
            left.push(svg::Series {
                label: name.to_string(),
                points,
            });
        }
        let mut right = Vec::new();
        if let Some(nm) = solver_name {
            let series = report.benefit_series(&dist_name, nm);
            let mut points = Vec::new();
            let mut prev = (0.0, 0.0);
            for (b, benefit) in series {
                let width = b - prev.0;
                if width > 0.0 {
                    points.push((b, (benefit - prev.1) / width));
                    prev = (b, benefit);
                }
            }
            if !points.is_empty() {
                right.push(svg::Series {
                    label: format!("{nm} unit benefit"),
                    points,
                });
            }
        }
        let chart = svg::line_chart(
            &svg::ChartOptions {
                title: format!(
                    "{} on {}, {} opinions",
                    problem.as_str(),
                    report.dataset,
                    dist_name
                ),
                x_label: "budget".to_string(),
                y_label: "overall opinion".to_string(),
                y2_label: "unit benefit".to_string(),
            },
            &left,
            &right,
        );
        let path = out_dir
            .join("curves")
            .join(format!("{}_{}.svg", problem.as_str(), dist_name));
        fs::write(&path, chart)?;
        report.files.curves.push(path);
    }
    Ok(())
}
