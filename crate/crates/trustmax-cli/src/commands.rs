//! One function per subcommand. Each loads its inputs, calls the library,
//! writes any files, then prints either a short human summary or JSON.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use trustmax::baselines::{
    rank_nodes, run_eop_heuristic, run_iop_heuristic, HeuristicName, ProblemKind,
};
use trustmax::contribution::{contribution_index_from_system, rank_by_contribution, RankBy};
use trustmax::dynamics::{equilibrium_direct, equilibrium_iterative, overall_opinion};
use trustmax::eop::{EopGreedy, EopMode, EopStep};
use trustmax::error::{Error, Result};
use trustmax::experiments::timing::{timing_comparison, NAIVE_TIMING_CAP};
use trustmax::experiments::{
    default_methods, distributions_from_names, run_experiment, standard_distributions,
    DatasetSpec, ExperimentConfig, Method,
};
use trustmax::graph::spectral::{spectral_check_capped, DEFAULT_SPECTRAL_TOL};
use trustmax::graph::{LaplacianSystem, SignedTrustGraph};
use trustmax::iop::{solve_iop, IopPlan};
use trustmax::rng::derive_seed;

use crate::args::*;

fn emit_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json values serialize")
    );
}

fn ids(g: &SignedTrustGraph, nodes: &[usize]) -> Vec<String> {
    nodes.iter().map(|&i| g.original_id(i).to_string()).collect()
}

pub fn solve(args: SolveArgs) -> Result<()> {
    let g = args.graph.load(args.common.seed)?;
    let s = args.opinions.load(&g, args.common.seed)?;
    let pinned: BTreeSet<usize> = args.pins.iter().copied().collect();
    for &i in &pinned {
        if i >= g.n() {
            return Err(Error::Usage(format!(
                "pinned node {i} out of range for n = {}",
                g.n()
            )));
        }
    }
    let ls = LaplacianSystem::new(&g);
    let (z, iterations) = if args.iterative {
        let (z, it) = equilibrium_iterative(&g, &s, &pinned, args.tol, args.max_iters)?;
        (z, Some(it))
    } else {
        (equilibrium_direct(&ls, &s, &pinned)?, None)
    };
    let p = overall_opinion(&z);
    let path = args.output.path_for("expressed.csv")?;
    z.write_csv(&path, &g)?;

    if args.common.json {
        emit_json(&json!({
            "nodes": g.n(),
            "edges": g.edge_count(),
            "pinned": args.pins,
            "iterations": iterations,
            "p": p,
            "output": path.display().to_string(),
        }));
    } else {
        println!("nodes {}  edges {}", g.n(), g.edge_count());
        if !pinned.is_empty() {
            println!("pinned {} node(s)", pinned.len());
        }
        if let Some(it) = iterations {
            println!("converged in {it} iterations");
        }
        println!("p = {p:.6}");
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn contribution(args: ContributionArgs) -> Result<()> {
    let g = args.graph.load(args.common.seed)?;
    let ls = LaplacianSystem::new(&g);
    let ci = contribution_index_from_system(&ls, &BTreeSet::new())?;
    let by = match args.rank_by.as_str() {
        "abs" => RankBy::Absolute,
        "signed" => RankBy::Signed,
        other => {
            return Err(Error::Usage(format!(
                "--rank-by takes abs or signed, got {other:?}"
            )))
        }
    };
    let ranked = rank_by_contribution(&ci, by);
    let shown = args.top.min(g.n());

    let path = args.output.path_for("contribution.csv")?;
    let mut csv = String::from("node,contribution\n");
    for i in 0..g.n() {
        let _ = writeln!(csv, "{},{}", g.original_id(i), ci.get(i));
    }
    fs::write(&path, csv)?;

    if args.common.json {
        let top: Vec<_> = ranked[..shown]
            .iter()
            .map(|&(i, gi)| json!({"node": i, "id": g.original_id(i), "g": gi}))
            .collect();
        emit_json(&json!({
            "nodes": g.n(),
            "contribution": ci.values().as_slice(),
            "top": top,
            "output": path.display().to_string(),
        }));
    } else {
        println!("top {shown} of {} nodes by contribution:", g.n());
        for (rank, &(i, gi)) in ranked[..shown].iter().enumerate() {
            println!("{:>4}  {:>8}  {gi:.6}", rank + 1, g.original_id(i));
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn iop(args: IopArgs) -> Result<()> {
    let g = args.graph.load(args.common.seed)?;
    let s = args.opinions.load(&g, args.common.seed)?;
    let ls = LaplacianSystem::new(&g);
    let none = BTreeSet::new();
    let ci = contribution_index_from_system(&ls, &none)?;
    let p0 = overall_opinion(&equilibrium_direct(&ls, &s, &none)?);
    let plan = solve_iop(&ci, &s, args.budget)?;
    let path = args.output.path_for("iop_plan.csv")?;
    write_iop_plan(&path, &g, &plan)?;
    report_iop("iop", args.common.json, args.budget, p0, &plan, &g, &path);
    Ok(())
}

fn write_iop_plan(path: &Path, g: &SignedTrustGraph, plan: &IopPlan) -> Result<()> {
    let mut csv = String::from("node,delta\n");
    for step in &plan.steps {
        let _ = writeln!(csv, "{},{}", g.original_id(step.node), step.delta);
    }
    fs::write(path, csv)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn report_iop(
    label: &str,
    as_json: bool,
    budget: f64,
    p0: f64,
    plan: &IopPlan,
    g: &SignedTrustGraph,
    path: &Path,
) {
    if as_json {
        let steps: Vec<_> = plan
            .steps
            .iter()
            .map(|st| json!({"node": st.node, "id": g.original_id(st.node), "delta": st.delta}))
            .collect();
        emit_json(&json!({
            "problem": label,
            "budget": budget,
            "spent": plan.spent,
            "benefit": plan.benefit,
            "p_before": p0,
            "p_after": p0 + plan.benefit,
            "steps": steps,
            "output": path.display().to_string(),
        }));
    } else {
        println!(
            "budget {budget}: spent {:.6} across {} node(s)",
            plan.spent,
            plan.steps.len()
        );
        println!(
            "benefit {:.6}  p {:.6} -> {:.6}",
            plan.benefit,
            p0,
            p0 + plan.benefit
        );
        println!("wrote {}", path.display());
    }
}

pub fn eop(args: EopArgs) -> Result<()> {
    let g = args.graph.load(args.common.seed)?;
    let s = args.opinions.load(&g, args.common.seed)?;
    let mode = match args.mode.as_str() {
        "fast" => EopMode::Fast,
        "naive" => EopMode::Naive,
        other => {
            return Err(Error::Usage(format!(
                "--mode takes fast or naive, got {other:?}"
            )))
        }
    };
    if args.budget == 0 || args.budget > g.n() {
        return Err(Error::Usage(format!(
            "--budget must be in 1..={}, got {}",
            g.n(),
            args.budget
        )));
    }
    let ls = LaplacianSystem::new(&g);
    let mut engine = EopGreedy::new(&ls, &s, mode)?;
    let p_initial = engine.p();
    let mut steps: Vec<EopStep> = Vec::new();
    for _ in 0..args.budget {
        let step = engine.step()?;
        if args.stop_when_nonpositive && step.benefit <= 0.0 {
            break;
        }
        steps.push(step);
    }
    let warnings = engine.take_warnings();
    let p_final = steps.last().map_or(p_initial, |st| st.p_after);
    let order: Vec<usize> = steps.iter().map(|st| st.node).collect();

    let path = args.output.path_for("eop_plan.csv")?;
    write_eop_plan(&path, &g, &steps)?;

    if args.common.json {
        emit_json(&json!({
            "problem": "eop",
            "mode": args.mode,
            "budget": args.budget,
            "pinned": order,
            "ids": ids(&g, &order),
            "step_benefits": steps.iter().map(|st| st.benefit).collect::<Vec<_>>(),
            "p_initial": p_initial,
            "p_final": p_final,
            "total_benefit": p_final - p_initial,
            "warnings": warnings,
            "output": path.display().to_string(),
        }));
    } else {
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        println!(
            "pinned {} of {} budgeted node(s) ({} mode)",
            steps.len(),
            args.budget,
            args.mode
        );
        if !order.is_empty() {
            println!("order: {}", ids(&g, &order).join(", "));
        }
        println!(
            "benefit {:.6}  p {:.6} -> {:.6}",
            p_final - p_initial,
            p_initial,
            p_final
        );
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_eop_plan(path: &Path, g: &SignedTrustGraph, steps: &[EopStep]) -> Result<()> {
    let mut csv = String::from("step,node,benefit,p_after\n");
    for (k, st) in steps.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            k + 1,
            g.original_id(st.node),
            st.benefit,
            st.p_after
        );
    }
    fs::write(path, csv)?;
    Ok(())
}

pub fn baseline(args: BaselineArgs) -> Result<()> {
    let g = args.graph.load(args.common.seed)?;
    let s = args.opinions.load(&g, args.common.seed)?;
    let problem = ProblemKind::parse(&args.problem)?;
    let heuristic = HeuristicName::parse(&args.heuristic)?;
    let ls = LaplacianSystem::new(&g);
    let none = BTreeSet::new();
    let z0 = equilibrium_direct(&ls, &s, &none)?;
    let p0 = overall_opinion(&z0);
    let order = rank_nodes(
        problem,
        heuristic,
        &g,
        &s,
        Some(&z0),
        derive_seed(args.common.seed, &format!("order:{}", heuristic.as_str())),
    )?;

    match problem {
        ProblemKind::Iop => {
            let ci = contribution_index_from_system(&ls, &none)?;
            let plan = run_iop_heuristic(&order, &ci, &s, args.budget)?;
            let path = args.output.path_for("baseline_plan.csv")?;
            write_iop_plan(&path, &g, &plan)?;
            report_iop(
                heuristic.as_str(),
                args.common.json,
                args.budget,
                p0,
                &plan,
                &g,
                &path,
            );
        }
        ProblemKind::Eop => {
            if args.budget.fract() != 0.0 || args.budget < 1.0 {
                return Err(Error::Usage(format!(
                    "pin budgets count nodes and must be whole numbers >= 1, got {}",
                    args.budget
                )));
            }
            let plan = run_eop_heuristic(&order, &ls, &s, args.budget as usize)?;
            let path = args.output.path_for("baseline_plan.csv")?;
            let steps: Vec<EopStep> = plan
                .order
                .iter()
                .zip(plan.step_benefits.iter().zip(&plan.p_trajectory))
                .map(|(&node, (&benefit, &p_after))| EopStep {
                    node,
                    benefit,
                    p_after,
                })
                .collect();
            write_eop_plan(&path, &g, &steps)?;
            if args.common.json {
                emit_json(&json!({
                    "problem": "eop",
                    "heuristic": heuristic.as_str(),
                    "budget": args.budget,
                    "pinned": plan.order,
                    "ids": ids(&g, &plan.order),
                    "step_benefits": plan.step_benefits,
                    "p_initial": plan.p_initial,
                    "total_benefit": plan.total_benefit,
                    "warnings": plan.warnings,
                    "output": path.display().to_string(),
                }));
            } else {
                for w in &plan.warnings {
                    eprintln!("warning: {w}");
                }
                println!(
                    "{} pinned {} node(s): {}",
                    heuristic.as_str(),
                    plan.order.len(),
                    ids(&g, &plan.order).join(", ")
                );
                println!(
                    "benefit {:.6}  p {:.6} -> {:.6}",
                    plan.total_benefit,
                    plan.p_initial,
                    plan.p_initial + plan.total_benefit
                );
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

pub fn experiment(args: ExperimentArgs) -> Result<()> {
    let config = build_experiment_config(&args)?;
    let report = run_experiment(&config, &args.output.out, args.output.force)?;
    if args.common.json {
        print!("{}", report.summary_json()?);
    } else {
        println!(
            "dataset {}  problem {}  seed {}  nodes {}  edges {}",
            report.dataset,
            report.problem.as_str(),
            report.seed,
            report.nodes,
            report.edges
        );
        println!("{:<10} {:<8} {:>14}  ratio", "budget", "method", "avg benefit");
        for row in &report.summary.table {
            println!(
                "{:<10} {:<8} {:>14.6}  {}",
                row.budget,
                row.method,
                row.avg_benefit,
                row.ratio.as_deref().unwrap_or("")
            );
        }
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        println!(
            "wrote report.csv, timings.csv, summary.json and {} curve(s) under {}",
            report.files.curves.len(),
            args.output.out.display()
        );
    }
    Ok(())
}

fn build_experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    if let Some(path) = &args.config {
        return ExperimentConfig::from_json_file(path);
    }
    let problem = ProblemKind::parse(args.problem.as_deref().ok_or_else(|| {
        Error::Usage("experiments need --config <file> or --problem <iop|eop>".into())
    })?)?;
    if args.budgets.is_empty() {
        return Err(Error::Usage(
            "experiments need --budgets (comma-separated) or --config".into(),
        ));
    }
    let seed = args.common.seed;
    let dataset = if let Some(n) = args.graph.synthetic {
        DatasetSpec::synthetic(n, args.graph.density, derive_seed(seed, "graph"))
    } else {
        let path = args
            .graph
            .graph
            .clone()
            .ok_or_else(|| Error::Usage("provide a graph file (-g) or --synthetic <N>".into()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        DatasetSpec::file(&name, path, args.graph.load_options()?)
    };
    let distributions = if args.dists.is_empty() {
        standard_distributions(seed)
    } else {
        distributions_from_names(&args.dists, seed)?
    };
    let methods = if args.methods.is_empty() {
        default_methods(problem)
    } else {
        args.methods
            .iter()
            .map(|nm| Method::parse(nm, problem))
            .collect::<Result<_>>()?
    };
    let config = ExperimentConfig {
        dataset,
        problem,
        distributions,
        budgets: args.budgets.clone(),
        methods,
        seed,
    };
    config.validate()?;
    Ok(config)
}

pub fn timing(args: TimingArgs) -> Result<()> {
    let g = args.graph.load(args.common.seed)?;
    let report = timing_comparison(&g, args.iterations, args.common.seed)?;
    if args.common.json {
        emit_json(&serde_json::to_value(&report).expect("timing report serializes"));
    } else {
        println!(
            "nodes {}  edges {}  iterations {}",
            report.nodes, report.edges, report.iterations
        );
        println!("fast:  {:.3} ms/iter", report.fast_ms_per_iter);
        match (report.naive_ms_per_iter, report.ratio) {
            (Some(naive), Some(ratio)) => {
                println!("naive: {naive:.3} ms/iter");
                println!("ratio: {ratio:.1}x");
            }
            _ => println!("naive: skipped (more than {NAIVE_TIMING_CAP} nodes)"),
        }
    }
    Ok(())
}

pub fn validate(args: ValidateArgs) -> Result<()> {
    let g = args.graph.load(args.common.seed)?;
    let ls = LaplacianSystem::new(&g);
    let mut w_min = f64::INFINITY;
    let mut w_max = f64::NEG_INFINITY;
    for e in g.edges() {
        w_min = w_min.min(e.weight);
        w_max = w_max.max(e.weight);
    }
    let weight_range = (g.edge_count() > 0).then_some((w_min, w_max));
    let spectral = if g.n() <= args.spectral_cap {
        Some(spectral_check_capped(
            &ls,
            DEFAULT_SPECTRAL_TOL,
            args.spectral_cap,
        )?)
    } else {
        None
    };

    if args.common.json {
        emit_json(&json!({
            "nodes": g.n(),
            "edges": g.edge_count(),
            "weight_min": weight_range.map(|r| r.0),
            "weight_max": weight_range.map(|r| r.1),
            "dropped_self_loops": g.dropped_self_loops(),
            "merged_duplicates": g.merged_duplicates(),
            "spectral": spectral.as_ref().map(|r| json!({
                "min_re": r.min_re,
                "max_re": r.max_re,
                "bound_lo": r.bound_lo,
                "bound_hi": r.bound_hi,
                "ok": r.ok,
            })),
        }));
    } else {
        println!("nodes {}  edges {}", g.n(), g.edge_count());
        match weight_range {
            Some((lo, hi)) => println!("weight range [{lo}, {hi}]"),
            None => println!("weight range: no edges"),
        }
        println!(
            "dropped self loops {}  merged duplicates {}",
            g.dropped_self_loops(),
            g.merged_duplicates()
        );
        match &spectral {
            Some(r) => println!(
                "eigenvalue real parts in [{:.6}, {:.6}], symmetric-part bracket [{:.6}, {:.6}]: {}",
                r.min_re,
                r.max_re,
                r.bound_lo,
                r.bound_hi,
                if r.ok { "ok" } else { "OUT OF BRACKET" }
            ),
            None => println!(
                "spectral check skipped ({} nodes exceed the cap {})",
                g.n(),
                args.spectral_cap
            ),
        }
    }
    Ok(())
}
