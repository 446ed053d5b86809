//! The `solve` command: run the hierarchy at the requested orders and emit
//! polynomial artifacts plus a machine-readable summary.
//!
//! Outputs, for prefix `P`:
//!
//! * `P.k<K>.poly.json` — the extracted polynomial at order `K` (per
//!   component, `P.k<K>.f<L>.poly.json`, when the objective is a max-of
//!   family).
//! * `P.summary.json` — per-order status, objective value `rho_k`,
//!   iteration count, and the full diagnostics block. Deterministic for a
//!   given problem + flags + seed.
//! * `P.timings.json` — wall-clock solve times. Kept out of the summary on
//!   purpose: everything in the summary is reproducible byte-for-byte,
//!   wall time is not.
//!
//! Exit code 0 means every requested order reached optimal status; 1 means
//! at least one order failed (statuses are still reported); 2 means the
//! problem file or flags were rejected before any solving happened.

use anyhow::{bail, Context};
use clap::Args;
use quantset::conic::{SolveStatus, SolverOptions};
use quantset::engine::{
    approximate, approximate_intersection, ApproximationResult, Diagnostics, HierarchyOptions,
    Mode, Objective,
};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use crate::problem::ProblemFile;
use crate::{polyjson, ModeArg};

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Problem file (`quantset-problem/1` JSON).
    #[arg(long)]
    pub problem: PathBuf,
    /// Comma-separated relaxation orders, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub degrees: Vec<u32>,
    /// Approximation mode; must agree with the problem file's `mode`.
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Chain consecutive orders so the approximations are pointwise
    /// monotone (requires a contiguous increasing degree list).
    #[arg(long)]
    pub monotone: bool,
    /// Constrain each polynomial to be convex over the box.
    #[arg(long)]
    pub convex: bool,
    /// Solver feasibility tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub feas_tol: f64,
    /// Solver duality-gap tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub gap_tol: f64,
    /// Seed for every sampled diagnostic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path prefix.
    #[arg(long)]
    pub out: PathBuf,
}

/// `P.summary.json` payload.
#[derive(Serialize)]
struct Summary {
    schema: &'static str,
    problem: String,
    mode: &'static str,
    seed: u64,
    orders: Vec<OrderEntry>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum OrderEntry {
    Single(SummaryEntry),
    Intersection { k: u32, components: Vec<SummaryEntry> },
}

#[derive(Serialize)]
struct SummaryEntry {
    k: u32,
    rho_k: Option<f64>,
    status: SolveStatus,
    iterations: u32,
    /// File name of the polynomial artifact, when the order solved.
    polynomial_file: Option<String>,
    diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct TimingEntry {
    k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    component: Option<usize>,
    solve_seconds: f64,
}

fn rho_str(rho: Option<f64>) -> String {
    rho.map_or_else(|| "-".into(), |v| format!("{v:.9e}"))
}

fn status_str(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::MaxIterations => "max_iterations",
        SolveStatus::NumericalFailure => "numerical_failure",
    }
}

/// Writes the poly artifact for one solved order and builds its summary
/// entry. `tag` is the artifact name fragment after the prefix, e.g.
/// `k2` or `k2.f0`.
fn emit_result(
    prefix: &Path,
    tag: &str,
    result: &ApproximationResult,
) -> anyhow::Result<SummaryEntry> {
    let polynomial_file = match &result.polynomial {
        Some(p) => {
            let path = sibling(prefix, &format!("{tag}.poly.json"));
            polyjson::write_poly_file(&path, p)?;
            Some(file_name(&path))
        }
        None => None,
    };
    Ok(SummaryEntry {
        k: result.k,
        rho_k: result.rho_k,
        status: result.status,
        iterations: result.iterations,
        polynomial_file,
        diagnostics: result.diagnostics.clone(),
    })
}

/// `prefix` + `.suffix`, keeping the prefix's directory.
fn sibling(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

fn file_name(path: &Path) -> String {
    path.file_name().expect("artifact paths always have a final component").to_string_lossy().into_owned()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn run(args: &SolveArgs) -> anyhow::Result<ExitCode> {
    let file = ProblemFile::read(&args.problem)?;
    let spec = file.to_spec()?;
    let flag_mode: Mode = args.mode.into();
    if spec.mode != flag_mode {
        bail!(
            "problem file declares mode \"{}\" but --mode {} was given",
            mode_str(spec.mode),
            mode_str(flag_mode)
        );
    }
    let opts = HierarchyOptions {
        monotone: args.monotone,
        convex: args.convex,
        solver: SolverOptions {
            feasibility_tol: args.feas_tol,
            duality_gap_tol: args.gap_tol,
            ..SolverOptions::default()
        },
        seed: args.seed,
        ..HierarchyOptions::default()
    };

    let mut orders = Vec::with_capacity(args.degrees.len());
    let mut timings = Vec::new();
    let mut all_optimal = true;
    if matches!(spec.objective, Objective::MaxOf(_)) {
        let result = approximate_intersection(&spec, &args.degrees, &opts)
            .context("solving the intersection hierarchy")?;
        for (i, &k) in args.degrees.iter().enumerate() {
            let mut components = Vec::with_capacity(result.components.len());
            for (l, component) in result.components.iter().enumerate() {
                let r = &component[i];
                components.push(emit_result(&args.out, &format!("k{k}.f{l}"), r)?);
                timings.push(TimingEntry {
                    k,
                    component: Some(l),
                    solve_seconds: r.solve_seconds,
                });
                all_optimal &= r.status == SolveStatus::Optimal;
                println!("k={k} f={l} status={} rho_k={}", status_str(r.status), rho_str(r.rho_k));
            }
            orders.push(OrderEntry::Intersection { k, components });
        }
    } else {
        let results = approximate(&spec, &args.degrees, &opts).context("solving the hierarchy")?;
        for r in &results {
            orders.push(OrderEntry::Single(emit_result(&args.out, &format!("k{}", r.k), r)?));
            timings.push(TimingEntry { k: r.k, component: None, solve_seconds: r.solve_seconds });
            all_optimal &= r.status == SolveStatus::Optimal;
            println!("k={} status={} rho_k={}", r.k, status_str(r.status), rho_str(r.rho_k));
        }
    }

    let summary = Summary {
        schema: "quantset-summary/1",
        problem: args.problem.display().to_string(),
        mode: mode_str(flag_mode),
        seed: args.seed,
        orders,
    };
    let summary_path = sibling(&args.out, "summary.json");
    write_json(&summary_path, &summary)?;
    write_json(&sibling(&args.out, "timings.json"), &timings)?;
    println!("summary: {}", summary_path.display());
    Ok(if all_optimal { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn mode_str(mode: Mode) -> &'static str {
    match mode {
        Mode::Inner => "inner",
        Mode::Outer => "outer",
    }
}
