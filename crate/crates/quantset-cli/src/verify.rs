//! The `verify` command: independent sampling and quadrature checks of a
//! solved polynomial against its problem file.
//!
//! Three reports are written next to the polynomial artifact (for
//! `P.k2.poly.json`: `P.k2.poly.dominance.json`, `.volume.json`,
//! `.l1gap.json`):
//!
//! * **dominance** — rejection-sampled check that `p(x) >= f(x, y)` on the
//!   fiber set; any violation beyond tolerance is recorded with its point.
//! * **volume** — Monte Carlo fraction of the box where `p <= 0` and where
//!   `p >= 0`, one report per predicate.
//! * **l1gap** — quadrature estimate of `∫ |p - J̄| dλ̄`, the polynomial's
//!   distance from the value function under the normalized box measure.
//!
//! Every sampled report embeds its seed. Exit code 1 means the dominance
//! check found violations (verification failed); reports are written
//! either way. Exit code 2 means the inputs could not be checked at all.

use anyhow::Context;
use clap::Args;
use quantset::oracle::{self, OracleError, SampleReport};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use crate::polyjson;
use crate::problem::ProblemFile;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Problem file (`quantset-problem/1` JSON).
    #[arg(long)]
    pub problem: PathBuf,
    /// Polynomial artifact to verify (`*.poly.json`).
    #[arg(long)]
    pub poly: PathBuf,
    /// Rejection/Monte Carlo sample budget.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Seed for the sampled checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quadrature nodes per axis for the L1-gap check.
    #[arg(long, default_value_t = 51)]
    pub grid_resolution: usize,
}

/// `*.volume.json` payload: both predicates from the same seed.
#[derive(Serialize)]
struct VolumeReport {
    seed: u64,
    le0: SampleReport,
    ge0: SampleReport,
}

/// `*.l1gap.json` payload.
#[derive(Serialize)]
struct L1Report {
    grid_resolution: usize,
    /// Seed of the fixed dominance precheck run before quadrature.
    precheck_seed: u64,
    /// The gap estimate; absent when the check was skipped.
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped_reason: Option<String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `P.k2.poly.json` -> `P.k2.poly.<suffix>.json`.
fn report_path(poly: &Path, suffix: &str) -> PathBuf {
    let stem = poly.with_extension("");
    let mut name = stem.into_os_string();
    name.push(".");
    name.push(suffix);
    name.push(".json");
    PathBuf::from(name)
}

pub fn run(args: &VerifyArgs) -> anyhow::Result<ExitCode> {
    let spec = ProblemFile::read(&args.problem)?.to_spec()?;
    let p = polyjson::read_poly_file(&args.poly)?;

    let dominance = oracle::check_dominance(&p, &spec, args.samples, args.seed)
        .context("dominance check could not run")?;
    write_json(&report_path(&args.poly, "dominance"), &dominance)?;
    println!(
        "dominance: {} violations in {} samples (seed {})",
        dominance.violations.len(),
        dominance.sample_count,
        dominance.seed
    );

    let le0 = {
        let q = p.clone();
        oracle::mc_volume(move |x| q.evaluate(x).expect("box point") <= 0.0, &spec.x_box, args.samples, args.seed)?
    };
    let ge0 = {
        let q = p.clone();
        oracle::mc_volume(move |x| q.evaluate(x).expect("box point") >= 0.0, &spec.x_box, args.samples, args.seed)?
    };
    println!("volume: p<=0 fraction {:.6} | p>=0 fraction {:.6}", le0.estimate, ge0.estimate);
    write_json(&report_path(&args.poly, "volume"), &VolumeReport { seed: args.seed, le0, ge0 })?;

    let l1 = match oracle::l1_gap(&p, &spec, args.grid_resolution) {
        Ok(value) => L1Report {
            grid_resolution: args.grid_resolution,
            precheck_seed: oracle::L1_PRECHECK_SEED,
            value: Some(value),
            skipped_reason: None,
        },
        Err(OracleError::Dominance { report }) => L1Report {
            grid_resolution: args.grid_resolution,
            precheck_seed: oracle::L1_PRECHECK_SEED,
            value: None,
            skipped_reason: Some(format!(
                "dominance precheck failed: {} violations in {} samples",
                report.violations.len(),
                report.sample_count
            )),
        },
        Err(OracleError::ThinDomain) => L1Report {
            grid_resolution: args.grid_resolution,
            precheck_seed: oracle::L1_PRECHECK_SEED,
            value: None,
            skipped_reason: Some("K too thin for rejection sampling".into()),
        },
        Err(err) => return Err(err).context("L1 gap check could not run"),
    };
    match (&l1.value, &l1.skipped_reason) {
        (Some(value), _) => println!("l1_gap: {value:.9e} (resolution {})", args.grid_resolution),
        (None, Some(reason)) => println!("l1_gap: skipped ({reason})"),
        (None, None) => unreachable!("skipped report always carries a reason"),
    }
    write_json(&report_path(&args.poly, "l1gap"), &l1)?;

    Ok(if dominance.violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
