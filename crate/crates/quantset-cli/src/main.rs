//! `quantset` — command-line driver for polynomial approximations of
//! quantified semi-algebraic sets.
//!
//! Four subcommands cover the whole workflow:
//!
//! * `solve` — run the SOS hierarchy on a problem file, writing polynomial
//!   artifacts and a summary.
//! * `verify` — replay a solved polynomial through independent sampling
//!   and quadrature checks.
//! * `grid` — evaluate a polynomial on a tensor grid as bit-stable CSV.
//! * `svg` — render 2-D grids as filled regions with zero contours.
//!
//! Exit codes: `0` success, `1` a solve or verification failed (artifacts
//! are still written), `2` the inputs were rejected before any computation
//! (schema errors, bad flags, impossible requests).

mod grid;
mod polyjson;
mod problem;
mod solve;
mod svg;
mod verify;

use clap::{Parser, Subcommand, ValueEnum};
use quantset::engine::Mode;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "quantset",
    version,
    about = "Single-polynomial approximations of quantified semi-algebraic sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the hierarchy at the requested orders.
    Solve(solve::SolveArgs),
    /// Check a solved polynomial by sampling and quadrature.
    Verify(verify::VerifyArgs),
    /// Evaluate a polynomial on a tensor grid (CSV).
    Grid(grid::GridArgs),
    /// Render 2-D grids as an SVG figure.
    Svg(svg::SvgArgs),
}

/// `--mode` flag shared by commands that care about the predicate
/// direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Inner approximation of the "for all" set (`p <= 0`).
    Inner,
    /// Outer approximation of the "exists" set (`p >= 0`).
    Outer,
}

impl From<ModeArg> for Mode {
    fn from(mode: ModeArg) -> Mode {
        match mode {
            ModeArg::Inner => Mode::Inner,
            ModeArg::Outer => Mode::Outer,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => solve::run(&args),
        Command::Verify(args) => verify::run(&args),
        Command::Grid(args) => grid::run(&args),
        Command::Svg(args) => svg::run(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
