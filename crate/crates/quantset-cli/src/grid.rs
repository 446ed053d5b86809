//! The `grid` command: evaluate a polynomial on a tensor grid and write a
//! bit-stable CSV suitable for contouring.
//!
//! The CSV has one header row `x1,...,xn,p_value,member` and exactly
//! `resolution^n` data rows, odometer-ordered with the **last** axis
//! varying fastest. All numbers are printed with 17 significant digits
//! (`{:.16e}`), enough for an exact `f64` round trip, so identical inputs
//! always produce identical bytes. `member` is `1` where the chosen
//! predicate (`p <= 0` or `p >= 0`) holds.

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use quantset::measures::BoxDomain;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use crate::polyjson;

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Polynomial artifact (`*.poly.json`).
    #[arg(long)]
    pub poly: PathBuf,
    /// Evaluation box, one `lower,upper` pair per axis separated by
    /// semicolons: `-1,1;-1,1`.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bounds: String,
    /// Grid points per axis (at least 2).
    #[arg(long)]
    pub resolution: usize,
    /// Membership predicate for the `member` column.
    #[arg(long, value_enum)]
    pub predicate: Predicate,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Predicate {
    /// Member where `p(x) <= 0`.
    Le0,
    /// Member where `p(x) >= 0`.
    Ge0,
}

impl Predicate {
    fn holds(self, value: f64) -> bool {
        match self {
            Predicate::Le0 => value <= 0.0,
            Predicate::Ge0 => value >= 0.0,
        }
    }
}

/// Parses `l,u;l,u;...` into a box.
pub fn parse_box(text: &str) -> anyhow::Result<BoxDomain> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (axis, part) in text.split(';').enumerate() {
        let Some((l, u)) = part.split_once(',') else {
            bail!("axis {axis}: expected `lower,upper`, got {part:?}");
        };
        lower.push(l.trim().parse::<f64>().with_context(|| format!("axis {axis} lower bound"))?);
        upper.push(u.trim().parse::<f64>().with_context(|| format!("axis {axis} upper bound"))?);
    }
    BoxDomain::new(lower, upper).context("invalid --box")
}

/// 17 significant digits: exact `f64` round trip, fixed width class.
fn fmt17(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn run(args: &GridArgs) -> anyhow::Result<ExitCode> {
    if args.resolution < 2 {
        bail!("--resolution must be at least 2, got {}", args.resolution);
    }
    let p = polyjson::read_poly_file(&args.poly)?;
    let bx = parse_box(&args.bounds)?;
    let n = p.n_vars();
    if bx.n() != n {
        bail!("--box has {} axes but the polynomial has {} variables", bx.n(), n);
    }
    let rows = args
        .resolution
        .checked_pow(u32::try_from(n).context("too many variables")?)
        .with_context(|| format!("{}^{n} rows overflow", args.resolution))?;

    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let mut out = std::io::BufWriter::new(file);
    for (i, name) in p.vars().iter().enumerate() {
        if i > 0 {
            write!(out, ",")?;
        }
        write!(out, "{name}")?;
    }
    writeln!(out, ",p_value,member")?;

    let mut idx = vec![0usize; n];
    let mut point = vec![0.0f64; n];
    for _ in 0..rows {
        for a in 0..n {
            point[a] = bx.grid_coordinate(a, idx[a], args.resolution);
        }
        let value = p.evaluate(&point)?;
        if !value.is_finite() {
            bail!("polynomial evaluates to {value} at {point:?}");
        }
        for &c in &point {
            write!(out, "{},", fmt17(c))?;
        }
        writeln!(out, "{},{}", fmt17(value), u8::from(args.predicate.holds(value)))?;
        // Odometer step, last axis fastest.
        for a in (0..n).rev() {
            idx[a] += 1;
            if idx[a] < args.resolution {
                break;
            }
            idx[a] = 0;
        }
    }
    out.flush()?;
    println!("grid: {} ({rows} rows)", args.out.display());
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_parsing() {
        let bx = parse_box("-1,1;0,2").unwrap();
        assert_eq!(bx.n(), 2);
        assert_eq!(bx.lower(), &[-1.0, 0.0]);
        assert_eq!(bx.upper(), &[1.0, 2.0]);
        assert!(parse_box("-1;1").is_err());
        assert!(parse_box("a,b").is_err());
        assert!(parse_box("1,-1").is_err());
    }

    #[test]
    fn seventeen_digit_format_round_trips() {
        for &v in &[0.1, -1.0 / 3.0, 1e-300, std::f64::consts::PI, 0.0, -2.5e17] {
            let text = fmt17(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{text} fails to round trip");
        }
    }
}
