//! Brute-force verification oracle: deterministic grid and Monte Carlo
//! estimates that are computed *without* the SDP pipeline, so they can audit
//! it.
//!
//! The oracle answers four questions about a problem and a candidate
//! polynomial `p` over the parameters `x`:
//!
//! * [`value_function`] — what is `J̄(x) = max_y {f(x, y) : y ∈ K_x}`?
//!   Answered by exhaustive grid maximization over the fiber (exact
//!   eigenvalue computation in the matrix-objective cases), not local
//!   nonlinear optimization: sound at small `m`, fully deterministic, and
//!   independent of everything the solver does.
//! * [`check_dominance`] — does `p(x) ≥ f(x, y)` hold on rejection-sampled
//!   feasible points of `K`? This is the sampled restatement of the
//!   certificate's load-bearing guarantee.
//! * [`mc_volume`] — what fraction of a box satisfies a predicate?
//! * [`l1_gap`] — how far is `p` from `J̄` in `L¹` of the normalized
//!   measure on the box? Estimated by tensor Gauss–Legendre quadrature with
//!   `J̄` supplied by [`value_function`]; a dominance precheck runs first so
//!   the reported gap is a genuine one-sided error.
//!
//! # Determinism
//!
//! Every routine is bit-identical across re-runs with the same seed, and
//! across the parallel and sequential execution paths. Sampling splits the
//! sample budget into fixed batches; batch `b` draws from an independent
//! ChaCha stream (`seed_from_u64(seed)` + `set_stream(b)`), and batch
//! results are merged in batch order. The [`sequential`] submodule exposes
//! the serial path directly for benchmarking; with the `parallel` feature
//! disabled it is the only path.
//!
//! # Feasibility bands
//!
//! Grid points and samples are accepted into `K_x` when every inequality
//! satisfies `g_j ≥ -1e-9` and every equality satisfies `|h_l| ≤ 1e-6`
//! ([`measures::EQUALITY_BAND`]): zero-measure sets are unsampleable
//! exactly, and boundary grid points should not be lost to roundoff. The
//! standing bound `‖y‖² ≤ M` is enforced with the same inequality band.

use crate::engine::{Constraint, ConstraintKind, Objective, ProblemSpec};
use crate::measures::{self, BoxDomain};
use crate::poly::{joint_vars, PolyError, Polynomial};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Default number of grid points per quantified axis in value-function
/// maximization.
pub const DEFAULT_GRID_RESOLUTION: usize = 101;

/// Acceptance band for sampled inequality constraints: `g ≥ -INEQ_BAND`.
pub const INEQ_BAND: f64 = 1e-9;

/// A sampled point violates dominance when `p(x) - f(x, y) < -DOMINANCE_TOL`.
pub const DOMINANCE_TOL: f64 = 1e-6;

/// Rejection sampling aborts when the empirical acceptance rate falls below
/// this threshold (enforced per batch as an attempt budget of
/// `1 / MIN_ACCEPTANCE_RATE` tries per requested sample).
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-4;

/// At most this many violations are recorded in a report; all violations
/// still count toward `estimate`.
pub const MAX_RECORDED_VIOLATIONS: usize = 1000;

/// Minimum Monte Carlo sample size accepted by [`mc_volume`].
pub const MIN_VOLUME_SAMPLES: usize = 1000;

/// Samples per independently seeded batch; the merge is ordered, so this is
/// a throughput knob, not a semantics knob.
const BATCH_SIZE: usize = 4096;

/// Attempts allowed per requested sample before rejection sampling gives up
/// (the reciprocal of [`MIN_ACCEPTANCE_RATE`]).
const ATTEMPT_FACTOR: usize = 10_000;

/// Sample budget and fixed seed for the dominance precheck inside
/// [`l1_gap`]; fixed so the gap estimate is deterministic without a seed
/// parameter. Public so reports can record which seed screened the input.
pub const L1_PRECHECK_SAMPLES: usize = 20_000;
pub const L1_PRECHECK_SEED: u64 = 0x6c31_6761_7000;

#[derive(Debug, Error)]
pub enum OracleError {
    /// Rejection sampling could not reach the requested sample count within
    /// the attempt budget; the feasible set is too thin a slice of the
    /// sampling box for unbiased rejection sampling to cover it.
    #[error("K too thin for rejection sampling")]
    ThinDomain,
    /// The candidate polynomial fails the dominance precheck; the offending
    /// samples are in the report.
    #[error("dominance precheck failed: {} of {} sampled points violate p >= f", report.violations.len(), report.sample_count)]
    Dominance { report: SampleReport },
    #[error("Monte Carlo volume needs at least {MIN_VOLUME_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("grid resolution must be at least 2, got {0}")]
    BadResolution(usize),
    #[error("{empty} of {total} quadrature nodes have an empty fiber (no feasible grid point); K_x is assumed nonempty on B")]
    EmptyFiber { empty: usize, total: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    PointArity { expected: usize, got: usize },
    #[error("polynomial must be over the parameter variables only, got [{got}]")]
    NotParameterPolynomial { got: String },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// One sampled point where `p(x) - f(x, y)` dipped below `-DOMINANCE_TOL`.
/// `point` is the joint `(x, y)` sample; `margin` is the (negative) value of
/// `p - f` there.
#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub point: Vec<f64>,
    pub margin: f64,
}

/// Outcome of a sampling run. Deterministic given `(seed, sample_count,
/// problem)`, bit-for-bit, including across the parallel/sequential paths.
#[derive(Clone, Debug, Serialize)]
pub struct SampleReport {
    /// Number of accepted samples inspected (serialized as `"samples"`).
    #[serde(rename = "samples")]
    pub sample_count: usize,
    pub seed: u64,
    /// For [`check_dominance`]: the violating fraction. For [`mc_volume`]:
    /// the acceptance fraction.
    pub estimate: f64,
    /// Binomial standard error `sqrt(estimate * (1 - estimate) / samples)`.
    pub std_error: f64,
    /// Recorded violations, capped at [`MAX_RECORDED_VIOLATIONS`]; the cap
    /// applies to the recording only, never to `estimate`.
    pub violations: Vec<Violation>,
}

impl SampleReport {
    fn from_counts(sample_count: usize, seed: u64, hits: usize, violations: Vec<Violation>) -> Self {
        let estimate = hits as f64 / sample_count as f64;
        let std_error = (estimate * (1.0 - estimate) / sample_count as f64).sqrt();
        SampleReport { sample_count, seed, estimate, std_error, violations }
    }
}

/// The box `[-sqrt(M), sqrt(M)]^m` that both the value-function grid and the
/// rejection sampler range over; every point of `K_x` lies inside it because
/// `‖y‖² ≤ M` on `K`.
fn y_sampling_box(spec: &ProblemSpec) -> BoxDomain {
    if spec.m == 0 {
        return BoxDomain::unit(0);
    }
    let s = spec.y_bound.sqrt();
    BoxDomain::new(vec![-s; spec.m], vec![s; spec.m]).expect("positive finite y_bound")
}

fn constraints_hold(cs: &[Constraint], point: &[f64]) -> Result<bool, PolyError> {
    for c in cs {
        let v = c.poly.evaluate(point)?;
        let ok = match c.kind {
            ConstraintKind::Ineq => v >= -INEQ_BAND,
            ConstraintKind::Eq => v.abs() <= measures::EQUALITY_BAND,
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether the joint point `(x, y)` belongs to `K` at the sampling bands:
/// the standing ball bound plus either the top-level constraint list or (for
/// union problems) at least one piece.
fn fiber_feasible(spec: &ProblemSpec, point: &[f64]) -> Result<bool, PolyError> {
    if spec.m > 0 {
        let y_norm2: f64 = point[spec.n..].iter().map(|v| v * v).sum();
        if y_norm2 > spec.y_bound + INEQ_BAND {
            return Ok(false);
        }
    }
    match &spec.union_pieces {
        Some(pieces) => {
            for piece in pieces {
                if constraints_hold(piece, point)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        None => constraints_hold(&spec.constraints, point),
    }
}

/// `f(x, y)` at a joint point, with the matrix objectives reduced exactly:
/// a matrix over `x` alone means `f = -⟨y, A y⟩` on the unit sphere, whose
/// maximum is `λ_max(-A(x))`; a matrix over `(x, y)` means `f = ⟨z, F z⟩` on
/// the sphere in the extra variables, whose maximum is `λ_max(F(x, y))`.
fn objective_value(spec: &ProblemSpec, point: &[f64]) -> Result<f64, PolyError> {
    match &spec.objective {
        Objective::Scalar(f) => f.evaluate(point),
        Objective::MinOf(q1, q2) => Ok(q1.evaluate(point)?.min(q2.evaluate(point)?)),
        Objective::MaxOf(fs) => {
            let mut best = f64::NEG_INFINITY;
            for f in fs {
                best = best.max(f.evaluate(point)?);
            }
            Ok(best)
        }
        Objective::Pmi(a) => {
            let entries = a.evaluate(point)?;
            let sign = if spec.m == 0 { -1.0 } else { 1.0 };
            let mat = DMatrix::from_row_slice(a.dim(), a.dim(), &entries) * sign;
            let eig = mat.symmetric_eigen();
            Ok(eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l)))
        }
    }
}

/// Grid estimate of the value function `J̄(x) = max_y {f(x, y) : y ∈ K_x}`.
///
/// Maximizes over the tensor grid with `grid_resolution` points per axis of
/// the sampling box (endpoints included), keeping only grid points that pass
/// the feasibility bands. Returns `f64::NEG_INFINITY` when no grid point is
/// feasible — a reportable condition, not an error, since `K_x ≠ ∅` is a
/// user assertion the oracle merely spot-checks.
///
/// Refining the grid from `r` to `2r - 1` points reuses every old point
/// exactly (nested grids), so the returned maximum never decreases.
pub fn value_function(
    spec: &ProblemSpec,
    x: &[f64],
    grid_resolution: usize,
) -> Result<f64, OracleError> {
    if grid_resolution < 2 {
        return Err(OracleError::BadResolution(grid_resolution));
    }
    if x.len() != spec.n {
        return Err(OracleError::PointArity { expected: spec.n, got: x.len() });
    }
    if spec.m == 0 {
        return Ok(if fiber_feasible(spec, x)? {
            objective_value(spec, x)?
        } else {
            f64::NEG_INFINITY
        });
    }
    let y_box = y_sampling_box(spec);
    let mut point = x.to_vec();
    point.resize(spec.n + spec.m, 0.0);
    let mut idx = vec![0usize; spec.m];
    let mut best = f64::NEG_INFINITY;
    loop {
        for (axis, &i) in idx.iter().enumerate() {
            point[spec.n + axis] = y_box.grid_coordinate(axis, i, grid_resolution);
        }
        if fiber_feasible(spec, &point)? {
            best = best.max(objective_value(spec, &point)?);
        }
        let mut axis = 0;
        loop {
            if axis == spec.m {
                return Ok(best);
            }
            idx[axis] += 1;
            if idx[axis] < grid_resolution {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Splits `total` into batch quotas of at most [`BATCH_SIZE`].
fn batch_quotas(total: usize) -> Vec<usize> {
    let mut quotas = Vec::with_capacity(total.div_ceil(BATCH_SIZE));
    let mut left = total;
    while left > 0 {
        let q = left.min(BATCH_SIZE);
        quotas.push(q);
        left -= q;
    }
    quotas
}

/// Runs `job(batch_index)` for every batch and returns the results in batch
/// order. The parallel path is taken when the `parallel` feature is enabled
/// *and* the caller asks for it; results are ordered either way, so the two
/// paths are bit-identical.
fn run_batches<T, F>(n_batches: usize, parallel: bool, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..n_batches).into_par_iter().map(job).collect();
    }
    let _ = parallel;
    (0..n_batches).map(job).collect()
}

/// Per-batch RNG: one ChaCha stream per batch index under a shared seed, so
/// batches are independent and the partition into batches is invisible to
/// the merged result.
fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

struct DominanceBatch {
    violation_count: usize,
    violations: Vec<Violation>,
}

fn dominance_batch(
    p: &Polynomial,
    spec: &ProblemSpec,
    x_box: &BoxDomain,
    y_box: &BoxDomain,
    quota: usize,
    seed: u64,
    batch: usize,
) -> Result<DominanceBatch, OracleError> {
    let mut rng = batch_rng(seed, batch);
    let budget = quota.saturating_mul(ATTEMPT_FACTOR);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let mut out = DominanceBatch { violation_count: 0, violations: Vec::new() };
    let mut point = vec![0.0; spec.n + spec.m];
    while accepted < quota {
        if attempts >= budget {
            return Err(OracleError::ThinDomain);
        }
        attempts += 1;
        let x = x_box.sample(&mut rng);
        let y = y_box.sample(&mut rng);
        point[..spec.n].copy_from_slice(&x);
        point[spec.n..].copy_from_slice(&y);
        if !fiber_feasible(spec, &point)? {
            continue;
        }
        accepted += 1;
        let margin = p.evaluate(&x)? - objective_value(spec, &point)?;
        if margin < -DOMINANCE_TOL {
            out.violation_count += 1;
            if out.violations.len() < MAX_RECORDED_VIOLATIONS {
                out.violations.push(Violation { point: point.clone(), margin });
            }
        }
    }
    Ok(out)
}

fn check_dominance_impl(
    p: &Polynomial,
    spec: &ProblemSpec,
    samples: usize,
    seed: u64,
    parallel: bool,
) -> Result<SampleReport, OracleError> {
    let x_vars = joint_vars(spec.n, 0);
    if *p.vars() != x_vars {
        return Err(OracleError::NotParameterPolynomial { got: p.vars().join(", ") });
    }
    let x_box = &spec.x_box;
    let y_box = y_sampling_box(spec);
    let quotas = batch_quotas(samples);
    let batches = run_batches(quotas.len(), parallel, |b| {
        dominance_batch(p, spec, x_box, &y_box, quotas[b], seed, b)
    });
    let mut violation_count = 0usize;
    let mut violations = Vec::new();
    for batch in batches {
        let batch = batch?;
        violation_count += batch.violation_count;
        let room = MAX_RECORDED_VIOLATIONS - violations.len();
        violations.extend(batch.violations.into_iter().take(room));
    }
    Ok(SampleReport::from_counts(samples, seed, violation_count, violations))
}

/// Rejection-samples feasible points of `K` and records every one where
/// `p(x) - f(x, y) < -DOMINANCE_TOL`. `p` must be a polynomial over the
/// parameter variables only.
///
/// `estimate` is the violating fraction, so a clean report has
/// `estimate == 0.0` and an empty violation list. Aborts with
/// [`OracleError::ThinDomain`] when fewer than one candidate in
/// `1 / MIN_ACCEPTANCE_RATE` lands in `K`.
pub fn check_dominance(
    p: &Polynomial,
    spec: &ProblemSpec,
    samples: usize,
    seed: u64,
) -> Result<SampleReport, OracleError> {
    check_dominance_impl(p, spec, samples, seed, true)
}

fn mc_volume_impl<F>(
    predicate: F,
    box_domain: &BoxDomain,
    samples: usize,
    seed: u64,
    parallel: bool,
) -> Result<SampleReport, OracleError>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    if samples < MIN_VOLUME_SAMPLES {
        return Err(OracleError::TooFewSamples(samples));
    }
    let quotas = batch_quotas(samples);
    let hits: usize = run_batches(quotas.len(), parallel, |b| {
        let mut rng = batch_rng(seed, b);
        let mut hits = 0usize;
        for _ in 0..quotas[b] {
            if predicate(&box_domain.sample(&mut rng)) {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum();
    Ok(SampleReport::from_counts(samples, seed, hits, Vec::new()))
}

/// Monte Carlo estimate of the volume fraction of `box_domain` satisfying
/// `predicate`: `estimate` is the acceptance fraction and `std_error` the
/// binomial standard error. Requires at least [`MIN_VOLUME_SAMPLES`]
/// samples.
pub fn mc_volume<F>(
    predicate: F,
    box_domain: &BoxDomain,
    samples: usize,
    seed: u64,
) -> Result<SampleReport, OracleError>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    mc_volume_impl(predicate, box_domain, samples, seed, true)
}

fn l1_gap_impl(
    p: &Polynomial,
    spec: &ProblemSpec,
    grid_resolution: usize,
    parallel: bool,
) -> Result<f64, OracleError> {
    if grid_resolution < 2 {
        return Err(OracleError::BadResolution(grid_resolution));
    }
    let precheck = check_dominance_impl(p, spec, L1_PRECHECK_SAMPLES, L1_PRECHECK_SEED, parallel)?;
    if !precheck.violations.is_empty() {
        return Err(OracleError::Dominance { report: precheck });
    }
    let n = spec.n;
    let (nodes, weights) = gauss_legendre(grid_resolution);
    let (half, center) = spec.x_box.halfwidth_center();
    let total = grid_resolution.pow(n as u32);
    let terms = run_batches(total, parallel, |flat| -> Result<f64, OracleError> {
        let mut x = vec![0.0; n];
        let mut weight = 1.0;
        let mut rest = flat;
        for axis in 0..n {
            let digit = rest % grid_resolution;
            rest /= grid_resolution;
            x[axis] = center[axis] + half[axis] * nodes[digit];
            // w/2 per axis: quadrature against the *normalized* measure.
            weight *= weights[digit] / 2.0;
        }
        let value = value_function(spec, &x, grid_resolution)?;
        if value == f64::NEG_INFINITY {
            return Err(OracleError::EmptyFiber { empty: 1, total });
        }
        Ok(weight * (p.evaluate(&x)? - value))
    });
    let mut gap = 0.0;
    let mut empty = 0usize;
    for term in terms {
        match term {
            Ok(t) => gap += t,
            Err(OracleError::EmptyFiber { .. }) => empty += 1,
            Err(e) => return Err(e),
        }
    }
    if empty > 0 {
        return Err(OracleError::EmptyFiber { empty, total });
    }
    Ok(gap)
}

/// Quadrature estimate of `∫_B (p - J̄) dλ̄` against the normalized measure
/// on the box: tensor Gauss–Legendre nodes in `x` (`grid_resolution` per
/// axis), with `J̄` evaluated by [`value_function`] at the same resolution.
///
/// A dominance precheck (fixed internal seed and budget) runs first; if it
/// finds violations the gap is rejected with the offending report, so a
/// returned value is a genuine one-sided error and sits above `-1e-6`.
pub fn l1_gap(
    p: &Polynomial,
    spec: &ProblemSpec,
    grid_resolution: usize,
) -> Result<f64, OracleError> {
    l1_gap_impl(p, spec, grid_resolution, true)
}

/// Cross-checks the closed-form normalized box moments against tensor
/// Gauss–Legendre quadrature and returns the largest absolute deviation
/// over all monomials of degree `≤ max_degree` in `n` variables.
///
/// # Panics
///
/// Panics when `n` is not in `1..=4` or `max_degree > 8`; the check is a
/// desk-scale diagnostic, not a production path.
#[must_use]
pub fn quadrature_moment_check(n: usize, max_degree: u32) -> f64 {
    assert!((1..=4).contains(&n), "n must be in 1..=4, got {n}");
    assert!(max_degree <= 8, "max_degree must be <= 8, got {max_degree}");
    let r = max_degree as usize / 2 + 1;
    let (nodes, weights) = gauss_legendre(r);
    // 1-D normalized power sums s_d = Σ_i (w_i / 2) t_i^d, summed in
    // mirrored pairs so odd powers cancel exactly, not just to roundoff.
    let mut power_sums = vec![0.0f64; max_degree as usize + 1];
    for (d, sum) in power_sums.iter_mut().enumerate() {
        let (mut lo, mut hi) = (0, r - 1);
        let mut acc = 0.0;
        while lo < hi {
            acc += weights[lo] / 2.0 * nodes[lo].powi(d as i32)
                + weights[hi] / 2.0 * nodes[hi].powi(d as i32);
            lo += 1;
            hi -= 1;
        }
        if lo == hi {
            acc += weights[lo] / 2.0 * nodes[lo].powi(d as i32);
        }
        *sum = acc;
    }
    let moments = measures::box_moments(n, max_degree);
    let mut worst: f64 = 0.0;
    for mono in moments.basis().monomials() {
        let quad: f64 = mono.exps().iter().map(|&e| power_sums[e as usize]).product();
        let exact = moments.value(mono).expect("monomial from the same basis");
        worst = worst.max((exact - quad).abs());
    }
    worst
}

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`; exact for
/// polynomials of degree `≤ 2r - 1`, weights summing to 2.
///
/// Nodes are found by Newton iteration on the Legendre recurrence from the
/// Chebyshev initial guess and mirrored exactly (`node[r-1-i] = -node[i]`,
/// equal weights; a root at the origin is pinned to `0.0`), so the rule is
/// symmetric to the last bit.
///
/// # Panics
///
/// Panics when `r == 0`.
#[must_use]
pub fn gauss_legendre(r: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(r >= 1, "need at least one node");
    // P_r(z) and P_{r-1}(z) by the three-term recurrence.
    let legendre_pair = |z: f64| -> (f64, f64) {
        let mut p = 1.0f64;
        let mut p_prev = 0.0f64;
        for j in 1..=r {
            let p_prev2 = p_prev;
            p_prev = p;
            p = ((2 * j - 1) as f64 * z * p_prev - (j - 1) as f64 * p_prev2) / j as f64;
        }
        (p, p_prev)
    };
    let mut nodes = vec![0.0; r];
    let mut weights = vec![0.0; r];
    for i in 0..r.div_ceil(2) {
        let middle = 2 * i + 1 == r;
        let mut z = if middle {
            // The middle root of an odd-degree Legendre polynomial is 0.
            0.0
        } else {
            (PI * (i as f64 + 0.75) / (r as f64 + 0.5)).cos()
        };
        if !middle {
            for _ in 0..100 {
                let (p, p_prev) = legendre_pair(z);
                let dp = r as f64 * (z * p - p_prev) / (z * z - 1.0);
                let step = p / dp;
                z -= step;
                if step.abs() <= 1e-15 {
                    break;
                }
            }
        }
        let (p, p_prev) = legendre_pair(z);
        let dp = r as f64 * (z * p - p_prev) / (z * z - 1.0);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // The Chebyshev guess for small i lands on the largest root, so -z
        // is the i-th node in ascending order.
        nodes[i] = -z;
        nodes[r - 1 - i] = z;
        weights[i] = w;
        weights[r - 1 - i] = w;
    }
    (nodes, weights)
}

/// Serial counterparts of the sampling kernels. Same arguments, same
/// results bit for bit; only the scheduling differs. This is the baseline
/// the bench suite compares the parallel path against, and the only path
/// when the `parallel` feature is off.
pub mod sequential {
    use super::*;

    pub fn check_dominance(
        p: &Polynomial,
        spec: &ProblemSpec,
        samples: usize,
        seed: u64,
    ) -> Result<SampleReport, OracleError> {
        check_dominance_impl(p, spec, samples, seed, false)
    }

    pub fn mc_volume<F>(
        predicate: F,
        box_domain: &BoxDomain,
        samples: usize,
        seed: u64,
    ) -> Result<SampleReport, OracleError>
    where
        F: Fn(&[f64]) -> bool + Sync,
    {
        mc_volume_impl(predicate, box_domain, samples, seed, false)
    }

    pub fn l1_gap(
        p: &Polynomial,
        spec: &ProblemSpec,
        grid_resolution: usize,
    ) -> Result<f64, OracleError> {
        l1_gap_impl(p, spec, grid_resolution, false)
    }
}
