//! Box domains, reference moments, and rescaling to normalized coordinates.
//!
//! The certificate programs are posed on the normalized box
//! `B = [-1, 1]^n` carrying the *probability* measure `λ = dx / 2^n`, with
//! quantified variables confined to the unit ball. [`box_moments`] supplies
//! the closed-form moments of `λ`; [`rescale_problem`] maps a user problem
//! (arbitrary box, `||y||^2 <= M`) into these coordinates by the affine
//! substitution `x_i = c_i + h_i x̂_i`, `y_j = sqrt(M) ŷ_j`, and appends the
//! two structural constraint families exactly once:
//!
//! * the ball cut `1 - ||ŷ||^2 >= 0` (the image of the `M`-bound), and
//! * the box cuts `θ_i = 1 - x̂_i^2 >= 0`, one per parameter coordinate.
//!
//! The bound `M` is the user's assertion, not something provable from the
//! constraint list; it is checked by rejection sampling at rescale time and a
//! violation produces a *warning* on the scaled problem, never a failure.
//! Volumes downstream are reported as fractions of `vol(B)`, consistent with
//! the normalization of `λ`.

use crate::basis::{MomentVector, MonomialBasis};
use crate::engine::{Constraint, ConstraintKind, ProblemSpec};
use crate::poly::{joint_vars, Monomial, PolyError, Polynomial, Vars};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Sample budget for the defensive `M - ||y||^2 >= 0` check at rescale time.
const Y_BOUND_CHECK_SAMPLES: usize = 10_000;
/// Fixed seed for the defensive check; rescaling takes no RNG input and must
/// stay deterministic.
const Y_BOUND_CHECK_SEED: u64 = 0x5eed_b0c5;
/// The defensive check samples `y` from a box this much wider than the ball
/// of radius `sqrt(M)`, so sampled fibers can actually contain witnesses of a
/// too-small `M`.
const Y_BOUND_CHECK_INFLATION: f64 = 1.25;
/// Acceptance band for equality constraints while sampling (zero-measure sets
/// are unsampleable exactly).
pub const EQUALITY_BAND: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("box bounds must satisfy lower < upper; coordinate {i} has [{lower}, {upper}]")]
    DegenerateBox { i: usize, lower: f64, upper: f64 },
    #[error("box bounds must be finite; coordinate {i} is [{lower}, {upper}]")]
    NonFiniteBox { i: usize, lower: f64, upper: f64 },
    #[error("box needs at least one coordinate")]
    EmptyBox,
    #[error("box lower/upper lists have different lengths: {lower} vs {upper}")]
    MismatchedBounds { lower: usize, upper: usize },
    #[error("rescaling requires a scalar objective; apply the objective transform first")]
    ObjectiveNotScalar,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Engine(Box<crate::engine::EngineError>),
}

impl From<crate::engine::EngineError> for MeasureError {
    fn from(e: crate::engine::EngineError) -> Self {
        MeasureError::Engine(Box::new(e))
    }
}

/// A compact axis-aligned box with nonempty interior.
#[derive(Clone, PartialEq, Debug)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, MeasureError> {
        if lower.len() != upper.len() {
            return Err(MeasureError::MismatchedBounds {
                lower: lower.len(),
                upper: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(MeasureError::EmptyBox);
        }
        for i in 0..lower.len() {
            if !(lower[i].is_finite() && upper[i].is_finite()) {
                return Err(MeasureError::NonFiniteBox { i, lower: lower[i], upper: upper[i] });
            }
            if lower[i] >= upper[i] {
                return Err(MeasureError::DegenerateBox { i, lower: lower[i], upper: upper[i] });
            }
        }
        Ok(BoxDomain { lower, upper })
    }

    /// The normalized box `[-1, 1]^n`.
    pub fn unit(n: usize) -> Self {
        BoxDomain { lower: vec![-1.0; n], upper: vec![1.0; n] }
    }

    pub fn n(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| l <= v && v <= u)
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| u - l)
            .product()
    }

    /// Per-coordinate `(halfwidth, center)` of the affine map
    /// `x = center + halfwidth * x̂` from the normalized box.
    pub fn halfwidth_center(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.lower.iter().zip(&self.upper).map(|(&l, &u)| (u - l) / 2.0).collect();
        let c = self.lower.iter().zip(&self.upper).map(|(&l, &u)| (u + l) / 2.0).collect();
        (h, c)
    }

    /// Uniform sample.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| rng.random_range(l..u))
            .collect()
    }

    /// The `i`-th coordinate of the tensor grid with `resolution` points per
    /// axis, endpoints included.
    pub fn grid_coordinate(&self, axis: usize, i: usize, resolution: usize) -> f64 {
        debug_assert!(resolution >= 2);
        let t = i as f64 / (resolution - 1) as f64;
        self.lower[axis] + t * (self.upper[axis] - self.lower[axis])
    }
}

/// Moments of the normalized Lebesgue measure on `[-1, 1]^n` for all
/// monomials of degree `<= max_degree`:
/// `γ_α = Π_i ∫ x^{α_i} dx/2 = Π_i [α_i even] / (α_i + 1)`.
pub fn box_moments(n_vars: usize, max_degree: u32) -> MomentVector {
    MomentVector::from_fn(MonomialBasis::new(n_vars, max_degree), |m| {
        m.exps()
            .iter()
            .map(|&a| if a % 2 == 1 { 0.0 } else { 1.0 / (a as f64 + 1.0) })
            .product()
    })
}

/// A constraint of the scaled problem (normalized coordinates, joint
/// variable list).
#[derive(Clone, Debug)]
pub struct ScaledConstraint {
    pub poly: Polynomial,
    pub kind: ConstraintKind,
}

/// A problem mapped to normalized coordinates, together with the affine maps
/// needed to report results in the original ones.
#[derive(Clone, Debug)]
pub struct ScaledProblem {
    pub n: usize,
    pub m: usize,
    pub joint_vars: Vars,
    pub x_vars: Vars,
    /// The scalar objective in normalized coordinates.
    pub f: Polynomial,
    /// User constraints in normalized coordinates (single-fiber problems).
    pub constraints: Vec<ScaledConstraint>,
    /// Per-piece user constraints for union problems; `constraints` is empty
    /// in that case.
    pub union_constraints: Option<Vec<Vec<ScaledConstraint>>>,
    /// The ball cut `1 - ||ŷ||^2`, present when `m > 0`. Appended here and
    /// nowhere else.
    pub ball: Option<Polynomial>,
    /// The box cuts `θ_i = 1 - x̂_i^2`, `i = 1..n`, over the joint variables.
    pub box_cuts: Vec<Polynomial>,
    /// Original-coordinate reconstruction: `x_i = x_shift[i] + x_scale[i] x̂_i`.
    pub x_scale: Vec<f64>,
    pub x_shift: Vec<f64>,
    /// `y_j = y_scale * ŷ_j` with `y_scale = sqrt(M)`.
    pub y_scale: f64,
    /// Diagnostics produced while rescaling (currently: sampled violations
    /// of the `M`-bound).
    pub warnings: Vec<String>,
}

impl ScaledProblem {
    /// Maps a polynomial in normalized `x̂` coordinates back to the original
    /// `x` coordinates: `p_orig(x) = p̂((x - c) / h)`.
    pub fn polynomial_to_original(&self, p_hat: &Polynomial) -> Result<Polynomial, PolyError> {
        let inv_scale: Vec<f64> = self.x_scale.iter().map(|&h| 1.0 / h).collect();
        let inv_shift: Vec<f64> = self
            .x_shift
            .iter()
            .zip(&self.x_scale)
            .map(|(&c, &h)| -c / h)
            .collect();
        p_hat.substitute_affine(&inv_scale, &inv_shift)
    }

    /// Maps an original-coordinate parameter point into the normalized box.
    pub fn to_scaled_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.x_shift.iter().zip(&self.x_scale))
            .map(|(&v, (&c, &h))| (v - c) / h)
            .collect()
    }

    /// Maps a normalized parameter point back to original coordinates.
    pub fn to_original_x(&self, x_hat: &[f64]) -> Vec<f64> {
        x_hat
            .iter()
            .zip(self.x_shift.iter().zip(&self.x_scale))
            .map(|(&v, (&c, &h))| c + h * v)
            .collect()
    }
}

/// Rescales a validated, scalar-objective problem into normalized
/// coordinates. See the module docs for the conventions.
pub fn rescale_problem(spec: &ProblemSpec) -> Result<ScaledProblem, MeasureError> {
    spec.validate()?;
    let f = spec.scalar_objective().ok_or(MeasureError::ObjectiveNotScalar)?;
    let (n, m) = (spec.n, spec.m);
    let joint = joint_vars(n, m);
    let (h, c) = spec.x_box.halfwidth_center();
    let y_scale = spec.y_bound.sqrt();

    let mut scale = h.clone();
    let mut shift = c.clone();
    scale.extend(std::iter::repeat(y_scale).take(m));
    shift.extend(std::iter::repeat(0.0).take(m));

    let map = |p: &Polynomial| p.substitute_affine(&scale, &shift);
    let map_list = |cs: &[Constraint]| -> Result<Vec<ScaledConstraint>, MeasureError> {
        cs.iter()
            .map(|cst| {
                Ok(ScaledConstraint { poly: map(&cst.poly)?, kind: cst.kind })
            })
            .collect()
    };

    let ball = (m > 0).then(|| {
        let mut terms = vec![(Monomial::one(n + m), 1.0)];
        for j in 0..m {
            let mut exps = vec![0u32; n + m];
            exps[n + j] = 2;
            terms.push((Monomial::new(exps), -1.0));
        }
        Polynomial::from_terms(joint.clone(), terms).expect("static ball cut")
    });
    let box_cuts = (0..n)
        .map(|i| {
            let mut exps = vec![0u32; n + m];
            exps[i] = 2;
            Polynomial::from_terms(
                joint.clone(),
                [(Monomial::one(n + m), 1.0), (Monomial::new(exps), -1.0)],
            )
            .expect("static box cut")
        })
        .collect();

    let warnings = check_y_bound_by_sampling(spec);

    Ok(ScaledProblem {
        n,
        m,
        joint_vars: joint.clone(),
        x_vars: joint_vars(n, 0),
        f: map(f)?,
        constraints: match &spec.union_pieces {
            Some(_) => Vec::new(),
            None => map_list(&spec.constraints)?,
        },
        union_constraints: spec
            .union_pieces
            .as_ref()
            .map(|pieces| pieces.iter().map(|p| map_list(p)).collect::<Result<_, _>>())
            .transpose()?,
        ball,
        box_cuts,
        x_scale: h,
        x_shift: c,
        y_scale,
        warnings,
    })
}

/// Rejection-samples the original-coordinate problem looking for feasible
/// points with `||y||^2 > M`. Any hit means the user-supplied bound is wrong
/// and the ball cut will silently truncate `K`; that is worth a warning but
/// is not a hard failure (the sample may also sit in the equality band).
fn check_y_bound_by_sampling(spec: &ProblemSpec) -> Vec<String> {
    let m = spec.m;
    if m == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(Y_BOUND_CHECK_SEED);
    let radius = Y_BOUND_CHECK_INFLATION * spec.y_bound.sqrt();
    let piece_lists: Vec<&[Constraint]> = match &spec.union_pieces {
        Some(pieces) => pieces.iter().map(|p| p.as_slice()).collect(),
        None => vec![spec.constraints.as_slice()],
    };
    let mut worst: Option<(f64, Vec<f64>)> = None;
    let mut violations = 0usize;
    let mut feasible = 0usize;
    for _ in 0..Y_BOUND_CHECK_SAMPLES {
        let mut point = spec.x_box.sample(&mut rng);
        for _ in 0..m {
            point.push(rng.random_range(-radius..radius));
        }
        let ok = piece_lists.iter().any(|cs| {
            cs.iter().all(|cst| {
                let v = cst.poly.evaluate(&point).unwrap_or(f64::NAN);
                match cst.kind {
                    ConstraintKind::Ineq => v >= 0.0,
                    ConstraintKind::Eq => v.abs() <= EQUALITY_BAND,
                }
            })
        });
        if !ok {
            continue;
        }
        feasible += 1;
        let y_sq: f64 = point[spec.n..].iter().map(|v| v * v).sum();
        if y_sq > spec.y_bound {
            violations += 1;
            if worst.as_ref().map_or(true, |(w, _)| y_sq > *w) {
                worst = Some((y_sq, point.clone()));
            }
        }
    }
    match worst {
        Some((y_sq, point)) => vec![format!(
            "y_bound looks too small: {violations} of {feasible} sampled feasible points \
             have ||y||^2 > {} (worst {:.6} at {:?}); the ball cut will truncate K",
            spec.y_bound, y_sq, point
        )],
        None => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Mode, Objective};
    use crate::poly::{joint_vars, Monomial, Polynomial};

    fn jp(n: usize, m: usize, terms: &[(&[u32], f64)]) -> Polynomial {
        Polynomial::from_terms(
            joint_vars(n, m),
            terms.iter().map(|(e, c)| (Monomial::new(e.to_vec()), *c)),
        )
        .unwrap()
    }

    fn basic_spec(x_box: BoxDomain, y_bound: f64, f: Polynomial, gs: Vec<Constraint>) -> ProblemSpec {
        ProblemSpec {
            n: x_box.n(),
            m: 1,
            x_box,
            y_bound,
            constraints: gs,
            objective: Objective::Scalar(f),
            mode: Mode::Inner,
            union_pieces: None,
        }
    }

    #[test]
    fn box_validation_rejects_degenerate_and_non_finite_bounds() {
        assert!(matches!(
            BoxDomain::new(vec![0.0], vec![0.0]),
            Err(MeasureError::DegenerateBox { .. })
        ));
        assert!(matches!(
            BoxDomain::new(vec![f64::NEG_INFINITY], vec![1.0]),
            Err(MeasureError::NonFiniteBox { .. })
        ));
        assert!(matches!(
            BoxDomain::new(vec![0.0, 0.0], vec![1.0]),
            Err(MeasureError::MismatchedBounds { .. })
        ));
        assert!(BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 0.5]).is_ok());
    }

    #[test]
    fn box_moment_values_match_the_closed_form() {
        let z = box_moments(2, 6);
        let at = |exps: &[u32]| z.value(&Monomial::new(exps.to_vec())).unwrap();
        assert_eq!(at(&[0, 0]), 1.0);
        assert_eq!(at(&[1, 0]), 0.0);
        assert_eq!(at(&[0, 3]), 0.0);
        assert!((at(&[2, 4]) - 1.0 / 15.0).abs() < 1e-16);
        assert!((at(&[2, 0]) - 1.0 / 3.0).abs() < 1e-16);
        assert!((at(&[4, 2]) - 1.0 / 15.0).abs() < 1e-16);
    }

    #[test]
    fn box_moments_match_monte_carlo_estimates() {
        // Cross-check every moment with |α| <= 6 in 3 variables against a
        // 1e6-sample Monte Carlo estimate.  The band is 4.5 standard errors:
        // with 84 simultaneous checks a 3σ band would flag a benign extreme
        // roughly one seed in five, while 4.5σ keeps the family-wise false
        // alarm rate below 1e-3 and still catches any real moment error
        // (the smallest possible, 1/105 for |α| = 6, sits beyond 20σ).
        use rand::{RngExt, SeedableRng};
        let n = 3usize;
        let z = box_moments(n, 6);
        let basis = z.basis().clone();
        let samples = 1_000_000usize;
        let mut sums = vec![0.0f64; basis.len()];
        let mut sq_sums = vec![0.0f64; basis.len()];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut point = vec![0.0f64; n];
        for _ in 0..samples {
            for v in point.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            for (k, mono) in basis.monomials().iter().enumerate() {
                let val = mono.eval(&point);
                sums[k] += val;
                sq_sums[k] += val * val;
            }
        }
        for (k, mono) in basis.monomials().iter().enumerate() {
            let mean = sums[k] / samples as f64;
            let var = (sq_sums[k] / samples as f64 - mean * mean).max(0.0);
            let se = (var / samples as f64).sqrt();
            let want = z.value(mono).unwrap();
            assert!(
                (mean - want).abs() <= 4.5 * se + 1e-12,
                "moment {mono}: mc {mean} vs exact {want} (se {se})"
            );
        }
    }

    #[test]
    fn rescaling_the_unit_box_with_unit_bound_is_identity_plus_cuts() {
        // K = {y : 1 - y^2 >= 0}, f = y, B = [-1, 1].
        let f = jp(1, 1, &[(&[0, 1], 1.0)]);
        let g = jp(1, 1, &[(&[0, 0], 1.0), (&[0, 2], -1.0)]);
        let spec = basic_spec(BoxDomain::unit(1), 1.0, f.clone(), vec![Constraint::ineq(g.clone())]);
        let scaled = rescale_problem(&spec).unwrap();
        assert_eq!(scaled.f, f);
        assert_eq!(scaled.constraints.len(), 1);
        assert_eq!(scaled.constraints[0].poly, g);
        // Structural cuts appended exactly once, not also into `constraints`.
        assert_eq!(scaled.ball.as_ref().unwrap(), &g);
        assert_eq!(scaled.box_cuts.len(), 1);
        assert_eq!(
            scaled.box_cuts[0],
            jp(1, 1, &[(&[0, 0], 1.0), (&[2, 0], -1.0)])
        );
        assert!(scaled.warnings.is_empty());
    }

    #[test]
    fn rescaling_shifts_the_box_affinely() {
        // B = [0, 2]: x = 1 + x̂, so f = x becomes 1 + x̂.
        let f = jp(1, 1, &[(&[1, 0], 1.0)]);
        let spec = basic_spec(
            BoxDomain::new(vec![0.0], vec![2.0]).unwrap(),
            1.0,
            f,
            vec![],
        );
        let scaled = rescale_problem(&spec).unwrap();
        assert_eq!(scaled.f, jp(1, 1, &[(&[0, 0], 1.0), (&[1, 0], 1.0)]));
        assert_eq!(scaled.x_scale, vec![1.0]);
        assert_eq!(scaled.x_shift, vec![1.0]);
    }

    #[test]
    fn y_bound_four_scales_y_by_two() {
        // g = 4 - y^2 >= 0 with M = 4 maps to 4(1 - ŷ^2).
        let g = jp(1, 1, &[(&[0, 0], 4.0), (&[0, 2], -1.0)]);
        let spec = basic_spec(BoxDomain::unit(1), 4.0, jp(1, 1, &[(&[0, 1], 1.0)]), vec![
            Constraint::ineq(g),
        ]);
        let scaled = rescale_problem(&spec).unwrap();
        assert_eq!(scaled.y_scale, 2.0);
        assert_eq!(
            scaled.constraints[0].poly,
            jp(1, 1, &[(&[0, 0], 4.0), (&[0, 2], -4.0)])
        );
    }

    #[test]
    fn scaled_evaluation_round_trips_through_original_coordinates() {
        let f = jp(2, 1, &[(&[2, 0, 1], 1.5), (&[0, 1, 0], -0.5), (&[1, 1, 2], 0.25)]);
        let spec = ProblemSpec {
            n: 2,
            m: 1,
            x_box: BoxDomain::new(vec![-0.5, 1.0], vec![1.5, 4.0]).unwrap(),
            y_bound: 9.0,
            constraints: vec![],
            objective: Objective::Scalar(f.clone()),
            mode: Mode::Inner,
            union_pieces: None,
        };
        let scaled = rescale_problem(&spec).unwrap();
        for (xh, yh) in [([0.3, -0.8], 0.5), ([-1.0, 1.0], -0.99), ([0.0, 0.0], 0.0)] {
            let orig_x = scaled.to_original_x(&xh);
            let orig = [orig_x[0], orig_x[1], scaled.y_scale * yh];
            let want = f.evaluate(&orig).unwrap();
            let got = scaled.f.evaluate(&[xh[0], xh[1], yh]).unwrap();
            assert!((want - got).abs() <= 1e-10 * (1.0 + want.abs()), "{want} vs {got}");
        }
        // x-only polynomial round trip: p̂(x̂) -> p(x).
        let p_hat = jp(2, 0, &[(&[2, 0], 1.0), (&[1, 1], -1.0)]).embed(&scaled.x_vars).unwrap();
        let p = scaled.polynomial_to_original(&p_hat).unwrap();
        for xh in [[0.2, 0.7], [-0.9, -0.1]] {
            let x = scaled.to_original_x(&xh);
            let lhs = p.evaluate(&x).unwrap();
            let rhs = p_hat.evaluate(&xh).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn undersized_y_bound_produces_a_warning_not_an_error() {
        // K = {y : 4 - y^2 >= 0} but the user claims M = 1; feasible samples
        // with 1 < ||y||^2 <= 4 exist and should be flagged.
        let g = jp(1, 1, &[(&[0, 0], 4.0), (&[0, 2], -1.0)]);
        let spec = basic_spec(
            BoxDomain::unit(1),
            1.0,
            jp(1, 1, &[(&[0, 1], 1.0)]),
            vec![Constraint::ineq(g)],
        );
        let scaled = rescale_problem(&spec).unwrap();
        assert_eq!(scaled.warnings.len(), 1);
        assert!(scaled.warnings[0].contains("y_bound"), "{}", scaled.warnings[0]);
    }

    #[test]
    fn rescale_rejects_matrix_objectives() {
        use crate::poly::PolyMatrix;
        let x = joint_vars(1, 0);
        let one = Polynomial::constant(x, 1.0);
        let spec = ProblemSpec {
            n: 1,
            m: 0,
            x_box: BoxDomain::unit(1),
            y_bound: 1.0,
            constraints: vec![],
            objective: Objective::Pmi(PolyMatrix::new(vec![vec![one]]).unwrap()),
            mode: Mode::Inner,
            union_pieces: None,
        };
        assert!(matches!(
            rescale_problem(&spec),
            Err(MeasureError::ObjectiveNotScalar)
        ));
    }
}
