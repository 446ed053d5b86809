//! End-to-end drivers: problem specifications, objective transforms, and the
//! hierarchy runners that connect rescaling, certificate assembly, the conic
//! backend, and the verification oracle.
//!
//! A [`ProblemSpec`] describes the quantified-set problem in user
//! coordinates:
//!
//! * parameters `x` range over a compact box `B` (n coordinates);
//! * quantified variables `y` range over the fiber
//!   `K_x = {y : g_j(x, y) >= 0, h_l(x, y) = 0}` together with the standing
//!   bound `||y||^2 <= y_bound` on all of `K`;
//! * the objective is a scalar polynomial `f(x, y)`, a symmetric polynomial
//!   matrix (for matrix-inequality sets), or the minimum of two polynomials.
//!
//! The drivers normalize everything to the scalar form "approximate the
//! value function `J(x) = max_y f(x, y)` from above by a polynomial `p_k`";
//! inner approximations of `{x : f <= 0 for all y}` read off `{p_k <= 0}`,
//! outer approximations of `{x : f >= 0 for some y}` read off `{p_k >= 0}`.
//! The same solve serves both, only the reported predicate differs.

use crate::certify::{self, CertifyError};
use crate::conic::{self, ConicError, SolveStatus, SolverOptions};
use crate::measures::{self, rescale_problem, BoxDomain};
use crate::oracle::{self, OracleError, SampleReport};
use crate::poly::{joint_vars, Monomial, PolyError, PolyMatrix, Polynomial, Vars};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("problem has {got} box coordinates but n = {n}")]
    BoxArity { n: usize, got: usize },
    #[error("{place}: polynomial variables [{got}] do not match the declared list [{want}]")]
    WrongVariables { place: String, got: String, want: String },
    #[error("y_bound must be positive and finite, got {0}")]
    BadYBound(f64),
    #[error("union problems must keep the top-level constraint list empty (found {0} entries)")]
    UnionWithTopLevelConstraints(usize),
    #[error("union_pieces must contain at least one piece")]
    EmptyUnion,
    #[error("matrix objective must be square and nonempty")]
    BadMatrixObjective,
    #[error("objective transform required before this operation: {0}")]
    UntransformedObjective(&'static str),
    #[error("operation requires {expected} parameter variables, got {got}")]
    ParameterArity { expected: usize, got: usize },
    #[error("intersection requires at least one component problem")]
    EmptyIntersection,
    #[error("component problems must share n, box, m, y_bound and constraints; component {0} differs: {1}")]
    IntersectionMismatch(usize, String),
    #[error("monotone hierarchy requires contiguous increasing orders, got {0:?}")]
    NonContiguousOrders(Vec<u32>),
    #[error("no orders requested")]
    NoOrders,
    #[error("spec declares mode {got:?} but this driver produces {expected:?} approximations")]
    WrongMode { expected: Mode, got: Mode },
    #[error("{place}: constraint polynomial is identically zero")]
    ZeroConstraint { place: String },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Measure(#[from] measures::MeasureError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Whether a constraint polynomial is an inequality `g >= 0` or an equality
/// `h = 0` in the description of `K_x`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Ineq,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub poly: Polynomial,
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn ineq(poly: Polynomial) -> Self {
        Constraint { poly, kind: ConstraintKind::Ineq }
    }

    pub fn eq(poly: Polynomial) -> Self {
        Constraint { poly, kind: ConstraintKind::Eq }
    }
}

/// The objective of a quantified-set problem.
#[derive(Clone, Debug)]
pub enum Objective {
    /// A scalar polynomial over the joint variables `(x, y)`.
    Scalar(Polynomial),
    /// A symmetric polynomial matrix inequality. With no quantified block
    /// (`m = 0`) the matrix is `A(x)` and the described set is
    /// `{x : A(x) ⪰ 0}`; with a quantified block it is `F(x, y)` and the
    /// set is `{x : F(x, y) ⪯ 0 for all y in K_x}`. Either way
    /// [`pmi_to_scalar`] rewrites it as a scalar quadratic form over a unit
    /// sphere in auxiliary quantified variables (negated in the `A` case so
    /// the inner `p <= 0` test describes the right region).
    Pmi(PolyMatrix),
    /// `f = min(q1, q2)`; scalarized by [`lift_min`] with two auxiliary
    /// quantified variables.
    MinOf(Polynomial, Polynomial),
    /// `f = max_l f_l`; used by [`approximate_intersection`], which runs the
    /// hierarchy once per component and conjoins the resulting predicates.
    /// (`max_y max_l f_l <= 0` iff every `max_y f_l <= 0`.)
    MaxOf(Vec<Polynomial>),
}

/// Which side of the value function the reported set predicate uses.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Inner approximation of the "for all" set: `{x : p_k(x) <= 0}`.
    Inner,
    /// Outer approximation of the "exists" set: `{x : p_k(x) >= 0}`.
    Outer,
}

/// A quantified-set problem in user coordinates.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub n: usize,
    pub m: usize,
    pub x_box: BoxDomain,
    /// Standing bound `M` with `M - ||y||^2 >= 0` on `K` (checked by
    /// sampling at rescale time, not algebraically). Unused when `m = 0`.
    pub y_bound: f64,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
    /// Which predicate the hierarchy reports: `{p_k <= 0}` inside the
    /// "for all" set, or `{p_k >= 0}` outside the "exists" set.
    pub mode: Mode,
    /// When present, `K_x` is the union of the fibers described by each
    /// piece's constraint list and `constraints` must stay empty.
    pub union_pieces: Option<Vec<Vec<Constraint>>>,
}

impl ProblemSpec {
    /// Canonical variable list `x1..xn, y1..ym`.
    pub fn joint_vars(&self) -> Vars {
        joint_vars(self.n, self.m)
    }

    pub fn x_vars(&self) -> Vars {
        joint_vars(self.n, 0)
    }

    /// The scalar objective, if this spec is already in scalar form.
    pub fn scalar_objective(&self) -> Option<&Polynomial> {
        match &self.objective {
            Objective::Scalar(f) => Some(f),
            _ => None,
        }
    }

    /// Structural validation: arities, variable lists, bounds. Returns the
    /// first defect found; schema-level *collection* of defects is the CLI's
    /// job, this is the library-level gate.
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.x_box.n() != self.n {
            return Err(EngineError::BoxArity { n: self.n, got: self.x_box.n() });
        }
        if !(self.y_bound.is_finite() && self.y_bound > 0.0) {
            return Err(EngineError::BadYBound(self.y_bound));
        }
        let want = self.joint_vars();
        let check = |place: String, p: &Polynomial| -> Result<(), EngineError> {
            if *p.vars() == want {
                Ok(())
            } else {
                Err(EngineError::WrongVariables {
                    place,
                    got: p.vars().join(", "),
                    want: want.join(", "),
                })
            }
        };
        // Identically zero constraint polynomials are rejected outright: a
        // zero generator contributes nothing to the fiber description but
        // would hand the solver an unconstrained multiplier block.
        let check_constraint = |place: String, c: &Constraint| -> Result<(), EngineError> {
            if c.poly.is_zero() {
                return Err(EngineError::ZeroConstraint { place });
            }
            check(place, &c.poly)
        };
        for (i, c) in self.constraints.iter().enumerate() {
            check_constraint(format!("constraints[{i}]"), c)?;
        }
        if let Some(pieces) = &self.union_pieces {
            if pieces.is_empty() {
                return Err(EngineError::EmptyUnion);
            }
            if !self.constraints.is_empty() {
                return Err(EngineError::UnionWithTopLevelConstraints(self.constraints.len()));
            }
            for (t, piece) in pieces.iter().enumerate() {
                for (i, c) in piece.iter().enumerate() {
                    check_constraint(format!("union_pieces[{t}][{i}]"), c)?;
                }
            }
        }
        match &self.objective {
            Objective::Scalar(f) => check("objective.scalar".into(), f)?,
            Objective::MinOf(q1, q2) => {
                check("objective.min_of[0]".into(), q1)?;
                check("objective.min_of[1]".into(), q2)?;
            }
            Objective::MaxOf(fs) => {
                if fs.is_empty() {
                    return Err(EngineError::EmptyIntersection);
                }
                for (l, f) in fs.iter().enumerate() {
                    check(format!("objective.max_of[{l}]"), f)?;
                }
            }
            Objective::Pmi(a) => {
                if a.dim() == 0 {
                    return Err(EngineError::BadMatrixObjective);
                }
                check("objective.pmi".into(), a.entry(0, 0))?;
            }
        }
        Ok(())
    }
}

/// Offset added to the previous polynomial when chaining the monotone
/// constraint: the hierarchy is asked for `p_k <= p_{k-1} + margin` rather
/// than `p_k <= p_{k-1}`.
///
/// Chaining against `p_{k-1}` exactly is degenerate: `p_{k-1}` touches the
/// sub-certificate's feasible boundary (it is itself a valid choice of
/// `p_k`), so solver-level noise in the extracted coefficients can make the
/// exact comparison infeasible. The margin restores an interior; it is set
/// to half the reported 1e-6 monotonicity tolerance so that margin plus
/// certificate residual stays under the tolerance.
pub const MONOTONE_MARGIN: f64 = 5e-7;

/// Random joint points drawn by the per-solve certificate audit.
const AUDIT_SAMPLES: usize = 1000;

/// Budget and grid resolution of the per-hierarchy warning sweep (fiber
/// emptiness and the measure-zero heuristic).
const WARNING_SAMPLES: usize = 200;
const WARNING_RESOLUTION: usize = 21;

/// `{x : J̄(x) = 0}` is flagged as plausibly having positive measure when
/// `|J̄| <= MEASURE_ZERO_BAND` on more than [`MEASURE_ZERO_FRACTION`] of the
/// warning sweep.
const MEASURE_ZERO_BAND: f64 = 1e-6;
const MEASURE_ZERO_FRACTION: f64 = 0.05;

/// Sample budget and middle-block grid resolution for the two-quantifier
/// containment spot checks.
const CONTAINMENT_SAMPLES: usize = 2000;
const CONTAINMENT_GRID: usize = 21;
const CONTAINMENT_TOL: f64 = 1e-6;

/// Knobs of the hierarchy drivers.
#[derive(Clone, Debug)]
pub struct HierarchyOptions {
    /// Chain each order to the previous one via the monotone
    /// sub-certificate; requires contiguous increasing orders.
    pub monotone: bool,
    /// Enforce convexity of `p_k` over the box.
    pub convex: bool,
    pub solver: SolverOptions,
    /// Seed for every sampled diagnostic.
    pub seed: u64,
    /// Sample budget for the dominance and volume diagnostics; `0` disables
    /// them.
    pub diagnostic_samples: usize,
    /// Quadrature nodes per axis for the L1-gap diagnostic; `None` skips it.
    pub l1_resolution: Option<usize>,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        HierarchyOptions {
            monotone: false,
            convex: false,
            solver: SolverOptions::default(),
            seed: 0,
            diagnostic_samples: 10_000,
            l1_resolution: None,
        }
    }
}

/// Verification evidence attached to a solved order: none of it feeds back
/// into the solve, all of it is recomputed from the extracted polynomial by
/// the oracle (plus the certificate audit, which replays the solver's own
/// multipliers).
#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    /// Certificate identity residual and Gram eigenvalue floor.
    pub audit: Option<certify::CertificateAudit>,
    /// Rejection-sampled check of `p >= f` on the fiber set.
    pub dominance: Option<SampleReport>,
    /// Monte Carlo volume fraction of the reported predicate set inside the
    /// box.
    pub predicate_volume: Option<SampleReport>,
    /// Quadrature estimate of the `L¹` distance between `p` and the value
    /// function, when requested.
    pub l1_gap: Option<f64>,
    pub warnings: Vec<String>,
}

/// One order of the hierarchy. `polynomial` and `rho_k` are present exactly
/// when `status` is optimal; failed orders keep their slot so callers see
/// the whole requested schedule.
#[derive(Clone, Debug)]
pub struct ApproximationResult {
    pub k: u32,
    pub status: SolveStatus,
    /// `p_k` mapped back to the user's coordinates.
    pub polynomial: Option<Polynomial>,
    /// `∫ p_k dλ̄` in normalized coordinates (the solve objective).
    pub rho_k: Option<f64>,
    /// Which sign test membership uses: `p_k <= 0` (inner) or `p_k >= 0`
    /// (outer).
    pub predicate: Mode,
    pub solve_seconds: f64,
    pub iterations: u32,
    pub diagnostics: Diagnostics,
}

impl ApproximationResult {
    /// Membership of `x` in the reported set; `None` when this order did not
    /// solve.
    #[must_use]
    pub fn member(&self, x: &[f64]) -> Option<bool> {
        let p = self.polynomial.as_ref()?;
        let v = p.evaluate(x).expect("parameter point of matching dimension");
        Some(match self.predicate {
            Mode::Inner => v <= 0.0,
            Mode::Outer => v >= 0.0,
        })
    }
}

/// `1 - Σ y_a²` over `joint_vars(n, m_total)`, summing the block of `count`
/// quantified coordinates starting at offset `first`.
fn sphere_equality(
    n: usize,
    m_total: usize,
    first: usize,
    count: usize,
) -> Result<Polynomial, PolyError> {
    let nv = n + m_total;
    let mut terms = vec![(Monomial::one(nv), 1.0)];
    for a in 0..count {
        let mut e = vec![0u32; nv];
        e[n + first + a] = 2;
        terms.push((Monomial::new(e), -1.0));
    }
    Polynomial::from_terms(joint_vars(n, m_total), terms)
}

/// Rewrites a matrix objective as an equivalent scalar one over a unit
/// sphere in auxiliary quantified variables.
///
/// * Matrix over `x` alone (`m = 0`): the target is `{x : A(x) ⪰ 0}`, which
///   equals `{x : -⟨y, A(x) y⟩ <= 0 for all y on the unit sphere}`; the new
///   quantified block is the sphere (`‖y‖² = 1` as a sign-free equality) and
///   the ball bound is exactly 1.
/// * Matrix over `(x, y)`: the target is `{x : F(x, y) ⪯ 0 on K_x}`, which
///   equals `{x : ⟨z, F z⟩ <= 0 on K_x × sphere}`; the sphere block `z` is
///   appended after `y` and the ball bound grows by 1.
///
/// Symmetry of the matrix is guaranteed by [`PolyMatrix`] construction.
pub fn pmi_to_scalar(spec: &ProblemSpec) -> Result<ProblemSpec, EngineError> {
    spec.validate()?;
    let Objective::Pmi(a) = &spec.objective else {
        return Err(EngineError::UntransformedObjective("pmi_to_scalar expects a matrix objective"));
    };
    let d = a.dim();
    let m2 = spec.m + d;
    let target = joint_vars(spec.n, m2);
    let w_names: Vec<String> = (spec.m + 1..=m2).map(|i| format!("y{i}")).collect();
    let form = a.quadratic_form(&w_names)?.embed(&target)?;
    let f = if spec.m == 0 { form.checked_scale(-1.0) } else { form };
    let sphere = Constraint::eq(sphere_equality(spec.n, m2, spec.m, d)?);
    let embed_all = |cs: &[Constraint]| -> Result<Vec<Constraint>, PolyError> {
        cs.iter()
            .map(|c| Ok(Constraint { poly: c.poly.embed(&target)?, kind: c.kind }))
            .collect()
    };
    let (constraints, union_pieces) = match &spec.union_pieces {
        Some(pieces) => {
            let lifted = pieces
                .iter()
                .map(|piece| {
                    let mut cs = embed_all(piece)?;
                    cs.push(sphere.clone());
                    Ok(cs)
                })
                .collect::<Result<Vec<_>, PolyError>>()?;
            (Vec::new(), Some(lifted))
        }
        None => {
            let mut cs = embed_all(&spec.constraints)?;
            cs.push(sphere);
            (cs, None)
        }
    };
    Ok(ProblemSpec {
        n: spec.n,
        m: m2,
        x_box: spec.x_box.clone(),
        y_bound: if spec.m == 0 { 1.0 } else { spec.y_bound + 1.0 },
        constraints,
        objective: Objective::Scalar(f),
        mode: spec.mode,
        union_pieces,
    })
}

/// `Σ_α |c_α| R^{|α|}`: a bound for `|q|` on any region inside the radius-R
/// coordinate box (valid for `R >= 1`).
fn coef_bound(q: &Polynomial, radius: f64) -> f64 {
    q.terms().map(|(m, c)| c.abs() * radius.powi(m.degree() as i32)).sum()
}

/// A min-objective problem rewritten over the graph of the min: auxiliary
/// quantified coordinates `w = |q1 - q2|` and `v = (q1 + q2 - w) / 2 =
/// min(q1, q2)`, tied down by the identity `min(a, b) = (a + b - |a - b|)/2`
/// expressed through the sign-split `w² = (q1 - q2)²`, `w >= 0`.
#[derive(Clone, Debug)]
pub struct LiftedProblem {
    /// The original min-objective spec.
    pub base: ProblemSpec,
    /// Names of the appended quantified coordinates, `w` then `v`.
    pub extra_vars: Vec<String>,
    /// Graph constraints tying `(w, v)` to `(q1, q2)`, including the box
    /// bound on `w` that keeps the lifted fiber inside a known ball.
    pub extra_constraints: Vec<Constraint>,
    /// Ball bound for the extended quantified block.
    pub lifted_bound: f64,
}

impl LiftedProblem {
    /// The scalar single-quantifier spec over the lifted fiber: same
    /// parameters, quantified block extended by `(w, v)`, objective `v`.
    #[must_use]
    pub fn to_spec(&self) -> ProblemSpec {
        let target = joint_vars(self.base.n, self.base.m + 2);
        let embed_c = |c: &Constraint| Constraint {
            poly: c.poly.embed(&target).expect("embedding into a superset of the variables"),
            kind: c.kind,
        };
        let v = Polynomial::variable(target.clone(), self.base.n + self.base.m + 1);
        let (constraints, union_pieces) = match &self.base.union_pieces {
            Some(pieces) => (
                Vec::new(),
                Some(
                    pieces
                        .iter()
                        .map(|piece| {
                            piece
                                .iter()
                                .map(embed_c)
                                .chain(self.extra_constraints.iter().cloned())
                                .collect()
                        })
                        .collect(),
                ),
            ),
            None => (
                self.base
                    .constraints
                    .iter()
                    .map(embed_c)
                    .chain(self.extra_constraints.iter().cloned())
                    .collect(),
                None,
            ),
        };
        ProblemSpec {
            n: self.base.n,
            m: self.base.m + 2,
            x_box: self.base.x_box.clone(),
            y_bound: self.lifted_bound,
            constraints,
            objective: Objective::Scalar(v),
            mode: self.base.mode,
            union_pieces,
        }
    }
}

/// Lifts a min objective to the graph form described on [`LiftedProblem`].
/// The bound `W` on `w` comes from coefficient norms of `q1, q2` over the
/// sampling radius, and the ball bound grows by `W² + V²` so the appended
/// coordinates stay inside it.
pub fn lift_min(spec: &ProblemSpec) -> Result<LiftedProblem, EngineError> {
    spec.validate()?;
    let Objective::MinOf(q1, q2) = &spec.objective else {
        return Err(EngineError::UntransformedObjective("lift_min expects a min objective"));
    };
    let target = joint_vars(spec.n, spec.m + 2);
    let q1e = q1.embed(&target)?;
    let q2e = q2.embed(&target)?;
    let w = Polynomial::variable(target.clone(), spec.n + spec.m);
    let v = Polynomial::variable(target.clone(), spec.n + spec.m + 1);

    let mut radius = 1.0f64;
    for (&l, &u) in spec.x_box.lower().iter().zip(spec.x_box.upper()) {
        radius = radius.max(l.abs()).max(u.abs());
    }
    if spec.m > 0 {
        radius = radius.max(spec.y_bound.sqrt());
    }
    let (b1, b2) = (coef_bound(q1, radius), coef_bound(q2, radius));
    let w_cap = b1 + b2;
    let v_cap = (b1 + b2 + w_cap) / 2.0;
    let base_bound = if spec.m > 0 { spec.y_bound } else { 0.0 };
    let lifted_bound = (base_bound + w_cap * w_cap + v_cap * v_cap).max(1.0);

    let diff = q1e.checked_sub(&q2e)?;
    let extra_constraints = vec![
        // w² = (q1 - q2)², i.e. w = ±|q1 - q2| ...
        Constraint::eq(w.checked_mul(&w)?.checked_sub(&diff.checked_mul(&diff)?)?),
        // ... with the nonnegative branch selected.
        Constraint::ineq(w.clone()),
        // 2v = q1 + q2 - w.
        Constraint::eq(
            q1e.checked_add(&q2e)?.checked_sub(&w)?.checked_sub(&v.checked_scale(2.0))?,
        ),
        // W - w >= 0 keeps the graph inside the declared ball.
        Constraint::ineq(Polynomial::constant(target.clone(), w_cap).checked_sub(&w)?),
    ];
    Ok(LiftedProblem {
        base: spec.clone(),
        extra_vars: target[spec.n + spec.m..].to_vec(),
        extra_constraints,
        lifted_bound,
    })
}

/// Hands back an equivalent spec with a scalar objective, applying
/// [`pmi_to_scalar`] or [`lift_min`] as needed. Max-of objectives are
/// rejected: they fan out into one scalar problem per component via
/// [`approximate_intersection`].
pub fn to_scalar_spec(spec: &ProblemSpec) -> Result<ProblemSpec, EngineError> {
    match &spec.objective {
        Objective::Scalar(_) => {
            spec.validate()?;
            Ok(spec.clone())
        }
        Objective::Pmi(_) => pmi_to_scalar(spec),
        Objective::MinOf(..) => Ok(lift_min(spec)?.to_spec()),
        Objective::MaxOf(_) => Err(EngineError::UntransformedObjective(
            "a max-of objective fans out per component; use approximate_intersection",
        )),
    }
}

/// Once-per-hierarchy warning sweep over sampled parameter points: flags
/// apparently empty fibers (the nonemptiness assumption is the user's) and
/// the measure-zero-boundary heuristic (when `{J̄ = 0}` looks fat, volume
/// convergence of the predicate sets is not guaranteed).
fn hierarchy_warnings(spec: &ProblemSpec, seed: u64) -> Result<Vec<String>, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Keep clear of the oracle's batch streams under the same seed.
    rng.set_stream(u64::MAX);
    let mut empty = 0usize;
    let mut near_zero = 0usize;
    for _ in 0..WARNING_SAMPLES {
        let x = spec.x_box.sample(&mut rng);
        let v = oracle::value_function(spec, &x, WARNING_RESOLUTION)?;
        if v == f64::NEG_INFINITY {
            empty += 1;
        } else if v.abs() <= MEASURE_ZERO_BAND {
            near_zero += 1;
        }
    }
    let mut warnings = Vec::new();
    if empty > 0 {
        warnings.push(format!(
            "fiber looks empty at {empty} of {WARNING_SAMPLES} sampled parameter points \
             (grid resolution {WARNING_RESOLUTION}); K_x is assumed nonempty on the box"
        ));
    }
    if near_zero as f64 > MEASURE_ZERO_FRACTION * WARNING_SAMPLES as f64 {
        warnings.push(format!(
            "|value function| <= {MEASURE_ZERO_BAND:.0e} at {near_zero} of {WARNING_SAMPLES} \
             sampled points; the zero level set may have positive measure, in which case \
             volume convergence of the approximations is not guaranteed"
        ));
    }
    Ok(warnings)
}

/// The shared hierarchy loop: rescale once, then per order assemble the
/// certificate program (plus the requested add-ons), solve, extract, map
/// back to user coordinates, and attach oracle diagnostics.
///
/// A non-optimal solve records its status and moves on; with the monotone
/// flag the next order then chains against the last *successful* order.
/// Diagnostics run against the caller's original spec (`diag_spec`), so
/// matrix and min objectives are cross-checked by eigenvalue reduction and
/// direct min evaluation rather than through their own transforms.
fn run_hierarchy(
    spec: &ProblemSpec,
    orders: &[u32],
    opts: &HierarchyOptions,
    predicate: Mode,
) -> Result<Vec<ApproximationResult>, EngineError> {
    if orders.is_empty() {
        return Err(EngineError::NoOrders);
    }
    if opts.monotone && !orders.windows(2).all(|w| w[1] == w[0] + 1) {
        return Err(EngineError::NonContiguousOrders(orders.to_vec()));
    }
    let scalar = to_scalar_spec(spec)?;
    let scaled = rescale_problem(&scalar)?;
    let mut shared_warnings = scaled.warnings.clone();
    shared_warnings.extend(hierarchy_warnings(spec, opts.seed)?);

    let mut results = Vec::with_capacity(orders.len());
    let mut prev_hat: Option<Polynomial> = None;
    for &k in orders {
        let (mut problem, mut template) = certify::assemble_inner(&scaled, k)?;
        if opts.monotone {
            if let Some(prev) = &prev_hat {
                let chained = prev
                    .checked_add(&Polynomial::constant(prev.vars().clone(), MONOTONE_MARGIN))?;
                certify::add_monotone_constraint(&mut problem, &mut template, &chained)?;
            }
        }
        if opts.convex {
            certify::add_convexity_constraint(&mut problem, &mut template)?;
        }
        let solution = conic::solve(&problem, &opts.solver)?;
        let mut result = ApproximationResult {
            k,
            status: solution.status,
            polynomial: None,
            rho_k: None,
            predicate,
            solve_seconds: solution.solve_seconds,
            iterations: solution.iterations,
            diagnostics: Diagnostics { warnings: shared_warnings.clone(), ..Default::default() },
        };
        if solution.status == SolveStatus::Optimal {
            let p_hat = template.extract_polynomial(&solution)?;
            let p = scaled.polynomial_to_original(&p_hat)?;
            result.diagnostics.audit = Some(certify::audit_certificate(
                &template,
                &scaled,
                &solution,
                AUDIT_SAMPLES,
                opts.seed,
            )?);
            if opts.diagnostic_samples > 0 {
                match oracle::check_dominance(&p, spec, opts.diagnostic_samples, opts.seed) {
                    Ok(report) => result.diagnostics.dominance = Some(report),
                    Err(OracleError::ThinDomain) => result
                        .diagnostics
                        .warnings
                        .push("dominance spot check skipped: K too thin for rejection sampling".into()),
                    Err(e) => return Err(e.into()),
                }
                let pv = p.clone();
                let inside = move |x: &[f64]| {
                    let v = pv.evaluate(x).expect("parameter point of matching dimension");
                    match predicate {
                        Mode::Inner => v <= 0.0,
                        Mode::Outer => v >= 0.0,
                    }
                };
                let volume_samples = opts.diagnostic_samples.max(oracle::MIN_VOLUME_SAMPLES);
                result.diagnostics.predicate_volume =
                    Some(oracle::mc_volume(inside, &spec.x_box, volume_samples, opts.seed)?);
            }
            if let Some(resolution) = opts.l1_resolution {
                match oracle::l1_gap(&p, spec, resolution) {
                    Ok(gap) => result.diagnostics.l1_gap = Some(gap),
                    Err(OracleError::Dominance { report }) => result.diagnostics.warnings.push(
                        format!(
                            "L1 gap skipped: dominance precheck found {} violations in {} samples",
                            report.violations.len(),
                            report.sample_count
                        ),
                    ),
                    Err(OracleError::ThinDomain) => result
                        .diagnostics
                        .warnings
                        .push("L1 gap skipped: K too thin for rejection sampling".into()),
                    Err(e) => return Err(e.into()),
                }
            }
            prev_hat = Some(p_hat);
            result.polynomial = Some(p);
            result.rho_k = Some(solution.objective_value);
        }
        results.push(result);
    }
    Ok(results)
}

/// Runs the hierarchy for an inner-mode spec: each solved order yields
/// `{x : p_k(x) <= 0}`, contained in the "for all" set.
pub fn approximate_inner(
    spec: &ProblemSpec,
    orders: &[u32],
    opts: &HierarchyOptions,
) -> Result<Vec<ApproximationResult>, EngineError> {
    if spec.mode != Mode::Inner {
        return Err(EngineError::WrongMode { expected: Mode::Inner, got: spec.mode });
    }
    run_hierarchy(spec, orders, opts, Mode::Inner)
}

/// Runs the hierarchy for an outer-mode spec: each solved order yields
/// `{x : p_k(x) >= 0}`, containing the "exists" set. Identical pipeline to
/// [`approximate_inner`]; only the reported predicate differs.
pub fn approximate_outer(
    spec: &ProblemSpec,
    orders: &[u32],
    opts: &HierarchyOptions,
) -> Result<Vec<ApproximationResult>, EngineError> {
    if spec.mode != Mode::Outer {
        return Err(EngineError::WrongMode { expected: Mode::Outer, got: spec.mode });
    }
    run_hierarchy(spec, orders, opts, Mode::Outer)
}

/// Dispatches on the spec's declared mode.
pub fn approximate(
    spec: &ProblemSpec,
    orders: &[u32],
    opts: &HierarchyOptions,
) -> Result<Vec<ApproximationResult>, EngineError> {
    match spec.mode {
        Mode::Inner => approximate_inner(spec, orders, opts),
        Mode::Outer => approximate_outer(spec, orders, opts),
    }
}

/// Per-component hierarchies for a max-of objective, combined by predicate:
/// in inner mode the conjunction `∧_l {p_l <= 0}` sits inside the "for all"
/// set of `max_l f_l`; in outer mode the disjunction `∨_l {p_l >= 0}` covers
/// its "exists" set.
#[derive(Clone, Debug)]
pub struct IntersectionResult {
    /// `components[l][i]`: the result for objective component `l` at
    /// `orders[i]`.
    pub components: Vec<Vec<ApproximationResult>>,
    pub predicate: Mode,
}

impl IntersectionResult {
    /// Membership of `x` in the combined set at order index `order_index`;
    /// `None` when any component failed there (a missing component breaks
    /// the combined guarantee in both modes).
    #[must_use]
    pub fn member(&self, order_index: usize, x: &[f64]) -> Option<bool> {
        let mut all = true;
        let mut any = false;
        for component in &self.components {
            let inside = component[order_index].member(x)?;
            all &= inside;
            any |= inside;
        }
        Some(match self.predicate {
            Mode::Inner => all,
            Mode::Outer => any,
        })
    }
}

/// Runs one hierarchy per component of a max-of objective over the shared
/// fiber description. `max_y max_l f_l <= 0` iff every `max_y f_l <= 0`,
/// so the component predicates combine soundly set by set.
pub fn approximate_intersection(
    spec: &ProblemSpec,
    orders: &[u32],
    opts: &HierarchyOptions,
) -> Result<IntersectionResult, EngineError> {
    spec.validate()?;
    let Objective::MaxOf(fs) = &spec.objective else {
        return Err(EngineError::UntransformedObjective(
            "approximate_intersection expects a max-of objective",
        ));
    };
    let mut components = Vec::with_capacity(fs.len());
    for f in fs {
        let sub = ProblemSpec { objective: Objective::Scalar(f.clone()), ..spec.clone() };
        components.push(run_hierarchy(&sub, orders, opts, spec.mode)?);
    }
    Ok(IntersectionResult { components, predicate: spec.mode })
}

/// A two-quantifier problem over three variable blocks: parameters `x`
/// (n coordinates, box `B_x`), a middle block `y` (r coordinates, box
/// `B_y`), and an innermost block `u` (m coordinates over the fiber
/// `K_{xy}`).
///
/// Stage 1 always treats `(x, y)` jointly as parameters, so `constraints`
/// and `f` are written over the stage-1 joint list `x1..x{n+r}, y1..ym` —
/// the middle block appears as the trailing parameter names and the
/// innermost block takes the quantified names.
#[derive(Clone, Debug)]
pub struct TwoBlockSpec {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub x_box: BoxDomain,
    pub y_box: BoxDomain,
    /// Ball bound on the innermost block over the fiber; unused when
    /// `m = 0`.
    pub u_bound: f64,
    pub constraints: Vec<Constraint>,
    pub f: Polynomial,
}

impl TwoBlockSpec {
    /// The stage-1 single-quantifier spec: `(x, y)` as parameters over the
    /// concatenated box, `u` quantified over the fiber.
    pub fn stage1_spec(&self) -> Result<ProblemSpec, EngineError> {
        if self.r == 0 {
            return Err(EngineError::ParameterArity { expected: 1, got: 0 });
        }
        if self.x_box.n() != self.n {
            return Err(EngineError::BoxArity { n: self.n, got: self.x_box.n() });
        }
        if self.y_box.n() != self.r {
            return Err(EngineError::BoxArity { n: self.r, got: self.y_box.n() });
        }
        let joint_box = BoxDomain::new(
            [self.x_box.lower(), self.y_box.lower()].concat(),
            [self.x_box.upper(), self.y_box.upper()].concat(),
        )?;
        let spec = ProblemSpec {
            n: self.n + self.r,
            m: self.m,
            x_box: joint_box,
            y_bound: if self.m > 0 { self.u_bound } else { 1.0 },
            constraints: self.constraints.clone(),
            objective: Objective::Scalar(self.f.clone()),
            mode: Mode::Inner,
            union_pieces: None,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Outcome of a two-quantifier composition: the stage-1 lift `p_k(x, y)`
/// over the joint parameters, the stage-2 polynomial over `x` alone, and
/// the sampled containment spot check between them.
#[derive(Clone, Debug)]
pub struct CompositionResult {
    /// Stage-1 result; its polynomial lives over `x1..x{n+r}`.
    pub stage1: ApproximationResult,
    /// Stage-2 result over the true parameters; `None` when stage 1 did not
    /// solve.
    pub stage2: Option<ApproximationResult>,
    /// Sampled containment violations (see the compose drivers for the
    /// direction checked) out of `containment_samples`.
    pub containment_violations: usize,
    pub containment_samples: usize,
}

/// Visits the tensor grid of `bx` with `resolution` points per axis,
/// stopping early when `visit` returns `true`; the return value says
/// whether any point did.
fn any_grid_point<F>(bx: &BoxDomain, resolution: usize, mut visit: F) -> Result<bool, EngineError>
where
    F: FnMut(&[f64]) -> Result<bool, EngineError>,
{
    let r = bx.n();
    let mut idx = vec![0usize; r];
    let mut y = vec![0.0; r];
    loop {
        for a in 0..r {
            y[a] = bx.grid_coordinate(a, idx[a], resolution);
        }
        if visit(&y)? {
            return Ok(true);
        }
        let mut a = 0;
        loop {
            if a == r {
                return Ok(false);
            }
            idx[a] += 1;
            if idx[a] < resolution {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

fn compose(
    two: &TwoBlockSpec,
    k: u32,
    l: u32,
    opts: &HierarchyOptions,
    stage2_mode: Mode,
) -> Result<CompositionResult, EngineError> {
    let s1_spec = two.stage1_spec()?;
    let mut s1 = run_hierarchy(&s1_spec, &[k], opts, Mode::Inner)?;
    let stage1 = s1.pop().expect("exactly one order requested");
    let Some(p1) = stage1.polynomial.clone() else {
        return Ok(CompositionResult {
            stage1,
            stage2: None,
            containment_violations: 0,
            containment_samples: 0,
        });
    };

    // Stage 2 sees -p_k as the new objective, with the middle block
    // re-declared as the quantified one: the exponents carry over
    // position-for-position, only the trailing parameter names become
    // quantified names.
    let t2 = joint_vars(two.n, two.r);
    let f2 = Polynomial::from_terms(t2.clone(), p1.terms().map(|(m, c)| (m.clone(), -c)))?;
    let mut y_bound = 0.0;
    for (&lo, &up) in two.y_box.lower().iter().zip(two.y_box.upper()) {
        y_bound += lo.abs().max(up.abs()).powi(2);
    }
    let mut constraints = Vec::with_capacity(two.r);
    for a in 0..two.r {
        // (y_a - lo)(up - y_a) >= 0 pins the middle block to its box.
        let ya = Polynomial::variable(t2.clone(), two.n + a);
        let lo = Polynomial::constant(t2.clone(), two.y_box.lower()[a]);
        let up = Polynomial::constant(t2.clone(), two.y_box.upper()[a]);
        constraints.push(Constraint::ineq(ya.checked_sub(&lo)?.checked_mul(&up.checked_sub(&ya)?)?));
    }
    let s2_spec = ProblemSpec {
        n: two.n,
        m: two.r,
        x_box: two.x_box.clone(),
        y_bound,
        constraints,
        objective: Objective::Scalar(f2),
        mode: stage2_mode,
        union_pieces: None,
    };
    let mut s2 = run_hierarchy(&s2_spec, &[l], opts, stage2_mode)?;
    let mut stage2 = s2.pop().expect("exactly one order requested");

    let mut violations = 0usize;
    let mut samples = 0usize;
    if let Some(p2) = stage2.polynomial.clone() {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(u64::MAX - 1);
        let mut joint = vec![0.0; two.n + two.r];
        for _ in 0..CONTAINMENT_SAMPLES {
            let x = two.x_box.sample(&mut rng);
            joint[..two.n].copy_from_slice(&x);
            match stage2_mode {
                Mode::Outer => {
                    // Exists-forall: a grid witness y with p1(x, y) <= 0
                    // puts x in the projected stage-1 set; the stage-2 set
                    // must cover it, and the witness must verify the inner
                    // quantifier (J̄ <= 0 within tolerance).
                    let mut witness: Option<Vec<f64>> = None;
                    any_grid_point(&two.y_box, CONTAINMENT_GRID, |y| {
                        joint[two.n..].copy_from_slice(y);
                        if p1.evaluate(&joint)? <= 0.0 {
                            witness = Some(joint.clone());
                            return Ok(true);
                        }
                        Ok(false)
                    })?;
                    if let Some(point) = witness {
                        if p2.evaluate(&x)? < -CONTAINMENT_TOL {
                            violations += 1;
                        } else if oracle::value_function(&s1_spec, &point, CONTAINMENT_GRID)?
                            > CONTAINMENT_TOL
                        {
                            violations += 1;
                        }
                    }
                }
                Mode::Inner => {
                    // Forall-exists: x inside the stage-2 set must satisfy
                    // p1(x, y) >= 0 for every grid y.
                    if p2.evaluate(&x)? <= 0.0 {
                        let bad = any_grid_point(&two.y_box, CONTAINMENT_GRID, |y| {
                            joint[two.n..].copy_from_slice(y);
                            Ok(p1.evaluate(&joint)? < -CONTAINMENT_TOL)
                        })?;
                        if bad {
                            violations += 1;
                        }
                    }
                }
            }
            samples += 1;
        }
        if violations > 0 {
            stage2.diagnostics.warnings.push(format!(
                "composition containment check failed at {violations} of {samples} samples"
            ));
        }
    }
    Ok(CompositionResult {
        stage1,
        stage2: Some(stage2),
        containment_violations: violations,
        containment_samples: samples,
    })
}

/// Two-quantifier "exists y, for all u" composition.
///
/// Stage 1 treats `(x, y)` as parameters and produces `p_k(x, y)` above the
/// inner value function; `{p_k <= 0}` is then an inner lift of the
/// for-all region. Stage 2 applies the outer machinery to `-p_k` with `y`
/// quantified over its box, yielding `p_{kl}(x)` whose `>= 0` region covers
/// the projection `{x : exists y, p_k(x, y) <= 0}`.
///
/// Both containments — stage-2 set covers the projected stage-1 set, and
/// the projected set sits inside the true exists-forall set — are sampled,
/// not certified; no convergence is claimed for the composition.
pub fn compose_exists_forall(
    two: &TwoBlockSpec,
    k: u32,
    l: u32,
    opts: &HierarchyOptions,
) -> Result<CompositionResult, EngineError> {
    compose(two, k, l, opts, Mode::Outer)
}

/// Two-quantifier "for all y, exists u" composition.
///
/// Stage 1 is identical to [`compose_exists_forall`]. The target region
/// `{x : for all y, exists u with f >= 0}` equals `{x : for all y, J̄ >= 0}`
/// and is contained in `R^k = {x : for all y, p_k >= 0}` since `p_k >= J̄`;
/// stage 2 applies the inner machinery to `-p_k`, yielding `{p_{kl} <= 0}`
/// inside `R^k`. Only that last containment is sampled; the relation
/// between the stage-2 set and the true region is not claimed.
pub fn compose_forall_exists(
    two: &TwoBlockSpec,
    k: u32,
    l: u32,
    opts: &HierarchyOptions,
) -> Result<CompositionResult, EngineError> {
    compose(two, k, l, opts, Mode::Inner)
}
