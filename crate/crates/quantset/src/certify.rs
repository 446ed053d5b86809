//! Assembly of the certificate programs that bound a fiber maximum by a
//! single polynomial.
//!
//! Everything here works on a [`ScaledProblem`], i.e. coordinates already
//! normalised so the parameter box is `[-1, 1]^n` and the quantified set sits
//! inside the unit ball.  For a relaxation order `k` the *inner* program
//! searches for `p ∈ ℝ[x]` of degree at most `2k` together with an algebraic
//! identity
//!
//! ```text
//! p(x) - f(x, y) = σ₀ + Σⱼ σⱼ·gⱼ + σ_ball·(1 - ‖y‖²) + Σᵢ ψᵢ·(1 - xᵢ²)
//!                  + Σₜ qₜ·hₜ
//! ```
//!
//! where each `σ` and `ψ` is a sum of squares (a PSD Gram block over a
//! monomial basis) and each `qₜ` is an unrestricted polynomial attached to an
//! equality generator `hₜ = 0`.  Any such identity proves `p ≥ f` wherever
//! the generators are nonnegative, hence `p` dominates the fiber maximum
//! `J(x) = max_y f(x, y)`; minimising `∫ p` over the box then squeezes `p`
//! down onto `J` from above as `k` grows.  The sublevel set `{p ≤ 0}` is an
//! inner approximation of `{J ≤ 0}` and the superlevel set `{p ≥ 0}` an
//! outer approximation of `{J ≥ 0}`, so one assembly serves both modes.
//!
//! Two structural choices deserve a note:
//!
//! * **Degree padding.**  The Gram blocks live at degree
//!   `d = max(k, ⌈deg f / 2⌉)` while `p` itself stays in degree `2k`.  When
//!   `2k ≥ deg f` this is exactly the textbook program; when `f` is of
//!   higher degree it lets the low-order members of the hierarchy exist at
//!   all (the identity must at least reach the degree of `f`).  Orders below
//!   `⌈deg gⱼ / 2⌉` for some constraint are still rejected as
//!   [`CertifyError::OrderTooSmall`].
//! * **Union pieces.**  When the quantified set is a union, the same `p`
//!   must dominate `f` over every piece, so each piece contributes its own
//!   copy of the identity (its own Gram blocks, multipliers and coefficient
//!   rows) while sharing `p` and the objective.
//!
//! [`assemble_dual`] builds the moment-side program independently — free
//! variables are pseudo-moments, the blocks are moment and localizing
//! matrices, and the box moments enter as marginal constraints.  At the
//! optimum its value agrees with the primal one (strong duality holds after
//! normalisation), which the tests use as a cross-check that both
//! translations are right.

use std::ops::Range;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{BasisError, MonomialBasis};
use crate::conic::{EqualityRow, SdpProblem, SdpSolution, VarRef};
use crate::engine::ConstraintKind;
use crate::measures::{self, ScaledConstraint, ScaledProblem};
use crate::poly::{Monomial, PolyError, Polynomial, Vars};
use thiserror::Error;

/// Default number of random points at which [`audit_certificate`] evaluates
/// the certificate identity.
pub const AUDIT_SAMPLES: usize = 256;

/// Errors from certificate assembly.
#[derive(Debug, Error)]
pub enum CertifyError {
    /// The requested relaxation order cannot accommodate some constraint:
    /// every generator `g` needs `k ≥ ⌈deg g / 2⌉`.
    #[error(
        "relaxation order {got} is below the minimum {required} \
         required by the constraint degrees"
    )]
    OrderTooSmall {
        /// Smallest admissible order for this problem.
        required: u32,
        /// Order that was requested.
        got: u32,
    },
    /// A polynomial operation failed during assembly.
    #[error("polynomial operation failed during assembly: {0}")]
    Poly(#[from] PolyError),
    /// A monomial fell outside the row basis — an internal invariant
    /// violation surfaced as an error rather than a panic.
    #[error("basis lookup failed during assembly: {0}")]
    Basis(#[from] BasisError),
}

/// One PSD Gram block of a certificate: the weight `σ = bᵀ Q b` attached to
/// a generator polynomial.
#[derive(Debug, Clone)]
pub struct GramTemplate {
    /// Index into [`SdpProblem::block_sizes`] / `SdpSolution::block_values`.
    pub block: usize,
    /// The generator this block multiplies (constant one for `σ₀`).
    pub generator: Polynomial,
    /// Monomial basis of the Gram vector `b`.
    pub basis: MonomialBasis,
}

/// One sign-free multiplier `qₜ` attached to an equality generator.
#[derive(Debug, Clone)]
pub struct MultiplierTemplate {
    /// Free-variable indices holding the coefficients of `qₜ`, aligned with
    /// `basis`.
    pub free_range: Range<usize>,
    /// Monomial basis of `qₜ`.
    pub basis: MonomialBasis,
    /// The equality generator `hₜ`.
    pub generator: Polynomial,
}

/// The certificate structure for one piece of the quantified set.
#[derive(Debug, Clone)]
pub struct PieceTemplate {
    /// Gram blocks, in assembly order: `σ₀`, user inequalities, the ball
    /// cut (if `m > 0`), then the box cuts.
    pub grams: Vec<GramTemplate>,
    /// Sign-free multipliers for the piece's equality constraints.
    pub multipliers: Vec<MultiplierTemplate>,
}

/// Which optional constraint family an add-on block group belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddonKind {
    /// `p_prev - p` is certified nonnegative on the box.
    Monotone,
    /// `⟨u, ∇²p(x) u⟩` is certified nonnegative on box × unit ball.
    Convexity,
}

/// Gram blocks added by [`add_monotone_constraint`] or
/// [`add_convexity_constraint`].
#[derive(Debug, Clone)]
pub struct AddonTemplate {
    /// Which add-on produced these blocks.
    pub kind: AddonKind,
    /// Its Gram blocks (over the `x` variables for `Monotone`, over
    /// `(x, u)` for `Convexity`).
    pub grams: Vec<GramTemplate>,
}

/// Everything needed to interpret an [`SdpSolution`] of an assembled
/// program: where the coefficients of `p` live and how each block maps back
/// to a certificate weight.
#[derive(Debug, Clone)]
pub struct CertificateTemplate {
    /// Relaxation order `k`.
    pub order: u32,
    /// Gram degree `d = max(k, ⌈deg f / 2⌉)` actually used.
    pub cert_degree: u32,
    /// Number of parameter variables.
    pub n: usize,
    /// Number of quantified variables.
    pub m: usize,
    /// Joint variable names (scaled coordinates).
    pub joint_vars: Vars,
    /// Parameter variable names (scaled coordinates).
    pub x_vars: Vars,
    /// Basis of `p`: all `x`-monomials of degree at most `2k`.  The free
    /// variables `0..p_basis.len()` of the program are its coefficients.
    pub p_basis: MonomialBasis,
    /// One certificate per piece of the quantified set.
    pub pieces: Vec<PieceTemplate>,
    /// Blocks appended by optional add-on constraints.
    pub addons: Vec<AddonTemplate>,
}

impl CertificateTemplate {
    /// Reads the coefficients of `p` out of a solution.
    pub fn extract_polynomial(&self, solution: &SdpSolution) -> Result<Polynomial, PolyError> {
        let terms = self
            .p_basis
            .monomials()
            .iter()
            .enumerate()
            .map(|(i, mono)| (mono.clone(), solution.free_values[i]));
        Polynomial::from_terms(self.x_vars.clone(), terms)
    }
}

/// Numerical health report for a solved certificate, produced by
/// [`audit_certificate`].
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CertificateAudit {
    /// Number of random joint points evaluated.
    pub samples: usize,
    /// Worst absolute violation of the certificate identity across all
    /// pieces and sample points.
    pub max_identity_residual: f64,
    /// Smallest eigenvalue over all Gram blocks (including add-on blocks);
    /// should be no smaller than roughly minus the solver tolerance.
    pub min_gram_eigenvalue: f64,
}

fn mono_sum(a: &Monomial, b: &Monomial) -> Monomial {
    Monomial::new(a.exps().iter().zip(b.exps()).map(|(x, y)| x + y).collect())
}

/// Lifts an `x`-monomial into the joint variable space by appending `m`
/// zero exponents.
fn lift_to_joint(mono: &Monomial, m: usize) -> Monomial {
    let mut exps = mono.exps().to_vec();
    exps.extend(std::iter::repeat_n(0u32, m));
    Monomial::new(exps)
}

/// Adds one Gram block for `generator` at Gram degree `gram_degree`, pushing
/// `sign · coefficient` contributions into `rows` (indexed by `row_basis`).
fn add_gram_family(
    problem: &mut SdpProblem,
    rows: &mut [Vec<(VarRef, f64)>],
    row_basis: &MonomialBasis,
    generator: &Polynomial,
    gram_degree: u32,
    sign: f64,
) -> Result<GramTemplate, CertifyError> {
    let basis = MonomialBasis::new(row_basis.n_vars(), gram_degree);
    let block = problem.block_sizes.len();
    problem.block_sizes.push(basis.len());
    let monos = basis.monomials();
    for ib in 0..monos.len() {
        for jb in ib..monos.len() {
            // ⟨Q, b bᵀ⟩ counts off-diagonal entries twice.
            let mult = if ib == jb { 1.0 } else { 2.0 };
            let pair = mono_sum(&monos[ib], &monos[jb]);
            for (dm, c) in generator.terms() {
                let r = row_basis.require_index(&mono_sum(&pair, dm))?;
                rows[r].push((VarRef::entry(block, ib, jb), sign * mult * c));
            }
        }
    }
    Ok(GramTemplate { block, generator: generator.clone(), basis })
}

fn split_constraints(piece: &[ScaledConstraint]) -> (Vec<&ScaledConstraint>, Vec<&ScaledConstraint>) {
    let ineqs = piece.iter().filter(|c| c.kind == ConstraintKind::Ineq).collect();
    let eqs = piece.iter().filter(|c| c.kind == ConstraintKind::Eq).collect();
    (ineqs, eqs)
}

fn minimum_order(pieces: &[&[ScaledConstraint]]) -> u32 {
    let mut required = 1u32;
    for piece in pieces {
        for c in *piece {
            required = required.max(c.poly.degree().div_ceil(2));
        }
    }
    required
}

/// Builds the inner-approximation program at relaxation order `order`.
///
/// The returned program minimises `∫ p` over the normalised box subject to
/// one certificate identity per piece; the template records where `p` and
/// every certificate weight live in the solution.
pub fn assemble_inner(
    scaled: &ScaledProblem,
    order: u32,
) -> Result<(SdpProblem, CertificateTemplate), CertifyError> {
    let n = scaled.n;
    let m = scaled.m;
    let pieces_constraints: Vec<&[ScaledConstraint]> = match &scaled.union_constraints {
        Some(pieces) => pieces.iter().map(|p| p.as_slice()).collect(),
        None => vec![scaled.constraints.as_slice()],
    };
    let required = minimum_order(&pieces_constraints);
    if order < required {
        return Err(CertifyError::OrderTooSmall { required, got: order });
    }
    let cert_degree = order.max(scaled.f.degree().div_ceil(2));
    let row_basis = MonomialBasis::new(n + m, 2 * cert_degree);
    let p_basis = MonomialBasis::new(n, 2 * order);

    let mut problem = SdpProblem::new(p_basis.len(), Vec::new());

    // Objective: ∫ p over the normalised box, i.e. Σ_β γ_β p_β with the
    // closed-form box moments (odd ones vanish and are skipped).
    let gammas = measures::box_moments(n, 2 * order);
    for (i, mono) in p_basis.monomials().iter().enumerate() {
        let g = gammas.value(mono)?;
        if g != 0.0 {
            problem.objective.push((VarRef::Free(i), g));
        }
    }

    let one = Polynomial::constant(scaled.joint_vars.clone(), 1.0);
    let mut pieces = Vec::with_capacity(pieces_constraints.len());
    for (pi, piece) in pieces_constraints.iter().enumerate() {
        let mut rows: Vec<Vec<(VarRef, f64)>> = vec![Vec::new(); row_basis.len()];
        let (ineqs, eqs) = split_constraints(piece);

        let mut grams = Vec::new();
        grams.push(add_gram_family(
            &mut problem,
            &mut rows,
            &row_basis,
            &one,
            cert_degree,
            -1.0,
        )?);
        for c in &ineqs {
            let v = c.poly.degree().div_ceil(2);
            grams.push(add_gram_family(
                &mut problem,
                &mut rows,
                &row_basis,
                &c.poly,
                cert_degree - v,
                -1.0,
            )?);
        }
        if let Some(ball) = &scaled.ball {
            grams.push(add_gram_family(
                &mut problem,
                &mut rows,
                &row_basis,
                ball,
                cert_degree - 1,
                -1.0,
            )?);
        }
        for cut in &scaled.box_cuts {
            grams.push(add_gram_family(
                &mut problem,
                &mut rows,
                &row_basis,
                cut,
                cert_degree - 1,
                -1.0,
            )?);
        }

        let mut multipliers = Vec::new();
        for c in &eqs {
            let mult_basis =
                MonomialBasis::new(n + m, 2 * cert_degree - c.poly.degree());
            let free_start = problem.n_free;
            problem.n_free += mult_basis.len();
            for (ib, bm) in mult_basis.monomials().iter().enumerate() {
                for (dm, ch) in c.poly.terms() {
                    let r = row_basis.require_index(&mono_sum(bm, dm))?;
                    rows[r].push((VarRef::Free(free_start + ib), -ch));
                }
            }
            multipliers.push(MultiplierTemplate {
                free_range: free_start..problem.n_free,
                basis: mult_basis,
                generator: c.poly.clone(),
            });
        }

        // p enters every piece's identity with coefficient +1 on the
        // x-only rows it can reach.
        for (i, mono) in p_basis.monomials().iter().enumerate() {
            let r = row_basis.require_index(&lift_to_joint(mono, m))?;
            rows[r].push((VarRef::Free(i), 1.0));
        }

        let mut rhs = vec![0.0f64; row_basis.len()];
        for (mono, c) in scaled.f.terms() {
            rhs[row_basis.require_index(mono)?] = c;
        }

        for (r, terms) in rows.into_iter().enumerate() {
            problem.equalities.push(EqualityRow::new(
                format!("p{pi}:{}", row_basis.monomials()[r]),
                terms,
                rhs[r],
            ));
        }
        pieces.push(PieceTemplate { grams, multipliers });
    }

    let template = CertificateTemplate {
        order,
        cert_degree,
        n,
        m,
        joint_vars: scaled.joint_vars.clone(),
        x_vars: scaled.x_vars.clone(),
        p_basis,
        pieces,
        addons: Vec::new(),
    };
    Ok((problem, template))
}

/// Constrains the new `p` to lie below `previous` everywhere on the box by
/// appending the identity `previous - p = φ₀ + Σᵢ φᵢ·(1 - xᵢ²)` over the
/// `x` variables, with `φ₀` at Gram degree `k + 1` and the `φᵢ` at `k`.
///
/// The weights get one degree of headroom beyond the minimum needed to
/// express `previous - p`: the cap tends to bind at optimality with
/// near-singular weights, and the minimal-degree representation space can be
/// so tight that the interior-point iterates stall on the cone boundary.
/// The enlarged space restores interior room at negligible cost (the blocks
/// stay in the `x` variables only).
///
/// `previous` must be expressed in the same normalised coordinates as the
/// assembled program (pass the scaled polynomial from the previous order,
/// not the original-coordinate one).
pub fn add_monotone_constraint(
    problem: &mut SdpProblem,
    template: &mut CertificateTemplate,
    previous: &Polynomial,
) -> Result<(), CertifyError> {
    let previous = previous.embed(&template.x_vars)?;
    let k = template.order + 1;
    let row_basis = MonomialBasis::new(template.n, 2 * k);
    let mut rows: Vec<Vec<(VarRef, f64)>> = vec![Vec::new(); row_basis.len()];

    let one = Polynomial::constant(template.x_vars.clone(), 1.0);
    let mut grams = Vec::new();
    grams.push(add_gram_family(problem, &mut rows, &row_basis, &one, k, 1.0)?);
    for i in 0..template.n {
        let cut = box_cut(&template.x_vars, i);
        grams.push(add_gram_family(problem, &mut rows, &row_basis, &cut, k - 1, 1.0)?);
    }
    for (i, mono) in template.p_basis.monomials().iter().enumerate() {
        let r = row_basis.require_index(mono)?;
        rows[r].push((VarRef::Free(i), 1.0));
    }
    let mut rhs = vec![0.0f64; row_basis.len()];
    for (mono, c) in previous.terms() {
        rhs[row_basis.require_index(mono)?] = c;
    }
    for (r, terms) in rows.into_iter().enumerate() {
        problem.equalities.push(EqualityRow::new(
            format!("mono:{}", row_basis.monomials()[r]),
            terms,
            rhs[r],
        ));
    }
    template.addons.push(AddonTemplate { kind: AddonKind::Monotone, grams });
    Ok(())
}

/// Constrains `p` to be convex on the box by appending the identity
/// `⟨u, ∇²p(x) u⟩ = ω₀ + Σᵢ ωᵢ·(1 - xᵢ²) + ω_u·(1 - ‖u‖²)` over the
/// doubled variable list `(x, u)`, with `ω₀` at Gram degree `k` and the
/// rest at `k - 1`.  Nonnegativity of the Hessian form for all `‖u‖ ≤ 1`
/// makes `∇²p ⪰ 0` throughout the box.
pub fn add_convexity_constraint(
    problem: &mut SdpProblem,
    template: &mut CertificateTemplate,
) -> Result<(), CertifyError> {
    let k = template.order;
    let n = template.n;
    // Hessian forms of the p-basis monomials; all share the (x, u) list.
    let hessians: Vec<Polynomial> = template
        .p_basis
        .monomials()
        .iter()
        .map(|mono| {
            Polynomial::from_terms(template.x_vars.clone(), [(mono.clone(), 1.0)])?
                .hessian_quadratic_form()
        })
        .collect::<Result<_, _>>()?;
    let xu_vars = hessians
        .first()
        .map(|h| h.vars().clone())
        .expect("p basis always contains the constant monomial");

    let row_basis = MonomialBasis::new(2 * n, 2 * k);
    let mut rows: Vec<Vec<(VarRef, f64)>> = vec![Vec::new(); row_basis.len()];

    let one = Polynomial::constant(xu_vars.clone(), 1.0);
    let mut grams = Vec::new();
    grams.push(add_gram_family(problem, &mut rows, &row_basis, &one, k, 1.0)?);
    for i in 0..n {
        let cut = box_cut(&xu_vars, i);
        grams.push(add_gram_family(problem, &mut rows, &row_basis, &cut, k - 1, 1.0)?);
    }
    let u_ball = unit_ball_cut(&xu_vars, n..2 * n);
    grams.push(add_gram_family(problem, &mut rows, &row_basis, &u_ball, k - 1, 1.0)?);

    for (i, h) in hessians.iter().enumerate() {
        for (mono, c) in h.terms() {
            let r = row_basis.require_index(mono)?;
            rows[r].push((VarRef::Free(i), -c));
        }
    }
    for (r, terms) in rows.into_iter().enumerate() {
        if terms.is_empty() {
            // Rows only reachable by odd u-degrees carry no contribution
            // from either side; skip rather than emit a trivial 0 = 0.
            continue;
        }
        problem.equalities.push(EqualityRow::new(
            format!("conv:{}", row_basis.monomials()[r]),
            terms,
            0.0,
        ));
    }
    template.addons.push(AddonTemplate { kind: AddonKind::Convexity, grams });
    Ok(())
}

/// `1 - v_i²` over `vars`.
fn box_cut(vars: &Vars, i: usize) -> Polynomial {
    let n = vars.len();
    let mut sq = vec![0u32; n];
    sq[i] = 2;
    Polynomial::from_terms(
        vars.clone(),
        [(Monomial::one(n), 1.0), (Monomial::new(sq), -1.0)],
    )
    .expect("static cut polynomial is well-formed")
}

/// `1 - Σ_{i ∈ range} v_i²` over `vars`.
fn unit_ball_cut(vars: &Vars, range: Range<usize>) -> Polynomial {
    let n = vars.len();
    let mut terms = vec![(Monomial::one(n), 1.0)];
    for i in range {
        let mut sq = vec![0u32; n];
        sq[i] = 2;
        terms.push((Monomial::new(sq), -1.0));
    }
    Polynomial::from_terms(vars.clone(), terms).expect("static cut polynomial is well-formed")
}

/// Moment-side counterpart of [`assemble_inner`], built independently.
#[derive(Debug, Clone)]
pub struct DualTemplate {
    /// Relaxation order `k`.
    pub order: u32,
    /// Gram degree `d`, matching the primal padding.
    pub cert_degree: u32,
    /// Basis indexing each piece's pseudo-moment vector (joint monomials of
    /// degree at most `2d`).
    pub z_basis: MonomialBasis,
    /// Free-variable index where each piece's pseudo-moments start.
    pub piece_starts: Vec<usize>,
}

/// Builds the moment program: maximise `Σ_pieces L_z(f)` over pseudo-moment
/// vectors whose moment and localizing matrices are PSD, whose equality
/// generators annihilate them, and whose `x`-marginals sum to the box
/// moments.  Returned in minimisation form; the bound is the *negated*
/// objective value.
pub fn assemble_dual(
    scaled: &ScaledProblem,
    order: u32,
) -> Result<(SdpProblem, DualTemplate), CertifyError> {
    let n = scaled.n;
    let m = scaled.m;
    let pieces_constraints: Vec<&[ScaledConstraint]> = match &scaled.union_constraints {
        Some(pieces) => pieces.iter().map(|p| p.as_slice()).collect(),
        None => vec![scaled.constraints.as_slice()],
    };
    let required = minimum_order(&pieces_constraints);
    if order < required {
        return Err(CertifyError::OrderTooSmall { required, got: order });
    }
    let cert_degree = order.max(scaled.f.degree().div_ceil(2));
    let z_basis = MonomialBasis::new(n + m, 2 * cert_degree);

    let mut problem = SdpProblem::new(0, Vec::new());
    let mut piece_starts = Vec::with_capacity(pieces_constraints.len());
    let one = Polynomial::constant(scaled.joint_vars.clone(), 1.0);

    for (pi, piece) in pieces_constraints.iter().enumerate() {
        let z_start = problem.n_free;
        piece_starts.push(z_start);
        problem.n_free += z_basis.len();

        // Objective: min -Σ L_z(f).
        for (mono, c) in scaled.f.terms() {
            let i = z_basis.require_index(mono)?;
            problem.objective.push((VarRef::Free(z_start + i), -c));
        }

        let (ineqs, eqs) = split_constraints(piece);
        let mut localizers: Vec<(Polynomial, u32)> = vec![(one.clone(), cert_degree)];
        for c in &ineqs {
            let v = c.poly.degree().div_ceil(2);
            localizers.push(((*c).poly.clone(), cert_degree - v));
        }
        if let Some(ball) = &scaled.ball {
            localizers.push((ball.clone(), cert_degree - 1));
        }
        for cut in &scaled.box_cuts {
            localizers.push((cut.clone(), cert_degree - 1));
        }
        for (g, deg) in &localizers {
            let basis = MonomialBasis::new(n + m, *deg);
            let block = problem.block_sizes.len();
            problem.block_sizes.push(basis.len());
            let monos = basis.monomials();
            for ib in 0..monos.len() {
                for jb in ib..monos.len() {
                    let pair = mono_sum(&monos[ib], &monos[jb]);
                    let mut terms = vec![(VarRef::entry(block, ib, jb), 1.0)];
                    for (dm, c) in g.terms() {
                        let i = z_basis.require_index(&mono_sum(&pair, dm))?;
                        terms.push((VarRef::Free(z_start + i), -c));
                    }
                    problem.equalities.push(EqualityRow::new(
                        format!("p{pi}:loc{block}:({ib},{jb})"),
                        terms,
                        0.0,
                    ));
                }
            }
        }
        for (t, c) in eqs.iter().enumerate() {
            let mult_basis =
                MonomialBasis::new(n + m, 2 * cert_degree - c.poly.degree());
            for bm in mult_basis.monomials() {
                let mut terms = Vec::new();
                for (dm, ch) in c.poly.terms() {
                    let i = z_basis.require_index(&mono_sum(bm, dm))?;
                    terms.push((VarRef::Free(z_start + i), ch));
                }
                problem.equalities.push(EqualityRow::new(
                    format!("p{pi}:eqgen{t}:{bm}"),
                    terms,
                    0.0,
                ));
            }
        }
    }

    // Marginal constraints: the x-marginals of the pieces' pseudo-moments
    // must sum to the box moments, for every x-monomial of degree ≤ 2k.
    let gammas = measures::box_moments(n, 2 * order);
    for mono in gammas.basis().monomials() {
        let joint = lift_to_joint(mono, m);
        let i = z_basis.require_index(&joint)?;
        let terms: Vec<(VarRef, f64)> = piece_starts
            .iter()
            .map(|&s| (VarRef::Free(s + i), 1.0))
            .collect();
        problem.equalities.push(EqualityRow::new(
            format!("marg:{mono}"),
            terms,
            gammas.value(mono)?,
        ));
    }

    let template = DualTemplate { order, cert_degree, z_basis, piece_starts };
    Ok((problem, template))
}

/// The bound certified by a solved dual program (the negated minimisation
/// objective).
#[must_use]
pub fn dual_bound(solution: &SdpSolution) -> f64 {
    -solution.objective_value
}

/// Evaluates the certificate identity at `samples` seeded random points of
/// the normalised joint cube and reports the worst violation together with
/// the smallest Gram eigenvalue across every block of the solution.
///
/// This is an end-to-end consistency check on assembly, solving and
/// extraction together: a sign error anywhere shows up as an `O(1)`
/// residual, while a healthy solve sits near the solver tolerance.  Add-on
/// blocks participate in the eigenvalue scan; the identity is checked for
/// the main pieces.
pub fn audit_certificate(
    template: &CertificateTemplate,
    scaled: &ScaledProblem,
    solution: &SdpSolution,
    samples: usize,
    seed: u64,
) -> Result<CertificateAudit, CertifyError> {
    let p = template.extract_polynomial(solution)?;
    let nm = template.n + template.m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual = 0.0f64;
    let mut point = vec![0.0f64; nm];
    for _ in 0..samples {
        for v in point.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let lhs = p.evaluate(&point[..template.n])? - scaled.f.evaluate(&point)?;
        for piece in &template.pieces {
            let mut rhs = 0.0;
            for gram in &piece.grams {
                let b: Vec<f64> =
                    gram.basis.monomials().iter().map(|mo| mo.eval(&point)).collect();
                let q = &solution.block_values[gram.block];
                let mut quad = 0.0;
                for i in 0..b.len() {
                    for j in 0..b.len() {
                        quad += b[i] * q[(i, j)] * b[j];
                    }
                }
                rhs += quad * gram.generator.evaluate(&point)?;
            }
            for mult in &piece.multipliers {
                let mut qv = 0.0;
                for (off, mo) in mult.basis.monomials().iter().enumerate() {
                    qv += solution.free_values[mult.free_range.start + off] * mo.eval(&point);
                }
                rhs += qv * mult.generator.evaluate(&point)?;
            }
            max_residual = max_residual.max((lhs - rhs).abs());
        }
    }
    let mut min_eig = f64::INFINITY;
    for block in &solution.block_values {
        if block.nrows() == 0 {
            continue;
        }
        let eigs = block.clone().symmetric_eigen().eigenvalues;
        min_eig = eigs.iter().fold(min_eig, |a, &v| a.min(v));
    }
    Ok(CertificateAudit {
        samples,
        max_identity_residual: max_residual,
        min_gram_eigenvalue: min_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{self, SolveStatus, SolverOptions};
    use crate::engine::{Constraint, Mode, Objective, ProblemSpec};
    use crate::measures::BoxDomain;
    use crate::poly::joint_vars;
    use approx::assert_abs_diff_eq;

    /// Joint polynomial over `x1..xn, y1..ym` from sparse terms.
    fn jp(n: usize, m: usize, terms: &[(&[u32], f64)]) -> Polynomial {
        Polynomial::from_terms(
            joint_vars(n, m),
            terms.iter().map(|(e, c)| (Monomial::new(e.to_vec()), *c)),
        )
        .unwrap()
    }

    fn spec_with(
        n: usize,
        m: usize,
        f: Polynomial,
        constraints: Vec<Constraint>,
        union_pieces: Option<Vec<Vec<Constraint>>>,
    ) -> ProblemSpec {
        ProblemSpec {
            n,
            m,
            x_box: BoxDomain::unit(n),
            y_bound: 1.0,
            constraints,
            objective: Objective::Scalar(f),
            mode: Mode::Inner,
            union_pieces,
        }
    }

    fn scaled(spec: &ProblemSpec) -> ScaledProblem {
        measures::rescale_problem(spec).unwrap()
    }

    fn solve_inner(scaled: &ScaledProblem, k: u32) -> (SdpSolution, CertificateTemplate) {
        let (problem, template) = assemble_inner(scaled, k).unwrap();
        let sol = conic::solve(&problem, &SolverOptions::default()).unwrap();
        (sol, template)
    }

    #[test]
    fn minimal_program_has_the_documented_shape() {
        // n = m = 1, f = y, explicit K = {1 - y² ≥ 0}, order 1: Gram blocks
        // are σ₀ over [1, x, y], the user cut, the ball and the box cut at
        // degree 0; rows are the six joint monomials of degree ≤ 2; free
        // variables are the three coefficients of p.
        let f = jp(1, 1, &[(&[0, 1], 1.0)]);
        let g = jp(1, 1, &[(&[0, 0], 1.0), (&[0, 2], -1.0)]);
        let spec = spec_with(1, 1, f, vec![Constraint::ineq(g)], None);
        let (problem, template) = assemble_inner(&scaled(&spec), 1).unwrap();
        assert_eq!(problem.block_sizes, vec![3, 1, 1, 1]);
        assert_eq!(problem.n_free, 3);
        assert_eq!(problem.equalities.len(), 6);
        assert_eq!(template.cert_degree, 1);
        assert_eq!(template.pieces.len(), 1);
        assert_eq!(template.pieces[0].grams.len(), 4);
        assert!(template.pieces[0].multipliers.is_empty());
        // Objective: γ₀ p₀ + γ₂ p₂ with γ = (1, 0, 1/3).
        assert_eq!(problem.objective.len(), 2);
        assert_abs_diff_eq!(problem.objective[1].1, 1.0 / 3.0, epsilon = 1e-15);
        assert!(problem.validate().is_empty());
    }

    #[test]
    fn constant_bound_is_exact_for_f_equals_y() {
        // J(x) = max{y : y ∈ [-1, 1]} = 1, so the optimal p is the constant
        // one and the program value is exactly 1 already at order 1.
        let f = jp(1, 1, &[(&[0, 1], 1.0)]);
        let spec = spec_with(1, 1, f, vec![], None);
        let (sol, template) = solve_inner(&scaled(&spec), 1);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, 1.0, epsilon = 1e-6);
        let p = template.extract_polynomial(&sol).unwrap();
        assert_abs_diff_eq!(p.evaluate(&[0.3]).unwrap(), 1.0, epsilon = 1e-5);
    }

    #[test]
    fn value_function_free_of_y_is_reproduced_exactly() {
        // f = x: the fiber maximum is x itself, so p ≡ x and ∫ p = 0.
        let f = jp(1, 1, &[(&[1, 0], 1.0)]);
        let spec = spec_with(1, 1, f, vec![], None);
        let (sol, template) = solve_inner(&scaled(&spec), 1);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, 0.0, epsilon = 1e-6);
        let p = template.extract_polynomial(&sol).unwrap();
        for x in [-0.9, -0.2, 0.4, 1.0] {
            assert_abs_diff_eq!(p.evaluate(&[x]).unwrap(), x, epsilon = 1e-3);
        }
    }

    #[test]
    fn degree_padding_admits_low_orders_for_high_degree_f() {
        // f = y⁴ has degree 4, yet order 1 must exist with p quadratic:
        // the Gram blocks get degree d = 2 while p keeps degree 2 and the
        // identity 1 - y⁴ = (1 + y²)(1 - y²) is reachable, so the value is
        // exactly 1.
        let f = jp(1, 1, &[(&[0, 4], 1.0)]);
        let spec = spec_with(1, 1, f, vec![], None);
        let (problem, template) = assemble_inner(&scaled(&spec), 1).unwrap();
        assert_eq!(template.cert_degree, 2);
        assert_eq!(template.p_basis.max_degree(), 2);
        let sol = conic::solve(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn order_below_the_constraint_degree_is_rejected() {
        let f = jp(1, 1, &[(&[0, 1], 1.0)]);
        let g = jp(1, 1, &[(&[0, 0], 1.0), (&[0, 4], -1.0)]);
        let spec = spec_with(1, 1, f, vec![Constraint::ineq(g)], None);
        let err = assemble_inner(&scaled(&spec), 1).unwrap_err();
        match err {
            CertifyError::OrderTooSmall { required, got } => {
                assert_eq!(required, 2);
                assert_eq!(got, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn primal_and_dual_values_agree() {
        // Strong duality after normalisation: the certificate program and
        // the independently assembled moment program meet at the optimum.
        let f = jp(1, 1, &[(&[1, 1], 1.0)]);
        let spec = spec_with(1, 1, f, vec![], None);
        let sc = scaled(&spec);
        let (sol, _) = solve_inner(&sc, 2);
        let (dual_problem, _) = assemble_dual(&sc, 2).unwrap();
        let dual_sol = conic::solve(&dual_problem, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(dual_sol.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, dual_bound(&dual_sol), epsilon = 1e-5);
        // J(x) = |x|, so both sit at or above ∫|x|/2 = 1/2.
        assert!(sol.objective_value >= 0.5 - 1e-6);
    }

    #[test]
    fn hierarchy_value_decreases_with_order_and_monotone_addon_binds_pointwise() {
        let f = jp(1, 1, &[(&[1, 1], 1.0)]);
        let spec = spec_with(1, 1, f, vec![], None);
        let sc = scaled(&spec);
        let (sol1, t1) = solve_inner(&sc, 1);
        let p1 = t1.extract_polynomial(&sol1).unwrap();
        let (mut problem2, mut t2) = assemble_inner(&sc, 2).unwrap();
        // p1 touches the true envelope |x| exactly at x = ±1, so demanding
        // p2 below a numerically noisy p1 leaves no strictly feasible point
        // (and possibly none at all at the 1e-9 scale).  Chaining against
        // p1 plus a solver-scale margin is the intended usage.
        let margin = Polynomial::constant(sc.x_vars.clone(), 1e-6);
        let p1_relaxed = p1.checked_add(&margin).unwrap();
        add_monotone_constraint(&mut problem2, &mut t2, &p1_relaxed).unwrap();
        let sol2 = conic::solve(&problem2, &SolverOptions::default()).unwrap();
        assert_eq!(sol2.status, SolveStatus::Optimal);
        assert!(sol2.objective_value <= sol1.objective_value + 2e-6);
        let p2 = t2.extract_polynomial(&sol2).unwrap();
        for i in 0..=20 {
            let x = -1.0 + i as f64 / 10.0;
            let lo = p2.evaluate(&[x]).unwrap();
            let hi = p1.evaluate(&[x]).unwrap();
            assert!(lo <= hi + 2e-6, "p2({x}) = {lo} exceeds p1({x}) = {hi}");
        }
    }

    #[test]
    fn impossible_monotone_bound_makes_the_program_infeasible() {
        // p must dominate J ≡ 1 but is also required to stay below -5.
        let f = jp(1, 1, &[(&[0, 1], 1.0)]);
        let spec = spec_with(1, 1, f, vec![], None);
        let sc = scaled(&spec);
        let (mut problem, mut template) = assemble_inner(&sc, 2).unwrap();
        let minus_five = Polynomial::constant(sc.x_vars.clone(), -5.0);
        add_monotone_constraint(&mut problem, &mut template, &minus_five).unwrap();
        let sol = conic::solve(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn convexity_addon_yields_a_convex_polynomial() {
        let f = jp(1, 1, &[(&[1, 1], 1.0)]);
        let spec = spec_with(1, 1, f, vec![], None);
        let sc = scaled(&spec);
        let (sol_plain, _) = solve_inner(&sc, 2);
        let (mut problem, mut template) = assemble_inner(&sc, 2).unwrap();
        add_convexity_constraint(&mut problem, &mut template).unwrap();
        let sol = conic::solve(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        // An extra constraint can only raise the minimum.
        assert!(sol.objective_value >= sol_plain.objective_value - 1e-7);
        let p = template.extract_polynomial(&sol).unwrap();
        let pxx = p.partial_derivative(0).partial_derivative(0);
        for i in 0..=20 {
            let x = -1.0 + i as f64 / 10.0;
            let second = pxx.evaluate(&[x]).unwrap();
            assert!(second >= -1e-5, "p''({x}) = {second}");
        }
    }

    #[test]
    fn union_dominates_every_piece_not_just_one() {
        // Pieces {y = 1} and {y = -1} with f = x·y force p ≥ |x|, while the
        // single piece {y = 1} allows p = x with value 0.
        let f = jp(1, 1, &[(&[1, 1], 1.0)]);
        let h_plus = jp(1, 1, &[(&[0, 1], 1.0), (&[0, 0], -1.0)]);
        let h_minus = jp(1, 1, &[(&[0, 1], 1.0), (&[0, 0], 1.0)]);
        let union_spec = spec_with(
            1,
            1,
            f.clone(),
            vec![],
            Some(vec![vec![Constraint::eq(h_plus.clone())], vec![Constraint::eq(h_minus)]]),
        );
        let single_spec = spec_with(1, 1, f, vec![Constraint::eq(h_plus)], None);
        let (union_sol, union_template) = solve_inner(&scaled(&union_spec), 2);
        let (single_sol, _) = solve_inner(&scaled(&single_spec), 2);
        assert_eq!(union_sol.status, SolveStatus::Optimal);
        assert_eq!(single_sol.status, SolveStatus::Optimal);
        assert_eq!(union_template.pieces.len(), 2);
        assert!(!union_template.pieces[0].multipliers.is_empty());
        assert!(union_sol.objective_value >= 0.49);
        assert_abs_diff_eq!(single_sol.objective_value, 0.0, epsilon = 1e-5);
    }

    #[test]
    fn audit_accepts_a_clean_solve() {
        let f = jp(1, 1, &[(&[1, 1], 1.0), (&[2, 0], 0.5)]);
        let spec = spec_with(1, 1, f, vec![], None);
        let sc = scaled(&spec);
        let (sol, template) = solve_inner(&sc, 2);
        let audit = audit_certificate(&template, &sc, &sol, AUDIT_SAMPLES, 7).unwrap();
        assert!(audit.max_identity_residual <= 1e-5, "{audit:?}");
        assert!(audit.min_gram_eigenvalue >= -1e-6, "{audit:?}");
    }

    #[test]
    fn random_quadratics_are_bounded_above_by_the_certificate() {
        // Soundness sweep: the program value ∫ p must dominate a grid
        // estimate of ∫ J for random bilinear-quadratic f.
        use proptest::prelude::*;
        proptest!(ProptestConfig::with_cases(8), |(
            a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
        )| {
            let f = jp(1, 1, &[(&[1, 1], a), (&[0, 2], b), (&[1, 0], c)]);
            let spec = spec_with(1, 1, f.clone(), vec![], None);
            let sc = scaled(&spec);
            let (sol, _) = solve_inner(&sc, 2);
            prop_assert_eq!(sol.status, SolveStatus::Optimal);
            // Midpoint rule on x; inner max on a y grid never overestimates
            // the true fiber maximum, so the comparison is one-sided.
            let steps = 64;
            let mut integral = 0.0;
            for i in 0..steps {
                let x = -1.0 + (2.0 * i as f64 + 1.0) / steps as f64;
                let mut best = f64::NEG_INFINITY;
                for j in 0..=64 {
                    let y = -1.0 + j as f64 / 32.0;
                    best = best.max(f.evaluate(&[x, y]).unwrap());
                }
                integral += best;
            }
            // Midpoint weight 2/steps divided by the box volume 2.
            integral /= steps as f64;
            prop_assert!(sol.objective_value >= integral - 1e-5,
                "value {} below grid estimate {}", sol.objective_value, integral);
        });
    }
}
