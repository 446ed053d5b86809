//! Sparse semidefinite-program representation and the interior-point bridge.
//!
//! Certificate assembly (see [`crate::certify`]) produces linear equality
//! constraints over a mixed variable space: a handful of scalar *free*
//! variables (polynomial coefficients, sign-free multiplier coefficients) and
//! the entries of one or more symmetric *Gram* blocks that must be positive
//! semidefinite.  This module owns that picture end to end:
//!
//! * [`SdpProblem`] stores the program exactly as assembled — labelled
//!   equality rows over [`VarRef`]s — with no solver-specific encoding, so
//!   tests can inspect and snapshot the structure before anything numeric
//!   happens.
//! * [`solve`] translates the program into the scaled-triangle conic form the
//!   backend expects, runs it, and maps the answer back so callers never see
//!   backend conventions.
//!
//! The translation keeps decision variables in *raw* matrix entries: a
//! coefficient on [`VarRef::Entry`] always means "times the scalar `X[i,j]`,
//! counted once".  The `√2` scaling that the backend's triangle cone wants is
//! injected only in the identity rows that copy each block into its cone
//! slack, which confines the easiest-to-miss constant to a single loop.  The
//! unit tests pin that scaling numerically from both directions (an
//! off-diagonal objective and an off-diagonal constraint), because an error
//! there produces answers that are plausible yet off by `√2` on exactly the
//! problems where off-diagonal entries are active.
//!
//! Dual variables on equality rows are reported in the textbook convention
//! for `min cᵀv  s.t.  Ev = d`: the returned multipliers `y` satisfy
//! `dᵀy = objective` at optimality.  The backend internally uses the opposite
//! sign; the flip happens here and is pinned by a test.

use std::fmt::Write as _;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

/// Default primal/dual feasibility tolerance handed to the interior-point
/// backend.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-8;

/// Default absolute and relative duality-gap tolerance.
pub const DEFAULT_DUALITY_GAP_TOL: f64 = 1e-8;

/// Default iteration cap.  Interior-point methods on well-scaled problems of
/// the size produced here converge in 10–40 iterations; hitting this cap is
/// reported as [`SolveStatus::MaxIterations`] rather than silently accepted.
pub const DEFAULT_MAX_ITERATIONS: u32 = 200;

/// Slack multiplier applied to the feasibility tolerance in the a-posteriori
/// solution audit (minimum Gram eigenvalue, equality residuals).  The backend
/// reports residuals on an internally equilibrated problem, so the raw-data
/// residual can legitimately exceed the tolerance by a modest factor; beyond
/// this multiplier the result is downgraded to
/// [`SolveStatus::NumericalFailure`].
pub const POST_CHECK_SLACK: f64 = 100.0;

/// Errors produced while preparing or running a semidefinite program.
#[derive(Debug, Error)]
pub enum ConicError {
    /// Structural defects found by [`SdpProblem::validate`].  Every defect is
    /// listed, not just the first, so assembly bugs surface in one pass.
    #[error("invalid SDP: {}", .defects.join("; "))]
    Invalid {
        /// Human-readable description of each defect.
        defects: Vec<String>,
    },
    /// The backend rejected the problem data outright.
    #[error("solver backend rejected the problem: {0}")]
    Backend(String),
}

/// Reference to one scalar decision variable of an [`SdpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    /// Sign-unconstrained scalar variable with the given index.
    Free(usize),
    /// Entry `(row, col)` of the symmetric PSD block with the given index.
    /// `(i, j)` and `(j, i)` name the same scalar; constructors normalise to
    /// `row <= col` and the translation layer tolerates either order.
    Entry {
        /// Index into [`SdpProblem::block_sizes`].
        block: usize,
        /// Zero-based row.
        row: usize,
        /// Zero-based column.
        col: usize,
    },
}

impl VarRef {
    /// Entry `(i, j)` of block `b`, normalised so `row <= col`.
    #[must_use]
    pub fn entry(block: usize, i: usize, j: usize) -> Self {
        VarRef::Entry { block, row: i.min(j), col: i.max(j) }
    }
}

impl std::fmt::Display for VarRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarRef::Free(i) => write!(f, "v{i}"),
            VarRef::Entry { block, row, col } => write!(f, "G{block}[{row},{col}]"),
        }
    }
}

/// One linear equality constraint `Σ coef · var = rhs`.
#[derive(Debug, Clone)]
pub struct EqualityRow {
    /// Diagnostic label naming the row's origin (for example the monomial
    /// whose coefficients it matches).  Shown in validation defects and the
    /// debug dump; never parsed.
    pub label: String,
    /// Linear terms; duplicate variables are summed.
    pub terms: Vec<(VarRef, f64)>,
    /// Right-hand side.
    pub rhs: f64,
}

impl EqualityRow {
    /// Builds a row from its parts.
    #[must_use]
    pub fn new(label: impl Into<String>, terms: Vec<(VarRef, f64)>, rhs: f64) -> Self {
        EqualityRow { label: label.into(), terms, rhs }
    }
}

/// A semidefinite program in the shape this crate assembles:
///
/// ```text
/// minimise    Σ objective[t].1 · objective[t].0
/// subject to  every EqualityRow holding exactly,
///             every Gram block positive semidefinite.
/// ```
#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    /// Number of sign-unconstrained scalar variables.
    pub n_free: usize,
    /// Side length of each symmetric PSD block.
    pub block_sizes: Vec<usize>,
    /// Linear objective, to be minimised.  Duplicate variables are summed.
    pub objective: Vec<(VarRef, f64)>,
    /// Equality constraints.
    pub equalities: Vec<EqualityRow>,
}

impl SdpProblem {
    /// Creates an empty program with the given variable layout.
    #[must_use]
    pub fn new(n_free: usize, block_sizes: Vec<usize>) -> Self {
        SdpProblem { n_free, block_sizes, objective: Vec::new(), equalities: Vec::new() }
    }

    /// Number of scalar decision variables: free variables plus one per
    /// upper-triangle entry of each block.
    #[must_use]
    pub fn n_scalar_vars(&self) -> usize {
        self.n_free + self.block_sizes.iter().map(|&d| triangle_size(d)).sum::<usize>()
    }

    /// Checks every structural invariant and returns *all* defects found.
    /// An empty vector means the program can be handed to [`solve`].
    #[must_use]
    pub fn validate(&self) -> Vec<String> {
        let mut defects = Vec::new();
        for (b, &d) in self.block_sizes.iter().enumerate() {
            if d == 0 {
                defects.push(format!("block {b} has size 0"));
            }
        }
        let check_ref = |what: &str, var: &VarRef, coef: f64, defects: &mut Vec<String>| {
            if !coef.is_finite() {
                defects.push(format!("{what}: non-finite coefficient on {var}"));
            }
            match *var {
                VarRef::Free(i) => {
                    if i >= self.n_free {
                        defects.push(format!(
                            "{what}: free variable v{i} out of range (n_free = {})",
                            self.n_free
                        ));
                    }
                }
                VarRef::Entry { block, row, col } => match self.block_sizes.get(block) {
                    None => defects.push(format!(
                        "{what}: block {block} out of range ({} blocks)",
                        self.block_sizes.len()
                    )),
                    Some(&d) if row >= d || col >= d => defects.push(format!(
                        "{what}: entry ({row},{col}) out of range for block {block} of size {d}"
                    )),
                    Some(_) => {}
                },
            }
        };
        for (var, coef) in &self.objective {
            check_ref("objective", var, *coef, &mut defects);
        }
        for (r, row) in self.equalities.iter().enumerate() {
            let what = format!("equality {r} '{}'", row.label);
            if row.terms.is_empty() {
                defects.push(format!("{what}: has no terms"));
            }
            if !row.rhs.is_finite() {
                defects.push(format!("{what}: non-finite right-hand side"));
            }
            for (var, coef) in &row.terms {
                check_ref(&what, var, *coef, &mut defects);
            }
        }
        defects
    }

    /// Renders the full program as text, one line per equality row, for
    /// debugging and structural snapshot tests.
    #[must_use]
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        let blocks: Vec<String> =
            self.block_sizes.iter().map(|d| format!("{d}x{d}")).collect();
        let _ = writeln!(
            out,
            "sdp: {} free, blocks [{}], {} equalities",
            self.n_free,
            blocks.join(", "),
            self.equalities.len()
        );
        let fmt_terms = |terms: &[(VarRef, f64)]| -> String {
            if terms.is_empty() {
                return "0".to_string();
            }
            terms
                .iter()
                .map(|(v, c)| format!("{c:+.6e}*{v}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "min {}", fmt_terms(&self.objective));
        for (r, row) in self.equalities.iter().enumerate() {
            let _ = writeln!(
                out,
                "eq[{r}] {}: {} = {:+.6e}",
                row.label,
                fmt_terms(&row.terms),
                row.rhs
            );
        }
        out
    }
}

/// Number of upper-triangle entries of a `d × d` symmetric matrix.
#[must_use]
pub fn triangle_size(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Knobs forwarded to the interior-point backend.
#[derive(Debug, Clone, Serialize)]
pub struct SolverOptions {
    /// Primal/dual feasibility tolerance.
    pub feasibility_tol: f64,
    /// Absolute and relative duality-gap tolerance.
    pub duality_gap_tol: f64,
    /// Iteration cap.
    pub max_iterations: u32,
    /// Emit the backend's per-iteration log to stdout.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: DEFAULT_FEASIBILITY_TOL,
            duality_gap_tol: DEFAULT_DUALITY_GAP_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            verbose: false,
        }
    }
}

/// Outcome classification of a solve, independent of the backend's richer
/// status enum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Converged within tolerances and passed the a-posteriori audit.
    Optimal,
    /// The equalities and cone constraints admit no common point.
    Infeasible,
    /// The objective is unbounded below over the feasible set.
    Unbounded,
    /// Iteration or time cap reached first; values are the last iterate.
    MaxIterations,
    /// The backend failed numerically, or its answer failed the audit.
    NumericalFailure,
}

impl SolveStatus {
    /// Stable lower-case name, matching the serialised form.
    #[must_use]
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything extracted from one backend run.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Outcome classification; non-status fields are meaningful only for
    /// [`SolveStatus::Optimal`] and (as a best effort) `MaxIterations`.
    pub status: SolveStatus,
    /// Primal objective value.
    pub objective_value: f64,
    /// Values of the free variables, in index order.
    pub free_values: Vec<f64>,
    /// Each Gram block as a full symmetric matrix.
    pub block_values: Vec<DMatrix<f64>>,
    /// Equality multipliers `y` in the convention `dᵀy = objective` at
    /// optimality, one per [`SdpProblem::equalities`] row.
    pub dual_equality_values: Vec<f64>,
    /// Interior-point iterations performed.
    pub iterations: u32,
    /// Wall-clock seconds inside the backend.
    pub solve_seconds: f64,
}

/// Solves the program with the interior-point backend.
///
/// Validation runs first and reports every structural defect at once.  After
/// a nominally successful solve the answer is audited against the *raw*
/// problem data (minimum Gram eigenvalue and worst equality residual, both
/// within [`POST_CHECK_SLACK`] times the feasibility tolerance); an audit
/// failure downgrades the status to [`SolveStatus::NumericalFailure`] rather
/// than passing garbage downstream.
pub fn solve(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpSolution, ConicError> {
    let defects = problem.validate();
    if !defects.is_empty() {
        return Err(ConicError::Invalid { defects });
    }

    let n = problem.n_scalar_vars();
    if n == 0 {
        // Validation guarantees there are no equality rows either (a row
        // with no terms is a defect), so the program is `min 0`.
        return Ok(SdpSolution {
            status: SolveStatus::Optimal,
            objective_value: 0.0,
            free_values: Vec::new(),
            block_values: Vec::new(),
            dual_equality_values: Vec::new(),
            iterations: 0,
            solve_seconds: 0.0,
        });
    }

    // Column layout: free variables first, then each block's upper triangle
    // in column-major order (the entry (i, j), i <= j, of block b sits at
    // block_offset[b] + j(j+1)/2 + i).
    let mut block_offsets = Vec::with_capacity(problem.block_sizes.len());
    let mut next = problem.n_free;
    for &d in &problem.block_sizes {
        block_offsets.push(next);
        next += triangle_size(d);
    }
    let column_of = |var: &VarRef| -> usize {
        match *var {
            VarRef::Free(i) => i,
            VarRef::Entry { block, row, col } => {
                let (i, j) = (row.min(col), row.max(col));
                block_offsets[block] + j * (j + 1) / 2 + i
            }
        }
    };

    let mut q = vec![0.0f64; n];
    for (var, coef) in &problem.objective {
        q[column_of(var)] += *coef;
    }

    let n_eq = problem.equalities.len();
    let n_psd_rows: usize = problem.block_sizes.iter().map(|&d| triangle_size(d)).sum();
    let m = n_eq + n_psd_rows;

    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut b = vec![0.0f64; m];
    for (r, row) in problem.equalities.iter().enumerate() {
        for (var, coef) in &row.terms {
            rows.push(r);
            cols.push(column_of(var));
            vals.push(*coef);
        }
        b[r] = row.rhs;
    }
    // Copy each block into its cone slack: s = -A x with A = -diag(scale),
    // where scale is √2 on off-diagonal entries and 1 on the diagonal.  This
    // is the only place the backend's scaled-triangle convention appears.
    let mut psd_row = n_eq;
    for (bi, &d) in problem.block_sizes.iter().enumerate() {
        for j in 0..d {
            for i in 0..=j {
                let scale = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
                rows.push(psd_row);
                cols.push(block_offsets[bi] + j * (j + 1) / 2 + i);
                vals.push(-scale);
                psd_row += 1;
            }
        }
    }

    let a = CscMatrix::new_from_triplets(m, n, rows, cols, vals);
    let p = CscMatrix::zeros((n, n));

    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    if n_eq > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_eq));
    }
    for &d in &problem.block_sizes {
        cones.push(SupportedConeT::PSDTriangleConeT(d));
    }

    let settings = DefaultSettings {
        max_iter: options.max_iterations,
        verbose: options.verbose,
        tol_feas: options.feasibility_tol,
        tol_gap_abs: options.duality_gap_tol,
        tol_gap_rel: options.duality_gap_tol,
        ..DefaultSettings::default()
    };

    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
        .map_err(|e| ConicError::Backend(e.to_string()))?;
    solver.solve();
    let solution = &solver.solution;

    let mut status = match solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            SolveStatus::Unbounded
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::MaxIterations,
        _ => SolveStatus::NumericalFailure,
    };

    let free_values = solution.x[..problem.n_free].to_vec();
    let mut block_values = Vec::with_capacity(problem.block_sizes.len());
    for (bi, &d) in problem.block_sizes.iter().enumerate() {
        let mut mat = DMatrix::<f64>::zeros(d, d);
        for j in 0..d {
            for i in 0..=j {
                let v = solution.x[block_offsets[bi] + j * (j + 1) / 2 + i];
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
        block_values.push(mat);
    }
    // Backend stationarity is q + Aᵀz = 0; textbook multipliers for
    // `min cᵀv s.t. Ev = d` satisfy c = Eᵀy, hence y = -z on equality rows.
    let dual_equality_values: Vec<f64> = solution.z[..n_eq].iter().map(|z| -z).collect();

    if status == SolveStatus::Optimal {
        let band = POST_CHECK_SLACK * options.feasibility_tol;
        for mat in &block_values {
            if mat.nrows() == 0 {
                continue;
            }
            let scale = 1.0 + mat.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let min_eig = mat
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .fold(f64::INFINITY, |a, &v| a.min(v));
            if !(min_eig >= -band * scale) {
                status = SolveStatus::NumericalFailure;
            }
        }
        for row in &problem.equalities {
            let mut acc = -row.rhs;
            let mut scale = 1.0 + row.rhs.abs();
            for (var, coef) in &row.terms {
                let term = coef * solution.x[column_of(var)];
                acc += term;
                scale = scale.max(term.abs());
            }
            if !(acc.abs() <= band * scale) {
                status = SolveStatus::NumericalFailure;
            }
        }
    }

    Ok(SdpSolution {
        status,
        objective_value: solution.obj_val,
        free_values,
        block_values,
        dual_equality_values,
        iterations: solution.iterations,
        solve_seconds: solution.solve_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn validate_reports_every_defect_in_one_pass() {
        let problem = SdpProblem {
            n_free: 1,
            block_sizes: vec![2, 0],
            objective: vec![(VarRef::Free(3), 1.0), (VarRef::entry(0, 0, 0), f64::NAN)],
            equalities: vec![
                EqualityRow::new("empty", vec![], 1.0),
                EqualityRow::new("bad", vec![(VarRef::entry(0, 2, 0), 1.0)], f64::INFINITY),
                EqualityRow::new("missing-block", vec![(VarRef::entry(5, 0, 0), 1.0)], 0.0),
            ],
        };
        let defects = problem.validate();
        let text = defects.join("\n");
        assert!(text.contains("block 1 has size 0"), "{text}");
        assert!(text.contains("free variable v3 out of range"), "{text}");
        assert!(text.contains("non-finite coefficient on G0[0,0]"), "{text}");
        assert!(text.contains("equality 0 'empty': has no terms"), "{text}");
        assert!(text.contains("entry (0,2) out of range for block 0 of size 2"), "{text}");
        assert!(text.contains("non-finite right-hand side"), "{text}");
        assert!(text.contains("block 5 out of range"), "{text}");
        assert_eq!(defects.len(), 7, "{text}");
    }

    #[test]
    fn solving_an_invalid_problem_is_an_error_not_a_panic() {
        let mut problem = SdpProblem::new(0, vec![]);
        problem.equalities.push(EqualityRow::new("empty", vec![], 2.0));
        let err = solve(&problem, &opts()).unwrap_err();
        assert!(matches!(err, ConicError::Invalid { .. }), "{err}");
    }

    #[test]
    fn empty_problem_is_trivially_optimal() {
        let problem = SdpProblem::new(0, vec![]);
        let sol = solve(&problem, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective_value, 0.0);
    }

    #[test]
    fn forcing_a_free_variable_pins_value_and_dual_sign() {
        // min t  s.t.  t = 5.  Textbook multiplier: y = 1, dᵀy = 5.
        let mut problem = SdpProblem::new(1, vec![]);
        problem.objective.push((VarRef::Free(0), 1.0));
        problem
            .equalities
            .push(EqualityRow::new("fix-t", vec![(VarRef::Free(0), 1.0)], 5.0));
        let sol = solve(&problem, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, 5.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.free_values[0], 5.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.dual_equality_values[0], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn arrow_matrix_minimisation_hits_the_psd_boundary() {
        // min t  s.t.  [[t, 1], [1, t]] ⪰ 0: optimum t = 1 with the rank-one
        // block [[1, 1], [1, 1]].  The off-diagonal equality pins the
        // triangle scaling; the dual on that row equals the objective.
        let mut problem = SdpProblem::new(1, vec![2]);
        problem.objective.push((VarRef::Free(0), 1.0));
        let t = VarRef::Free(0);
        problem.equalities.push(EqualityRow::new(
            "tie-00",
            vec![(VarRef::entry(0, 0, 0), 1.0), (t, -1.0)],
            0.0,
        ));
        problem.equalities.push(EqualityRow::new(
            "tie-11",
            vec![(VarRef::entry(0, 1, 1), 1.0), (t, -1.0)],
            0.0,
        ));
        problem
            .equalities
            .push(EqualityRow::new("offdiag", vec![(VarRef::entry(0, 0, 1), 1.0)], 1.0));
        let sol = solve(&problem, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.free_values[0], 1.0, epsilon = 1e-6);
        let block = &sol.block_values[0];
        assert_abs_diff_eq!(block[(0, 0)], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(block[(0, 1)], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(block[(1, 0)], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.dual_equality_values[2], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn off_diagonal_objective_is_not_scaled_by_sqrt_two() {
        // min 2·X01  s.t.  X00 = X11 = 1, X ⪰ 0: optimum -2 at X01 = -1.
        // A missing (or doubled) √2 in the objective translation would move
        // the reported optimum to ±2·√2^±1, so this value is discriminating.
        let mut problem = SdpProblem::new(0, vec![2]);
        problem.objective.push((VarRef::entry(0, 0, 1), 2.0));
        problem
            .equalities
            .push(EqualityRow::new("d0", vec![(VarRef::entry(0, 0, 0), 1.0)], 1.0));
        problem
            .equalities
            .push(EqualityRow::new("d1", vec![(VarRef::entry(0, 1, 1), 1.0)], 1.0));
        let sol = solve(&problem, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, -2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.block_values[0][(0, 1)], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn transposed_entry_references_name_the_same_variable() {
        // Same program as above but the objective addresses (1, 0) while the
        // rows address (0, 1); both must resolve to one scalar.
        let mut problem = SdpProblem::new(0, vec![2]);
        problem.objective.push((VarRef::entry(0, 1, 0), 2.0));
        problem
            .equalities
            .push(EqualityRow::new("d0", vec![(VarRef::entry(0, 0, 0), 1.0)], 1.0));
        problem
            .equalities
            .push(EqualityRow::new("d1", vec![(VarRef::entry(0, 1, 1), 1.0)], 1.0));
        let sol = solve(&problem, &opts()).unwrap();
        assert_abs_diff_eq!(sol.objective_value, -2.0, epsilon = 1e-6);
    }

    #[test]
    fn negative_diagonal_requirement_is_infeasible() {
        let mut problem = SdpProblem::new(0, vec![1]);
        problem
            .equalities
            .push(EqualityRow::new("neg", vec![(VarRef::entry(0, 0, 0), 1.0)], -1.0));
        let sol = solve(&problem, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn objective_unbounded_below_is_reported() {
        // min -t  s.t.  X00 - t = 0, X00 >= 0: t can grow without bound.
        let mut problem = SdpProblem::new(1, vec![1]);
        problem.objective.push((VarRef::Free(0), -1.0));
        problem.equalities.push(EqualityRow::new(
            "tie",
            vec![(VarRef::entry(0, 0, 0), 1.0), (VarRef::Free(0), -1.0)],
            0.0,
        ));
        let sol = solve(&problem, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn iteration_cap_is_reported_not_masked() {
        let mut problem = SdpProblem::new(1, vec![2]);
        problem.objective.push((VarRef::Free(0), 1.0));
        problem.equalities.push(EqualityRow::new(
            "tie-00",
            vec![(VarRef::entry(0, 0, 0), 1.0), (VarRef::Free(0), -1.0)],
            0.0,
        ));
        problem
            .equalities
            .push(EqualityRow::new("offdiag", vec![(VarRef::entry(0, 0, 1), 1.0)], 1.0));
        problem.equalities.push(EqualityRow::new(
            "tie-11",
            vec![(VarRef::entry(0, 1, 1), 1.0), (VarRef::Free(0), -1.0)],
            0.0,
        ));
        let mut options = opts();
        options.max_iterations = 1;
        let sol = solve(&problem, &options).unwrap();
        assert_eq!(sol.status, SolveStatus::MaxIterations);
    }

    #[test]
    fn one_by_one_block_acts_as_a_nonnegative_scalar() {
        // min X00 with X00 >= 0 and no equalities: optimum 0.  Exercises the
        // no-zero-cone code path.
        let mut problem = SdpProblem::new(0, vec![1]);
        problem.objective.push((VarRef::entry(0, 0, 0), 1.0));
        let sol = solve(&problem, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, 0.0, epsilon = 1e-6);
        assert!(sol.block_values[0][(0, 0)] >= -1e-8);
    }

    #[test]
    fn debug_dump_is_stable() {
        let mut problem = SdpProblem::new(1, vec![2]);
        problem.objective.push((VarRef::Free(0), 1.0));
        problem.equalities.push(EqualityRow::new(
            "x^2",
            vec![(VarRef::entry(0, 0, 1), 2.0), (VarRef::Free(0), -1.0)],
            0.5,
        ));
        let expected = "sdp: 1 free, blocks [2x2], 1 equalities\n\
                        min +1.000000e0*v0\n\
                        eq[0] x^2: +2.000000e0*G0[0,1] -1.000000e0*v0 = +5.000000e-1\n";
        assert_eq!(problem.debug_dump(), expected);
    }

    #[test]
    fn duals_track_objective_coefficients_on_forced_variables() {
        // min c0·t0 + c1·t1  s.t.  t_i = a_i  has multipliers y = c and
        // objective cᵀa; sweeps the sign convention across magnitudes.
        use proptest::prelude::*;
        proptest!(ProptestConfig::with_cases(16), |(
            c0 in 0.5f64..3.0, c1 in -3.0f64..-0.5,
            a0 in -2.0f64..2.0, a1 in -2.0f64..2.0,
        )| {
            let mut problem = SdpProblem::new(2, vec![]);
            problem.objective.push((VarRef::Free(0), c0));
            problem.objective.push((VarRef::Free(1), c1));
            problem
                .equalities
                .push(EqualityRow::new("fix-0", vec![(VarRef::Free(0), 1.0)], a0));
            problem
                .equalities
                .push(EqualityRow::new("fix-1", vec![(VarRef::Free(1), 1.0)], a1));
            let sol = solve(&problem, &opts()).unwrap();
            prop_assert_eq!(sol.status, SolveStatus::Optimal);
            prop_assert!((sol.objective_value - (c0 * a0 + c1 * a1)).abs() < 1e-5);
            prop_assert!((sol.dual_equality_values[0] - c0).abs() < 1e-5);
            prop_assert!((sol.dual_equality_values[1] - c1).abs() < 1e-5);
        });
    }
}
