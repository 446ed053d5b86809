//! Sparse multivariate polynomials over a named, ordered variable list.
//!
//! Everything downstream — moment vectors, certificate assembly, the solver
//! IR, the verification oracle — funnels through this representation, so the
//! invariants here are deliberately strict:
//!
//! * terms are keyed by exponent vector in **graded lexicographic** order
//!   (total degree first, then lexicographic with earlier variables ranked
//!   higher), which makes iteration order, serialization, and basis indexing
//!   deterministic without any sorting at use sites;
//! * coefficients with magnitude below [`COEF_EPSILON`] are dropped after
//!   every arithmetic operation, so "zero" terms can never accumulate and
//!   perturb degree bookkeeping;
//! * operations on polynomials with different variable lists are *errors*,
//!   never silent unions — mixing coordinate systems is the classic way to
//!   corrupt a certificate assembly;
//! * non-finite coefficients are rejected at construction time, which keeps
//!   the JSON encoding total (every storable polynomial round-trips
//!   bit-exactly).
//!
//! The JSON encoding is part of the public file contract:
//!
//! ```json
//! {"vars": ["x1", "y1"], "terms": [{"exps": [1, 0], "coef": 1.0}]}
//! ```

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Coefficients with magnitude strictly below this threshold are pruned after
/// every arithmetic operation. The value sits well under the noise floor of
/// the interior-point solves (~1e-9) while staying far above f64 rounding on
/// the coefficient magnitudes that occur in practice.
pub const COEF_EPSILON: f64 = 1e-14;

/// Shared, immutable variable list. Cloning is a pointer copy, and pointer
/// equality is used as a fast path when checking that two polynomials live
/// over the same variables.
pub type Vars = Arc<[String]>;

/// Builds a [`Vars`] list from string slices.
pub fn vars(names: &[&str]) -> Vars {
    names.iter().map(|s| s.to_string()).collect()
}

/// Canonical variable names `x1..xn` followed by `y1..ym`, the convention
/// used by problem files and every pipeline stage.
pub fn joint_vars(n: usize, m: usize) -> Vars {
    (1..=n)
        .map(|i| format!("x{i}"))
        .chain((1..=m).map(|j| format!("y{j}")))
        .collect()
}

/// Errors from polynomial construction and evaluation.
#[derive(Debug, Error)]
pub enum PolyError {
    #[error("variable lists differ: [{left}] vs [{right}]")]
    VarMismatch { left: String, right: String },
    #[error("point has {got} coordinates but the polynomial has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient of {monomial} is not finite")]
    NonFiniteCoefficient { monomial: String },
    #[error("term exponent vector has {got} entries but {expected} variables are declared")]
    BadTermArity { expected: usize, got: usize },
    #[error("duplicate term with exponents {exps:?}")]
    DuplicateTerm { exps: Vec<u32> },
    #[error("variable {name:?} does not appear in the target variable list")]
    MissingVariable { name: String },
    #[error("auxiliary variable {name:?} collides with an existing variable")]
    VariableCollision { name: String },
    #[error("matrix is not square (row {row} has {got} entries, expected {expected})")]
    NotSquare { row: usize, got: usize, expected: usize },
    #[error("matrix is not symmetric: entry ({i},{j}) differs from ({j},{i})")]
    NotSymmetric { i: usize, j: usize },
}

fn var_list_string(vars: &[String]) -> String {
    vars.join(", ")
}

// ---------------------------------------------------------------------------
// Monomial
// ---------------------------------------------------------------------------

/// An exponent vector. `Ord` implements graded lexicographic order: lower
/// total degree first; within a degree, the monomial with the larger exponent
/// on the earliest variable comes first. For two variables this enumerates
/// `1, x1, x2, x1^2, x1*x2, x2^2, ...`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial { exps }
    }

    /// The constant monomial over `n_vars` variables.
    pub fn one(n_vars: usize) -> Self {
        Monomial { exps: vec![0; n_vars] }
    }

    /// The monomial `v_i` over `n_vars` variables.
    ///
    /// # Panics
    /// If `i >= n_vars`.
    pub fn var(n_vars: usize, i: usize) -> Self {
        assert!(i < n_vars, "variable index {i} out of range for {n_vars} variables");
        let mut exps = vec![0; n_vars];
        exps[i] = 1;
        Monomial { exps }
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn n_vars(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    /// Product of two monomials over the same variable count.
    ///
    /// # Panics
    /// If the exponent vectors have different lengths; that is a programming
    /// error, not a recoverable condition.
    #[must_use]
    pub fn mul(&self, other: &Monomial) -> Monomial {
        assert_eq!(
            self.exps.len(),
            other.exps.len(),
            "monomial arity mismatch: {} vs {}",
            self.exps.len(),
            other.exps.len()
        );
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Evaluates the monomial at a point of matching dimension.
    pub fn eval(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.exps.len());
        self.exps
            .iter()
            .zip(point)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            // Reversed lexicographic comparison within a degree block, so the
            // monomial with more weight on earlier variables sorts first.
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "v{}", i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Polynomial
// ---------------------------------------------------------------------------

/// A sparse polynomial with `f64` coefficients over a fixed variable list.
///
/// Term iteration follows graded lexicographic order (see [`Monomial`]), which
/// is also the order used by the JSON encoding and by coefficient vectors in
/// the SDP assembly.
#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial {
    vars: Vars,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(vars: Vars) -> Self {
        Polynomial { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: Vars, c: f64) -> Self {
        let n = vars.len();
        let mut p = Polynomial::zero(vars);
        if c.abs() >= COEF_EPSILON {
            p.terms.insert(Monomial::one(n), c);
        }
        p
    }

    /// The polynomial `v_i`.
    ///
    /// # Panics
    /// If `i` is out of range for the variable list.
    pub fn variable(vars: Vars, i: usize) -> Self {
        let n = vars.len();
        let mut p = Polynomial::zero(vars);
        p.terms.insert(Monomial::var(n, i), 1.0);
        p
    }

    /// Builds a polynomial from `(monomial, coefficient)` pairs. Rejects
    /// non-finite coefficients, arity mismatches, and duplicate monomials;
    /// near-zero coefficients are pruned.
    pub fn from_terms(
        vars: Vars,
        terms: impl IntoIterator<Item = (Monomial, f64)>,
    ) -> Result<Self, PolyError> {
        let n = vars.len();
        let mut map = BTreeMap::new();
        for (m, c) in terms {
            if m.n_vars() != n {
                return Err(PolyError::BadTermArity { expected: n, got: m.n_vars() });
            }
            if !c.is_finite() {
                return Err(PolyError::NonFiniteCoefficient { monomial: m.to_string() });
            }
            if c.abs() < COEF_EPSILON {
                continue;
            }
            if map.insert(m.clone(), c).is_some() {
                return Err(PolyError::DuplicateTerm { exps: m.exps().to_vec() });
            }
        }
        Ok(Polynomial { vars, terms: map })
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial reports degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Number of stored (nonzero) terms.
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient of a monomial, `0.0` if absent.
    pub fn coef(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Terms in graded lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    /// Largest absolute coefficient (`0.0` for the zero polynomial).
    pub fn max_abs_coef(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Sum of absolute coefficients; a cheap upper bound for the sup-norm on
    /// `[-1, 1]^n`.
    pub fn coef_l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    fn check_same_vars(&self, other: &Polynomial) -> Result<(), PolyError> {
        if Arc::ptr_eq(&self.vars, &other.vars) || self.vars == other.vars {
            Ok(())
        } else {
            Err(PolyError::VarMismatch {
                left: var_list_string(&self.vars),
                right: var_list_string(&other.vars),
            })
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= COEF_EPSILON);
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_same_vars(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            *out.terms.entry(m.clone()).or_insert(0.0) += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.checked_add(&other.checked_scale(-1.0))
    }

    #[must_use]
    pub fn checked_scale(&self, s: f64) -> Polynomial {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out.prune();
        out
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_same_vars(other)?;
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                *terms.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        let mut out = Polynomial { vars: self.vars.clone(), terms };
        out.prune();
        Ok(out)
    }

    /// `self^e` by repeated multiplication.
    pub fn checked_pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.vars.clone(), 1.0);
        for _ in 0..e {
            out = out.checked_mul(self).expect("same variable list");
        }
        out
    }

    /// Evaluates at a point of matching dimension.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.vars.len() {
            return Err(PolyError::DimensionMismatch {
                expected: self.vars.len(),
                got: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, &c)| c * m.eval(point))
            .sum())
    }

    /// Substitutes `v_i <- scale[i] * v_i + shift[i]` and expands. The result
    /// lives over the same variable list; `p.substitute_affine(s, t)` is
    /// `p(s ⊙ v + t)` as a function of the new `v`.
    pub fn substitute_affine(
        &self,
        scale: &[f64],
        shift: &[f64],
    ) -> Result<Polynomial, PolyError> {
        let n = self.vars.len();
        if scale.len() != n || shift.len() != n {
            return Err(PolyError::DimensionMismatch {
                expected: n,
                got: scale.len().max(shift.len()),
            });
        }
        // Per-variable powers of (scale*v + shift), built on demand:
        // powers[i][e] = (scale[i]*v_i + shift[i])^e.
        let mut powers: Vec<Vec<Polynomial>> = (0..n)
            .map(|_| vec![Polynomial::constant(self.vars.clone(), 1.0)])
            .collect();
        let linear: Vec<Polynomial> = (0..n)
            .map(|i| {
                let v = Polynomial::variable(self.vars.clone(), i).checked_scale(scale[i]);
                v.checked_add(&Polynomial::constant(self.vars.clone(), shift[i]))
                    .expect("same variable list")
            })
            .collect();
        let mut out = Polynomial::zero(self.vars.clone());
        for (m, &c) in &self.terms {
            let mut term = Polynomial::constant(self.vars.clone(), c);
            for (i, &e) in m.exps().iter().enumerate() {
                while powers[i].len() <= e as usize {
                    let next = powers[i]
                        .last()
                        .unwrap()
                        .checked_mul(&linear[i])
                        .expect("same variable list");
                    powers[i].push(next);
                }
                term = term.checked_mul(&powers[i][e as usize])?;
            }
            out = out.checked_add(&term)?;
        }
        Ok(out)
    }

    /// Partial derivative with respect to variable `i`.
    ///
    /// # Panics
    /// If `i` is out of range.
    #[must_use]
    pub fn partial_derivative(&self, i: usize) -> Polynomial {
        assert!(i < self.vars.len(), "variable index {i} out of range");
        let mut terms = BTreeMap::new();
        for (m, &c) in &self.terms {
            let e = m.exps()[i];
            if e == 0 {
                continue;
            }
            let mut exps = m.exps().to_vec();
            exps[i] -= 1;
            let coef = c * e as f64;
            if coef.abs() >= COEF_EPSILON {
                terms.insert(Monomial::new(exps), coef);
            }
        }
        Polynomial { vars: self.vars.clone(), terms }
    }

    /// The quadratic form `⟨u, ∇²p(v) u⟩` over the extended variable list
    /// `(v_1..v_n, u_1..u_n)`, with auxiliary variables named `u1..un`.
    /// Fails if any auxiliary name collides with an existing variable.
    pub fn hessian_quadratic_form(&self) -> Result<Polynomial, PolyError> {
        let n = self.vars.len();
        let u_names: Vec<String> = (1..=n).map(|i| format!("u{i}")).collect();
        for name in &u_names {
            if self.vars.iter().any(|v| v == name) {
                return Err(PolyError::VariableCollision { name: name.clone() });
            }
        }
        let ext: Vars = self
            .vars
            .iter()
            .cloned()
            .chain(u_names)
            .collect();
        let mut out = Polynomial::zero(ext.clone());
        for i in 0..n {
            let di = self.partial_derivative(i);
            for j in 0..n {
                let dij = di.partial_derivative(j);
                if dij.is_zero() {
                    continue;
                }
                let lifted = dij.embed(&ext)?;
                let ui = Polynomial::variable(ext.clone(), n + i);
                let uj = Polynomial::variable(ext.clone(), n + j);
                out = out.checked_add(&lifted.checked_mul(&ui)?.checked_mul(&uj)?)?;
            }
        }
        Ok(out)
    }

    /// Re-expresses the polynomial over a larger variable list by matching
    /// variable names. Every variable of `self` must occur in `target`.
    pub fn embed(&self, target: &Vars) -> Result<Polynomial, PolyError> {
        if *target == self.vars {
            return Ok(self.clone());
        }
        let mapping: Vec<usize> = self
            .vars
            .iter()
            .map(|name| {
                target
                    .iter()
                    .position(|t| t == name)
                    .ok_or_else(|| PolyError::MissingVariable { name: name.clone() })
            })
            .collect::<Result<_, _>>()?;
        let mut terms = BTreeMap::new();
        for (m, &c) in &self.terms {
            let mut exps = vec![0u32; target.len()];
            for (src, &dst) in mapping.iter().enumerate() {
                exps[dst] = m.exps()[src];
            }
            terms.insert(Monomial::new(exps), c);
        }
        Ok(Polynomial { vars: target.clone(), terms })
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &e) in m.exps().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                write!(f, "*{}", self.vars[i])?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON encoding
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exps: Vec<u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    vars: Vec<String>,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = PolynomialRepr {
            vars: self.vars.to_vec(),
            terms: self
                .terms
                .iter()
                .map(|(m, &c)| TermRepr { exps: m.exps().to_vec(), coef: c })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PolynomialRepr::deserialize(deserializer)?;
        let vars: Vars = repr.vars.into_iter().collect();
        Polynomial::from_terms(
            vars,
            repr.terms.into_iter().map(|t| (Monomial::new(t.exps), t.coef)),
        )
        .map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// PolyMatrix
// ---------------------------------------------------------------------------

/// A symmetric matrix with polynomial entries, stored row-major. Symmetry is
/// validated on construction (exact coefficient equality, not tolerance-based:
/// callers should build the upper triangle and mirror it).
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(into = "Vec<Vec<Polynomial>>")]
pub struct PolyMatrix {
    vars: Vars,
    dim: usize,
    entries: Vec<Polynomial>,
}

impl PolyMatrix {
    pub fn new(rows: Vec<Vec<Polynomial>>) -> Result<Self, PolyError> {
        let dim = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(PolyError::NotSquare { row: i, got: row.len(), expected: dim });
            }
        }
        let vars = rows
            .first()
            .and_then(|r| r.first())
            .map(|p| p.vars().clone())
            .unwrap_or_else(|| vars(&[]));
        for row in &rows {
            for p in row {
                if *p.vars() != vars {
                    return Err(PolyError::VarMismatch {
                        left: var_list_string(&vars),
                        right: var_list_string(p.vars()),
                    });
                }
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if rows[i][j] != rows[j][i] {
                    return Err(PolyError::NotSymmetric { i, j });
                }
            }
        }
        Ok(PolyMatrix {
            vars,
            dim,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn entry(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[i * self.dim + j]
    }

    /// Evaluates every entry at a point; returns the symmetric matrix
    /// row-major.
    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.entries.iter().map(|p| p.evaluate(point)).collect()
    }

    /// The scalar quadratic form `⟨w, A(v) w⟩` over the extended variable
    /// list `(v..., w_names...)`. Fails on name collisions.
    pub fn quadratic_form(&self, w_names: &[String]) -> Result<Polynomial, PolyError> {
        assert_eq!(w_names.len(), self.dim, "need one auxiliary name per matrix row");
        for name in w_names {
            if self.vars.iter().any(|v| v == name) {
                return Err(PolyError::VariableCollision { name: name.clone() });
            }
        }
        let ext: Vars = self
            .vars
            .iter()
            .cloned()
            .chain(w_names.iter().cloned())
            .collect();
        let base = self.vars.len();
        let mut out = Polynomial::zero(ext.clone());
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.entry(i, j);
                if a.is_zero() {
                    continue;
                }
                let wi = Polynomial::variable(ext.clone(), base + i);
                let wj = Polynomial::variable(ext.clone(), base + j);
                out = out.checked_add(&a.embed(&ext)?.checked_mul(&wi)?.checked_mul(&wj)?)?;
            }
        }
        Ok(out)
    }
}

impl From<PolyMatrix> for Vec<Vec<Polynomial>> {
    fn from(m: PolyMatrix) -> Self {
        (0..m.dim)
            .map(|i| (0..m.dim).map(|j| m.entry(i, j).clone()).collect())
            .collect()
    }
}

impl<'de> Deserialize<'de> for PolyMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<Polynomial>>::deserialize(deserializer)?;
        PolyMatrix::new(rows).map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
