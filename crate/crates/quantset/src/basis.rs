//! Monomial bases and truncated moment sequences.
//!
//! A [`MonomialBasis`] enumerates all monomials of total degree at most `d`
//! over `n` variables in graded lexicographic order — the same order used by
//! [`crate::poly::Polynomial`] term iteration — so that "coefficient vector"
//! and "moment vector" have one canonical meaning everywhere. A
//! [`MomentVector`] attaches a value to each basis monomial and supports the
//! three linear-algebra primitives of the moment side of the theory:
//!
//! * the Riesz functional `L_z(p) = Σ_α p_α z_α`,
//! * moment matrices `M_d(z)(α, β) = z_{α+β}`, and
//! * localizing matrices `M_d(g z)(α, β) = Σ_γ g_γ z_{α+β+γ}`.
//!
//! Matrices are dense ([`nalgebra::DMatrix`]); the bases at play are small
//! enough (hundreds of monomials) that sparse stores would only add
//! bookkeeping. Symmetric entries are computed once and mirrored, so the
//! returned matrices are bit-identically symmetric.

use crate::poly::{Monomial, Polynomial};
use nalgebra::DMatrix;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("monomial {0} (degree {1}) is outside the basis (n={2}, max degree {3})")]
    OutsideBasis(String, u32, usize, u32),
    #[error("polynomial has {got} variables but the basis has {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error(
        "moment vector of max degree {max_degree} cannot support the requested \
         operation (needs degree {needed})"
    )]
    DegreeTooLow { max_degree: u32, needed: u32 },
}

/// `C(n + d, d)`, the number of monomials of degree at most `d` in `n`
/// variables. Saturates are not a concern at the sizes in scope.
pub fn basis_size(n_vars: usize, max_degree: u32) -> usize {
    let n = n_vars as u64;
    let d = max_degree as u64;
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 1..=d {
        num *= n + i;
        den *= i;
    }
    (num / den) as usize
}

/// All monomials of total degree `<= max_degree` over `n_vars` variables, in
/// graded lexicographic order, with constant-time index lookup.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    n_vars: usize,
    max_degree: u32,
    monomials: Arc<[Monomial]>,
    index: Arc<HashMap<Monomial, usize>>,
}

impl MonomialBasis {
    pub fn new(n_vars: usize, max_degree: u32) -> Self {
        let mut monomials = Vec::with_capacity(basis_size(n_vars, max_degree));
        let mut exps = vec![0u32; n_vars];
        enumerate_rec(n_vars, max_degree, 0, &mut exps, &mut monomials);
        monomials.sort();
        debug_assert_eq!(monomials.len(), basis_size(n_vars, max_degree));
        let index = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        MonomialBasis {
            n_vars,
            max_degree,
            monomials: monomials.into(),
            index: Arc::new(index),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &Monomial {
        &self.monomials[i]
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Index of a monomial in this basis, if it belongs to it.
    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Index lookup that reports a descriptive error for foreign monomials.
    pub fn require_index(&self, m: &Monomial) -> Result<usize, BasisError> {
        self.index_of(m).ok_or_else(|| {
            BasisError::OutsideBasis(m.to_string(), m.degree(), self.n_vars, self.max_degree)
        })
    }
}

fn enumerate_rec(
    n_vars: usize,
    budget: u32,
    pos: usize,
    exps: &mut Vec<u32>,
    out: &mut Vec<Monomial>,
) {
    if pos == n_vars {
        out.push(Monomial::new(exps.clone()));
        return;
    }
    for e in 0..=budget {
        exps[pos] = e;
        enumerate_rec(n_vars, budget - e, pos + 1, exps, out);
    }
    exps[pos] = 0;
}

/// A truncated moment (or pseudo-moment) sequence: one value per monomial of
/// a [`MonomialBasis`].
#[derive(Clone, Debug)]
pub struct MomentVector {
    basis: MonomialBasis,
    values: Vec<f64>,
}

impl MomentVector {
    /// # Panics
    /// If `values.len()` differs from `basis.len()`; the two are always
    /// constructed together.
    pub fn new(basis: MonomialBasis, values: Vec<f64>) -> Self {
        assert_eq!(
            basis.len(),
            values.len(),
            "moment vector length {} does not match basis size {}",
            values.len(),
            basis.len()
        );
        MomentVector { basis, values }
    }

    /// Builds the vector by evaluating `f` on every basis monomial.
    pub fn from_fn(basis: MonomialBasis, mut f: impl FnMut(&Monomial) -> f64) -> Self {
        let values = basis.monomials().iter().map(&mut f).collect();
        MomentVector { basis, values }
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, m: &Monomial) -> Result<f64, BasisError> {
        Ok(self.values[self.basis.require_index(m)?])
    }

    /// The Riesz functional `L_z(p) = Σ_α p_α z_α`. Every monomial of `p`
    /// must lie inside the basis.
    pub fn riesz(&self, p: &Polynomial) -> Result<f64, BasisError> {
        if p.n_vars() != self.basis.n_vars {
            return Err(BasisError::ArityMismatch {
                expected: self.basis.n_vars,
                got: p.n_vars(),
            });
        }
        let mut acc = 0.0;
        for (m, c) in p.terms() {
            acc += c * self.values[self.basis.require_index(m)?];
        }
        Ok(acc)
    }

    /// The moment matrix `M_d(z)` over the sub-basis of degree `<= d`.
    /// Requires `2d <= max_degree` of the underlying basis.
    pub fn moment_matrix(&self, d: u32) -> Result<DMatrix<f64>, BasisError> {
        if 2 * d > self.basis.max_degree {
            return Err(BasisError::DegreeTooLow {
                max_degree: self.basis.max_degree,
                needed: 2 * d,
            });
        }
        let sub = MonomialBasis::new(self.basis.n_vars, d);
        let s = sub.len();
        let mut m = DMatrix::zeros(s, s);
        for a in 0..s {
            for b in a..s {
                let prod = sub.monomial(a).mul(sub.monomial(b));
                let v = self.values[self.basis.require_index(&prod)?];
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        Ok(m)
    }

    /// The localizing matrix `M_d(g z)` with entries
    /// `Σ_γ g_γ z_{α+β+γ}`. Requires `2d + deg(g) <= max_degree`.
    pub fn localizing_matrix(&self, g: &Polynomial, d: u32) -> Result<DMatrix<f64>, BasisError> {
        if g.n_vars() != self.basis.n_vars {
            return Err(BasisError::ArityMismatch {
                expected: self.basis.n_vars,
                got: g.n_vars(),
            });
        }
        if 2 * d + g.degree() > self.basis.max_degree {
            return Err(BasisError::DegreeTooLow {
                max_degree: self.basis.max_degree,
                needed: 2 * d + g.degree(),
            });
        }
        let sub = MonomialBasis::new(self.basis.n_vars, d);
        let s = sub.len();
        let mut m = DMatrix::zeros(s, s);
        for a in 0..s {
            for b in a..s {
                let base = sub.monomial(a).mul(sub.monomial(b));
                let mut acc = 0.0;
                for (gm, gc) in g.terms() {
                    let target = base.mul(gm);
                    acc += gc * self.values[self.basis.require_index(&target)?];
                }
                m[(a, b)] = acc;
                m[(b, a)] = acc;
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{vars, Monomial, Polynomial};
    use proptest::prelude::*;

    fn poly_1d(terms: &[(u32, f64)]) -> Polynomial {
        Polynomial::from_terms(
            vars(&["x1"]),
            terms.iter().map(|&(e, c)| (Monomial::new(vec![e]), c)),
        )
        .unwrap()
    }

    /// Lebesgue moments of the normalized measure on [-1, 1]:
    /// z_a = 0 for odd a, 1/(a+1) for even a.
    fn lebesgue_1d(max_degree: u32) -> MomentVector {
        MomentVector::from_fn(MonomialBasis::new(1, max_degree), |m| {
            let a = m.exps()[0];
            if a % 2 == 1 {
                0.0
            } else {
                1.0 / (a as f64 + 1.0)
            }
        })
    }

    #[test]
    fn enumeration_sizes_match_binomial_coefficients() {
        assert_eq!(MonomialBasis::new(1, 1).len(), 2);
        assert_eq!(MonomialBasis::new(2, 2).len(), 6);
        assert_eq!(MonomialBasis::new(3, 4).len(), 35);
        assert_eq!(basis_size(4, 8), 495);
        assert_eq!(MonomialBasis::new(4, 8).len(), 495);
    }

    #[test]
    fn enumeration_order_is_graded_lex() {
        let b = MonomialBasis::new(2, 2);
        let exps: Vec<&[u32]> = b.monomials().iter().map(|m| m.exps()).collect();
        assert_eq!(
            exps,
            vec![
                &[0, 0][..],
                &[1, 0],
                &[0, 1],
                &[2, 0],
                &[1, 1],
                &[0, 2],
            ]
        );
        // Index lookup agrees with position.
        for (i, m) in b.monomials().iter().enumerate() {
            assert_eq!(b.index_of(m), Some(i));
        }
    }

    #[test]
    fn riesz_is_plain_weighted_sum() {
        let z = lebesgue_1d(4);
        // L_z(1 + 3x^2) = 1 + 3/3 = 2.
        assert_eq!(z.riesz(&poly_1d(&[(0, 1.0), (2, 3.0)])).unwrap(), 2.0);
        // Odd monomials vanish.
        assert_eq!(z.riesz(&poly_1d(&[(1, 7.0), (3, -2.0)])).unwrap(), 0.0);
        // Zero polynomial.
        assert_eq!(z.riesz(&Polynomial::zero(vars(&["x1"]))).unwrap(), 0.0);
    }

    #[test]
    fn riesz_rejects_monomials_outside_the_basis() {
        let z = lebesgue_1d(2);
        let err = z.riesz(&poly_1d(&[(3, 1.0)])).unwrap_err();
        assert!(matches!(err, BasisError::OutsideBasis(..)));
    }

    #[test]
    fn moment_matrix_of_lebesgue_measure_on_interval() {
        let z = lebesgue_1d(2);
        let m = z.moment_matrix(1).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(1, 0)], 0.0);
        assert_eq!(m[(1, 1)], 1.0 / 3.0);
    }

    #[test]
    fn moment_matrix_of_dirac_measure_is_rank_one() {
        // z_a = t^a for the Dirac measure at t.
        let t: f64 = 0.7;
        let z = MomentVector::from_fn(MonomialBasis::new(1, 4), |m| t.powi(m.exps()[0] as i32));
        let m = z.moment_matrix(2).unwrap();
        // M = v v' with v = (1, t, t^2).
        for a in 0..3 {
            for b in 0..3 {
                let want = t.powi(a as i32) * t.powi(b as i32);
                assert!((m[(a, b)] - want).abs() < 1e-15);
            }
        }
        let eig = m.symmetric_eigen();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-12 && ev[1].abs() < 1e-12 && ev[2] > 1.0);
    }

    #[test]
    fn localizing_matrix_against_hand_computation() {
        // g = 1 - x^2 on [-1, 1] with Lebesgue moments, d = 0:
        // M_0(g z) = [z_0 - z_2] = [2/3].
        let z = lebesgue_1d(2);
        let g = poly_1d(&[(0, 1.0), (2, -1.0)]);
        let m = z.localizing_matrix(&g, 0).unwrap();
        assert_eq!(m.nrows(), 1);
        assert!((m[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn localizing_with_g_equal_one_is_the_moment_matrix() {
        let z = lebesgue_1d(4);
        let one = poly_1d(&[(0, 1.0)]);
        assert_eq!(z.localizing_matrix(&one, 2).unwrap(), z.moment_matrix(2).unwrap());
    }

    #[test]
    fn moment_and_localizing_matrices_of_supported_measure_are_psd() {
        // Moments of the normalized Lebesgue measure on [-1, 1] (computed
        // exactly): both M_d(z) and M_d(g z) for g = 1 - x^2 >= 0 on the
        // support must be PSD.
        let z = lebesgue_1d(8);
        let g = poly_1d(&[(0, 1.0), (2, -1.0)]);
        let m = z.moment_matrix(4).unwrap();
        let l = z.localizing_matrix(&g, 3).unwrap();
        for mat in [m, l] {
            let min_eig = mat
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig >= -1e-9, "min eigenvalue {min_eig}");
        }
    }

    #[test]
    fn degree_guards_reject_oversized_requests() {
        let z = lebesgue_1d(2);
        assert!(matches!(z.moment_matrix(2), Err(BasisError::DegreeTooLow { .. })));
        let g = poly_1d(&[(2, 1.0)]);
        assert!(matches!(
            z.localizing_matrix(&g, 1),
            Err(BasisError::DegreeTooLow { .. })
        ));
    }

    #[test]
    fn matrices_are_bit_identically_symmetric() {
        let z = MomentVector::from_fn(MonomialBasis::new(2, 6), |m| {
            // Arbitrary deterministic values, including awkward ones.
            let e = m.exps();
            (e[0] as f64 * 0.37 + 1.0) / (e[1] as f64 * 0.11 + 3.0)
        });
        let g = Polynomial::from_terms(
            vars(&["x1", "x2"]),
            [
                (Monomial::new(vec![0, 0]), 0.3),
                (Monomial::new(vec![1, 1]), -0.7),
            ],
        )
        .unwrap();
        let m = z.moment_matrix(3).unwrap();
        let l = z.localizing_matrix(&g, 2).unwrap();
        for mat in [m, l] {
            for a in 0..mat.nrows() {
                for b in 0..mat.ncols() {
                    assert_eq!(mat[(a, b)].to_bits(), mat[(b, a)].to_bits());
                }
            }
        }
    }

    proptest! {
        #[test]
        fn riesz_is_linear(
            c1 in proptest::collection::vec(-5.0..5.0f64, 5),
            c2 in proptest::collection::vec(-5.0..5.0f64, 5),
            a in -3.0..3.0f64,
            b in -3.0..3.0f64,
        ) {
            let z = lebesgue_1d(4);
            let p = poly_1d(&c1.iter().enumerate().map(|(e, &c)| (e as u32, c)).collect::<Vec<_>>());
            let q = poly_1d(&c2.iter().enumerate().map(|(e, &c)| (e as u32, c)).collect::<Vec<_>>());
            let combo = p.checked_scale(a).checked_add(&q.checked_scale(b)).unwrap();
            let lhs = z.riesz(&combo).unwrap();
            let rhs = a * z.riesz(&p).unwrap() + b * z.riesz(&q).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
