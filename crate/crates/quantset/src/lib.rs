//! Converging polynomial approximations of sets defined with quantifiers.
//!
//! Given a compact box `B`, a parameterized semialgebraic set
//! `K_x = {y : g_j(x, y) >= 0}`, and a polynomial `f(x, y)`, this crate
//! computes single-polynomial certificates for the two quantified sets
//!
//! * `R = {x in B : f(x, y) <= 0 for all y in K_x}` — approximated from
//!   **inside** by `{x : p_k(x) <= 0}`, and
//! * `D = {x in B : f(x, y) >= 0 for some y in K_x}` — approximated from
//!   **outside** by `{x : p_k(x) >= 0}`,
//!
//! where `p_k` is the optimal solution of a semidefinite program that forces
//! `p_k` to dominate the value function `max_y f(x, y)` through a weighted
//! sum-of-squares identity, while minimizing the integral of `p_k` over `B`.
//! Both approximations converge in `L1(B)` as the certificate degree `2k`
//! grows.
//!
//! Module layout mirrors the pipeline:
//!
//! * [`poly`] — sparse polynomials, the shared data model;
//! * [`basis`] — monomial bases, moment vectors, moment/localizing matrices;
//! * [`measures`] — box domains, Lebesgue moments, problem rescaling to the
//!   normalized box;
//! * [`conic`] — a small solver-independent SDP intermediate representation
//!   and the interior-point backend adapter;
//! * [`certify`] — assembly of the certificate programs (primal, dual,
//!   monotone and convexity add-ons, unions) and certificate extraction;
//! * [`engine`] — end-to-end drivers, problem transforms (matrix
//!   inequalities, min-objectives, intersections, two-quantifier
//!   compositions);
//! * [`oracle`] — solver-independent verification: grid value functions,
//!   rejection sampling, Monte Carlo volumes, quadrature cross-checks.

pub mod basis;
pub mod certify;
pub mod conic;
pub mod engine;
pub mod measures;
pub mod oracle;
pub mod poly;
