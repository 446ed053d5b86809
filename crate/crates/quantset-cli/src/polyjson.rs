//! JSON encoding of sparse polynomials, shared by every artifact the CLI
//! reads or writes.
//!
//! Two shapes appear on disk:
//!
//! * **Standalone** ([`PolyJson`]): `{"vars": [...], "terms": [...]}`,
//!   used by `*.poly.json` artifacts and anywhere a polynomial travels
//!   without a surrounding problem file. The variable list makes the file
//!   self-describing.
//! * **Terms-only** ([`TermJson`] list): used inside problem files, where
//!   the joint variable list is already implied by `n` and `m`.
//!
//! Each term is `{"exps": [e1, ..., ed], "coef": c}` with one exponent per
//! variable. Round-tripping through this encoding reproduces the exact
//! coefficient map: terms are written in the library's canonical monomial
//! order and coefficients survive via shortest-round-trip float printing.

use anyhow::Context;
use quantset::poly::{vars, Monomial, PolyError, Polynomial, Vars};
use serde::{Deserialize, Serialize};

/// One monomial with its coefficient.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    /// Exponent of each variable, in variable order.
    pub exps: Vec<u32>,
    pub coef: f64,
}

/// A self-describing polynomial artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyJson {
    pub vars: Vec<String>,
    pub terms: Vec<TermJson>,
}

impl PolyJson {
    #[must_use]
    pub fn from_polynomial(p: &Polynomial) -> Self {
        PolyJson {
            vars: p.vars().to_vec(),
            terms: p
                .terms()
                .map(|(m, c)| TermJson { exps: m.exps().to_vec(), coef: c })
                .collect(),
        }
    }

    pub fn to_polynomial(&self) -> Result<Polynomial, PolyError> {
        let names: Vec<&str> = self.vars.iter().map(String::as_str).collect();
        terms_to_polynomial(&self.terms, vars(&names))
    }
}

/// Builds a polynomial from a terms-only encoding over a known variable
/// list.
pub fn terms_to_polynomial(terms: &[TermJson], over: Vars) -> Result<Polynomial, PolyError> {
    Polynomial::from_terms(
        over,
        terms.iter().map(|t| (Monomial::new(t.exps.clone()), t.coef)),
    )
}

/// Reads a standalone `*.poly.json` artifact.
pub fn read_poly_file(path: &std::path::Path) -> anyhow::Result<Polynomial> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading polynomial file {}", path.display()))?;
    let encoded: PolyJson = serde_json::from_str(&text)
        .with_context(|| format!("parsing polynomial file {}", path.display()))?;
    encoded
        .to_polynomial()
        .with_context(|| format!("invalid polynomial in {}", path.display()))
}

/// Writes a standalone `*.poly.json` artifact (pretty-printed, trailing
/// newline, deterministic for a given polynomial).
pub fn write_poly_file(path: &std::path::Path, p: &Polynomial) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(&PolyJson::from_polynomial(p))?;
    text.push('\n');
    std::fs::write(path, text)
        .with_context(|| format!("writing polynomial file {}", path.display()))?;
    Ok(())
}
