//! Problem-file ingestion: the `quantset-problem/1` JSON schema and its
//! conversion into an engine [`ProblemSpec`].
//!
//! A problem file fixes the whole instance: variable counts, the parameter
//! box, the fiber description (constraints plus the ball bound `y_bound`),
//! the objective, and the declared mode. Example:
//!
//! ```json
//! {
//!   "schema": "quantset-problem/1",
//!   "n": 1,
//!   "m": 1,
//!   "box": {"lower": [-1.0], "upper": [1.0]},
//!   "y_bound": 1.0,
//!   "constraints": [
//!     {"poly": [{"exps": [0, 0], "coef": 1.0},
//!               {"exps": [0, 2], "coef": -1.0}],
//!      "kind": "ineq"}
//!   ],
//!   "objective": {"scalar": [{"exps": [1, 0], "coef": 1.0}]},
//!   "mode": "inner"
//! }
//! ```
//!
//! Polynomials inside a problem file are terms-only lists over the implied
//! joint variables `x1..xn, y1..ym` (see [`crate::polyjson`]). Unknown keys
//! are rejected everywhere, and schema errors carry the offending
//! field/line so a typo fails fast before any computation starts.

use anyhow::{bail, Context};
use quantset::engine::{Constraint, Mode, Objective, ProblemSpec};
use quantset::measures::BoxDomain;
use quantset::poly::{joint_vars, PolyMatrix, Polynomial, Vars};
use serde::Deserialize;
use std::path::Path;

use crate::polyjson::{terms_to_polynomial, TermJson};

/// The schema tag every problem file must carry.
pub const SCHEMA: &str = "quantset-problem/1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "box")]
    pub box_bounds: BoxJson,
    pub y_bound: f64,
    #[serde(default)]
    pub constraints: Vec<ConstraintJson>,
    pub objective: ObjectiveJson,
    pub mode: ModeJson,
    #[serde(default)]
    pub union_pieces: Option<Vec<Vec<ConstraintJson>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxJson {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintJson {
    pub poly: Vec<TermJson>,
    pub kind: KindJson,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindJson {
    Ineq,
    Eq,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveJson {
    /// `{"scalar": [terms]}`
    Scalar(Vec<TermJson>),
    /// `{"pmi": [[row], [row], ...]}` — a symmetric matrix of term lists.
    Pmi(Vec<Vec<Vec<TermJson>>>),
    /// `{"min_of": [terms, terms]}`
    MinOf([Vec<TermJson>; 2]),
    /// `{"max_of": [terms, ...]}`
    MaxOf(Vec<Vec<TermJson>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeJson {
    Inner,
    Outer,
}

impl From<ModeJson> for Mode {
    fn from(mode: ModeJson) -> Mode {
        match mode {
            ModeJson::Inner => Mode::Inner,
            ModeJson::Outer => Mode::Outer,
        }
    }
}

impl ProblemFile {
    /// Parses and schema-checks a problem file; nothing is computed yet.
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading problem file {}", path.display()))?;
        let file: ProblemFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing problem file {}", path.display()))?;
        if file.schema != SCHEMA {
            bail!(
                "problem file {} declares schema {:?}, expected {:?}",
                path.display(),
                file.schema,
                SCHEMA
            );
        }
        Ok(file)
    }

    /// Converts the parsed file into a validated engine spec.
    pub fn to_spec(&self) -> anyhow::Result<ProblemSpec> {
        let over = joint_vars(self.n, self.m);
        let poly = |terms: &[TermJson], place: &str| -> anyhow::Result<Polynomial> {
            terms_to_polynomial(terms, Vars::clone(&over))
                .with_context(|| format!("invalid polynomial at {place}"))
        };
        let constraint_list = |list: &[ConstraintJson], place: &str| {
            list.iter()
                .enumerate()
                .map(|(j, c)| {
                    let p = poly(&c.poly, &format!("{place}[{j}].poly"))?;
                    Ok(match c.kind {
                        KindJson::Ineq => Constraint::ineq(p),
                        KindJson::Eq => Constraint::eq(p),
                    })
                })
                .collect::<anyhow::Result<Vec<Constraint>>>()
        };

        let objective = match &self.objective {
            ObjectiveJson::Scalar(terms) => Objective::Scalar(poly(terms, "objective.scalar")?),
            ObjectiveJson::Pmi(rows) => {
                let matrix = rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(j, terms)| poly(terms, &format!("objective.pmi[{i}][{j}]")))
                            .collect::<anyhow::Result<Vec<Polynomial>>>()
                    })
                    .collect::<anyhow::Result<Vec<Vec<Polynomial>>>>()?;
                Objective::Pmi(PolyMatrix::new(matrix).context("invalid objective.pmi matrix")?)
            }
            ObjectiveJson::MinOf([q1, q2]) => Objective::MinOf(
                poly(q1, "objective.min_of[0]")?,
                poly(q2, "objective.min_of[1]")?,
            ),
            ObjectiveJson::MaxOf(parts) => Objective::MaxOf(
                parts
                    .iter()
                    .enumerate()
                    .map(|(l, terms)| poly(terms, &format!("objective.max_of[{l}]")))
                    .collect::<anyhow::Result<Vec<Polynomial>>>()?,
            ),
        };
        let spec = ProblemSpec {
            n: self.n,
            m: self.m,
            x_box: BoxDomain::new(self.box_bounds.lower.clone(), self.box_bounds.upper.clone())
                .context("invalid box")?,
            y_bound: self.y_bound,
            constraints: constraint_list(&self.constraints, "constraints")?,
            objective,
            mode: self.mode.into(),
            union_pieces: match &self.union_pieces {
                Some(pieces) => Some(
                    pieces
                        .iter()
                        .enumerate()
                        .map(|(i, piece)| constraint_list(piece, &format!("union_pieces[{i}]")))
                        .collect::<anyhow::Result<Vec<_>>>()?,
                ),
                None => None,
            },
        };
        spec.validate().context("problem validation failed")?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use quantset::engine::ConstraintKind;
    use std::io::Write;

    fn parse(text: &str) -> anyhow::Result<ProblemSpec> {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        ProblemFile::read(file.path())?.to_spec()
    }

    const MINIMAL: &str = r#"{
        "schema": "quantset-problem/1",
        "n": 1,
        "m": 1,
        "box": {"lower": [-1.0], "upper": [1.0]},
        "y_bound": 1.0,
        "constraints": [
            {"poly": [{"exps": [0, 0], "coef": 1.0},
                      {"exps": [0, 2], "coef": -1.0}],
             "kind": "ineq"}
        ],
        "objective": {"scalar": [{"exps": [1, 0], "coef": 1.0}]},
        "mode": "inner"
    }"#;

    #[test]
    fn minimal_file_round_trips_to_spec() {
        let spec = parse(MINIMAL).unwrap();
        assert_eq!(spec.n, 1);
        assert_eq!(spec.m, 1);
        assert_eq!(spec.mode, Mode::Inner);
        assert_eq!(spec.constraints.len(), 1);
        assert_eq!(spec.constraints[0].kind, ConstraintKind::Ineq);
        let Objective::Scalar(f) = &spec.objective else { panic!("expected scalar") };
        assert_eq!(f.degree(), 1);
    }

    #[test]
    fn missing_field_is_named() {
        let text = MINIMAL.replace("\"y_bound\": 1.0,", "");
        let err = format!("{:#}", parse(&text).unwrap_err());
        assert!(err.contains("y_bound"), "error does not name the field: {err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = MINIMAL.replacen("\"n\": 1,", "\"n\": 1, \"surprise\": 3,", 1);
        let err = format!("{:#}", parse(&text).unwrap_err());
        assert!(err.contains("surprise"), "error does not name the key: {err}");
    }

    #[test]
    fn wrong_schema_tag_is_rejected() {
        let text = MINIMAL.replace("quantset-problem/1", "quantset-problem/9");
        let err = format!("{:#}", parse(&text).unwrap_err());
        assert!(err.contains("quantset-problem/9"), "unexpected message: {err}");
    }

    #[test]
    fn exponent_arity_error_carries_field_path() {
        let text = MINIMAL.replace("{\"exps\": [1, 0], \"coef\": 1.0}", "{\"exps\": [1], \"coef\": 1.0}");
        let err = format!("{:#}", parse(&text).unwrap_err());
        assert!(err.contains("objective.scalar"), "error lacks context: {err}");
    }

    #[test]
    fn structured_objectives_parse() {
        let pmi = MINIMAL.replace(
            "{\"scalar\": [{\"exps\": [1, 0], \"coef\": 1.0}]}",
            "{\"pmi\": [[[{\"exps\": [0, 1], \"coef\": 1.0}]]]}",
        );
        let spec = parse(&pmi).unwrap();
        assert!(matches!(spec.objective, Objective::Pmi(_)));

        let min_of = MINIMAL.replace(
            "{\"scalar\": [{\"exps\": [1, 0], \"coef\": 1.0}]}",
            "{\"min_of\": [[{\"exps\": [0, 1], \"coef\": 1.0}], [{\"exps\": [0, 1], \"coef\": -1.0}]]}",
        );
        let spec = parse(&min_of).unwrap();
        assert!(matches!(spec.objective, Objective::MinOf(..)));

        let max_of = MINIMAL.replace(
            "{\"scalar\": [{\"exps\": [1, 0], \"coef\": 1.0}]}",
            "{\"max_of\": [[{\"exps\": [1, 0], \"coef\": 1.0}], [{\"exps\": [1, 0], \"coef\": -1.0}]]}",
        );
        let spec = parse(&max_of).unwrap();
        assert!(matches!(spec.objective, Objective::MaxOf(_)));
    }

    #[test]
    fn asymmetric_pmi_is_rejected() {
        let text = MINIMAL.replace(
            "{\"scalar\": [{\"exps\": [1, 0], \"coef\": 1.0}]}",
            concat!(
                "{\"pmi\": [[[{\"exps\": [0, 0], \"coef\": 1.0}], [{\"exps\": [1, 0], \"coef\": 1.0}]],",
                " [[{\"exps\": [0, 1], \"coef\": 1.0}], [{\"exps\": [0, 0], \"coef\": 1.0}]]]}"
            ),
        );
        let err = format!("{:#}", parse(&text).unwrap_err());
        assert!(err.contains("objective.pmi"), "unexpected message: {err}");
    }
}
