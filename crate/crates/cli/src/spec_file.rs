//! JSON system description.
//!
//! ```json
//! {"xi": [1, 0], "A": {"p": 0, "q": 1}, "a": 1,
//!  "Y": {"alpha": 1, "eta": [1, 0], "beta": 0}, "omega": [-1, 1]}
//! ```
//!
//! `A` may also be a row-major 2×2 matrix `[[a11, a12], [a21, a22]]`.

use std::fmt;
use std::path::Path;

use lie_lcs::{CommutingMatrix, ControlSystem, InvariantField, LinearField};
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ABlock {
    Coefficients { p: f64, q: f64 },
    Matrix([[f64; 2]; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlFieldSpec {
    pub alpha: f64,
    pub eta: [f64; 2],
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub xi: [f64; 2],
    #[serde(rename = "A")]
    pub a_block: ABlock,
    pub a: f64,
    #[serde(rename = "Y")]
    pub y: ControlFieldSpec,
    pub omega: [f64; 2],
}

/// Parse or validation failure, tagged with the offending field when known.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub field: Option<&'static str>,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.field {
            Some(field) => write!(f, "field `{field}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn field_error(field: &'static str, message: impl Into<String>) -> SpecError {
    SpecError {
        field: Some(field),
        message: message.into(),
    }
}

impl SystemSpec {
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let spec: Self = serde_json::from_str(text).map_err(|e| SpecError {
            field: None,
            message: format!("invalid spec JSON: {e}"),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|e| SpecError {
            field: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn commuting_block(&self) -> Result<CommutingMatrix, SpecError> {
        match self.a_block {
            ABlock::Coefficients { p, q } => Ok(CommutingMatrix::new(p, q)),
            ABlock::Matrix(m) => {
                let m = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
                CommutingMatrix::from_matrix(&m).map_err(|e| field_error("A", e.to_string()))
            }
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let finite = |field, xs: &[f64]| {
            if xs.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(field_error(field, "values must be finite"))
            }
        };
        finite("xi", &self.xi)?;
        finite("a", &[self.a])?;
        finite(
            "Y",
            &[self.y.alpha, self.y.eta[0], self.y.eta[1], self.y.beta],
        )?;
        finite("omega", &self.omega)?;
        match self.a_block {
            ABlock::Coefficients { p, q } => finite("A", &[p, q])?,
            ABlock::Matrix(m) => finite("A", &[m[0][0], m[0][1], m[1][0], m[1][1]])?,
        }
        self.commuting_block()?;
        let [lo, hi] = self.omega;
        if !(lo < 0.0 && 0.0 < hi) {
            return Err(field_error(
                "omega",
                format!("[{lo}, {hi}] must satisfy omega[0] < 0 < omega[1]"),
            ));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<ControlSystem, SpecError> {
        let block = self.commuting_block()?;
        let drift = LinearField {
            xi: Vector2::new(self.xi[0], self.xi[1]),
            a_block: block,
            a: self.a,
        };
        let control = InvariantField::new(self.y.alpha, self.y.eta[0], self.y.eta[1], self.y.beta);
        ControlSystem::new(drift, control, self.omega[0], self.omega[1])
            .map_err(|e| field_error("omega", e.to_string()))
    }
}
