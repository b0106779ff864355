//! Lie algebra rank condition and the control-set classifier.
//!
//! For `ġ = 𝒳(g) + uY(g)` the rank condition asks whether the smallest
//! `𝒟`-invariant subalgebra containing `Y` is all of `g`. Given the rank
//! condition, the drift block `A` decides the control-set picture:
//! `det A = 0` gives infinitely many control sets with empty interior,
//! `det A ≠ 0` a unique control set with nonempty interior, and the system is
//! controllable exactly when additionally `tr A = 0`.

use serde::{Deserialize, Serialize};

use crate::algebra::{bracket, AlgebraElement, DerivationMatrix, Subspace};
use crate::error::{LcsError, Result};
use crate::fields::{InvariantField, LinearField};

/// Zero threshold for `|tr A|/2 = |p|` and `det A = p² + q²`.
pub const DRIFT_ZERO_TOL: f64 = 1e-12;

/// Zero threshold for `a² + β²` in the analytic criterion.
pub const CENTRAL_ZERO_TOL: f64 = 1e-18;

/// Hard cap on closure rounds; each productive round adds a dimension.
const CLOSURE_CAP: usize = 8;

/// Single-input linear control system with control range `[u⁻, u⁺]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSystem {
    pub drift: LinearField,
    pub control: InvariantField,
    omega_minus: f64,
    omega_plus: f64,
}

impl ControlSystem {
    pub fn new(
        drift: LinearField,
        control: InvariantField,
        omega_minus: f64,
        omega_plus: f64,
    ) -> Result<Self> {
        if !(omega_minus < 0.0 && 0.0 < omega_plus)
            || !omega_minus.is_finite()
            || !omega_plus.is_finite()
        {
            return Err(LcsError::InvalidControlRange {
                lo: omega_minus,
                hi: omega_plus,
            });
        }
        Ok(Self {
            drift,
            control,
            omega_minus,
            omega_plus,
        })
    }

    pub fn omega(&self) -> (f64, f64) {
        (self.omega_minus, self.omega_plus)
    }

    pub fn check_control(&self, u: f64) -> Result<()> {
        if u < self.omega_minus || u > self.omega_plus || u.is_nan() {
            return Err(LcsError::ControlOutOfRange {
                u,
                lo: self.omega_minus,
                hi: self.omega_plus,
            });
        }
        Ok(())
    }

    /// The system with both fields negated; its trajectories run the original
    /// ones backwards in time.
    pub fn time_reversed(&self) -> Self {
        Self {
            drift: self.drift.negated(),
            control: self.control.scaled(-1.0),
            ..*self
        }
    }

    pub fn with_control_range(&self, omega_minus: f64, omega_plus: f64) -> Result<Self> {
        Self::new(self.drift, self.control, omega_minus, omega_plus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Category {
    NotLarc,
    EmptyInteriorControlSets,
    UniqueControlSet,
    Controllable,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::NotLarc => "NOT_LARC",
            Category::EmptyInteriorControlSets => "EMPTY_INTERIOR_CONTROL_SETS",
            Category::UniqueControlSet => "UNIQUE_CONTROL_SET",
            Category::Controllable => "CONTROLLABLE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub larc: bool,
    pub subalgebra_dim: usize,
    #[serde(rename = "det_A")]
    pub det_a: f64,
    #[serde(rename = "tr_A")]
    pub tr_a: f64,
    pub category: Category,
}

/// Result of the invariant-subalgebra closure.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSubalgebra {
    pub basis: Vec<AlgebraElement>,
    pub dim: usize,
}

/// One closure round: the span of `current`, its image under `𝒟` and all
/// pairwise brackets.
fn closure_step(d: &DerivationMatrix, current: &Subspace) -> Subspace {
    let basis = current.basis();
    let mut extra: Vec<AlgebraElement> = basis.iter().map(|x| d.apply(x)).collect();
    for (i, x) in basis.iter().enumerate() {
        for z in &basis[i + 1..] {
            extra.push(bracket(x, z));
        }
    }
    current.extended(&extra)
}

/// Smallest `𝒟`-invariant subalgebra containing `y`.
pub fn invariant_subalgebra(d: &DerivationMatrix, y: &AlgebraElement) -> InvariantSubalgebra {
    let mut current = Subspace::span(&[*y]);
    for _ in 0..CLOSURE_CAP {
        let next = closure_step(d, &current);
        if next.dim() == current.dim() {
            break;
        }
        current = next;
    }
    InvariantSubalgebra {
        dim: current.dim(),
        basis: current.basis().to_vec(),
    }
}

/// `true` iff re-applying one closure round leaves the dimension unchanged.
pub fn is_closed(d: &DerivationMatrix, sub: &InvariantSubalgebra) -> bool {
    closure_step(d, &Subspace::span(&sub.basis)).dim() == sub.dim
}

pub fn larc_holds(sys: &ControlSystem) -> bool {
    subalgebra_dim(sys) == 4
}

fn subalgebra_dim(sys: &ControlSystem) -> usize {
    invariant_subalgebra(&sys.drift.derivation(), &sys.control.as_element()).dim
}

/// Dimension of the closure for the projected `se(2)` system, obtained by
/// running the same closure with the central couplings `a`, `β` removed.
pub fn projected_subalgebra_dim(sys: &ControlSystem) -> usize {
    let mut d = sys.drift.derivation();
    d.a = 0.0;
    d.r = 0.0;
    let mut y = sys.control.as_element();
    y.beta = 0.0;
    invariant_subalgebra(&d, &y).dim
}

/// Rank condition on `G` via the `SE(2)` rank condition plus `a² + β² ≠ 0`.
pub fn larc_analytic(sys: &ControlSystem) -> bool {
    let a = sys.drift.a;
    let beta = sys.control.beta;
    projected_subalgebra_dim(sys) == 3 && a * a + beta * beta > CENTRAL_ZERO_TOL
}

/// Rank condition on `G` via the `SE(2)` rank condition plus `a ≠ 0`.
///
/// When `a = 0` every `𝒟`-image and every bracket has zero `E₄` component, so
/// the closure is at most `span{Y, E₂, E₃}` whatever `β` is. This is the test
/// that agrees with [`larc_holds`]; [`larc_analytic`] does not when `a = 0`
/// and `β ≠ 0`.
pub fn larc_from_projection(sys: &ControlSystem) -> bool {
    projected_subalgebra_dim(sys) == 3 && sys.drift.a.abs() > CENTRAL_ZERO_TOL.sqrt()
}

pub fn classify(sys: &ControlSystem) -> Verdict {
    let dim = subalgebra_dim(sys);
    let larc = dim == 4;
    let p = sys.drift.p();
    let det_a = sys.drift.a_block.det();
    let tr_a = sys.drift.a_block.trace();
    let category = if !larc {
        Category::NotLarc
    } else if det_a <= DRIFT_ZERO_TOL {
        Category::EmptyInteriorControlSets
    } else if p.abs() > DRIFT_ZERO_TOL {
        Category::UniqueControlSet
    } else {
        Category::Controllable
    };
    Verdict {
        larc,
        subalgebra_dim: dim,
        det_a,
        tr_a,
        category,
    }
}
