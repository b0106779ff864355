//! Linear and left-invariant vector fields on `G`.
//!
//! A linear field `𝒳 = (ξ, A, a)` evaluates to
//! `𝒳(θ, v, φ) = (0, Av + (I − R(θ))Jξ, aθ)` and its flow is a one-parameter
//! group of automorphisms. A left-invariant field `Y = (α, η, β)` evaluates to
//! `(α, R(θ)η, β)`. All evaluations take cover coordinates, so `aθ` uses the
//! unwrapped angle.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, CommutingMatrix, DerivationMatrix};
use crate::complex::{phi1, to_complex, to_vector};
use crate::group::CoverElement;
use crate::linalg::{j_matrix, rotation};

/// Linear vector field `(ξ, A = pI + qJ, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearField {
    pub xi: Vector2<f64>,
    pub a_block: CommutingMatrix,
    pub a: f64,
}

impl LinearField {
    pub fn new(xi: Vector2<f64>, p: f64, q: f64, a: f64) -> Self {
        Self {
            xi,
            a_block: CommutingMatrix::new(p, q),
            a,
        }
    }

    pub fn zero() -> Self {
        Self::new(Vector2::zeros(), 0.0, 0.0, 0.0)
    }

    pub fn p(&self) -> f64 {
        self.a_block.p
    }

    pub fn q(&self) -> f64 {
        self.a_block.q
    }

    /// `-𝒳`, the drift of the time-reversed system.
    pub fn negated(&self) -> Self {
        Self::new(-self.xi, -self.p(), -self.q(), -self.a)
    }

    /// `A` as the complex number `p + iq`.
    pub fn eigenvalue(&self) -> Complex64 {
        Complex64::new(self.p(), self.q())
    }

    pub fn eval(&self, g: &CoverElement) -> Vector4<f64> {
        let a = self.a_block.matrix();
        let dv = a * g.v + (Matrix2::identity() - rotation(g.theta)) * j_matrix() * self.xi;
        Vector4::new(0.0, dv.x, dv.y, self.a * g.theta)
    }

    pub fn derivation(&self) -> DerivationMatrix {
        DerivationMatrix {
            xi: self.xi,
            a_block: self.a_block,
            a: self.a,
            r: 0.0,
        }
    }

    /// Closed-form flow on the cover: `θ` is frozen,
    /// `v ↦ e^{τA}v + τφ₁(τA)(I − R(θ))Jξ` and `φ ↦ φ + aθτ`.
    pub fn flow(&self, tau: f64, g: &CoverElement) -> CoverElement {
        let c = self.eigenvalue() * tau;
        let forcing =
            to_complex(&((Matrix2::identity() - rotation(g.theta)) * j_matrix() * self.xi));
        let v = c.exp() * to_complex(&g.v) + phi1(c) * tau * forcing;
        CoverElement {
            theta: g.theta,
            v: to_vector(v),
            phi: g.phi + self.a * g.theta * tau,
        }
    }
}

/// Left-invariant vector field `(α, η, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantField {
    pub alpha: f64,
    pub eta: Vector2<f64>,
    pub beta: f64,
}

impl InvariantField {
    pub fn new(alpha: f64, eta1: f64, eta2: f64, beta: f64) -> Self {
        Self {
            alpha,
            eta: Vector2::new(eta1, eta2),
            beta,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn from_element(x: &AlgebraElement) -> Self {
        Self {
            alpha: x.alpha,
            eta: x.eta,
            beta: x.beta,
        }
    }

    pub fn as_element(&self) -> AlgebraElement {
        AlgebraElement {
            alpha: self.alpha,
            eta: self.eta,
            beta: self.beta,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            alpha: k * self.alpha,
            eta: self.eta * k,
            beta: k * self.beta,
        }
    }

    pub fn eval(&self, g: &CoverElement) -> Vector4<f64> {
        let dv = rotation(g.theta) * self.eta;
        Vector4::new(self.alpha, dv.x, dv.y, self.beta)
    }
}

pub fn eval_linear(x: &LinearField, g: &CoverElement) -> Vector4<f64> {
    x.eval(g)
}

pub fn eval_invariant(y: &InvariantField, g: &CoverElement) -> Vector4<f64> {
    y.eval(g)
}

/// Derivation `𝒟` associated with `𝒳`; the central entry `r` is always zero.
pub fn derivation_of(x: &LinearField) -> DerivationMatrix {
    x.derivation()
}

pub fn flow(x: &LinearField, tau: f64, g: &CoverElement) -> CoverElement {
    x.flow(tau, g)
}

/// Flow on `G` obtained as `project ∘ flow ∘ lift`. This is an automorphism
/// flow of `G` only when `a` is an integer.
pub fn flow_on_group(
    x: &LinearField,
    tau: f64,
    g: &crate::group::GroupElement,
) -> crate::group::GroupElement {
    x.flow(tau, &g.lift()).project()
}

/// `(dφ_t)_e = e^{t𝒟}`.
pub fn flow_differential_at_identity(x: &LinearField, t: f64) -> Matrix4<f64> {
    (x.derivation().matrix() * t).exp()
}

/// Central finite-difference Jacobian of `f` at `point`.
pub fn fd_jacobian(
    f: impl Fn(&Vector4<f64>) -> Vector4<f64>,
    point: &Vector4<f64>,
    h: f64,
) -> Matrix4<f64> {
    let mut jac = Matrix4::zeros();
    for k in 0..4 {
        let mut plus = *point;
        let mut minus = *point;
        plus[k] += h;
        minus[k] -= h;
        jac.set_column(k, &((f(&plus) - f(&minus)) / (2.0 * h)));
    }
    jac
}

/// Finite-difference bracket `[𝒳, Y](g) = (∂𝒳)Y − (∂Y)𝒳` of the two fields at `g`.
///
/// With this ordering `[𝒳, Y](e)` equals `𝒟Y`, the derivation that also
/// satisfies `(dφ_t)_e = e^{t𝒟}`.
pub fn fd_bracket(x: &LinearField, y: &InvariantField, g: &CoverElement, h: f64) -> Vector4<f64> {
    let fx = |s: &Vector4<f64>| x.eval(&CoverElement::from_vector(s));
    let fy = |s: &Vector4<f64>| y.eval(&CoverElement::from_vector(s));
    let at = g.to_vector();
    fd_jacobian(fx, &at, h) * y.eval(g) - fd_jacobian(fy, &at, h) * x.eval(g)
}
