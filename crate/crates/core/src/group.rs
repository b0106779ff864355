//! The state group `G = SE(2) × S¹` and its universal cover.
//!
//! Group law: `(θ₁, v₁, φ₁)(θ₂, v₂, φ₂) = (θ₁ + θ₂, v₁ + R(θ₁)v₂, φ₁ + φ₂)`.
//! [`GroupElement`] keeps both angles in `[0, 2π)`; [`CoverElement`] keeps them
//! unwrapped, which is where flows and automorphisms with real parameters live.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::algebra::{check_twisted_commutation, AlgebraElement, Sign};
use crate::error::{LcsError, Result};
use crate::linalg::{j_matrix, rotation};

/// Below this `|α|` the coefficients of `V(α)` come from their Taylor series.
const V_SERIES_CUTOFF: f64 = 1e-4;

/// Canonical representative in `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid may round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Representative in `(-π, π]`.
pub fn principal_angle(x: f64) -> f64 {
    let r = wrap_angle(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    principal_angle(a - b).abs()
}

/// Common interface of `G` and its cover.
pub trait GroupLaw: Sized + Copy {
    fn identity() -> Self;
    fn multiply(&self, other: &Self) -> Self;
    fn inverse(&self) -> Self;
}

/// Point `(θ, v, φ)` of the universal cover `R × R² × R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverElement {
    pub theta: f64,
    pub v: Vector2<f64>,
    pub phi: f64,
}

impl CoverElement {
    pub const IDENTITY: Self = Self {
        theta: 0.0,
        v: Vector2::new(0.0, 0.0),
        phi: 0.0,
    };

    pub const fn new(theta: f64, vx: f64, vy: f64, phi: f64) -> Self {
        Self {
            theta,
            v: Vector2::new(vx, vy),
            phi,
        }
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.theta, self.v.x, self.v.y, self.phi)
    }

    pub fn from_vector(x: &Vector4<f64>) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }

    /// Sup-norm distance of coordinates.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.to_vector() - other.to_vector()).amax()
    }

    pub fn project(&self) -> GroupElement {
        GroupElement::new(self.theta, self.v, self.phi)
    }
}

impl GroupLaw for CoverElement {
    fn identity() -> Self {
        Self::IDENTITY
    }

    fn multiply(&self, other: &Self) -> Self {
        Self {
            theta: self.theta + other.theta,
            v: self.v + rotation(self.theta) * other.v,
            phi: self.phi + other.phi,
        }
    }

    fn inverse(&self) -> Self {
        Self {
            theta: -self.theta,
            v: -(rotation(-self.theta) * self.v),
            phi: -self.phi,
        }
    }
}

/// Point of `G` with angles in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupElement {
    theta: f64,
    v: Vector2<f64>,
    phi: f64,
}

impl GroupElement {
    pub fn new(theta: f64, v: Vector2<f64>, phi: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
            v,
            phi: wrap_angle(phi),
        }
    }

    pub fn from_coords(theta: f64, vx: f64, vy: f64, phi: f64) -> Self {
        Self::new(theta, Vector2::new(vx, vy), phi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn v(&self) -> Vector2<f64> {
        self.v
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Canonical lift with angles in `[0, 2π)`.
    pub fn lift(&self) -> CoverElement {
        CoverElement {
            theta: self.theta,
            v: self.v,
            phi: self.phi,
        }
    }

    /// Distance that compares angles on the circle.
    pub fn distance(&self, other: &Self) -> f64 {
        angle_distance(self.theta, other.theta)
            .max((self.v - other.v).amax())
            .max(angle_distance(self.phi, other.phi))
    }
}

impl GroupLaw for GroupElement {
    fn identity() -> Self {
        Self::new(0.0, Vector2::zeros(), 0.0)
    }

    fn multiply(&self, other: &Self) -> Self {
        self.lift().multiply(&other.lift()).project()
    }

    fn inverse(&self) -> Self {
        self.lift().inverse().project()
    }
}

pub fn multiply<G: GroupLaw>(g1: &G, g2: &G) -> G {
    g1.multiply(g2)
}

pub fn inverse<G: GroupLaw>(g: &G) -> G {
    g.inverse()
}

pub fn project(c: &CoverElement) -> GroupElement {
    c.project()
}

pub fn lift(g: &GroupElement) -> CoverElement {
    g.lift()
}

/// Right translation along the phase fiber, `(g, φ) ↦ (g, φ + φ₁)`.
pub fn translate_phase(g: &GroupElement, phi1: f64) -> GroupElement {
    GroupElement::new(g.theta, g.v, g.phi + phi1)
}

/// Phase translation on the cover (no wrapping).
pub fn translate_phase_cover(g: &CoverElement, phi1: f64) -> CoverElement {
    CoverElement {
        phi: g.phi + phi1,
        ..*g
    }
}

/// Coefficients `(s, c)` with `V(α) = sI + cJ`, where
/// `V(α) = (sin α / α) I + ((1 − cos α) / α) J` and `V(0) = I`.
fn v_coefficients(alpha: f64) -> (f64, f64) {
    if alpha.abs() < V_SERIES_CUTOFF {
        let a2 = alpha * alpha;
        (
            1.0 - a2 / 6.0 + a2 * a2 / 120.0,
            alpha * (0.5 - a2 / 24.0 + a2 * a2 / 720.0),
        )
    } else {
        (alpha.sin() / alpha, (1.0 - alpha.cos()) / alpha)
    }
}

/// The matrix `V(α)` relating translational coordinates of `exp` to the algebra.
pub fn v_matrix(alpha: f64) -> Matrix2<f64> {
    let (s, c) = v_coefficients(alpha);
    Matrix2::new(s, -c, c, s)
}

/// Exponential into the cover.
pub fn exp_cover(x: &AlgebraElement) -> CoverElement {
    CoverElement {
        theta: x.alpha,
        v: v_matrix(x.alpha) * x.eta,
        phi: x.beta,
    }
}

/// Exponential into `G`.
pub fn exp_map(x: &AlgebraElement) -> GroupElement {
    exp_cover(x).project()
}

/// Principal logarithm: angles taken in `(-π, π]`.
pub fn log_map(g: &GroupElement) -> AlgebraElement {
    let theta = principal_angle(g.theta);
    let (s, c) = v_coefficients(theta);
    // V = sI + cJ is invertible off 2πZ \ {0}; its inverse is (sI - cJ)/(s² + c²)
    let inv = Matrix2::new(s, c, -c, s) / (s * s + c * c);
    AlgebraElement {
        alpha: theta,
        eta: inv * g.v,
        beta: principal_angle(g.phi),
    }
}

/// Automorphism `((θ, v), φ) ↦ ((±θ, Pv + (I − R(±θ))Jη), tφ + aθ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupAutomorphism {
    sign: Sign,
    p: Matrix2<f64>,
    eta: Vector2<f64>,
    a: f64,
    t: f64,
}

impl GroupAutomorphism {
    pub fn new(sign: Sign, p: Matrix2<f64>, eta: Vector2<f64>, a: f64, t: f64) -> Result<Self> {
        check_twisted_commutation(sign, &p)?;
        if p.determinant().abs() <= 1e-12 {
            return Err(LcsError::InvalidAutomorphism("P is singular".into()));
        }
        Ok(Self { sign, p, eta, a, t })
    }

    pub fn identity() -> Self {
        Self {
            sign: Sign::Plus,
            p: Matrix2::identity(),
            eta: Vector2::zeros(),
            a: 0.0,
            t: 1.0,
        }
    }

    pub fn apply(&self, g: &CoverElement) -> CoverElement {
        let theta = self.sign.value() * g.theta;
        let shift = (Matrix2::identity() - rotation(theta)) * j_matrix() * self.eta;
        CoverElement {
            theta,
            v: self.p * g.v + shift,
            phi: self.t * g.phi + self.a * g.theta,
        }
    }

    /// Application on `G` itself, defined only for integer `a` and `t`.
    pub fn apply_on_group(&self, g: &GroupElement) -> Result<GroupElement> {
        if self.a.fract() != 0.0 || self.t.fract() != 0.0 {
            return Err(LcsError::NonIntegerAutomorphism {
                a: self.a,
                t: self.t,
            });
        }
        Ok(self.apply(&g.lift()).project())
    }
}

pub fn apply_group_automorphism(f: &GroupAutomorphism, g: &CoverElement) -> CoverElement {
    f.apply(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &GroupElement, b: &GroupElement, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn wrap_edges() {
        assert_eq!(wrap_angle(TAU), 0.0);
        assert_eq!(wrap_angle(-1e-300), 0.0);
        assert!((wrap_angle(-FRAC_PI_2) - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert_eq!(principal_angle(PI), PI);
        assert!((principal_angle(-PI) - PI).abs() < 1e-15);
    }

    #[test]
    fn multiply_examples() {
        let g = GroupElement::from_coords(1.0, 2.0, -3.0, 4.0);
        assert_eq!(GroupElement::identity().multiply(&g), g);
        let a = GroupElement::from_coords(FRAC_PI_2, 1.0, 0.0, 0.0);
        let b = GroupElement::from_coords(0.0, 1.0, 0.0, 0.0);
        assert!(close(
            &a.multiply(&b),
            &GroupElement::from_coords(FRAC_PI_2, 1.0, 1.0, 0.0),
            1e-15
        ));
        let c = GroupElement::from_coords(3.0 * FRAC_PI_2, 0.0, 0.0, PI);
        let d = GroupElement::from_coords(3.0 * FRAC_PI_2, 0.0, 0.0, 3.0 * FRAC_PI_2);
        let cd = c.multiply(&d);
        assert!((cd.theta() - PI).abs() < 1e-12);
        assert!((cd.phi() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(GroupElement::identity().inverse(), GroupElement::identity());
        let g = GroupElement::from_coords(FRAC_PI_2, 1.0, 0.0, 0.0);
        let expected = GroupElement::from_coords(3.0 * FRAC_PI_2, 0.0, 1.0, 0.0);
        assert!(close(&g.inverse(), &expected, 1e-15));
        assert!(close(
            &g.inverse().multiply(&g),
            &GroupElement::identity(),
            1e-15
        ));
    }

    #[test]
    fn exp_examples() {
        let x = AlgebraElement::new(0.0, 3.0, 4.0, 0.0);
        assert_eq!(exp_cover(&x), CoverElement::new(0.0, 3.0, 4.0, 0.0));
        let y = exp_map(&AlgebraElement::new(PI, 1.0, 0.0, 1.0));
        assert!(close(
            &y,
            &GroupElement::from_coords(PI, 0.0, 2.0 / PI, 1.0),
            1e-15
        ));
        let z = exp_cover(&AlgebraElement::new(TAU, 1.0, 0.0, 0.0));
        assert!(z.distance(&CoverElement::new(TAU, 0.0, 0.0, 0.0)) < 1e-15);
    }

    #[test]
    fn v_series_matches_closed_form_at_cutoff() {
        let a = V_SERIES_CUTOFF * 0.999999;
        let (s, c) = (a.sin() / a, (1.0 - a.cos()) / a);
        let (ss, cs) = v_coefficients(a);
        assert!((s - ss).abs() < 1e-12 && (c - cs).abs() < 1e-11);
    }

    #[test]
    fn log_examples() {
        assert_eq!(log_map(&GroupElement::identity()), AlgebraElement::ZERO);
        let x = log_map(&GroupElement::from_coords(PI, 0.0, 2.0 / PI, 1.0));
        assert!((x - AlgebraElement::new(PI, 1.0, 0.0, 1.0)).max_abs() < 1e-14);
        let y = log_map(&GroupElement::from_coords(0.0, 5.0, -2.0, 0.0));
        assert_eq!(y, AlgebraElement::new(0.0, 5.0, -2.0, 0.0));
    }

    #[test]
    fn translate_phase_examples() {
        let g = GroupElement::from_coords(1.0, 2.0, 3.0, FRAC_PI_2);
        assert_eq!(translate_phase(&g, 0.0), g);
        let h = translate_phase(&g, 3.0 * FRAC_PI_2);
        assert_eq!(h.phi(), 0.0);
        assert_eq!(h.theta(), g.theta());
        let lhs = translate_phase(&translate_phase(&g, 1.3), 2.9);
        assert!(close(&lhs, &translate_phase(&g, 4.2), 1e-14));
    }

    #[test]
    fn project_lift_examples() {
        let g = GroupElement::from_coords(5.0, -1.0, 2.0, 0.25);
        assert_eq!(g.lift().project(), g);
        let c = CoverElement::new(TAU + 0.5, 1.0, 1.0, -FRAC_PI_2);
        let p = c.project();
        assert!((p.theta() - 0.5).abs() < 1e-15);
        assert!((p.phi() - 3.0 * FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn automorphism_examples() {
        let g = CoverElement::new(0.7, -1.0, 2.0, 3.0);
        assert_eq!(GroupAutomorphism::identity().apply(&g), g);
        let f = GroupAutomorphism::new(Sign::Plus, Matrix2::identity(), Vector2::zeros(), 1.0, 1.0)
            .unwrap();
        let h = f.apply(&CoverElement::new(PI, 0.0, 0.0, 0.0));
        assert_eq!(h, CoverElement::new(PI, 0.0, 0.0, PI));
    }

    #[test]
    fn group_level_automorphism_requires_integers() {
        let g = GroupElement::from_coords(1.0, 0.0, 0.0, 2.0);
        let ok =
            GroupAutomorphism::new(Sign::Plus, Matrix2::identity(), Vector2::zeros(), 2.0, -1.0)
                .unwrap();
        assert!(ok.apply_on_group(&g).is_ok());
        let bad =
            GroupAutomorphism::new(Sign::Plus, Matrix2::identity(), Vector2::zeros(), 0.5, 1.0)
                .unwrap();
        assert!(matches!(
            bad.apply_on_group(&g),
            Err(LcsError::NonIntegerAutomorphism { .. })
        ));
    }

    #[test]
    fn reflection_automorphism_is_homomorphism() {
        let p = Matrix2::new(0.0, 1.5, 1.5, 0.0);
        let f = GroupAutomorphism::new(Sign::Minus, p, Vector2::new(0.4, -0.8), 0.3, 2.0).unwrap();
        let g1 = CoverElement::new(1.1, 0.5, -2.0, 0.3);
        let g2 = CoverElement::new(-2.7, 1.5, 0.25, -1.0);
        let lhs = f.apply(&g1.multiply(&g2));
        let rhs = f.apply(&g1).multiply(&f.apply(&g2));
        assert!(lhs.distance(&rhs) < 1e-12);
    }
}
