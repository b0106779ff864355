//! Closed forms checked against independent numerical constructions.

use approx::assert_relative_eq;
use lie_lcs::dynamics::{rk4_discrepancy, segment_exact};
use lie_lcs::fields::flow_differential_at_identity;
use lie_lcs::group::exp_cover;
use lie_lcs::linalg::rotation;
use lie_lcs::{
    AlgebraElement, ControlInput, ControlSystem, CoverElement, InvariantField, LinearField,
};
use nalgebra::{Matrix2, Matrix3, Matrix4, Vector2, Vector4};

fn taylor_exp(m: &Matrix4<f64>) -> Matrix4<f64> {
    let mut term = Matrix4::identity();
    let mut sum = Matrix4::identity();
    for k in 1..60 {
        term = term * m / k as f64;
        sum += term;
    }
    sum
}

fn fields() -> Vec<LinearField> {
    vec![
        LinearField::new(Vector2::new(1.0, 0.0), 0.0, 1.0, 1.0),
        LinearField::new(Vector2::new(-0.4, 1.2), 0.7, -1.3, 0.5),
        LinearField::new(Vector2::new(0.3, 0.3), -1.1, 0.0, -2.0),
        LinearField::new(Vector2::zeros(), 0.0, 0.0, 0.0),
        LinearField::new(Vector2::new(2.0, -1.0), 1e-7, 1e-7, 1.0),
    ]
}

#[test]
fn flow_differential_matches_taylor_series() {
    for x in fields() {
        for t in [-1.3, 0.2, 1.0, 2.5] {
            let series = taylor_exp(&(x.derivation().matrix() * t));
            let got = flow_differential_at_identity(&x, t);
            assert_relative_eq!(got, series, epsilon = 1e-10, max_relative = 1e-10);
        }
    }
}

/// `∫₀^τ e^{sA} w ds` by composite Simpson on the explicit `e^{sA} = e^{sp}R(sq)`.
fn simpson_forcing(x: &LinearField, tau: f64, w: &Vector2<f64>) -> Vector2<f64> {
    let n = 2000;
    let h = tau / n as f64;
    let f = |s: f64| (s * x.p()).exp() * rotation(s * x.q()) * w;
    let mut acc = f(0.0) + f(tau);
    for k in 1..n {
        acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn flow_matches_quadrature() {
    let j = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    for x in fields() {
        for g in [
            CoverElement::new(0.9, 0.5, -1.0, 0.3),
            CoverElement::new(-2.2, 0.0, 0.4, 5.0),
            CoverElement::new(7.0, -1.0, -1.0, -1.0),
        ] {
            let tau = 1.7;
            let out = x.flow(tau, &g);
            let w = (Matrix2::identity() - rotation(g.theta)) * j * x.xi;
            let homogeneous = (tau * x.p()).exp() * rotation(tau * x.q()) * g.v;
            let v = homogeneous + simpson_forcing(&x, tau, &w);
            assert_eq!(out.theta, g.theta);
            assert_relative_eq!(out.v, v, epsilon = 1e-11, max_relative = 1e-11);
            assert_relative_eq!(out.phi, g.phi + x.a * g.theta * tau, epsilon = 1e-12);
        }
    }
}

#[test]
fn exponential_matches_homogeneous_matrix_exponential() {
    for (alpha, eta, beta) in [
        (0.8, [1.0, -0.5], 0.3),
        (-2.9, [0.2, 0.7], -1.0),
        (1e-6, [3.0, 1.0], 0.0),
        (0.0, [1.0, 2.0], 4.0),
        (6.0, [-1.0, 0.5], 1.0),
    ] {
        let g = exp_cover(&AlgebraElement::new(alpha, eta[0], eta[1], beta));
        let m = Matrix3::new(0.0, -alpha, eta[0], alpha, 0.0, eta[1], 0.0, 0.0, 0.0).exp();
        assert_relative_eq!(g.theta, alpha);
        assert_relative_eq!(
            g.v,
            Vector2::new(m[(0, 2)], m[(1, 2)]),
            epsilon = 1e-12,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            rotation(g.theta),
            m.fixed_view::<2, 2>(0, 0).into_owned(),
            epsilon = 1e-12
        );
        assert_eq!(g.phi, beta);
    }
}

fn rhs(sys: &ControlSystem, u: f64, x: &Vector4<f64>) -> Vector4<f64> {
    let g = CoverElement::from_vector(x);
    sys.drift.eval(&g) + sys.control.eval(&g) * u
}

/// Reference RK4 written out here, independent of the crate's integrator.
fn reference_rk4(sys: &ControlSystem, u: f64, t: f64, s0: &CoverElement, n: usize) -> CoverElement {
    let h = t / n as f64;
    let mut x = s0.to_vector();
    for _ in 0..n {
        let k1 = rhs(sys, u, &x);
        let k2 = rhs(sys, u, &(x + k1 * (h / 2.0)));
        let k3 = rhs(sys, u, &(x + k2 * (h / 2.0)));
        let k4 = rhs(sys, u, &(x + k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    CoverElement::from_vector(&x)
}

fn resonant(detuning: f64) -> (ControlSystem, f64) {
    let alpha = 1.3;
    let u = 0.6;
    let sys = ControlSystem::new(
        LinearField::new(Vector2::new(0.4, -0.8), 0.0, u * alpha + detuning, 0.7),
        InvariantField::new(alpha, 0.9, -0.3, 0.5),
        -1.0,
        1.0,
    )
    .unwrap();
    (sys, u)
}

#[test]
fn resonant_segments_match_reference_integration() {
    let s0 = CoverElement::new(0.3, 0.2, -0.1, 0.0);
    for detuning in [0.0, 1e-9, -1e-9, 1e-6, -1e-6] {
        let (sys, u) = resonant(detuning);
        let exact = segment_exact(&sys, u, 5.0, &s0).unwrap();
        let reference = reference_rk4(&sys, u, 5.0, &s0, 20_000);
        assert!(
            exact.distance(&reference) < 1e-11,
            "detuning {detuning}: {}",
            exact.distance(&reference)
        );
        let gap =
            rk4_discrepancy(&sys, &ControlInput::constant(u, 5.0).unwrap(), &s0, 1e-3).unwrap();
        assert!(gap < 1e-8, "detuning {detuning}: {gap}");
    }
}

#[test]
fn resonant_limit_is_continuous() {
    let s0 = CoverElement::new(0.3, 0.2, -0.1, 0.0);
    let at = |d| {
        let (sys, u) = resonant(d);
        segment_exact(&sys, u, 5.0, &s0).unwrap()
    };
    let exact = at(0.0);
    assert!(exact.distance(&at(1e-9)) < 1e-7);
    assert!(exact.distance(&at(1e-6)) < 1e-4);
}

#[test]
fn rk4_has_fourth_order() {
    let (sys, u) = resonant(0.2);
    let input = ControlInput::constant(u, 5.0).unwrap();
    let s0 = CoverElement::new(0.3, 0.2, -0.1, 0.0);
    let ratio = rk4_discrepancy(&sys, &input, &s0, 0.05).unwrap()
        / rk4_discrepancy(&sys, &input, &s0, 0.025).unwrap();
    assert!((12.0..=20.0).contains(&ratio), "{ratio}");
}
