//! Complex-scalar kernels for the planar linear dynamics: `v ∈ R²` is a complex
//! number, `A = pI + qJ` acts as multiplication by `p + iq` and `R(θ)` as `e^{iθ}`.

use nalgebra::Vector2;
use num_complex::Complex64;

/// Below this modulus `φ₁(z)` is evaluated from its Taylor series.
const PHI1_SERIES_CUTOFF: f64 = 1e-4;

pub fn to_complex(v: &Vector2<f64>) -> Complex64 {
    Complex64::new(v.x, v.y)
}

pub fn to_vector(z: Complex64) -> Vector2<f64> {
    Vector2::new(z.re, z.im)
}

/// `e^z - 1` without cancellation for small `|z|`.
pub fn expm1(z: Complex64) -> Complex64 {
    let half_sin = (0.5 * z.im).sin();
    let (s, c) = z.im.sin_cos();
    Complex64::new(
        z.re.exp_m1() * c - 2.0 * half_sin * half_sin,
        z.re.exp() * s,
    )
}

/// `φ₁(z) = (e^z - 1)/z = Σ_{k≥0} z^k/(k+1)!`.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < PHI1_SERIES_CUTOFF {
        phi1_series(z)
    } else {
        expm1(z) / z
    }
}

/// Five-term Taylor expansion of `φ₁`.
pub fn phi1_series(z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    one + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1_matches_exp_for_large_arguments() {
        for z in [
            Complex64::new(1.0, 2.0),
            Complex64::new(-3.0, 0.5),
            Complex64::new(0.0, 7.0),
        ] {
            assert!((expm1(z) - (z.exp() - 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn expm1_keeps_relative_accuracy_near_zero() {
        let z = Complex64::new(1e-12, -2e-12);
        let rel = (expm1(z) - z * (1.0 + z * 0.5)).norm() / z.norm();
        assert!(rel < 1e-15);
    }

    #[test]
    fn phi1_is_continuous_at_series_switch() {
        let dir = Complex64::new(0.6, 0.8);
        let z = dir * (PHI1_SERIES_CUTOFF * 0.9999999);
        assert!((phi1(z) - expm1(z) / z).norm() < 1e-12);
        assert_eq!(phi1(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
    }
}
