//! Random draws of algebra elements, fields, systems and controls for the
//! property suites.

use rand::Rng;

use nalgebra::{Matrix2, Vector2};

use crate::algebra::{AlgebraAutomorphism, AlgebraElement, DerivationMatrix, Sign};
use crate::dynamics::{ControlInput, Segment};
use crate::fields::{InvariantField, LinearField};
use crate::group::{CoverElement, GroupAutomorphism};
use crate::larc::ControlSystem;
use crate::linalg::rotation;

fn sym<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    rng.random_range(-scale..=scale)
}

fn vec2<R: Rng>(rng: &mut R, scale: f64) -> Vector2<f64> {
    Vector2::new(sym(rng, scale), sym(rng, scale))
}

pub fn element<R: Rng>(rng: &mut R, scale: f64) -> AlgebraElement {
    AlgebraElement::new(
        sym(rng, scale),
        sym(rng, scale),
        sym(rng, scale),
        sym(rng, scale),
    )
}

pub fn cover_element<R: Rng>(rng: &mut R, scale: f64) -> CoverElement {
    CoverElement::new(
        sym(rng, scale),
        sym(rng, scale),
        sym(rng, scale),
        sym(rng, scale),
    )
}

pub fn derivation<R: Rng>(rng: &mut R) -> DerivationMatrix {
    DerivationMatrix::new(
        vec2(rng, 2.0),
        sym(rng, 2.0),
        sym(rng, 2.0),
        sym(rng, 2.0),
        sym(rng, 2.0),
    )
}

/// Invertible `P` with `PJ = sign·JP`: a scaled rotation, composed with a
/// reflection when the sign is negative.
fn twisted_matrix<R: Rng>(rng: &mut R, sign: Sign) -> Matrix2<f64> {
    let scale = rng.random_range(0.2..3.0);
    let rot = rotation(rng.random_range(-3.0..3.0)) * scale;
    match sign {
        Sign::Plus => rot,
        Sign::Minus => rot * Matrix2::new(1.0, 0.0, 0.0, -1.0),
    }
}

fn sign<R: Rng>(rng: &mut R) -> Sign {
    if rng.random_bool(0.5) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

fn nonzero<R: Rng>(rng: &mut R) -> f64 {
    let m = rng.random_range(0.2..3.0);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

pub fn algebra_automorphism<R: Rng>(rng: &mut R) -> AlgebraAutomorphism {
    let s = sign(rng);
    AlgebraAutomorphism::new(
        s,
        vec2(rng, 2.0),
        twisted_matrix(rng, s),
        sym(rng, 2.0),
        nonzero(rng),
    )
    .expect("sampled automorphism is valid")
}

pub fn group_automorphism<R: Rng>(rng: &mut R) -> GroupAutomorphism {
    let s = sign(rng);
    GroupAutomorphism::new(
        s,
        twisted_matrix(rng, s),
        vec2(rng, 2.0),
        sym(rng, 2.0),
        nonzero(rng),
    )
    .expect("sampled automorphism is valid")
}

pub fn linear_field<R: Rng>(rng: &mut R) -> LinearField {
    LinearField::new(vec2(rng, 1.5), sym(rng, 1.0), sym(rng, 1.5), sym(rng, 1.5))
}

pub fn invariant_field<R: Rng>(rng: &mut R) -> InvariantField {
    InvariantField::new(sym(rng, 1.5), sym(rng, 1.5), sym(rng, 1.5), sym(rng, 1.5))
}

/// Random system with control range `[-1, 1]`; each of `a = 0`, `β = 0`,
/// `ξ = 0`, `A = 0` is forced with probability `degenerate`.
pub fn system<R: Rng>(rng: &mut R, degenerate: f64) -> ControlSystem {
    let mut x = linear_field(rng);
    let mut y = invariant_field(rng);
    if rng.random_bool(degenerate) {
        x.a = 0.0;
    }
    if rng.random_bool(degenerate) {
        y.beta = 0.0;
    }
    if rng.random_bool(degenerate) {
        x.xi = Vector2::zeros();
    }
    if rng.random_bool(degenerate) {
        x = LinearField::new(x.xi, 0.0, 0.0, x.a);
    }
    ControlSystem::new(x, y, -1.0, 1.0).expect("[-1, 1] is a valid range")
}

/// Random piecewise-constant control of total duration `total` with values in
/// the system's range.
pub fn control_input<R: Rng>(
    rng: &mut R,
    sys: &ControlSystem,
    total: f64,
    pieces: usize,
) -> ControlInput {
    let (lo, hi) = sys.omega();
    let mut cuts: Vec<f64> = (1..pieces)
        .map(|_| rng.random_range(0.05..0.95) * total)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut segments = Vec::with_capacity(pieces);
    let mut prev = 0.0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        if c > prev {
            segments.push(Segment {
                duration: c - prev,
                u: rng.random_range(lo..=hi),
            });
            prev = c;
        }
    }
    ControlInput::new(segments).expect("positive durations")
}
