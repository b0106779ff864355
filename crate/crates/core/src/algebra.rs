//! The Lie algebra `g = se(2) ⊕ RE₄` in the basis `(E₁, E₂, E₃, E₄)`.
//!
//! `E₁` generates rotations, `E₂, E₃` translations and `E₄` spans the center.
//! The only non-zero brackets are `[E₁, E₂] = E₃` and `[E₁, E₃] = -E₂`, so in
//! coordinates `(α, η, β)` the bracket reads
//!
//! ```text
//! [(α, η, β), (α', η', β')] = (0, αJη' - α'Jη, 0).
//! ```

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{LcsError, Result};
use crate::linalg::{self, j_matrix};

/// Tolerance for the structural `AJ = JA` / `PJ = ±JP` checks on raw matrices.
pub const COMMUTATION_TOL: f64 = 1e-9;

/// Maximum number of steps taken by the derived / lower central series.
const SERIES_CAP: usize = 8;

/// Element `αE₁ + η₁E₂ + η₂E₃ + βE₄` of the algebra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraElement {
    pub alpha: f64,
    pub eta: Vector2<f64>,
    pub beta: f64,
}

impl AlgebraElement {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const E1: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const E2: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const E3: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const E4: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(alpha: f64, eta1: f64, eta2: f64, beta: f64) -> Self {
        Self {
            alpha,
            eta: Vector2::new(eta1, eta2),
            beta,
        }
    }

    pub fn basis() -> [Self; 4] {
        [Self::E1, Self::E2, Self::E3, Self::E4]
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.alpha, self.eta.x, self.eta.y, self.beta)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Re-expresses coefficients on `(X₁, X₂, X₃, [X₁, X₂])` in the E-basis, using
    /// `E₁ = X₂`, `E₂ = [X₁, X₂]`, `E₃ = X₁`, `E₄ = X₃ + [X₁, X₂]`.
    pub fn from_horizontal(c: [f64; 4]) -> Self {
        let [x1, x2, x3, x12] = c;
        // X₃ = E₄ - E₂
        Self::new(x2, x12 - x3, x1, x3)
    }

    /// Inverse of [`AlgebraElement::from_horizontal`].
    pub fn to_horizontal(&self) -> [f64; 4] {
        [self.eta.y, self.alpha, self.beta, self.eta.x + self.beta]
    }

    pub fn max_abs(&self) -> f64 {
        self.to_vector().amax()
    }
}

impl Add for AlgebraElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            alpha: self.alpha + rhs.alpha,
            eta: self.eta + rhs.eta,
            beta: self.beta + rhs.beta,
        }
    }
}

impl Sub for AlgebraElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for AlgebraElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            alpha: -self.alpha,
            eta: -self.eta,
            beta: -self.beta,
        }
    }
}

impl Mul<AlgebraElement> for f64 {
    type Output = AlgebraElement;
    fn mul(self, rhs: AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            alpha: self * rhs.alpha,
            eta: rhs.eta * self,
            beta: self * rhs.beta,
        }
    }
}

/// Lie bracket of `g`.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    let j = j_matrix();
    AlgebraElement {
        alpha: 0.0,
        eta: j * y.eta * x.alpha - j * x.eta * y.alpha,
        beta: 0.0,
    }
}

/// Matrix of `y ↦ [x, y]`.
pub fn ad_matrix(x: &AlgebraElement) -> Matrix4<f64> {
    linear_map_matrix(|y| bracket(x, y))
}

fn linear_map_matrix(f: impl Fn(&AlgebraElement) -> AlgebraElement) -> Matrix4<f64> {
    let cols = AlgebraElement::basis().map(|e| f(&e).to_vector());
    Matrix4::from_columns(&cols)
}

fn apply_matrix(m: &Matrix4<f64>, x: &AlgebraElement) -> AlgebraElement {
    AlgebraElement::from_vector(&(m * x.to_vector()))
}

/// A 2×2 matrix `pI + qJ`, i.e. an element of the commutant of `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutingMatrix {
    pub p: f64,
    pub q: f64,
}

impl CommutingMatrix {
    pub const fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }

    /// Accepts a raw matrix iff `||AJ - JA||∞ ≤ 1e-9`.
    pub fn from_matrix(a: &Matrix2<f64>) -> Result<Self> {
        let j = j_matrix();
        let residual = linalg::max_abs(&(a * j - j * a));
        if residual > COMMUTATION_TOL || !residual.is_finite() {
            return Err(LcsError::NonCommuting { residual });
        }
        Ok(Self {
            p: 0.5 * (a[(0, 0)] + a[(1, 1)]),
            q: 0.5 * (a[(1, 0)] - a[(0, 1)]),
        })
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.p, -self.q, self.q, self.p)
    }

    pub fn det(&self) -> f64 {
        self.p * self.p + self.q * self.q
    }

    pub fn trace(&self) -> f64 {
        2.0 * self.p
    }
}

/// Derivation of `g`:
///
/// ```text
/// ⎡ 0  0  0 ⎤
/// ⎢ ξ  A  0 ⎥   A = pI + qJ
/// ⎣ a  0  r ⎦
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivationMatrix {
    pub xi: Vector2<f64>,
    pub a_block: CommutingMatrix,
    pub a: f64,
    pub r: f64,
}

impl DerivationMatrix {
    pub fn new(xi: Vector2<f64>, p: f64, q: f64, a: f64, r: f64) -> Self {
        Self {
            xi,
            a_block: CommutingMatrix::new(p, q),
            a,
            r,
        }
    }

    /// Builds a derivation from a raw translational block, rejecting any `A`
    /// that does not commute with `J`.
    pub fn from_blocks(xi: Vector2<f64>, a_block: &Matrix2<f64>, a: f64, r: f64) -> Result<Self> {
        Ok(Self {
            xi,
            a_block: CommutingMatrix::from_matrix(a_block)?,
            a,
            r,
        })
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        let a = self.a_block.matrix();
        #[rustfmt::skip]
        let m = Matrix4::new(
            0.0,        0.0,       0.0,       0.0,
            self.xi.x,  a[(0, 0)], a[(0, 1)], 0.0,
            self.xi.y,  a[(1, 0)], a[(1, 1)], 0.0,
            self.a,     0.0,       0.0,       self.r,
        );
        m
    }

    pub fn apply(&self, y: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            alpha: 0.0,
            eta: self.xi * y.alpha + self.a_block.matrix() * y.eta,
            beta: self.a * y.alpha + self.r * y.beta,
        }
    }
}

/// Free-function form of [`DerivationMatrix::apply`].
pub fn apply_derivation(d: &DerivationMatrix, y: &AlgebraElement) -> AlgebraElement {
    d.apply(y)
}

/// Orientation part `±1` of an automorphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Automorphism of `g`:
///
/// ```text
/// ⎡ ±1  0  0 ⎤
/// ⎢  η  P  0 ⎥   PJ = ±JP
/// ⎣  a  0  t ⎦
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraAutomorphism {
    sign: Sign,
    eta: Vector2<f64>,
    p: Matrix2<f64>,
    a: f64,
    t: f64,
}

impl AlgebraAutomorphism {
    pub fn new(sign: Sign, eta: Vector2<f64>, p: Matrix2<f64>, a: f64, t: f64) -> Result<Self> {
        check_twisted_commutation(sign, &p)?;
        if p.determinant().abs() <= 1e-12 {
            return Err(LcsError::InvalidAutomorphism("P is singular".into()));
        }
        if t == 0.0 || !t.is_finite() {
            return Err(LcsError::InvalidAutomorphism("t must be non-zero".into()));
        }
        Ok(Self { sign, eta, p, a, t })
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }
    pub fn eta(&self) -> Vector2<f64> {
        self.eta
    }
    pub fn p(&self) -> Matrix2<f64> {
        self.p
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        let p = &self.p;
        #[rustfmt::skip]
        let m = Matrix4::new(
            self.sign.value(), 0.0,       0.0,       0.0,
            self.eta.x,        p[(0, 0)], p[(0, 1)], 0.0,
            self.eta.y,        p[(1, 0)], p[(1, 1)], 0.0,
            self.a,            0.0,       0.0,       self.t,
        );
        m
    }

    pub fn apply(&self, x: &AlgebraElement) -> AlgebraElement {
        apply_matrix(&self.matrix(), x)
    }
}

/// Checks `PJ = sign·JP` within [`COMMUTATION_TOL`].
pub(crate) fn check_twisted_commutation(sign: Sign, p: &Matrix2<f64>) -> Result<()> {
    let j = j_matrix();
    let residual = linalg::max_abs(&(p * j - j * p * sign.value()));
    if residual > COMMUTATION_TOL || !residual.is_finite() {
        return Err(LcsError::InvalidAutomorphism(format!(
            "PJ != {}JP (residual {residual:e})",
            if sign == Sign::Plus { "" } else { "-" }
        )));
    }
    Ok(())
}

/// Largest entrywise Leibniz defect `D[Eᵢ,Eⱼ] - [DEᵢ,Eⱼ] - [Eᵢ,DEⱼ]` over basis pairs.
pub fn leibniz_defect(m: &Matrix4<f64>) -> f64 {
    basis_pairs()
        .map(|(x, y)| {
            let lhs = apply_matrix(m, &bracket(&x, &y));
            let rhs = bracket(&apply_matrix(m, &x), &y) + bracket(&x, &apply_matrix(m, &y));
            (lhs - rhs).max_abs()
        })
        .fold(0.0, f64::max)
}

/// Largest entrywise morphism defect `φ[Eᵢ,Eⱼ] - [φEᵢ,φEⱼ]` over basis pairs.
pub fn morphism_defect(m: &Matrix4<f64>) -> f64 {
    basis_pairs()
        .map(|(x, y)| {
            let lhs = apply_matrix(m, &bracket(&x, &y));
            let rhs = bracket(&apply_matrix(m, &x), &apply_matrix(m, &y));
            (lhs - rhs).max_abs()
        })
        .fold(0.0, f64::max)
}

fn basis_pairs() -> impl Iterator<Item = (AlgebraElement, AlgebraElement)> {
    let b = AlgebraElement::basis();
    (0..4).flat_map(move |i| (i + 1..4).map(move |j| (b[i], b[j])))
}

pub fn is_derivation(m: &Matrix4<f64>, tol: f64) -> bool {
    leibniz_defect(m) <= tol
}

pub fn is_automorphism(m: &Matrix4<f64>, tol: f64) -> bool {
    linalg::matrix_rank(m) == 4 && morphism_defect(m) <= tol
}

/// Span of a family of algebra elements, kept as an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Vec<AlgebraElement>,
}

impl Subspace {
    pub fn span(vectors: &[AlgebraElement]) -> Self {
        let vs: Vec<_> = vectors.iter().map(AlgebraElement::to_vector).collect();
        Self {
            basis: linalg::orthonormal_span(&vs)
                .iter()
                .map(AlgebraElement::from_vector)
                .collect(),
        }
    }

    pub fn whole() -> Self {
        Self::span(&AlgebraElement::basis())
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    /// Span of `self` together with `extra`.
    pub fn extended(&self, extra: &[AlgebraElement]) -> Self {
        let mut all = self.basis.clone();
        all.extend_from_slice(extra);
        Self::span(&all)
    }
}

/// Span of `[x, y]` for `x` in `left` and `y` in `right`.
fn bracket_span(left: &Subspace, right: &Subspace) -> Subspace {
    let products: Vec<_> = left
        .basis()
        .iter()
        .flat_map(|x| right.basis().iter().map(move |y| bracket(x, y)))
        .collect();
    Subspace::span(&products)
}

/// Runs `next` from `start` and records dimensions until the dimension reaches
/// zero or stops decreasing.
fn descending_series(start: Subspace, next: impl Fn(&Subspace) -> Subspace) -> Vec<usize> {
    let mut dims = vec![start.dim()];
    let mut current = start;
    for _ in 0..SERIES_CAP {
        if current.dim() == 0 {
            break;
        }
        let following = next(&current);
        if following.dim() >= current.dim() {
            break;
        }
        dims.push(following.dim());
        current = following;
    }
    dims
}

/// Dimensions of the derived series `g⁽⁰⁾ ⊃ g⁽¹⁾ ⊃ …` of the whole algebra.
pub fn derived_series() -> Vec<usize> {
    derived_series_of(&AlgebraElement::basis())
}

/// Derived series of the subalgebra spanned by `generators` (assumed closed).
pub fn derived_series_of(generators: &[AlgebraElement]) -> Vec<usize> {
    descending_series(Subspace::span(generators), |s| bracket_span(s, s))
}

/// Dimensions of the lower central series `g ⊃ [g,g] ⊃ [g,[g,g]] ⊃ …`.
pub fn lower_central_series() -> Vec<usize> {
    let whole = Subspace::whole();
    descending_series(whole.clone(), |s| bracket_span(&whole, s))
}

/// The subalgebra `se(2) = span{E₁, E₂, E₃}`.
pub fn se2_basis() -> [AlgebraElement; 3] {
    [AlgebraElement::E1, AlgebraElement::E2, AlgebraElement::E3]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(a: f64, e1: f64, e2: f64, b: f64) -> AlgebraElement {
        AlgebraElement::new(a, e1, e2, b)
    }

    #[test]
    fn structure_constants() {
        use AlgebraElement as A;
        assert_eq!(bracket(&A::E1, &A::E2), A::E3);
        assert_eq!(bracket(&A::E1, &A::E3), -A::E2);
        assert_eq!(bracket(&A::E2, &A::E3), A::ZERO);
        for x in A::basis() {
            assert_eq!(bracket(&A::E4, &x).max_abs(), 0.0);
        }
    }

    #[test]
    fn from_horizontal_examples() {
        assert_eq!(
            AlgebraElement::from_horizontal([0.0, 1.0, 0.0, 0.0]),
            AlgebraElement::E1
        );
        assert_eq!(
            AlgebraElement::from_horizontal([0.0, 0.0, 1.0, 0.0]),
            e(0.0, -1.0, 0.0, 1.0)
        );
        assert_eq!(
            AlgebraElement::from_horizontal([1.0, 0.0, 0.0, 0.0]),
            AlgebraElement::E3
        );
        let c = [0.5, -1.5, 2.0, 3.25];
        assert_eq!(AlgebraElement::from_horizontal(c).to_horizontal(), c);
    }

    #[test]
    fn apply_derivation_examples() {
        let d = DerivationMatrix::new(Vector2::new(1.0, 2.0), 3.0, 4.0, 5.0, 0.0);
        let y = e(2.0, 1.0, 0.0, 7.0);
        assert_eq!(d.apply(&y), e(0.0, 5.0, 8.0, 10.0));
        // the explicit matrix agrees
        assert_eq!(apply_matrix(&d.matrix(), &y), e(0.0, 5.0, 8.0, 10.0));
        assert_eq!(d.apply(&AlgebraElement::ZERO), AlgebraElement::ZERO);
        let center = DerivationMatrix::new(Vector2::zeros(), 0.0, 0.0, 0.0, 1.0);
        assert_eq!(center.apply(&e(0.0, 0.0, 0.0, 3.0)), e(0.0, 0.0, 0.0, 3.0));
    }

    #[test]
    fn is_derivation_examples() {
        let d = DerivationMatrix::new(Vector2::new(1.0, 2.0), 3.0, 4.0, 5.0, -1.5);
        assert!(is_derivation(&d.matrix(), 1e-12));
        assert!(!is_derivation(&Matrix4::identity(), 1e-12));
        assert!(is_derivation(&Matrix4::zeros(), 1e-12));
    }

    #[test]
    fn is_automorphism_examples() {
        assert!(is_automorphism(&Matrix4::identity(), 1e-12));
        let phi = AlgebraAutomorphism::new(
            Sign::Plus,
            Vector2::new(1.0, 1.0),
            linalg::rotation(0.3),
            2.0,
            5.0,
        )
        .unwrap();
        assert!(is_automorphism(&phi.matrix(), 1e-12));
        let m = Matrix4::from_diagonal(&Vector4::new(2.0, 1.0, 1.0, 1.0));
        assert!(!is_automorphism(&m, 1e-12));
        assert!(!is_automorphism(&Matrix4::zeros(), 1e-12));
    }

    #[test]
    fn orientation_reversing_automorphism() {
        let reflect = Matrix2::new(1.0, 0.0, 0.0, -1.0) * 2.0;
        let phi =
            AlgebraAutomorphism::new(Sign::Minus, Vector2::new(0.3, -1.0), reflect, 1.0, -2.0)
                .unwrap();
        assert!(is_automorphism(&phi.matrix(), 1e-12));
        assert!(AlgebraAutomorphism::new(Sign::Plus, Vector2::zeros(), reflect, 0.0, 1.0).is_err());
        assert!(AlgebraAutomorphism::new(
            Sign::Plus,
            Vector2::zeros(),
            Matrix2::identity(),
            0.0,
            0.0
        )
        .is_err());
        assert!(
            AlgebraAutomorphism::new(Sign::Plus, Vector2::zeros(), Matrix2::zeros(), 0.0, 1.0)
                .is_err()
        );
    }

    #[test]
    fn commuting_matrix_validation() {
        let a = Matrix2::new(2.0, -3.0, 3.0, 2.0);
        let c = CommutingMatrix::from_matrix(&a).unwrap();
        assert_eq!(c, CommutingMatrix::new(2.0, 3.0));
        assert_eq!(c.matrix(), a);
        let bad = Matrix2::new(1.0, 0.0, 0.0, 2.0);
        assert!(matches!(
            CommutingMatrix::from_matrix(&bad),
            Err(LcsError::NonCommuting { .. })
        ));
        assert!(DerivationMatrix::from_blocks(Vector2::zeros(), &bad, 0.0, 0.0).is_err());
    }

    #[test]
    fn derived_series_examples() {
        assert_eq!(derived_series(), vec![4, 2, 0]);
        assert_eq!(derived_series_of(&[AlgebraElement::E4]), vec![1, 0]);
        assert_eq!(derived_series_of(&se2_basis()), vec![3, 2, 0]);
    }

    #[test]
    fn not_nilpotent() {
        let lcs = lower_central_series();
        assert_eq!(lcs, vec![4, 2]);
        assert_ne!(*lcs.last().unwrap(), 0);
    }

    #[test]
    fn ad_matrix_examples() {
        let c = linalg::characteristic_polynomial(&ad_matrix(&AlgebraElement::E1));
        // λ⁴ + λ²
        let expected = [0.0, 0.0, 1.0, 0.0, 1.0];
        for (x, y) in c.iter().zip(expected.iter()) {
            assert!((x - y).abs() < 1e-12, "{c:?}");
        }
        assert_eq!(ad_matrix(&AlgebraElement::E4), Matrix4::zeros());
        let ad2 = ad_matrix(&AlgebraElement::E2);
        assert_ne!(ad2, Matrix4::zeros());
        assert_eq!(ad2 * ad2, Matrix4::zeros());
    }

    #[test]
    fn center_is_one_dimensional() {
        for x in [AlgebraElement::E1, AlgebraElement::E2, AlgebraElement::E3] {
            let noncentral = AlgebraElement::basis()
                .iter()
                .any(|y| bracket(&x, y).max_abs() > 0.0);
            assert!(noncentral);
        }
    }
}
