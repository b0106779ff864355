//! Small dense linear-algebra helpers shared by the algebra and control modules.

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};

/// Relative singular-value cutoff used for every rank decision in the crate.
pub const RANK_TOL: f64 = 1e-9;

/// The complex structure `J` of the plane (quarter turn).
pub fn j_matrix() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// Counter-clockwise rotation by `theta`.
pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Entrywise max-norm.
pub fn max_abs<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Threshold below which a singular value is treated as zero for a matrix whose
/// largest singular value is `sigma_max`.
pub fn rank_threshold(sigma_max: f64) -> f64 {
    RANK_TOL * sigma_max.max(1.0)
}

/// Orthonormal basis of the span of `vectors`, obtained from the SVD of the matrix
/// whose columns are the inputs.
pub fn orthonormal_span(vectors: &[Vector4<f64>]) -> Vec<Vector4<f64>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let m = DMatrix::from_fn(4, vectors.len(), |i, j| vectors[j][i]);
    let svd = m.svd(true, false);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = rank_threshold(sigma_max);
    let u = svd.u.expect("left singular vectors requested");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > cutoff)
        .map(|(k, _)| Vector4::new(u[(0, k)], u[(1, k)], u[(2, k)], u[(3, k)]))
        .collect()
}

/// Numerical rank of the span of `vectors`.
pub fn span_rank(vectors: &[Vector4<f64>]) -> usize {
    orthonormal_span(vectors).len()
}

/// Numerical rank of a square matrix.
pub fn matrix_rank(m: &Matrix4<f64>) -> usize {
    let sv = m.singular_values();
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = rank_threshold(sigma_max);
    sv.iter().filter(|s| **s > cutoff).count()
}

/// Coefficients `[c0, c1, c2, c3, c4]` of `det(λI - M) = Σ c_k λ^k` by the
/// Faddeev-LeVerrier recursion (`c4 = 1`).
pub fn characteristic_polynomial(m: &Matrix4<f64>) -> [f64; 5] {
    let n = 4;
    let mut coeffs = [0.0; 5];
    coeffs[n] = 1.0;
    let mut mk = Matrix4::<f64>::zeros();
    for k in 1..=n {
        mk = m * mk + Matrix4::identity() * coeffs[n - k + 1];
        let amk = m * mk;
        coeffs[n - k] = -amk.trace() / k as f64;
    }
    coeffs
}
