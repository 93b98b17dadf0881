//! Small dense helpers shared by every module.
//!
//! Everything is stored as `DMatrix<Complex64>`; real-mode objects simply carry
//! zero imaginary parts, so one code path serves both fields.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Real Frobenius pairing `Re tr(A B†)`; equals `tr(AB)` on Hermitian matrices.
pub fn frob(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (vals, vecs)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).0[0]
}

/// `f(M)` for Hermitian `M` through its spectral decomposition.
pub fn spectral_map(m: &CMat, f: impl Fn(f64) -> Complex64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&x| f(x))));
    &vecs * d * vecs.adjoint()
}

/// Exponential of an anti-Hermitian matrix; the result is unitary to rounding.
pub fn expm_skew(x: &CMat) -> CMat {
    let h = x * c(0.0, -1.0);
    spectral_map(&h, |l| c(l.cos(), l.sin()))
}

/// Square root of a positive semidefinite matrix, negative eigenvalues clamped to zero.
pub fn psd_sqrt(m: &CMat) -> CMat {
    spectral_map(m, |l| c(l.max(0.0).sqrt(), 0.0))
}

pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn is_real(m: &CMat, tol: f64) -> bool {
    m.iter().all(|z| z.im.abs() <= tol)
}

/// Gram–Schmidt over ℂ with one re-orthogonalisation pass. Vectors whose
/// residual falls below `tol` times the reference scale are dropped.
pub fn orthonormalize(vectors: &[CVec], tol: f64) -> Vec<CVec> {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut out: Vec<CVec> = Vec::new();
    if scale == 0.0 {
        return out;
    }
    for v in vectors {
        let r = residual(v, &out);
        let n = r.norm();
        if n > tol * scale {
            out.push(r / c(n, 0.0));
        }
    }
    out
}

/// Component of `v` orthogonal to the orthonormal list `basis`.
pub fn residual(v: &CVec, basis: &[CVec]) -> CVec {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let coef = b.dotc(&r);
            r -= b * coef;
        }
    }
    r
}

pub fn projector(basis: &[CVec], n: usize) -> CMat {
    let mut p = CMat::zeros(n, n);
    for b in basis {
        p += b * b.adjoint();
    }
    p
}

pub fn columns(m: &CMat) -> Vec<CVec> {
    (0..m.ncols()).map(|j| m.column(j).into_owned()).collect()
}

pub fn from_columns(cols: &[CVec], n: usize) -> CMat {
    CMat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Orthonormal basis of the range of a Hermitian matrix (eigenvalues above `tol`).
pub fn range_basis(m: &CMat, tol: f64) -> Vec<CVec> {
    let (vals, vecs) = hermitian_eigen(m);
    vals.iter()
        .enumerate()
        .filter(|(_, &l)| l > tol)
        .map(|(j, _)| vecs.column(j).into_owned())
        .collect()
}

/// Orthonormal basis of the kernel of a Hermitian matrix (|eigenvalue| ≤ `tol`).
pub fn kernel_basis(m: &CMat, tol: f64) -> Vec<CVec> {
    let (vals, vecs) = hermitian_eigen(m);
    vals.iter()
        .enumerate()
        .filter(|(_, &l)| l.abs() <= tol)
        .map(|(j, _)| vecs.column(j).into_owned())
        .collect()
}

/// Real block form `[[Re, −Im], [Im, Re]]` of a complex-linear map.
pub fn realify_linear(m: &CMat) -> CMat {
    let (r, cl) = m.shape();
    CMat::from_fn(2 * r, 2 * cl, |i, j| {
        let z = m[(i % r, j % cl)];
        let v = match (i < r, j < cl) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        };
        c(v, 0.0)
    })
}

/// Real block form of the antilinear map `w ↦ S·conj(w)`.
pub fn realify_antilinear(s: &CMat) -> CMat {
    let (r, cl) = s.shape();
    CMat::from_fn(2 * r, 2 * cl, |i, j| {
        let z = s[(i % r, j % cl)];
        let v = match (i < r, j < cl) {
            (true, true) => z.re,
            (false, false) => -z.re,
            _ => z.im,
        };
        c(v, 0.0)
    })
}

/// Real coordinates `(x, y)` of `w = x + iy`.
pub fn realify_vector(v: &CVec) -> CVec {
    let n = v.len();
    CVec::from_fn(2 * n, |i, _| if i < n { c(v[i].re, 0.0) } else { c(v[i - n].im, 0.0) })
}

/// Complex structure `[[0, −I], [I, 0]]` on ℝ^{2n}.
pub fn complex_structure(n: usize) -> CMat {
    CMat::from_fn(2 * n, 2 * n, |i, j| {
        if i >= n && j + n == i {
            c(1.0, 0.0)
        } else if i < n && j == i + n {
            c(-1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            c(a, b)
        })
    }

    #[test]
    fn realify_is_an_algebra_map() {
        let a = sample(3, 1);
        let b = sample(3, 2);
        let lhs = realify_linear(&(&a * &b));
        let rhs = realify_linear(&a) * realify_linear(&b);
        assert!((lhs - rhs).norm() < 1e-13);
        let j = complex_structure(3);
        assert!((&j * &j + identity(6)).norm() < 1e-15);
        assert!((realify_linear(&a) * &j - &j * realify_linear(&a)).norm() < 1e-14);
    }

    #[test]
    fn antilinear_realification_matches_pointwise_action() {
        let s = sample(3, 3);
        let w = sample(3, 4).column(0).into_owned();
        let direct = &s * w.map(|z| z.conj());
        let via_real = realify_antilinear(&s) * realify_vector(&w);
        assert!((realify_vector(&direct) - via_real).norm() < 1e-14);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = sample(4, 5);
        let m = &a * a.adjoint();
        let r = psd_sqrt(&m);
        assert!((&r * &r - &m).norm() < 1e-12);
    }

    #[test]
    fn expm_skew_of_zero_is_identity() {
        assert!((expm_skew(&CMat::zeros(3, 3)) - identity(3)).norm() < 1e-15);
    }
}
