//! Irreducible representations S^kℂ² of SU(2) in the orthonormal weight basis.
//!
//! Basis order is descending weight: index `r` carries weight `k − 2r`.
//! `E v_m = c_m v_{m+2}` with `c_m = sqrt(((k−m)/2)((k+m)/2 + 1))`, `F = E†`.

use crate::linalg::{self, c, CMat, CVec};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct Irrep {
    pub k: usize,
    pub weights: Vec<i64>,
    pub e: CMat,
    pub f: CMat,
    pub h: CMat,
}

/// Anti-Hermitian generators: `xi1 = E − F`, `xi2 = i(E + F)` span ρ(𝔪), `zeta = i·H` spans ρ(𝔲(1)).
#[derive(Clone, Debug)]
pub struct LieGenerators {
    pub xi1: CMat,
    pub xi2: CMat,
    pub zeta: CMat,
}

impl LieGenerators {
    pub fn all(&self) -> [&CMat; 3] {
        [&self.zeta, &self.xi1, &self.xi2]
    }

    pub fn dim(&self) -> usize {
        self.zeta.nrows()
    }

    pub fn realified(&self) -> LieGenerators {
        LieGenerators {
            xi1: linalg::realify_linear(&self.xi1),
            xi2: linalg::realify_linear(&self.xi2),
            zeta: linalg::realify_linear(&self.zeta),
        }
    }
}

impl Irrep {
    pub fn dim(&self) -> usize {
        self.k + 1
    }

    pub fn generators(&self) -> LieGenerators {
        LieGenerators {
            xi1: &self.e - &self.f,
            xi2: (&self.e + &self.f) * c(0.0, 1.0),
            zeta: &self.h * c(0.0, 1.0),
        }
    }

    /// Index of the weight-`m` basis vector, if `m` is a weight.
    pub fn index_of_weight(&self, m: i64) -> Option<usize> {
        self.weights.iter().position(|&w| w == m)
    }

    pub fn basis_vector(&self, r: usize) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[r] = c(1.0, 0.0);
        v
    }

    /// ρ(g) via the action on homogeneous polynomials of degree k.
    pub fn rho(&self, g: &Su2) -> CMat {
        let k = self.k;
        let m = g.matrix();
        let (g11, g12, g21, g22) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let pw = |z: Complex64, n: usize| -> Vec<Complex64> {
            let mut out = vec![c(1.0, 0.0); n + 1];
            for i in 1..=n {
                out[i] = out[i - 1] * z;
            }
            out
        };
        let (p11, p12, p21, p22) = (pw(g11, k), pw(g12, k), pw(g21, k), pw(g22, k));
        let binom = binomials(k);
        // Column j (power of x in the source monomial) maps to x-power i.
        let mut out = CMat::zeros(k + 1, k + 1);
        for j in 0..=k {
            for i in 0..=k {
                let mut acc = c(0.0, 0.0);
                let a_lo = i.saturating_sub(k - j);
                let a_hi = i.min(j);
                for a in a_lo..=a_hi {
                    let b = i - a;
                    let coef = binom[j][a] * binom[k - j][b];
                    acc += p11[a] * p21[j - a] * p12[b] * p22[k - j - b] * coef;
                }
                let scale = (binom[k][j] / binom[k][i]).sqrt();
                out[(k - i, k - j)] = acc * scale;
            }
        }
        out
    }
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1.0;
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] + if j < i { t[i - 1][j] } else { 0.0 };
        }
    }
    t
}

pub fn ladder_coefficient(k: usize, m: i64) -> f64 {
    let k = k as f64;
    let m = m as f64;
    (((k - m) / 2.0) * ((k + m) / 2.0 + 1.0)).max(0.0).sqrt()
}

pub fn build_irrep(k: usize) -> Irrep {
    let n = k + 1;
    let weights: Vec<i64> = (0..n).map(|r| k as i64 - 2 * r as i64).collect();
    let mut e = CMat::zeros(n, n);
    // v_m sits at index r, v_{m+2} at r−1.
    for r in 1..n {
        e[(r - 1, r)] = c(ladder_coefficient(k, weights[r]), 0.0);
    }
    let f = e.adjoint();
    let h = CMat::from_diagonal(&CVec::from_iterator(n, weights.iter().map(|&w| c(w as f64, 0.0))));
    Irrep { k, weights, e, f, h }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StructureKind {
    Real,
    Quaternionic,
}

/// Antilinear equivariant map `w ↦ matrix · conj(w)`.
#[derive(Clone, Debug)]
pub struct InvariantStructure {
    pub kind: StructureKind,
    pub matrix: CMat,
}

impl InvariantStructure {
    pub fn apply(&self, w: &CVec) -> CVec {
        &self.matrix * w.map(|z| z.conj())
    }

    /// Matrix of the (complex-linear) square `S · conj(S)`.
    pub fn square(&self) -> CMat {
        &self.matrix * self.matrix.map(|z| z.conj())
    }

    /// Equivariance defect `|S conj(ρ(g)) − ρ(g) S|`.
    pub fn equivariance_residual(&self, rho_g: &CMat) -> f64 {
        (&self.matrix * rho_g.map(|z| z.conj()) - rho_g * &self.matrix).norm()
    }

    /// Real 2n×2n matrix of the structure acting on the realification.
    pub fn realified(&self) -> CMat {
        linalg::realify_antilinear(&self.matrix)
    }

    /// For a real structure: rephased weight basis `ṽ_m = ω_m v_m` with `σ(ṽ_m) = ṽ_{−m}`.
    pub fn adapted_basis(&self) -> Option<Vec<CVec>> {
        if self.kind != StructureKind::Real {
            return None;
        }
        let n = self.matrix.nrows();
        let k = n - 1;
        let mut out = Vec::with_capacity(n);
        for r in 0..n {
            let m = k as i64 - 2 * r as i64;
            let s_pos = structure_sign(k, m.abs());
            let omega = if m > 0 {
                c(1.0, 0.0)
            } else if m < 0 {
                c(s_pos, 0.0)
            } else if s_pos > 0.0 {
                c(1.0, 0.0)
            } else {
                c(0.0, 1.0)
            };
            let mut v = CVec::zeros(n);
            v[r] = omega;
            out.push(v);
        }
        Some(out)
    }
}

/// Sign `s_m` in `S v_m = s_m v_{−m}`; forced to alternate by `S E S⁻¹ = −F`.
fn structure_sign(k: usize, m: i64) -> f64 {
    if ((k as i64 - m) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn invariant_structure(irrep: &Irrep) -> InvariantStructure {
    let n = irrep.dim();
    let mut s = CMat::zeros(n, n);
    for r in 0..n {
        s[(n - 1 - r, r)] = c(structure_sign(irrep.k, irrep.weights[r]), 0.0);
    }
    let kind = if irrep.k.is_multiple_of(2) { StructureKind::Real } else { StructureKind::Quaternionic };
    InvariantStructure { kind, matrix: s }
}

/// Element of SU(2) stored as `[[α, −β̄], [β, ᾱ]]` with `|α|² + |β|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Su2 {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl Su2 {
    pub fn identity() -> Self {
        Su2 { alpha: c(1.0, 0.0), beta: c(0.0, 0.0) }
    }

    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        Su2 { alpha: c(q[0] / n, q[3] / n), beta: c(q[2] / n, q[1] / n) }
    }

    /// `exp(a·ζ + b·ξ₁ + c·ξ₂)` in the defining representation.
    pub fn exp_coords(a: f64, b: f64, cc: f64) -> Self {
        let r = (a * a + b * b + cc * cc).sqrt();
        let s = if r < 1e-8 { 1.0 - r * r / 6.0 } else { r.sin() / r };
        Su2 { alpha: c(r.cos(), a * s), beta: c(-b * s, cc * s) }
    }

    pub fn matrix(&self) -> Matrix2<Complex64> {
        Matrix2::new(self.alpha, -self.beta.conj(), self.beta, self.alpha.conj())
    }

    fn from_matrix(m: &Matrix2<Complex64>) -> Self {
        let n = (m[(0, 0)].norm_sqr() + m[(1, 0)].norm_sqr()).sqrt();
        Su2 { alpha: m[(0, 0)] / n, beta: m[(1, 0)] / n }
    }

    pub fn mul(&self, other: &Su2) -> Su2 {
        Su2::from_matrix(&(self.matrix() * other.matrix()))
    }

    pub fn inverse(&self) -> Su2 {
        Su2 { alpha: self.alpha.conj(), beta: -self.beta }
    }
}

/// Haar-distributed SU(2) samples from normalised Gaussian quaternions.
pub fn haar_samples(seed: u64, n: usize) -> Vec<Su2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            Su2::from_quaternion(q)
        })
        .collect()
}

/// ρ(exp(aζ + bξ₁ + cξ₂)) by exponentiating the represented Lie algebra element.
pub fn group_element(irrep: &Irrep, a: f64, b: f64, cc: f64) -> CMat {
    let g = irrep.generators();
    let x = &g.zeta * c(a, 0.0) + &g.xi1 * c(b, 0.0) + &g.xi2 * c(cc, 0.0);
    linalg::expm_skew(&x)
}

pub fn clebsch_gordan_dims(k1: usize, k2: usize) -> Vec<usize> {
    let lo = k1.abs_diff(k2);
    (0..=(k1 + k2 - lo) / 2).map(|i| k1 + k2 - 2 * i).collect()
}

/// Realification of S^kℂ² on ℝ^{2(k+1)} with basis `(v, Jv)`.
#[derive(Clone, Debug)]
pub struct RealRep {
    pub dim: usize,
    pub generators: LieGenerators,
    pub j: CMat,
}

pub fn realify(irrep: &Irrep) -> RealRep {
    RealRep {
        dim: 2 * irrep.dim(),
        generators: irrep.generators().realified(),
        j: linalg::complex_structure(irrep.dim()),
    }
}
