//! Line bundles O(k) = SU(2) ×_{U(1)} ℂ₋ₖ over CP¹, their Laplace eigenspaces
//! W = S^{|k|+2l}ℂ², and the evaluation of sections by `t_w[g] = π₀(ρ(g)⁻¹ w)`.

use crate::grassmann_geometry::{self, FdConfig};
use crate::linalg::{self, c, CMat, CVec};
use crate::rep_su2::{build_irrep, Irrep, LieGenerators, Su2};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Complex,
    Real,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Complex => "complex",
            Mode::Real => "real",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "complex" => Ok(Mode::Complex),
            "real" => Ok(Mode::Real),
            other => Err(format!("unknown mode '{other}' (expected complex or real)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("real mode needs a nonzero degree (got k = 0)")]
    TrivialRealBundle,
    #[error("Laplacian fit did not converge: residual {residual:.3e} exceeds {tolerance:.1e}")]
    NonConvergent { residual: f64, tolerance: f64 },
    #[error(transparent)]
    Geometry(#[from] grassmann_geometry::GeometryError),
}

#[derive(Clone, Debug, Serialize)]
pub struct BundleModel {
    pub k: i64,
    pub v0_weight: i64,
    pub q: usize,
    pub mode: Mode,
}

#[derive(Clone, Debug)]
pub struct EigenspaceData {
    pub bundle: BundleModel,
    pub l: usize,
    pub irrep: Irrep,
    /// Generators acting on W (realified in real mode).
    pub generators: LieGenerators,
    /// Complex structure on W in real mode.
    pub j: Option<CMat>,
    pub v0: Vec<CVec>,
    pub u0: Vec<CVec>,
    pub mu: Option<f64>,
}

impl EigenspaceData {
    /// Ambient dimension of W over its field (N complex, or 2(k+1) real).
    pub fn dim(&self) -> usize {
        self.generators.dim()
    }

    pub fn mode(&self) -> Mode {
        self.bundle.mode
    }

    pub fn q(&self) -> usize {
        self.bundle.q
    }

    pub fn rho(&self, g: &Su2) -> CMat {
        let r = self.irrep.rho(g);
        match self.mode() {
            Mode::Complex => r,
            Mode::Real => linalg::realify_linear(&r),
        }
    }

    /// Columns span V0.
    pub fn v0_matrix(&self) -> CMat {
        linalg::from_columns(&self.v0, self.dim())
    }

    pub fn p_v0(&self) -> CMat {
        linalg::projector(&self.v0, self.dim())
    }

    /// Basis of ρ(𝔪)V0.
    pub fn m_v0(&self) -> Vec<CVec> {
        let mut out = Vec::new();
        for x in [&self.generators.xi1, &self.generators.xi2] {
            for v in &self.v0 {
                out.push(x * v);
            }
        }
        linalg::orthonormalize(&out, 1e-10)
    }

    /// Lift of a vector of S^{|k|+2l}ℂ² into W (realified in real mode).
    pub fn lift(&self, v: &CVec) -> CVec {
        match self.mode() {
            Mode::Complex => v.clone(),
            Mode::Real => linalg::realify_vector(v),
        }
    }
}

pub fn eigenspace(k: i64, l: usize, mode: Mode) -> Result<EigenspaceData, BundleError> {
    if mode == Mode::Real && k == 0 {
        return Err(BundleError::TrivialRealBundle);
    }
    let irrep = build_irrep(k.unsigned_abs() as usize + 2 * l);
    let r = irrep.index_of_weight(-k).expect("−k is a weight of S^{|k|+2l}");
    let base = irrep.basis_vector(r);
    let (generators, j, v0) = match mode {
        Mode::Complex => (irrep.generators(), None, vec![base]),
        Mode::Real => {
            let j = linalg::complex_structure(irrep.dim());
            let v = linalg::realify_vector(&base);
            let jv = &j * &v;
            (irrep.generators().realified(), Some(j), vec![v, jv])
        }
    };
    let n = generators.dim();
    let p0 = linalg::projector(&v0, n);
    let u0 = linalg::range_basis(&(linalg::identity(n) - p0), 0.5);
    let q = v0.len();
    Ok(EigenspaceData {
        bundle: BundleModel { k, v0_weight: -k, q, mode },
        l,
        irrep,
        generators,
        j,
        v0,
        u0,
        mu: None,
    })
}

/// `π₀(ρ(g)⁻¹ w)` in coordinates of the V0 basis.
pub fn evaluate_section(ed: &EigenspaceData, w: &CVec, g: &Su2) -> CVec {
    let x = ed.rho(&g.inverse()) * w;
    CVec::from_iterator(ed.v0.len(), ed.v0.iter().map(|v| v.dotc(&x)))
}

/// Largest |π₀(ξᵢ v)| over v in V0; the gauge condition holds when it is ≤ 1e-12.
pub fn check_gauge_condition(ed: &EigenspaceData) -> (bool, f64) {
    let p0 = ed.p_v0();
    let mut worst: f64 = 0.0;
    for x in [&ed.generators.xi1, &ed.generators.xi2] {
        for v in &ed.v0 {
            worst = worst.max((&p0 * (x * v)).norm());
        }
    }
    (worst <= 1e-12, worst)
}

/// A map into Gr_{N−q}(W) given by a semipositive T: the quotient fibre at [g]
/// is the span of `T ρ(g) v`, v ∈ V0.
#[derive(Clone, Debug)]
pub struct MapSpec {
    pub eigendata: EigenspaceData,
    pub t: CMat,
    pub iota_range: Vec<CVec>,
    pub m: usize,
}

impl MapSpec {
    pub fn new(eigendata: EigenspaceData, t: CMat) -> Self {
        let scale = linalg::op_norm(&t).max(1.0);
        let iota_range = linalg::range_basis(&t, 1e-10 * scale);
        let m = iota_range.len();
        MapSpec { eigendata, t, iota_range, m }
    }

    pub fn trace_t2(&self) -> f64 {
        (&self.t * &self.t).trace().re
    }

    /// `T² − Id`, the deformation direction of this spec.
    pub fn c(&self) -> CMat {
        &self.t * &self.t - linalg::identity(self.t.nrows())
    }

    /// `T·ev*` at [g] as a W×q matrix: columns `T ρ(g) v_a`.
    pub fn frame(&self, g: &Su2) -> CMat {
        &self.t * self.eigendata.rho(g) * self.eigendata.v0_matrix()
    }

    /// Projection onto `ι(𝕂^m)`.
    pub fn iota_projector(&self) -> CMat {
        linalg::projector(&self.iota_range, self.t.nrows())
    }
}

pub fn standard_map(ed: &EigenspaceData) -> MapSpec {
    MapSpec::new(ed.clone(), linalg::identity(ed.dim()))
}

/// Fit μ in Δt = μt for the standard map of `ed` by the finite-difference Laplacian.
pub fn laplace_eigenvalue(
    ed: &EigenspaceData,
    kappa: f64,
    seed: u64,
    n_samples: usize,
    fd: FdConfig,
    tolerance: f64,
) -> Result<f64, BundleError> {
    let spec = standard_map(ed);
    let fit = grassmann_geometry::fit_laplace_eigenvalue(&spec, kappa, seed, n_samples, fd)?;
    if fit.residual > tolerance {
        return Err(BundleError::NonConvergent { residual: fit.residual, tolerance });
    }
    Ok(fit.mu)
}

/// Copy of `ed` with μ filled in.
pub fn with_mu(ed: &EigenspaceData, mu: f64) -> EigenspaceData {
    let mut out = ed.clone();
    out.mu = Some(mu);
    out
}

/// Fibre action of `exp(sζ) ∈ U(1)` on V0: multiplication by e^{−iks}.
pub fn fibre_action(ed: &EigenspaceData, s: f64) -> CMat {
    let angle = -(ed.bundle.k as f64) * s;
    match ed.mode() {
        Mode::Complex => CMat::from_element(1, 1, c(angle.cos(), angle.sin())),
        Mode::Real => CMat::from_row_slice(
            2,
            2,
            &[c(angle.cos(), 0.0), c(-angle.sin(), 0.0), c(angle.sin(), 0.0), c(angle.cos(), 0.0)],
        ),
    }
}
