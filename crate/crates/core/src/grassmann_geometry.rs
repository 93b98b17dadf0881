//! Maps CP¹ → Gr(W) as projection fields, differentiated by central finite
//! differences along the curves `t ↦ g·exp(tξᵢ)`.
//!
//! With `P = P_Q` and `P' = dP/dt` along ξ, the second fundamental forms are
//! `H_ξ = −P P' P_S` and `K_ξ = P_S P' P`, the mean curvature operator is
//! `A = Σ H_{eᵢ} K_{eᵢ}` and the rough Laplacian of `t_w = P w` is
//! `Δt_w = −Σ (P P'P' + P P'') w`, all over an orthonormal frame `eᵢ = ξᵢ/√κ`.

use crate::homogeneous_bundle::{eigenspace, standard_map, MapSpec, Mode};
use crate::linalg::{self, c, frob, CMat, CVec};
use crate::rep_su2::{haar_samples, Su2};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::OnceLock;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("fibre span has rank {rank} < {q}; the map is undefined here")]
    RankDrop { rank: usize, q: usize },
    #[error("step {h:.1e} too small: second difference is {ratio:.1e} of the values, below half the working precision")]
    StepTooSmall { h: f64, ratio: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FdConfig {
    pub h: f64,
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { h: 1e-3, richardson: false }
    }
}

impl FdConfig {
    pub fn with_step(h: f64) -> Self {
        FdConfig { h, richardson: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    Xi1,
    Xi2,
}

pub const DIRECTIONS: [Direction; 2] = [Direction::Xi1, Direction::Xi2];

/// `g·exp(tξ)`.
pub fn along(g: &Su2, dir: Direction, t: f64) -> Su2 {
    let step = match dir {
        Direction::Xi1 => Su2::exp_coords(0.0, t, 0.0),
        Direction::Xi2 => Su2::exp_coords(0.0, 0.0, t),
    };
    g.mul(&step)
}

#[derive(Clone, Debug)]
pub struct GrassPoint {
    pub p_q: CMat,
    /// Orthonormal basis of the quotient fibre (columns).
    pub fibre: CMat,
    pub q: usize,
}

impl GrassPoint {
    pub fn p_s(&self) -> CMat {
        linalg::identity(self.p_q.nrows()) - &self.p_q
    }

    /// max of |P² − P|, |P − P†|, |tr P − q|.
    pub fn invariant_residual(&self) -> f64 {
        let p = &self.p_q;
        let idem = (p * p - p).camax();
        let herm = (p - p.adjoint()).camax();
        let tr = (p.trace().re - self.q as f64).abs() + p.trace().im.abs();
        idem.max(herm).max(tr)
    }
}

/// Projection onto `span{T ρ(g) v : v ∈ V0}`.
pub fn evaluate(spec: &MapSpec, g: &Su2) -> Result<GrassPoint, GeometryError> {
    let phi = spec.frame(g);
    let q = phi.ncols();
    let gram = phi.adjoint() * &phi;
    let (vals, _) = linalg::hermitian_eigen(&gram);
    let top = vals.last().copied().unwrap_or(0.0);
    let rank = vals.iter().filter(|&&l| l > 1e-16 * top.max(1e-300)).count();
    if top <= 0.0 || rank < q || vals[0] < 1e-16 * top {
        return Err(GeometryError::RankDrop { rank, q });
    }
    let inv_sqrt = linalg::spectral_map(&gram, |l| c(1.0 / l.sqrt(), 0.0));
    let fibre = &phi * inv_sqrt;
    let p = linalg::hermitian_part(&(&fibre * fibre.adjoint()));
    Ok(GrassPoint { p_q: p, fibre, q })
}

/// Projection field and its first two derivatives along one direction.
#[derive(Clone, Debug)]
pub struct Jet {
    pub p: CMat,
    pub dp: CMat,
    pub d2p: CMat,
}

fn raw_jet(spec: &MapSpec, g: &Su2, dir: Direction, h: f64, p0: &CMat) -> Result<(CMat, CMat), GeometryError> {
    let plus = evaluate(spec, &along(g, dir, h))?.p_q;
    let minus = evaluate(spec, &along(g, dir, -h))?.p_q;
    let second = &plus - p0 * c(2.0, 0.0) + &minus;
    let ratio = second.norm() / p0.norm();
    if ratio < f64::EPSILON.sqrt() {
        return Err(GeometryError::StepTooSmall { h, ratio });
    }
    let dp = (&plus - &minus) * c(1.0 / (2.0 * h), 0.0);
    let d2p = second * c(1.0 / (h * h), 0.0);
    Ok((dp, d2p))
}

pub fn jet(spec: &MapSpec, g: &Su2, dir: Direction, fd: FdConfig) -> Result<Jet, GeometryError> {
    let p = evaluate(spec, g)?.p_q;
    jet_at(spec, g, dir, fd, &p)
}

fn jet_at(spec: &MapSpec, g: &Su2, dir: Direction, fd: FdConfig, p0: &CMat) -> Result<Jet, GeometryError> {
    let (dp, d2p) = raw_jet(spec, g, dir, fd.h, p0)?;
    let (dp, d2p) = if fd.richardson {
        let (dp2, d2p2) = raw_jet(spec, g, dir, fd.h / 2.0, p0)?;
        let third = c(1.0 / 3.0, 0.0);
        ((dp2 * c(4.0, 0.0) - dp) * third, (d2p2 * c(4.0, 0.0) - d2p) * third)
    } else {
        (dp, d2p)
    };
    Ok(Jet { p: p0.clone(), dp, d2p })
}

/// `(H_ξ, K_ξ)` as operators on W, per unit of ξ (divide by √κ for a unit frame vector).
pub fn second_fundamental_forms(spec: &MapSpec, g: &Su2, dir: Direction, fd: FdConfig) -> Result<(CMat, CMat), GeometryError> {
    let j = jet(spec, g, dir, fd)?;
    Ok(hk_from_jet(&j))
}

fn hk_from_jet(j: &Jet) -> (CMat, CMat) {
    let ps = linalg::identity(j.p.nrows()) - &j.p;
    let h = -(&j.p * &j.dp * &ps);
    let k = &ps * &j.dp * &j.p;
    (h, k)
}

/// Local data at one point: projection, fibre frame and both jets.
pub struct PointData {
    pub point: GrassPoint,
    pub jets: [Jet; 2],
}

pub fn point_data(spec: &MapSpec, g: &Su2, fd: FdConfig) -> Result<PointData, GeometryError> {
    let point = evaluate(spec, g)?;
    let j1 = jet_at(spec, g, Direction::Xi1, fd, &point.p_q)?;
    let j2 = jet_at(spec, g, Direction::Xi2, fd, &point.p_q)?;
    Ok(PointData { point, jets: [j1, j2] })
}

impl PointData {
    /// `A = (1/κ) Σ H_ξ K_ξ` on W (supported on the quotient fibre).
    pub fn mean_curvature(&self, kappa: f64) -> CMat {
        let mut a = CMat::zeros(self.point.p_q.nrows(), self.point.p_q.nrows());
        for j in &self.jets {
            let (h, k) = hk_from_jet(j);
            a += h * k;
        }
        a * c(1.0 / kappa, 0.0)
    }

    /// Operator `w ↦ Δt_w`.
    pub fn laplacian(&self, kappa: f64) -> CMat {
        let p = &self.point.p_q;
        let mut l = CMat::zeros(p.nrows(), p.nrows());
        for j in &self.jets {
            l += p * &j.dp * &j.dp + p * &j.d2p;
        }
        l * c(-1.0 / kappa, 0.0)
    }

    /// Pull-back metric per unit ξ: `G_ij = Re tr(H_i† H_j)`.
    pub fn pullback_metric(&self) -> [[f64; 2]; 2] {
        let hs: Vec<CMat> = self.jets.iter().map(|j| hk_from_jet(j).0).collect();
        let mut g = [[0.0; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                g[i][k] = frob(&hs[i], &hs[k]);
            }
        }
        g
    }

    /// Curvature `H_{ξ₂}K_{ξ₁} − H_{ξ₁}K_{ξ₂}` of the pulled-back quotient bundle.
    pub fn gauss_codazzi_curvature(&self) -> CMat {
        let (h1, k1) = hk_from_jet(&self.jets[0]);
        let (h2, k2) = hk_from_jet(&self.jets[1]);
        h2 * k1 - h1 * k2
    }

    /// Restriction of a W-operator to the quotient fibre in the orthonormal fibre frame.
    pub fn on_fibre(&self, m: &CMat) -> CMat {
        self.point.fibre.adjoint() * m * &self.point.fibre
    }
}

/// q×q mean curvature operator in the orthonormal fibre frame.
pub fn mean_curvature_operator(spec: &MapSpec, g: &Su2, kappa: f64, fd: FdConfig) -> Result<CMat, GeometryError> {
    let d = point_data(spec, g, fd)?;
    Ok(d.on_fibre(&d.mean_curvature(kappa)))
}

/// `Δt_w` at [g], as a vector of W lying in the quotient fibre.
pub fn covariant_laplacian(spec: &MapSpec, w: &CVec, g: &Su2, kappa: f64, fd: FdConfig) -> Result<CVec, GeometryError> {
    Ok(point_data(spec, g, fd)?.laplacian(kappa) * w)
}

/// Curvature of the pulled-back quotient bundle on the chart (a, b) ↦ g·exp(aξ₁ + bξ₂),
/// read off the holonomy of the square of side `s` centred at [g]. Transport between
/// neighbouring fibres is projection followed by the polar factor.
pub fn holonomy_curvature(spec: &MapSpec, g: &Su2, s: f64, substeps: usize) -> Result<CMat, GeometryError> {
    let at = |a: f64, b: f64| evaluate(spec, &g.mul(&Su2::exp_coords(0.0, a, b)));
    let start = at(0.0, 0.0)?;
    let h = s / 2.0;
    let corners = [(0.0, 0.0), (-h, -h), (h, -h), (h, h), (-h, h), (-h, -h), (0.0, 0.0)];
    let mut frame = start.fibre.clone();
    for w in corners.windows(2) {
        let ((a0, b0), (a1, b1)) = (w[0], w[1]);
        for i in 1..=substeps {
            let t = i as f64 / substeps as f64;
            let p = at(a0 + t * (a1 - a0), b0 + t * (b1 - b0))?.p_q;
            let m = &p * &frame;
            let gram = m.adjoint() * &m;
            frame = m * linalg::spectral_map(&gram, |l| c(1.0 / l.sqrt(), 0.0));
        }
    }
    let hol = start.fibre.adjoint() * &frame;
    // Counter-clockwise holonomy is exp(−s² R(∂a, ∂b)) to leading order.
    let r = (hol.adjoint() - &hol) * c(0.5 / (s * s), 0.0);
    Ok(&start.fibre * r * start.fibre.adjoint())
}

/// Domain metric scale κ: ξ₁, ξ₂ have squared length κ, chosen so that the curvature
/// of the degree-one bundle has unit density. Measured from the finite-difference
/// curvature of the real k = 1 standard map.
pub fn calibrate_metric() -> f64 {
    static KAPPA: OnceLock<f64> = OnceLock::new();
    *KAPPA.get_or_init(|| {
        let ed = eigenspace(1, 0, Mode::Real).expect("k = 1 eigenspace");
        let spec = standard_map(&ed);
        let fd = FdConfig { h: 1e-3, richardson: true };
        let samples = haar_samples(0x006b_6170_7061, 8);
        let total: f64 = samples
            .iter()
            .map(|g| {
                let d = point_data(&spec, g, fd).expect("standard map is regular");
                linalg::op_norm(&d.on_fibre(&d.gauss_codazzi_curvature()))
            })
            .sum();
        total / samples.len() as f64
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LaplaceFit {
    pub mu: f64,
    pub residual: f64,
}

/// Least-squares μ in `Δt_w = μ t_w` over all w and the sample points, and the
/// worst operator-norm residual `|Δ − μP|`.
pub fn fit_laplace_eigenvalue(spec: &MapSpec, kappa: f64, seed: u64, n: usize, fd: FdConfig) -> Result<LaplaceFit, GeometryError> {
    let samples = haar_samples(seed, n);
    let data: Vec<(CMat, CMat)> = samples
        .par_iter()
        .map(|g| point_data(spec, g, fd).map(|d| (d.laplacian(kappa), d.point.p_q.clone())))
        .collect::<Result<_, _>>()?;
    let num: f64 = data.iter().map(|(l, p)| frob(l, p)).sum();
    let den: f64 = data.iter().map(|(_, p)| frob(p, p)).sum();
    let mu = num / den;
    let residual = data.iter().map(|(l, p)| linalg::op_norm(&(l - p * c(mu, 0.0)))).fold(0.0, f64::max);
    Ok(LaplaceFit { mu, residual })
}

/// Tolerances attached to each residual in a [`GeometryReport`].
pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("projection", 1e-12),
        ("gauge_frame", 1e-9),
        ("condition_iii", 1e-9),
        ("trace_t2", 1e-12),
        ("takahashi", 1e-4),
        ("harmonicity", 1e-4),
        ("eh_condition", 1e-4),
        ("nonpositivity", 1e-6),
        ("energy_identity", 1e-4),
        ("hk_symmetry", 1e-6),
        ("gauss_codazzi", 1e-3),
        ("isometry_degree", 1e-4),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub kappa: f64,
    pub mu: f64,
    pub fd: FdConfig,
    /// Degree the map should have; `None` skips the isometry residual.
    pub expected_degree: Option<f64>,
    /// Side of the holonomy square and substeps per edge.
    pub holonomy: (f64, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub sample_count: usize,
    pub residuals: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub passed: BTreeMap<String, bool>,
    pub measured: BTreeMap<String, f64>,
    pub calibration_constant: f64,
    pub mu: f64,
    pub errors: Vec<String>,
}

impl GeometryReport {
    pub fn all_passed(&self) -> bool {
        self.errors.is_empty() && self.passed.values().all(|&b| b)
    }

    pub fn residual(&self, name: &str) -> f64 {
        self.residuals.get(name).copied().unwrap_or(f64::NAN)
    }
}

struct SampleResult {
    r: BTreeMap<&'static str, f64>,
    degree: f64,
    energy: f64,
}

fn fibre_field_factor(spec: &MapSpec) -> f64 {
    match spec.eigendata.mode() {
        Mode::Complex => 2.0,
        Mode::Real => 1.0,
    }
}

fn sample_checks(spec: &MapSpec, g: &Su2, probe: (&CVec, &CVec), opts: &VerifyOptions) -> Result<SampleResult, GeometryError> {
    let ed = &spec.eigendata;
    let n = ed.dim();
    let q = ed.q() as f64;
    let kappa = opts.kappa;
    let mu = opts.mu;
    let d = point_data(spec, g, opts.fd)?;
    let p = &d.point.p_q;
    let ps = linalg::identity(n) - p;
    let mut r = BTreeMap::new();

    r.insert("projection", d.point.invariant_residual());

    // ev ∘ T² ∘ ev* = Id and ev ∘ C ∘ (∇ev*) = 0 at [g].
    let phi = spec.frame(g);
    r.insert("gauge_frame", (phi.adjoint() * &phi - linalg::identity(ed.q())).camax());
    let rho = ed.rho(g);
    let cmat = spec.c();
    let v0 = ed.v0_matrix();
    let mut third: f64 = 0.0;
    for x in [&ed.generators.xi1, &ed.generators.xi2] {
        let m = v0.adjoint() * rho.adjoint() * &cmat * &rho * x * &v0;
        third = third.max(m.camax());
    }
    r.insert("condition_iii", third);

    // Operators scale with μ, so their residuals are reported relative to max(μ, 1).
    let rel = 1.0 / mu.abs().max(1.0);
    let lap = d.laplacian(kappa);
    let a = d.mean_curvature(kappa);
    r.insert("takahashi", rel * linalg::op_norm(&(&lap - p * c(mu, 0.0))));
    r.insert("harmonicity", rel * linalg::op_norm(&(&lap + &a)));
    let a_fib = d.on_fibre(&a);
    let (a_eigs, _) = linalg::hermitian_eigen(&a_fib);
    r.insert("eh_condition", rel * a_eigs.iter().map(|&l| (-l - mu).abs()).fold(0.0, f64::max));
    r.insert("nonpositivity", a_eigs.last().copied().unwrap_or(0.0).max(0.0));

    let gm = d.pullback_metric();
    let energy = (gm[0][0] + gm[1][1]) / kappa;
    let trace_a = a.trace().re;
    r.insert("energy_identity", rel * (energy - q * mu).abs().max((energy + trace_a).abs()));

    // g_Q(H s, t) + g_S(s, K t) with H, K differentiated from separate vector fields.
    let (s_vec, t_vec) = (&ps * probe.0, p * probe.1);
    let scale = s_vec.norm() * t_vec.norm();
    let mut sym: f64 = 0.0;
    for dir in DIRECTIONS {
        let pp = evaluate(spec, &along(g, dir, opts.fd.h))?.p_q;
        let pm = evaluate(spec, &along(g, dir, -opts.fd.h))?.p_q;
        let inv2h = c(1.0 / (2.0 * opts.fd.h), 0.0);
        let id = linalg::identity(n);
        let hs = p * ((&id - &pp) * &s_vec - (&id - &pm) * &s_vec) * inv2h;
        let kt = &ps * (&pp * &t_vec - &pm * &t_vec) * inv2h;
        sym = sym.max((hs.dotc(&t_vec).re + s_vec.dotc(&kt).re).abs() / scale);
    }
    r.insert("hk_symmetry", sym);

    let (side, sub) = opts.holonomy;
    let hol = holonomy_curvature(spec, g, side, sub)?;
    r.insert("gauss_codazzi", linalg::op_norm(&(hol - d.gauss_codazzi_curvature())));

    let f = fibre_field_factor(spec) / kappa;
    let degree = f * (gm[0][0] + gm[1][1]) / 2.0;
    let conformal = (f * (gm[0][0] - gm[1][1]) / 2.0).abs().max((f * gm[0][1]).abs());
    if let Some(k) = opts.expected_degree {
        r.insert("isometry_degree", (degree - k).abs() + conformal);
    }
    Ok(SampleResult { r, degree, energy })
}

/// Run every pointwise identity at `n_samples` seeded Haar points.
pub fn verify_spec_with(spec: &MapSpec, seed: u64, n_samples: usize, opts: &VerifyOptions) -> GeometryReport {
    let samples = haar_samples(seed, n_samples);
    let n = spec.eigendata.dim();
    let probes = haar_samples(seed ^ 0x9e37_79b9_7f4a_7c15, 2 * n_samples);
    let results: Vec<Result<SampleResult, GeometryError>> = samples
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let u = spec.eigendata.rho(&probes[2 * i]).column(0).into_owned();
            let v = spec.eigendata.rho(&probes[2 * i + 1]).column(n - 1).into_owned();
            sample_checks(spec, g, (&u, &v), opts)
        })
        .collect();
    let tolerances = default_tolerances();
    let mut residuals: BTreeMap<String, f64> = BTreeMap::new();
    let mut errors = Vec::new();
    let (mut deg_sum, mut energy_sum, mut ok) = (0.0, 0.0, 0usize);
    for res in results {
        match res {
            Ok(s) => {
                for (k, v) in s.r {
                    let e = residuals.entry(k.to_string()).or_insert(0.0);
                    *e = e.max(if v.is_finite() { v } else { f64::INFINITY });
                }
                deg_sum += s.degree;
                energy_sum += s.energy;
                ok += 1;
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    residuals.insert("trace_t2".into(), (spec.trace_t2() - n as f64).abs());
    let passed = residuals
        .iter()
        .map(|(k, v)| (k.clone(), *v <= tolerances.get(k).copied().unwrap_or(f64::INFINITY)))
        .collect();
    let mut measured = BTreeMap::new();
    if ok > 0 {
        measured.insert("isometry_degree".to_string(), deg_sum / ok as f64);
        measured.insert("energy_density".to_string(), energy_sum / ok as f64);
    }
    GeometryReport {
        sample_count: ok,
        residuals,
        tolerances,
        passed,
        measured,
        calibration_constant: opts.kappa,
        mu: opts.mu,
        errors,
    }
}

/// Default options for a spec: calibrated κ, μ fitted on the standard map of the
/// same eigenspace, expected degree k when l = 0.
pub fn default_options(spec: &MapSpec, fd: FdConfig) -> Result<VerifyOptions, GeometryError> {
    let kappa = calibrate_metric();
    let ed = &spec.eigendata;
    let mu = match ed.mu {
        Some(mu) => mu,
        None => fit_laplace_eigenvalue(&standard_map(ed), kappa, 7, 8, fd)?.mu,
    };
    let expected_degree = (ed.l == 0).then_some(ed.bundle.k.unsigned_abs() as f64);
    Ok(VerifyOptions { kappa, mu, fd, expected_degree, holonomy: (1e-2, 4) })
}

pub fn verify_spec(spec: &MapSpec, seed: u64, n_samples: usize) -> Result<GeometryReport, GeometryError> {
    let opts = default_options(spec, FdConfig::default())?;
    Ok(verify_spec_with(spec, seed, n_samples, &opts))
}
