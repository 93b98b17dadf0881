//! The moduli body `{C ∈ M(W) : Id + C ⪰ 0}` with
//! `M(W) = H₀(W) ∩ (GH(V0,V0) + GH(𝔪V0,V0))^⊥`, its boundary, and the
//! centraliser action that separates gauge from image equivalence.

use crate::endo_space::{gh_span, EndoError, EndoSpace, RealSpan};
use crate::homogeneous_bundle::{check_gauge_condition, EigenspaceData, MapSpec, Mode};
use crate::linalg::{self, c, frob, CMat, CVec};
use crate::rep_su2::{invariant_structure, StructureKind};
use serde::Serialize;

pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum ModuliError {
    #[error("gauge condition fails: |π₀ 𝔪V0| = {0:.3e}")]
    PreconditionFailed(f64),
    #[error("coordinates lie outside the moduli body (λ_min = {0:.3e})")]
    OutsideBody(f64),
    #[error("coordinates are not on the boundary (λ_min = {0:.3e})")]
    NotOnBoundary(f64),
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Endo(#[from] EndoError),
}

#[derive(Clone, Debug)]
pub struct ModuliBody {
    pub eigendata: EigenspaceData,
    /// Orthonormal basis of M(W).
    pub constraint_basis: Vec<CMat>,
    /// Basis the coordinates refer to: `{σ, Jσ}` when the invariant real
    /// structure spans M(W), otherwise the orthonormal basis.
    pub coordinate_basis: Vec<CMat>,
    pub d: usize,
    pub gh_dims: (usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

pub fn constraint_space(ed: &EigenspaceData) -> Result<ModuliBody, ModuliError> {
    let (ok, defect) = check_gauge_condition(ed);
    if !ok {
        return Err(ModuliError::PreconditionFailed(defect));
    }
    let n = ed.dim();
    let j = ed.j.as_ref();
    let gh_vv = gh_span(&ed.v0, &ed.v0, &ed.generators, j, "GH(V0,V0)")?;
    let gh_mv = gh_span(&ed.m_v0(), &ed.v0, &ed.generators, j, "GH(mV0,V0)")?;
    let mut excluded = RealSpan::from_orthonormal(vec![linalg::identity(n) * c(1.0 / (n as f64).sqrt(), 0.0)]);
    for m in gh_vv.span.iter().chain(gh_mv.span.iter()) {
        excluded.try_push(m, 1.0)?;
    }
    let start = excluded.vectors.len();
    for b in EndoSpace::new(ed.mode(), n).basis {
        excluded.try_push(&b, 1.0)?;
    }
    let constraint_basis = excluded.vectors.split_off(start);
    let d = constraint_basis.len();
    let coordinate_basis = real_structure_coordinates(ed, &constraint_basis).unwrap_or_else(|| constraint_basis.clone());
    Ok(ModuliBody { eigendata: ed.clone(), constraint_basis, coordinate_basis, d, gh_dims: (gh_vv.dim, gh_mv.dim) })
}

/// `{σ, Jσ}` on the realified W, if both lie in M(W) and span it.
fn real_structure_coordinates(ed: &EigenspaceData, basis: &[CMat]) -> Option<Vec<CMat>> {
    if ed.mode() != Mode::Real || basis.len() != 2 {
        return None;
    }
    let s = invariant_structure(&ed.irrep);
    if s.kind != StructureKind::Real {
        return None;
    }
    let sigma = s.realified();
    let j_sigma = ed.j.as_ref()? * &sigma;
    let span = RealSpan::from_orthonormal(basis.to_vec());
    for m in [&sigma, &j_sigma] {
        if span.residual(m).norm() > 1e-9 * m.norm() {
            return None;
        }
    }
    Some(vec![sigma, j_sigma])
}

impl ModuliBody {
    /// `Σ cᵢ Bᵢ` over the coordinate basis.
    pub fn c_of(&self, coords: &[f64]) -> Result<CMat, ModuliError> {
        if coords.len() != self.d {
            return Err(ModuliError::DimensionMismatch { expected: self.d, got: coords.len() });
        }
        let n = self.eigendata.dim();
        let mut m = CMat::zeros(n, n);
        for (b, &x) in self.coordinate_basis.iter().zip(coords) {
            m += b * c(x, 0.0);
        }
        Ok(m)
    }

    /// Coordinates of a matrix of M(W) in the coordinate basis.
    pub fn coords_of(&self, m: &CMat) -> Vec<f64> {
        let d = self.d;
        let gram = nalgebra::DMatrix::<f64>::from_fn(d, d, |i, j| frob(&self.coordinate_basis[i], &self.coordinate_basis[j]));
        let rhs = nalgebra::DVector::<f64>::from_fn(d, |i, _| frob(&self.coordinate_basis[i], m));
        gram.lu().solve(&rhs).map(|v| v.iter().copied().collect()).unwrap_or_else(|| vec![f64::NAN; d])
    }

    /// Smallest scale `t` with `λ_min(Id + tC) = 0` along a direction, by bisection.
    pub fn boundary_radius(&self, direction: &[f64]) -> Result<f64, ModuliError> {
        let cm = self.c_of(direction)?;
        let id = linalg::identity(self.eigendata.dim());
        let lam = |t: f64| linalg::min_eigenvalue(&(&id + &cm * c(t, 0.0)));
        let mut hi = 1.0;
        while lam(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Ok(f64::INFINITY);
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if lam(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

pub fn membership(body: &ModuliBody, coords: &[f64]) -> Result<(Membership, f64), ModuliError> {
    let m = linalg::identity(body.eigendata.dim()) + body.c_of(coords)?;
    let lam = linalg::min_eigenvalue(&m);
    let class = if lam > BOUNDARY_TOL {
        Membership::Interior
    } else if lam >= -BOUNDARY_TOL {
        Membership::Boundary
    } else {
        Membership::Outside
    };
    Ok((class, lam))
}

/// `T = sqrt(Id + C)`; boundary points give a semipositive T with a kernel.
pub fn map_from_c(body: &ModuliBody, coords: &[f64]) -> Result<MapSpec, ModuliError> {
    let (class, lam) = membership(body, coords)?;
    if class == Membership::Outside {
        return Err(ModuliError::OutsideBody(lam));
    }
    let t2 = linalg::identity(body.eigendata.dim()) + body.c_of(coords)?;
    // Eigenvalues within the boundary tolerance are exact zeros of T²; taking the
    // square root first would promote 1e-16 round-off to 1e-8 and hide the kernel.
    let t = linalg::spectral_map(&t2, |l| c(if l > BOUNDARY_TOL { l.sqrt() } else { 0.0 }, 0.0));
    Ok(MapSpec::new(body.eigendata.clone(), t))
}

#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    pub c: CMat,
    pub kernel: Vec<CVec>,
    pub kernel_dim: usize,
    /// `(p, m)`: the map lands in Gr_p(ι(𝕂^m)).
    pub reduced_target: (usize, usize),
    /// `(p', N)` with `p' = p + dim Ker T`, the sub-Grassmannian of Gr_{p'}(W).
    pub ambient_target: (usize, usize),
    pub spec: MapSpec,
    /// Fixed space of C when C is an involution (an invariant real form of W).
    pub real_form: Option<Vec<CVec>>,
}

pub fn boundary_analysis(body: &ModuliBody, coords: &[f64]) -> Result<BoundaryPoint, ModuliError> {
    let (class, lam) = membership(body, coords)?;
    if class != Membership::Boundary {
        return Err(ModuliError::NotOnBoundary(lam));
    }
    let n = body.eigendata.dim();
    let cm = body.c_of(coords)?;
    let id = linalg::identity(n);
    let kernel = linalg::kernel_basis(&(&id + &cm), 1e-8);
    let spec = map_from_c(body, coords)?;
    let q = body.eigendata.q();
    let p = spec.m - q;
    let real_form = ((&cm * &cm - &id).norm() < 1e-9).then(|| linalg::range_basis(&(&id + &cm), 1.0));
    Ok(BoundaryPoint {
        kernel_dim: kernel.len(),
        reduced_target: (p, spec.m),
        ambient_target: (p + kernel.len(), n),
        c: cm,
        kernel,
        spec,
        real_form,
    })
}

/// Multiplication by e^{iθ} on W (the U(1) centraliser), realified in real mode.
pub fn centralizer_element(ed: &EigenspaceData, theta: f64) -> CMat {
    let n = ed.dim();
    match &ed.j {
        Some(j) => linalg::identity(n) * c(theta.cos(), 0.0) + j * c(theta.sin(), 0.0),
        None => linalg::identity(n) * c(theta.cos(), theta.sin()),
    }
}

/// Coordinates of `R(θ)⁻¹ C R(θ)`.
pub fn centralizer_action(body: &ModuliBody, theta: f64, coords: &[f64]) -> Result<Vec<f64>, ModuliError> {
    let r = centralizer_element(&body.eigendata, theta);
    let cm = body.c_of(coords)?;
    Ok(body.coords_of(&(r.adjoint() * cm * r)))
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ImageQuotient {
    Point,
    Interval { lo: f64, hi: f64, representatives: Vec<Vec<f64>> },
}

pub fn image_quotient(body: &ModuliBody) -> Result<ImageQuotient, ModuliError> {
    if body.d == 0 {
        return Ok(ImageQuotient::Point);
    }
    if body.d != 2 || body.eigendata.mode() != Mode::Real {
        return Err(ModuliError::Unsupported(format!("centraliser quotient of a {}-dimensional body", body.d)));
    }
    // The quotient is radial only if the centraliser acts by rotations of the
    // coordinate plane and the body is a round disk.
    let theta = 0.3;
    let e1 = centralizer_action(body, theta, &[1.0, 0.0])?;
    let e2 = centralizer_action(body, theta, &[0.0, 1.0])?;
    let orth = (e1[0] * e1[0] + e1[1] * e1[1] - 1.0).abs() + (e1[0] * e2[0] + e1[1] * e2[1]).abs();
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    if orth > 1e-9 || (det - 1.0).abs() > 1e-9 || (e1[0] - 1.0).abs() < 1e-6 {
        return Err(ModuliError::Unsupported("centraliser does not rotate the coordinate plane".into()));
    }
    let r = body.boundary_radius(&[1.0, 0.0])?;
    for phi in [0.7, 2.1, 4.0] {
        if (body.boundary_radius(&[f64::cos(phi), f64::sin(phi)])? - r).abs() > 1e-9 {
            return Err(ModuliError::Unsupported("moduli body is not a round disk".into()));
        }
    }
    let representatives = [0.0, 0.5, 1.0].iter().map(|t| vec![t * r, 0.0]).collect();
    Ok(ImageQuotient::Interval { lo: 0.0, hi: r, representatives })
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeComparison {
    pub equivalent: bool,
    pub range_gap: f64,
    pub operator_gap: f64,
    pub polar_defect: f64,
}

/// Two specs are gauge equivalent iff `ι₁*T₁ι₁ = ψ ι₂*T₂ι₂` for an isometry ψ, and
/// uniqueness of the polar decomposition forces ψ = Id. Both ι-ranges are compared
/// inside W, so the check reduces to equal ranges and equal T.
pub fn compare_gauge(a: &MapSpec, b: &MapSpec, tol: f64) -> GaugeComparison {
    if a.m != b.m || a.t.nrows() != b.t.nrows() {
        return GaugeComparison { equivalent: false, range_gap: f64::INFINITY, operator_gap: f64::INFINITY, polar_defect: f64::INFINITY };
    }
    let range_gap = linalg::op_norm(&(a.iota_projector() - b.iota_projector()));
    // ψ is the unitary polar factor of T_b T_a⁺ on the common range.
    let pinv = linalg::spectral_map(&a.t, |l| c(if l > 1e-10 { 1.0 / l } else { 0.0 }, 0.0));
    let x = &b.t * pinv;
    let xtx = x.adjoint() * &x;
    let inv_sqrt = linalg::spectral_map(&xtx, |l| c(if l > 1e-12 { 1.0 / l.sqrt() } else { 0.0 }, 0.0));
    let psi = &x * inv_sqrt;
    let polar_defect = linalg::op_norm(&(psi - a.iota_projector()));
    let operator_gap = linalg::op_norm(&(&a.t - &b.t));
    GaugeComparison { equivalent: range_gap <= tol && operator_gap <= tol && polar_defect <= tol.sqrt(), range_gap, operator_gap, polar_defect }
}

pub fn gauge_equivalent(a: &MapSpec, b: &MapSpec) -> bool {
    compare_gauge(a, b, 1e-9).equivalent
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann_geometry::evaluate;
    use crate::homogeneous_bundle::{eigenspace, standard_map};
    use crate::rep_su2::haar_samples;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn deg2() -> ModuliBody {
        constraint_space(&eigenspace(2, 0, Mode::Real).unwrap()).unwrap()
    }

    #[test]
    fn rigidity_dimensions() {
        for k in 1..=6 {
            assert_eq!(constraint_space(&eigenspace(k, 0, Mode::Complex).unwrap()).unwrap().d, 0);
        }
        let b1 = constraint_space(&eigenspace(1, 0, Mode::Real).unwrap()).unwrap();
        assert_eq!(b1.d, 0);
        assert_eq!(b1.gh_dims.1, 9);
    }

    #[test]
    fn degree_two_body_is_spanned_by_sigma() {
        let b = deg2();
        assert_eq!(b.d, 2);
        let sigma = &b.coordinate_basis[0];
        assert!((sigma.norm() - 6f64.sqrt()).abs() < 1e-12);
        for m in &b.constraint_basis {
            assert!(m.trace().norm() < 1e-9);
        }
        // σ and Jσ are involutions anticommuting with each other.
        let j_sigma = &b.coordinate_basis[1];
        let id = linalg::identity(6);
        assert!((sigma * sigma - &id).norm() < 1e-12);
        assert!((j_sigma * j_sigma - &id).norm() < 1e-12);
        assert!((sigma * j_sigma + j_sigma * sigma).norm() < 1e-12);
    }

    #[test]
    fn membership_examples() {
        let b = deg2();
        let (cl, lam) = membership(&b, &[0.0, 0.0]).unwrap();
        assert_eq!(cl, Membership::Interior);
        assert!((lam - 1.0).abs() < 1e-12);
        assert_eq!(membership(&b, &[1.0, 0.0]).unwrap().0, Membership::Boundary);
        let (cl, lam) = membership(&b, &[2.0, 0.0]).unwrap();
        assert_eq!(cl, Membership::Outside);
        assert!((lam + 1.0).abs() < 1e-12);
        assert!(matches!(map_from_c(&b, &[1.1, 0.0]), Err(ModuliError::OutsideBody(_))));
    }

    #[test]
    fn standard_map_at_origin_and_trace() {
        let b = deg2();
        let s = map_from_c(&b, &[0.0, 0.0]).unwrap();
        assert!((s.t.clone() - linalg::identity(6)).norm() < 1e-12);
        for coords in [[0.3, -0.2], [0.0, 0.9], [0.6, 0.8]] {
            let s = map_from_c(&b, &coords).unwrap();
            assert!((s.trace_t2() - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_boundary() {
        let b = deg2();
        let bp = boundary_analysis(&b, &[1.0, 0.0]).unwrap();
        assert_eq!(bp.kernel_dim, 3);
        assert_eq!(bp.reduced_target, (1, 3));
        assert_eq!(bp.ambient_target, (4, 6));
        // Kernel of Id + σ is J·W_ℝ, the −1 eigenspace of σ.
        let real_form = bp.real_form.clone().unwrap();
        assert_eq!(real_form.len(), 3);
        let j = b.eigendata.j.clone().unwrap();
        let pk = linalg::projector(&bp.kernel, 6);
        for v in &real_form {
            assert!((&pk * (&j * v) - &j * v).norm() < 1e-10);
        }
        // Fibres stay inside W_ℝ, and the S-line is ρ(g) of the zero-weight real vector.
        let pr = linalg::projector(&real_form, 6);
        let ed = &b.eigendata;
        let zero = ed.lift(&invariant_structure(&ed.irrep).adapted_basis().unwrap()[1]);
        for g in haar_samples(4, 16) {
            let p = evaluate(&bp.spec, &g).unwrap().p_q;
            assert!((&pr * &p - &p).norm() < 1e-9);
            let n = ed.rho(&g) * &zero;
            let expect = &pr - &n * n.adjoint();
            assert!((p - expect).norm() < 1e-9);
        }
        assert!(matches!(boundary_analysis(&b, &[0.5, 0.0]), Err(ModuliError::NotOnBoundary(_))));
    }

    #[test]
    fn every_boundary_angle_degenerates_the_same_way() {
        let b = deg2();
        for i in 0..8 {
            let phi = 2.0 * PI * i as f64 / 8.0;
            let bp = boundary_analysis(&b, &[phi.cos(), phi.sin()]).unwrap();
            assert_eq!(bp.kernel_dim, 3);
            assert!(bp.real_form.is_some());
        }
    }

    #[test]
    fn centralizer_rotates_by_minus_two_theta() {
        let b = deg2();
        for theta in [0.0, PI / 6.0, PI / 4.0, PI / 2.0, PI] {
            let (a, bb) = (0.4, -0.25);
            let out = centralizer_action(&b, theta, &[a, bb]).unwrap();
            let (ct, st) = ((-2.0 * theta).cos(), (-2.0 * theta).sin());
            assert!((out[0] - (ct * a - st * bb)).abs() < 1e-9);
            assert!((out[1] - (st * a + ct * bb)).abs() < 1e-9);
        }
    }

    #[test]
    fn centralizer_image_equivalence() {
        // The rotated C gives the image of the original map under the isometry R(θ)⁻¹.
        let b = deg2();
        let theta = 0.37;
        let coords = [0.5, 0.1];
        let rotated = centralizer_action(&b, theta, &coords).unwrap();
        let s1 = map_from_c(&b, &coords).unwrap();
        let s2 = map_from_c(&b, &rotated).unwrap();
        let r = centralizer_element(&b.eigendata, theta);
        for g in haar_samples(8, 8) {
            let p1 = evaluate(&s1, &g).unwrap().p_q;
            let p2 = evaluate(&s2, &g).unwrap().p_q;
            assert!((r.adjoint() * p1 * &r - p2).norm() < 1e-10);
        }
        assert!(!gauge_equivalent(&s1, &s2));
    }

    #[test]
    fn image_quotients() {
        let b = deg2();
        match image_quotient(&b).unwrap() {
            ImageQuotient::Interval { lo, hi, representatives } => {
                assert_eq!(lo, 0.0);
                assert!((hi - 1.0).abs() < 1e-10);
                let specs: Vec<MapSpec> = representatives.iter().map(|r| map_from_c(&b, r).unwrap()).collect();
                for i in 0..3 {
                    assert!(gauge_equivalent(&specs[i], &specs[i]));
                    for j in 0..i {
                        assert!(!gauge_equivalent(&specs[i], &specs[j]));
                    }
                }
            }
            other => panic!("unexpected {other:?}"),
        }
        let b1 = constraint_space(&eigenspace(1, 0, Mode::Real).unwrap()).unwrap();
        assert!(matches!(image_quotient(&b1).unwrap(), ImageQuotient::Point));
        let std = standard_map(&b.eigendata);
        assert!(!gauge_equivalent(&std, &map_from_c(&b, &[0.5, 0.0]).unwrap()));
    }

    #[test]
    fn frame_identity_across_the_body() {
        let b = deg2();
        for coords in [[0.0, 0.0], [0.5, 0.0], [0.0, 0.9], [1.0, 0.0]] {
            let s = map_from_c(&b, &coords).unwrap();
            for g in haar_samples(9, 64) {
                let phi = s.frame(&g);
                assert!((phi.adjoint() * phi - linalg::identity(2)).camax() < 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn disk_predicate(a in -1.2f64..1.2, bb in -1.2f64..1.2) {
            let b = deg2();
            let r2 = a * a + bb * bb;
            prop_assume!((r2 - 1.0).abs() > 1e-8);
            let (cl, lam) = membership(&b, &[a, bb]).unwrap();
            prop_assert!((lam - (1.0 - r2.sqrt())).abs() < 1e-12);
            prop_assert_eq!(cl == Membership::Interior, r2 < 1.0);
        }

        #[test]
        fn convexity(a in prop::array::uniform2(-0.7f64..0.7), bb in prop::array::uniform2(-0.7f64..0.7)) {
            let b = deg2();
            prop_assume!(membership(&b, &a).unwrap().0 == Membership::Interior);
            prop_assume!(membership(&b, &bb).unwrap().0 == Membership::Interior);
            for i in 0..=16 {
                let t = i as f64 / 16.0;
                let x = [a[0] * (1.0 - t) + bb[0] * t, a[1] * (1.0 - t) + bb[1] * t];
                prop_assert_eq!(membership(&b, &x).unwrap().0, Membership::Interior);
            }
        }

        #[test]
        fn bisection_finds_unit_circle(phi in 0.0f64..(2.0 * PI), scale in 0.1f64..3.0) {
            let b = deg2();
            let r = b.boundary_radius(&[scale * phi.cos(), scale * phi.sin()]).unwrap();
            prop_assert!((r * scale - 1.0).abs() < 1e-10);
        }
    }
}
