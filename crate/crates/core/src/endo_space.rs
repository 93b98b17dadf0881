//! Hermitian / symmetric endomorphisms of W with the pairing `(A, B) = tr AB`,
//! G-submodules generated by the operators H(u, v), and Casimir-based
//! isotypic splitting.

use crate::homogeneous_bundle::Mode;
use crate::linalg::{self, c, frob, CMat, CVec};
use crate::rep_su2::LieGenerators;
use serde::Serialize;

/// Singular values below this fraction of the reference scale count as zero.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EndoError {
    #[error("rank decision unstable: relative residual {ratio:.3e} lies within a decade of the tolerance {tol:.1e}")]
    RankUnstable { ratio: f64, tol: f64 },
    #[error("Casimir eigenvalue {value:.6} is not separated from the representation lattice")]
    CasimirDegenerate { value: f64 },
    #[error("normal decomposition stalled at dimension {reached} of {total}")]
    NonExhaustive { reached: usize, total: usize },
}

#[derive(Clone, Debug)]
pub struct EndoSpace {
    pub mode: Mode,
    pub ambient_dim: usize,
    pub basis: Vec<CMat>,
    pub traceless_sub: Vec<CMat>,
}

impl EndoSpace {
    pub fn new(mode: Mode, n: usize) -> Self {
        let mut basis = Vec::new();
        let unit = |i: usize, j: usize, z| {
            let mut m = CMat::zeros(n, n);
            m[(i, j)] = z;
            m
        };
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            basis.push(unit(i, i, c(1.0, 0.0)));
            for j in (i + 1)..n {
                basis.push(unit(i, j, c(r, 0.0)) + unit(j, i, c(r, 0.0)));
                if mode == Mode::Complex {
                    basis.push(unit(i, j, c(0.0, r)) + unit(j, i, c(0.0, -r)));
                }
            }
        }
        // Traceless part: off-diagonal elements plus an orthonormal basis of
        // trace-free diagonals built by Gram–Schmidt against the identity.
        let id = linalg::identity(n) * c(1.0 / (n as f64).sqrt(), 0.0);
        let mut traceless = RealSpan::from_orthonormal(vec![id]);
        for b in &basis {
            traceless.try_push(b, 1.0).ok();
        }
        let traceless_sub = traceless.vectors.split_off(1);
        EndoSpace { mode, ambient_dim: n, basis, traceless_sub }
    }

    pub fn real_dim(&self) -> usize {
        self.basis.len()
    }
}

/// `H(u, v) = ½(u v† + v u†)`; in real mode all entries are real.
pub fn h_pair(u: &CVec, v: &CVec) -> CMat {
    (u * v.adjoint() + v * u.adjoint()).scale(0.5)
}

/// `(A, B)_H = tr AB` for Hermitian arguments.
pub fn pairing(a: &CMat, b: &CMat) -> f64 {
    frob(a, b)
}

/// Orthonormal real span of Hermitian matrices under the Frobenius pairing.
#[derive(Clone, Debug, Default)]
pub struct RealSpan {
    pub vectors: Vec<CMat>,
}

impl RealSpan {
    pub fn from_orthonormal(vectors: Vec<CMat>) -> Self {
        RealSpan { vectors }
    }

    pub fn project(&self, m: &CMat) -> CMat {
        let mut out = m.clone() * c(0.0, 0.0);
        for b in &self.vectors {
            out += b * c(frob(b, m), 0.0);
        }
        out
    }

    pub fn residual(&self, m: &CMat) -> CMat {
        let mut r = m.clone();
        for _ in 0..2 {
            for b in &self.vectors {
                let coef = frob(b, &r);
                r -= b * c(coef, 0.0);
            }
        }
        r
    }

    /// Append the new direction of `m` if its residual is clearly nonzero
    /// relative to `scale`; returns whether the span grew.
    pub fn try_push(&mut self, m: &CMat, scale: f64) -> Result<bool, EndoError> {
        let r = self.residual(m);
        let n = r.norm();
        let ratio = n / scale;
        if ratio > 10.0 * RANK_TOL {
            self.vectors.push(r / c(n, 0.0));
            Ok(true)
        } else if ratio < 0.1 * RANK_TOL {
            Ok(false)
        } else {
            Err(EndoError::RankUnstable { ratio, tol: RANK_TOL })
        }
    }
}

#[derive(Clone, Debug)]
pub struct SubmoduleBasis {
    pub span: Vec<CMat>,
    pub dim: usize,
    pub generated_from: String,
}

impl SubmoduleBasis {
    pub fn as_span(&self) -> RealSpan {
        RealSpan::from_orthonormal(self.span.clone())
    }

    /// Largest norm of `[ρ(ξ), B]` outside the span.
    pub fn closure_defect(&self, generators: &LieGenerators) -> f64 {
        let s = self.as_span();
        let mut worst: f64 = 0.0;
        for b in &self.span {
            for x in generators.all() {
                worst = worst.max(s.residual(&linalg::commutator(x, b)).norm());
            }
        }
        worst
    }
}

/// Smallest ad-invariant real subspace of H(W) containing `seed`.
pub fn module_closure(seed: &[CMat], generators: &LieGenerators, label: &str) -> Result<SubmoduleBasis, EndoError> {
    let mut span = RealSpan::default();
    let seed_scale = seed.iter().map(|m| m.norm()).fold(0.0, f64::max);
    if seed_scale > 0.0 {
        for m in seed {
            span.try_push(m, seed_scale)?;
        }
    }
    // Orthonormal B keeps |[X, B]| ≤ 2|X|_op, so that is the natural scale.
    let gen_scale = 2.0 * generators.all().iter().map(|x| linalg::op_norm(x)).fold(0.0, f64::max);
    let mut done = 0;
    while done < span.vectors.len() {
        let b = span.vectors[done].clone();
        for x in generators.all() {
            span.try_push(&linalg::commutator(x, &b), gen_scale)?;
        }
        done += 1;
    }
    let dim = span.vectors.len();
    Ok(SubmoduleBasis { span: span.vectors, dim, generated_from: label.to_string() })
}

/// Seeds `H(u, v)` and `H(u, iv)` (complex) or `H(u, v)` and `H(Ju, v)` (real) for
/// `u`, `v` running over bases of U and V.
pub fn gh_seeds(u_basis: &[CVec], v_basis: &[CVec], j: Option<&CMat>) -> Vec<CMat> {
    let mut seeds = Vec::new();
    for u in u_basis {
        for v in v_basis {
            seeds.push(h_pair(u, v));
            match j {
                Some(j) => seeds.push(h_pair(&(j * u), v)),
                None => seeds.push(h_pair(u, &(v * c(0.0, 1.0)))),
            }
        }
    }
    seeds
}

pub fn gh_span(
    u_basis: &[CVec],
    v_basis: &[CVec],
    generators: &LieGenerators,
    j: Option<&CMat>,
    label: &str,
) -> Result<SubmoduleBasis, EndoError> {
    module_closure(&gh_seeds(u_basis, v_basis, j), generators, label)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsotypicComponent {
    pub highest_weight: usize,
    pub dim: usize,
    pub multiplicity: usize,
    /// Copies containing a U(1)-fixed vector.
    pub class_one: usize,
}

/// Gram matrix of `X ↦ Σ_a ⟨[ξ_a, B_i], [ξ_a, B_j]⟩` over the chosen generators.
fn ad_gram(span: &[CMat], gens: &[&CMat]) -> CMat {
    let d = span.len();
    let images: Vec<Vec<CMat>> = gens.iter().map(|x| span.iter().map(|b| linalg::commutator(x, b)).collect()).collect();
    CMat::from_fn(d, d, |i, j| {
        let s: f64 = images.iter().map(|im| frob(&im[i], &im[j])).sum();
        c(s, 0.0)
    })
}

/// Split an ad-closed span by the Casimir `−Σ ad(X)²`, whose eigenvalue on the
/// irreducible of highest weight w is w(w+2).
pub fn isotypic_decompose(span: &[CMat], generators: &LieGenerators) -> Result<Vec<IsotypicComponent>, EndoError> {
    if span.is_empty() {
        return Ok(Vec::new());
    }
    let casimir = ad_gram(span, &generators.all());
    let (vals, vecs) = linalg::hermitian_eigen(&casimir);
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &lam) in vals.iter().enumerate() {
        let w = ((1.0 + lam.max(0.0)).sqrt() - 1.0).round() as usize;
        let target = (w * (w + 2)) as f64;
        if (lam - target).abs() > 1e-6 {
            return Err(EndoError::CasimirDegenerate { value: lam });
        }
        match groups.iter_mut().find(|(gw, _)| *gw == w) {
            Some((_, idx)) => idx.push(i),
            None => groups.push((w, vec![i])),
        }
    }
    let mut out = Vec::new();
    for (w, idx) in groups {
        let size = idx.len();
        if size % (w + 1) != 0 {
            return Err(EndoError::CasimirDegenerate { value: vals[idx[0]] });
        }
        // Zero-weight part of the component: kernel of ad ζ restricted to it.
        let comp: Vec<CMat> = idx
            .iter()
            .map(|&col| {
                let mut m = span[0].clone() * c(0.0, 0.0);
                for (b, coef) in span.iter().zip(vecs.column(col).iter()) {
                    m += b * c(coef.re, 0.0);
                }
                m
            })
            .collect();
        let z = ad_gram(&comp, &[&generators.zeta]);
        let zero_weight = linalg::hermitian_eigen(&z).0.iter().filter(|&&l| l.abs() < 1e-6).count();
        out.push(IsotypicComponent { highest_weight: w, dim: w + 1, multiplicity: size / (w + 1), class_one: zero_weight });
    }
    out.sort_by_key(|c| std::cmp::Reverse(c.highest_weight));
    Ok(out)
}

pub fn class_one_count(span: &[CMat], generators: &LieGenerators) -> Result<usize, EndoError> {
    Ok(isotypic_decompose(span, generators)?.iter().map(|c| c.class_one).sum())
}

/// Stages V0, Im B₁, …: each is 𝔪 applied to the previous stage, minus all earlier stages.
pub fn normal_decomposition(n: usize, v0: &[CVec], generators: &LieGenerators) -> Result<Vec<Vec<CVec>>, EndoError> {
    let mut stages = vec![linalg::orthonormalize(v0, 1e-10)];
    let mut all: Vec<CVec> = stages[0].clone();
    loop {
        let prev = stages.last().unwrap();
        let mut next: Vec<CVec> = Vec::new();
        for v in prev {
            for x in [&generators.xi1, &generators.xi2] {
                let r = linalg::residual(&linalg::residual(&(x * v), &all), &next);
                let nr = r.norm();
                if nr > 1e-9 {
                    next.push(r / c(nr, 0.0));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        all.extend(next.iter().cloned());
        stages.push(next);
    }
    if all.len() != n {
        return Err(EndoError::NonExhaustive { reached: all.len(), total: n });
    }
    Ok(stages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous_bundle::eigenspace;
    use crate::rep_su2::{build_irrep, realify};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, complex: bool) -> CVec {
        CVec::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), if complex { rng.random_range(-1.0..1.0) } else { 0.0 }))
    }

    fn random_herm(rng: &mut ChaCha8Rng, n: usize, complex: bool) -> CMat {
        let a = CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), if complex { rng.random_range(-1.0..1.0) } else { 0.0 }));
        linalg::hermitian_part(&a)
    }

    #[test]
    fn endo_space_dimensions() {
        for n in 1..7 {
            let h = EndoSpace::new(Mode::Complex, n);
            assert_eq!(h.real_dim(), n * n);
            assert_eq!(h.traceless_sub.len(), n * n - 1);
            let s = EndoSpace::new(Mode::Real, 2 * n);
            assert_eq!(s.real_dim(), n * (2 * n + 1));
            for (i, a) in s.basis.iter().enumerate() {
                for (j, b) in s.basis.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((pairing(a, b) - want).abs() < 1e-12);
                }
            }
            for a in &h.traceless_sub {
                assert!(a.trace().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn h_pair_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e1 = CVec::from_fn(3, |i, _| c(if i == 0 { 1.0 } else { 0.0 }, 0.0));
        assert!((h_pair(&e1, &e1) - &e1 * e1.adjoint()).norm() < 1e-15);
        for _ in 0..10 {
            let (u, v) = (random_vec(&mut rng, 4, true), random_vec(&mut rng, 4, true));
            let b = random_herm(&mut rng, 4, true);
            let lhs = pairing(&b, &h_pair(&u, &v));
            let rhs = 0.5 * ((&b * &u).dotc(&v).re + (&b * &v).dotc(&u).re);
            assert!((lhs - rhs).abs() < 1e-12);
            assert_eq!(h_pair(&u, &v), h_pair(&v, &u));
        }
    }

    #[test]
    fn complex_gh_of_lowest_line_is_everything() {
        for k in 1..=6 {
            let ed = eigenspace(k, 0, Mode::Complex).unwrap();
            let span = gh_span(&ed.v0, &ed.v0, &ed.generators, None, "GH(V0,V0)").unwrap();
            assert_eq!(span.dim, ((k + 1) * (k + 1)) as usize, "k={k}");
        }
    }

    #[test]
    fn real_degree_one_gh_is_traceless_part() {
        let ed = eigenspace(1, 0, Mode::Real).unwrap();
        let c1 = ed.m_v0();
        let span = gh_span(&c1, &ed.v0, &ed.generators, ed.j.as_ref(), "GH(C1,C-1)").unwrap();
        assert_eq!(span.dim, 9);
        for b in &span.span {
            assert!(b.trace().norm() < 1e-10);
        }
    }

    #[test]
    fn identity_seed_closes_immediately() {
        let g = build_irrep(3).generators();
        let span = module_closure(&[linalg::identity(4)], &g, "Id").unwrap();
        assert_eq!(span.dim, 1);
        assert!(gh_span(&[], &[CVec::zeros(4)], &g, None, "empty").unwrap().dim == 0);
    }

    #[test]
    fn gh_contains_identity_component() {
        // (Id, H(v, v'))_H = Re(v, v'), so projecting Id onto GH(V0,V0) keeps that pairing.
        let ed = eigenspace(2, 1, Mode::Complex).unwrap();
        let span = gh_span(&ed.v0, &ed.v0, &ed.generators, None, "GH(V0,V0)").unwrap();
        let p = span.as_span().project(&linalg::identity(ed.dim()));
        let v = &ed.v0[0];
        assert!((pairing(&p, &h_pair(v, v)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn isotypic_tables() {
        let r4 = realify(&build_irrep(1));
        let s = EndoSpace::new(Mode::Real, 4);
        let t = isotypic_decompose(&s.basis, &r4.generators).unwrap();
        assert_eq!(
            t,
            vec![
                IsotypicComponent { highest_weight: 2, dim: 3, multiplicity: 3, class_one: 3 },
                IsotypicComponent { highest_weight: 0, dim: 1, multiplicity: 1, class_one: 1 },
            ]
        );
        let r6 = realify(&build_irrep(2));
        let s6 = EndoSpace::new(Mode::Real, 6);
        let t6 = isotypic_decompose(&s6.basis, &r6.generators).unwrap();
        let summary: Vec<(usize, usize)> = t6.iter().map(|c| (c.dim, c.multiplicity)).collect();
        assert_eq!(summary, vec![(5, 3), (3, 1), (1, 3)]);
        assert_eq!(class_one_count(&s6.traceless_sub, &r6.generators).unwrap(), 6);
        let g1 = build_irrep(1).generators();
        let t1 = isotypic_decompose(&EndoSpace::new(Mode::Complex, 2).basis, &g1).unwrap();
        let summary: Vec<(usize, usize)> = t1.iter().map(|c| (c.dim, c.multiplicity)).collect();
        assert_eq!(summary, vec![(3, 1), (1, 1)]);
        assert_eq!(class_one_count(&[linalg::identity(2)], &g1).unwrap(), 1);
    }

    #[test]
    fn complex_endomorphisms_are_class_one() {
        for k in 1..=5usize {
            let g = build_irrep(k).generators();
            let t = isotypic_decompose(&EndoSpace::new(Mode::Complex, k + 1).basis, &g).unwrap();
            let summands: usize = t.iter().map(|c| c.multiplicity).sum();
            assert_eq!(summands, k + 1);
            assert_eq!(class_one_count(&EndoSpace::new(Mode::Complex, k + 1).basis, &g).unwrap(), summands);
        }
    }

    #[test]
    fn non_closed_span_is_rejected() {
        // A single off-diagonal direction is not ad-closed, so its Casimir
        // compression lands off the w(w+2) lattice.
        let g = build_irrep(2).generators();
        let mut m = CMat::zeros(3, 3);
        m[(0, 1)] = c(0.3, 0.0);
        m[(1, 0)] = c(0.3, 0.0);
        m[(1, 1)] = c(1.0, 0.0);
        m /= c(m.norm(), 0.0);
        assert!(matches!(isotypic_decompose(&[m], &g), Err(EndoError::CasimirDegenerate { .. })));
    }

    #[test]
    fn ill_conditioned_seed_is_flagged() {
        let g = build_irrep(1).generators();
        let a = linalg::identity(2);
        let mut b = a.clone();
        b[(0, 1)] = c(1e-9, 0.0);
        b[(1, 0)] = c(1e-9, 0.0);
        assert!(matches!(module_closure(&[a, b], &g, "x"), Err(EndoError::RankUnstable { .. })));
    }

    #[test]
    fn normal_decomposition_examples() {
        let ed = eigenspace(2, 0, Mode::Complex).unwrap();
        let st = normal_decomposition(3, &ed.v0, &ed.generators).unwrap();
        let dims: Vec<usize> = st.iter().map(|s| s.len()).collect();
        assert_eq!(dims, vec![1, 1, 1]);
        // stage weights −2, 0, 2
        for (stage, w) in st.iter().zip([-2.0, 0.0, 2.0]) {
            let v = &stage[0];
            assert!((&ed.irrep.h * v - v * c(w, 0.0)).norm() < 1e-12);
        }
        let ed = eigenspace(1, 0, Mode::Complex).unwrap();
        let st = normal_decomposition(2, &ed.v0, &ed.generators).unwrap();
        assert_eq!(st.len(), 2);
        assert!((st[1][0][0].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normal_decomposition_detects_reducible_input() {
        // W = S¹ ⊕ S¹ is not irreducible; V0 inside the first copy never reaches the second.
        let g = build_irrep(1).generators();
        let block = |m: &CMat| {
            let mut out = CMat::zeros(4, 4);
            out.view_mut((0, 0), (2, 2)).copy_from(m);
            out.view_mut((2, 2), (2, 2)).copy_from(m);
            out
        };
        let g2 = LieGenerators { xi1: block(&g.xi1), xi2: block(&g.xi2), zeta: block(&g.zeta) };
        let mut v = CVec::zeros(4);
        v[1] = c(1.0, 0.0);
        assert_eq!(normal_decomposition(4, &[v], &g2), Err(EndoError::NonExhaustive { reached: 2, total: 4 }));
    }

    proptest! {
        #[test]
        fn stages_exhaust_and_are_orthogonal(k in 1i64..7, l in 0usize..3) {
            let ed = eigenspace(k, l, Mode::Complex).unwrap();
            let st = normal_decomposition(ed.dim(), &ed.v0, &ed.generators).unwrap();
            let total: usize = st.iter().map(|s| s.len()).sum();
            prop_assert_eq!(total, ed.dim());
            let flat: Vec<&CVec> = st.iter().flatten().collect();
            for i in 0..flat.len() {
                for j in 0..i {
                    prop_assert!(flat[i].dotc(flat[j]).norm() < 1e-10);
                }
            }
            // each stage is a sum of weight spaces: H-invariant
            for s in &st {
                for v in s {
                    let hv = &ed.irrep.h * v;
                    prop_assert!(linalg::residual(&hv, s).norm() < 1e-10);
                }
            }
        }

        #[test]
        fn closure_is_seed_order_independent(k in 1i64..4, l in 0usize..2, seed in 0u64..100) {
            let ed = eigenspace(k, l, Mode::Complex).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let seeds: Vec<CMat> = (0..3).map(|_| {
                let u = random_vec(&mut rng, ed.dim(), true);
                h_pair(&u, &ed.v0[0])
            }).collect();
            let a = module_closure(&seeds, &ed.generators, "a").unwrap();
            let mut rev = seeds.clone();
            rev.reverse();
            let b = module_closure(&rev, &ed.generators, "b").unwrap();
            prop_assert_eq!(a.dim, b.dim);
            let sb = b.as_span();
            for m in &a.span {
                prop_assert!(sb.residual(m).norm() < 1e-8);
            }
            prop_assert!(a.closure_defect(&ed.generators) < 1e-9);
        }

        #[test]
        fn isotypic_dims_add_up(k in 1usize..6) {
            let g = build_irrep(k).generators();
            let space = EndoSpace::new(Mode::Complex, k + 1);
            let t = isotypic_decompose(&space.basis, &g).unwrap();
            let total: usize = t.iter().map(|c| c.dim * c.multiplicity).sum();
            prop_assert_eq!(total, space.real_dim());
        }
    }
}
