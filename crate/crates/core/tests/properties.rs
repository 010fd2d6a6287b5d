//! Randomised invariants of the calculus, the curvature code and the models.

use std::sync::OnceLock;

use hkbundle_core::curvature::riemann_ricci_scalar;
use hkbundle_core::einstein_ode::{exponential_lambda, system_residual};
use hkbundle_core::exterior::vector_field;
use hkbundle_core::reduction::{
    build_lift, example1_base, example1_fibre, hkqk_inverse, level_set_restrict, quotient_frame, ActionConstants,
    ActionKind, InverseData, QuotientFrame,
};
use hkbundle_core::spaces::{build_model, flat_base, gh_linear_example, quaternion_residual, BundleKind};
use hkbundle_core::{ChartPoint, Field, JetMatrix, KFormField, MetricField, ProfileSet, ScalarField};
use proptest::prelude::*;

/// `c · sin(⟨w, x⟩ + φ)`.
fn wave(dim: usize, w: Vec<f64>, phi: f64, c: f64) -> ScalarField {
    Field::new(dim, move |p: &ChartPoint| {
        let mut arg = p.constant(phi);
        for (i, wi) in w.iter().enumerate().take(dim) {
            arg = &arg + &(&p.lift(i) * *wi);
        }
        Ok(&arg.sin() * c)
    })
}

/// Parameters for one wave coefficient in dimension ≤ 6.
fn wave_params() -> impl Strategy<Value = (Vec<f64>, f64, f64)> {
    (prop::collection::vec(-1.0..1.0f64, 6), -1.0..1.0f64, 0.2..1.5f64)
}

fn form(dim: usize, degree: usize, coeffs: &[(Vec<f64>, f64, f64)]) -> KFormField {
    let idx: Vec<Vec<usize>> = match degree {
        1 => (0..dim).map(|i| vec![i]).collect(),
        _ => (0..dim).flat_map(|i| ((i + 1)..dim).map(move |j| vec![i, j])).collect(),
    };
    let terms = idx
        .into_iter()
        .zip(coeffs.iter().cycle())
        .map(|(i, (w, phi, c))| (i, wave(dim, w.clone(), *phi, *c)))
        .collect();
    KFormField::from_coeffs(dim, degree, terms).unwrap()
}

fn point(dim: usize) -> impl Strategy<Value = ChartPoint> {
    prop::collection::vec(-1.0..1.0f64, dim).prop_map(|c| ChartPoint::new(c).unwrap())
}

/// `δ_ij + ε·(symmetric waves)`, positive for small `ε`.
fn perturbed_metric(dim: usize, eps: f64, coeffs: Vec<(Vec<f64>, f64, f64)>) -> MetricField {
    let fields: Vec<ScalarField> = coeffs.iter().map(|(w, p, c)| wave(dim, w.clone(), *p, *c)).collect();
    Field::new(dim, move |p: &ChartPoint| {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let k = (i.min(j) * dim + i.max(j)) % fields.len();
                let mut e = &fields[k].eval(p)? * eps;
                if i == j {
                    e = &e + 1.0;
                }
                entries.push(e);
            }
        }
        JetMatrix::symmetric(dim, entries)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn d_squared_vanishes(
        dim in 4usize..7,
        degree in 1usize..3,
        coeffs in prop::collection::vec(wave_params(), 4),
        seed in prop::collection::vec(-1.0..1.0f64, 6),
    ) {
        let a = form(dim, degree, &coeffs);
        let p = ChartPoint::new(seed[..dim].to_vec()).unwrap();
        let dd = a.d().unwrap().d().unwrap().eval(&p).unwrap();
        prop_assert!(dd.max_abs() < 1e-12);
    }

    #[test]
    fn d_is_a_graded_derivation(
        ca in prop::collection::vec(wave_params(), 3),
        cb in prop::collection::vec(wave_params(), 3),
        degree in 1usize..3,
        p in point(5),
    ) {
        let a = form(5, degree, &ca);
        let b = form(5, 1, &cb);
        let lhs = a.wedge(&b).unwrap().d().unwrap();
        let sign = if degree % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = a.d().unwrap().wedge(&b).unwrap().add(&a.wedge(&b.d().unwrap()).unwrap().scale_f64(sign)).unwrap();
        prop_assert!(lhs.eval(&p).unwrap().sub(&rhs.eval(&p).unwrap()).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn cartan_formula(
        ca in prop::collection::vec(wave_params(), 3),
        cx in prop::collection::vec(wave_params(), 4),
        p in point(4),
    ) {
        let a = form(4, 1, &ca);
        let x = vector_field(cx.iter().map(|(w, ph, c)| wave(4, w.clone(), *ph, *c)).collect()).unwrap();
        let lie = a.lie(&x).unwrap().eval(&p).unwrap();
        let cartan = a.d().unwrap().interior(&x).unwrap().add(&a.interior(&x).unwrap().d().unwrap()).unwrap();
        prop_assert!(lie.sub(&cartan.eval(&p).unwrap()).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn curvature_symmetries(
        dim in 2usize..5,
        eps in 0.0..0.2f64,
        coeffs in prop::collection::vec(wave_params(), 5),
        p in point(4),
    ) {
        let g = perturbed_metric(dim, eps, coeffs);
        let q = ChartPoint::new(p.coords()[..dim].to_vec()).unwrap();
        let c = riemann_ricci_scalar(&g.eval(&q).unwrap()).unwrap();
        prop_assert!(c.bianchi_residual() < 1e-11);
        let ric = c.ricci();
        prop_assert!((ric - ric.transpose()).amax() < 1e-11);
        let g = c.metric();
        let lower = |l: usize, i: usize, j: usize, k: usize| (0..dim).map(|m| g[(l, m)] * c.riemann(m, i, j, k)).sum::<f64>();
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        prop_assert!((c.riemann(l, i, j, k) + c.riemann(l, j, i, k)).abs() < 1e-11);
                        prop_assert!((lower(l, i, j, k) + lower(k, i, j, l)).abs() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn quaternion_relations_on_bases(n in 1usize..3, p in prop::collection::vec(-1.0..1.0f64, 8), gh in any::<bool>()) {
        let base = if gh { gh_linear_example().unwrap() } else { flat_base(n, false).unwrap() };
        let mut c = p[..base.dim()].to_vec();
        if gh {
            c[0] = 1.25 + 0.7 * c[0];
        }
        let q = ChartPoint::new(c).unwrap();
        let is = base.complex_structures().unwrap();
        prop_assert!(quaternion_residual(&is, &[q]).unwrap().value < 1e-12);
    }

    #[test]
    fn exponential_profiles_solve_the_system(
        a in 0.3..3.0f64,
        b in 0.3..3.0f64,
        n in 1usize..4,
        t in -1.0..1.0f64,
        k in 0usize..4,
    ) {
        let kind = [BundleKind::Q, BundleKind::P, BundleKind::L, BundleKind::N][k];
        let res = system_residual(&ProfileSet::exponential(a, b).unwrap(), n, exponential_lambda(b, n, kind), t, kind).unwrap();
        let scale = b * b * (4.0 * n as f64 + 12.0);
        prop_assert!(res.iter().all(|r| r.abs() < 1e-12 * scale), "{res:?}");
    }
}

fn inverse() -> &'static (QuotientFrame, InverseData) {
    static CELL: OnceLock<(QuotientFrame, InverseData)> = OnceLock::new();
    CELL.get_or_init(|| {
        let base = example1_base().unwrap();
        let model = build_model(&base, &ProfileSet::exponential(1.0, 1.0).unwrap(), BundleKind::N).unwrap();
        let act = build_lift(&base, ActionKind::Permuting, ActionConstants { a: 2.0, ..Default::default() }).unwrap();
        let level = level_set_restrict(&model, &act).unwrap();
        let fr = quotient_frame(&level, &act, &example1_fibre()).unwrap();
        let inv = hkqk_inverse(&fr).unwrap();
        (fr, inv)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn inverse_construction_roundtrips(u in prop::collection::vec(0.0..1.0f64, 5)) {
        let (fr, inv) = inverse();
        let lo = &fr.domain.lo;
        let hi = &fr.domain.hi;
        let c: Vec<f64> = u.iter().enumerate().map(|(i, s)| lo[i] + s * (hi[i] - lo[i])).collect();
        let p = ChartPoint::new(c).unwrap();
        let (sig, met) = inv.roundtrip_residual(fr, &[p]).unwrap();
        prop_assert!(sig.value < 1e-8 && met.value < 1e-8, "{sig:?} {met:?}");
    }
}
