//! Checks against results computed independently of the jet machinery:
//! textbook curvatures, finite differences, explicit flows and the ODE.

use hkbundle_core::calculus::lift_coordinate;
use hkbundle_core::curvature::riemann_ricci_scalar;
use hkbundle_core::einstein_ode::system_residual;
use hkbundle_core::exterior::linear_vector_field;
use hkbundle_core::map::ChartMap;
use hkbundle_core::spaces::{build_model, flat_base, BundleKind};
use hkbundle_core::{ChartPoint, Field, Jet2, JetMatrix, KFormField, MetricField, ProfileSet, ScalarField};

fn pt(c: &[f64]) -> ChartPoint {
    ChartPoint::new(c.to_vec()).unwrap()
}

/// Round `S³` of radius `r` in hyperspherical coordinates.
fn three_sphere(r: f64) -> MetricField {
    Field::new(3, move |p: &ChartPoint| {
        let s1 = p.lift(0).sin().square();
        let s2 = p.lift(1).sin().square();
        let c = |v: f64| p.constant(v);
        JetMatrix::symmetric(
            3,
            vec![
                c(r * r),
                c(0.0),
                c(0.0),
                c(0.0),
                &s1 * (r * r),
                c(0.0),
                c(0.0),
                c(0.0),
                &(&s1 * &s2) * (r * r),
            ],
        )
    })
}

/// Upper half space `(dx² + dy² + dz²)/z²`.
fn hyperbolic() -> MetricField {
    Field::new(3, |p: &ChartPoint| {
        let w = p.lift(2).powi(-2);
        let z = p.constant(0.0);
        JetMatrix::symmetric(3, vec![w.clone(), z.clone(), z.clone(), z.clone(), w.clone(), z.clone(), z.clone(), z, w])
    })
}

#[test]
fn three_sphere_has_constant_curvature() {
    for r in [1.0, 2.5] {
        let c = riemann_ricci_scalar(&three_sphere(r).eval(&pt(&[0.9, 1.2, 0.3])).unwrap()).unwrap();
        assert!((c.scalar() - 6.0 / (r * r)).abs() < 1e-12);
        assert!(c.einstein_defect(2.0 / (r * r)) < 1e-12);
        // sectional curvature of the (0, 1) plane
        let g = c.metric();
        let k = c.riemann(0, 1, 0, 1) * g[(0, 0)] / (g[(0, 0)] * g[(1, 1)]);
        assert!((k.abs() - 1.0 / (r * r)).abs() < 1e-12, "{k}");
    }
}

#[test]
fn hyperbolic_space_has_ricci_minus_two() {
    for z in [0.3, 1.0, 4.0] {
        let c = riemann_ricci_scalar(&hyperbolic().eval(&pt(&[0.1, -0.4, z])).unwrap()).unwrap();
        assert!((c.scalar() + 6.0).abs() < 1e-10);
        assert!(c.einstein_defect(-2.0) < 1e-10);
    }
}

#[test]
fn jets_match_finite_differences() {
    let f: ScalarField = Field::new(3, |p: &ChartPoint| {
        let (x, y, z) = (p.lift(0), p.lift(1), p.lift(2));
        Ok(&(&x * &y).sin() * &z.exp() + (&x + &z).try_ln()?)
    });
    let p = pt(&[0.4, -0.7, 0.9]);
    let j = f.eval(&p).unwrap();
    let h = 1e-5;
    let val = |q: &ChartPoint| f.eval(q).unwrap().value();
    for i in 0..3 {
        let fd = (val(&p.shifted(i, h)) - val(&p.shifted(i, -h))) / (2.0 * h);
        assert!((fd - j.grad()[i]).abs() < 1e-8);
        for k in 0..3 {
            let h = 1e-4;
            let fd = (val(&p.shifted(i, h).shifted(k, h)) - val(&p.shifted(i, h).shifted(k, -h))
                - val(&p.shifted(i, -h).shifted(k, h))
                + val(&p.shifted(i, -h).shifted(k, -h)))
                / (4.0 * h * h);
            assert!((fd - j.hess(i, k)).abs() < 1e-6, "({i}, {k})");
        }
    }
}

#[test]
fn composition_obeys_the_chain_rule() {
    // g(u, v) = u² v and u = sin x, v = x + y: ∂_x = 2 sin x cos x (x + y) + sin² x.
    let p = pt(&[0.6, 0.2]);
    let (x, y) = (p.lift(0), p.lift(1));
    let inner = [x.sin(), &x + &y];
    let outer = Jet2::new(
        inner[0].value().powi(2) * inner[1].value(),
        vec![2.0 * inner[0].value() * inner[1].value(), inner[0].value().powi(2)],
        vec![2.0 * inner[1].value(), 2.0 * inner[0].value(), 2.0 * inner[0].value(), 0.0],
    )
    .unwrap();
    let c = Jet2::compose(&outer, &inner).unwrap();
    let direct = &inner[0].square() * &inner[1];
    assert!((c.value() - direct.value()).abs() < 1e-15);
    let (s, co) = (0.6f64.sin(), 0.6f64.cos());
    assert!((c.grad()[0] - (2.0 * s * co * 0.8 + s * s)).abs() < 1e-14);
    for i in 0..2 {
        assert!((c.grad()[i] - direct.grad()[i]).abs() < 1e-14);
        for k in 0..2 {
            assert!((c.hess(i, k) - direct.hess(i, k)).abs() < 1e-13);
        }
    }
}

/// Rotation in the `(0, 1)` plane plus dilation by `c` in `(2, 3)`.
fn flow(s: f64, c: f64) -> ChartMap {
    let (cs, sn, e) = (s.cos(), s.sin(), (c * s).exp());
    ChartMap::linear(
        vec![
            vec![cs, -sn, 0.0, 0.0],
            vec![sn, cs, 0.0, 0.0],
            vec![0.0, 0.0, e, 0.0],
            vec![0.0, 0.0, 0.0, e],
        ],
        vec![0.0; 4],
    )
    .unwrap()
}

#[test]
fn lie_derivative_matches_the_flow() {
    let c = 0.7;
    let x = linear_vector_field(
        vec![
            vec![0.0, -1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, c, 0.0],
            vec![0.0, 0.0, 0.0, c],
        ],
        vec![0.0; 4],
    )
    .unwrap();
    let coord = |i| lift_coordinate(i, 4).unwrap();
    let f: ScalarField = Field::new(4, |p: &ChartPoint| Ok(&p.lift(0).sin() * &p.lift(3).exp()));
    let omega = KFormField::from_coeffs(
        4,
        2,
        vec![(vec![0, 2], coord(1).times(&coord(3)).unwrap()), (vec![1, 3], f)],
    )
    .unwrap();
    let p = pt(&[0.3, -0.5, 0.8, 0.2]);
    let exact = omega.lie(&x).unwrap().eval(&p).unwrap();
    let h = 1e-3;
    let at = |s: f64| flow(s, c).pullback_form(&omega).unwrap().eval(&p).unwrap();
    let fd = at(-2.0 * h)
        .sub(&at(2.0 * h))
        .unwrap()
        .add(&at(h).sub(&at(-h)).unwrap().scale_f64(8.0))
        .unwrap()
        .scale_f64(1.0 / (12.0 * h));
    assert!(exact.sub(&fd).unwrap().max_abs() < 1e-9, "{}", exact.sub(&fd).unwrap().max_abs());
}

/// Orthonormal Ricci components `(t, fibres…, base)` at a point over `x = 0`,
/// where the horizontal lift of `∂_{x_1}` is `∂_{x_1}` itself.
fn frame_ricci(m: &hkbundle_core::SpaceModel, t: f64) -> Vec<f64> {
    let mut c = vec![t, 0.3, -0.2, 0.1];
    c.extend([0.0; 4]);
    let g = m.metric.eval(&pt(&c[..m.dim()])).unwrap();
    let curv = riemann_ricci_scalar(&g).unwrap();
    let gv = g.values();
    let ric = curv.ricci();
    let fibres = m.dim() - 5;
    let mut out = vec![ric[(0, 0)] / gv[(0, 0)]];
    for i in 1..=fibres {
        out.push(ric[(i, i)] / gv[(i, i)]);
    }
    let b = fibres + 1;
    out.push(ric[(b, b)] / gv[(b, b)]);
    out
}

#[test]
fn ode_residuals_are_frame_ricci_components() {
    // profiles that are not Einstein, so both sides are far from zero
    let prof = |k: f64, w: f64| -> ScalarField {
        Field::new(1, move |p: &ChartPoint| Ok((p.lift(0) * w).exp() * k + &(p.lift(0) * 0.3).cosh()))
    };
    let profiles = ProfileSet::new(
        Some(prof(0.8, 0.6)),
        Some(prof(1.1, 1.3)),
        Some(prof(0.7, 0.9)),
        Some(prof(1.4, 1.1)),
    )
    .unwrap();
    let base = flat_base(1, false).unwrap();
    let lambda = -3.0;
    for kind in [BundleKind::Q, BundleKind::P, BundleKind::L, BundleKind::N] {
        let m = build_model(&base, &profiles, kind).unwrap();
        for t in [-0.4, 0.1, 0.5] {
            let ode = system_residual(&profiles, 1, lambda, t, kind).unwrap();
            let ric = frame_ricci(&m, t);
            assert_eq!(ode.len(), ric.len());
            let mut big: f64 = 0.0;
            for (o, r) in ode.iter().zip(&ric) {
                assert!((o - (lambda - r)).abs() < 1e-9, "{kind:?} t = {t}: {ode:?} vs {ric:?}");
                big = big.max(o.abs());
            }
            assert!(big > 0.1);
        }
    }
}
