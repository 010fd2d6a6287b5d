//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;

use hkbundle_core::calculus::lift_coordinate;
use hkbundle_core::curvature::{acs_from_pair, nijenhuis_residual, riemann_ricci_scalar};
use hkbundle_core::einstein_ode::{exponential_lambda, system_residual};
use hkbundle_core::reduction::{
    build_lift, build_lift_with, example1_base, example1_fibre, example1_quotient_map, general_combination,
    general_combination_oracle, hkqk_inverse, level_set_residual, level_set_restrict, moment_map,
    moment_map_residual, quotient_frame, reduced_metric, two_path_residual, ActionConstants, ActionKind,
    ReducedKind, ReducedParams,
};
use hkbundle_core::sampling::SampleBox;
use hkbundle_core::spaces::{
    balanced_check, balanced_m6, build_hypercomplex, build_hypercomplex_unchecked, build_model,
    closed_4form_residual, conformal_balanced, flat_base, gh_linear_example, quaternion_residual, radial_field,
    radial_potentials, ricci_flat_special, rotation_v, rotation_w, structure_equation_residual, HypercomplexShape,
    SpecialKind,
};
use hkbundle_core::{
    einstein_residual, finite_difference_check, holonomy_dim_estimate, BundleKind, ChartPoint, Field, HKData,
    KFormField, ProfileSet, Result, ScalarField, SpaceModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Result of one criterion: passed or not, plus a short summary.
struct Outcome {
    pass: bool,
    detail: String,
}

/// Accumulates `(label, value, tolerance)` rows and reports the worst.
#[derive(Default)]
struct Rows {
    rows: Vec<(String, f64, f64)>,
    notes: Vec<String>,
}

impl Rows {
    fn le(&mut self, label: impl Into<String>, value: f64, tol: f64) {
        self.rows.push((label.into(), value, tol));
    }

    fn ge(&mut self, label: impl Into<String>, value: f64, floor: f64) {
        // stored as floor / value so that "≤ 1" means pass
        let label = format!("{} (≥ {floor:e}, got {value:.3e})", label.into());
        let ratio = if value > 0.0 { floor / value } else { f64::INFINITY };
        self.rows.push((label, ratio, 1.0));
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self) -> Outcome {
        let failed: Vec<String> = self
            .rows
            .iter()
            .filter(|(_, v, t)| !(v <= t))
            .map(|(l, v, t)| format!("{l}: {v:.3e} > {t:e}"))
            .collect();
        let worst = self
            .rows
            .iter()
            .map(|(l, v, t)| (l, ratio(*v, *t), v))
            .fold(None::<(&String, f64, &f64)>, |acc, x| match acc {
                Some(a) if !(x.1 > a.1) => Some(a),
                _ => Some(x),
            });
        let mut detail = if failed.is_empty() {
            match worst {
                Some((l, _, v)) => format!("{} checks, tightest {l} = {v:.3e}", self.rows.len()),
                None => "no checks".into(),
            }
        } else {
            failed.join("; ")
        };
        for n in &self.notes {
            detail.push_str(&format!(" [{n}]"));
        }
        Outcome {
            pass: failed.is_empty() && !self.rows.is_empty(),
            detail,
        }
    }
}

fn ratio(value: f64, tol: f64) -> f64 {
    if tol > 0.0 {
        value / tol
    } else if value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn n_model(base: &HKData, kind: BundleKind) -> Result<SpaceModel> {
    build_model(base, &ProfileSet::exponential(1.0, 1.0)?, kind)
}

fn radial_base() -> Result<HKData> {
    flat_base(1, false)?.with_kappa(radial_potentials(1)?)
}

fn x(i: usize) -> Result<ScalarField> {
    lift_coordinate(i, 4)
}

/// `c_1 x_i dx_j + c_2 x_k dx_l` on ℝ⁴.
fn potential(i: usize, j: usize, k: usize, l: usize, sign: f64) -> Result<KFormField> {
    KFormField::from_coeffs(4, 1, vec![(vec![j], x(i)?), (vec![l], x(k)?.scale(sign))])
}

fn max_nijenhuis(m: &SpaceModel, pts: &[ChartPoint]) -> Result<f64> {
    let mut r: f64 = 0.0;
    for i in 1..=3 {
        let j = acs_from_pair(&m.metric, m.form(&format!("omega{i}"))?)?;
        r = r.max(nijenhuis_residual(&j, pts)?.value);
    }
    Ok(r)
}

fn complex_closed(m: &SpaceModel, name: &str, pts: &[ChartPoint]) -> Result<f64> {
    let d = m.complex_form(name)?.d()?;
    let mut r: f64 = 0.0;
    for p in pts {
        r = r.max(d.re.eval(p)?.max_abs()).max(d.im.eval(p)?.max_abs());
    }
    Ok(r)
}

fn structure_equations() -> Result<Outcome> {
    let mut r = Rows::default();
    let m = n_model(&flat_base(1, false)?, BundleKind::N)?;
    r.le("N8 over flat R4", structure_equation_residual(&m, &m.sample(100, 1))?.value, 1e-10);
    Ok(r.finish())
}

fn closed_four_form() -> Result<Outcome> {
    let mut r = Rows::default();
    for (label, base) in [("flat", flat_base(1, false)?), ("Gibbons-Hawking", gh_linear_example()?)] {
        let m = n_model(&base, BundleKind::N)?;
        r.le(format!("dΩ over {label}"), closed_4form_residual(&m, &m.sample(100, 2))?.value, 1e-10);
    }
    Ok(r.finish())
}

fn einstein_bundles() -> Result<Outcome> {
    let mut r = Rows::default();
    let base = flat_base(1, false)?;
    for (kind, lambda) in [(BundleKind::Q, -4.0), (BundleKind::P, -8.0), (BundleKind::L, -12.0), (BundleKind::N, -16.0)] {
        let m = n_model(&base, kind)?;
        r.le(format!("{kind:?} constant"), (kind.einstein_constant(1) - lambda).abs(), 0.0);
        r.le(format!("{kind:?} Ric − λg"), einstein_residual(&m.metric, lambda, &m.sample(20, 3))?.value, 1e-7);
    }
    Ok(r.finish())
}

fn ode_families() -> Result<Outcome> {
    let mut r = Rows::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in [BundleKind::Q, BundleKind::P, BundleKind::L, BundleKind::N] {
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let a = rng.random_range(0.5..2.0);
            let b = rng.random_range(0.5..2.0);
            let t = rng.random_range(-1.0..1.0);
            let res = system_residual(&ProfileSet::exponential(a, b)?, 1, exponential_lambda(b, 1, kind), t, kind)?;
            worst = res.iter().fold(worst, |m, v| m.max(v.abs()));
        }
        r.le(format!("{kind:?} exponential"), worst, 1e-12);
    }
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = rng.random_range(0.5..3.0);
        let res = system_residual(&ProfileSet::calabi(1)?, 1, 0.0, t, BundleKind::P)?;
        worst = res.iter().fold(worst, |m, v| m.max(v.abs()));
    }
    r.le("Calabi", worst, 1e-10);
    Ok(r.finish())
}

fn special_holonomy() -> Result<Outcome> {
    let mut r = Rows::default();
    for (label, m) in [
        ("G2 L7", ricci_flat_special(SpecialKind::G2L7, 1.0, 0.0)?),
        ("Spin7 N8", ricci_flat_special(SpecialKind::Spin7N8, 1.0, 2.0)?),
    ] {
        r.le(label, einstein_residual(&m.metric, 0.0, &m.sample(20, 5))?.value, 1e-7);
    }
    Ok(r.finish())
}

fn hypercomplex() -> Result<Outcome> {
    let mut r = Rows::default();
    let base = flat_base(1, true)?;
    let nu = potential(0, 1, 2, 3, -1.0)?;
    let m = build_hypercomplex(&base, std::slice::from_ref(&nu), HypercomplexShape::Bundle)?;
    r.le("bundle", max_nijenhuis(&m, &m.sample(50, 6))?, 1e-9);
    let asd = [nu, potential(0, 2, 1, 3, 1.0)?, potential(0, 3, 1, 2, -1.0)?, KFormField::zero(4, 1)];
    let m = build_hypercomplex(&base, &asd, HypercomplexShape::Instanton)?;
    r.le("instanton", max_nijenhuis(&m, &m.sample(50, 7))?, 1e-9);
    let bad = base.kappa()?[1].clone();
    let m = build_hypercomplex_unchecked(&base, &[bad], HypercomplexShape::Bundle)?;
    r.ge("self-dual curvature breaks integrability", max_nijenhuis(&m, &m.sample(50, 8))?, 0.1);
    Ok(r.finish())
}

fn balanced() -> Result<Outcome> {
    let mut r = Rows::default();
    let base = flat_base(1, true)?;
    let m6 = balanced_m6(&base)?;
    let pts = m6.sample(50, 9);
    r.le("M6 d(ω²)", balanced_check(&m6, "omega", 2, &pts)?.value, 1e-10);
    r.le("M6 dΥ", complex_closed(&m6, "upsilon", &pts)?, 1e-10);
    let nt = conformal_balanced(&n_model(&base, BundleKind::N)?)?;
    r.le("conformal N d(ω̃³)", balanced_check(&nt, "omega_tilde1", 3, &nt.sample(50, 10))?.value, 1e-10);
    let z = KFormField::zero(4, 1);
    let m8 = build_hypercomplex(&base, &[potential(0, 1, 2, 3, -1.0)?, z.clone(), z.clone(), z], HypercomplexShape::Instanton)?;
    let pts = m8.sample(50, 11);
    r.le("M8 d(ω³)", balanced_check(&m8, "omega1", 3, &pts)?.value, 1e-10);
    r.le("M8 dΥ", complex_closed(&m8, "upsilon1", &pts)?, 1e-10);
    Ok(r.finish())
}

fn moment_maps() -> Result<Outcome> {
    let mut r = Rows::default();
    let base = radial_base()?;
    let model = n_model(&base, BundleKind::N)?;
    let pts = model.sample(50, 12);
    let k0 = ActionConstants::default();
    let cases = [
        ("vertical Y(1,2,3)", None, ActionKind::Vertical, ActionConstants { a: 1.0, b: 2.0, c: 3.0, ..k0 }),
        ("W", Some(rotation_w(1)?), ActionKind::Triholomorphic, k0),
        ("V, a = 2", Some(rotation_v(1)?), ActionKind::Permuting, ActionConstants { a: 2.0, ..k0 }),
        ("U", Some(radial_field(1)?), ActionKind::Homothetic, k0),
    ];
    for (label, field, kind, k) in cases {
        let act = build_lift_with(&base, field.as_ref(), kind, k)?;
        let mm = moment_map(&act, &model)?;
        r.le(label, moment_map_residual(&act, &model, &mm.form, &pts)?.value, 1e-9);
    }
    let k = ActionConstants { a: 0.4, b: -0.3, c: 0.2, u: 0.7, v: -1.1, w: 0.6 };
    let act = general_combination(&base, k)?;
    let mm = moment_map(&act, &model)?;
    r.le("combination", moment_map_residual(&act, &model, &mm.form, &pts)?.value, 1e-9);
    let oracle = general_combination_oracle(k);
    let mut gap: f64 = 0.0;
    for p in &pts {
        for i in 0..3 {
            gap = gap.max((mm.components[i].eval(p)?.value() - oracle[i].eval(p)?.value()).abs());
        }
    }
    r.le("combination vs closed form", gap, 1e-9);
    Ok(r.finish())
}

fn reduced_metrics() -> Result<Outcome> {
    let mut r = Rows::default();
    let scalar_gap = |q: &hkbundle_core::reduction::QuotientModel, pts: &[ChartPoint]| -> Result<f64> {
        let mut w: f64 = 0.0;
        for p in pts {
            let s = riemann_ricci_scalar(&q.metric.eval(p)?)?.scalar();
            w = w.max((s + 48.0).abs());
        }
        Ok(w)
    };
    let cases = [
        ("radial", ReducedKind::RadialR4, 2.0),
        ("example 1, a = 0", ReducedKind::PermutingExample1, 0.0),
        ("example 1, a = 2", ReducedKind::PermutingExample1, 2.0),
        ("example 2, a = 1", ReducedKind::PermutingExample2, 1.0),
    ];
    for (label, kind, a) in cases {
        let q = reduced_metric(kind, &ReducedParams { a, base: None })?;
        let pts = q.sample(20, 13);
        r.le(format!("{label} λ"), (q.lambda + 12.0).abs(), 0.0);
        r.le(format!("{label} Einstein"), q.einstein(&pts)?.value, 1e-7);
        r.le(format!("{label} scalar"), scalar_gap(&q, &pts)?, 1e-6);
    }
    Ok(r.finish())
}

fn level_set() -> Result<Outcome> {
    let mut r = Rows::default();
    let base = example1_base()?;
    let model = n_model(&base, BundleKind::N)?;
    let act = build_lift(&base, ActionKind::Permuting, ActionConstants { a: 2.0, ..Default::default() })?;
    let level = level_set_restrict(&model, &act)?;
    let pts = level.sample(30, 14);
    r.le("restricted forms", level_set_residual(&level, &act, &pts)?.value, 1e-10);
    let closed = reduced_metric(ReducedKind::PermutingExample1, &ReducedParams::default())?;
    r.le(
        "two paths",
        two_path_residual(&level, &act, &closed.metric, &example1_quotient_map(2.0), &pts)?.value,
        1e-9,
    );
    Ok(r.finish())
}

fn roundtrip() -> Result<Outcome> {
    let mut r = Rows::default();
    let base = example1_base()?;
    let model = n_model(&base, BundleKind::N)?;
    let act = build_lift(&base, ActionKind::Permuting, ActionConstants { a: 2.0, ..Default::default() })?;
    let level = level_set_restrict(&model, &act)?;
    let fr = quotient_frame(&level, &act, &example1_fibre())?;
    let inv = hkqk_inverse(&fr)?;
    let pts = fr.domain.sample(30, 15);
    let (sig, met) = inv.roundtrip_residual(&fr, &pts)?;
    r.le("σ roundtrip", sig.value, 1e-8);
    r.le("metric roundtrip", met.value, 1e-8);
    r.le("dσ", inv.closedness(&pts)?.value, 1e-9);
    r.le("permuting relations", inv.permuting_residual(&pts)?.value, 1e-9);
    Ok(r.finish())
}

fn holonomy() -> Result<Outcome> {
    let mut r = Rows::default();
    let base = flat_base(1, false)?;
    let p = |c: &[f64]| ChartPoint::new(c.to_vec());
    for (kind, expected) in [(BundleKind::Q, 10), (BundleKind::P, 9), (BundleKind::N, 13), (BundleKind::L, 21)] {
        let m = n_model(&base, kind)?;
        let mut c = vec![0.3];
        c.extend((1..m.dim()).map(|i| 0.1 * i as f64 - 0.25));
        let d = holonomy_dim_estimate(&m.metric.eval(&p(&c)?)?)?;
        if kind == BundleKind::L {
            r.le(format!("L estimate {d} ≤ {expected}"), d.saturating_sub(expected) as f64, 0.0);
            if d < expected {
                r.note(format!("L curvature span gives {d} of {expected}"));
            }
        } else {
            r.le(format!("{kind:?} estimate {d} vs {expected}"), d.abs_diff(expected) as f64, 0.0);
        }
    }
    Ok(r.finish())
}

/// `c · sin(⟨w, x⟩ + φ)` with random data.
fn random_scalar(rng: &mut ChaCha8Rng, dim: usize) -> ScalarField {
    let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let phi = rng.random_range(-1.0..1.0);
    let c = rng.random_range(0.5..1.5);
    Field::new(dim, move |p: &ChartPoint| {
        let mut arg = p.constant(phi);
        for (i, wi) in w.iter().enumerate() {
            arg = &arg + &(&p.lift(i) * *wi);
        }
        Ok(&arg.sin() * c)
    })
}

fn random_one_form(rng: &mut ChaCha8Rng, dim: usize) -> Result<KFormField> {
    KFormField::from_coeffs(dim, 1, (0..dim).map(|i| (vec![i], random_scalar(rng, dim))).collect())
}

fn properties() -> Result<Outcome> {
    let mut r = Rows::default();
    let gh = gh_linear_example()?;
    let n = n_model(&flat_base(1, false)?, BundleKind::N)?;
    for seed in [1u64, 2, 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 5;
        let a = random_one_form(&mut rng, dim)?;
        let b = random_one_form(&mut rng, dim)?;
        let f = random_scalar(&mut rng, dim);
        let pts = SampleBox::cube(dim, -1.0, 1.0).sample(10, seed);
        let (mut dd, mut leib, mut fd) = (0.0f64, 0.0f64, 0.0f64);
        let ab = a.wedge(&b)?;
        let lhs = ab.d()?;
        let rhs = a.d()?.wedge(&b)?.sub(&a.wedge(&b.d()?)?)?;
        for p in &pts {
            dd = dd.max(a.d()?.d()?.eval(p)?.max_abs());
            leib = leib.max(lhs.eval(p)?.sub(&rhs.eval(p)?)?.max_abs());
            fd = fd.max(finite_difference_check(&f, p, 1e-4)?);
        }
        r.le(format!("seed {seed} d²"), dd, 1e-12);
        r.le(format!("seed {seed} Leibniz"), leib, 1e-12);
        r.le(format!("seed {seed} finite differences"), fd, 1e-6);
        let mut bianchi: f64 = 0.0;
        for p in n.sample(3, seed) {
            bianchi = bianchi.max(riemann_ricci_scalar(&n.metric.eval(&p)?)?.bianchi_residual());
        }
        r.le(format!("seed {seed} Bianchi"), bianchi, 1e-9);
        let is = gh.complex_structures()?;
        r.le(format!("seed {seed} quaternion"), quaternion_residual(&is, &gh.domain.sample(10, seed))?.value, 1e-12);
    }
    Ok(r.finish())
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, fn() -> Result<Outcome>)> = vec![
        ("structure equations", structure_equations),
        ("closed fundamental 4-form", closed_four_form),
        ("Einstein bundle metrics", einstein_bundles),
        ("Einstein ODE families", ode_families),
        ("special holonomy metrics", special_holonomy),
        ("hypercomplex integrability", hypercomplex),
        ("balanced structures", balanced),
        ("moment maps", moment_maps),
        ("reduced Einstein metrics", reduced_metrics),
        ("level set and two-path quotient", level_set),
        ("inverse construction roundtrip", roundtrip),
        ("holonomy estimates", holonomy),
        ("property checks", properties),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        if !outcome.pass {
            failures += 1;
        }
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {}", i + 1, outcome.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
