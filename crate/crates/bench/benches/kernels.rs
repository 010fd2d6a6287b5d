use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hkbundle_core::spaces::{build_model, flat_base};
use hkbundle_core::{acs_from_pair, nijenhuis, riemann_ricci_scalar, BundleKind, ProfileSet};

fn kernels(c: &mut Criterion) {
    let base = flat_base(1, false).unwrap();
    let prof = ProfileSet::exponential(1.0, 1.0).unwrap();
    let n8 = build_model(&base, &prof, BundleKind::N).unwrap();
    let p6 = build_model(&base, &prof, BundleKind::P).unwrap();
    let pt_n = n8.sample(1, 7).remove(0);
    let pt_p = p6.sample(1, 7).remove(0);

    c.bench_function("metric_jet_n8", |b| b.iter(|| n8.metric.eval(black_box(&pt_n)).unwrap()));

    let g = n8.metric.eval(&pt_n).unwrap();
    c.bench_function("curvature_n8", |b| b.iter(|| riemann_ricci_scalar(black_box(&g)).unwrap()));

    let omega = n8.form("Omega").unwrap();
    let d_omega = omega.d().unwrap();
    c.bench_function("d_Omega_n8", |b| b.iter(|| d_omega.eval(black_box(&pt_n)).unwrap()));

    let j = acs_from_pair(&p6.metric, p6.form("omega_P").unwrap()).unwrap();
    let jp = j.eval(&pt_p).unwrap();
    c.bench_function("nijenhuis_p6", |b| b.iter(|| nijenhuis(black_box(&jp)).unwrap()));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
