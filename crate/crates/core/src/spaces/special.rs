//! Ricci-flat metrics on the bundles and balanced Hermitian structures.

use std::collections::BTreeMap;

use super::{assemble_metric, chart_domain, chart_names, dcoord, BaseLift, HKData, ProfileSet, SpaceModel};
use super::{build_model, default_connections, flat_base, BundleKind};
use crate::calculus::{ChartPoint, Field, Jet2, ScalarField};
use crate::error::{GeomError, Result};
use crate::exterior::{ComplexFormField, KFormField};
use crate::sampling::{sup_over, Worst};

/// The three Ricci-flat metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialKind {
    /// Kähler `P` with the Calabi profile.
    CalabiP,
    /// The `G_2` metric on `L^7`.
    G2L7,
    /// The `Spin(7)` metric on `N^8`.
    Spin7N8,
}

impl SpecialKind {
    pub fn parse(s: &str) -> Result<SpecialKind> {
        match s {
            "calabi_P" => Ok(SpecialKind::CalabiP),
            "as_G2_L7" => Ok(SpecialKind::G2L7),
            "spin7_N8" => Ok(SpecialKind::Spin7N8),
            _ => Err(GeomError::Argument(format!("unknown special metric {s}"))),
        }
    }
}

/// `t + c`, refusing to leave the positive half-line.
fn shifted_t(c: f64, dim: usize) -> ScalarField {
    Field::new(dim, move |p: &ChartPoint| {
        let v = p.lift(0) + c;
        if v.value() <= 0.0 {
            return Err(GeomError::Domain(format!("t + {c} = {} is not positive", v.value())));
        }
        Ok(v)
    })
}

fn product(fs: &[&ScalarField], dim: usize) -> ScalarField {
    let fs: Vec<ScalarField> = fs.iter().map(|f| (*f).clone()).collect();
    Field::new(dim, move |p: &ChartPoint| {
        let mut acc = Jet2::constant(1.0, dim);
        for f in &fs {
            acc = &acc * &f.eval(p)?;
        }
        Ok(acc)
    })
}

fn inverse_square(f: &ScalarField) -> ScalarField {
    f.apply(|j| j.square().try_recip())
}

/// A Ricci-flat model over flat `𝕋^4` with `t ∈ [0.5, 3]`.
///
/// `b` is used by the `G_2` and `Spin(7)` metrics, `c` by `Spin(7)` only.
pub fn ricci_flat_special(which: SpecialKind, b: f64, c: f64) -> Result<SpaceModel> {
    let base = flat_base(1, true)?;
    if which == SpecialKind::CalabiP {
        let mut m = build_model(&base, &ProfileSet::calabi(1)?, BundleKind::P)?;
        m.name = format!("Calabi {}", m.name);
        m.expected.insert("lambda".into(), 0.0);
        return Ok(m);
    }
    let needs_c = which == SpecialKind::Spin7N8;
    if !(b > 0.0) || (needs_c && !(c > 0.0)) {
        return Err(GeomError::Argument(format!("need positive shifts, got b = {b}, c = {c}")));
    }
    let kind = if needs_c { BundleKind::N } else { BundleKind::L };
    let conn = default_connections(&base, kind)?;
    let f = kind.fibres();
    let dim = 1 + f + base.dim();
    // g = Π(t+c_i)² dt² + Σ (t+c_i)⁻² θ_i² + Π(t+c_i) g_M
    let mut shifts = vec![0.0, b];
    if needs_c {
        shifts.push(c);
    }
    let ts: Vec<ScalarField> = shifts.iter().map(|s| shifted_t(*s, dim)).collect();
    let refs: Vec<&ScalarField> = ts.iter().collect();
    let lapse = product(&refs, dim).apply(|j| Ok(j.square()));
    let warp = product(&refs, dim);
    let thetas = [conn.alpha, conn.xi, conn.eta];
    let mut squares = vec![(lapse, dcoord(0, dim)?)];
    let mut forms = BTreeMap::new();
    forms.insert("dt".to_string(), dcoord(0, dim)?);
    for ((name, th), t) in ["alpha", "xi", "eta"].iter().zip(thetas).zip(&ts) {
        if let Some(th) = th {
            squares.push((inverse_square(t), th.clone()));
            forms.insert(name.to_string(), th);
        }
    }
    let lift = BaseLift::new(dim, 1 + f, base.dim())?;
    for (i, s) in base.sigma.iter().enumerate() {
        forms.insert(format!("sigma{}", i + 1), lift.form(s)?);
    }
    let metric = assemble_metric(dim, Some((warp, lift.metric(&base.g)?)), squares)?;
    let fibre_names: Vec<&str> = ["t", "y1", "y2", "y3"][..=f].to_vec();
    let mut lo = vec![0.5];
    let mut hi = vec![3.0];
    lo.extend(std::iter::repeat_n(-1.0, f));
    hi.extend(std::iter::repeat_n(1.0, f));
    let name = if needs_c {
        format!("Spin(7) N^8 (b = {b}, c = {c})")
    } else {
        format!("G2 L^7 (b = {b})")
    };
    Ok(SpaceModel {
        name,
        coords: chart_names(&fibre_names, &base),
        metric,
        forms,
        complex_forms: BTreeMap::new(),
        expected: BTreeMap::from([("lambda".to_string(), 0.0)]),
        profile: None,
        base: Some(base.clone()),
        base_offset: 1 + f,
        domain: chart_domain(lo, hi, &base)?,
    })
}

/// The Hermitian structure `ω = ξ∧η + σ_1` on the `T²`-bundle `M^{4n+2}`
/// with `dξ = −σ_2`, `dη = −σ_3`; chart `(y_2, y_3, x)`.
///
/// Emits the form `omega` and the complex volume form
/// `upsilon = (ξ + iη)∧(σ_2 + iσ_3)^n`.
pub fn balanced_m6(base: &HKData) -> Result<SpaceModel> {
    let kappa = base.kappa()?;
    let dim = 2 + base.dim();
    let lift = BaseLift::new(dim, 2, base.dim())?;
    let xi = dcoord(0, dim)?.sub(&lift.form(&kappa[1])?)?;
    let eta = dcoord(1, dim)?.sub(&lift.form(&kappa[2])?)?;
    let sigma: Vec<KFormField> = base.sigma.iter().map(|s| lift.form(s)).collect::<Result<_>>()?;
    let omega = xi.wedge(&eta)?.add(&sigma[0])?;
    let upsilon = ComplexFormField::new(xi.clone(), eta.clone())?
        .wedge(&ComplexFormField::new(sigma[1].clone(), sigma[2].clone())?.power(base.n())?)?;
    let one = ScalarField::constant(1.0, dim);
    let metric = assemble_metric(
        dim,
        Some((one.clone(), lift.metric(&base.g)?)),
        vec![(one.clone(), xi.clone()), (one, eta.clone())],
    )?;
    let mut forms = BTreeMap::from([
        ("omega".to_string(), omega),
        ("xi".to_string(), xi),
        ("eta".to_string(), eta),
    ]);
    for (i, s) in sigma.into_iter().enumerate() {
        forms.insert(format!("sigma{}", i + 1), s);
    }
    Ok(SpaceModel {
        name: format!("M_(xi,eta)^{dim} over {}", base.label),
        coords: chart_names(&["y2", "y3"], base),
        metric,
        forms,
        complex_forms: BTreeMap::from([("upsilon".to_string(), upsilon)]),
        expected: BTreeMap::new(),
        profile: None,
        base: Some(base.clone()),
        base_offset: 2,
        domain: chart_domain(vec![-1.0; 2], vec![1.0; 2], base)?,
    })
}

/// Rescale an `N` model conformally by `e^{−4t/(2n+1)}`, adding
/// `omega_tilde1..3` and rescaling the metric to match.
pub fn conformal_balanced(model: &SpaceModel) -> Result<SpaceModel> {
    if !model.forms.contains_key("omega1") || model.coords.first().map(String::as_str) != Some("t") {
        return Err(GeomError::Precondition(format!("{} is not an N model", model.name)));
    }
    let n = model.base()?.n();
    let dim = model.dim();
    let factor = super::bundle::exp_t(-4.0 / (2.0 * n as f64 + 1.0), dim);
    let mut out = model.clone();
    for i in 1..=3 {
        let w = model.form(&format!("omega{i}"))?.scale(&factor)?;
        out.forms.insert(format!("omega_tilde{i}"), w);
    }
    let g = model.metric.clone();
    out.metric = Field::new(dim, move |p: &ChartPoint| Ok(g.eval(p)?.scale_jet(&factor.eval(p)?)));
    out.name = format!("conformal {}", model.name);
    out.expected.remove("lambda");
    out.expected.remove("holonomy_dim");
    Ok(out)
}

/// Worst coefficient of `d(ω^power)` for the named 2-form.
pub fn balanced_check(model: &SpaceModel, which_form: &str, power: usize, pts: &[ChartPoint]) -> Result<Worst> {
    let w = model.form(which_form)?;
    if w.degree() != 2 {
        return Err(GeomError::Argument(format!("{which_form} has degree {}, not 2", w.degree())));
    }
    let d = w.power(power)?.d()?;
    sup_over(pts, |p| Ok(d.eval(p)?.max_abs()))
}
