//! Cohomogeneity-one metrics on the torus bundles over a hyperKähler base:
//! the chart is `(t, y_1[, y_2, y_3], x)`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use super::{assemble_metric, chart_domain, chart_names, dcoord, profile_on_chart, BaseLift, HKData};
use super::{ProfileKind, ProfileSet, SpaceModel};
use crate::calculus::{ChartPoint, Field, ScalarField};
use crate::curvature::{acs_from_pair, acs_from_pair_jet, EndomorphismField};
use crate::error::{GeomError, Result};
use crate::exterior::{FormJet, KFormField};
use crate::sampling::{sup_over, Worst};

/// The four bundle geometries over a base `M^{4n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleKind {
    /// `ℝ_t × M`, warped product.
    Q,
    /// Adds the circle with connection `α`.
    P,
    /// Adds `α` and `ξ`.
    L,
    /// Adds `α`, `ξ` and `η`.
    N,
}

impl BundleKind {
    /// Number of circle fibres.
    pub fn fibres(self) -> usize {
        match self {
            BundleKind::Q => 0,
            BundleKind::P => 1,
            BundleKind::L => 2,
            BundleKind::N => 3,
        }
    }

    /// `λ/b²` for the exponential profiles over a base of quaternionic dimension `n`.
    pub fn einstein_constant(self, n: usize) -> f64 {
        -(4.0 * n as f64 + 4.0 * self.fibres() as f64)
    }

    /// Dimension of the holonomy algebra over a flat base.
    pub fn flat_holonomy_dim(self, n: usize) -> usize {
        match self {
            BundleKind::Q => (4 * n + 1) * (4 * n) / 2,
            BundleKind::P => (2 * n + 1) * (2 * n + 1),
            BundleKind::L => (4 * n + 3) * (4 * n + 2) / 2,
            BundleKind::N => (n + 1) * (2 * n + 3) + 3,
        }
    }

    pub fn parse(s: &str) -> Result<BundleKind> {
        match s {
            "Q" => Ok(BundleKind::Q),
            "P" => Ok(BundleKind::P),
            "L" => Ok(BundleKind::L),
            "N" => Ok(BundleKind::N),
            _ => Err(GeomError::Argument(format!("unknown bundle kind {s}"))),
        }
    }
}

impl fmt::Display for BundleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BundleKind::Q => "Q",
            BundleKind::P => "P",
            BundleKind::L => "L",
            BundleKind::N => "N",
        };
        f.write_str(s)
    }
}

/// Connection 1-forms on the total chart.
#[derive(Debug, Clone)]
pub struct Connections {
    pub alpha: Option<KFormField>,
    pub xi: Option<KFormField>,
    pub eta: Option<KFormField>,
}

/// `α = dy_1 + κ_1`, `ξ = dy_2 − κ_2`, `η = dy_3 − κ_3`, so that
/// `dα = σ_1`, `dξ = −σ_2`, `dη = −σ_3`.
pub fn default_connections(base: &HKData, kind: BundleKind) -> Result<Connections> {
    let f = kind.fibres();
    let dim = 1 + f + base.dim();
    if f == 0 {
        return Ok(Connections {
            alpha: None,
            xi: None,
            eta: None,
        });
    }
    let kappa = base.kappa()?;
    let lift = BaseLift::new(dim, 1 + f, base.dim())?;
    let conn = |i: usize, sign: f64| -> Result<Option<KFormField>> {
        if i > f {
            return Ok(None);
        }
        Ok(Some(dcoord(i, dim)?.add(&lift.form(&kappa[i - 1])?.scale_f64(sign))?))
    };
    Ok(Connections {
        alpha: conn(1, 1.0)?,
        xi: conn(2, -1.0)?,
        eta: conn(3, -1.0)?,
    })
}

/// Build `Q`, `P`, `L` or `N` with the default connections.
pub fn build_model(base: &HKData, profiles: &ProfileSet, kind: BundleKind) -> Result<SpaceModel> {
    build_model_with(base, profiles, kind, default_connections(base, kind)?)
}

/// Build a bundle model with explicitly supplied connection forms.
///
/// The metric is `dt² + p²g_M + q²α² + r²ξ² + s²η²`, truncated to the
/// fibres present.
pub fn build_model_with(
    base: &HKData,
    profiles: &ProfileSet,
    kind: BundleKind,
    conn: Connections,
) -> Result<SpaceModel> {
    let f = kind.fibres();
    let dim = 1 + f + base.dim();
    let offset = 1 + f;
    let need = [&profiles.p, &profiles.q, &profiles.r, &profiles.s];
    let names = ["p", "q", "r", "s"];
    let mut prof = Vec::new();
    for i in 0..=f {
        let pf = need[i]
            .as_ref()
            .ok_or_else(|| GeomError::Argument(format!("model {kind} needs profile {}", names[i])))?;
        prof.push(profile_on_chart(pf, dim));
    }
    let conns = [&conn.alpha, &conn.xi, &conn.eta];
    let mut fibre_forms = Vec::new();
    for i in 0..f {
        let c = conns[i]
            .clone()
            .ok_or_else(|| GeomError::Argument(format!("model {kind} needs connection {}", i + 1)))?;
        if c.dim() != dim || c.degree() != 1 {
            return Err(GeomError::Argument("connection forms must be 1-forms on the total chart".into()));
        }
        fibre_forms.push(c);
    }
    let lift = BaseLift::new(dim, offset, base.dim())?;
    let sq = |j: &ScalarField| j.apply(|x| Ok(x.square()));
    let dt = dcoord(0, dim)?;
    let mut squares = vec![(ScalarField::constant(1.0, dim), dt.clone())];
    for i in 0..f {
        squares.push((sq(&prof[i + 1]), fibre_forms[i].clone()));
    }
    let p2 = sq(&prof[0]);
    let metric = assemble_metric(dim, Some((p2.clone(), lift.metric(&base.g)?)), squares)?;

    let mut forms = BTreeMap::new();
    forms.insert("dt".to_string(), dt.clone());
    let sigma: Vec<KFormField> = base.sigma.iter().map(|s| lift.form(s)).collect::<Result<_>>()?;
    for (i, s) in sigma.iter().enumerate() {
        forms.insert(format!("sigma{}", i + 1), s.clone());
    }
    let fibre_names = ["alpha", "xi", "eta"];
    for i in 0..f {
        forms.insert(fibre_names[i].to_string(), fibre_forms[i].clone());
    }
    if kind == BundleKind::P {
        let w = dt.wedge(&fibre_forms[0])?.scale(&prof[1])?.add(&sigma[0].scale(&p2)?)?;
        forms.insert("omega_P".to_string(), w);
    }
    if kind == BundleKind::N {
        // frame e_t = dt, e_α = qα, e_ξ = rξ, e_η = sη
        let ea = fibre_forms[0].scale(&prof[1])?;
        let ex = fibre_forms[1].scale(&prof[2])?;
        let ee = fibre_forms[2].scale(&prof[3])?;
        let w1 = sigma[0].scale(&p2)?.add(&ex.wedge(&ee)?)?.add(&dt.wedge(&ea)?)?;
        let w2 = sigma[1].scale(&p2)?.add(&ex.wedge(&dt)?)?.add(&ea.wedge(&ee)?)?;
        let w3 = sigma[2].scale(&p2)?.add(&ex.wedge(&ea)?)?.add(&ee.wedge(&dt)?)?;
        let omega = KFormField::sum(&[w1.wedge(&w1)?, w2.wedge(&w2)?, w3.wedge(&w3)?])?.scale_f64(0.5);
        forms.insert("omega1".to_string(), w1);
        forms.insert("omega2".to_string(), w2);
        forms.insert("omega3".to_string(), w3);
        forms.insert("Omega".to_string(), omega);
    }

    let n = base.n();
    let mut expected = BTreeMap::new();
    match profiles.kind {
        ProfileKind::Exponential { b, .. } => {
            expected.insert("lambda".to_string(), kind.einstein_constant(n) * b * b);
            if base.flat {
                expected.insert("holonomy_dim".to_string(), kind.flat_holonomy_dim(n) as f64);
            }
        }
        ProfileKind::Calabi { .. } if kind == BundleKind::P => {
            expected.insert("lambda".to_string(), 0.0);
        }
        _ => {}
    }
    let fibre_coords = ["t", "y1", "y2", "y3"];
    let (t0, t1) = profiles.t_range;
    let mut lo = vec![t0];
    let mut hi = vec![t1];
    lo.extend(std::iter::repeat_n(-1.0, f));
    hi.extend(std::iter::repeat_n(1.0, f));
    Ok(SpaceModel {
        name: format!("{kind}^{dim} over {}", base.label),
        coords: chart_names(&fibre_coords[..=f], base),
        metric,
        forms,
        complex_forms: BTreeMap::new(),
        expected,
        profile: Some(profiles.clone()),
        base: Some(base.clone()),
        base_offset: offset,
        domain: chart_domain(lo, hi, base)?,
    })
}

fn require_standard_n(model: &SpaceModel) -> Result<()> {
    let standard = matches!(
        model.profile.as_ref().map(|p| &p.kind),
        Some(ProfileKind::Exponential { a, b }) if *a == 1.0 && *b == 1.0
    );
    if !standard || !model.forms.contains_key("omega1") {
        return Err(GeomError::Precondition(format!(
            "{} is not N with p = e^t, q = r = s = 2e^(2t)",
            model.name
        )));
    }
    Ok(())
}

/// Worst coefficient of
/// `dω_1 + 4e^{2t}η∧ω_2 − 4e^{2t}ξ∧ω_3`,
/// `dω_2 − 4e^{2t}η∧ω_1 − 4e^{2t}α∧ω_3`,
/// `dω_3 + 4e^{2t}ξ∧ω_1 + 4e^{2t}α∧ω_2`.
pub fn structure_equation_residual(model: &SpaceModel, pts: &[ChartPoint]) -> Result<Worst> {
    require_standard_n(model)?;
    let names = ["omega1", "omega2", "omega3", "alpha", "xi", "eta"];
    let fs: Vec<KFormField> = names.iter().map(|n| model.form(n).cloned()).collect::<Result<_>>()?;
    sup_over(pts, |p| {
        let v: Vec<FormJet> = fs.iter().map(|f| f.eval(p)).collect::<Result<_>>()?;
        let (w1, w2, w3, a, x, e) = (&v[0], &v[1], &v[2], &v[3], &v[4], &v[5]);
        let c = (p.lift(0) * 2.0).exp() * 4.0;
        let r1 = w1.d()?.sub(&e.wedge(w2)?.scale(&c).scale_f64(-1.0).add(&x.wedge(w3)?.scale(&c))?)?;
        let r2 = w2.d()?.sub(&e.wedge(w1)?.add(&a.wedge(w3)?)?.scale(&c))?;
        let r3 = w3.d()?.add(&x.wedge(w1)?.add(&a.wedge(w2)?)?.scale(&c))?;
        Ok(r1.max_abs().max(r2.max_abs()).max(r3.max_abs()))
    })
}

/// Worst coefficient of `dΩ`.
pub fn closed_4form_residual(model: &SpaceModel, pts: &[ChartPoint]) -> Result<Worst> {
    let d = model.form("Omega")?.d()?;
    sup_over(pts, |p| Ok(d.eval(p)?.max_abs()))
}

/// Worst coefficient of `ω_P + ½ d(d^c t)` with `d^c t := dt ∘ J`.
pub fn kahler_potential_residual(model: &SpaceModel, pts: &[ChartPoint]) -> Result<Worst> {
    let w = model.form("omega_P")?.clone();
    let g = model.metric.clone();
    let dim = model.dim();
    let (g2, w2) = (g.clone(), w.clone());
    let dct = KFormField::new(dim, 1, move |p| {
        let j = acs_from_pair_jet(&g2.eval(p)?, &w2.eval(p)?)?;
        FormJet::from_terms(dim, 1, (0..dim).map(|k| (vec![k], j.get(0, k).clone())).collect())
    })?;
    let ddc = dct.d()?;
    sup_over(pts, |p| Ok(w.eval(p)?.add(&ddc.eval(p)?.scale_f64(0.5))?.max_abs()))
}

/// Worst deviation from `ω(·, J·) = g` for each named 2-form, and from
/// `I_1 I_2 = I_3` when three names are given.
pub fn hermitian_residual(model: &SpaceModel, names: &[&str], pts: &[ChartPoint]) -> Result<Worst> {
    let js: Vec<EndomorphismField> = names
        .iter()
        .map(|n| acs_from_pair(&model.metric, model.form(n)?))
        .collect::<Result<_>>()?;
    let ws: Vec<KFormField> = names.iter().map(|n| model.form(n).cloned()).collect::<Result<_>>()?;
    let dim = model.dim();
    sup_over(pts, |p| {
        let g = model.metric.eval(p)?.values();
        let mut r: f64 = 0.0;
        let mut mats = Vec::new();
        for (j, w) in js.iter().zip(&ws) {
            let jv = j.eval(p)?.values();
            let wj = w.eval(p)?;
            let wm = DMatrix::from_fn(dim, dim, |a, b| wj.coeff(&[a, b]).value());
            r = r.max((&wm * &jv - &g).amax());
            mats.push(jv);
        }
        if mats.len() == 3 {
            r = r.max((&mats[0] * &mats[1] - &mats[2]).amax());
        }
        Ok(r)
    })
}

/// Worst deviation of `g(X_a^h, X_b^h)` from `p² g_M(∂_a, ∂_b)` for the
/// horizontal lifts of base coordinate fields, together with the mixed
/// horizontal–vertical components.
pub fn submersion_residual(model: &SpaceModel, pts: &[ChartPoint]) -> Result<Worst> {
    let base = model.base()?.clone();
    let prof = model
        .profile
        .as_ref()
        .and_then(|p| p.p.clone())
        .ok_or_else(|| GeomError::Argument("model has no warping profile p".into()))?;
    let dim = model.dim();
    let off = model.base_offset;
    let fibres: Vec<(usize, KFormField)> = ["alpha", "xi", "eta"]
        .iter()
        .enumerate()
        .filter_map(|(i, n)| model.forms.get(*n).map(|f| (i + 1, f.clone())))
        .collect();
    let p2 = profile_on_chart(&prof, dim).apply(|j| Ok(j.square()));
    sup_over(pts, |p| {
        let g = model.metric.eval(p)?.values();
        let bp = ChartPoint::new(p.coords()[off..].to_vec())?;
        let gm = base.g.eval(&bp)?.values();
        let w = p2.eval(p)?.value();
        let coeffs: Vec<(usize, FormJet)> =
            fibres.iter().map(|(i, f)| f.eval(p).map(|v| (*i, v))).collect::<Result<_>>()?;
        let lift = |a: usize| {
            let mut v = nalgebra::DVector::<f64>::zeros(dim);
            v[off + a] = 1.0;
            for (i, c) in &coeffs {
                v[*i] -= c.coeff(&[off + a]).value();
            }
            v
        };
        let nb = base.dim();
        let lifts: Vec<_> = (0..nb).map(lift).collect();
        let mut r: f64 = 0.0;
        for a in 0..nb {
            for b in 0..nb {
                let h = (lifts[a].transpose() * &g * &lifts[b])[(0, 0)];
                r = r.max((h - w * gm[(a, b)]).abs());
            }
            for v in 0..off {
                r = r.max((&g * &lifts[a])[v].abs());
            }
        }
        Ok(r)
    })
}

/// Scalar `e^{ct}` on a chart whose coordinate 0 is `t`.
pub(crate) fn exp_t(c: f64, dim: usize) -> ScalarField {
    Field::new(dim, move |p: &ChartPoint| Ok((p.lift(0) * c).exp()))
}
