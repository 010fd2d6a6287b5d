//! Turn a parsed scenario into core objects.
//!
//! Malformed input (bad expressions, unknown names) is a [`ScenarioError`].
//! Geometric failures during construction are kept as [`GeomError`] values
//! so that the checks depending on them can be reported as errors.

use std::collections::BTreeMap;

use hkbundle_core::reduction::{
    build_lift, build_lift_with, example1_base, example2_base, general_combination, reduced_metric,
    ActionConstants, ActionKind, LiftedAction, QuotientModel, ReducedKind, ReducedParams,
};
use hkbundle_core::spaces::{
    balanced_m6, build_hypercomplex, build_model, conformal_balanced, flat_base, gh_linear_example,
    gibbons_hawking, half_plane_rotation, radial_field, radial_potentials, ricci_flat_special, rotation_v,
    rotation_w, HypercomplexShape, SpecialKind,
};
use hkbundle_core::{
    BundleKind, GeomError, HKData, KFormField, ProfileSet, SampleBox, ScalarField, SpaceModel, VectorField,
};

use crate::expr;
use crate::scenario::{ActionSpec, BaseSpec, FormSpec, ModelSpec, PotentialChoice, ProfileSpec, Scenario, ScenarioError};

pub type Built<T> = Result<T, GeomError>;

/// The model under test together with what the ODE checks need.
#[derive(Debug, Clone)]
pub struct ModelInfo {
    pub model: SpaceModel,
    pub bundle: Option<BundleKind>,
    pub profiles: Option<ProfileSet>,
    /// Quaternionic dimension of the base.
    pub n: usize,
}

#[derive(Debug)]
pub struct Setup {
    pub base: Option<Built<HKData>>,
    pub model: Option<Built<ModelInfo>>,
    pub actions: BTreeMap<String, Built<LiftedAction>>,
}

fn compile(src: &str, vars: &[String], context: impl Fn() -> String) -> Result<ScalarField, ScenarioError> {
    expr::compile(src, vars).map_err(|source| ScenarioError::Expression {
        context: context(),
        source,
    })
}

fn one_form(spec: &FormSpec, vars: &[String], what: &str) -> Result<KFormField, ScenarioError> {
    let mut terms = Vec::with_capacity(spec.len());
    for (coord, src) in spec {
        let i = vars.iter().position(|v| v == coord).ok_or_else(|| {
            ScenarioError::Invalid(format!("{what}: {coord:?} is not a coordinate ({})", vars.join(", ")))
        })?;
        terms.push((vec![i], compile(src, vars, || format!("{what}, d{coord} coefficient"))?));
    }
    KFormField::from_coeffs(vars.len(), 1, terms).map_err(|e| ScenarioError::Invalid(format!("{what}: {e}")))
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn invalid(e: GeomError) -> ScenarioError {
    ScenarioError::Invalid(e.to_string())
}

/// Compile a GH base; expressions are checked eagerly, geometry lazily.
fn gibbons_hawking_base(
    v: &str,
    theta: &FormSpec,
    lo: &[f64],
    hi: &[f64],
    kappa: Option<&Vec<FormSpec>>,
) -> Result<Built<HKData>, ScenarioError> {
    let chart = names(&["u1", "u2", "u3", "y"]);
    let v = compile(v, &chart[..3], || "base V".into())?;
    let theta = one_form(theta, &chart, "base θ")?;
    let domain = SampleBox::new(lo.to_vec(), hi.to_vec()).map_err(invalid)?;
    let kappa = match kappa {
        None => None,
        Some(k) if k.len() == 3 => Some([
            one_form(&k[0], &chart, "base κ1")?,
            one_form(&k[1], &chart, "base κ2")?,
            one_form(&k[2], &chart, "base κ3")?,
        ]),
        Some(k) => return Err(ScenarioError::Invalid(format!("base needs three potentials, got {}", k.len()))),
    };
    Ok(gibbons_hawking(&v, &theta, domain).and_then(|b| match kappa {
        Some(k) => b.with_kappa(k),
        None => Ok(b),
    }))
}

fn base(spec: &BaseSpec) -> Result<Built<HKData>, ScenarioError> {
    Ok(match spec {
        BaseSpec::Flat { n, torus, potentials } => {
            let (n, torus, potentials) = (*n, *torus, *potentials);
            flat_base(n, torus).and_then(|b| match potentials {
                PotentialChoice::Default => Ok(b),
                PotentialChoice::Radial => b.with_kappa(radial_potentials(n)?),
            })
        }
        BaseSpec::GibbonsHawking { v, theta, lo, hi, kappa } => {
            return gibbons_hawking_base(v, theta, lo, hi, kappa.as_ref())
        }
        BaseSpec::GhLinear => gh_linear_example(),
        BaseSpec::Example1 => example1_base(),
        BaseSpec::Example2 => example2_base(),
    })
}

fn profiles(spec: &ProfileSpec) -> Result<Built<ProfileSet>, ScenarioError> {
    Ok(match spec {
        ProfileSpec::Exponential { a, b } => ProfileSet::exponential(*a, *b),
        ProfileSpec::Calabi { n } => ProfileSet::calabi(*n),
        ProfileSpec::Custom { p, q, r, s, t_lo, t_hi } => {
            let t = names(&["t"]);
            let field = |src: &Option<String>, name: &str| -> Result<Option<ScalarField>, ScenarioError> {
                src.as_deref().map(|s| compile(s, &t, || format!("profile {name}"))).transpose()
            };
            let (p, q, r, s) = (field(p, "p")?, field(q, "q")?, field(r, "r")?, field(s, "s")?);
            let (lo, hi) = (*t_lo, *t_hi);
            ProfileSet::new(p, q, r, s).and_then(|set| match (lo, hi) {
                (Some(lo), Some(hi)) => set.with_t_range(lo, hi),
                (None, None) => Ok(set),
                _ => Err(GeomError::Argument("give both t_lo and t_hi".into())),
            })
        }
    })
}

fn bundle_kind(s: &str) -> Result<BundleKind, ScenarioError> {
    BundleKind::parse(s).map_err(invalid)
}

/// A closed-form quotient presented as a model without a base.
fn quotient_as_model(q: QuotientModel) -> SpaceModel {
    SpaceModel {
        name: q.name,
        coords: q.coords,
        metric: q.metric,
        forms: q.forms,
        complex_forms: BTreeMap::new(),
        expected: BTreeMap::from([("lambda".to_string(), q.lambda)]),
        profile: None,
        base: None,
        base_offset: 0,
        domain: q.domain,
    }
}

fn need_base<'a>(base: Option<&'a Built<HKData>>, what: &str) -> Result<&'a Built<HKData>, ScenarioError> {
    base.ok_or_else(|| ScenarioError::Invalid(format!("a {what} model needs a [base]")))
}

fn model(spec: &ModelSpec, base: Option<&Built<HKData>>) -> Result<Built<ModelInfo>, ScenarioError> {
    let n_of = |b: &HKData| b.n();
    Ok(match spec {
        ModelSpec::Bundle { bundle, profiles: prof } => {
            let kind = bundle_kind(bundle)?;
            let prof = profiles(prof)?;
            let base = need_base(base, "bundle")?;
            base.clone().and_then(|b| {
                let prof = prof?;
                Ok(ModelInfo {
                    model: build_model(&b, &prof, kind)?,
                    bundle: Some(kind),
                    profiles: Some(prof),
                    n: n_of(&b),
                })
            })
        }
        ModelSpec::Hypercomplex { shape, potentials } => {
            let shape = match shape.as_str() {
                "bundle" => HypercomplexShape::Bundle,
                "instanton" => HypercomplexShape::Instanton,
                other => return Err(ScenarioError::Invalid(format!("unknown hypercomplex shape {other:?}"))),
            };
            let base = need_base(base, "hypercomplex")?;
            let coords = match base {
                Ok(b) => b.coords.clone(),
                Err(e) => return Ok(Err(e.clone())),
            };
            let forms = potentials
                .iter()
                .enumerate()
                .map(|(i, f)| one_form(f, &coords, &format!("potential {}", i + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            base.clone().and_then(|b| {
                Ok(ModelInfo {
                    model: build_hypercomplex(&b, &forms, shape)?,
                    bundle: None,
                    profiles: None,
                    n: n_of(&b),
                })
            })
        }
        ModelSpec::Special { which, b, c } => {
            let kind = SpecialKind::parse(which).map_err(invalid)?;
            let bundle = match kind {
                SpecialKind::CalabiP => BundleKind::P,
                SpecialKind::G2L7 => BundleKind::L,
                SpecialKind::Spin7N8 => BundleKind::N,
            };
            ricci_flat_special(kind, *b, *c).map(|m| ModelInfo {
                profiles: m.profile.clone(),
                model: m,
                bundle: Some(bundle),
                n: 1,
            })
        }
        ModelSpec::BalancedM6 => need_base(base, "balanced_m6")?.clone().and_then(|b| {
            Ok(ModelInfo {
                model: balanced_m6(&b)?,
                bundle: None,
                profiles: None,
                n: n_of(&b),
            })
        }),
        ModelSpec::ConformalN { profiles: prof } => {
            let prof = profiles(prof)?;
            need_base(base, "conformal_n")?.clone().and_then(|b| {
                let m = build_model(&b, &prof?, BundleKind::N)?;
                Ok(ModelInfo {
                    model: conformal_balanced(&m)?,
                    bundle: None,
                    profiles: None,
                    n: n_of(&b),
                })
            })
        }
        ModelSpec::Reduced { which, a } => {
            let kind = ReducedKind::parse(which).map_err(invalid)?;
            let params = ReducedParams {
                a: *a,
                base: base.and_then(|b| b.as_ref().ok().cloned()),
            };
            reduced_metric(kind, &params).map(|q| ModelInfo {
                model: quotient_as_model(q),
                bundle: None,
                profiles: None,
                n: 1,
            })
        }
    })
}

fn base_field(name: &str, n: usize) -> Result<Built<VectorField>, ScenarioError> {
    Ok(match name {
        "radial" => radial_field(n),
        "rotation_v" => rotation_v(n),
        "rotation_w" => rotation_w(n),
        "half_plane" => half_plane_rotation(),
        other => return Err(ScenarioError::Invalid(format!("unknown base field {other:?}"))),
    })
}

fn action(spec: &ActionSpec, base: Option<&Built<HKData>>) -> Result<Built<LiftedAction>, ScenarioError> {
    let kind = ActionKind::parse(&spec.kind).map_err(invalid)?;
    let k = ActionConstants {
        a: spec.a,
        b: spec.b,
        c: spec.c,
        u: spec.u,
        v: spec.v,
        w: spec.w,
    };
    let base = base.ok_or_else(|| ScenarioError::Invalid(format!("action {} needs a [base]", spec.name)))?;
    let b = match base {
        Ok(b) => b,
        Err(e) => return Ok(Err(e.clone())),
    };
    if kind == ActionKind::Combination {
        return Ok(general_combination(b, k));
    }
    Ok(match &spec.field {
        Some(name) => base_field(name, b.n())?.and_then(|x| build_lift_with(b, Some(&x), kind, k)),
        None => build_lift(b, kind, k),
    })
}

/// Build everything a scenario describes.
pub fn setup(sc: &Scenario) -> Result<Setup, ScenarioError> {
    let base = sc.base.as_ref().map(base).transpose()?;
    let model = sc.model.as_ref().map(|m| model(m, base.as_ref())).transpose()?;
    let mut actions = BTreeMap::new();
    for a in &sc.actions {
        if actions.contains_key(&a.name) {
            return Err(ScenarioError::Invalid(format!("action {:?} is defined twice", a.name)));
        }
        actions.insert(a.name.clone(), action(a, base.as_ref())?);
    }
    Ok(Setup { base, model, actions })
}
