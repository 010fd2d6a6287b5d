//! The verification checks a scenario can request.

use std::time::Instant;

use hkbundle_core::curvature::{acs_from_pair, nijenhuis_residual, riemann_ricci_scalar};
use hkbundle_core::einstein_ode::{exponential_lambda, system_residual};
use hkbundle_core::reduction::{
    example1_fibre, example1_quotient_map, example2_fibre, hkqk_inverse, level_set_residual, level_set_restrict,
    moment_map, moment_map_residual, quotient_frame, reduced_metric, two_path_residual, ReducedKind, ReducedParams,
};
use hkbundle_core::spaces::{
    balanced_check, closed_4form_residual, quaternion_residual, structure_equation_residual,
};
use hkbundle_core::{
    einstein_residual, holonomy_dim_estimate, BundleKind, ChartPoint, GeomError, ProfileSet, SampleBox, SpaceModel,
    Worst,
};

use crate::build::{ModelInfo, Setup};
use crate::scenario::{CheckSpec, Sampling, ScenarioError};

/// Every check kind, with its default tolerance.
///
/// First-derivative identities get `1e-8`, curvature-level ones `1e-7`.
pub const CHECKS: &[(&str, f64)] = &[
    ("structure_equations", 1e-8),
    ("closed_4form", 1e-8),
    ("einstein", 1e-7),
    ("nijenhuis", 1e-8),
    ("balanced", 1e-8),
    ("closed_complex", 1e-8),
    ("moment_map", 1e-8),
    ("reduced_metric", 1e-7),
    ("level_set", 1e-8),
    ("two_path", 1e-8),
    ("hkqk_roundtrip", 1e-8),
    ("holonomy_dim", 0.0),
    ("ode_residual", 1e-8),
    ("bianchi", 1e-7),
    ("d_squared", 1e-8),
    ("quaternion", 1e-8),
];

pub fn default_tolerance(kind: &str) -> Option<f64> {
    CHECKS.iter().find(|(k, _)| *k == kind).map(|(_, t)| *t)
}

/// What a check needs from the scenario.
struct Needs {
    model: bool,
    base: bool,
    action: bool,
}

fn needs(kind: &str) -> Needs {
    let (model, base, action) = match kind {
        "reduced_metric" => (false, false, false),
        "quaternion" => (false, true, false),
        "moment_map" | "level_set" | "two_path" | "hkqk_roundtrip" => (true, false, true),
        _ => (true, false, false),
    };
    Needs { model, base, action }
}

/// Reject checks that name things the scenario does not define.
pub fn validate(checks: &[CheckSpec], setup: &Setup) -> Result<(), ScenarioError> {
    let bad = |c: &CheckSpec, msg: String| Err(ScenarioError::Invalid(format!("check {:?}: {msg}", c.display_name())));
    let mut seen = std::collections::BTreeSet::new();
    for c in checks {
        if default_tolerance(&c.check).is_none() {
            let known: Vec<&str> = CHECKS.iter().map(|(k, _)| *k).collect();
            return bad(c, format!("unknown check kind {:?}; known kinds are {}", c.check, known.join(", ")));
        }
        if !seen.insert(c.display_name()) {
            return bad(c, "duplicate check name; give it a distinct `name`".into());
        }
        let n = needs(&c.check);
        if n.model && setup.model.is_none() {
            return bad(c, "needs a [model]".into());
        }
        if n.base && setup.base.is_none() {
            return bad(c, "needs a [base]".into());
        }
        if n.action {
            match &c.action {
                None => return bad(c, "needs an `action`".into()),
                Some(a) if !setup.actions.contains_key(a) => return bad(c, format!("no action named {a:?}")),
                _ => {}
            }
        }
        let require = |field: bool, what: &str| if field { Ok(()) } else { bad(c, format!("needs `{what}`")) };
        match c.check.as_str() {
            "balanced" => {
                require(c.form.is_some(), "form")?;
                require(c.power.is_some(), "power")?;
            }
            "closed_complex" | "d_squared" => require(c.form.is_some(), "form")?,
            "reduced_metric" => require(c.which.is_some(), "which")?,
            "holonomy_dim" => require(c.expected.is_some(), "expected")?,
            _ => {}
        }
        if let Some(m) = &c.mode {
            if m != "exact" && m != "at_most" {
                return bad(c, format!("mode must be exact or at_most, got {m:?}"));
            }
        }
        if let Some(f) = &c.family {
            if f != "model" && f != "exponential" {
                return bad(c, format!("family must be model or exponential, got {f:?}"));
            }
        }
        // forms must exist on a model that was built
        if let Some(Ok(info)) = &setup.model {
            let m = &info.model;
            let mut names: Vec<&String> = c.forms.iter().flatten().collect();
            if c.check != "closed_complex" {
                names.extend(c.form.iter());
            }
            for f in names {
                if !m.forms.contains_key(f) {
                    return bad(c, format!("model {} has no form {f:?}", m.name));
                }
            }
            if c.check == "closed_complex" {
                if let Some(f) = &c.form {
                    if !m.complex_forms.contains_key(f) {
                        return bad(c, format!("model {} has no complex form {f:?}", m.name));
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

/// One row of the report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckRow {
    pub name: String,
    pub check: String,
    pub status: Status,
    pub max_residual: Option<f64>,
    pub worst_point: Option<Vec<f64>>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip)]
    pub elapsed_ms: f64,
}

struct Ctx<'a> {
    setup: &'a Setup,
    sampling: &'a Sampling,
}

impl Ctx<'_> {
    fn model(&self) -> Result<&ModelInfo, GeomError> {
        match &self.setup.model {
            Some(Ok(m)) => Ok(m),
            Some(Err(e)) => Err(GeomError::Construction(format!("model: {e}"))),
            None => Err(GeomError::Argument("scenario has no model".into())),
        }
    }

    fn action(&self, spec: &CheckSpec) -> Result<&hkbundle_core::reduction::LiftedAction, GeomError> {
        let name = spec.action.as_deref().unwrap_or_default();
        match self.setup.actions.get(name) {
            Some(Ok(a)) => Ok(a),
            Some(Err(e)) => Err(GeomError::Construction(format!("action {name}: {e}"))),
            None => Err(GeomError::Argument(format!("no action named {name}"))),
        }
    }

    /// Sample points on `domain`, or on the scenario's box when it has one.
    fn points(&self, domain: &SampleBox) -> Result<Vec<ChartPoint>, GeomError> {
        let s = self.sampling;
        let bx = match (&s.lo, &s.hi) {
            (Some(lo), Some(hi)) => {
                let b = SampleBox::new(lo.clone(), hi.clone())?;
                if b.dim() != domain.dim() {
                    return Err(GeomError::Argument(format!(
                        "sampling box has dimension {}, the chart has {}",
                        b.dim(),
                        domain.dim()
                    )));
                }
                b
            }
            _ => domain.clone(),
        };
        Ok(bx.sample(s.count, s.seed))
    }

    fn model_points(&self, m: &SpaceModel) -> Result<Vec<ChartPoint>, GeomError> {
        self.points(&m.domain)
    }
}

fn max_worst(items: impl IntoIterator<Item = Worst>) -> Worst {
    items.into_iter().fold(Worst::none(), Worst::merge)
}

fn lambda_for(spec: &CheckSpec, m: &SpaceModel) -> Result<f64, GeomError> {
    match spec.lambda {
        Some(l) => Ok(l),
        None => m.expected("lambda"),
    }
}

fn einstein(ctx: &Ctx, spec: &CheckSpec) -> Result<Worst, GeomError> {
    let m = &ctx.model()?.model;
    einstein_residual(&m.metric, lambda_for(spec, m)?, &ctx.model_points(m)?)
}

fn nijenhuis(ctx: &Ctx, spec: &CheckSpec) -> Result<Worst, GeomError> {
    let m = &ctx.model()?.model;
    let names: Vec<String> = match &spec.forms {
        Some(f) => f.clone(),
        None => match &spec.form {
            Some(f) => vec![f.clone()],
            None => ["omega1", "omega2", "omega3", "omega"]
                .iter()
                .filter(|n| m.forms.contains_key(**n))
                .map(|s| s.to_string())
                .collect(),
        },
    };
    if names.is_empty() {
        return Err(GeomError::Argument(format!("model {} has no 2-forms to test", m.name)));
    }
    let pts = ctx.model_points(m)?;
    let mut out = Vec::new();
    for n in names {
        let j = acs_from_pair(&m.metric, m.form(&n)?)?;
        out.push(nijenhuis_residual(&j, &pts)?);
    }
    Ok(max_worst(out))
}

fn closed_complex(ctx: &Ctx, spec: &CheckSpec) -> Result<Worst, GeomError> {
    let m = &ctx.model()?.model;
    let d = m.complex_form(spec.form.as_deref().unwrap_or_default())?.d()?;
    let pts = ctx.model_points(m)?;
    hkbundle_core::sampling::sup_over(&pts, |p| Ok(d.re.eval(p)?.max_abs().max(d.im.eval(p)?.max_abs())))
}

fn moment(ctx: &Ctx, spec: &CheckSpec) -> Result<Worst, GeomError> {
    let m = &ctx.model()?.model;
    let act = ctx.action(spec)?;
    let mm = moment_map(act, m)?;
    moment_map_residual(act, m, &mm.form, &ctx.model_points(m)?)
}

fn reduced(ctx: &Ctx, spec: &CheckSpec) -> Result<Worst, GeomError> {
    let kind = ReducedKind::parse(spec.which.as_deref().unwrap_or_default())?;
    let base = match &ctx.setup.base {
        Some(Ok(b)) => Some(b.clone()),
        _ => None,
    };
    let q = reduced_metric(kind, &ReducedParams { a: spec.a.unwrap_or(2.0), base })?;
    let lambda = spec.lambda.unwrap_or(q.lambda);
    einstein_residual(&q.metric, lambda, &ctx.points(&q.domain)?)
}

fn level(ctx: &Ctx, spec: &CheckSpec) -> Result<Worst, GeomError> {
    let m = &ctx.model()?.model;
    let act = ctx.action(spec)?;
    let level = level_set_restrict(m, act)?;
    level_set_residual(&level, act, &ctx.model_points(&level)?)
}

fn two_path(ctx: &Ctx, spec: &CheckSpec) -> Result<Worst, GeomError> {
    let m = &ctx.model()?.model;
    let act = ctx.action(spec)?;
    let a = act.constants.a;
    let level = level_set_restrict(m, act)?;
    let closed = reduced_metric(ReducedKind::PermutingExample1, &ReducedParams { a, base: None })?;
    two_path_residual(&level, act, &closed.metric, &example1_quotient_map(a), &ctx.model_points(&level)?)
}

fn roundtrip(ctx: &Ctx, spec: &CheckSpec) -> Result<(Worst, String), GeomError> {
    let m = &ctx.model()?.model;
    let act = ctx.action(spec)?;
    let fibre = match spec.fibre.as_deref().unwrap_or("example1") {
        "example1" => example1_fibre(),
        "example2" => example2_fibre(),
        other => return Err(GeomError::Argument(format!("unknown fibre coordinate {other}"))),
    };
    let level = level_set_restrict(m, act)?;
    let fr = quotient_frame(&level, act, &fibre)?;
    let inv = hkqk_inverse(&fr)?;
    let pts = ctx.points(&fr.domain)?;
    let (sig, met) = inv.roundtrip_residual(&fr, &pts)?;
    // the finite-difference checks are costly, so they use a few points
    let few = &pts[..pts.len().min(6)];
    let closed = inv.closedness(few)?;
    let perm = inv.permuting_residual(few)?;
    let note = format!(
        "sigma {:.2e}, metric {:.2e}, closedness {:.2e}, permuting {:.2e}",
        sig.value, met.value, closed.value, perm.value
    );
    Ok((max_worst([sig, met, closed, perm]), note))
}

fn holonomy(ctx: &Ctx, spec: &CheckSpec) -> Result<(Worst, String), GeomError> {
    let m = &ctx.model()?.model;
    let expected = spec.expected.unwrap_or_default();
    let at_most = spec.mode.as_deref() == Some("at_most");
    let pts = ctx.model_points(m)?;
    let mut w = Worst::none();
    let mut dims = Vec::new();
    for p in pts.iter().take(3) {
        let d = holonomy_dim_estimate(&m.metric.eval(p)?)?;
        dims.push(d);
        let r = if at_most { d.saturating_sub(expected) } else { d.abs_diff(expected) };
        w.update(r as f64, p);
    }
    Ok((w, format!("estimated dimensions {dims:?}, expected {expected}")))
}

fn ode(ctx: &Ctx, spec: &CheckSpec) -> Result<Worst, GeomError> {
    let info = ctx.model()?;
    let kind = match (&spec.bundle, info.bundle) {
        (Some(b), _) => BundleKind::parse(b)?,
        (None, Some(b)) => b,
        (None, None) => return Err(GeomError::Argument("model has no bundle type; set `bundle`".into())),
    };
    let n = info.n;
    let s = ctx.sampling;
    if spec.family.as_deref() == Some("exponential") {
        let draws = SampleBox::new(vec![0.5, 0.5, -1.0], vec![2.0, 2.0, 1.0])?.sample(s.count, s.seed);
        return hkbundle_core::sampling::sup_over(&draws, |p| {
            let (a, b, t) = (p.coord(0), p.coord(1), p.coord(2));
            let res = system_residual(&ProfileSet::exponential(a, b)?, n, exponential_lambda(b, n, kind), t, kind)?;
            Ok(res.iter().fold(0.0f64, |m, r| m.max(r.abs())))
        });
    }
    let prof = info
        .profiles
        .as_ref()
        .ok_or_else(|| GeomError::Argument("model has no profiles".into()))?;
    let lambda = lambda_for(spec, &info.model)?;
    let (lo, hi) = prof.t_range;
    let ts = SampleBox::new(vec![lo], vec![hi])?.sample(s.count, s.seed);
    hkbundle_core::sampling::sup_over(&ts, |p| {
        let res = system_residual(prof, n, lambda, p.coord(0), kind)?;
        Ok(res.iter().fold(0.0f64, |m, r| m.max(r.abs())))
    })
}

fn bianchi(ctx: &Ctx) -> Result<Worst, GeomError> {
    let m = &ctx.model()?.model;
    hkbundle_core::sampling::sup_over(&ctx.model_points(m)?, |p| {
        Ok(riemann_ricci_scalar(&m.metric.eval(p)?)?.bianchi_residual())
    })
}

fn d_squared(ctx: &Ctx, spec: &CheckSpec) -> Result<Worst, GeomError> {
    let m = &ctx.model()?.model;
    let f = m.form(spec.form.as_deref().unwrap_or_default())?;
    if f.degree() + 2 > m.dim() {
        return Ok(Worst::none());
    }
    let dd = f.d()?.d()?;
    hkbundle_core::sampling::sup_over(&ctx.model_points(m)?, |p| Ok(dd.eval(p)?.max_abs()))
}

fn quaternion(ctx: &Ctx) -> Result<Worst, GeomError> {
    let b = match &ctx.setup.base {
        Some(Ok(b)) => b,
        Some(Err(e)) => return Err(GeomError::Construction(format!("base: {e}"))),
        None => return Err(GeomError::Argument("scenario has no base".into())),
    };
    quaternion_residual(&b.complex_structures()?, &ctx.points(&b.domain)?)
}

fn dispatch(ctx: &Ctx, spec: &CheckSpec) -> Result<(Worst, Option<String>), GeomError> {
    let plain = |w: Result<Worst, GeomError>| w.map(|w| (w, None));
    let model = || ctx.model().map(|i| &i.model);
    match spec.check.as_str() {
        "structure_equations" => plain(model().and_then(|m| structure_equation_residual(m, &ctx.model_points(m)?))),
        "closed_4form" => plain(model().and_then(|m| closed_4form_residual(m, &ctx.model_points(m)?))),
        "einstein" => plain(einstein(ctx, spec)),
        "nijenhuis" => plain(nijenhuis(ctx, spec)),
        "balanced" => plain(model().and_then(|m| {
            balanced_check(m, spec.form.as_deref().unwrap_or_default(), spec.power.unwrap_or(1), &ctx.model_points(m)?)
        })),
        "closed_complex" => plain(closed_complex(ctx, spec)),
        "moment_map" => plain(moment(ctx, spec)),
        "reduced_metric" => plain(reduced(ctx, spec)),
        "level_set" => plain(level(ctx, spec)),
        "two_path" => plain(two_path(ctx, spec)),
        "hkqk_roundtrip" => roundtrip(ctx, spec).map(|(w, n)| (w, Some(n))),
        "holonomy_dim" => holonomy(ctx, spec).map(|(w, n)| (w, Some(n))),
        "ode_residual" => plain(ode(ctx, spec)),
        "bianchi" => plain(bianchi(ctx)),
        "d_squared" => plain(d_squared(ctx, spec)),
        "quaternion" => plain(quaternion(ctx)),
        other => Err(GeomError::Argument(format!("unknown check {other}"))),
    }
}

/// Run one check and turn the outcome into a report row.
pub fn run_check(setup: &Setup, sampling: &Sampling, spec: &CheckSpec, tolerance: f64) -> CheckRow {
    let start = Instant::now();
    let ctx = Ctx { setup, sampling };
    let mut row = CheckRow {
        name: spec.display_name(),
        check: spec.check.clone(),
        status: Status::Error,
        max_residual: None,
        worst_point: None,
        tolerance,
        message: None,
        elapsed_ms: 0.0,
    };
    match dispatch(&ctx, spec) {
        Ok((w, note)) => {
            row.status = if w.value <= tolerance { Status::Pass } else { Status::Fail };
            row.max_residual = Some(w.value);
            row.worst_point = w.point;
            row.message = note;
        }
        Err(e) => row.message = Some(e.to_string()),
    }
    row.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    row
}
