//! Torus actions on the Einstein bundle `N`, their moment maps and the
//! quaternion-Kähler quotients they produce.
//!
//! The chart of `N` is `(t, y_1, y_2, y_3, x)`. A field `X` on the base is
//! lifted so that it preserves the connection forms up to the rotation it
//! induces on the triple.

mod correspondence;
mod quotient;

use crate::calculus::{ChartPoint, Field, Jet2, ScalarField};
use crate::curvature::killing_residual;
use crate::error::{GeomError, Result};
use crate::exterior::{add_vector_fields, linear_vector_field, scale_vector_field, KFormField, VectorField, VectorJet};
use crate::sampling::{sup_over, Worst};
use crate::spaces::{kind_residual, HKData, KillingKind, SpaceModel};

pub use correspondence::{
    connection_residual, example1_base, example1_fibre, example1_quotient_map, example2_base, example2_fibre,
    fd_exterior_derivative, fd_lie, frame_identities, hkqk_inverse, horizontal_residual, level_set_residual,
    level_set_restrict, quotient_frame, reduced_on_level, two_path_residual, FrameIdentities, InverseData,
    QuotientFrame,
};
pub use quotient::{reduced_metric, QuotientModel, ReducedKind, ReducedParams};

/// How a lifted field acts on the triple `ω_i` of `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Triholomorphic,
    Permuting,
    Homothetic,
    /// Translation of the fibre coordinates `y_i`.
    Vertical,
    /// A linear combination of the others.
    Combination,
}

impl ActionKind {
    pub fn parse(s: &str) -> Result<ActionKind> {
        match s {
            "triholomorphic" => Ok(ActionKind::Triholomorphic),
            "permuting" => Ok(ActionKind::Permuting),
            "homothetic" => Ok(ActionKind::Homothetic),
            "vertical" => Ok(ActionKind::Vertical),
            "combination" => Ok(ActionKind::Combination),
            _ => Err(GeomError::Argument(format!("unknown action kind {s}"))),
        }
    }

    fn killing(self) -> Option<KillingKind> {
        match self {
            ActionKind::Triholomorphic => Some(KillingKind::Triholomorphic),
            ActionKind::Permuting => Some(KillingKind::Permuting),
            ActionKind::Homothetic => Some(KillingKind::Homothetic),
            _ => None,
        }
    }
}

/// Constants of a lift. `a` shifts a permuting lift along `∂_{y_1}`;
/// `(a, b, c)` give the vertical field `−a∂_{y_1} + b∂_{y_2} + c∂_{y_3}`.
/// `u, v, w` are only used by [`general_combination`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActionConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

/// A vector field on the chart of `N`.
#[derive(Debug, Clone)]
pub struct LiftedAction {
    pub kind: ActionKind,
    /// The field on the base, absent for vertical actions.
    pub base_field: Option<VectorField>,
    pub lift: VectorField,
    pub constants: ActionConstants,
    /// Total weight of permuting pieces: `L ω_2 = −2w ω_3`, `L ω_3 = 2w ω_2`.
    pub permuting_weight: f64,
}

/// Offset of the base block in the chart of `N`.
const BASE_OFFSET: usize = 4;
const LIFT_TOLERANCE: f64 = 1e-9;
const MOMENT_TOLERANCE: f64 = 1e-8;
const MOMENT_SAMPLES: usize = 12;
const MOMENT_SEED: u64 = 0x6d75;

/// A base field viewed on the product chart, with no fibre components.
fn embed_base_field(x: &VectorField, dim: usize) -> VectorField {
    let x = x.clone();
    let nb = x.dim();
    Field::new(dim, move |p: &ChartPoint| {
        let q = ChartPoint::new(p.coords()[BASE_OFFSET..BASE_OFFSET + nb].to_vec())?;
        let v = x.eval(&q)?;
        let mut comps = vec![p.constant(0.0); dim];
        for (i, c) in v.comps().iter().enumerate() {
            comps[BASE_OFFSET + i] = c.embed(BASE_OFFSET, dim);
        }
        VectorJet::new(comps)
    })
}

/// Affine field on the `(t, y)` block: `rows[i]` holds the linear
/// coefficients in `(t, y_1, y_2, y_3)` and `shift[i]` the constant.
fn fibre_field(dim: usize, rows: [[f64; 4]; 4], shift: [f64; 4]) -> Result<VectorField> {
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for i in 0..4 {
        a[i][..4].copy_from_slice(&rows[i]);
        b[i] = shift[i];
    }
    linear_vector_field(a, b)
}

/// Check `L_X κ` against what the lift needs:
/// `0` for triholomorphic, `(0, −2κ_3, 2κ_2)` for permuting and `−2κ` for
/// homothetic fields.
fn potential_action_residual(base: &HKData, x: &VectorField, kind: KillingKind, pts: &[ChartPoint]) -> Result<Worst> {
    let k = base.kappa()?;
    let target: [KFormField; 3] = match kind {
        KillingKind::Triholomorphic => [
            KFormField::zero(base.dim(), 1),
            KFormField::zero(base.dim(), 1),
            KFormField::zero(base.dim(), 1),
        ],
        KillingKind::Permuting => [KFormField::zero(base.dim(), 1), k[2].scale_f64(-2.0), k[1].scale_f64(2.0)],
        KillingKind::Homothetic => [k[0].scale_f64(-2.0), k[1].scale_f64(-2.0), k[2].scale_f64(-2.0)],
    };
    let lie: Vec<KFormField> = k.iter().map(|ki| ki.lie(x)).collect::<Result<_>>()?;
    sup_over(pts, |p| {
        let mut m: f64 = 0.0;
        for (l, t) in lie.iter().zip(&target) {
            m = m.max(l.eval(p)?.sub(&t.eval(p)?)?.max_abs());
        }
        Ok(m)
    })
}

/// Lift the Killing field carried by `base`.
pub fn build_lift(base: &HKData, kind: ActionKind, constants: ActionConstants) -> Result<LiftedAction> {
    if kind == ActionKind::Vertical {
        return build_lift_with(base, None, kind, constants);
    }
    let (x, k) = base
        .killing
        .as_ref()
        .ok_or_else(|| GeomError::Argument(format!("base {} carries no Killing field", base.label)))?;
    if Some(*k) != kind.killing() {
        return Err(GeomError::Argument(format!(
            "base field is {} but a {kind:?} lift was requested",
            k.name()
        )));
    }
    build_lift_with(base, Some(x), kind, constants)
}

/// Lift an explicit base field.
///
/// The field's action on the triple and on the potentials is checked on the
/// base domain; a mismatch is a construction error.
pub fn build_lift_with(
    base: &HKData,
    field: Option<&VectorField>,
    kind: ActionKind,
    constants: ActionConstants,
) -> Result<LiftedAction> {
    let dim = BASE_OFFSET + base.dim();
    let z = [0.0; 4];
    let (fibre, weight) = match kind {
        ActionKind::Triholomorphic => (None, 0.0),
        // X − 2(y_3∂_{y_2} − y_2∂_{y_3}) − (a/2)∂_{y_1}
        ActionKind::Permuting => (
            Some(fibre_field(
                dim,
                [z, z, [0.0, 0.0, 0.0, -2.0], [0.0, 0.0, 2.0, 0.0]],
                [0.0, -0.5 * constants.a, 0.0, 0.0],
            )?),
            1.0,
        ),
        // X − 2Σ y_i∂_{y_i} + ∂_t
        ActionKind::Homothetic => (
            Some(fibre_field(
                dim,
                [z, [0.0, -2.0, 0.0, 0.0], [0.0, 0.0, -2.0, 0.0], [0.0, 0.0, 0.0, -2.0]],
                [1.0, 0.0, 0.0, 0.0],
            )?),
            0.0,
        ),
        ActionKind::Vertical => (
            Some(fibre_field(dim, [z; 4], [0.0, -constants.a, constants.b, constants.c])?),
            0.0,
        ),
        ActionKind::Combination => {
            return Err(GeomError::Argument("combinations are built with combine".into()));
        }
    };
    let lift = match (kind, field) {
        (ActionKind::Vertical, None) => fibre.expect("vertical lifts have a fibre part"),
        (ActionKind::Vertical, Some(_)) => {
            return Err(GeomError::Argument("a vertical action has no base field".into()));
        }
        (_, None) => return Err(GeomError::Argument(format!("a {kind:?} lift needs a base field"))),
        (_, Some(x)) => {
            if x.dim() != base.dim() {
                return Err(GeomError::Argument("field does not live on the base chart".into()));
            }
            let kk = kind.killing().expect("non-vertical kinds act on the base");
            let pts = base.check_points();
            let w = kind_residual(&base.sigma, x, kk, &pts)?;
            if w.value > LIFT_TOLERANCE {
                return Err(GeomError::Construction(format!(
                    "base field is not {} (residual {:e} at {:?})",
                    kk.name(),
                    w.value,
                    w.point
                )));
            }
            let w = potential_action_residual(base, x, kk, &pts)?;
            if w.value > LIFT_TOLERANCE {
                return Err(GeomError::Construction(format!(
                    "potentials are not adapted to the {} field (residual {:e} at {:?})",
                    kk.name(),
                    w.value,
                    w.point
                )));
            }
            let emb = embed_base_field(x, dim);
            match fibre {
                Some(f) => add_vector_fields(&emb, &f)?,
                None => emb,
            }
        }
    };
    Ok(LiftedAction {
        kind,
        base_field: field.cloned(),
        lift,
        constants,
        permuting_weight: weight,
    })
}

/// `Σ c_i X̃_i`.
pub fn combine(parts: &[(f64, &LiftedAction)]) -> Result<LiftedAction> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| GeomError::Argument("nothing to combine".into()))?;
    let mut lift = scale_vector_field(&first.1.lift, first.0);
    let mut base = first.1.base_field.as_ref().map(|x| scale_vector_field(x, first.0));
    let mut weight = first.0 * first.1.permuting_weight;
    for (c, a) in rest {
        if a.lift.dim() != lift.dim() {
            return Err(GeomError::Argument("lifts live on different charts".into()));
        }
        lift = add_vector_fields(&lift, &scale_vector_field(&a.lift, *c))?;
        if let Some(x) = &a.base_field {
            let sx = scale_vector_field(x, *c);
            base = Some(match base {
                Some(b) => add_vector_fields(&b, &sx)?,
                None => sx,
            });
        }
        weight += c * a.permuting_weight;
    }
    Ok(LiftedAction {
        kind: ActionKind::Combination,
        base_field: base,
        lift,
        constants: ActionConstants::default(),
        permuting_weight: weight,
    })
}

/// `uŨ + vṼ + wW̃ + (−a∂_{y_1} + b∂_{y_2} + c∂_{y_3})` on `N` over flat
/// `ℝ⁴` with `κ_i = ½E⌟σ_i`.
pub fn general_combination(base: &HKData, k: ActionConstants) -> Result<LiftedAction> {
    if base.dim() != 4 || !base.flat {
        return Err(GeomError::Argument("the combination is defined over flat R^4".into()));
    }
    let n = base.n();
    let z = ActionConstants::default();
    let u = build_lift_with(base, Some(&crate::spaces::radial_field(n)?), ActionKind::Homothetic, z)?;
    let v = build_lift_with(base, Some(&crate::spaces::rotation_v(n)?), ActionKind::Permuting, z)?;
    let w = build_lift_with(base, Some(&crate::spaces::rotation_w(n)?), ActionKind::Triholomorphic, z)?;
    let y = build_lift_with(base, None, ActionKind::Vertical, ActionConstants { a: k.a, b: k.b, c: k.c, ..z })?;
    let mut out = combine(&[(k.u, &u), (k.v, &v), (k.w, &w), (1.0, &y)])?;
    out.constants = k;
    Ok(out)
}

fn require_n(model: &SpaceModel, action: &LiftedAction) -> Result<()> {
    for name in ["omega1", "omega2", "omega3", "Omega", "alpha", "xi", "eta"] {
        model.form(name)?;
    }
    if model.dim() != action.lift.dim() || model.base_offset != BASE_OFFSET {
        return Err(GeomError::Argument("the action does not live on the model chart".into()));
    }
    Ok(())
}

/// A 0-form as a scalar field.
pub(crate) fn as_scalar(f: &KFormField) -> ScalarField {
    let f = f.clone();
    Field::new(f.dim(), move |p: &ChartPoint| Ok(f.eval(p)?.coeff(&[])))
}

/// Worst of `‖L_X̃ g‖` and of the action on `ω_i` against
/// `(0, −2wω_3, 2wω_2)` with `w` the permuting weight.
pub fn invariance_residual(action: &LiftedAction, model: &SpaceModel, pts: &[ChartPoint]) -> Result<Worst> {
    require_n(model, action)?;
    let x = &action.lift;
    let w = action.permuting_weight;
    let om: Vec<KFormField> = (1..=3).map(|i| model.form(&format!("omega{i}")).cloned()).collect::<Result<_>>()?;
    let target = [
        KFormField::zero(model.dim(), 2),
        om[2].scale_f64(-2.0 * w),
        om[1].scale_f64(2.0 * w),
    ];
    let lie: Vec<KFormField> = om.iter().map(|o| o.lie(x)).collect::<Result<_>>()?;
    let forms = sup_over(pts, |p| {
        let mut m: f64 = 0.0;
        for (l, t) in lie.iter().zip(&target) {
            m = m.max(l.eval(p)?.sub(&t.eval(p)?)?.max_abs());
        }
        Ok(m)
    })?;
    Ok(forms.merge(killing_residual(&model.metric, x, pts)?))
}

/// Moment map of a lifted action for `Ω`.
#[derive(Debug, Clone)]
pub struct MomentMapData {
    /// `μ_α = −α(X̃)`, `μ_ξ = ξ(X̃)`, `μ_η = η(X̃)`.
    pub mu: [ScalarField; 3],
    /// Coefficients of `f` on `ω_1, ω_2, ω_3`.
    pub components: [ScalarField; 3],
    /// `f = Σ f_i ω_i` with `df = X̃⌟Ω`.
    pub form: KFormField,
}

/// Build the moment map and check `df = X̃⌟Ω` on the model.
///
/// The model must be `N` with `p = e^t`, `q = r = s = 2e^{2t}`.
pub fn moment_map(action: &LiftedAction, model: &SpaceModel) -> Result<MomentMapData> {
    require_n(model, action)?;
    let x = &action.lift;
    let mu = [
        as_scalar(&model.form("alpha")?.interior(x)?.scale_f64(-1.0)),
        as_scalar(&model.form("xi")?.interior(x)?),
        as_scalar(&model.form("eta")?.interior(x)?),
    ];
    let dim = model.dim();
    let half_w = 0.5 * action.permuting_weight;
    let e2t = |m: ScalarField, shift: f64| -> ScalarField {
        Field::new(dim, move |p: &ChartPoint| Ok((p.lift(0) * 2.0).exp() * m.eval(p)? - shift))
    };
    // e^{2t}(μ_α − (w/2)e^{−2t})
    let components = [e2t(mu[0].clone(), half_w), e2t(mu[1].clone(), 0.0), e2t(mu[2].clone(), 0.0)];
    let mut terms = Vec::new();
    for (i, c) in components.iter().enumerate() {
        terms.push(model.form(&format!("omega{}", i + 1))?.scale(c)?);
    }
    let form = KFormField::sum(&terms)?;
    let w = moment_map_residual(action, model, &form, &model.sample(MOMENT_SAMPLES, MOMENT_SEED))?;
    if w.value > MOMENT_TOLERANCE {
        return Err(GeomError::Verification {
            residual: w.value,
            tolerance: MOMENT_TOLERANCE,
            point: w.point.unwrap_or_default(),
        });
    }
    Ok(MomentMapData { mu, components, form })
}

/// Worst coefficient of `df − X̃⌟Ω`.
pub fn moment_map_residual(action: &LiftedAction, model: &SpaceModel, f: &KFormField, pts: &[ChartPoint]) -> Result<Worst> {
    require_n(model, action)?;
    let df = f.d()?;
    let xo = model.form("Omega")?.interior(&action.lift)?;
    sup_over(pts, |p| Ok(df.eval(p)?.sub(&xo.eval(p)?)?.max_abs()))
}

/// Closed form of the components for [`general_combination`], each already
/// multiplied by `e^{2t}`.
pub fn general_combination_oracle(k: ActionConstants) -> [ScalarField; 3] {
    let make = move |f: fn(&ActionConstants, &[Jet2], &Jet2) -> Jet2| -> ScalarField {
        Field::new(8, move |p: &ChartPoint| {
            let c = p.lifts();
            let (t, y, x) = (&c[0], &c[1..4], &c[4..8]);
            let e2t = (t * 2.0).exp();
            let mut all = y.to_vec();
            all.extend_from_slice(x);
            Ok(&f(&k, &all, &e2t) * &e2t)
        })
    };
    [
        make(|k, yx, e2t| {
            let (y, x) = (&yx[..3], &yx[3..]);
            let r2 = x.iter().map(Jet2::square).fold(Jet2::zero(8), |a, b| a + b);
            let inv = e2t.try_recip().expect("exponential is positive");
            let q = x[0].square() + x[1].square() - x[2].square() - x[3].square();
            &y[0] * (2.0 * k.u) + (r2 + inv) * (-0.5 * k.v) + q * (-0.5 * k.w) + k.a
        }),
        make(|k, yx, _| {
            let (y, x) = (&yx[..3], &yx[3..]);
            let q = &x[0] * &x[3] + &x[1] * &x[2];
            &y[1] * (-2.0 * k.u) + &y[2] * (-2.0 * k.v) + q * (-k.w) + k.b
        }),
        make(|k, yx, _| {
            let (y, x) = (&yx[..3], &yx[3..]);
            let q = &x[0] * &x[2] - &x[1] * &x[3];
            &y[2] * (-2.0 * k.u) + &y[1] * (2.0 * k.v) + q * k.w + k.c
        }),
    ]
}
