//! Zero level sets of permuting moment maps, the frame induced on the
//! quotient and the inverse construction recovering the hyperKähler base.
//!
//! The level-set chart is `(y_1, x)`: on `f⁻¹(0)` one has `y_2 = y_3 = 0`
//! and `t = −½ log(a − 2p)` with `p = X⌟κ_1`.

use std::collections::BTreeMap;

use super::quotient::{lower, lower_jet};
use super::{as_scalar, ActionKind, LiftedAction};
use crate::calculus::{ChartPoint, Field, Jet2, ScalarField};
use crate::curvature::{acs_from_pair_jet, EndomorphismField, JetMatrix, MetricField};
use crate::error::{GeomError, Result};
use crate::exterior::{coordinate_vector, FormJet, KFormField, VectorField, VectorJet};
use crate::map::ChartMap;
use crate::sampling::{sup_over, SampleBox, Worst};
use crate::spaces::{
    flat_base, half_plane_rotation, permuting_potentials, radial_potentials, rotation_v, HKData, KillingKind,
    SpaceModel,
};

/// Offset of the base block in the level-set chart.
const OFFSET: usize = 1;
const PRECONDITION_TOLERANCE: f64 = 1e-7;
const FRAME_SAMPLES: usize = 12;
const FRAME_SEED: u64 = 0x6672;
/// Step of the central differences used where jets run out of order.
const FD_STEP: f64 = 1e-3;

/// Flat `ℝ⁴` with the half-plane rotation `X = −2x_4∂_3 + 2x_3∂_4` and
/// potentials adapted to it. The box keeps `x_3 > 0` so that the fibre
/// coordinate of [`example1_fibre`] is smooth.
pub fn example1_base() -> Result<HKData> {
    let mut base = flat_base(1, false)?;
    let x = half_plane_rotation()?;
    let k1 = radial_potentials(1)?[0].clone();
    let kappa = permuting_potentials(&base.sigma, &k1, &x)?;
    base.domain = SampleBox::new(vec![-0.5, -0.5, 0.05, 0.05], vec![0.5, 0.5, 0.5, 0.5])?;
    base.with_kappa(kappa)?.with_killing(x, KillingKind::Permuting)
}

/// `½ atan2(x_4, x_3)`, so that `X(x) = 1`.
pub fn example1_fibre() -> ScalarField {
    Field::new(4, |p: &ChartPoint| Ok(p.lift(3).atan2(&p.lift(2))? * 0.5))
}

/// Flat `ℝ⁴` with the diagonal rotation `V` and `κ_i = ½E⌟σ_i`, sampled
/// inside `r² < 1` and with `x_1 > 0`.
pub fn example2_base() -> Result<HKData> {
    let mut base = flat_base(1, false)?.with_kappa(radial_potentials(1)?)?;
    base.domain = SampleBox::new(vec![0.05, -0.45, -0.45, -0.45], vec![0.45, 0.45, 0.45, 0.45])?;
    base.with_killing(rotation_v(1)?, KillingKind::Permuting)
}

/// `atan2(x_2, x_1)`, so that `V(x) = 1`.
pub fn example2_fibre() -> ScalarField {
    Field::new(4, |p: &ChartPoint| p.lift(1).atan2(&p.lift(0)))
}

fn permuting_parts(action: &LiftedAction) -> Result<(&VectorField, f64)> {
    if action.kind != ActionKind::Permuting {
        return Err(GeomError::Precondition("level sets are built for permuting actions".into()));
    }
    let x = action
        .base_field
        .as_ref()
        .ok_or_else(|| GeomError::Precondition("the action has no base field".into()))?;
    let a = action.constants.a;
    if !(a > 0.0) {
        return Err(GeomError::Precondition(format!("need a > 0 for a real level set, got {a}")));
    }
    Ok((x, a))
}

/// A base scalar on the level chart.
fn on_level(f: &ScalarField) -> ScalarField {
    let f = f.clone();
    let nb = f.dim();
    Field::new(nb + OFFSET, move |p: &ChartPoint| {
        let q = ChartPoint::new(p.coords()[OFFSET..].to_vec())?;
        Ok(f.eval(&q)?.embed(OFFSET, nb + OFFSET))
    })
}

/// `X − (a/2)∂_{y_1}` on the level chart.
fn level_field(x: &VectorField, a: f64) -> VectorField {
    let x = x.clone();
    let nb = x.dim();
    let dim = nb + OFFSET;
    Field::new(dim, move |p: &ChartPoint| {
        let q = ChartPoint::new(p.coords()[OFFSET..].to_vec())?;
        let v = x.eval(&q)?;
        let mut comps = vec![p.constant(-0.5 * a)];
        comps.extend(v.comps().iter().map(|c| c.embed(OFFSET, dim)));
        VectorJet::new(comps)
    })
}

/// `p = X⌟κ_1` on the base.
fn p_field(base: &HKData, x: &VectorField) -> Result<ScalarField> {
    Ok(as_scalar(&base.kappa()?[0].interior(x)?))
}

/// Restrict `N` to the zero level set of a permuting moment map.
///
/// The result carries the pulled-back metric `g_Ω` and forms, the base
/// potentials `kappa1..3`, and `xi_X = g(X̃, ·)/g(X̃, X̃)`.
pub fn level_set_restrict(model: &SpaceModel, action: &LiftedAction) -> Result<SpaceModel> {
    let (x, a) = permuting_parts(action)?;
    let base = model.base()?.clone();
    if model.dim() != base.dim() + 4 || model.base_offset != 4 || !model.forms.contains_key("Omega") {
        return Err(GeomError::Argument(format!("{} is not an N model", model.name)));
    }
    let kappa = base.kappa()?.clone();
    let pts = base.check_points();
    for i in [1, 2] {
        let k = as_scalar(&kappa[i].interior(x)?);
        let w = sup_over(&pts, |p| Ok(k.eval(p)?.value().abs()))?;
        if w.value > 1e-9 {
            return Err(GeomError::Precondition(format!(
                "κ_{}(X) does not vanish ({:e} at {:?}); the level set is not y2 = y3 = 0",
                i + 1,
                w.value,
                w.point
            )));
        }
    }
    let nb = base.dim();
    let dim = nb + OFFSET;
    let p = on_level(&p_field(&base, x)?);
    let pm = p.clone();
    let emb = ChartMap::new(dim, nb + 4, move |pt| {
        let pj = pm.eval(pt)?;
        let m = -(&pj * 2.0) + a;
        if m.value() <= 0.0 {
            return Err(GeomError::Domain(format!("a - 2p = {} is not positive", m.value())));
        }
        let t = m.try_ln()? * -0.5;
        let mut c = vec![t, pt.lift(0), pt.constant(0.0), pt.constant(0.0)];
        c.extend((0..nb).map(|i| pt.lift(OFFSET + i)));
        Ok(c)
    });
    let metric = emb.pullback_metric(&model.metric)?;
    let mut forms = BTreeMap::new();
    for (name, f) in &model.forms {
        forms.insert(name.clone(), emb.pullback_form(f)?);
    }
    let proj = ChartMap::projection(dim, OFFSET, nb)?;
    for (i, k) in kappa.iter().enumerate() {
        forms.insert(format!("kappa{}", i + 1), proj.pullback_form(k)?);
    }
    let xt = level_field(x, a);
    let (g, xt2) = (metric.clone(), xt.clone());
    let xi_x = KFormField::new(dim, 1, move |pt| {
        let gm = g.eval(pt)?;
        let v = xt2.eval(pt)?;
        let flat = lower_jet(&gm, &v)?;
        let n2 = flat.interior(&v)?.coeff(&[]);
        Ok(flat.scale(&n2.try_recip()?))
    })?;
    forms.insert("xi_X".to_string(), xi_x);
    let mut expected = BTreeMap::new();
    expected.insert("a".to_string(), a);
    Ok(SpaceModel {
        name: format!("zero level set in {}", model.name),
        coords: std::iter::once("y1".to_string()).chain(base.coords.iter().cloned()).collect(),
        metric,
        forms,
        complex_forms: BTreeMap::new(),
        expected,
        profile: None,
        domain: SampleBox::new(vec![-1.0], vec![1.0])?.product(&base.domain),
        base: Some(base),
        base_offset: OFFSET,
    })
}

/// Pieces of the level set shared by the checks below.
struct LevelParts {
    a: f64,
    base: HKData,
    x: VectorField,
    xt: VectorField,
    p: ScalarField,
    proj: ChartMap,
}

fn level_parts(level: &SpaceModel, action: &LiftedAction) -> Result<LevelParts> {
    let (x, a) = permuting_parts(action)?;
    let base = level.base()?.clone();
    if level.base_offset != OFFSET || level.dim() != base.dim() + OFFSET {
        return Err(GeomError::Argument(format!("{} is not a level-set chart", level.name)));
    }
    Ok(LevelParts {
        a,
        p: on_level(&p_field(&base, x)?),
        proj: ChartMap::projection(level.dim(), OFFSET, base.dim())?,
        xt: level_field(x, a),
        x: x.clone(),
        base,
    })
}

/// Worst deviation of `g_Ω` and `ξ_X` from their closed forms
/// `dp²/(a−2p)² + 4(a−2p)⁻²((dy_1+κ_1)² + κ_2² + κ_3²) + (a−2p)⁻¹g_M` and
/// `(X♭ − 2dy_1 − 2κ_1)/(a − 2p + |X|²)`.
pub fn level_set_residual(level: &SpaceModel, action: &LiftedAction, pts: &[ChartPoint]) -> Result<Worst> {
    let lp = level_parts(level, action)?;
    let dim = level.dim();
    let gm = lp.proj.pullback_metric(&lp.base.g)?;
    let xflat = lp.proj.pullback_form(&lower(&lp.base.g, &lp.x)?)?;
    let dp = KFormField::scalar(&lp.p).d()?;
    let dy1 = KFormField::basis(dim, &[0])?;
    let k: Vec<&KFormField> = (1..=3).map(|i| level.form(&format!("kappa{i}"))).collect::<Result<_>>()?;
    let alpha = dy1.add(k[0])?;
    let xi = level.form("xi_X")?;
    let xv = on_level_vector(&lp.x, dim);
    sup_over(pts, |pt| {
        let m = -(&lp.p.eval(pt)? * 2.0) + lp.a;
        let im = m.try_recip()?;
        let im2 = im.square();
        let (dpj, aj, k2, k3) = (dp.eval(pt)?, alpha.eval(pt)?, k[1].eval(pt)?, k[2].eval(pt)?);
        let terms = [
            (im2.clone(), &dpj),
            (&im2 * 4.0, &aj),
            (&im2 * 4.0, &k2),
            (&im2 * 4.0, &k3),
        ];
        let disp = JetMatrix::sum_of_squares(dim, &terms)?.add(&gm.eval(pt)?.scale_jet(&im));
        let r1 = (level.metric.eval(pt)?.values() - disp.values()).amax();
        let xb = xflat.eval(pt)?;
        let n2 = xb.interior(&xv.eval(pt)?)?.coeff(&[]);
        let num = xb.sub(&dy1.eval(pt)?.scale_f64(2.0))?.sub(&k[0].eval(pt)?.scale_f64(2.0))?;
        let disp_xi = num.scale(&(&m + &n2).try_recip()?);
        let r2 = xi.eval(pt)?.sub(&disp_xi)?.max_abs();
        Ok(r1.max(r2))
    })
}

/// The base field on the level chart without its `∂_{y_1}` part.
fn on_level_vector(x: &VectorField, dim: usize) -> VectorField {
    let x = x.clone();
    Field::new(dim, move |p: &ChartPoint| {
        let q = ChartPoint::new(p.coords()[OFFSET..].to_vec())?;
        let v = x.eval(&q)?;
        let mut comps = vec![p.constant(0.0)];
        comps.extend(v.comps().iter().map(|c| c.embed(OFFSET, dim)));
        VectorJet::new(comps)
    })
}

/// `|ξ_X(Z_h)|` with `Z_h = ∂_{y_1} + 2(a − 2p + |X|²)⁻¹X̃`.
pub fn horizontal_residual(level: &SpaceModel, action: &LiftedAction, pts: &[ChartPoint]) -> Result<Worst> {
    let lp = level_parts(level, action)?;
    let xi = level.form("xi_X")?;
    let gm = lp.proj.pullback_metric(&lp.base.g)?;
    let xv = on_level_vector(&lp.x, level.dim());
    sup_over(pts, |pt| {
        let v = xv.eval(pt)?;
        let n2 = lower_jet(&gm.eval(pt)?, &v)?.interior(&v)?.coeff(&[]);
        let d = -(&lp.p.eval(pt)? * 2.0) + lp.a + n2;
        let xj = xi.eval(pt)?;
        let zh = xj.coeff(&[0]) + &xj.interior(&lp.xt.eval(pt)?)?.coeff(&[]) * &(d.try_recip()? * 2.0);
        Ok(zh.value().abs())
    })
}

/// `g_Ω − g(X̃, X̃) ξ_X²`, degenerate along `X̃`.
pub fn reduced_on_level(level: &SpaceModel, action: &LiftedAction) -> Result<MetricField> {
    let lp = level_parts(level, action)?;
    let (g, xi, xt) = (level.metric.clone(), level.form("xi_X")?.clone(), lp.xt);
    let dim = level.dim();
    Ok(Field::new(dim, move |pt: &ChartPoint| {
        let gm = g.eval(pt)?;
        let v = xt.eval(pt)?;
        let n2 = lower_jet(&gm, &v)?.interior(&v)?.coeff(&[]);
        let xj = xi.eval(pt)?;
        Ok(gm.add(&JetMatrix::sum_of_squares(dim, &[(-n2, &xj)])?))
    }))
}

/// `(y_1, x) ↦ (x_1, x_2, x_3² + x_4², 4y_1 − a·atan(x_3/x_4))`, the chart
/// of the closed-form first example.
pub fn example1_quotient_map(a: f64) -> ChartMap {
    ChartMap::new(5, 4, move |p| {
        let (y, x3, x4) = (p.lift(0), p.lift(3), p.lift(4));
        let q = y * 4.0 - x3.try_div(&x4)?.atan() * a;
        Ok(vec![p.lift(1), p.lift(2), x3.square() + x4.square(), q])
    })
}

/// Worst entry of `g_red − Ψ*g_closed` on the level chart.
pub fn two_path_residual(
    level: &SpaceModel,
    action: &LiftedAction,
    closed: &MetricField,
    to_closed: &ChartMap,
    pts: &[ChartPoint],
) -> Result<Worst> {
    let red = reduced_on_level(level, action)?;
    let pulled = to_closed.pullback_metric(closed)?;
    sup_over(pts, |p| Ok((red.eval(p)?.values() - pulled.eval(p)?.values()).amax()))
}

/// Data induced on the level set by a fibre coordinate `x` with `X(x) = 1`:
/// `ω̄_1 = ω_1`, `ω̄_2 = hω_2 − fω_3`, `ω̄_3 = fω_2 + hω_3` with
/// `f = cos 2x`, `h = sin 2x`, and the 1-forms
/// `α_2 = −4e^{2t}(fκ_2 + hκ_3)`, `α_3 = 4e^{2t}(−hκ_2 + fκ_3)`,
/// `β = 2dx + 4e^{2t}α`.
#[derive(Debug, Clone)]
pub struct QuotientFrame {
    pub a: f64,
    pub omega_bar: [KFormField; 3],
    pub beta: KFormField,
    pub alpha2: KFormField,
    pub alpha3: KFormField,
    /// `∂_{y_1}`, generating the circle action left on the quotient.
    pub z: VectorField,
    /// `g_red(Z, ·)`.
    pub z_flat: KFormField,
    pub beta_z: ScalarField,
    pub xi_x: KFormField,
    pub x_tilde: VectorField,
    pub g_level: MetricField,
    pub g_red: MetricField,
    pub fibre: ScalarField,
    pub cos2x: ScalarField,
    pub sin2x: ScalarField,
    pub p: ScalarField,
    pub domain: SampleBox,
    base: HKData,
    proj: ChartMap,
}

/// Build the frame from a level set and a fibre coordinate on the base.
pub fn quotient_frame(level: &SpaceModel, action: &LiftedAction, fibre: &ScalarField) -> Result<QuotientFrame> {
    let lp = level_parts(level, action)?;
    if fibre.dim() != lp.base.dim() {
        return Err(GeomError::Argument("the fibre coordinate must live on the base".into()));
    }
    let dx_base = KFormField::scalar(fibre).d()?.interior(&lp.x)?;
    let w = sup_over(&lp.base.check_points(), |p| Ok((dx_base.eval(p)?.coeff(&[]).value() - 1.0).abs()))?;
    if w.value > 1e-9 {
        return Err(GeomError::Precondition(format!(
            "fibre coordinate has X(x) ≠ 1 ({:e} at {:?})",
            w.value, w.point
        )));
    }
    let dim = level.dim();
    let x = on_level(fibre);
    let cos2x = x.apply(|j| Ok((j * 2.0).cos()));
    let sin2x = x.apply(|j| Ok((j * 2.0).sin()));
    let a = lp.a;
    let e2t = lp.p.apply(move |j| (-(j * 2.0) + a).try_recip());
    let om: Vec<KFormField> = (1..=3).map(|i| level.form(&format!("omega{i}")).cloned()).collect::<Result<_>>()?;
    let k: Vec<KFormField> = (1..=3).map(|i| level.form(&format!("kappa{i}")).cloned()).collect::<Result<_>>()?;
    let omega_bar = [
        om[0].clone(),
        om[1].scale(&sin2x)?.sub(&om[2].scale(&cos2x)?)?,
        om[1].scale(&cos2x)?.add(&om[2].scale(&sin2x)?)?,
    ];
    let alpha2 = k[1].scale(&cos2x)?.add(&k[2].scale(&sin2x)?)?.scale(&e2t)?.scale_f64(-4.0);
    let alpha3 = k[2].scale(&cos2x)?.sub(&k[1].scale(&sin2x)?)?.scale(&e2t)?.scale_f64(4.0);
    let alpha = KFormField::basis(dim, &[0])?.add(&k[0])?;
    let beta = KFormField::scalar(&x).d()?.scale_f64(2.0).add(&alpha.scale(&e2t)?.scale_f64(4.0))?;
    let z = coordinate_vector(0, dim)?;
    let beta_z = as_scalar(&beta.interior(&z)?);
    let g_red = reduced_on_level(level, action)?;
    let z_flat = lower(&g_red, &z)?;
    Ok(QuotientFrame {
        a,
        omega_bar,
        beta,
        alpha2,
        alpha3,
        z,
        z_flat,
        beta_z,
        xi_x: level.form("xi_X")?.clone(),
        x_tilde: lp.xt,
        g_level: level.metric.clone(),
        g_red,
        fibre: x,
        cos2x,
        sin2x,
        p: lp.p,
        domain: level.domain.clone(),
        base: lp.base,
        proj: lp.proj,
    })
}

fn worst_of(pts: &[ChartPoint], pairs: &[(&KFormField, &KFormField)]) -> Result<Worst> {
    sup_over(pts, |p| {
        let mut m: f64 = 0.0;
        for (l, r) in pairs {
            m = m.max(l.eval(p)?.sub(&r.eval(p)?)?.max_abs());
        }
        Ok(m)
    })
}

/// Residuals of the identities satisfied by a [`QuotientFrame`].
#[derive(Debug, Clone)]
pub struct FrameIdentities {
    /// `dω̄_1 = −α_2∧ω̄_2 + α_3∧ω̄_3`, `dω̄_2 = α_2∧ω̄_1 + β∧ω̄_3`,
    /// `dω̄_3 = −α_3∧ω̄_1 − β∧ω̄_2`.
    pub frame_equations: Worst,
    /// The curvature block with `s = −1`, see [`connection_residual`].
    pub connection_equations: Worst,
    /// `4Z♭ = −Ī_1 d(β(Z)) = β(Z)Ī_2α_2 = −β(Z)Ī_3α_3`.
    pub z_flat_relations: Worst,
    /// `(dZ♭)^{sp(1)} = 4(a−2p)⁻¹ω̄_1`.
    pub sp1_projection: Worst,
    /// `Z⌟Ω̄ = −d((a−2p)⁻¹ω̄_1)`.
    pub z_contraction: Worst,
    /// `ξ_X = dx + ½(a−2p)Z♭ − ½β`.
    pub xi_decomposition: Worst,
    /// `L_X̃ ω̄_i = 0`.
    pub invariance: Worst,
    /// `|X|² = (a−2p)³‖Z‖²/(4 − (a−2p)²‖Z‖²)`.
    pub norm_relation: Worst,
}

impl FrameIdentities {
    pub fn entries(&self) -> Vec<(&'static str, &Worst)> {
        vec![
            ("frame_equations", &self.frame_equations),
            ("connection_equations", &self.connection_equations),
            ("z_flat_relations", &self.z_flat_relations),
            ("sp1_projection", &self.sp1_projection),
            ("z_contraction", &self.z_contraction),
            ("xi_decomposition", &self.xi_decomposition),
            ("invariance", &self.invariance),
            ("norm_relation", &self.norm_relation),
        ]
    }
}

fn frame_equation_residual(fr: &QuotientFrame, pts: &[ChartPoint]) -> Result<Worst> {
    let [w1, w2, w3] = &fr.omega_bar;
    let (a2, a3, b) = (&fr.alpha2, &fr.alpha3, &fr.beta);
    let r1 = a3.wedge(w3)?.sub(&a2.wedge(w2)?)?;
    let r2 = a2.wedge(w1)?.add(&b.wedge(w3)?)?;
    let r3 = a3.wedge(w1)?.add(&b.wedge(w2)?)?.scale_f64(-1.0);
    worst_of(pts, &[(&w1.d()?, &r1), (&w2.d()?, &r2), (&w3.d()?, &r3)])
}

/// Residual of `dβ = −4sω̄_1 + c α_2∧α_3`, `dα_2 = 4sω̄_3 + c α_3∧β`,
/// `dα_3 = 4sω̄_2 + c β∧α_2` where `c` is the sign of the quadratic terms.
fn connection_block(fr: &QuotientFrame, s: f64, c: f64, pts: &[ChartPoint]) -> Result<Worst> {
    let [w1, w2, w3] = &fr.omega_bar;
    let (a2, a3, b) = (&fr.alpha2, &fr.alpha3, &fr.beta);
    let rb = w1.scale_f64(-4.0 * s).add(&a2.wedge(a3)?.scale_f64(c))?;
    let r2 = w3.scale_f64(4.0 * s).add(&a3.wedge(b)?.scale_f64(c))?;
    let r3 = w2.scale_f64(4.0 * s).add(&b.wedge(a2)?.scale_f64(c))?;
    worst_of(pts, &[(&b.d()?, &rb), (&a2.d()?, &r2), (&a3.d()?, &r3)])
}

/// Sign of the quadratic terms in the curvature block.
const QUADRATIC_SIGN: f64 = 1.0;

/// Residual of the curvature block `dβ = −4sω̄_1 + α_2∧α_3`,
/// `dα_2 = 4sω̄_3 + α_3∧β`, `dα_3 = 4sω̄_2 + β∧α_2`.
pub fn connection_residual(fr: &QuotientFrame, s: f64, pts: &[ChartPoint]) -> Result<Worst> {
    connection_block(fr, s, QUADRATIC_SIGN, pts)
}

/// `θ∘J` at a point.
fn compose_acs(theta: &FormJet, j: &JetMatrix) -> Result<FormJet> {
    let n = theta.dim();
    let terms = (0..n)
        .map(|col| {
            let c = (0..n).fold(Jet2::zero(n), |acc, k| acc + &theta.coeff(&[k]) * j.get(k, col));
            (vec![col], c)
        })
        .collect();
    FormJet::from_terms(n, 1, terms)
}

/// `⟨A, B⟩ = ½ A_{ij} B_{kl} g^{ik} g^{jl}`.
fn pair_2forms(a: &FormJet, b: &FormJet, ginv: &nalgebra::DMatrix<f64>) -> f64 {
    let n = a.dim();
    let am = nalgebra::DMatrix::from_fn(n, n, |i, j| a.coeff(&[i, j]).value());
    let bm = nalgebra::DMatrix::from_fn(n, n, |i, j| b.coeff(&[i, j]).value());
    0.5 * (ginv * &am * ginv * bm.transpose()).trace()
}

/// Evaluate every identity of the frame at the given points.
pub fn frame_identities(fr: &QuotientFrame, pts: &[ChartPoint]) -> Result<FrameIdentities> {
    let dim = fr.g_level.dim();
    // ω̄_i vanish along X̃, so −g⁻¹ω̄_i is a complex structure only on the
    // horizontal space; that is all the 1-forms below see
    let is: Vec<EndomorphismField> = fr
        .omega_bar
        .iter()
        .map(|w| {
            let (g, w) = (fr.g_level.clone(), w.clone());
            Field::new(dim, move |p: &ChartPoint| acs_from_pair_jet(&g.eval(p)?, &w.eval(p)?))
        })
        .collect();
    let dbz = KFormField::scalar(&fr.beta_z).d()?;
    let z_flat_relations = sup_over(pts, |p| {
        let zf = fr.z_flat.eval(p)?.scale_f64(4.0);
        let bz = fr.beta_z.eval(p)?;
        let i1 = compose_acs(&dbz.eval(p)?, &is[0].eval(p)?)?.scale_f64(-1.0);
        let i2 = compose_acs(&fr.alpha2.eval(p)?, &is[1].eval(p)?)?.scale(&bz);
        let i3 = compose_acs(&fr.alpha3.eval(p)?, &is[2].eval(p)?)?.scale(&(-bz.clone()));
        Ok(zf.sub(&i1)?.max_abs().max(zf.sub(&i2)?.max_abs()).max(zf.sub(&i3)?.max_abs()))
    })?;
    let dzf = fr.z_flat.d()?;
    // 4(a−2p)⁻¹ = β(Z)
    let target = fr.omega_bar[0].scale(&fr.beta_z)?;
    let sp1_projection = sup_over(pts, |p| {
        let ginv = fr.g_level.eval(p)?.values().try_inverse().ok_or_else(|| {
            GeomError::Evaluation {
                point: p.coords().to_vec(),
                reason: "level-set metric is singular".into(),
            }
        })?;
        let d = dzf.eval(p)?;
        let mut proj = FormJet::zero(dim, 2);
        for w in &fr.omega_bar {
            let wj = w.eval(p)?;
            let c = pair_2forms(&d, &wj, &ginv) / pair_2forms(&wj, &wj, &ginv);
            proj = proj.add(&wj.scale_f64(c))?;
        }
        Ok(proj.sub(&target.eval(p)?)?.max_abs())
    })?;
    let omega_bar_4 = KFormField::sum(&[
        fr.omega_bar[0].wedge(&fr.omega_bar[0])?,
        fr.omega_bar[1].wedge(&fr.omega_bar[1])?,
        fr.omega_bar[2].wedge(&fr.omega_bar[2])?,
    ])?
    .scale_f64(0.5);
    let quarter_bz = fr.beta_z.apply(|j| Ok(j * 0.25));
    let z_contraction = worst_of(
        pts,
        &[(
            &omega_bar_4.interior(&fr.z)?,
            &fr.omega_bar[0].scale(&quarter_bz)?.d()?.scale_f64(-1.0),
        )],
    )?;
    let a = fr.a;
    let half_m = fr.p.apply(move |j| Ok((-(j * 2.0) + a) * 0.5));
    let decomposition = KFormField::scalar(&fr.fibre)
        .d()?
        .add(&fr.z_flat.scale(&half_m)?)?
        .sub(&fr.beta.scale_f64(0.5))?;
    let xi_decomposition = worst_of(pts, &[(&fr.xi_x, &decomposition)])?;
    let lies: Vec<KFormField> = fr.omega_bar.iter().map(|w| w.lie(&fr.x_tilde)).collect::<Result<_>>()?;
    let invariance = sup_over(pts, |p| {
        let mut m: f64 = 0.0;
        for l in &lies {
            m = m.max(l.eval(p)?.max_abs());
        }
        Ok(m)
    })?;
    let gm = fr.proj.pullback_metric(&fr.base.g)?;
    let x_base = on_level_vector(&base_field_of(fr)?, dim);
    let norm_relation = sup_over(pts, |p| {
        let v = x_base.eval(p)?;
        let x2 = lower_jet(&gm.eval(p)?, &v)?.interior(&v)?.coeff(&[]).value();
        let z2 = fr.g_red.eval(p)?.get(0, 0).value();
        let m = a - 2.0 * fr.p.eval(p)?.value();
        Ok((x2 - m.powi(3) * z2 / (4.0 - m * m * z2)).abs())
    })?;
    Ok(FrameIdentities {
        frame_equations: frame_equation_residual(fr, pts)?,
        connection_equations: connection_residual(fr, -1.0, pts)?,
        z_flat_relations,
        sp1_projection,
        z_contraction,
        xi_decomposition,
        invariance,
        norm_relation,
    })
}

fn base_field_of(fr: &QuotientFrame) -> Result<VectorField> {
    fr.base
        .killing
        .as_ref()
        .map(|(x, _)| x.clone())
        .ok_or_else(|| GeomError::Argument("frame base has no field".into()))
}

/// Output of the inverse construction, on the level chart.
#[derive(Debug, Clone)]
pub struct InverseData {
    /// `σ_1 = −d(β(Z)⁻¹(2dx − β))`, `σ_2 = −d(β(Z)⁻¹(hα_3 + fα_2))`,
    /// `σ_3 = −d(β(Z)⁻¹(hα_2 − fα_3))`.
    pub sigma: [KFormField; 3],
    /// The base metric rebuilt from quotient data, degenerate along `Z`.
    pub g_m: MetricField,
    /// Generator of the permuting action, `∂_x` in adapted coordinates.
    pub x_tilde: VectorField,
}

/// Recover a hyperKähler triple and metric from the frame on the quotient.
///
/// The frame equations and the curvature block with `s = −1` must hold to
/// `1e-7`; otherwise this is a precondition error. The metric is
///
/// `4B⁻¹g_red − 16B⁻³(Z♭)² + 16B⁻²ξ_X⊙Z♭ − B⁻¹(α_2² + α_3²)
///  − 16‖Z‖²(4B‖Z‖² − B³)⁻¹ξ_X² − B⁻³(dB)²` with `B = β(Z)`, where
/// `ξ⊙ζ = ½(ξ⊗ζ + ζ⊗ξ)`.
pub fn hkqk_inverse(fr: &QuotientFrame) -> Result<InverseData> {
    let pts = fr.domain.sample(FRAME_SAMPLES, FRAME_SEED);
    for (name, w) in [
        ("frame equations", frame_equation_residual(fr, &pts)?),
        ("curvature block", connection_residual(fr, -1.0, &pts)?),
    ] {
        if w.value > PRECONDITION_TOLERANCE {
            return Err(GeomError::Precondition(format!(
                "{name} fail with residual {:e} at {:?}",
                w.value, w.point
            )));
        }
    }
    let inv = fr.beta_z.apply(|j| j.try_recip());
    let dx = KFormField::scalar(&fr.fibre).d()?;
    let (f, h) = (&fr.cos2x, &fr.sin2x);
    let rho = [
        dx.scale_f64(2.0).sub(&fr.beta)?,
        fr.alpha3.scale(h)?.add(&fr.alpha2.scale(f)?)?,
        fr.alpha2.scale(h)?.sub(&fr.alpha3.scale(f)?)?,
    ];
    let sigma = [
        rho[0].scale(&inv)?.d()?.scale_f64(-1.0),
        rho[1].scale(&inv)?.d()?.scale_f64(-1.0),
        rho[2].scale(&inv)?.d()?.scale_f64(-1.0),
    ];
    let dim = fr.g_red.dim();
    let dbz = KFormField::scalar(&fr.beta_z).d()?;
    let (g_red, bz, zf, xi, a2, a3) = (
        fr.g_red.clone(),
        fr.beta_z.clone(),
        fr.z_flat.clone(),
        fr.xi_x.clone(),
        fr.alpha2.clone(),
        fr.alpha3.clone(),
    );
    let g_m = Field::new(dim, move |p: &ChartPoint| {
        let gr = g_red.eval(p)?;
        let b = bz.eval(p)?.value();
        let z2 = gr.get(0, 0).value();
        let c = |v: f64| Jet2::constant(v, dim);
        let (zj, xj, a2j, a3j, dbj) = (zf.eval(p)?, xi.eval(p)?, a2.eval(p)?, a3.eval(p)?, dbz.eval(p)?);
        let terms = [
            (c(-16.0 / b.powi(3)), &zj, &zj),
            (c(16.0 / (b * b)), &xj, &zj),
            (c(-1.0 / b), &a2j, &a2j),
            (c(-1.0 / b), &a3j, &a3j),
            (c(-16.0 * z2 / (4.0 * b * z2 - b.powi(3))), &xj, &xj),
            (c(-1.0 / b.powi(3)), &dbj, &dbj),
        ];
        let rest = JetMatrix::from_quadratic(dim, &terms)?;
        Ok(JetMatrix::from_fn(dim, |i, j| {
            Jet2::constant(4.0 / b * gr.get(i, j).value() + rest.get(i, j).value(), dim)
        }))
    });
    Ok(InverseData {
        sigma,
        g_m,
        x_tilde: fr.x_tilde.clone(),
    })
}

impl InverseData {
    /// Worst deviation of `σ_i` and `g_M` from the pulled-back base data.
    pub fn roundtrip_residual(&self, fr: &QuotientFrame, pts: &[ChartPoint]) -> Result<(Worst, Worst)> {
        let flat: Vec<KFormField> = fr.base.sigma.iter().map(|s| fr.proj.pullback_form(s)).collect::<Result<_>>()?;
        let sig = worst_of(
            pts,
            &[(&self.sigma[0], &flat[0]), (&self.sigma[1], &flat[1]), (&self.sigma[2], &flat[2])],
        )?;
        let gm = fr.proj.pullback_metric(&fr.base.g)?;
        let met = sup_over(pts, |p| Ok((self.g_m.eval(p)?.values() - gm.eval(p)?.values()).amax()))?;
        Ok((sig, met))
    }

    /// Worst `dσ_i`, by central differences.
    pub fn closedness(&self, pts: &[ChartPoint]) -> Result<Worst> {
        sup_over(pts, |p| {
            let mut m: f64 = 0.0;
            for s in &self.sigma {
                m = m.max(fd_exterior_derivative(s, p, FD_STEP)?.max_abs());
            }
            Ok(m)
        })
    }

    /// Worst of `L_X̃σ_1`, `L_X̃σ_2 + 2σ_3`, `L_X̃σ_3 − 2σ_2`, by central
    /// differences.
    pub fn permuting_residual(&self, pts: &[ChartPoint]) -> Result<Worst> {
        sup_over(pts, |p| {
            let l: Vec<FormJet> =
                self.sigma.iter().map(|s| fd_lie(s, &self.x_tilde, p, FD_STEP)).collect::<Result<_>>()?;
            let s2 = self.sigma[1].eval(p)?;
            let s3 = self.sigma[2].eval(p)?;
            Ok(l[0]
                .max_abs()
                .max(l[1].add(&s3.scale_f64(2.0))?.max_abs())
                .max(l[2].sub(&s2.scale_f64(2.0))?.max_abs()))
        })
    }

    /// Worst `g_M(Z, ·)`.
    pub fn degeneracy(&self, pts: &[ChartPoint]) -> Result<Worst> {
        sup_over(pts, |p| {
            let g = self.g_m.eval(p)?.values();
            Ok(g.row(0).amax())
        })
    }
}

/// Fourth-order central differences of every coefficient along each
/// coordinate.
fn fd_partials(form: &KFormField, p: &ChartPoint, h: f64) -> Result<Vec<FormJet>> {
    (0..p.dim())
        .map(|l| {
            let at = |s: f64| form.eval(&p.shifted(l, s * h));
            let num = at(-2.0)?.sub(&at(2.0)?)?.add(&at(1.0)?.sub(&at(-1.0)?)?.scale_f64(8.0))?;
            Ok(num.scale_f64(1.0 / (12.0 * h)))
        })
        .collect()
}

fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for t in increasing_tuples(n, k - 1) {
        let start = t.last().map_or(0, |l| l + 1);
        for i in start..n {
            let mut u = t.clone();
            u.push(i);
            out.push(u);
        }
    }
    out
}

/// `dσ` from difference quotients of the coefficient values.
pub fn fd_exterior_derivative(form: &KFormField, p: &ChartPoint, h: f64) -> Result<FormJet> {
    let n = p.dim();
    let k = form.degree();
    let parts = fd_partials(form, p, h)?;
    let mut terms = Vec::new();
    for idx in increasing_tuples(n, k + 1) {
        let mut v = 0.0;
        for (m, &l) in idx.iter().enumerate() {
            let rest: Vec<usize> = idx.iter().copied().filter(|&i| i != l).collect();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            v += sign * parts[l].coeff(&rest).value();
        }
        terms.push((idx, Jet2::constant(v, n)));
    }
    FormJet::from_terms(n, k + 1, terms)
}

/// `L_Xσ` from difference quotients of the coefficients of `σ` and the
/// exact first derivatives of `X`.
pub fn fd_lie(form: &KFormField, x: &VectorField, p: &ChartPoint, h: f64) -> Result<FormJet> {
    let n = p.dim();
    let k = form.degree();
    let parts = fd_partials(form, p, h)?;
    let s = form.eval(p)?;
    let xv = x.eval(p)?;
    let xc = xv.comps();
    let mut terms = Vec::new();
    for idx in increasing_tuples(n, k) {
        let mut v: f64 = (0..n).map(|l| xc[l].value() * parts[l].coeff(&idx).value()).sum();
        for m in 0..k {
            for l in 0..n {
                let mut j = idx.clone();
                j[m] = l;
                v += s.coeff(&j).value() * xc[l].grad()[idx[m]];
            }
        }
        terms.push((idx, Jet2::constant(v, n)));
    }
    FormJet::from_terms(n, k, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{build_lift, reduced_metric, ActionConstants, ReducedKind, ReducedParams};
    use crate::spaces::{build_model, BundleKind};
    use crate::ProfileSet;

    fn setup(base: HKData, a: f64) -> (SpaceModel, LiftedAction, SpaceModel) {
        let model = build_model(&base, &ProfileSet::exponential(1.0, 1.0).unwrap(), BundleKind::N).unwrap();
        let act = build_lift(&base, ActionKind::Permuting, ActionConstants { a, ..Default::default() }).unwrap();
        let level = level_set_restrict(&model, &act).unwrap();
        (model, act, level)
    }

    #[test]
    fn level_set_matches_the_displayed_forms() {
        let (_, act, level) = setup(example1_base().unwrap(), 2.0);
        let p = ChartPoint::new(vec![0.3, 0.2, -0.3, 0.5, 0.4]).unwrap();
        assert!(level_set_residual(&level, &act, std::slice::from_ref(&p)).unwrap().value < 1e-10);
        assert!(horizontal_residual(&level, &act, &[p]).unwrap().value < 1e-12);
        let pts = level.sample(10, 1);
        assert!(level_set_residual(&level, &act, &pts).unwrap().value < 1e-10);
    }

    #[test]
    fn level_set_lies_in_the_zero_set() {
        let (model, act, level) = setup(example1_base().unwrap(), 2.0);
        let mm = crate::reduction::moment_map(&act, &model).unwrap();
        let a = 2.0;
        let base = example1_base().unwrap();
        let pf = p_field(&base, &half_plane_rotation().unwrap()).unwrap();
        for p in level.sample(5, 2) {
            let q = ChartPoint::new(p.coords()[1..].to_vec()).unwrap();
            let t = -0.5 * (a - 2.0 * pf.eval(&q).unwrap().value()).ln();
            let mut c = vec![t, p.coord(0), 0.0, 0.0];
            c.extend_from_slice(q.coords());
            let np = ChartPoint::new(c).unwrap();
            for f in &mm.components {
                assert!(f.eval(&np).unwrap().value().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn both_paths_to_the_quotient_agree() {
        let (_, act, level) = setup(example1_base().unwrap(), 2.0);
        let closed = reduced_metric(ReducedKind::PermutingExample1, &ReducedParams::default()).unwrap();
        let w = two_path_residual(&level, &act, &closed.metric, &example1_quotient_map(2.0), &level.sample(10, 3));
        assert!(w.unwrap().value < 1e-9);
    }

    #[test]
    fn level_sets_need_a_positive_constant() {
        let base = example1_base().unwrap();
        let model = build_model(&base, &ProfileSet::exponential(1.0, 1.0).unwrap(), BundleKind::N).unwrap();
        let act = build_lift(&base, ActionKind::Permuting, ActionConstants::default()).unwrap();
        assert!(matches!(level_set_restrict(&model, &act), Err(GeomError::Precondition(_))));
        // a − 2p < 0 inside the box
        let act = build_lift(&base, ActionKind::Permuting, ActionConstants { a: 0.1, ..Default::default() }).unwrap();
        let level = level_set_restrict(&model, &act).unwrap();
        let p = ChartPoint::new(vec![0.0, 0.0, 0.0, 0.5, 0.5]).unwrap();
        assert!(matches!(level.metric.eval(&p), Err(GeomError::Evaluation { .. })));
    }

    fn frame1() -> QuotientFrame {
        let (_, act, level) = setup(example1_base().unwrap(), 2.0);
        quotient_frame(&level, &act, &example1_fibre()).unwrap()
    }

    #[test]
    fn frame_identities_hold_on_the_first_example() {
        let fr = frame1();
        let ids = frame_identities(&fr, &fr.domain.sample(8, 4)).unwrap();
        for (name, w) in ids.entries() {
            assert!(w.value < 1e-8, "{name}: {w:?}");
        }
    }

    #[test]
    fn frame_identities_hold_on_the_second_example() {
        let (_, act, level) = setup(example2_base().unwrap(), 1.0);
        let fr = quotient_frame(&level, &act, &example2_fibre()).unwrap();
        let ids = frame_identities(&fr, &fr.domain.sample(8, 5)).unwrap();
        for (name, w) in ids.entries() {
            assert!(w.value < 1e-8, "{name}: {w:?}");
        }
    }

    #[test]
    fn the_other_quadratic_sign_fails() {
        let fr = frame1();
        let pts = fr.domain.sample(6, 6);
        assert!(connection_block(&fr, -1.0, -QUADRATIC_SIGN, &pts).unwrap().value > 1e-2);
        assert!(connection_residual(&fr, 1.0, &pts).unwrap().value > 1e-2);
    }

    #[test]
    fn inverse_recovers_the_flat_base() {
        let fr = frame1();
        let inv = hkqk_inverse(&fr).unwrap();
        let pts = fr.domain.sample(30, 7);
        let (sig, met) = inv.roundtrip_residual(&fr, &pts).unwrap();
        assert!(sig.value < 1e-8, "{sig:?}");
        assert!(met.value < 1e-8, "{met:?}");
        let few = &pts[..6];
        assert!(inv.closedness(few).unwrap().value < 1e-9);
        assert!(inv.permuting_residual(few).unwrap().value < 1e-9);
        assert!(inv.degeneracy(few).unwrap().value < 1e-10);
    }

    #[test]
    fn fibre_coordinate_is_checked() {
        let (_, act, level) = setup(example1_base().unwrap(), 2.0);
        let wrong = example2_fibre();
        assert!(matches!(quotient_frame(&level, &act, &wrong), Err(GeomError::Precondition(_))));
    }

    #[test]
    fn finite_difference_derivatives_agree_with_jets() {
        let fr = frame1();
        let p = fr.domain.sample(1, 8).remove(0);
        let exact = fr.alpha2.d().unwrap().eval(&p).unwrap();
        let fd = fd_exterior_derivative(&fr.alpha2, &p, FD_STEP).unwrap();
        assert!(exact.sub(&fd).unwrap().max_abs() < 1e-9);
        let exact = fr.alpha2.lie(&fr.x_tilde).unwrap().eval(&p).unwrap();
        let fd = fd_lie(&fr.alpha2, &fr.x_tilde, &p, FD_STEP).unwrap();
        assert!(exact.sub(&fd).unwrap().max_abs() < 1e-9);
    }
}
