//! Closed forms of quaternion-Kähler quotient metrics.

use std::collections::BTreeMap;

use crate::calculus::{ChartPoint, Field, Jet2};
use crate::curvature::{einstein_residual, JetMatrix, MetricField};
use crate::error::{GeomError, Result};
use crate::exterior::{FormJet, KFormField, VectorField, VectorJet};
use crate::map::{ChartMap, MapJet};
use crate::sampling::{sup_over, SampleBox, Worst};
use crate::spaces::{euler_field, standard_triple, HKData, KillingKind};

/// Which closed-form quotient to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedKind {
    /// `dy² + sinh²y cosh²y g_{S³}` on `(y, η, ξ_1, ξ_2)`.
    RadialR4,
    /// `dy² + sinh²y cosh²y Σγ_i²` with the left-invariant coframe of `S³`.
    SasakiLink,
    /// Quotient of `N` over flat `ℝ⁴` by the half-plane rotation, on
    /// `(x_1, x_2, p, q)`.
    PermutingExample1,
    /// `a/(a − r²)² δ` on the ball `r² < a`.
    PermutingExample2,
    /// `4e^s(dx_1² + dx_2²) + ds² + e^{2s}(dq − 2(x_2dx_1 − x_1dx_2))²`.
    ComplexHyperbolic,
    /// Homothetic quotient on the slice `t = 0, y = 0`.
    HomotheticGeneral,
    /// Permuting quotient on the slice `y_1 = 0`.
    PermutingGeneral,
}

impl ReducedKind {
    pub fn parse(s: &str) -> Result<ReducedKind> {
        match s {
            "radial_R4" => Ok(ReducedKind::RadialR4),
            "sasaki_link" => Ok(ReducedKind::SasakiLink),
            "permuting_example1" => Ok(ReducedKind::PermutingExample1),
            "permuting_example2" => Ok(ReducedKind::PermutingExample2),
            "complex_hyperbolic" => Ok(ReducedKind::ComplexHyperbolic),
            "homothetic_general" => Ok(ReducedKind::HomotheticGeneral),
            "permuting_general" => Ok(ReducedKind::PermutingGeneral),
            _ => Err(GeomError::Argument(format!("unknown reduced metric {s}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReducedKind::RadialR4 => "radial_R4",
            ReducedKind::SasakiLink => "sasaki_link",
            ReducedKind::PermutingExample1 => "permuting_example1",
            ReducedKind::PermutingExample2 => "permuting_example2",
            ReducedKind::ComplexHyperbolic => "complex_hyperbolic",
            ReducedKind::HomotheticGeneral => "homothetic_general",
            ReducedKind::PermutingGeneral => "permuting_general",
        }
    }
}

/// Parameters of [`reduced_metric`]. The general formulas need a base
/// carrying potentials and a field of the matching kind.
#[derive(Debug, Clone)]
pub struct ReducedParams {
    pub a: f64,
    pub base: Option<HKData>,
}

impl Default for ReducedParams {
    fn default() -> Self {
        ReducedParams { a: 2.0, base: None }
    }
}

/// A quotient metric on its own chart.
#[derive(Debug, Clone)]
pub struct QuotientModel {
    pub kind: ReducedKind,
    pub name: String,
    pub coords: Vec<String>,
    pub metric: MetricField,
    /// Auxiliary forms such as the coframe `γ_i` of the link.
    pub forms: BTreeMap<String, KFormField>,
    /// Einstein constant the metric should have.
    pub lambda: f64,
    pub domain: SampleBox,
}

impl QuotientModel {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn sample(&self, count: usize, seed: u64) -> Vec<ChartPoint> {
        self.domain.sample(count, seed)
    }

    pub fn einstein(&self, pts: &[ChartPoint]) -> Result<Worst> {
        einstein_residual(&self.metric, self.lambda, pts)
    }

    /// Worst of `dγ_i − 2γ_j∧γ_k` over cyclic `(i, j, k)`; needs the link
    /// coframe.
    pub fn sasaki_residual(&self, pts: &[ChartPoint]) -> Result<Worst> {
        let g: Vec<&KFormField> = (1..=3)
            .map(|i| {
                self.forms
                    .get(&format!("gamma{i}"))
                    .ok_or_else(|| GeomError::Argument(format!("{} has no link coframe", self.name)))
            })
            .collect::<Result<_>>()?;
        let mut res = Vec::new();
        for i in 0..3 {
            res.push(g[i].d()?.sub(&g[(i + 1) % 3].wedge(g[(i + 2) % 3])?.scale_f64(2.0))?);
        }
        sup_over(pts, |p| {
            let mut m: f64 = 0.0;
            for r in &res {
                m = m.max(r.eval(p)?.max_abs());
            }
            Ok(m)
        })
    }
}

/// Einstein constant `−4(n + 2)` of a quaternion-Kähler quotient of
/// dimension `4n`.
fn qk_lambda(n: usize) -> f64 {
    -4.0 * (n as f64 + 2.0)
}

/// `g(v, ·)` at a point.
pub(crate) fn lower_jet(g: &JetMatrix, v: &VectorJet) -> Result<FormJet> {
    let n = g.n();
    if v.dim() != n {
        return Err(GeomError::Argument("metric and vector dimensions differ".into()));
    }
    let terms = (0..n)
        .map(|j| {
            let c = (0..n).fold(Jet2::zero(n), |acc, i| acc + g.get(i, j) * &v.comps()[i]);
            (vec![j], c)
        })
        .collect();
    FormJet::from_terms(n, 1, terms)
}

/// `g(X, ·)` as a 1-form.
pub(crate) fn lower(g: &MetricField, x: &VectorField) -> Result<KFormField> {
    if g.dim() != x.dim() {
        return Err(GeomError::Argument("metric and field live on different charts".into()));
    }
    let (g, x) = (g.clone(), x.clone());
    KFormField::new(g.dim(), 1, move |p| lower_jet(&g.eval(p)?, &x.eval(p)?))
}

/// Metric `Σ c θ⊙φ` with `θ⊙φ = ½(θ⊗φ + φ⊗θ)`, coefficients computed
/// pointwise from the supplied closure.
pub(crate) fn quadratic_metric<F>(dim: usize, f: F) -> MetricField
where
    F: Fn(&ChartPoint) -> Result<Vec<(Jet2, FormJet, FormJet)>> + Send + Sync + 'static,
{
    Field::new(dim, move |p: &ChartPoint| {
        let terms = f(p)?;
        let refs: Vec<(Jet2, &FormJet, &FormJet)> = terms.iter().map(|(c, a, b)| (c.clone(), a, b)).collect();
        JetMatrix::from_quadratic(dim, &refs)
    })
}

fn basis1(dim: usize, i: usize) -> FormJet {
    FormJet::basis(dim, &[i]).expect("index in range")
}

/// `sinh²y cosh²y` at coordinate 0.
fn warp(p: &ChartPoint) -> Jet2 {
    let y = p.lift(0);
    (y.sinh() * y.cosh()).square()
}

fn radial_r4() -> Result<QuotientModel> {
    let metric = quadratic_metric(4, |p| {
        let eta = p.lift(1);
        let w = warp(p);
        Ok(vec![
            (p.constant(1.0), basis1(4, 0), basis1(4, 0)),
            (w.clone(), basis1(4, 1), basis1(4, 1)),
            (&w * &eta.sin().square(), basis1(4, 2), basis1(4, 2)),
            (&w * &eta.cos().square(), basis1(4, 3), basis1(4, 3)),
        ])
    });
    Ok(QuotientModel {
        kind: ReducedKind::RadialR4,
        name: "dy^2 + sinh^2 cosh^2 g_S3".into(),
        coords: vec!["y".into(), "eta".into(), "xi1".into(), "xi2".into()],
        metric,
        forms: BTreeMap::new(),
        lambda: qk_lambda(1),
        domain: SampleBox::new(vec![0.3, 0.3, -1.0, -1.0], vec![1.5, 1.2, 1.0, 1.0])?,
    })
}

/// Hopf coordinates `(η, ξ_1, ξ_2) ↦ (sinη cosξ_1, sinη sinξ_1, cosη cosξ_2,
/// cosη sinξ_2)` with exact Jacobian.
fn hopf_embedding() -> ChartMap {
    ChartMap::with_jacobian(3, 4, |p| {
        let (e, a, b) = (p.lift(0), p.lift(1), p.lift(2));
        let (se, ce, sa, ca, sb, cb) = (e.sin(), e.cos(), a.sin(), a.cos(), b.sin(), b.cos());
        let z = p.constant(0.0);
        let comps = vec![&se * &ca, &se * &sa, &ce * &cb, &ce * &sb];
        let jac = vec![
            vec![&ce * &ca, -(&se * &sa), z.clone()],
            vec![&ce * &sa, &se * &ca, z.clone()],
            vec![-(&se * &cb), z.clone(), -(&ce * &sb)],
            vec![-(&se * &sb), z.clone(), &ce * &cb],
        ];
        Ok(MapJet {
            comps,
            jacobian: Some(jac),
        })
    })
}

fn sasaki_link() -> Result<QuotientModel> {
    let e = euler_field(4)?;
    let sigma = standard_triple(1)?;
    let hopf = hopf_embedding();
    let up = ChartMap::projection(4, 1, 3)?;
    let mut forms = BTreeMap::new();
    let mut gammas = Vec::new();
    for (i, s) in sigma.iter().enumerate() {
        let g = up.pullback_form(&hopf.pullback_form(&s.interior(&e)?)?)?;
        forms.insert(format!("gamma{}", i + 1), g.clone());
        gammas.push(g);
    }
    let metric = quadratic_metric(4, move |p| {
        let w = warp(p);
        let mut out = vec![(p.constant(1.0), basis1(4, 0), basis1(4, 0))];
        for g in &gammas {
            let gj = g.eval(p)?;
            out.push((w.clone(), gj.clone(), gj));
        }
        Ok(out)
    });
    Ok(QuotientModel {
        kind: ReducedKind::SasakiLink,
        name: "dy^2 + sinh^2 cosh^2 (gamma1^2 + gamma2^2 + gamma3^2)".into(),
        coords: vec!["y".into(), "eta".into(), "xi1".into(), "xi2".into()],
        metric,
        forms,
        lambda: qk_lambda(1),
        domain: SampleBox::new(vec![0.3, 0.3, -1.0, -1.0], vec![1.5, 1.2, 1.0, 1.0])?,
    })
}

/// `dq − 2(x_2dx_1 − x_1dx_2)` on a chart `(x_1, x_2, ·, q)`.
fn contact_form(p: &ChartPoint) -> Result<FormJet> {
    let (x1, x2) = (p.lift(0), p.lift(1));
    FormJet::from_terms(4, 1, vec![(vec![3], p.constant(1.0)), (vec![0], &x2 * -2.0), (vec![1], &x1 * 2.0)])
}

fn permuting_example1(a: f64) -> Result<QuotientModel> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(GeomError::Argument(format!("need a ≥ 0, got {a}")));
    }
    let metric = quadratic_metric(4, move |p| {
        let pp = p.lift(2);
        if pp.value() <= 0.0 || (a > 0.0 && a - 2.0 * pp.value() <= 0.0) {
            return Err(GeomError::Domain(format!("p = {} outside 0 < 2p < a", pp.value())));
        }
        let m = (&pp * 2.0 - a).square();
        let plus = &pp * 2.0 + a;
        let c1 = plus.try_div(&m)?;
        let c2 = plus.try_div(&(&(&pp * 4.0) * &m))?;
        let c3 = pp.try_div(&(&m * &plus))?;
        let th = contact_form(p)?;
        Ok(vec![
            (c1.clone(), basis1(4, 0), basis1(4, 0)),
            (c1, basis1(4, 1), basis1(4, 1)),
            (c2, basis1(4, 2), basis1(4, 2)),
            (c3, th.clone(), th),
        ])
    });
    let p_hi = if a > 0.0 { 0.45 * a } else { 2.0 };
    Ok(QuotientModel {
        kind: ReducedKind::PermutingExample1,
        name: format!("permuting quotient of R^4, a = {a}"),
        coords: vec!["x1".into(), "x2".into(), "p".into(), "q".into()],
        metric,
        forms: BTreeMap::new(),
        lambda: qk_lambda(1),
        domain: SampleBox::new(vec![-0.5, -0.5, 0.05_f64.min(p_hi / 2.0), -1.0], vec![0.5, 0.5, p_hi, 1.0])?,
    })
}

/// The displayed form is `8` times the `a = 0` quotient, so its Einstein
/// constant is `−12/8`.
fn complex_hyperbolic() -> Result<QuotientModel> {
    let metric = quadratic_metric(4, |p| {
        let s = p.lift(2);
        let th = contact_form(p)?;
        Ok(vec![
            (s.exp() * 4.0, basis1(4, 0), basis1(4, 0)),
            (s.exp() * 4.0, basis1(4, 1), basis1(4, 1)),
            (p.constant(1.0), basis1(4, 2), basis1(4, 2)),
            ((s * 2.0).exp(), th.clone(), th),
        ])
    });
    Ok(QuotientModel {
        kind: ReducedKind::ComplexHyperbolic,
        name: "complex hyperbolic plane".into(),
        coords: vec!["x1".into(), "x2".into(), "s".into(), "q".into()],
        metric,
        forms: BTreeMap::new(),
        lambda: qk_lambda(1) / 8.0,
        domain: SampleBox::new(vec![-0.5, -0.5, -1.0, -1.0], vec![0.5, 0.5, 1.0, 1.0])?,
    })
}

fn permuting_example2(a: f64) -> Result<QuotientModel> {
    if !(a > 0.0) {
        return Err(GeomError::Argument(format!("need a > 0, got {a}")));
    }
    let metric = Field::new(4, move |p: &ChartPoint| {
        let r2 = p.lifts().iter().map(Jet2::square).fold(Jet2::zero(4), |s, x| s + x);
        if r2.value() >= a {
            return Err(GeomError::Domain(format!("r² = {} is not below a = {a}", r2.value())));
        }
        let c = p.constant(a).try_div(&(-r2 + a).square())?;
        Ok(JetMatrix::identity(4).scale_jet(&c))
    });
    // r² ≤ a/2 on the box
    let h = (a / 8.0).sqrt();
    Ok(QuotientModel {
        kind: ReducedKind::PermutingExample2,
        name: format!("a/(a - r^2)^2 g_R4, a = {a}"),
        coords: vec!["x1".into(), "x2".into(), "x3".into(), "x4".into()],
        metric,
        forms: BTreeMap::new(),
        lambda: qk_lambda(1),
        domain: SampleBox::cube(4, -h, h),
    })
}

fn general_base(params: &ReducedParams, kind: KillingKind) -> Result<(&HKData, &VectorField, &[KFormField; 3])> {
    let base = params
        .base
        .as_ref()
        .ok_or_else(|| GeomError::Argument("the general formulas need a base".into()))?;
    let (x, k) = base
        .killing
        .as_ref()
        .ok_or_else(|| GeomError::Argument(format!("base {} carries no Killing field", base.label)))?;
    if *k != kind {
        return Err(GeomError::Argument(format!("base field is {}, need {}", k.name(), kind.name())));
    }
    Ok((base, x, base.kappa()?))
}

/// Require `κ_i(X) = 0` for the listed `i` on the base domain.
fn require_annihilated(base: &HKData, x: &VectorField, kappa: &[KFormField; 3], which: &[usize]) -> Result<()> {
    let vals: Vec<KFormField> = which.iter().map(|&i| kappa[i].interior(x)).collect::<Result<_>>()?;
    let w = sup_over(&base.check_points(), |p| {
        let mut m: f64 = 0.0;
        for v in &vals {
            m = m.max(v.eval(p)?.coeff(&[]).value().abs());
        }
        Ok(m)
    })?;
    if w.value > 1e-9 {
        return Err(GeomError::Precondition(format!(
            "potentials do not annihilate the field: |κ(X)| = {:e} at {:?}",
            w.value, w.point
        )));
    }
    Ok(())
}

/// `4Σκ_i² + g_M − (1 + |X|²)⁻¹ X♭²`, the homothetic quotient on the slice
/// `t = 0, y = 0` of the zero level set.
fn homothetic_general(params: &ReducedParams) -> Result<QuotientModel> {
    let (base, x, kappa) = general_base(params, KillingKind::Homothetic)?;
    require_annihilated(base, x, kappa, &[0, 1, 2])?;
    let flat = lower(&base.g, x)?;
    let (g, x, kappa) = (base.g.clone(), x.clone(), kappa.clone());
    let dim = base.dim();
    let metric = Field::new(dim, move |p: &ChartPoint| {
        let xb = flat.eval(p)?;
        let xv = x.eval(p)?;
        let n2 = (0..dim).fold(Jet2::zero(dim), |s, i| s + &xb.coeff(&[i]) * &xv.comps()[i]);
        let coef = (n2 + 1.0).try_recip()?;
        let mut terms = Vec::new();
        for k in &kappa {
            let kj = k.eval(p)?;
            terms.push((p.constant(4.0), kj.clone(), kj));
        }
        terms.push((-coef, xb.clone(), xb));
        let refs: Vec<(Jet2, &FormJet, &FormJet)> = terms.iter().map(|(c, a, b)| (c.clone(), a, b)).collect();
        Ok(JetMatrix::from_quadratic(dim, &refs)?.add(&g.eval(p)?))
    });
    Ok(QuotientModel {
        kind: ReducedKind::HomotheticGeneral,
        name: format!("homothetic quotient over {}", base.label),
        coords: base.coords.clone(),
        metric,
        forms: BTreeMap::new(),
        lambda: qk_lambda(base.n()),
        domain: base.domain.clone(),
    })
}

/// The permuting quotient on the slice `y_1 = 0`, with `p = X⌟κ_1` and
/// `D = a − 2p + |X|²`:
///
/// `dp²/(a−2p)² + 4|X|²κ_1²/((a−2p)²D) + 4(κ_2² + κ_3²)/(a−2p)²
///  + g_M/(a−2p) + (4X♭⊙κ_1 − X♭²)/((a−2p)D)`.
fn permuting_general(params: &ReducedParams) -> Result<QuotientModel> {
    let a = params.a;
    if a == 0.0 {
        return Err(GeomError::Argument("the slice y1 = 0 is transverse only for a ≠ 0".into()));
    }
    let (base, x, kappa) = general_base(params, KillingKind::Permuting)?;
    require_annihilated(base, x, kappa, &[1, 2])?;
    let flat = lower(&base.g, x)?;
    let pfield = kappa[0].interior(x)?;
    // dp = L_Xκ_1 − X⌟σ_1 = −X⌟σ_1 keeps second-order jets
    let dp = base.sigma[0].interior(x)?.scale_f64(-1.0);
    let (g, x, kappa) = (base.g.clone(), x.clone(), kappa.clone());
    let dim = base.dim();
    let metric = Field::new(dim, move |pt: &ChartPoint| {
        let xb = flat.eval(pt)?;
        let xv = x.eval(pt)?;
        let p = pfield.eval(pt)?.coeff(&[]);
        let m = -(&p * 2.0) + a;
        if m.value() <= 0.0 {
            return Err(GeomError::Domain(format!("a - 2p = {} is not positive", m.value())));
        }
        let n2 = (0..dim).fold(Jet2::zero(dim), |s, i| s + &xb.coeff(&[i]) * &xv.comps()[i]);
        let d = &m + &n2;
        let m2 = m.square();
        let md = &m * &d;
        let k: Vec<FormJet> = kappa.iter().map(|k| k.eval(pt)).collect::<Result<_>>()?;
        let terms = [(m2.try_recip()?, dp.eval(pt)?, dp.eval(pt)?),
            ((&n2 * 4.0).try_div(&(&m2 * &d))?, k[0].clone(), k[0].clone()),
            ((m2.try_recip()? * 4.0), k[1].clone(), k[1].clone()),
            ((m2.try_recip()? * 4.0), k[2].clone(), k[2].clone()),
            (md.try_recip()? * 4.0, xb.clone(), k[0].clone()),
            (-md.try_recip()?, xb.clone(), xb.clone())];
        let refs: Vec<(Jet2, &FormJet, &FormJet)> = terms.iter().map(|(c, a, b)| (c.clone(), a, b)).collect();
        Ok(JetMatrix::from_quadratic(dim, &refs)?.add(&g.eval(pt)?.scale_jet(&m.try_recip()?)))
    });
    Ok(QuotientModel {
        kind: ReducedKind::PermutingGeneral,
        name: format!("permuting quotient over {}, a = {a}", base.label),
        coords: base.coords.clone(),
        metric,
        forms: BTreeMap::new(),
        lambda: qk_lambda(base.n()),
        domain: base.domain.clone(),
    })
}

/// Build one of the closed-form quotient metrics.
pub fn reduced_metric(which: ReducedKind, params: &ReducedParams) -> Result<QuotientModel> {
    match which {
        ReducedKind::RadialR4 => radial_r4(),
        ReducedKind::SasakiLink => sasaki_link(),
        ReducedKind::PermutingExample1 => permuting_example1(params.a),
        ReducedKind::PermutingExample2 => permuting_example2(params.a),
        ReducedKind::ComplexHyperbolic => complex_hyperbolic(),
        ReducedKind::HomotheticGeneral => homothetic_general(params),
        ReducedKind::PermutingGeneral => permuting_general(params),
    }
}
