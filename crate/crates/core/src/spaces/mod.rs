//! Constructors for the geometries under study: hyperKähler bases, the
//! Einstein bundle metrics over them, hypercomplex torus bundles, Ricci-flat
//! specials and balanced Hermitian structures.

mod base;
mod bundle;
mod hypercomplex;
mod special;

use std::collections::BTreeMap;

use crate::calculus::{ChartPoint, Field, Jet2, ScalarField};
use crate::curvature::{JetMatrix, MetricField};
use crate::error::{GeomError, Result};
use crate::exterior::{ComplexFormField, KFormField};
use crate::map::ChartMap;
use crate::sampling::SampleBox;

pub use base::{
    algebraic_residual, default_potentials, euler_field, flat_base, flat_base_with_field, gh_linear_example,
    gibbons_hawking, half_plane_rotation, kind_residual, orientation_sign, permuting_potentials, potential_residual,
    quaternion_residual, radial_field, radial_potentials, rotation_v, rotation_w, spn_residual, standard_triple,
    HKData, KillingKind,
};
pub use bundle::{
    build_model, build_model_with, closed_4form_residual, default_connections, hermitian_residual,
    kahler_potential_residual, structure_equation_residual, submersion_residual, BundleKind, Connections,
};
pub use hypercomplex::{build_hypercomplex, build_hypercomplex_unchecked, HypercomplexShape};
pub use special::{balanced_check, balanced_m6, conformal_balanced, ricci_flat_special, SpecialKind};

/// Which profile family a [`ProfileSet`] came from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// `p = a e^{bt}`, `q = r = s = 2a²b e^{2bt}`.
    Exponential { a: f64, b: f64 },
    /// `p = t^{1/(2n+2)}`, `q = 2pp′`.
    Calabi { n: usize },
    Custom,
}

/// Warping functions `p, q, r, s` of one variable `t`.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    pub p: Option<ScalarField>,
    pub q: Option<ScalarField>,
    pub r: Option<ScalarField>,
    pub s: Option<ScalarField>,
    pub kind: ProfileKind,
    /// Interval of `t` on which models built from these profiles are sampled.
    pub t_range: (f64, f64),
}

fn positive(name: &'static str, f: ScalarField) -> ScalarField {
    f.apply(move |j| {
        if j.value() > 0.0 {
            Ok(j.clone())
        } else {
            Err(GeomError::Domain(format!("profile {name} = {} is not positive", j.value())))
        }
    })
}

impl ProfileSet {
    pub fn new(
        p: Option<ScalarField>,
        q: Option<ScalarField>,
        r: Option<ScalarField>,
        s: Option<ScalarField>,
    ) -> Result<ProfileSet> {
        if [&p, &q, &r, &s].iter().any(|f| f.as_ref().is_some_and(|f| f.dim() != 1)) {
            return Err(GeomError::Argument("profiles are functions of t alone".into()));
        }
        Ok(ProfileSet {
            p: p.map(|f| positive("p", f)),
            q: q.map(|f| positive("q", f)),
            r: r.map(|f| positive("r", f)),
            s: s.map(|f| positive("s", f)),
            kind: ProfileKind::Custom,
            t_range: (-0.5, 0.5),
        })
    }

    pub fn with_t_range(mut self, lo: f64, hi: f64) -> Result<ProfileSet> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(GeomError::Argument(format!("invalid t interval [{lo}, {hi}]")));
        }
        self.t_range = (lo, hi);
        Ok(self)
    }

    /// The two-parameter exponential family.
    pub fn exponential(a: f64, b: f64) -> Result<ProfileSet> {
        if !(a > 0.0 && b > 0.0) {
            return Err(GeomError::Argument(format!("need a, b > 0, got a = {a}, b = {b}")));
        }
        let p = Field::new(1, move |x: &ChartPoint| Ok((x.lift(0) * b).exp() * a));
        let q = Field::new(1, move |x: &ChartPoint| Ok((x.lift(0) * (2.0 * b)).exp() * (2.0 * a * a * b)));
        let mut out = ProfileSet::new(Some(p), Some(q.clone()), Some(q.clone()), Some(q))?;
        out.kind = ProfileKind::Exponential { a, b };
        Ok(out)
    }

    /// The Calabi profile on `t > 0`.
    pub fn calabi(n: usize) -> Result<ProfileSet> {
        if n == 0 {
            return Err(GeomError::Argument("n must be at least 1".into()));
        }
        let e = 1.0 / (2.0 * n as f64 + 2.0);
        let p = Field::new(1, move |x: &ChartPoint| x.lift(0).try_powf(e));
        let q = Field::new(1, move |x: &ChartPoint| {
            let t = x.lift(0);
            Ok(t.try_powf(e)? * t.try_powf(e - 1.0)? * (2.0 * e))
        });
        let mut out = ProfileSet::new(Some(p), Some(q), None, None)?;
        out.kind = ProfileKind::Calabi { n };
        out.with_t_range(0.5, 3.0)
    }

    /// Value, first and second derivative of each present profile at `t`.
    pub fn derivatives(&self, t: f64) -> Result<[Option<[f64; 3]>; 4]> {
        let pt = ChartPoint::new(vec![t])?;
        let one = |f: &Option<ScalarField>| -> Result<Option<[f64; 3]>> {
            match f {
                None => Ok(None),
                Some(f) => {
                    let j = f.eval(&pt)?;
                    j.require(2)?;
                    Ok(Some([j.value(), j.grad()[0], j.hess(0, 0)]))
                }
            }
        };
        Ok([one(&self.p)?, one(&self.q)?, one(&self.r)?, one(&self.s)?])
    }
}

/// A profile function pulled back to a chart whose coordinate 0 is `t`.
pub(crate) fn profile_on_chart(f: &ScalarField, dim: usize) -> ScalarField {
    let f = f.clone();
    Field::new(dim, move |p: &ChartPoint| {
        let tj = f.eval(&ChartPoint::new(vec![p.coord(0)])?)?;
        Jet2::compose(&tj, &[p.lift(0)])
    })
}

/// A constructed total space ready for verification.
#[derive(Debug, Clone)]
pub struct SpaceModel {
    pub name: String,
    pub coords: Vec<String>,
    pub metric: MetricField,
    pub forms: BTreeMap<String, KFormField>,
    pub complex_forms: BTreeMap<String, ComplexFormField>,
    /// Constants the model is expected to exhibit, such as `lambda`.
    pub expected: BTreeMap<String, f64>,
    pub profile: Option<ProfileSet>,
    pub base: Option<HKData>,
    /// Index of the first base coordinate in the chart.
    pub base_offset: usize,
    pub domain: SampleBox,
}

impl SpaceModel {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn form(&self, name: &str) -> Result<&KFormField> {
        self.forms
            .get(name)
            .ok_or_else(|| GeomError::Argument(format!("model {} has no form named {name}", self.name)))
    }

    pub fn complex_form(&self, name: &str) -> Result<&ComplexFormField> {
        self.complex_forms
            .get(name)
            .ok_or_else(|| GeomError::Argument(format!("model {} has no complex form named {name}", self.name)))
    }

    pub fn expected(&self, name: &str) -> Result<f64> {
        self.expected
            .get(name)
            .copied()
            .ok_or_else(|| GeomError::Argument(format!("model {} has no expected constant {name}", self.name)))
    }

    pub fn base(&self) -> Result<&HKData> {
        self.base
            .as_ref()
            .ok_or_else(|| GeomError::Argument(format!("model {} has no base", self.name)))
    }

    /// Replace or add a named form.
    pub fn with_form(mut self, name: &str, form: KFormField) -> Result<SpaceModel> {
        if form.dim() != self.dim() {
            return Err(GeomError::Argument("form does not live on the model chart".into()));
        }
        self.forms.insert(name.to_string(), form);
        Ok(self)
    }

    pub fn sample(&self, count: usize, seed: u64) -> Vec<ChartPoint> {
        self.domain.sample(count, seed)
    }
}

/// Pullback along the projection of a product chart onto its base factor.
pub(crate) struct BaseLift {
    map: ChartMap,
}

impl BaseLift {
    pub(crate) fn new(total: usize, offset: usize, base: usize) -> Result<BaseLift> {
        Ok(BaseLift {
            map: ChartMap::projection(total, offset, base)?,
        })
    }

    pub(crate) fn form(&self, f: &KFormField) -> Result<KFormField> {
        self.map.pullback_form(f)
    }

    pub(crate) fn metric(&self, g: &MetricField) -> Result<MetricField> {
        self.map.pullback_metric(g)
    }
}

/// `w_0 · h + Σ w_a θ_a²` with `h` an already pulled-back metric.
pub(crate) fn assemble_metric(
    dim: usize,
    warped: Option<(ScalarField, MetricField)>,
    squares: Vec<(ScalarField, KFormField)>,
) -> Result<MetricField> {
    let sq = MetricField::from_squares(dim, squares)?;
    Ok(Field::new(dim, move |p: &ChartPoint| {
        let mut m: JetMatrix = sq.eval(p)?;
        if let Some((w, h)) = &warped {
            m = m.add(&h.eval(p)?.scale_jet(&w.eval(p)?));
        }
        Ok(m)
    }))
}

/// `dx_index` on a chart.
pub(crate) fn dcoord(index: usize, dim: usize) -> Result<KFormField> {
    KFormField::basis(dim, &[index])
}

/// Coordinate names for a fibre block followed by the base.
pub(crate) fn chart_names(fibre: &[&str], base: &HKData) -> Vec<String> {
    fibre.iter().map(|s| s.to_string()).chain(base.coords.iter().cloned()).collect()
}

/// The sample box of a fibre block times the base domain.
pub(crate) fn chart_domain(fibre_lo: Vec<f64>, fibre_hi: Vec<f64>, base: &HKData) -> Result<SampleBox> {
    Ok(SampleBox::new(fibre_lo, fibre_hi)?.product(&base.domain))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_profiles() {
        let ps = ProfileSet::exponential(3.0, 2.0).unwrap();
        let d = ps.derivatives(0.5).unwrap();
        let p = d[0].unwrap();
        let e = 1f64.exp();
        assert!((p[0] - 3.0 * e).abs() < 1e-13);
        assert!((p[1] - 6.0 * e).abs() < 1e-13);
        assert!((p[2] - 12.0 * e).abs() < 1e-12);
        let q = d[1].unwrap();
        assert!((q[0] - 36.0 * e * e).abs() < 1e-11);
        assert!(ProfileSet::exponential(0.0, 1.0).is_err());
    }

    #[test]
    fn calabi_profile_satisfies_the_kahler_relation() {
        let ps = ProfileSet::calabi(1).unwrap();
        let d = ps.derivatives(2.0).unwrap();
        let (p, q) = (d[0].unwrap(), d[1].unwrap());
        assert!((q[0] - 2.0 * p[0] * p[1]).abs() < 1e-15);
        assert!((q[0] - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!(ps.derivatives(-1.0).is_err());
    }

    #[test]
    fn nonpositive_profiles_are_rejected_at_evaluation() {
        let f = Field::new(1, |x: &ChartPoint| Ok(x.lift(0)));
        let ps = ProfileSet::new(Some(f), None, None, None).unwrap();
        assert!(ps.derivatives(1.0).is_ok());
        assert!(matches!(ps.derivatives(-1.0), Err(GeomError::Evaluation { .. })));
    }
}
