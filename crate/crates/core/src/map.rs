//! Smooth maps between charts and pullbacks of forms and metrics.
//!
//! A pulled-back form needs the Jacobian of the map as jets. When the map is
//! given only by its component jets the Jacobian is one order short, so maps
//! that feed curvature computations should supply the Jacobian explicitly.

use std::sync::Arc;

use crate::calculus::{ChartPoint, Field, Jet2, ScalarField};
use crate::curvature::{JetMatrix, MetricField};
use crate::error::{GeomError, Result};
use crate::exterior::{FormJet, KFormField};

/// Components of a map at a point, optionally with exact Jacobian jets.
#[derive(Debug, Clone)]
pub struct MapJet {
    /// `Ψ^a` as jets on the source chart.
    pub comps: Vec<Jet2>,
    /// `∂_j Ψ^a` as jets, indexed `[a][j]`.
    pub jacobian: Option<Vec<Vec<Jet2>>>,
}

type MapFn = dyn Fn(&ChartPoint) -> Result<MapJet> + Send + Sync;

/// A map from a source chart to a target chart.
#[derive(Clone)]
pub struct ChartMap {
    source_dim: usize,
    target_dim: usize,
    f: Arc<MapFn>,
}

impl std::fmt::Debug for ChartMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ChartMap({} -> {})", self.source_dim, self.target_dim)
    }
}

impl ChartMap {
    /// A map given by its component jets; its Jacobian is derived from them.
    pub fn new<F>(source_dim: usize, target_dim: usize, f: F) -> ChartMap
    where
        F: Fn(&ChartPoint) -> Result<Vec<Jet2>> + Send + Sync + 'static,
    {
        ChartMap {
            source_dim,
            target_dim,
            f: Arc::new(move |p| {
                Ok(MapJet {
                    comps: f(p)?,
                    jacobian: None,
                })
            }),
        }
    }

    /// A map with hand-supplied Jacobian jets.
    pub fn with_jacobian<F>(source_dim: usize, target_dim: usize, f: F) -> ChartMap
    where
        F: Fn(&ChartPoint) -> Result<MapJet> + Send + Sync + 'static,
    {
        ChartMap {
            source_dim,
            target_dim,
            f: Arc::new(f),
        }
    }

    /// The affine map `x ↦ A x + b`.
    pub fn linear(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<ChartMap> {
        let target = b.len();
        let source = a.first().map(Vec::len).unwrap_or(0);
        if a.len() != target || a.iter().any(|r| r.len() != source) {
            return Err(GeomError::Argument("matrix shape does not match offset".into()));
        }
        Ok(ChartMap::with_jacobian(source, target, move |p| {
            let x = p.lifts();
            let comps = (0..target)
                .map(|i| {
                    x.iter()
                        .zip(&a[i])
                        .fold(p.constant(b[i]), |acc, (xj, aij)| acc + xj * *aij)
                })
                .collect();
            let jacobian = Some(
                (0..target)
                    .map(|i| a[i].iter().map(|v| p.constant(*v)).collect())
                    .collect(),
            );
            Ok(MapJet { comps, jacobian })
        }))
    }

    /// Projection onto coordinates `offset..offset + target_dim`.
    pub fn projection(source_dim: usize, offset: usize, target_dim: usize) -> Result<ChartMap> {
        if offset + target_dim > source_dim {
            return Err(GeomError::Argument("projection does not fit the chart".into()));
        }
        let a = (0..target_dim)
            .map(|i| (0..source_dim).map(|j| if j == offset + i { 1.0 } else { 0.0 }).collect())
            .collect();
        ChartMap::linear(a, vec![0.0; target_dim])
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    /// Evaluate at a source point.
    pub fn eval(&self, p: &ChartPoint) -> Result<MapJet> {
        if p.dim() != self.source_dim {
            return Err(GeomError::Argument("point does not lie in the source chart".into()));
        }
        let m = (self.f)(p).map_err(|e| e.at(p.coords()))?;
        if m.comps.len() != self.target_dim {
            return Err(GeomError::Argument("map returned the wrong number of components".into()));
        }
        Ok(m)
    }

    /// Image point in the target chart.
    pub fn image(&self, p: &ChartPoint) -> Result<ChartPoint> {
        ChartPoint::new(self.eval(p)?.comps.iter().map(Jet2::value).collect())
    }

    fn differentials(m: &MapJet, n: usize) -> Result<Vec<FormJet>> {
        let mut out = Vec::with_capacity(m.comps.len());
        for (a, c) in m.comps.iter().enumerate() {
            let parts: Vec<Jet2> = match &m.jacobian {
                Some(j) => j[a].clone(),
                None => (0..n).map(|k| c.partial(k)).collect::<Result<_>>()?,
            };
            out.push(FormJet::from_terms(
                n,
                1,
                parts.into_iter().enumerate().map(|(k, v)| (vec![k], v)).collect(),
            )?);
        }
        Ok(out)
    }

    fn pullback_form_at(&self, form: &KFormField, p: &ChartPoint) -> Result<FormJet> {
        let m = self.eval(p)?;
        let q = ChartPoint::new(m.comps.iter().map(Jet2::value).collect())?;
        let target = form.eval(&q)?;
        let n = self.source_dim;
        let diffs = ChartMap::differentials(&m, n)?;
        let mut out = FormJet::zero(n, form.degree());
        for (idx, c) in target.terms() {
            let mut piece = FormJet::scalar(Jet2::compose(c, &m.comps)?);
            for a in idx {
                piece = piece.wedge(&diffs[a])?;
            }
            out = out.add(&piece)?;
        }
        Ok(out)
    }

    /// Pull a form on the target chart back to the source chart.
    pub fn pullback_form(&self, form: &KFormField) -> Result<KFormField> {
        if form.dim() != self.target_dim {
            return Err(GeomError::Argument("form does not live on the target chart".into()));
        }
        let (me, form) = (self.clone(), form.clone());
        KFormField::new(self.source_dim, form.degree(), move |p| me.pullback_form_at(&form, p))
    }

    /// Pull a scalar field back to the source chart.
    pub fn pullback_scalar(&self, f: &ScalarField) -> Result<ScalarField> {
        if f.dim() != self.target_dim {
            return Err(GeomError::Argument("scalar does not live on the target chart".into()));
        }
        let (me, f) = (self.clone(), f.clone());
        Ok(Field::new(self.source_dim, move |p| {
            let m = me.eval(p)?;
            let q = ChartPoint::new(m.comps.iter().map(Jet2::value).collect())?;
            Jet2::compose(&f.eval(&q)?, &m.comps)
        }))
    }

    /// Pull a metric on the target chart back to the source chart.
    pub fn pullback_metric(&self, g: &MetricField) -> Result<MetricField> {
        if g.dim() != self.target_dim {
            return Err(GeomError::Argument("metric does not live on the target chart".into()));
        }
        let (me, g) = (self.clone(), g.clone());
        let n = self.source_dim;
        Ok(Field::new(n, move |p| {
            let m = me.eval(p)?;
            let q = ChartPoint::new(m.comps.iter().map(Jet2::value).collect())?;
            let gt = g.eval(&q)?;
            let diffs = ChartMap::differentials(&m, n)?;
            let k = gt.dim();
            let mut terms = Vec::new();
            for a in 0..k {
                for b in 0..k {
                    let gab = gt.get(a, b);
                    if gab.is_constant() && gab.value() == 0.0 {
                        continue;
                    }
                    terms.push((Jet2::compose(gab, &m.comps)?, &diffs[a], &diffs[b]));
                }
            }
            JetMatrix::from_quadratic(n, &terms)
        }))
    }

    /// Composite map `self ∘ inner`.
    pub fn after(&self, inner: &ChartMap) -> Result<ChartMap> {
        if inner.target_dim != self.source_dim {
            return Err(GeomError::Argument("maps cannot be composed".into()));
        }
        let (outer, inner) = (self.clone(), inner.clone());
        Ok(ChartMap::new(inner.source_dim, outer.target_dim, move |p| {
            let mi = inner.eval(p)?;
            let q = ChartPoint::new(mi.comps.iter().map(Jet2::value).collect())?;
            let mo = outer.eval(&q)?;
            mo.comps.iter().map(|c| Jet2::compose(c, &mi.comps)).collect()
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Order;

    fn pt(c: &[f64]) -> ChartPoint {
        ChartPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn polar_pullback_of_flat_metric() {
        let polar = ChartMap::new(2, 2, |p| {
            let (r, th) = (p.lift(0), p.lift(1));
            Ok(vec![&r * &th.cos(), &r * &th.sin()])
        });
        let g = polar.pullback_metric(&MetricField::flat(2)).unwrap();
        let m = g.eval(&pt(&[2.0, 0.3])).unwrap();
        assert!((m.get(0, 0).value() - 1.0).abs() < 1e-15);
        assert!(m.get(0, 1).value().abs() < 1e-15);
        assert!((m.get(1, 1).value() - 4.0).abs() < 1e-14);
        assert_eq!(m.order(), Order::First);
    }

    #[test]
    fn area_form_in_polar_coordinates() {
        let polar = ChartMap::new(2, 2, |p| {
            let (r, th) = (p.lift(0), p.lift(1));
            Ok(vec![&r * &th.cos(), &r * &th.sin()])
        });
        let area = KFormField::basis(2, &[0, 1]).unwrap();
        let pulled = polar.pullback_form(&area).unwrap().eval(&pt(&[1.5, 0.2])).unwrap();
        assert!((pulled.coeff(&[0, 1]).value() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn projections_keep_full_order() {
        let pr = ChartMap::projection(5, 1, 2).unwrap();
        let f = Field::new(2, |p: &ChartPoint| Ok(p.lift(0).sin() * p.lift(1)));
        let g = pr.pullback_scalar(&f).unwrap().eval(&pt(&[9.0, 0.4, 0.5, 7.0, 7.0])).unwrap();
        assert_eq!(g.order(), Order::Second);
        assert!((g.grad()[1] - 0.4f64.cos() * 0.5).abs() < 1e-15);
        assert_eq!(g.grad()[0], 0.0);
        let m = ChartMap::linear(vec![vec![1.0, 2.0]], vec![0.0]).unwrap();
        assert!(ChartMap::projection(2, 1, 2).is_err());
        assert_eq!(m.image(&pt(&[1.0, 1.0])).unwrap().coords(), &[3.0]);
    }
}
