//! Metric geometry on a chart: Levi-Civita connection, curvature, Killing
//! and Nijenhuis tensors, and a pointwise holonomy-dimension estimate.

use nalgebra::DMatrix;

use crate::calculus::{ChartPoint, Field, Finite, Jet2, Order};
use crate::error::{GeomError, Result};
use crate::exterior::{FormJet, KFormField, VectorJet};
use crate::sampling::{sup_over, Worst};

/// A square matrix of jets at one point.
///
/// Used both for metrics `g_ij` and for endomorphisms `J^i_j` (row `i`,
/// column `j`, acting on column vectors).
#[derive(Clone, PartialEq)]
pub struct JetMatrix {
    n: usize,
    entries: Vec<Jet2>,
}

pub type MetricJet = JetMatrix;
pub type EndoJet = JetMatrix;

impl std::fmt::Debug for JetMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.values())
    }
}

impl Finite for JetMatrix {
    fn all_finite(&self) -> bool {
        self.entries.iter().all(Jet2::is_finite)
    }
}

impl JetMatrix {
    pub fn from_fn<F: FnMut(usize, usize) -> Jet2>(n: usize, mut f: F) -> JetMatrix {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        JetMatrix { n, entries }
    }

    pub fn identity(n: usize) -> JetMatrix {
        JetMatrix::from_fn(n, |i, j| Jet2::constant(if i == j { 1.0 } else { 0.0 }, n))
    }

    /// Symmetric matrix from entries; the symmetric part is kept.
    pub fn symmetric(n: usize, entries: Vec<Jet2>) -> Result<JetMatrix> {
        if entries.len() != n * n || entries.iter().any(|e| e.dim() != n) {
            return Err(GeomError::Argument("metric entries do not match dimension".into()));
        }
        let m = JetMatrix { n, entries };
        Ok(JetMatrix::from_fn(n, |i, j| {
            if i == j {
                m.get(i, i).clone()
            } else {
                (m.get(i, j) + m.get(j, i)) * 0.5
            }
        }))
    }

    /// `Σ_a w_a θ_a ⊙ φ_a` with `θ ⊙ φ = ½(θ⊗φ + φ⊗θ)`.
    pub fn from_quadratic(n: usize, terms: &[(Jet2, &FormJet, &FormJet)]) -> Result<JetMatrix> {
        let mut m = JetMatrix::from_fn(n, |_, _| Jet2::zero(n));
        for (w, th, ph) in terms {
            if th.degree() != 1 || ph.degree() != 1 || th.dim() != n || ph.dim() != n {
                return Err(GeomError::Argument("quadratic terms need 1-forms".into()));
            }
            let a: Vec<Jet2> = (0..n).map(|i| th.coeff(&[i])).collect();
            let b: Vec<Jet2> = (0..n).map(|i| ph.coeff(&[i])).collect();
            for i in 0..n {
                for j in 0..n {
                    let av = &a[i] * &b[j] + &a[j] * &b[i];
                    if av.is_constant() && av.value() == 0.0 {
                        continue;
                    }
                    let e = &mut m.entries[i * n + j];
                    *e = &*e + &(w * &av * 0.5);
                }
            }
        }
        Ok(m)
    }

    /// `Σ_a w_a θ_a²`.
    pub fn sum_of_squares(n: usize, terms: &[(Jet2, &FormJet)]) -> Result<JetMatrix> {
        let t: Vec<(Jet2, &FormJet, &FormJet)> =
            terms.iter().map(|(w, f)| (w.clone(), *f, *f)).collect();
        JetMatrix::from_quadratic(n, &t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet2 {
        &self.entries[i * self.n + j]
    }

    pub fn order(&self) -> Order {
        self.entries.iter().map(Jet2::order).min().unwrap_or(Order::Affine)
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).value())
    }

    /// First derivatives `∂_k M` as value matrices.
    pub fn partials(&self) -> Vec<DMatrix<f64>> {
        (0..self.n)
            .map(|k| DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).grad()[k]))
            .collect()
    }

    /// Second derivative `∂_k ∂_l M` as a value matrix.
    pub fn second_partial(&self, k: usize, l: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).hess(k, l))
    }

    pub fn mul(&self, other: &JetMatrix) -> JetMatrix {
        let n = self.n;
        JetMatrix::from_fn(n, |i, j| {
            (0..n).fold(Jet2::zero(n), |acc, k| acc + self.get(i, k) * other.get(k, j))
        })
    }

    /// Entrywise product with a scalar jet.
    pub fn scale_jet(&self, f: &Jet2) -> JetMatrix {
        JetMatrix::from_fn(self.n, |i, j| self.get(i, j) * f)
    }

    pub fn scale(&self, s: f64) -> JetMatrix {
        JetMatrix::from_fn(self.n, |i, j| self.get(i, j) * s)
    }

    pub fn add(&self, other: &JetMatrix) -> JetMatrix {
        JetMatrix::from_fn(self.n, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn transpose(&self) -> JetMatrix {
        JetMatrix::from_fn(self.n, |i, j| self.get(j, i).clone())
    }

    /// Apply to a vector of jets.
    pub fn apply(&self, v: &VectorJet) -> Result<VectorJet> {
        let n = self.n;
        VectorJet::new(
            (0..n)
                .map(|i| (0..n).fold(Jet2::zero(n), |acc, j| acc + self.get(i, j) * &v.comps()[j]))
                .collect(),
        )
    }

    fn assemble(&self, value: DMatrix<f64>, d1: &[DMatrix<f64>], d2: impl Fn(usize, usize) -> DMatrix<f64>) -> Result<JetMatrix> {
        let n = self.n;
        let all_const = self.entries.iter().all(Jet2::is_constant);
        let order = if all_const {
            Order::Affine
        } else {
            self.order().min(Order::Second)
        };
        let mut hess_all: Vec<DMatrix<f64>> = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                if l < k {
                    hess_all.push(hess_all[l * n + k].clone());
                } else {
                    hess_all.push(d2(k, l));
                }
            }
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let grad = (0..n).map(|k| d1[k][(i, j)]).collect();
                let hess = (0..n * n).map(|kl| hess_all[kl][(i, j)]).collect();
                entries.push(Jet2::new(value[(i, j)], grad, hess)?.with_order(order));
            }
        }
        Ok(JetMatrix { n, entries })
    }

    /// Matrix inverse with exact first and second derivatives.
    pub fn inverse(&self) -> Result<JetMatrix> {
        let g = self.values();
        let inv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| GeomError::Domain("singular matrix".into()))?;
        let d = self.partials();
        let inv_d: Vec<DMatrix<f64>> = d.iter().map(|dk| -(&inv * dk * &inv)).collect();
        let need_second = self.order().level() >= 2;
        let n = self.n;
        self.assemble(inv.clone(), &inv_d, |k, l| {
            if !need_second {
                return DMatrix::zeros(n, n);
            }
            let dkl = self.second_partial(k, l);
            &inv * (&d[k] * &inv * &d[l] + &d[l] * &inv * &d[k] - dkl) * &inv
        })
    }

    /// Determinant with exact first and second derivatives.
    pub fn det(&self) -> Result<Jet2> {
        let n = self.n;
        let g = self.values();
        let det = g.determinant();
        let Some(inv) = g.try_inverse() else {
            return Err(GeomError::Domain("singular matrix".into()));
        };
        let d = self.partials();
        let a: Vec<DMatrix<f64>> = d.iter().map(|dk| &inv * dk).collect();
        let tr: Vec<f64> = a.iter().map(|m| m.trace()).collect();
        let grad = tr.iter().map(|t| det * t).collect();
        let mut hess = vec![0.0; n * n];
        if self.order().level() >= 2 {
            for k in 0..n {
                for l in k..n {
                    let h = det
                        * (tr[k] * tr[l] - (&a[k] * &a[l]).trace()
                            + (&inv * self.second_partial(k, l)).trace());
                    hess[k * n + l] = h;
                    hess[l * n + k] = h;
                }
            }
        }
        let order = if self.entries.iter().all(Jet2::is_constant) {
            Order::Affine
        } else {
            self.order().min(Order::Second)
        };
        Ok(Jet2::new(det, grad, hess)?.with_order(order))
    }

    /// Fails unless the value matrix is symmetric positive definite.
    pub fn check_positive_definite(&self) -> Result<()> {
        let g = self.values();
        if g.clone().cholesky().is_none() {
            return Err(GeomError::Domain("metric is not positive definite".into()));
        }
        Ok(())
    }
}

/// A symmetric (0,2)-tensor field.
pub type MetricField = Field<JetMatrix>;
/// A (1,1)-tensor field.
pub type EndomorphismField = Field<JetMatrix>;

impl Field<JetMatrix> {
    /// The Euclidean metric on a chart of dimension `n`.
    pub fn flat(n: usize) -> MetricField {
        Field::new(n, move |_| Ok(JetMatrix::identity(n)))
    }

    /// Metric `Σ w_a θ_a²` built from weights and 1-forms.
    pub fn from_squares(dim: usize, terms: Vec<(crate::calculus::ScalarField, KFormField)>) -> Result<MetricField> {
        for (w, f) in &terms {
            if w.dim() != dim || f.dim() != dim || f.degree() != 1 {
                return Err(GeomError::Argument("metric terms need 1-forms on the chart".into()));
            }
        }
        Ok(Field::new(dim, move |p| {
            let mut evals = Vec::with_capacity(terms.len());
            for (w, f) in &terms {
                evals.push((w.eval(p)?, f.eval(p)?));
            }
            let refs: Vec<(Jet2, &FormJet)> = evals.iter().map(|(w, f)| (w.clone(), f)).collect();
            JetMatrix::sum_of_squares(dim, &refs)
        }))
    }
}

/// Connection and curvature of a metric at a point.
#[derive(Debug, Clone)]
pub struct CurvatureAtPoint {
    n: usize,
    christoffel: Vec<f64>,
    riemann: Vec<f64>,
    ricci: DMatrix<f64>,
    scalar: f64,
    metric: DMatrix<f64>,
}

impl CurvatureAtPoint {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Γ^k_{ij}`.
    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.christoffel[(k * n + i) * n + j]
    }

    /// `R^l_{ijk}`, the `∂_l` component of `R(∂_i, ∂_j)∂_k`.
    pub fn riemann(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n;
        self.riemann[((l * n + i) * n + j) * n + k]
    }

    pub fn ricci(&self) -> &DMatrix<f64> {
        &self.ricci
    }

    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    /// Largest entry of `Ric − λ g`.
    pub fn einstein_defect(&self, lambda: f64) -> f64 {
        (&self.ricci - &self.metric * lambda).amax()
    }

    /// Largest cyclic sum `R^l_{ijk} + R^l_{jki} + R^l_{kij}`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let s = self.riemann(l, i, j, k) + self.riemann(l, j, k, i) + self.riemann(l, k, i, j);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Curvature endomorphism `R(∂_i, ∂_j)` as a matrix (row `l`, column `k`).
    pub fn curvature_operator(&self, i: usize, j: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |l, k| self.riemann(l, i, j, k))
    }
}

fn christoffel_from(g: &JetMatrix) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>, Vec<f64>, Vec<f64>)> {
    g.check_positive_definite()?;
    let n = g.n();
    let ginv = g
        .values()
        .try_inverse()
        .ok_or_else(|| GeomError::Domain("singular metric".into()))?;
    let d = g.partials();
    // first kind: Γ_{l i j} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut first = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                first[(l * n + i) * n + j] =
                    0.5 * (d[i][(j, l)] + d[j][(i, l)] - d[l][(i, j)]);
            }
        }
    }
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[(k, l)] * first[(l * n + i) * n + j];
                }
                gamma[(k * n + i) * n + j] = s;
            }
        }
    }
    Ok((ginv, d, first, gamma))
}

/// Christoffel symbols only; needs first derivatives of the metric.
pub fn christoffel(g: &JetMatrix) -> Result<Vec<f64>> {
    if g.order().level() < 1 {
        return Err(GeomError::InsufficientOrder {
            needed: 1,
            have: g.order().level(),
        });
    }
    Ok(christoffel_from(g)?.3)
}

/// Largest component of `∇_k g_ij` for the Levi-Civita connection.
pub fn metric_compatibility_residual(g: &JetMatrix) -> Result<f64> {
    let n = g.n();
    let gamma = christoffel(g)?;
    let gv = g.values();
    let d = g.partials();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = d[k][(i, j)];
                for l in 0..n {
                    s -= gamma[(l * n + k) * n + i] * gv[(l, j)];
                    s -= gamma[(l * n + k) * n + j] * gv[(i, l)];
                }
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}

/// Full curvature data of a metric jet; needs second derivatives.
pub fn riemann_ricci_scalar(g: &JetMatrix) -> Result<CurvatureAtPoint> {
    let have = g.order().level();
    if have < 2 {
        return Err(GeomError::InsufficientOrder { needed: 2, have });
    }
    let n = g.n();
    let (ginv, d, first, gamma) = christoffel_from(g)?;
    let dginv: Vec<DMatrix<f64>> = d.iter().map(|dk| -(&ginv * dk * &ginv)).collect();
    // ∂_m Γ^k_{ij}
    let mut dgamma = vec![0.0; n * n * n * n];
    let second: Vec<DMatrix<f64>> = (0..n * n).map(|ml| g.second_partial(ml / n, ml % n)).collect();
    for m in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let dfirst = 0.5
                        * (second[m * n + i][(j, l)] + second[m * n + j][(i, l)]
                            - second[m * n + l][(i, j)]);
                    let f = first[(l * n + i) * n + j];
                    for k in 0..n {
                        dgamma[((m * n + k) * n + i) * n + j] +=
                            dginv[m][(k, l)] * f + ginv[(k, l)] * dfirst;
                    }
                }
            }
        }
    }
    let gm = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j];
    let dg = |m: usize, k: usize, i: usize, j: usize| dgamma[((m * n + k) * n + i) * n + j];
    let mut riemann = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = dg(i, l, j, k) - dg(j, l, i, k);
                    for m in 0..n {
                        r += gm(l, i, m) * gm(m, j, k) - gm(l, j, m) * gm(m, i, k);
                    }
                    riemann[((l * n + i) * n + j) * n + k] = r;
                }
            }
        }
    }
    let ricci = DMatrix::from_fn(n, n, |j, k| {
        (0..n).map(|i| riemann[((i * n + i) * n + j) * n + k]).sum::<f64>()
    });
    let scalar = (&ginv * &ricci).trace();
    Ok(CurvatureAtPoint {
        n,
        christoffel: gamma,
        riemann,
        ricci,
        scalar,
        metric: g.values(),
    })
}

/// Worst `‖Ric − λ g‖_∞` over the sample points.
pub fn einstein_residual(g: &MetricField, lambda: f64, pts: &[ChartPoint]) -> Result<Worst> {
    sup_over(pts, |p| Ok(riemann_ricci_scalar(&g.eval(p)?)?.einstein_defect(lambda)))
}

/// Lie derivative of the metric along `X` at a point, `(L_X g)_ij`.
pub fn lie_derivative_metric(g: &JetMatrix, x: &VectorJet) -> Result<DMatrix<f64>> {
    let n = g.n();
    if x.dim() != n {
        return Err(GeomError::Argument("vector and metric dimensions differ".into()));
    }
    for c in x.comps() {
        c.require(1)?;
    }
    if g.order().level() < 1 {
        return Err(GeomError::InsufficientOrder {
            needed: 1,
            have: g.order().level(),
        });
    }
    let gv = g.values();
    let d = g.partials();
    let xv = x.values();
    let dx = |k: usize, i: usize| x.comps()[k].grad()[i];
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for k in 0..n {
            s += xv[k] * d[k][(i, j)] + gv[(k, j)] * dx(k, i) + gv[(i, k)] * dx(k, j);
        }
        s
    }))
}

/// Worst `‖L_X g‖_∞`; zero exactly when `X` is Killing at the samples.
pub fn killing_residual(g: &MetricField, x: &crate::exterior::VectorField, pts: &[ChartPoint]) -> Result<Worst> {
    sup_over(pts, |p| Ok(lie_derivative_metric(&g.eval(p)?, &x.eval(p)?)?.amax()))
}

/// Worst `‖L_X g − c g‖_∞`; zero for a homothety with factor `c`.
pub fn homothety_residual(
    g: &MetricField,
    x: &crate::exterior::VectorField,
    c: f64,
    pts: &[ChartPoint],
) -> Result<Worst> {
    sup_over(pts, |p| {
        let gj = g.eval(p)?;
        Ok((lie_derivative_metric(&gj, &x.eval(p)?)? - gj.values() * c).amax())
    })
}

/// Largest `|J² + Id|` entry.
pub fn square_defect(j: &JetMatrix) -> f64 {
    let v = j.values();
    (&v * &v + DMatrix::identity(j.n(), j.n())).amax()
}

/// Largest component of the Nijenhuis tensor of `J` at a point.
pub fn nijenhuis(j: &JetMatrix) -> Result<f64> {
    let n = j.n();
    if square_defect(j) > 1e-8 {
        return Err(GeomError::Precondition(format!(
            "J^2 + Id has entry {:e}",
            square_defect(j)
        )));
    }
    if j.order().level() < 1 {
        return Err(GeomError::InsufficientOrder {
            needed: 1,
            have: j.order().level(),
        });
    }
    let v = j.values();
    // dj[m][(k, i)] = ∂_m J^k_i
    let dj = j.partials();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        for a in 0..n {
            for b in (a + 1)..n {
                let mut s = 0.0;
                for m in 0..n {
                    s += v[(m, a)] * dj[m][(k, b)] - v[(m, b)] * dj[m][(k, a)];
                    s -= v[(k, m)] * (dj[a][(m, b)] - dj[b][(m, a)]);
                }
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}

/// Worst Nijenhuis component over sample points.
pub fn nijenhuis_residual(j: &EndomorphismField, pts: &[ChartPoint]) -> Result<Worst> {
    sup_over(pts, |p| nijenhuis(&j.eval(p)?))
}

/// Tolerance on `J² = −Id` for structures built from a metric and a 2-form.
pub const ACS_TOLERANCE: f64 = 1e-8;

/// The endomorphism `J` with `g(J·, ·) = ω(·, ·)`, i.e. `J = −g⁻¹ω`.
pub fn acs_from_pair_jet(g: &JetMatrix, w: &FormJet) -> Result<JetMatrix> {
    let n = g.n();
    if w.degree() != 2 || w.dim() != n {
        return Err(GeomError::Argument("need a 2-form on the metric's chart".into()));
    }
    let ginv = g.inverse()?;
    let omega = JetMatrix::from_fn(n, |i, j| w.coeff(&[i, j]));
    Ok(ginv.mul(&omega).scale(-1.0))
}

/// Almost complex structure determined by a metric and a compatible 2-form.
pub fn acs_from_pair(g: &MetricField, w: &KFormField) -> Result<EndomorphismField> {
    if g.dim() != w.dim() || w.degree() != 2 {
        return Err(GeomError::Argument("need a 2-form on the metric's chart".into()));
    }
    let (g, w) = (g.clone(), w.clone());
    Ok(Field::new(g.dim(), move |p| {
        let gj = g.eval(p)?;
        let wj = w.eval(p)?;
        let j = match acs_from_pair_jet(&gj, &wj) {
            Ok(j) => j,
            Err(GeomError::Domain(reason)) => {
                return Err(GeomError::Incompatible {
                    point: p.coords().to_vec(),
                    reason,
                })
            }
            Err(e) => return Err(e),
        };
        let defect = square_defect(&j);
        let scale = j.values().amax().max(1.0);
        if defect > ACS_TOLERANCE * scale * scale {
            return Err(GeomError::Incompatible {
                point: p.coords().to_vec(),
                reason: format!("J^2 + Id has entry {defect:e}"),
            });
        }
        Ok(j)
    }))
}

/// Relative singular-value threshold used for rank decisions.
pub const RANK_THRESHOLD: f64 = 1e-8;

fn span_basis(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let m = DMatrix::from_fn(rows.len(), width, |r, c| rows[r][c]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Vec::new();
    }
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > RANK_THRESHOLD * smax)
        .map(|(i, _)| vt.row(i).iter().copied().collect())
        .collect()
}

/// Dimension of the bracket closure of the span of curvature operators
/// `R(∂_i, ∂_j)` at one point; a lower bound for the holonomy algebra.
pub fn holonomy_dim_estimate(g: &JetMatrix) -> Result<usize> {
    let curv = riemann_ricci_scalar(g)?;
    let n = curv.dim();
    let mut rows = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            rows.push(curv.curvature_operator(i, j).transpose().as_slice().to_vec());
        }
    }
    let mut basis = span_basis(&rows, n * n);
    loop {
        let mats: Vec<DMatrix<f64>> = basis
            .iter()
            .map(|r| DMatrix::from_row_slice(n, n, r))
            .collect();
        let mut rows = basis.clone();
        for a in 0..mats.len() {
            for b in (a + 1)..mats.len() {
                let c = &mats[a] * &mats[b] - &mats[b] * &mats[a];
                rows.push(c.transpose().as_slice().to_vec());
            }
        }
        let next = span_basis(&rows, n * n);
        if next.len() == basis.len() {
            return Ok(basis.len());
        }
        basis = next;
    }
}
