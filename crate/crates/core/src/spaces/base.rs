//! HyperKähler base data: flat space, Gibbons–Hawking charts, potentials and
//! distinguished vector fields.

use crate::calculus::{lift_coordinate, ChartPoint, Field, ScalarField};
use crate::curvature::{acs_from_pair, JetMatrix, MetricField};
use crate::error::{GeomError, Result};
use crate::exterior::{linear_vector_field, FormJet, KFormField, VectorField};
use crate::map::ChartMap;
use crate::sampling::{sup_over, SampleBox, Worst};

/// How a vector field acts on the hyperKähler triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KillingKind {
    /// `L_X σ_i = 0`.
    Triholomorphic,
    /// `L_X σ_1 = 0`, `L_X σ_2 = −2σ_3`, `L_X σ_3 = 2σ_2`.
    Permuting,
    /// `L_X σ_i = −2σ_i`.
    Homothetic,
}

impl KillingKind {
    pub fn name(self) -> &'static str {
        match self {
            KillingKind::Triholomorphic => "triholomorphic",
            KillingKind::Permuting => "permuting",
            KillingKind::Homothetic => "homothetic",
        }
    }
}

/// A hyperKähler manifold on one chart.
#[derive(Clone, Debug)]
pub struct HKData {
    pub label: String,
    pub coords: Vec<String>,
    pub g: MetricField,
    pub sigma: [KFormField; 3],
    /// Potentials with `dκ_i = σ_i`.
    pub kappa: Option<[KFormField; 3]>,
    pub killing: Option<(VectorField, KillingKind)>,
    /// Box on which the data is defined and checked.
    pub domain: SampleBox,
    /// Whether the metric is the Euclidean one.
    pub flat: bool,
}

/// Number of points used by constructor-time consistency checks.
const CONSTRUCTION_SAMPLES: usize = 16;
const CONSTRUCTION_SEED: u64 = 0x6b68_6261_7365;

impl HKData {
    pub fn new(
        label: &str,
        coords: Vec<String>,
        g: MetricField,
        sigma: [KFormField; 3],
        domain: SampleBox,
    ) -> Result<HKData> {
        let dim = g.dim();
        if dim == 0 || !dim.is_multiple_of(4) {
            return Err(GeomError::Argument(format!("hyperKähler dimension {dim} is not a multiple of 4")));
        }
        if coords.len() != dim || domain.dim() != dim {
            return Err(GeomError::Argument("coordinate names or domain do not match the chart".into()));
        }
        if sigma.iter().any(|s| s.dim() != dim || s.degree() != 2) {
            return Err(GeomError::Argument("the triple must consist of 2-forms on the chart".into()));
        }
        Ok(HKData {
            label: label.to_string(),
            coords,
            g,
            sigma,
            kappa: None,
            killing: None,
            domain,
            flat: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// Quaternionic dimension.
    pub fn n(&self) -> usize {
        self.dim() / 4
    }

    /// Points used by constructors to validate inputs.
    pub fn check_points(&self) -> Vec<ChartPoint> {
        self.domain.sample(CONSTRUCTION_SAMPLES, CONSTRUCTION_SEED)
    }

    /// Attach potentials; `dκ_i = σ_i` is checked on the domain.
    pub fn with_kappa(mut self, kappa: [KFormField; 3]) -> Result<HKData> {
        if kappa.iter().any(|k| k.dim() != self.dim() || k.degree() != 1) {
            return Err(GeomError::Argument("potentials must be 1-forms on the chart".into()));
        }
        let w = potential_residual(&self.sigma, &kappa, &self.check_points())?;
        if w.value > 1e-9 {
            return Err(GeomError::Construction(format!(
                "potentials do not satisfy dκ = σ (residual {:e} at {:?})",
                w.value, w.point
            )));
        }
        self.kappa = Some(kappa);
        Ok(self)
    }

    /// Attach a vector field after checking how it acts on the triple.
    pub fn with_killing(mut self, x: VectorField, kind: KillingKind) -> Result<HKData> {
        if x.dim() != self.dim() {
            return Err(GeomError::Argument("vector field does not live on the base chart".into()));
        }
        let w = kind_residual(&self.sigma, &x, kind, &self.check_points())?;
        if w.value > 1e-9 {
            return Err(GeomError::Construction(format!(
                "field is not {} (residual {:e} at {:?})",
                kind.name(),
                w.value,
                w.point
            )));
        }
        self.killing = Some((x, kind));
        Ok(self)
    }

    pub fn kappa(&self) -> Result<&[KFormField; 3]> {
        self.kappa
            .as_ref()
            .ok_or_else(|| GeomError::Argument(format!("base {} has no potentials", self.label)))
    }

    /// The complex structures `I_i` with `g(I_i·, ·) = σ_i`.
    pub fn complex_structures(&self) -> Result<[crate::curvature::EndomorphismField; 3]> {
        Ok([
            acs_from_pair(&self.g, &self.sigma[0])?,
            acs_from_pair(&self.g, &self.sigma[1])?,
            acs_from_pair(&self.g, &self.sigma[2])?,
        ])
    }

    /// Named residuals of the hyperKähler identities at the given points.
    pub fn verify(&self, pts: &[ChartPoint]) -> Result<Vec<(String, Worst)>> {
        let mut out = Vec::new();
        let closed = sup_over(pts, |p| {
            let mut m: f64 = 0.0;
            for s in &self.sigma {
                m = m.max(s.eval(p)?.d()?.max_abs());
            }
            Ok(m)
        })?;
        out.push(("closed".to_string(), closed));
        if self.dim() == 4 {
            out.push(("algebraic".to_string(), algebraic_residual(&self.sigma, pts)?));
        }
        let is = self.complex_structures()?;
        let compat = sup_over(pts, |p| {
            let g = self.g.eval(p)?.values();
            let mut m: f64 = 0.0;
            for i in &is {
                let j = i.eval(p)?.values();
                m = m.max((j.transpose() * &g * &j - &g).amax());
            }
            Ok(m)
        })?;
        out.push(("compatible".to_string(), compat));
        out.push(("quaternion".to_string(), quaternion_residual(&is, pts)?));
        if let Some(k) = &self.kappa {
            out.push(("potentials".to_string(), potential_residual(&self.sigma, k, pts)?));
        }
        if let Some((x, kind)) = &self.killing {
            out.push((format!("{}_action", kind.name()), kind_residual(&self.sigma, x, *kind, pts)?));
        }
        Ok(out)
    }
}

/// Worst `|σ_i ∧ σ_j − δ_ij σ_1 ∧ σ_1|` on a 4-dimensional chart.
pub fn algebraic_residual(sigma: &[KFormField; 3], pts: &[ChartPoint]) -> Result<Worst> {
    sup_over(pts, |p| {
        let s: Vec<FormJet> = sigma.iter().map(|f| f.eval(p)).collect::<Result<_>>()?;
        let top = s[0].wedge(&s[0])?;
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in i..3 {
                let w = s[i].wedge(&s[j])?;
                let r = if i == j { w.sub(&top)? } else { w };
                m = m.max(r.max_abs());
            }
        }
        Ok(m)
    })
}

/// Worst deviation from `I_1 I_2 = I_3` and `I_i² = −1`.
pub fn quaternion_residual(is: &[Field<JetMatrix>; 3], pts: &[ChartPoint]) -> Result<Worst> {
    sup_over(pts, |p| {
        let m: Vec<_> = is.iter().map(|i| i.eval(p).map(|j| j.values())).collect::<Result<_>>()?;
        let n = m[0].nrows();
        let id = nalgebra::DMatrix::<f64>::identity(n, n);
        let mut r = (&m[0] * &m[1] - &m[2]).amax();
        for j in &m {
            r = r.max((j * j + &id).amax());
        }
        Ok(r)
    })
}

/// Worst `|dκ_i − σ_i|`.
pub fn potential_residual(sigma: &[KFormField; 3], kappa: &[KFormField; 3], pts: &[ChartPoint]) -> Result<Worst> {
    sup_over(pts, |p| {
        let mut m: f64 = 0.0;
        for (s, k) in sigma.iter().zip(kappa) {
            m = m.max(k.eval(p)?.d()?.sub(&s.eval(p)?)?.max_abs());
        }
        Ok(m)
    })
}

/// Worst deviation of `L_X σ_i` from the pattern prescribed by `kind`.
pub fn kind_residual(sigma: &[KFormField; 3], x: &VectorField, kind: KillingKind, pts: &[ChartPoint]) -> Result<Worst> {
    let lie: Vec<KFormField> = sigma.iter().map(|s| s.lie(x)).collect::<Result<_>>()?;
    sup_over(pts, |p| {
        let l: Vec<FormJet> = lie.iter().map(|f| f.eval(p)).collect::<Result<_>>()?;
        let s: Vec<FormJet> = sigma.iter().map(|f| f.eval(p)).collect::<Result<_>>()?;
        let r = match kind {
            KillingKind::Triholomorphic => [l[0].clone(), l[1].clone(), l[2].clone()],
            KillingKind::Permuting => [
                l[0].clone(),
                l[1].add(&s[2].scale_f64(2.0))?,
                l[2].sub(&s[1].scale_f64(2.0))?,
            ],
            KillingKind::Homothetic => [
                l[0].add(&s[0].scale_f64(2.0))?,
                l[1].add(&s[1].scale_f64(2.0))?,
                l[2].add(&s[2].scale_f64(2.0))?,
            ],
        };
        Ok(r.iter().map(FormJet::max_abs).fold(0.0, f64::max))
    })
}

/// Sign of the top coefficient of `σ_1^{2n}`: `+1` when the triple is
/// self-dual for the coordinate orientation.
pub fn orientation_sign(sigma1: &FormJet) -> Result<f64> {
    let dim = sigma1.dim();
    let mut acc = sigma1.clone();
    for _ in 1..(dim / 2) {
        acc = acc.wedge(sigma1)?;
    }
    let top = acc.coeff(&(0..dim).collect::<Vec<_>>()).value();
    if top == 0.0 {
        return Err(GeomError::Domain("σ_1 is degenerate".into()));
    }
    Ok(top.signum())
}

/// How far a 2-form on the base is from the `sp(n)` summand.
///
/// On 4-dimensional bases this is `|ε∗γ + γ|` with `ε` the orientation sign
/// of the triple; in higher dimension it is the failure of `γ` to be of type
/// (1,1) for all three complex structures.
pub fn spn_residual(base: &HKData, gamma: &KFormField, pts: &[ChartPoint]) -> Result<Worst> {
    if gamma.dim() != base.dim() || gamma.degree() != 2 {
        return Err(GeomError::Argument("need a 2-form on the base".into()));
    }
    if base.dim() == 4 {
        let star = gamma.hodge(&base.g)?;
        sup_over(pts, |p| {
            let eps = orientation_sign(&base.sigma[0].eval(p)?)?;
            Ok(star.eval(p)?.scale_f64(eps).add(&gamma.eval(p)?)?.max_abs())
        })
    } else {
        let is = base.complex_structures()?;
        sup_over(pts, |p| {
            let gj = gamma.eval(p)?;
            let n = base.dim();
            let m = nalgebra::DMatrix::from_fn(n, n, |i, j| gj.coeff(&[i, j]).value());
            let mut r: f64 = 0.0;
            for i in &is {
                let jv = i.eval(p)?.values();
                r = r.max((jv.transpose() * &m * &jv - &m).amax());
            }
            Ok(r)
        })
    }
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

/// `Σ_blocks (dx_{a b} + dx_{c d})` for the index pattern of one σ.
fn block_form(n: usize, pairs: [(usize, usize); 2]) -> Result<KFormField> {
    let dim = 4 * n;
    let mut terms = Vec::new();
    for blk in 0..n {
        for (a, b) in pairs {
            let (i, j) = (4 * blk + a, 4 * blk + b);
            let (i, j, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
            terms.push((vec![i, j], ScalarField::constant(s, dim)));
        }
    }
    KFormField::from_coeffs(dim, 2, terms)
}

/// `σ_1 = dx_12 + dx_34`, `σ_2 = dx_13 + dx_42`, `σ_3 = dx_14 + dx_23`,
/// repeated on each block of four coordinates.
pub fn standard_triple(n: usize) -> Result<[KFormField; 3]> {
    Ok([
        block_form(n, [(0, 1), (2, 3)])?,
        block_form(n, [(0, 2), (3, 1)])?,
        block_form(n, [(0, 3), (1, 2)])?,
    ])
}

/// `Σ_blocks (x_a dx_b + x_c dx_d)`.
fn block_potential(n: usize, pairs: [(usize, usize); 2]) -> Result<KFormField> {
    let dim = 4 * n;
    let mut terms = Vec::new();
    for blk in 0..n {
        for (a, b) in pairs {
            terms.push((vec![4 * blk + b], lift_coordinate(4 * blk + a, dim)?));
        }
    }
    KFormField::from_coeffs(dim, 1, terms)
}

/// `κ_1 = x_1dx_2 + x_3dx_4`, `κ_2 = x_1dx_3 + x_4dx_2`, `κ_3 = x_1dx_4 + x_2dx_3`.
pub fn default_potentials(n: usize) -> Result<[KFormField; 3]> {
    Ok([
        block_potential(n, [(0, 1), (2, 3)])?,
        block_potential(n, [(0, 2), (3, 1)])?,
        block_potential(n, [(0, 3), (1, 2)])?,
    ])
}

/// The Euler field `Σ x_i ∂_i`.
pub fn euler_field(dim: usize) -> Result<VectorField> {
    let a = (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    linear_vector_field(a, vec![0.0; dim])
}

/// `κ_i = ½ E ⌟ σ_i` with `E` the Euler field; invariant under every linear
/// unitary symmetry.
pub fn radial_potentials(n: usize) -> Result<[KFormField; 3]> {
    let e = euler_field(4 * n)?;
    let s = standard_triple(n)?;
    Ok([
        s[0].interior(&e)?.scale_f64(0.5),
        s[1].interior(&e)?.scale_f64(0.5),
        s[2].interior(&e)?.scale_f64(0.5),
    ])
}

/// Potentials adapted to a permuting field: `κ_2 = ½ X⌟σ_3`, `κ_3 = −½ X⌟σ_2`.
pub fn permuting_potentials(sigma: &[KFormField; 3], kappa1: &KFormField, x: &VectorField) -> Result<[KFormField; 3]> {
    Ok([
        kappa1.clone(),
        sigma[2].interior(x)?.scale_f64(0.5),
        sigma[1].interior(x)?.scale_f64(-0.5),
    ])
}

fn block_linear_field(n: usize, block: [[f64; 4]; 4]) -> Result<VectorField> {
    let dim = 4 * n;
    let mut a = vec![vec![0.0; dim]; dim];
    for blk in 0..n {
        for i in 0..4 {
            for j in 0..4 {
                a[4 * blk + i][4 * blk + j] = block[i][j];
            }
        }
    }
    linear_vector_field(a, vec![0.0; dim])
}

/// `U = −Σ x_i ∂_i`, homothetic.
pub fn radial_field(n: usize) -> Result<VectorField> {
    block_linear_field(n, [[-1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [0.0, 0.0, 0.0, -1.0]])
}

/// `V = −x_2∂_1 + x_1∂_2 − x_4∂_3 + x_3∂_4`, permuting.
pub fn rotation_v(n: usize) -> Result<VectorField> {
    block_linear_field(n, [[0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 0.0]])
}

/// `W = −x_2∂_1 + x_1∂_2 + x_4∂_3 − x_3∂_4`, triholomorphic.
pub fn rotation_w(n: usize) -> Result<VectorField> {
    block_linear_field(n, [[0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, -1.0, 0.0]])
}

/// `X = −2x_4∂_3 + 2x_3∂_4`, permuting; rotation of the `(x_3, x_4)` plane.
pub fn half_plane_rotation() -> Result<VectorField> {
    block_linear_field(1, [[0.0; 4], [0.0; 4], [0.0, 0.0, 0.0, -2.0], [0.0, 0.0, 2.0, 0.0]])
}

/// Flat `ℝ^{4n}` (or a torus chart) with the standard triple and default
/// potentials.
pub fn flat_base(n: usize, torus: bool) -> Result<HKData> {
    if n == 0 {
        return Err(GeomError::Argument("n must be at least 1".into()));
    }
    let dim = 4 * n;
    let label = if torus { format!("T^{dim}") } else { format!("R^{dim}") };
    let mut base = HKData::new(
        &label,
        names("x", dim),
        MetricField::flat(dim),
        standard_triple(n)?,
        SampleBox::cube(dim, -1.0, 1.0),
    )?;
    base.flat = true;
    base.with_kappa(default_potentials(n)?)
}

/// Flat `ℝ^{4n}` carrying `κ_i = ½E⌟σ_i` and a Killing field of the given kind.
pub fn flat_base_with_field(n: usize, x: VectorField, kind: KillingKind) -> Result<HKData> {
    flat_base(n, false)?.with_kappa(radial_potentials(n)?)?.with_killing(x, kind)
}

const GH_TOLERANCE_LAPLACE: f64 = 1e-8;
const GH_TOLERANCE_CONNECTION: f64 = 1e-10;

/// Gibbons–Hawking data on the chart `(u_1, u_2, u_3, y)`.
///
/// `v` lives on `ℝ³`, `theta` on the 4-chart. Harmonicity of `V` and the
/// monopole equation `dθ = −∗dV` are checked on `domain`.
pub fn gibbons_hawking(v: &ScalarField, theta: &KFormField, domain: SampleBox) -> Result<HKData> {
    if v.dim() != 3 || theta.dim() != 4 || theta.degree() != 1 || domain.dim() != 4 {
        return Err(GeomError::Argument(
            "need V on R^3, a 1-form on (u1, u2, u3, y) and a 4-dimensional domain".into(),
        ));
    }
    let pr = ChartMap::projection(4, 0, 3)?;
    let v4 = pr.pullback_scalar(v)?;
    let star_dv = pr.pullback_form(&KFormField::scalar(v).d()?.hodge(&MetricField::flat(3))?)?;
    let dtheta = theta.d()?;
    for p in domain.sample(CONSTRUCTION_SAMPLES, CONSTRUCTION_SEED) {
        let vj = v4.eval(&p)?;
        if vj.value() <= 0.0 {
            return Err(GeomError::Construction(format!("V = {} is not positive at {:?}", vj.value(), p.coords())));
        }
        vj.require(2)?;
        let lap: f64 = (0..3).map(|i| vj.hess(i, i)).sum();
        if lap.abs() > GH_TOLERANCE_LAPLACE {
            return Err(GeomError::Construction(format!("V is not harmonic: ΔV = {lap} at {:?}", p.coords())));
        }
        let r = dtheta.eval(&p)?.add(&star_dv.eval(&p)?)?.max_abs();
        if r > GH_TOLERANCE_CONNECTION {
            return Err(GeomError::Construction(format!(
                "dθ ≠ −∗dV: residual {r:e} at {:?}",
                p.coords()
            )));
        }
    }
    let du = |i: usize| KFormField::basis(4, &[i]);
    let vdu = |a: usize, b: usize| -> Result<KFormField> { KFormField::basis(4, &[a, b])?.scale(&v4) };
    let sigma = [
        theta.wedge(&du(0)?)?.add(&vdu(1, 2)?)?,
        theta.wedge(&du(1)?)?.sub(&vdu(0, 2)?)?,
        theta.wedge(&du(2)?)?.add(&vdu(0, 1)?)?,
    ];
    let inv_v = v4.apply(|j| j.try_recip());
    let g = MetricField::from_squares(
        4,
        vec![
            (inv_v, theta.clone()),
            (v4.clone(), du(0)?),
            (v4.clone(), du(1)?),
            (v4.clone(), du(2)?),
        ],
    )?;
    HKData::new(
        "Gibbons-Hawking",
        vec!["u1".into(), "u2".into(), "u3".into(), "y".into()],
        g,
        sigma,
        domain,
    )
}

/// Gibbons–Hawking with `V = u_1`, `θ = dy + u_3 du_2` on `u_1 ∈ [0.5, 2]`,
/// with explicit potentials and the homothetic field
/// `X = −⅔(2y∂_y + u_1∂_1 + u_2∂_2 + u_3∂_3)`.
pub fn gh_linear_example() -> Result<HKData> {
    let v = lift_coordinate(0, 3)?;
    let u = |i: usize| lift_coordinate(i, 4);
    let theta = KFormField::from_coeffs(4, 1, vec![(vec![3], ScalarField::constant(1.0, 4)), (vec![1], u(2)?)])?;
    let domain = SampleBox::new(vec![0.5, -1.0, -1.0, -1.0], vec![2.0, 1.0, 1.0, 1.0])?;
    let base = gibbons_hawking(&v, &theta, domain)?;
    let coeff = |f: fn(&[crate::calculus::Jet2]) -> crate::calculus::Jet2| -> ScalarField {
        Field::new(4, move |p: &ChartPoint| Ok(f(&p.lifts())))
    };
    let kappa1 = KFormField::from_coeffs(
        4,
        1,
        vec![(vec![3], coeff(|x| -&x[0])), (vec![1], coeff(|x| -(&x[0] * &x[2])))],
    )?;
    let kappa2 = KFormField::from_coeffs(
        4,
        1,
        vec![(vec![3], coeff(|x| -&x[1])), (vec![2], coeff(|x| x[0].square() * -0.5))],
    )?;
    let kappa3 = KFormField::from_coeffs(
        4,
        1,
        vec![
            (vec![3], coeff(|x| -&x[2])),
            (vec![1], coeff(|x| (x[0].square() - x[2].square()) * 0.5)),
        ],
    )?;
    let c = -2.0 / 3.0;
    let x = linear_vector_field(
        vec![
            vec![c, 0.0, 0.0, 0.0],
            vec![0.0, c, 0.0, 0.0],
            vec![0.0, 0.0, c, 0.0],
            vec![0.0, 0.0, 0.0, 2.0 * c],
        ],
        vec![0.0; 4],
    )?;
    base.with_kappa([kappa1, kappa2, kappa3])?
        .with_killing(x, KillingKind::Homothetic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{einstein_residual, homothety_residual, killing_residual, riemann_ricci_scalar};

    fn pts(b: &HKData, k: usize) -> Vec<ChartPoint> {
        b.domain.sample(k, 11)
    }

    #[test]
    fn standard_triple_coefficients() {
        let s = standard_triple(1).unwrap();
        let p = ChartPoint::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let s2 = s[1].eval(&p).unwrap();
        assert_eq!(s2.coeff(&[0, 2]).value(), 1.0);
        assert_eq!(s2.coeff(&[1, 3]).value(), -1.0);
        let top = s[0].eval(&p).unwrap().wedge(&s[0].eval(&p).unwrap()).unwrap();
        assert_eq!(top.coeff(&[0, 1, 2, 3]).value(), 2.0);
    }

    #[test]
    fn flat_bases_satisfy_all_identities() {
        for n in 1..=2 {
            let b = flat_base(n, n == 1).unwrap();
            for (name, w) in b.verify(&pts(&b, 8)).unwrap() {
                assert!(w.value < 1e-12, "{name}: {}", w.value);
            }
        }
    }

    #[test]
    fn standard_complex_structure_maps_e1_to_e2() {
        let b = flat_base(1, false).unwrap();
        let i1 = b.complex_structures().unwrap()[0].eval(&pts(&b, 1)[0]).unwrap().values();
        assert_eq!(i1[(1, 0)], 1.0);
        assert_eq!(i1[(3, 2)], 1.0);
    }

    #[test]
    fn field_kinds_on_flat_space() {
        let ok = [
            (radial_field(1).unwrap(), KillingKind::Homothetic),
            (rotation_v(1).unwrap(), KillingKind::Permuting),
            (rotation_w(1).unwrap(), KillingKind::Triholomorphic),
            (half_plane_rotation().unwrap(), KillingKind::Permuting),
        ];
        for (x, kind) in ok {
            assert!(flat_base_with_field(1, x, kind).is_ok(), "{kind:?}");
        }
        let err = flat_base_with_field(1, radial_field(1).unwrap(), KillingKind::Triholomorphic);
        assert!(matches!(err, Err(GeomError::Construction(_))));
    }

    #[test]
    fn radial_field_is_a_homothety_with_factor_minus_two() {
        let b = flat_base(1, false).unwrap();
        let p = pts(&b, 5);
        let u = radial_field(1).unwrap();
        assert!(homothety_residual(&b.g, &u, -2.0, &p).unwrap().value < 1e-14);
        assert!((killing_residual(&b.g, &u, &p).unwrap().value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn permuting_potentials_match_hand_computation() {
        let s = standard_triple(1).unwrap();
        let k = permuting_potentials(&s, &radial_potentials(1).unwrap()[0], &half_plane_rotation().unwrap()).unwrap();
        let p = ChartPoint::new(vec![0.2, -0.3, 0.5, 0.4]).unwrap();
        let k2 = k[1].eval(&p).unwrap();
        let k3 = k[2].eval(&p).unwrap();
        // κ_2 = −x_3 dx_1 + x_4 dx_2, κ_3 = −x_4 dx_1 − x_3 dx_2
        assert!((k2.coeff(&[0]).value() + 0.5).abs() < 1e-15);
        assert!((k2.coeff(&[1]).value() - 0.4).abs() < 1e-15);
        assert!((k3.coeff(&[0]).value() + 0.4).abs() < 1e-15);
        assert!((k3.coeff(&[1]).value() + 0.5).abs() < 1e-15);
        assert!(potential_residual(&s, &k, &[p]).unwrap().value < 1e-15);
    }

    #[test]
    fn gibbons_hawking_linear_potential() {
        let b = gh_linear_example().unwrap();
        let p = pts(&b, 10);
        for (name, w) in b.verify(&p).unwrap() {
            assert!(w.value < 1e-10, "{name}: {}", w.value);
        }
        assert!(einstein_residual(&b.g, 0.0, &p).unwrap().value < 1e-8);
        let (x, _) = b.killing.clone().unwrap();
        assert!(homothety_residual(&b.g, &x, -2.0, &p).unwrap().value < 1e-12);
        // anti-self-dual for the coordinate orientation
        assert_eq!(orientation_sign(&b.sigma[0].eval(&p[0]).unwrap()).unwrap(), -1.0);
    }

    #[test]
    fn gibbons_hawking_with_constant_potential_is_flat() {
        let v = ScalarField::constant(1.0, 3);
        let theta = KFormField::basis(4, &[3]).unwrap();
        let b = gibbons_hawking(&v, &theta, SampleBox::cube(4, -1.0, 1.0)).unwrap();
        let c = riemann_ricci_scalar(&b.g.eval(&pts(&b, 1)[0]).unwrap()).unwrap();
        for l in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        assert_eq!(c.riemann(l, i, j, k), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn gibbons_hawking_rejects_bad_input() {
        let theta = KFormField::from_coeffs(
            4,
            1,
            vec![(vec![3], ScalarField::constant(1.0, 4)), (vec![1], lift_coordinate(2, 4).unwrap())],
        )
        .unwrap();
        let dom = SampleBox::new(vec![0.5, -1.0, -1.0, -1.0], vec![2.0, 1.0, 1.0, 1.0]).unwrap();
        let sq = lift_coordinate(0, 3).unwrap().apply(|j| Ok(j.square()));
        assert!(matches!(gibbons_hawking(&sq, &theta, dom.clone()), Err(GeomError::Construction(_))));
        let wrong = KFormField::basis(4, &[3]).unwrap();
        assert!(matches!(
            gibbons_hawking(&lift_coordinate(0, 3).unwrap(), &wrong, dom),
            Err(GeomError::Construction(_))
        ));
    }

    #[test]
    fn spn_membership_on_four_manifolds() {
        let b = flat_base(1, true).unwrap();
        let p = pts(&b, 4);
        let asd = KFormField::from_coeffs(
            4,
            2,
            vec![(vec![0, 1], ScalarField::constant(1.0, 4)), (vec![2, 3], ScalarField::constant(-1.0, 4))],
        )
        .unwrap();
        assert!(spn_residual(&b, &asd, &p).unwrap().value < 1e-15);
        assert!(spn_residual(&b, &b.sigma[1], &p).unwrap().value > 1.0);
    }

    #[test]
    fn spn_membership_in_dimension_eight() {
        let b = flat_base(2, false).unwrap();
        let p = pts(&b, 2);
        let mixed = KFormField::from_coeffs(
            8,
            2,
            vec![(vec![0, 4], ScalarField::constant(1.0, 8)), (vec![1, 5], ScalarField::constant(1.0, 8)),
                 (vec![2, 6], ScalarField::constant(1.0, 8)), (vec![3, 7], ScalarField::constant(1.0, 8))],
        )
        .unwrap();
        assert!(spn_residual(&b, &mixed, &p).unwrap().value < 1e-15);
        assert!(spn_residual(&b, &b.sigma[0], &p).unwrap().value > 1.0);
    }
}
