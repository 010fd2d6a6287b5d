//! Differential forms and vector fields on a chart.
//!
//! Forms are stored sparsely: a k-form is a map from strictly increasing
//! index tuples, encoded as bitmasks, to jet coefficients. The exterior
//! derivative reads the jet gradients, so `d` is exact and consumes one
//! derivative level of the coefficients.

use std::collections::BTreeMap;
use std::fmt;

use crate::calculus::{ChartPoint, Field, Finite, Jet2, Order, ScalarField};
use crate::curvature::{MetricField, MetricJet};
use crate::error::{GeomError, Result};

/// Largest chart dimension supported by the bitmask encoding.
pub const MAX_DIM: usize = 31;

fn mask_of(indices: &[usize]) -> u32 {
    indices.iter().fold(0, |m, i| m | (1 << i))
}

fn indices_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Sign of the permutation sorting `a ++ b` when both are sorted and disjoint.
fn merge_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0;
    for j in indices_of(b) {
        inversions += (a >> (j + 1)).count_ones();
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sort an index list, returning its sign, or `None` on a repeated index.
fn sort_with_sign(indices: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = indices.to_vec();
    let mut sign = 1.0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, sign))
    }
}

/// Determinant of a small square matrix of jets by cofactor expansion.
pub(crate) fn jet_det(m: &[Vec<Jet2>], dim: usize) -> Jet2 {
    let k = m.len();
    match k {
        0 => Jet2::constant(1.0, dim),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let mut acc = Jet2::zero(dim);
            for c in 0..k {
                if m[0][c].is_constant() && m[0][c].value() == 0.0 {
                    continue;
                }
                let minor: Vec<Vec<Jet2>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != c)
                            .map(|(_, x)| x.clone())
                            .collect()
                    })
                    .collect();
                let term = &m[0][c] * &jet_det(&minor, dim);
                acc = if c % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// Coefficient data of a k-form at one point.
#[derive(Clone, PartialEq)]
pub struct FormJet {
    dim: usize,
    degree: usize,
    terms: BTreeMap<u32, Jet2>,
}

impl fmt::Debug for FormJet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (k, v) in &self.terms {
            m.entry(&indices_of(*k), &v.value());
        }
        m.finish()
    }
}

impl Finite for FormJet {
    fn all_finite(&self) -> bool {
        self.terms.values().all(Jet2::is_finite)
    }
}

impl FormJet {
    pub fn zero(dim: usize, degree: usize) -> FormJet {
        FormJet {
            dim,
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// A 0-form.
    pub fn scalar(f: Jet2) -> FormJet {
        let mut z = FormJet::zero(f.dim(), 0);
        z.terms.insert(0, f);
        z
    }

    /// Build from index tuples in any order; signs from reordering are applied
    /// and tuples with repeated indices are dropped.
    pub fn from_terms(dim: usize, degree: usize, terms: Vec<(Vec<usize>, Jet2)>) -> Result<FormJet> {
        if dim > MAX_DIM {
            return Err(GeomError::Argument(format!("chart dimension {dim} is too large")));
        }
        let mut form = FormJet::zero(dim, degree);
        for (idx, c) in terms {
            if idx.len() != degree || idx.iter().any(|i| *i >= dim) || c.dim() != dim {
                return Err(GeomError::Argument(format!(
                    "term {idx:?} does not fit a {degree}-form on a {dim}-dimensional chart"
                )));
            }
            if let Some((sorted, sign)) = sort_with_sign(&idx) {
                form.add_term(mask_of(&sorted), c * sign);
            }
        }
        Ok(form)
    }

    /// `dx_{i_1} ∧ … ∧ dx_{i_k}` with constant coefficient 1.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<FormJet> {
        FormJet::from_terms(dim, indices.len(), vec![(indices.to_vec(), Jet2::constant(1.0, dim))])
    }

    fn add_term(&mut self, mask: u32, c: Jet2) {
        match self.terms.get_mut(&mask) {
            Some(existing) => *existing = &*existing + &c,
            None => {
                self.terms.insert(mask, c);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient on `dx_{indices}`, with the sign of the reordering.
    pub fn coeff(&self, indices: &[usize]) -> Jet2 {
        match sort_with_sign(indices) {
            Some((sorted, sign)) if sorted.len() == self.degree => self
                .terms
                .get(&mask_of(&sorted))
                .map(|c| c * sign)
                .unwrap_or_else(|| Jet2::zero(self.dim)),
            _ => Jet2::zero(self.dim),
        }
    }

    /// Stored terms as (sorted indices, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, &Jet2)> {
        self.terms.iter().map(|(m, c)| (indices_of(*m), c))
    }

    /// Weakest derivative order among the coefficients.
    pub fn order(&self) -> Order {
        self.terms.values().map(Jet2::order).min().unwrap_or(Order::Affine)
    }

    /// Largest absolute coefficient value.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.value().abs()))
    }

    fn check_same(&self, other: &FormJet) -> Result<()> {
        if self.dim != other.dim || self.degree != other.degree {
            return Err(GeomError::Argument(format!(
                "cannot combine a {}-form on dim {} with a {}-form on dim {}",
                self.degree, self.dim, other.degree, other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &FormJet) -> Result<FormJet> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &FormJet) -> Result<FormJet> {
        self.add(&other.scale_f64(-1.0))
    }

    pub fn scale_f64(&self, s: f64) -> FormJet {
        FormJet {
            dim: self.dim,
            degree: self.degree,
            terms: self.terms.iter().map(|(m, c)| (*m, c * s)).collect(),
        }
    }

    pub fn scale(&self, f: &Jet2) -> FormJet {
        FormJet {
            dim: self.dim,
            degree: self.degree,
            terms: self.terms.iter().map(|(m, c)| (*m, c * f)).collect(),
        }
    }

    pub fn wedge(&self, other: &FormJet) -> Result<FormJet> {
        if self.dim != other.dim {
            return Err(GeomError::Argument(format!(
                "wedge of forms on charts of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        let mut out = FormJet::zero(self.dim, self.degree + other.degree);
        if out.degree > self.dim {
            return Ok(out);
        }
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                out.add_term(a | b, ca * cb * merge_sign(*a, *b));
            }
        }
        Ok(out)
    }

    /// Exterior derivative.
    pub fn d(&self) -> Result<FormJet> {
        let mut out = FormJet::zero(self.dim, self.degree + 1);
        for (m, c) in &self.terms {
            if c.is_constant() {
                continue;
            }
            c.require(1)?;
            for k in 0..self.dim {
                let bit = 1u32 << k;
                if m & bit != 0 || c.grad()[k] == 0.0 && c.order() == Order::Affine {
                    continue;
                }
                let sign = if (m & (bit - 1)).count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                out.add_term(m | bit, c.partial(k)? * sign);
            }
        }
        Ok(out)
    }

    /// Contraction with a vector in the first slot.
    pub fn interior(&self, x: &VectorJet) -> Result<FormJet> {
        if self.degree == 0 {
            return Err(GeomError::Argument("interior product of a 0-form".into()));
        }
        if x.dim() != self.dim {
            return Err(GeomError::Argument("vector and form dimensions differ".into()));
        }
        let mut out = FormJet::zero(self.dim, self.degree - 1);
        for (m, c) in &self.terms {
            for (pos, i) in indices_of(*m).into_iter().enumerate() {
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                out.add_term(m & !(1 << i), c * &x.comps[i] * sign);
            }
        }
        Ok(out)
    }

    /// Value of the form on `degree` tangent vectors.
    pub fn evaluate_on(&self, vectors: &[Vec<f64>]) -> Result<f64> {
        if vectors.len() != self.degree || vectors.iter().any(|v| v.len() != self.dim) {
            return Err(GeomError::Argument("wrong number or size of vectors".into()));
        }
        let k = self.degree;
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let idx = indices_of(*m);
            let mat = nalgebra::DMatrix::from_fn(k, k, |r, s| vectors[s][idx[r]]);
            total += c.value() * mat.determinant();
        }
        Ok(total)
    }

    /// Hodge star for the metric `g`, oriented by the coordinate order.
    pub fn hodge(&self, g: &MetricJet) -> Result<FormJet> {
        let n = self.dim;
        if g.dim() != n {
            return Err(GeomError::Argument("metric and form dimensions differ".into()));
        }
        let ginv = g.inverse()?;
        let vol = g.det()?.try_sqrt()?;
        let k = self.degree;
        let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        let mut out = FormJet::zero(n, n - k);
        let mut raised: BTreeMap<u32, Jet2> = BTreeMap::new();
        for i_mask in subsets(n, k) {
            let i_idx = indices_of(i_mask);
            let mut acc = Jet2::zero(n);
            for (kk, c) in &self.terms {
                let k_idx = indices_of(*kk);
                let sub: Vec<Vec<Jet2>> = i_idx
                    .iter()
                    .map(|r| k_idx.iter().map(|s| ginv.get(*r, *s).clone()).collect())
                    .collect();
                acc = acc + c * &jet_det(&sub, n);
            }
            raised.insert(i_mask, acc);
        }
        for (i_mask, a_up) in raised {
            let j_mask = full & !i_mask;
            let sign = merge_sign(i_mask, j_mask);
            out.add_term(j_mask, &vol * &a_up * sign);
        }
        Ok(out)
    }
}

/// All bitmasks of `k`-element subsets of `0..n`.
fn subsets(n: usize, k: usize) -> Vec<u32> {
    (0u32..(1u32 << n)).filter(|m| m.count_ones() as usize == k).collect()
}

/// Components of a vector field at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorJet {
    comps: Vec<Jet2>,
}

impl Finite for VectorJet {
    fn all_finite(&self) -> bool {
        self.comps.iter().all(Jet2::is_finite)
    }
}

impl VectorJet {
    pub fn new(comps: Vec<Jet2>) -> Result<VectorJet> {
        let n = comps.len();
        if comps.iter().any(|c| c.dim() != n) {
            return Err(GeomError::Argument(
                "vector components must live on a chart of the same dimension".into(),
            ));
        }
        Ok(VectorJet { comps })
    }

    pub fn zero(dim: usize) -> VectorJet {
        VectorJet {
            comps: vec![Jet2::zero(dim); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[Jet2] {
        &self.comps
    }

    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(Jet2::value).collect()
    }

    pub fn add(&self, other: &VectorJet) -> VectorJet {
        VectorJet {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, f: &Jet2) -> VectorJet {
        VectorJet {
            comps: self.comps.iter().map(|c| c * f).collect(),
        }
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Jet2) -> Result<Jet2> {
        let mut acc = Jet2::zero(self.dim());
        for (k, c) in self.comps.iter().enumerate() {
            if f.grad()[k] == 0.0 && f.order() == Order::Affine {
                continue;
            }
            acc = acc + c * &f.partial(k)?;
        }
        Ok(acc)
    }

    /// Lie bracket `[X, Y]` at the point.
    pub fn bracket(&self, other: &VectorJet) -> Result<VectorJet> {
        let mut comps = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            comps.push(self.apply(&other.comps[k])? - other.apply(&self.comps[k])?);
        }
        Ok(VectorJet { comps })
    }
}

/// A degree-k differential form on a chart.
#[derive(Clone, Debug)]
pub struct KFormField {
    degree: usize,
    field: Field<FormJet>,
}

/// A vector field on a chart.
pub type VectorField = Field<VectorJet>;

impl KFormField {
    /// Wrap a pointwise coefficient map; evaluations are checked for degree.
    pub fn new<F>(dim: usize, degree: usize, f: F) -> Result<KFormField>
    where
        F: Fn(&ChartPoint) -> Result<FormJet> + Send + Sync + 'static,
    {
        if dim > MAX_DIM {
            return Err(GeomError::Argument(format!("chart dimension {dim} is too large")));
        }
        Ok(KFormField {
            degree,
            field: Field::new(dim, move |p| {
                let v = f(p)?;
                if v.degree() != degree || v.dim() != p.dim() {
                    return Err(GeomError::Argument(format!(
                        "form evaluation returned degree {} instead of {degree}",
                        v.degree()
                    )));
                }
                Ok(v)
            }),
        })
    }

    pub fn zero(dim: usize, degree: usize) -> KFormField {
        KFormField {
            degree,
            field: Field::new(dim, move |_| Ok(FormJet::zero(dim, degree))),
        }
    }

    /// Constant-coefficient basis form `dx_{i_1} ∧ … ∧ dx_{i_k}`.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<KFormField> {
        FormJet::basis(dim, indices)?;
        let idx = indices.to_vec();
        KFormField::new(dim, idx.len(), move |_| FormJet::basis(dim, &idx))
    }

    /// The 0-form given by a scalar field.
    pub fn scalar(f: &ScalarField) -> KFormField {
        let f = f.clone();
        KFormField {
            degree: 0,
            field: Field::new(f.dim(), move |p| Ok(FormJet::scalar(f.eval(p)?))),
        }
    }

    /// Sum of scalar fields times basis forms.
    pub fn from_coeffs(dim: usize, degree: usize, terms: Vec<(Vec<usize>, ScalarField)>) -> Result<KFormField> {
        for (idx, f) in &terms {
            if idx.len() != degree || f.dim() != dim {
                return Err(GeomError::Argument(format!(
                    "term {idx:?} does not fit a {degree}-form on dimension {dim}"
                )));
            }
        }
        KFormField::new(dim, degree, move |p| {
            let mut ts = Vec::with_capacity(terms.len());
            for (idx, f) in &terms {
                ts.push((idx.clone(), f.eval(p)?));
            }
            FormJet::from_terms(p.dim(), degree, ts)
        })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eval(&self, p: &ChartPoint) -> Result<FormJet> {
        self.field.eval(p)
    }

    fn derive<F>(&self, degree: usize, f: F) -> KFormField
    where
        F: Fn(&ChartPoint) -> Result<FormJet> + Send + Sync + 'static,
    {
        KFormField {
            degree,
            field: Field::new(self.dim(), f),
        }
    }

    fn check_pair(&self, other: &KFormField, same_degree: bool) -> Result<()> {
        if self.dim() != other.dim() || (same_degree && self.degree != other.degree) {
            return Err(GeomError::Argument(format!(
                "incompatible forms: degree {} on dim {} and degree {} on dim {}",
                self.degree,
                self.dim(),
                other.degree,
                other.dim()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &KFormField) -> Result<KFormField> {
        self.check_pair(other, true)?;
        let (a, b) = (self.clone(), other.clone());
        Ok(self.derive(self.degree, move |p| a.eval(p)?.add(&b.eval(p)?)))
    }

    pub fn sub(&self, other: &KFormField) -> Result<KFormField> {
        self.check_pair(other, true)?;
        let (a, b) = (self.clone(), other.clone());
        Ok(self.derive(self.degree, move |p| a.eval(p)?.sub(&b.eval(p)?)))
    }

    /// Sum of several forms of equal degree.
    pub fn sum(forms: &[KFormField]) -> Result<KFormField> {
        let (first, rest) = forms
            .split_first()
            .ok_or_else(|| GeomError::Argument("empty sum of forms".into()))?;
        rest.iter().try_fold(first.clone(), |acc, f| acc.add(f))
    }

    pub fn scale_f64(&self, s: f64) -> KFormField {
        let a = self.clone();
        self.derive(self.degree, move |p| Ok(a.eval(p)?.scale_f64(s)))
    }

    pub fn scale(&self, f: &ScalarField) -> Result<KFormField> {
        if f.dim() != self.dim() {
            return Err(GeomError::Argument("scalar and form dimensions differ".into()));
        }
        let (a, f) = (self.clone(), f.clone());
        Ok(self.derive(self.degree, move |p| Ok(a.eval(p)?.scale(&f.eval(p)?))))
    }

    pub fn wedge(&self, other: &KFormField) -> Result<KFormField> {
        self.check_pair(other, false)?;
        let (a, b) = (self.clone(), other.clone());
        Ok(self.derive(self.degree + other.degree, move |p| {
            a.eval(p)?.wedge(&b.eval(p)?)
        }))
    }

    /// `k`-fold wedge power.
    pub fn power(&self, k: usize) -> Result<KFormField> {
        if k == 0 {
            return Ok(self.derive(0, |p| Ok(FormJet::scalar(p.constant(1.0)))));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    /// Exterior derivative.
    pub fn d(&self) -> Result<KFormField> {
        if self.degree >= self.dim() {
            return Err(GeomError::Argument(format!(
                "exterior derivative of a top-degree form on dimension {}",
                self.dim()
            )));
        }
        let a = self.clone();
        Ok(self.derive(self.degree + 1, move |p| a.eval(p)?.d()))
    }

    pub fn interior(&self, x: &VectorField) -> Result<KFormField> {
        if self.degree == 0 {
            return Err(GeomError::Argument("interior product of a 0-form".into()));
        }
        if x.dim() != self.dim() {
            return Err(GeomError::Argument("vector and form dimensions differ".into()));
        }
        let (a, x) = (self.clone(), x.clone());
        Ok(self.derive(self.degree - 1, move |p| a.eval(p)?.interior(&x.eval(p)?)))
    }

    /// Lie derivative by Cartan's formula `L_X = d ι_X + ι_X d`.
    pub fn lie(&self, x: &VectorField) -> Result<KFormField> {
        if x.dim() != self.dim() {
            return Err(GeomError::Argument("vector and form dimensions differ".into()));
        }
        let (a, x) = (self.clone(), x.clone());
        let top = self.degree == self.dim();
        Ok(self.derive(self.degree, move |p| {
            let form = a.eval(p)?;
            let xv = x.eval(p)?;
            let mut out = if form.degree() > 0 {
                form.interior(&xv)?.d()?
            } else {
                FormJet::zero(p.dim(), 0)
            };
            if !top {
                out = out.add(&form.d()?.interior(&xv)?)?;
            }
            Ok(out)
        }))
    }

    pub fn hodge(&self, g: &MetricField) -> Result<KFormField> {
        if g.dim() != self.dim() {
            return Err(GeomError::Argument("metric and form dimensions differ".into()));
        }
        let (a, g) = (self.clone(), g.clone());
        Ok(self.derive(self.dim() - self.degree, move |p| a.eval(p)?.hodge(&g.eval(p)?)))
    }

    /// Pointwise transform of the coefficient data.
    pub fn map_jet<F>(&self, degree: usize, f: F) -> KFormField
    where
        F: Fn(FormJet) -> Result<FormJet> + Send + Sync + 'static,
    {
        let a = self.clone();
        self.derive(degree, move |p| f(a.eval(p)?))
    }
}

/// Vector field from component scalar fields.
pub fn vector_field(comps: Vec<ScalarField>) -> Result<VectorField> {
    let n = comps.len();
    if comps.iter().any(|c| c.dim() != n) {
        return Err(GeomError::Argument(
            "vector field components must live on an n-dimensional chart".into(),
        ));
    }
    Ok(Field::new(n, move |p| {
        VectorJet::new(comps.iter().map(|c| c.eval(p)).collect::<Result<Vec<_>>>()?)
    }))
}

/// Affine vector field `X(x) = A x + b`.
pub fn linear_vector_field(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<VectorField> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(GeomError::Argument("matrix does not match offset".into()));
    }
    Ok(Field::new(n, move |p| {
        let x = p.lifts();
        let comps = (0..n)
            .map(|i| {
                x.iter()
                    .zip(&a[i])
                    .fold(p.constant(b[i]), |acc, (xj, aij)| acc + xj * *aij)
            })
            .collect();
        VectorJet::new(comps)
    }))
}

/// Coordinate field `∂_index`.
pub fn coordinate_vector(index: usize, dim: usize) -> Result<VectorField> {
    if index >= dim {
        return Err(GeomError::Argument(format!("index {index} out of range")));
    }
    Ok(Field::new(dim, move |p| {
        let mut comps = vec![p.constant(0.0); dim];
        comps[index] = p.constant(1.0);
        VectorJet::new(comps)
    }))
}

pub fn add_vector_fields(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    x.zip(y, |a, b| Ok(a.add(&b)))
}

pub fn scale_vector_field(x: &VectorField, s: f64) -> VectorField {
    x.map(move |a| {
        let dim = a.dim();
        Ok(a.scale(&Jet2::constant(s, dim)))
    })
}

pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    x.zip(y, |a, b| a.bracket(&b))
}

/// A complex-valued form as a pair of real forms.
#[derive(Clone, Debug)]
pub struct ComplexFormField {
    pub re: KFormField,
    pub im: KFormField,
}

impl ComplexFormField {
    pub fn new(re: KFormField, im: KFormField) -> Result<ComplexFormField> {
        re.check_pair(&im, true)?;
        Ok(ComplexFormField { re, im })
    }

    pub fn degree(&self) -> usize {
        self.re.degree()
    }

    pub fn wedge(&self, other: &ComplexFormField) -> Result<ComplexFormField> {
        let re = self.re.wedge(&other.re)?.sub(&self.im.wedge(&other.im)?)?;
        let im = self.re.wedge(&other.im)?.add(&self.im.wedge(&other.re)?)?;
        ComplexFormField::new(re, im)
    }

    pub fn power(&self, k: usize) -> Result<ComplexFormField> {
        if k == 0 {
            return Err(GeomError::Argument("zeroth power of a complex form".into()));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    pub fn d(&self) -> Result<ComplexFormField> {
        ComplexFormField::new(self.re.d()?, self.im.d()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::lift_coordinate;

    fn pt(c: &[f64]) -> ChartPoint {
        ChartPoint::new(c.to_vec()).unwrap()
    }

    fn dx(dim: usize, i: &[usize]) -> KFormField {
        KFormField::basis(dim, i).unwrap()
    }

    #[test]
    fn wedge_antisymmetry_on_vectors() {
        let w = dx(2, &[0]).wedge(&dx(2, &[1])).unwrap();
        let f = w.eval(&pt(&[0.1, 0.2])).unwrap();
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        assert_eq!(f.evaluate_on(&[e1.clone(), e2.clone()]).unwrap(), 1.0);
        assert_eq!(f.evaluate_on(&[e2, e1]).unwrap(), -1.0);
    }

    #[test]
    fn sigma_one_squared() {
        let s1 = dx(4, &[0, 1]).add(&dx(4, &[2, 3])).unwrap();
        let sq = s1.wedge(&s1).unwrap().eval(&pt(&[0.0; 4])).unwrap();
        assert_eq!(sq.coeff(&[0, 1, 2, 3]).value(), 2.0);
    }

    #[test]
    fn derivative_of_potential() {
        let x1 = lift_coordinate(0, 4).unwrap();
        let x3 = lift_coordinate(2, 4).unwrap();
        let k = KFormField::from_coeffs(4, 1, vec![(vec![1], x1), (vec![3], x3)]).unwrap();
        let dk = k.d().unwrap().eval(&pt(&[0.3, 0.1, -0.2, 0.9])).unwrap();
        assert_eq!(dk.coeff(&[0, 1]).value(), 1.0);
        assert_eq!(dk.coeff(&[2, 3]).value(), 1.0);
        assert_eq!(dk.coeff(&[0, 2]).value(), 0.0);
    }

    #[test]
    fn interior_examples() {
        let w = dx(2, &[0, 1]);
        let e1 = coordinate_vector(0, 2).unwrap();
        let r = w.interior(&e1).unwrap().eval(&pt(&[0.0, 0.0])).unwrap();
        assert_eq!(r.coeff(&[1]).value(), 1.0);
        let rr = w.interior(&e1).unwrap().interior(&e1).unwrap();
        assert_eq!(rr.eval(&pt(&[0.5, 0.5])).unwrap().max_abs(), 0.0);
        assert!(KFormField::zero(2, 0).interior(&e1).is_err());
    }

    #[test]
    fn lie_of_constant_form_along_coordinate_field() {
        let w = dx(2, &[0, 1]);
        let e1 = coordinate_vector(0, 2).unwrap();
        let l = w.lie(&e1).unwrap().eval(&pt(&[0.4, -0.1])).unwrap();
        assert_eq!(l.max_abs(), 0.0);
    }

    #[test]
    fn brackets() {
        let e1 = coordinate_vector(0, 2).unwrap();
        let e2 = coordinate_vector(1, 2).unwrap();
        let p = pt(&[0.3, 0.7]);
        let b = lie_bracket(&e1, &e2).unwrap().eval(&p).unwrap();
        assert_eq!(b.values(), vec![0.0, 0.0]);
        // x1 ∂2
        let x = linear_vector_field(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.0, 0.0]).unwrap();
        let b = lie_bracket(&x, &e1).unwrap().eval(&p).unwrap();
        assert_eq!(b.values(), vec![0.0, -1.0]);
    }

    #[test]
    fn hodge_on_flat_r3() {
        let g = MetricField::flat(3);
        let s = dx(3, &[0]).hodge(&g).unwrap().eval(&pt(&[0.1, 0.2, 0.3])).unwrap();
        assert_eq!(s.coeff(&[1, 2]).value(), 1.0);
        assert_eq!(s.max_abs(), 1.0);
    }

    #[test]
    fn top_form_has_no_derivative() {
        assert!(dx(2, &[0, 1]).d().is_err());
    }

    #[test]
    fn repeated_indices_vanish() {
        let f = FormJet::from_terms(3, 2, vec![(vec![1, 1], Jet2::constant(1.0, 3))]).unwrap();
        assert_eq!(f.max_abs(), 0.0);
        let g = FormJet::from_terms(3, 2, vec![(vec![2, 0], Jet2::constant(1.0, 3))]).unwrap();
        assert_eq!(g.coeff(&[0, 2]).value(), -1.0);
    }
}
