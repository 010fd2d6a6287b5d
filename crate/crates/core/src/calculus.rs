//! Second-order forward-mode differentiation on coordinate charts.
//!
//! A [`Jet2`] carries the value, gradient and Hessian of a scalar at one chart
//! point. Every operation propagates all three exactly (up to rounding), so
//! exterior derivatives and curvature never need finite differences.
//!
//! Each jet also records how many of its derivative levels are trustworthy.
//! Differentiating a jet with [`Jet2::partial`] consumes one level, and the
//! curvature code refuses metrics whose Hessians are not known.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{GeomError, Result};

/// How many derivative levels of a jet are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    /// Only the value is known.
    Value,
    /// Value and gradient are known.
    First,
    /// Value, gradient and Hessian are known.
    Second,
    /// The underlying function is affine, so every derivative is known.
    Affine,
}

impl Order {
    /// Number of known derivative levels (affine reports 3).
    pub fn level(self) -> u8 {
        match self {
            Order::Value => 0,
            Order::First => 1,
            Order::Second => 2,
            Order::Affine => 3,
        }
    }

    fn lowered(self) -> Order {
        match self {
            Order::Affine => Order::Affine,
            Order::Second => Order::First,
            Order::First | Order::Value => Order::Value,
        }
    }

    /// Order of a nonlinear combination of jets with this order.
    fn nonlinear(self) -> Order {
        self.min(Order::Second)
    }
}

/// Second-order Taylor data of a scalar at a chart point.
#[derive(Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
    order: Order,
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("value", &self.value)
            .field("grad", &self.grad)
            .field("order", &self.order)
            .finish()
    }
}

impl Jet2 {
    /// A constant in a chart of dimension `dim`.
    pub fn constant(value: f64, dim: usize) -> Jet2 {
        Jet2 {
            value,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
            order: Order::Affine,
        }
    }

    pub fn zero(dim: usize) -> Jet2 {
        Jet2::constant(0.0, dim)
    }

    /// The coordinate function `x_index` evaluated at `value`.
    pub fn variable(value: f64, index: usize, dim: usize) -> Jet2 {
        let mut j = Jet2::constant(value, dim);
        j.grad[index] = 1.0;
        j
    }

    /// Build a jet from explicit data; the Hessian is symmetrised.
    pub fn new(value: f64, grad: Vec<f64>, hess: Vec<f64>) -> Result<Jet2> {
        let dim = grad.len();
        if hess.len() != dim * dim {
            return Err(GeomError::Argument(format!(
                "hessian has {} entries, expected {}",
                hess.len(),
                dim * dim
            )));
        }
        let mut h = hess;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let s = 0.5 * (h[i * dim + j] + h[j * dim + i]);
                h[i * dim + j] = s;
                h[j * dim + i] = s;
            }
        }
        Ok(Jet2 {
            value,
            grad,
            hess: h,
            order: Order::Second,
        })
    }

    /// Jet of a one-variable function composed with coordinate `index`.
    ///
    /// `v`, `d1`, `d2` are the value and first two derivatives of the
    /// function at the coordinate value.
    pub fn from_univariate(v: f64, d1: f64, d2: f64, index: usize, dim: usize) -> Jet2 {
        let mut j = Jet2::constant(v, dim);
        j.grad[index] = d1;
        j.hess[index * dim + index] = d2;
        j.order = Order::Second;
        j
    }

    pub fn with_order(mut self, order: Order) -> Jet2 {
        self.order = order;
        self
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    pub fn hess_flat(&self) -> &[f64] {
        &self.hess
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    /// True for exactly constant jets.
    pub fn is_constant(&self) -> bool {
        self.order == Order::Affine && self.grad.iter().all(|g| *g == 0.0)
    }

    /// Partial derivative with respect to coordinate `k`, as a jet of one
    /// lower order.
    pub fn partial(&self, k: usize) -> Result<Jet2> {
        if self.order == Order::Value {
            return Err(GeomError::InsufficientOrder { needed: 1, have: 0 });
        }
        let n = self.dim();
        if k >= n {
            return Err(GeomError::Argument(format!(
                "partial index {k} out of range for dimension {n}"
            )));
        }
        let grad = self.hess[k * n..(k + 1) * n].to_vec();
        Ok(Jet2 {
            value: self.grad[k],
            grad,
            hess: vec![0.0; n * n],
            order: self.order.lowered(),
        })
    }

    /// Require at least `needed` exact derivative levels.
    pub fn require(&self, needed: u8) -> Result<()> {
        if self.order.level() < needed {
            Err(GeomError::InsufficientOrder {
                needed,
                have: self.order.level(),
            })
        } else {
            Ok(())
        }
    }

    /// Extend into a larger chart whose coordinates `offset..offset+dim`
    /// are the coordinates of this jet.
    pub fn embed(&self, offset: usize, new_dim: usize) -> Jet2 {
        let n = self.dim();
        assert!(offset + n <= new_dim, "embedding does not fit");
        let mut j = Jet2::constant(self.value, new_dim);
        for i in 0..n {
            j.grad[offset + i] = self.grad[i];
            for k in 0..n {
                j.hess[(offset + i) * new_dim + offset + k] = self.hess[i * n + k];
            }
        }
        j.order = self.order;
        j
    }

    /// Apply a scalar function with value `f0`, derivative `f1` and second
    /// derivative `f2` at this jet's value.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let n = self.dim();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = f1 * self.hess[i * n + j] + f2 * self.grad[i] * self.grad[j];
            }
        }
        let order = if self.is_constant() {
            Order::Affine
        } else {
            self.order.nonlinear()
        };
        Jet2 {
            value: f0,
            grad: self.grad.iter().map(|g| f1 * g).collect(),
            hess,
            order,
        }
    }

    /// Chain rule through an outer function of `inner.len()` variables.
    ///
    /// `outer` is the jet of the outer function at the point formed by the
    /// inner values, expressed in a chart of dimension `inner.len()`.
    pub fn compose(outer: &Jet2, inner: &[Jet2]) -> Result<Jet2> {
        let m = inner.len();
        if outer.dim() != m {
            return Err(GeomError::Argument(format!(
                "outer jet has dimension {}, but {} inner jets were given",
                outer.dim(),
                m
            )));
        }
        let Some(first) = inner.first() else {
            return Ok(Jet2::constant(outer.value, 0));
        };
        let n = first.dim();
        if inner.iter().any(|j| j.dim() != n) {
            return Err(GeomError::Argument("inner jets differ in dimension".into()));
        }
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        for (a, ia) in inner.iter().enumerate() {
            let ga = outer.grad[a];
            if ga != 0.0 {
                for j in 0..n {
                    grad[j] += ga * ia.grad[j];
                }
                for (h, ih) in hess.iter_mut().zip(ia.hess.iter()) {
                    *h += ga * ih;
                }
            }
            for (b, ib) in inner.iter().enumerate() {
                let hab = outer.hess[a * m + b];
                if hab == 0.0 {
                    continue;
                }
                for j in 0..n {
                    for k in 0..n {
                        hess[j * n + k] += hab * ia.grad[j] * ib.grad[k];
                    }
                }
            }
        }
        for j in 0..n {
            for k in (j + 1)..n {
                let s = 0.5 * (hess[j * n + k] + hess[k * n + j]);
                hess[j * n + k] = s;
                hess[k * n + j] = s;
            }
        }
        let inner_order = inner.iter().map(|j| j.order).min().unwrap_or(Order::Affine);
        let all_affine = outer.order == Order::Affine && inner_order == Order::Affine;
        let order = if all_affine {
            Order::Affine
        } else {
            outer.order.min(inner_order).nonlinear()
        };
        Ok(Jet2 {
            value: outer.value,
            grad,
            hess,
            order,
        })
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sinh(&self) -> Jet2 {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(&self) -> Jet2 {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c)
    }

    pub fn tanh(&self) -> Jet2 {
        let t = self.value.tanh();
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }

    pub fn atan(&self) -> Jet2 {
        let x = self.value;
        let d = 1.0 / (1.0 + x * x);
        self.chain(x.atan(), d, -2.0 * x * d * d)
    }

    /// Two-argument arctangent `atan2(self, x)`.
    pub fn atan2(&self, x: &Jet2) -> Result<Jet2> {
        let (yv, xv) = (self.value, x.value);
        let r2 = xv * xv + yv * yv;
        if r2 == 0.0 {
            return Err(GeomError::Domain("atan2 at the origin".into()));
        }
        let r4 = r2 * r2;
        // derivatives of atan2(y, x) in the variables (y, x)
        let outer = Jet2 {
            value: yv.atan2(xv),
            grad: vec![xv / r2, -yv / r2],
            hess: vec![
                -2.0 * xv * yv / r4,
                (yv * yv - xv * xv) / r4,
                (yv * yv - xv * xv) / r4,
                2.0 * xv * yv / r4,
            ],
            order: Order::Second,
        };
        Jet2::compose(&outer, &[self.clone(), x.clone()])
    }

    pub fn powi(&self, n: i32) -> Jet2 {
        let x = self.value;
        match n {
            0 => self.chain(1.0, 0.0, 0.0),
            1 => self.clone(),
            _ => {
                let nf = n as f64;
                self.chain(
                    x.powi(n),
                    nf * x.powi(n - 1),
                    nf * (nf - 1.0) * x.powi(n - 2),
                )
            }
        }
    }

    pub fn square(&self) -> Jet2 {
        self.powi(2)
    }

    pub fn try_recip(&self) -> Result<Jet2> {
        let x = self.value;
        if x == 0.0 {
            return Err(GeomError::Domain("division by zero".into()));
        }
        Ok(self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)))
    }

    pub fn try_div(&self, other: &Jet2) -> Result<Jet2> {
        Ok(self * &other.try_recip()?)
    }

    pub fn try_ln(&self) -> Result<Jet2> {
        let x = self.value;
        if x <= 0.0 {
            return Err(GeomError::Domain(format!("logarithm of nonpositive value {x}")));
        }
        Ok(self.chain(x.ln(), 1.0 / x, -1.0 / (x * x)))
    }

    pub fn try_sqrt(&self) -> Result<Jet2> {
        let x = self.value;
        if x <= 0.0 {
            return Err(GeomError::Domain(format!("square root of nonpositive value {x}")));
        }
        let s = x.sqrt();
        Ok(self.chain(s, 0.5 / s, -0.25 / (s * x)))
    }

    /// Real power; a non-integer exponent needs a positive base.
    pub fn try_powf(&self, e: f64) -> Result<Jet2> {
        if e.fract() == 0.0 && e.abs() < i32::MAX as f64 {
            let n = e as i32;
            if n < 0 && self.value == 0.0 {
                return Err(GeomError::Domain("negative power of zero".into()));
            }
            return Ok(self.powi(n));
        }
        let x = self.value;
        if x <= 0.0 {
            return Err(GeomError::Domain(format!(
                "non-integer power {e} of nonpositive value {x}"
            )));
        }
        Ok(self.chain(x.powf(e), e * x.powf(e - 1.0), e * (e - 1.0) * x.powf(e - 2.0)))
    }

    fn zip_linear(&self, other: &Jet2, sa: f64, sb: f64) -> Jet2 {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        Jet2 {
            value: sa * self.value + sb * other.value,
            grad: self
                .grad
                .iter()
                .zip(&other.grad)
                .map(|(a, b)| sa * a + sb * b)
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&other.hess)
                .map(|(a, b)| sa * a + sb * b)
                .collect(),
            order: self.order.min(other.order),
        }
    }

    fn product(&self, other: &Jet2) -> Jet2 {
        let n = self.dim();
        assert_eq!(n, other.dim(), "jet dimension mismatch");
        let (a, b) = (self.value, other.value);
        let grad = (0..n).map(|i| a * other.grad[i] + b * self.grad[i]).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = a * other.hess[i * n + j]
                    + b * self.hess[i * n + j]
                    + (self.grad[i] * other.grad[j] + other.grad[i] * self.grad[j]);
            }
        }
        let order = if self.is_constant() {
            other.order
        } else if other.is_constant() {
            self.order
        } else {
            self.order.min(other.order).nonlinear()
        };
        Jet2 {
            value: a * b,
            grad,
            hess,
            order,
        }
    }

    fn scaled(&self, s: f64) -> Jet2 {
        Jet2 {
            value: s * self.value,
            grad: self.grad.iter().map(|g| s * g).collect(),
            hess: self.hess.iter().map(|h| s * h).collect(),
            order: self.order,
        }
    }

    fn shifted(&self, s: f64) -> Jet2 {
        let mut j = self.clone();
        j.value += s;
        j
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, |$a:ident, $b:ident| $body:expr) => {
        impl $trait<&Jet2> for &Jet2 {
            type Output = Jet2;
            fn $method(self, $b: &Jet2) -> Jet2 {
                let $a = self;
                $body
            }
        }
        impl $trait<Jet2> for Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: Jet2) -> Jet2 {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet2> for Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: &Jet2) -> Jet2 {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet2> for &Jet2 {
            type Output = Jet2;
            fn $method(self, rhs: Jet2) -> Jet2 {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip_linear(b, 1.0, 1.0));
jet_binop!(Sub, sub, |a, b| a.zip_linear(b, 1.0, -1.0));
jet_binop!(Mul, mul, |a, b| a.product(b));
// Unchecked division follows f64 semantics; fields reject non-finite output.
jet_binop!(Div, div, |a, b| {
    let x = b.value;
    a.product(&b.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)))
});

macro_rules! jet_scalar_op {
    ($trait:ident, $method:ident, |$j:ident, $s:ident| $body:expr, |$s2:ident, $j2:ident| $body2:expr) => {
        impl $trait<f64> for &Jet2 {
            type Output = Jet2;
            fn $method(self, $s: f64) -> Jet2 {
                let $j = self;
                $body
            }
        }
        impl $trait<f64> for Jet2 {
            type Output = Jet2;
            fn $method(self, s: f64) -> Jet2 {
                (&self).$method(s)
            }
        }
        impl $trait<&Jet2> for f64 {
            type Output = Jet2;
            fn $method(self, $j2: &Jet2) -> Jet2 {
                let $s2 = self;
                $body2
            }
        }
        impl $trait<Jet2> for f64 {
            type Output = Jet2;
            fn $method(self, j: Jet2) -> Jet2 {
                self.$method(&j)
            }
        }
    };
}

jet_scalar_op!(Add, add, |j, s| j.shifted(s), |s, j| j.shifted(s));
jet_scalar_op!(Sub, sub, |j, s| j.shifted(-s), |s, j| j.scaled(-1.0).shifted(s));
jet_scalar_op!(Mul, mul, |j, s| j.scaled(s), |s, j| j.scaled(s));
jet_scalar_op!(Div, div, |j, s| j.scaled(1.0 / s), |s, j| {
    let x = j.value;
    j.chain(s / x, -s / (x * x), 2.0 * s / (x * x * x))
});

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scaled(-1.0)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scaled(-1.0)
    }
}

/// A point of a coordinate chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Result<ChartPoint> {
        if coords.is_empty() {
            return Err(GeomError::Argument("chart point has no coordinates".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(GeomError::Argument(format!("non-finite coordinate {bad}")));
        }
        Ok(ChartPoint { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.coords[i]
    }

    /// The coordinate function `x_i` as a jet at this point.
    pub fn lift(&self, i: usize) -> Jet2 {
        Jet2::variable(self.coords[i], i, self.dim())
    }

    pub fn lifts(&self) -> Vec<Jet2> {
        (0..self.dim()).map(|i| self.lift(i)).collect()
    }

    pub fn constant(&self, c: f64) -> Jet2 {
        Jet2::constant(c, self.dim())
    }

    /// Copy with coordinate `i` moved by `h`.
    pub fn shifted(&self, i: usize, h: f64) -> ChartPoint {
        let mut c = self.coords.clone();
        c[i] += h;
        ChartPoint { coords: c }
    }
}

/// Values that can be checked for finiteness after evaluation.
pub trait Finite {
    fn all_finite(&self) -> bool;
}

impl Finite for Jet2 {
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl Finite for Vec<Jet2> {
    fn all_finite(&self) -> bool {
        self.iter().all(Jet2::is_finite)
    }
}

impl Finite for f64 {
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

type EvalFn<T> = dyn Fn(&ChartPoint) -> Result<T> + Send + Sync;

/// A field on a chart of fixed dimension, evaluated pointwise.
pub struct Field<T> {
    dim: usize,
    f: Arc<EvalFn<T>>,
}

impl<T> Clone for Field<T> {
    fn clone(&self) -> Self {
        Field {
            dim: self.dim,
            f: Arc::clone(&self.f),
        }
    }
}

impl<T> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field(dim = {})", self.dim)
    }
}

impl<T: Finite + 'static> Field<T> {
    pub fn new<F>(dim: usize, f: F) -> Field<T>
    where
        F: Fn(&ChartPoint) -> Result<T> + Send + Sync + 'static,
    {
        Field { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluate at a point; domain failures are reported with the point.
    pub fn eval(&self, p: &ChartPoint) -> Result<T> {
        if p.dim() != self.dim {
            return Err(GeomError::Argument(format!(
                "point of dimension {} given to a field on a {}-dimensional chart",
                p.dim(),
                self.dim
            )));
        }
        let v = (self.f)(p).map_err(|e| e.at(p.coords()))?;
        if !v.all_finite() {
            return Err(GeomError::Evaluation {
                point: p.coords().to_vec(),
                reason: "non-finite value".into(),
            });
        }
        Ok(v)
    }

    /// Pointwise transform.
    pub fn map<U, G>(&self, g: G) -> Field<U>
    where
        U: Finite + 'static,
        G: Fn(T) -> Result<U> + Send + Sync + 'static,
    {
        let me = self.clone();
        Field::new(self.dim, move |p| g(me.eval(p)?))
    }

    /// Pointwise combination of two fields on the same chart.
    pub fn zip<U, V, G>(&self, other: &Field<U>, g: G) -> Result<Field<V>>
    where
        U: Finite + 'static,
        V: Finite + 'static,
        G: Fn(T, U) -> Result<V> + Send + Sync + 'static,
    {
        if self.dim != other.dim() {
            return Err(GeomError::Argument(format!(
                "fields live on charts of dimension {} and {}",
                self.dim,
                other.dim()
            )));
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(Field::new(self.dim, move |p| g(a.eval(p)?, b.eval(p)?)))
    }
}

/// A scalar function on a chart.
pub type ScalarField = Field<Jet2>;

/// The coordinate function `x_index` on a chart of dimension `dim`.
pub fn lift_coordinate(index: usize, dim: usize) -> Result<ScalarField> {
    if index >= dim {
        return Err(GeomError::Argument(format!(
            "coordinate index {index} out of range for dimension {dim}"
        )));
    }
    Ok(Field::new(dim, move |p| Ok(p.lift(index))))
}

impl Field<Jet2> {
    pub fn constant(c: f64, dim: usize) -> ScalarField {
        Field::new(dim, move |p| Ok(p.constant(c)))
    }

    /// Pointwise scalar function of this field.
    pub fn apply<G>(&self, g: G) -> ScalarField
    where
        G: Fn(&Jet2) -> Result<Jet2> + Send + Sync + 'static,
    {
        self.map(move |j| g(&j))
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.apply(move |j| Ok(j * s))
    }

    pub fn plus(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip(other, |a, b| Ok(a + b))
    }

    pub fn minus(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip(other, |a, b| Ok(a - b))
    }

    pub fn times(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip(other, |a, b| Ok(a * b))
    }

    pub fn divided_by(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip(other, |a, b| a.try_div(&b))
    }
}

/// Largest discrepancy between the jet derivatives of `field` at `point`
/// and central differences with step `h`.
///
/// Only the derivative levels the jet claims to know are compared.
pub fn finite_difference_check(field: &ScalarField, point: &ChartPoint, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(GeomError::Argument(format!("step must be positive, got {h}")));
    }
    let jet = field.eval(point)?;
    let n = point.dim();
    let val = |p: &ChartPoint| field.eval(p).map(|j| j.value());
    let f0 = jet.value();
    let mut worst: f64 = 0.0;
    if jet.order().level() >= 1 {
        for i in 0..n {
            let fp = val(&point.shifted(i, h))?;
            let fm = val(&point.shifted(i, -h))?;
            worst = worst.max(((fp - fm) / (2.0 * h) - jet.grad()[i]).abs());
            if jet.order().level() >= 2 {
                let d2 = (fp - 2.0 * f0 + fm) / (h * h);
                worst = worst.max((d2 - jet.hess(i, i)).abs());
            }
        }
    }
    if jet.order().level() >= 2 {
        for i in 0..n {
            for k in (i + 1)..n {
                let pp = val(&point.shifted(i, h).shifted(k, h))?;
                let pm = val(&point.shifted(i, h).shifted(k, -h))?;
                let mp = val(&point.shifted(i, -h).shifted(k, h))?;
                let mm = val(&point.shifted(i, -h).shifted(k, -h))?;
                let d2 = (pp - pm - mp + mm) / (4.0 * h * h);
                worst = worst.max((d2 - jet.hess(i, k)).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> ChartPoint {
        ChartPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn coordinate_lifts() {
        let x = lift_coordinate(0, 2).unwrap().eval(&pt(&[3.0, 5.0])).unwrap();
        assert_eq!(x.value(), 3.0);
        assert_eq!(x.grad(), &[1.0, 0.0]);
        assert!(x.hess_flat().iter().all(|h| *h == 0.0));
        let y = lift_coordinate(1, 2).unwrap().eval(&pt(&[3.0, 5.0])).unwrap();
        assert_eq!(y.value(), 5.0);
        assert_eq!(y.grad(), &[0.0, 1.0]);
        assert!(lift_coordinate(2, 2).is_err());
    }

    #[test]
    fn sum_of_lifts_is_linear() {
        let p = pt(&[1.0, 2.0, 3.0]);
        let s = p.lift(0) + p.lift(1) + p.lift(2);
        assert_eq!(s.value(), 6.0);
        assert_eq!(s.grad(), &[1.0, 1.0, 1.0]);
        assert_eq!(s.order(), Order::Affine);
    }

    #[test]
    fn elementary_jets() {
        let c = Jet2::constant(0.0, 1).exp();
        assert_eq!(c.value(), 1.0);
        assert_eq!(c.grad(), &[0.0]);
        assert_eq!(c.order(), Order::Affine);

        let x = Jet2::variable(3.0, 0, 1);
        let sq = &x * &x;
        assert_eq!((sq.value(), sq.grad()[0], sq.hess(0, 0)), (9.0, 6.0, 2.0));

        let t = Jet2::variable(0.5, 0, 1);
        let e = (2.0 * &t).exp();
        let e1 = std::f64::consts::E;
        assert!((e.value() - e1).abs() < 1e-15);
        assert!((e.grad()[0] - 2.0 * e1).abs() < 1e-14);
        assert!((e.hess(0, 0) - 4.0 * e1).abs() < 1e-14);
    }

    #[test]
    fn domain_errors_carry_the_point() {
        let f = lift_coordinate(0, 1).unwrap().apply(|x| x.try_ln());
        match f.eval(&pt(&[-1.0])) {
            Err(GeomError::Evaluation { point, .. }) => assert_eq!(point, vec![-1.0]),
            other => panic!("unexpected {other:?}"),
        }
        let r = lift_coordinate(0, 1).unwrap().apply(|x| x.try_recip());
        assert!(r.eval(&pt(&[0.0])).is_err());
        let s = lift_coordinate(0, 1).unwrap().apply(|x| x.try_powf(0.25));
        assert!(s.eval(&pt(&[-2.0])).is_err());
        assert!(s.eval(&pt(&[2.0])).is_ok());
    }

    #[test]
    fn finite_difference_examples() {
        let cube = lift_coordinate(0, 1).unwrap().apply(|x| Ok(x.powi(3)));
        assert!(finite_difference_check(&cube, &pt(&[1.0]), 1e-4).unwrap() < 1e-6);
        let c = ScalarField::constant(2.5, 3);
        assert!(finite_difference_check(&c, &pt(&[0.1, 0.2, 0.3]), 1e-4).unwrap() < 1e-12);
        let e = lift_coordinate(0, 1).unwrap().apply(|t| Ok((2.0 * t).exp()));
        assert!(finite_difference_check(&e, &pt(&[0.0]), 1e-4).unwrap() < 1e-6);
        assert!(finite_difference_check(&e, &pt(&[0.0]), 0.0).is_err());
    }

    #[test]
    fn partial_lowers_the_order() {
        let p = pt(&[0.3, -0.7]);
        let f = (p.lift(0) * p.lift(1)).sin();
        let fx = f.partial(0).unwrap();
        let expect = p.coord(1) * (p.coord(0) * p.coord(1)).cos();
        assert!((fx.value() - expect).abs() < 1e-15);
        assert_eq!(fx.order(), Order::First);
        let fxy = fx.partial(1).unwrap();
        assert_eq!(fxy.order(), Order::Value);
        assert!(matches!(
            fxy.partial(0),
            Err(GeomError::InsufficientOrder { needed: 1, have: 0 })
        ));
        let lin = p.lift(0) * 3.0 + p.lift(1);
        assert_eq!(lin.partial(0).unwrap().partial(1).unwrap().order(), Order::Affine);
    }

    #[test]
    fn atan2_matches_finite_differences() {
        let f = Field::new(2, |p: &ChartPoint| p.lift(1).atan2(&p.lift(0)));
        for c in [[0.4, 0.9], [-0.3, 0.2], [-0.5, -1.1]] {
            assert!(finite_difference_check(&f, &pt(&c), 1e-4).unwrap() < 1e-6);
        }
    }

    #[test]
    fn compose_matches_direct_evaluation() {
        let p = pt(&[0.2, 0.5]);
        let (x, y) = (p.lift(0), p.lift(1));
        let u = &x * &y;
        let v = x.sin() + y.square();
        let direct = (&u * &v.exp()).cosh();
        let q = pt(&[u.value(), v.value()]);
        let outer = (q.lift(0) * q.lift(1).exp()).cosh();
        let composed = Jet2::compose(&outer, &[u, v]).unwrap();
        assert!((composed.value() - direct.value()).abs() < 1e-14);
        for i in 0..2 {
            assert!((composed.grad()[i] - direct.grad()[i]).abs() < 1e-13);
            for j in 0..2 {
                assert!((composed.hess(i, j) - direct.hess(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn embed_places_derivatives() {
        let p = pt(&[0.7]);
        let f = p.lift(0).exp();
        let e = f.embed(2, 4);
        assert_eq!(e.grad(), &[0.0, 0.0, f.grad()[0], 0.0]);
        assert_eq!(e.hess(2, 2), f.hess(0, 0));
        assert_eq!(e.hess(1, 1), 0.0);
    }
}
