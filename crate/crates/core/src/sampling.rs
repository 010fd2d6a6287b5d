//! Seeded sample boxes and worst-case residual bookkeeping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::ChartPoint;
use crate::error::{GeomError, Result};

/// Axis-aligned box in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<SampleBox> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(GeomError::Argument("box bounds differ in length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(GeomError::Argument(format!("invalid box bounds {lo:?} .. {hi:?}")));
        }
        Ok(SampleBox { lo, hi })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> SampleBox {
        SampleBox {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Product box, `self` coordinates first.
    pub fn product(&self, other: &SampleBox) -> SampleBox {
        SampleBox {
            lo: self.lo.iter().chain(&other.lo).copied().collect(),
            hi: self.hi.iter().chain(&other.hi).copied().collect(),
        }
    }

    /// Replace the range of one coordinate.
    pub fn with_range(mut self, i: usize, lo: f64, hi: f64) -> SampleBox {
        self.lo[i] = lo;
        self.hi[i] = hi;
        self
    }

    /// `count` uniformly distributed points drawn from a ChaCha stream.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<ChartPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let c = self
                    .lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(a, b)| if a == b { *a } else { rng.random_range(*a..*b) })
                    .collect();
                ChartPoint::new(c).expect("box bounds are finite")
            })
            .collect()
    }
}

/// Largest residual seen so far and where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct Worst {
    pub value: f64,
    pub point: Option<Vec<f64>>,
}

impl Worst {
    pub fn none() -> Worst {
        Worst {
            value: 0.0,
            point: None,
        }
    }

    pub fn update(&mut self, value: f64, point: &ChartPoint) {
        if value > self.value || self.point.is_none() || value.is_nan() {
            self.value = value;
            self.point = Some(point.coords().to_vec());
        }
    }

    pub fn merge(mut self, other: Worst) -> Worst {
        if other.value > self.value || self.point.is_none() {
            self = other;
        }
        self
    }
}

/// Maximum of a pointwise residual over sample points.
pub fn sup_over<F>(points: &[ChartPoint], mut f: F) -> Result<Worst>
where
    F: FnMut(&ChartPoint) -> Result<f64>,
{
    let mut w = Worst::none();
    for p in points {
        w.update(f(p)?, p);
    }
    Ok(w)
}
