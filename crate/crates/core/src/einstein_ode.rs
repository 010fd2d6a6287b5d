//! The cohomogeneity-one Einstein system for `dt² + p²g_M + q²α² + r²ξ² + s²η²`
//! and its truncations, as a residual oracle and a fixed-step integrator.
//!
//! The residual components are normalised so that each has the units of `λ`:
//! the first equation as written, the fibre equations divided by the square of
//! their fibre profile and the last equation divided by `p²`. The raw
//! equations differ from these by positive factors only.

use std::io::Write;

use crate::error::{GeomError, Result};
use crate::spaces::{BundleKind, ProfileSet};

/// Values and first derivatives of the active profiles `(p, q, r, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeState {
    pub t: f64,
    /// `p` followed by the active fibre profiles.
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl OdeState {
    pub fn new(which: BundleKind, t: f64, values: Vec<f64>, derivs: Vec<f64>) -> Result<OdeState> {
        let k = 1 + which.fibres();
        if values.len() != k || derivs.len() != k {
            return Err(GeomError::Argument(format!("{which} needs {k} profiles, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
            return Err(GeomError::Domain(format!("profile value {v} is not positive")));
        }
        if !t.is_finite() || derivs.iter().any(|d| !d.is_finite()) {
            return Err(GeomError::Argument("state must be finite".into()));
        }
        Ok(OdeState { t, values, derivs })
    }

    /// Read off the state of a profile set at `t`.
    pub fn from_profiles(profiles: &ProfileSet, which: BundleKind, t: f64) -> Result<OdeState> {
        let jets = active(profiles, which, t)?;
        OdeState::new(which, t, jets.iter().map(|j| j[0]).collect(), jets.iter().map(|j| j[1]).collect())
    }
}

fn active(profiles: &ProfileSet, which: BundleKind, t: f64) -> Result<Vec<[f64; 3]>> {
    let d = profiles.derivatives(t)?;
    let names = ["p", "q", "r", "s"];
    (0..=which.fibres())
        .map(|i| d[i].ok_or_else(|| GeomError::Argument(format!("{which} needs profile {}", names[i]))))
        .collect()
}

/// Normalised residuals from `p = [p, p′, p″]` and the fibre jets.
fn equations(n: usize, lambda: f64, p: [f64; 3], fibres: &[[f64; 3]]) -> Vec<f64> {
    let n = n as f64;
    let [p0, p1, p2] = p;
    let log_d: Vec<f64> = fibres.iter().map(|f| f[1] / f[0]).collect();
    let mut out = Vec::with_capacity(fibres.len() + 2);
    out.push(fibres.iter().map(|f| f[2] / f[0]).sum::<f64>() + 4.0 * n * p2 / p0 + lambda);
    for (i, f) in fibres.iter().enumerate() {
        let others: f64 = log_d.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).sum();
        let r = f[2] / f[0] + log_d[i] * others + 4.0 * n * p1 * log_d[i] / p0 - n * f[0] * f[0] / p0.powi(4) + lambda;
        out.push(r);
    }
    let sq: f64 = fibres.iter().map(|f| f[0] * f[0]).sum();
    out.push(
        p2 / p0 + p1 / p0 * log_d.iter().sum::<f64>() + (4.0 * n - 1.0) * (p1 / p0).powi(2)
            + sq / (2.0 * p0.powi(4))
            + lambda,
    );
    out
}

/// Left minus right of each active equation at `t`, normalised as described
/// in the module docs. The last component is the `pp″` equation.
pub fn system_residual(profiles: &ProfileSet, n: usize, lambda: f64, t: f64, which: BundleKind) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(GeomError::Argument("n must be at least 1".into()));
    }
    let jets = active(profiles, which, t)?;
    Ok(equations(n, lambda, jets[0], &jets[1..]))
}

/// `λ(b) = b²λ(1)` for the exponential family.
pub fn exponential_lambda(b: f64, n: usize, which: BundleKind) -> f64 {
    b * b * which.einstein_constant(n)
}

/// Worst residual of `p = ae^{bt}`, `q = r = s = 2a²be^{2bt}` with the
/// rescaled constant, over `t ∈ {−1, −0.5, 0, 0.5, 1}`.
pub fn scaling_family_check(a: f64, b: f64, n: usize, which: BundleKind) -> Result<f64> {
    let prof = ProfileSet::exponential(a, b)?;
    let lambda = exponential_lambda(b, n, which);
    let mut worst: f64 = 0.0;
    for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        for r in system_residual(&prof, n, lambda, t, which)? {
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

/// Second derivatives solved from the fibre equations and the first equation.
fn accelerations(n: usize, lambda: f64, values: &[f64], derivs: &[f64]) -> Vec<f64> {
    let nf = n as f64;
    let (p0, p1) = (values[0], derivs[0]);
    let k = values.len() - 1;
    let log_d: Vec<f64> = (1..=k).map(|i| derivs[i] / values[i]).collect();
    let mut acc = vec![0.0; k + 1];
    let mut sum = 0.0;
    for i in 0..k {
        let f = values[i + 1];
        let others: f64 = log_d.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).sum();
        let ratio = -lambda - log_d[i] * others - 4.0 * nf * p1 * log_d[i] / p0 + nf * f * f / p0.powi(4);
        acc[i + 1] = ratio * f;
        sum += ratio;
    }
    acc[0] = p0 / (4.0 * nf) * (-lambda - sum);
    acc
}

fn constraint(n: usize, lambda: f64, values: &[f64], derivs: &[f64]) -> f64 {
    let acc = accelerations(n, lambda, values, derivs);
    let fibres: Vec<[f64; 3]> = (1..values.len()).map(|i| [values[i], derivs[i], acc[i]]).collect();
    *equations(n, lambda, [values[0], derivs[0], acc[0]], &fibres).last().unwrap_or(&0.0)
}

/// One row of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub state: OdeState,
    /// Normalised residual of the `pp″` equation.
    pub constraint: f64,
}

/// Output of [`integrate`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub which: BundleKind,
    pub points: Vec<TrajectoryPoint>,
    /// Set when a profile stopped being positive and the run was cut short.
    pub halted: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> &OdeState {
        &self.points[self.points.len() - 1].state
    }

    /// Largest `|C(t) − C(t_0)|` along the trajectory.
    pub fn constraint_drift(&self) -> f64 {
        let c0 = self.points[0].constraint;
        self.points.iter().map(|p| (p.constraint - c0).abs()).fold(0.0, f64::max)
    }

    /// Columns `t`, profiles, derivatives, `constraint`, `drift`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let k = 1 + self.which.fibres();
        let names = ["p", "q", "r", "s"];
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(names[..k].iter().map(|s| s.to_string()));
        header.extend(names[..k].iter().map(|s| format!("d{s}")));
        header.extend(["constraint".to_string(), "drift".to_string()]);
        let io = |e: csv::Error| GeomError::Argument(format!("csv export failed: {e}"));
        w.write_record(&header).map_err(io)?;
        let c0 = self.points[0].constraint;
        for p in &self.points {
            let mut row = vec![p.state.t];
            row.extend(&p.state.values);
            row.extend(&p.state.derivs);
            row.extend([p.constraint, (p.constraint - c0).abs()]);
            w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(io)?;
        }
        w.flush().map_err(|e| GeomError::Argument(format!("csv export failed: {e}")))?;
        Ok(())
    }
}

/// Classical fourth-order Runge–Kutta from `initial` to `t_end`.
///
/// The step is shrunk so that a whole number of steps lands on `t_end`. The
/// `pp″` equation is not used to advance the state and is recorded instead.
pub fn integrate(
    initial: &OdeState,
    n: usize,
    lambda: f64,
    which: BundleKind,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    if !(step > 0.0) {
        return Err(GeomError::Argument(format!("step must be positive, got {step}")));
    }
    if !(t_end >= initial.t) {
        return Err(GeomError::Argument(format!("t_end = {t_end} lies before t = {}", initial.t)));
    }
    if n == 0 {
        return Err(GeomError::Argument("n must be at least 1".into()));
    }
    let k = 1 + which.fibres();
    if initial.values.len() != k {
        return Err(GeomError::Argument(format!("{which} needs {k} profiles")));
    }
    let steps = ((t_end - initial.t) / step).ceil().max(1.0) as usize;
    let h = (t_end - initial.t) / steps as f64;
    // y = (values, derivs)
    let rhs = |y: &[f64]| -> Vec<f64> {
        let (v, d) = y.split_at(k);
        let mut out = d.to_vec();
        out.extend(accelerations(n, lambda, v, d));
        out
    };
    let mut y: Vec<f64> = initial.values.iter().chain(&initial.derivs).copied().collect();
    let mut points = vec![TrajectoryPoint {
        state: initial.clone(),
        constraint: constraint(n, lambda, &initial.values, &initial.derivs),
    }];
    let axpy = |y: &[f64], a: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + a * k).collect() };
    for i in 1..=steps {
        let k1 = rhs(&y);
        let k2 = rhs(&axpy(&y, h / 2.0, &k1));
        let k3 = rhs(&axpy(&y, h / 2.0, &k2));
        let k4 = rhs(&axpy(&y, h, &k3));
        let next: Vec<f64> = (0..y.len())
            .map(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
            .collect();
        let t_next = initial.t + h * i as f64;
        if let Some(j) = (0..k).find(|j| !(next[*j] > 0.0 && next[*j].is_finite())) {
            return Ok(Trajectory {
                which,
                points,
                halted: Some(format!("profile {j} left the positive range near t = {t_next}")),
            });
        }
        y = next;
        let (v, d) = y.split_at(k);
        points.push(TrajectoryPoint {
            state: OdeState {
                t: t_next,
                values: v.to_vec(),
                derivs: d.to_vec(),
            },
            constraint: constraint(n, lambda, v, d),
        });
    }
    Ok(Trajectory {
        which,
        points,
        halted: None,
    })
}
