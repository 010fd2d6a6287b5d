//! Scenario runner for the hkbundle verification suite.
//!
//! A scenario is a TOML file naming a base, a model, optional isometric
//! actions and a list of checks. [`execute`] builds the geometry, runs every
//! check and returns a [`Report`].

pub mod build;
pub mod bundled;
pub mod checks;
pub mod expr;
pub mod report;
pub mod scenario;

use std::path::Path;
use std::time::Instant;

pub use checks::{CheckRow, Status};
pub use report::Report;
pub use scenario::{parse_scenario, Scenario, ScenarioError};

/// Command-line adjustments applied on top of a scenario.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// Keyed by check name or check kind.
    pub tolerances: Vec<(String, f64)>,
}

/// Parse `KEY=VAL` for `--tolerance`.
pub fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VAL, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("tolerance {v:?} is not a number"))?;
    if !(v >= 0.0) {
        return Err(format!("tolerance must be non-negative, got {v}"));
    }
    Ok((k.trim().to_string(), v))
}

/// Load a scenario from a path, or by bundled name when no such file exists.
pub fn load(arg: &str) -> Result<Scenario, ScenarioError> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(text) = bundled::get(arg) {
            return parse_scenario(text, arg);
        }
    }
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: arg.to_string(),
        source,
    })?;
    parse_scenario(&text, arg)
}

fn tolerance_for(sc: &Scenario, ov: &Overrides, check: &scenario::CheckSpec) -> f64 {
    let name = check.display_name();
    let keyed = |map: &dyn Fn(&str) -> Option<f64>| map(&name).or_else(|| map(&check.check));
    let cli = |k: &str| ov.tolerances.iter().rev().find(|(key, _)| key == k).map(|(_, v)| *v);
    let file = |k: &str| sc.tolerances.get(k).copied();
    keyed(&cli)
        .or(check.tolerance)
        .or_else(|| keyed(&file))
        .or_else(|| checks::default_tolerance(&check.check))
        .unwrap_or(0.0)
}

/// Build and run every check of `sc`. Checks run concurrently; rows keep
/// the declaration order.
pub fn execute(sc: &Scenario, ov: &Overrides) -> Result<Report, ScenarioError> {
    let start = Instant::now();
    let mut sampling = sc.sampling.clone();
    if let Some(s) = ov.seed {
        sampling.seed = s;
    }
    if let Some(n) = ov.samples {
        if n == 0 {
            return Err(ScenarioError::Invalid("sample count must be positive".into()));
        }
        sampling.count = n;
    }
    for (k, _) in &ov.tolerances {
        let known = sc.checks.iter().any(|c| c.display_name() == *k || c.check == *k);
        if !known {
            return Err(ScenarioError::Invalid(format!("--tolerance names no check: {k:?}")));
        }
    }
    let setup = build::setup(sc)?;
    checks::validate(&sc.checks, &setup)?;
    let tolerances: Vec<f64> = sc.checks.iter().map(|c| tolerance_for(sc, ov, c)).collect();
    let rows = std::thread::scope(|s| {
        let handles: Vec<_> = sc
            .checks
            .iter()
            .zip(&tolerances)
            .map(|(c, tol)| {
                let (setup, sampling) = (&setup, &sampling);
                s.spawn(move || checks::run_check(setup, sampling, c, *tol))
            })
            .collect();
        handles
            .into_iter()
            .zip(&sc.checks)
            .map(|(h, c)| {
                h.join().unwrap_or_else(|_| CheckRow {
                    name: c.display_name(),
                    check: c.check.clone(),
                    status: Status::Error,
                    max_residual: None,
                    worst_point: None,
                    tolerance: 0.0,
                    message: Some("check panicked".into()),
                    elapsed_ms: 0.0,
                })
            })
            .collect()
    });
    Ok(Report::new(
        sc.name.clone(),
        sampling.seed,
        sampling.count,
        rows,
        start.elapsed().as_secs_f64() * 1e3,
    ))
}
