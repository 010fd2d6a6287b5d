//! Scenario files: a TOML description of a base, a model, actions and checks.
//!
//! The full schema is documented in `scenarios/README.md`.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::expr::ExprError;

/// Problems with a scenario that are found before anything is evaluated.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("{context}: {source}")]
    Expression { context: String, source: ExprError },

    #[error("{0}")]
    Invalid(String),
}

/// One-form given as a map from coordinate name to coefficient expression.
pub type FormSpec = BTreeMap<String, String>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub base: Option<BaseSpec>,
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub actions: Vec<ActionSpec>,
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub sampling: Sampling,
    /// Tolerance overrides keyed by check name or check kind.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PotentialChoice {
    #[default]
    Default,
    Radial,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    /// Flat `ℝ^{4n}` or `𝕋^{4n}`.
    Flat {
        #[serde(default = "one")]
        n: usize,
        #[serde(default)]
        torus: bool,
        #[serde(default)]
        potentials: PotentialChoice,
    },
    /// Gibbons–Hawking from `V(u1, u2, u3)` and `θ` on `(u1, u2, u3, y)`.
    GibbonsHawking {
        v: String,
        theta: FormSpec,
        lo: Vec<f64>,
        hi: Vec<f64>,
        /// Optional potentials `κ_1, κ_2, κ_3` with `dκ_i = σ_i`.
        kappa: Option<Vec<FormSpec>>,
    },
    /// Gibbons–Hawking with `V = u1` and built-in potentials.
    GhLinear,
    /// Flat `ℝ⁴` with the half-plane rotation and permuting potentials.
    Example1,
    /// Flat `ℝ⁴` with the rotation `V` and radial potentials.
    Example2,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Exponential {
        a: f64,
        b: f64,
    },
    Calabi {
        #[serde(default = "one")]
        n: usize,
    },
    /// Expressions in `t`.
    Custom {
        p: Option<String>,
        q: Option<String>,
        r: Option<String>,
        s: Option<String>,
        t_lo: Option<f64>,
        t_hi: Option<f64>,
    },
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::Exponential { a: 1.0, b: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// One of the `Q, P, L, N` bundles over the base.
    Bundle {
        bundle: String,
        #[serde(default)]
        profiles: ProfileSpec,
    },
    Hypercomplex {
        shape: String,
        /// Potentials of the extra connections on the base chart.
        potentials: Vec<FormSpec>,
    },
    Special {
        which: String,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        c: f64,
    },
    BalancedM6,
    /// The conformally rescaled `N` bundle.
    ConformalN {
        #[serde(default)]
        profiles: ProfileSpec,
    },
    /// A closed-form quotient metric.
    Reduced {
        which: String,
        #[serde(default = "two")]
        a: f64,
    },
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub name: String,
    /// `triholomorphic`, `permuting`, `homothetic`, `vertical` or `combination`.
    pub kind: String,
    /// Base field: `radial`, `rotation_v`, `rotation_w` or `half_plane`.
    pub field: Option<String>,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub v: f64,
    #[serde(default)]
    pub w: f64,
}

/// One verification. Which optional fields apply depends on `check`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub check: String,
    pub name: Option<String>,
    pub tolerance: Option<f64>,
    pub lambda: Option<f64>,
    pub form: Option<String>,
    pub forms: Option<Vec<String>>,
    pub power: Option<usize>,
    pub action: Option<String>,
    pub which: Option<String>,
    pub a: Option<f64>,
    pub expected: Option<usize>,
    /// `exact` or `at_most` for holonomy dimensions.
    pub mode: Option<String>,
    pub bundle: Option<String>,
    /// `model` (default) or `exponential` for ODE checks.
    pub family: Option<String>,
    /// Fibre coordinate for the inverse construction: `example1` or `example2`.
    pub fibre: Option<String>,
}

impl CheckSpec {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.check.clone())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    /// Optional box replacing the model's own sampling domain.
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

fn default_count() -> usize {
    20
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            count: default_count(),
            seed: 0,
            lo: None,
            hi: None,
        }
    }
}

/// Parse a scenario; `origin` names the source in error messages.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let sc: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        origin: origin.to_string(),
        message: location(text, &e),
    })?;
    if sc.checks.is_empty() {
        return Err(ScenarioError::Invalid(format!("{origin}: scenario has no checks")));
    }
    if sc.sampling.lo.is_some() != sc.sampling.hi.is_some() {
        return Err(ScenarioError::Invalid(format!("{origin}: sampling needs both lo and hi")));
    }
    Ok(sc)
}

/// Error message prefixed with `line L, column C` when a span is known.
fn location(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().trim().to_string();
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            format!("line {line}, column {column}: {msg}")
        }
        None => msg,
    }
}
