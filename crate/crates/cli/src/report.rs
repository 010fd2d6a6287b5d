//! Report assembly and rendering.

use std::fmt::Write as _;

use serde::Serialize;

use crate::checks::{CheckRow, Status};

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    /// Per check, in declaration order.
    pub checks_ms: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckRow>,
    pub all_passed: bool,
    pub timing: Timing,
}

impl Report {
    pub fn new(scenario: String, seed: u64, samples: usize, checks: Vec<CheckRow>, total_ms: f64) -> Report {
        let all_passed = checks.iter().all(|c| c.status == Status::Pass);
        let checks_ms = checks.iter().map(|c| c.elapsed_ms).collect();
        Report {
            scenario,
            seed,
            samples,
            checks,
            all_passed,
            timing: Timing { total_ms, checks_ms },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// The JSON report without timing, which is reproducible byte for byte.
    pub fn body_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serialises");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("report serialises")
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed {
            0
        } else {
            1
        }
    }

    /// Fixed-width table for terminals.
    pub fn table(&self) -> String {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "scenario {} (seed {}, {} samples)", self.scenario, self.seed, self.samples);
        let _ = writeln!(out, "{:<w$}  {:<6}  {:>11}  {:>9}  worst point", "check", "status", "residual", "tolerance");
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Error => "ERROR",
            };
            let res = c.max_residual.map_or_else(|| "-".to_string(), |r| format!("{r:.3e}"));
            let pt = c.worst_point.as_ref().map_or_else(String::new, |p| {
                let s: Vec<String> = p.iter().map(|x| format!("{x:.3}")).collect();
                format!("({})", s.join(", "))
            });
            let _ = writeln!(out, "{:<w$}  {:<6}  {:>11}  {:>9.1e}  {pt}", c.name, status, res, c.tolerance);
            if let Some(m) = &c.message {
                let _ = writeln!(out, "{:<w$}  {m}", "");
            }
        }
        let passed = self.checks.iter().filter(|c| c.status == Status::Pass).count();
        let _ = writeln!(out, "{passed}/{} checks passed", self.checks.len());
        out
    }
}
