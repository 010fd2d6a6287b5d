use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hkbundle_cli::{bundled, execute, load, parse_tolerance, Overrides};
use hkbundle_core::einstein_ode::{exponential_lambda, integrate, OdeState};
use hkbundle_core::{BundleKind, ProfileSet};

#[derive(Parser)]
#[command(name = "hkbundle", version, about = "Verify Einstein, hypercomplex and QK structures on torus bundles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Override a tolerance by check name or kind, e.g. `einstein=1e-6`.
        #[arg(long = "tolerance", value_name = "KEY=VAL", value_parser = parse_tolerance)]
        tolerances: Vec<(String, f64)>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// List the bundled scenarios.
    List,
    /// Integrate the Einstein ODE from exponential initial data and print CSV.
    Integrate {
        #[arg(long, default_value = "N")]
        bundle: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Defaults to the constant of the exponential solution.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(scenario: &str, ov: Overrides, out: Option<PathBuf>, json: bool) -> u8 {
    let report = match load(scenario).and_then(|sc| execute(&sc, &ov)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.table());
    }
    if let Some(path) = out {
        if let Err(e) = std::fs::write(&path, report.to_json() + "\n") {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 2;
        }
    }
    report.exit_code() as u8
}

#[allow(clippy::too_many_arguments)]
fn integrate_cmd(
    bundle: &str,
    n: usize,
    a: f64,
    b: f64,
    lambda: Option<f64>,
    t0: f64,
    t1: f64,
    step: f64,
    out: Option<PathBuf>,
) -> Result<(), String> {
    let kind = BundleKind::parse(bundle).map_err(|e| e.to_string())?;
    let prof = ProfileSet::exponential(a, b).map_err(|e| e.to_string())?;
    let init = OdeState::from_profiles(&prof, kind, t0).map_err(|e| e.to_string())?;
    let lambda = lambda.unwrap_or_else(|| exponential_lambda(b, n, kind));
    let traj = integrate(&init, n, lambda, kind, t1, step).map_err(|e| e.to_string())?;
    let res = match out {
        Some(p) => {
            let f = File::create(&p).map_err(|e| format!("cannot create {}: {e}", p.display()))?;
            traj.write_csv(BufWriter::new(f))
        }
        None => traj.write_csv(io::stdout().lock()),
    };
    res.map_err(|e| e.to_string())?;
    eprintln!("constraint drift {:.3e}", traj.constraint_drift());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            scenario,
            seed,
            samples,
            tolerances,
            out,
            json,
        } => run(&scenario, Overrides { seed, samples, tolerances }, out, json),
        Command::List => {
            for name in bundled::names() {
                println!("{name}");
            }
            0
        }
        Command::Integrate {
            bundle,
            n,
            a,
            b,
            lambda,
            t0,
            t1,
            step,
            out,
        } => match integrate_cmd(&bundle, n, a, b, lambda, t0, t1, step, out) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
    };
    ExitCode::from(code)
}
