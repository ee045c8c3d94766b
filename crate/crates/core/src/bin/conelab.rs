//! Command-line front end: one subcommand per stage plus the full pipeline.

use clap::{Args, Parser, Subcommand};
use conelab::config::parse_config_str;
use conelab::pipeline::{selftest, Check, Pipeline, Report, Stage};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "conelab", version, about = "Two-ended Allen-Cahn layers around Lawson-cone minimal surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the generating curve and its Jacobi coefficients
    Profile(Common),
    /// Invariant Jacobi fields and their asymptotics
    Jacobi(Common),
    /// Lambert-W approximations of the Jacobi-Toda equation
    JtApprox(Common),
    /// Newton solve of the Jacobi-Toda equation
    JtSolve(Common),
    /// Assemble the two-layer field and its residual diagnostics
    AcAssemble(Common),
    /// Energy on balls of the assembled field
    Energy(Common),
    /// All stages
    Pipeline(Common),
    /// Deterministic invariant checks
    Selftest {
        #[arg(long, default_value_t = 20_241_016)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config; flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    smax: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> conelab::Result<conelab::config::RunConfig> {
        let mut obj = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                match serde_json::from_str::<serde_json::Value>(&text)? {
                    serde_json::Value::Object(o) => o,
                    _ => {
                        return Err(conelab::Error::Config { key: "<root>".into(), reason: "expected a JSON object".into() })
                    }
                }
            }
            None => serde_json::Map::new(),
        };
        let mut set = |k: &str, v: Option<serde_json::Value>| {
            if let Some(v) = v {
                obj.insert(k.into(), v);
            }
        };
        set("m", self.m.map(Into::into));
        set("n", self.n.map(Into::into));
        set("eps", self.eps.map(Into::into));
        set("delta", self.delta.map(Into::into));
        set("j", self.j.map(Into::into));
        set("s_max", self.smax.map(Into::into));
        set("tol", self.tol.map(Into::into));
        set("out", self.out.as_ref().map(|p| p.to_string_lossy().into_owned().into()));
        for key in ["m", "n"] {
            if !obj.contains_key(key) {
                return Err(conelab::Error::Config { key: key.into(), reason: "required (flag or config)".into() });
            }
        }
        parse_config_str(&serde_json::Value::Object(obj).to_string())
    }
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}/{}: {:.6e} (tolerance {}; {})", c.stage, c.name, c.value, c.tolerance, c.grid);
    }
}

fn summarize(report: &Report) -> ExitCode {
    print_checks(&report.checks);
    for t in &report.timings {
        let tag = if t.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}/runtime: {:.3} s (limit {} s)", t.stage, t.seconds, t.limit);
    }
    println!("report: {}", report.config.out.join("report.json").display());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> conelab::Result<ExitCode> {
    let (common, stages): (&Common, &[Stage]) = match &cli.command {
        Command::Selftest { seed } => {
            let checks = selftest(*seed)?;
            print_checks(&checks);
            return Ok(if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Profile(c) => (c, &[Stage::Profile]),
        Command::Jacobi(c) => (c, &[Stage::Jacobi]),
        Command::JtApprox(c) => (c, &[Stage::JtApprox]),
        Command::JtSolve(c) => (c, &[Stage::JtSolve]),
        Command::AcAssemble(c) => (c, &[Stage::Field]),
        Command::Energy(c) => (c, &[Stage::Energy]),
        Command::Pipeline(c) => (c, &Stage::ALL),
    };
    let mut pipe = Pipeline::new(common.config()?)?;
    let report = pipe.run(stages)?;
    Ok(summarize(&report))
}

fn main() -> ExitCode {
    if let Ok(t) = std::env::var("CONELAB_THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: CONELAB_THREADS: {e}");
                    return ExitCode::from(2);
                }
            }
            _ => {
                eprintln!("error: CONELAB_THREADS must be a positive integer, got {t:?}");
                return ExitCode::from(2);
            }
        }
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
