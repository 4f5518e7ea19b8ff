use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jostline::Tolerances;

mod commands;
mod records;

#[derive(Parser)]
#[command(
    name = "jostline",
    version,
    about = "Multichannel scattering on a line with distinct end thresholds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transition and scattering matrices with every residual at one energy.
    Scatter(ScatterArgs),
    /// Transmission and reflection probabilities over an energy range.
    Sweep(Common),
    /// Bound-state scan over an energy range.
    Bound(Common),
    /// Runs the identity battery and prints a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
pub struct Common {
    /// Profile document (JSON).
    #[arg(long)]
    pub profile: PathBuf,
    /// Single energy.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Energy range `LO:HI:N` or `LO:HI:N:log`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_range: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Tolerance override `NAME=VALUE`, repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

#[derive(Args)]
struct ScatterArgs {
    #[command(flatten)]
    common: Common,
    /// `ode` integrates the equation; `transfer` uses exact layer propagation
    /// (piecewise-constant profiles only).
    #[arg(long, value_enum, default_value_t = Method::Ode)]
    method: Method,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Perturbs t₁ before the checks run (used to test failure reporting).
    #[arg(long, hide = true)]
    corrupt_s: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ode,
    Transfer,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ode => "ode",
            Method::Transfer => "transfer",
        }
    }
}

/// Parsed energy range.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub log: bool,
}

impl LambdaRange {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            bail!("lambda range must be LO:HI:N or LO:HI:N:log, got {text:?}");
        }
        let lo: f64 = parts[0].parse().with_context(|| format!("bad LO in {text:?}"))?;
        let hi: f64 = parts[1].parse().with_context(|| format!("bad HI in {text:?}"))?;
        let count: usize = parts[2].parse().with_context(|| format!("bad N in {text:?}"))?;
        let log = match parts.get(3) {
            None | Some(&"linear") => false,
            Some(&"log") => true,
            Some(other) => bail!("unknown spacing {other:?}; use log or linear"),
        };
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            bail!("lambda range needs finite LO <= HI, got {lo}:{hi}");
        }
        if count == 0 {
            bail!("lambda range count must be at least 1");
        }
        if log && (lo == 0.0 || hi == 0.0 || lo.signum() != hi.signum()) {
            bail!("log spacing needs LO and HI nonzero and of the same sign");
        }
        Ok(Self { lo, hi, count, log })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                let s = k as f64 / n;
                if k + 1 == self.count {
                    self.hi
                } else if self.log {
                    self.lo * (self.hi / self.lo).powf(s)
                } else {
                    self.lo + (self.hi - self.lo) * s
                }
            })
            .collect()
    }
}

impl Common {
    pub fn tolerances(&self) -> Result<Tolerances> {
        self.parse_tolerances().map_err(as_usage)
    }

    fn parse_tolerances(&self) -> Result<Tolerances> {
        let mut tol = Tolerances::default();
        for item in &self.tol {
            let (name, value) = item
                .split_once('=')
                .with_context(|| format!("tolerance override must be NAME=VALUE, got {item:?}"))?;
            let value: f64 = value.parse().with_context(|| format!("bad value in {item:?}"))?;
            tol.set(name.trim(), value)?;
        }
        Ok(tol)
    }

    pub fn range(&self) -> Result<Option<LambdaRange>> {
        self.lambda_range
            .as_deref()
            .map(LambdaRange::parse)
            .transpose()
            .map_err(as_usage)
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(k) = self.threads {
            b = b.num_threads(k.max(1));
        }
        Ok(b.build()?)
    }
}

fn as_usage(e: anyhow::Error) -> anyhow::Error {
    commands::Usage(format!("{e:#}")).into()
}

/// Exit codes: 0 success, 1 failed checks or other errors, 2 invalid input,
/// 3 energy at a threshold or singular `Φ₊`.
fn exit_code(err: &anyhow::Error) -> u8 {
    use jostline::Error as E;
    if err.downcast_ref::<commands::ChecksFailed>().is_some() {
        return 1;
    }
    match err.downcast_ref::<E>() {
        Some(E::InvalidProfile(_) | E::Config(_) | E::DegenerateThresholds { .. } | E::Invalid(_)) => 2,
        Some(E::AtThreshold { .. } | E::SingularPhiPlus { .. }) => 3,
        Some(_) => 1,
        None if err.downcast_ref::<commands::Usage>().is_some() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scatter(a) => commands::scatter(&a.common, a.method),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Bound(a) => commands::bound(&a),
        Command::Verify(a) => commands::verify(&a.common, a.corrupt_s),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse_and_space() {
        let r = LambdaRange::parse("-5:-0.1:101").unwrap();
        let p = r.points();
        assert_eq!(p.len(), 101);
        assert_eq!((p[0], p[100]), (-5.0, -0.1));
        let r = LambdaRange::parse("-1e4:-1e2:3:log").unwrap();
        let p = r.points();
        assert!((p[1] + 1e3).abs() < 1e-9);
        assert!(LambdaRange::parse("-1:1:5:log").is_err());
        assert!(LambdaRange::parse("0:1:0").is_err());
        assert!(LambdaRange::parse("2:1:3").is_err());
        assert_eq!(LambdaRange::parse("0.5:0.5:1").unwrap().points(), vec![0.5]);
    }
}
