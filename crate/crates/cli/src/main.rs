//! `psa`: batch front end for the partial-wave analysis library.
//!
//! Every command writes its results and a `<command>.manifest.json` into
//! `--out`. Exit codes: 0 success, 1 runtime failure, 2 bad input or
//! parameters, 3 no solution, 4 invalid cross section, 5 too many
//! solutions, 6 phase iterate left the principal branch.

mod io;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use psa_core::amplitude::{cross_section_coefficients, waves_from_shifts, AngularFunction};
use psa_core::enumerator::scan::{scan, ScanConfig};
use psa_core::enumerator::{descend, DescentConfig};
use psa_core::legendre::gauss_rule;
use psa_core::phase_solver::{contraction_sup, fixed_point_iterate};
use psa_core::regularize::{extend_amplitude, order_estimate, OrderEstimate, OrderFlag, TailCoefficients};
use psa_core::{CrossSectionCoefficients64, Error, PartialWaves64, PhaseShifts64};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use io::{read_angular, read_json, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "psa", version, about = "Elastic partial-wave analysis at fixed energy")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase shifts to Legendre coefficients and a cross-section grid.
    Forward {
        delta: PathBuf,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
    },
    /// Every unitary amplitude reproducing a cross section.
    Enumerate {
        xsec: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1024)]
        max_solutions: usize,
        #[arg(long)]
        no_sigma_prune: bool,
    },
    /// Phase of the amplitude from its modulus by fixed-point iteration.
    PhaseSolve {
        modulus: PathBuf,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Contraction ratio sup F(13)F(23)/F(12).
    Contraction {
        modulus: PathBuf,
        #[arg(long, default_value_t = 40)]
        grid: usize,
    },
    /// Append the unitary tail to an amplitude.
    Regularize {
        delta: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long)]
        lmax: Option<usize>,
    },
    /// Order of an entire function from its expansion coefficients.
    Order {
        coeffs: PathBuf,
        #[arg(long, default_value_t = 20)]
        window: usize,
    },
    /// Sample phase shifts and locate multi-solution cross sections.
    Scan {
        #[arg(long = "L")]
        max_l: usize,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// A failed command: exit code plus message.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            error: anyhow::anyhow!(msg.into()),
        }
    }

    pub fn io(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::NonpositiveF { .. } | Error::AllZeroWindow => 2,
            Error::InvalidCrossSection(_) => 4,
            Error::SolutionOverflow { .. } => 5,
            Error::SinOutOfRange { .. } => 6,
            _ => 1,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoefficientFile {
    Bare(Vec<f64>),
    Keyed { coeffs: Vec<f64> },
}

#[derive(Serialize)]
struct Extended<'a> {
    #[serde(flatten)]
    tail: &'a TailCoefficients<f64>,
    #[serde(flatten)]
    waves: &'a PartialWaves64,
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn positive(name: &str, value: f64) -> Result<(), Failure> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!("--{name} must be a positive number, got {value}")))
    }
}

fn nonzero(name: &str, value: usize) -> Result<(), Failure> {
    if value == 0 {
        Err(Failure::usage(format!("--{name} must be at least 1")))
    } else {
        Ok(())
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let start = Instant::now();
    let mut out = OutputDir::create(&cli.out)?;
    let elapsed = || start.elapsed().as_secs_f64();
    match cli.command {
        Command::Forward { delta, nodes } => {
            nonzero("nodes", nodes)?;
            let shifts: PhaseShifts64 = read_json(&delta)?;
            if shifts.delta.is_empty() {
                return Err(Failure::usage(format!("{}: delta must not be empty", delta.display())));
            }
            let w = waves_from_shifts(&shifts);
            let c = cross_section_coefficients(&w);
            let grid = AngularFunction::cross_section(&w, gauss_rule(nodes)?);
            out.json("xsec.json", &c)?;
            out.csv(
                "xsec_grid.csv",
                ["cos_theta", "F2"],
                grid.rule.nodes.iter().copied().zip(grid.values.iter().copied()),
            )?;
            out.finish("forward", vec![path_string(&delta)], params(&[("nodes", json!(nodes))]), elapsed())?;
            Ok(0)
        }
        Command::Enumerate {
            xsec,
            tol,
            max_solutions,
            no_sigma_prune,
        } => {
            positive("tol", tol)?;
            nonzero("max-solutions", max_solutions)?;
            let c: CrossSectionCoefficients64 = read_json(&xsec)?;
            let cfg = DescentConfig {
                tol_residual: tol,
                max_solutions,
                prune_by_sigma: !no_sigma_prune,
                ..DescentConfig::default()
            };
            let set = descend(&c, &cfg)?;
            out.json("solutions.json", &set)?;
            out.finish(
                "enumerate",
                vec![path_string(&xsec)],
                params(&[
                    ("tol", json!(tol)),
                    ("max_solutions", json!(max_solutions)),
                    ("sigma_prune", json!(!no_sigma_prune)),
                ]),
                elapsed(),
            )?;
            if set.is_empty() {
                eprintln!("no unitary amplitude reproduces this cross section");
                Ok(3)
            } else {
                Ok(0)
            }
        }
        Command::PhaseSolve { modulus, max_iter, tol } => {
            nonzero("max-iter", max_iter)?;
            positive("tol", tol)?;
            let f = read_angular(&modulus)?;
            let sol = fixed_point_iterate(&f, max_iter, tol)?;
            out.csv(
                "phi.csv",
                ["cos_theta", "value"],
                sol.phase.rule.nodes.iter().copied().zip(sol.phase.phi.iter().copied()),
            )?;
            out.json("trace.json", &sol.trace)?;
            out.finish(
                "phase-solve",
                vec![path_string(&modulus)],
                params(&[("max_iter", json!(max_iter)), ("tol", json!(tol))]),
                elapsed(),
            )?;
            if sol.trace.converged {
                Ok(0)
            } else {
                let last = sol.trace.changes.last().copied().unwrap_or(f64::NAN);
                Err(Error::MaxIterExceeded {
                    iters: sol.trace.iters,
                    last_change: last,
                }
                .into())
            }
        }
        Command::Contraction { modulus, grid } => {
            let f = read_angular(&modulus)?;
            let report = contraction_sup(&f, grid)?;
            out.json("report.json", &report)?;
            out.finish("contraction", vec![path_string(&modulus)], params(&[("grid", json!(grid))]), elapsed())?;
            Ok(0)
        }
        Command::Regularize { delta, lambda, lmax } => {
            let shifts: PhaseShifts64 = read_json(&delta)?;
            let w = waves_from_shifts(&shifts);
            let (ext, tail) = extend_amplitude(&w, lambda, lmax)?;
            out.json("extended.json", &Extended { tail: &tail, waves: &ext })?;
            out.finish(
                "regularize",
                vec![path_string(&delta)],
                params(&[("lambda", json!(lambda)), ("lmax", json!(lmax))]),
                elapsed(),
            )?;
            Ok(0)
        }
        Command::Order { coeffs, window } => {
            let a = match read_json::<CoefficientFile>(&coeffs)? {
                CoefficientFile::Bare(v) | CoefficientFile::Keyed { coeffs: v } => v,
            };
            let est = match order_estimate(&a, window) {
                Err(Error::AllZeroWindow) => OrderEstimate {
                    rho: 0.0,
                    ratios: Vec::new(),
                    ells: Vec::new(),
                    window,
                    flag: OrderFlag::AllZero,
                },
                other => other?,
            };
            out.json("order.json", &est)?;
            out.finish("order", vec![path_string(&coeffs)], params(&[("window", json!(window))]), elapsed())?;
            Ok(0)
        }
        Command::Scan { max_l, grid, seed } => {
            nonzero("L", max_l)?;
            nonzero("grid", grid)?;
            let atlas = scan(&ScanConfig::<f64>::new(max_l, grid, seed))?;
            out.json("ambiguity_atlas.json", &atlas)?;
            out.finish(
                "scan",
                Vec::new(),
                params(&[("L", json!(max_l)), ("grid", json!(grid)), ("seed", json!(seed))]),
                elapsed(),
            )?;
            Ok(0)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("PSA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("PSA_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::io(e.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
