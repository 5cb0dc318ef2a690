//! Subcommands and their output.

use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

use fiberdd::config::{config_to_value, parse_config_with_overrides};
use fiberdd::engine::realization_seed;
use fiberdd::output::{real, write_atomic};
use fiberdd::sweep::{
    free_decay_curve, sweep_contour, sweep_waveplate_count, SweepResult, SweepSettings,
};
use fiberdd::waveplate::{flip_angle_error, write_profile_csv, RefractiveIndexProfile};
use fiberdd::{generate_profile, run_ensemble, EnsembleResult, Error, SimConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let config = match &e {
            Error::InvalidArgument(_) => true,
            Error::Cell { source, .. } => {
                source.is_config_error() || matches!(**source, Error::InvalidArgument(_))
            }
            other => other.is_config_error(),
        };
        if config {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

/// Monte Carlo simulator for dynamical decoupling of polarization qubits in fiber.
#[derive(Debug, Parser)]
#[command(name = "fiberdd", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON configuration file (missing keys take defaults)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output file; `.json` writes JSON with provenance, anything else CSV.
    /// Without it, data goes to standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Override the configured master seed
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Worker thread cap (results do not depend on it)
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Config override, e.g. `--set noise.sigma_dphi=0.05` (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Reuse the same noise realizations in every sweep cell
    #[arg(long, global = true)]
    pub common_random_numbers: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one ensemble
    Run,
    /// Sweep the number of waveplates
    SweepWaveplates {
        #[arg(long, value_delimiter = ',', default_value = "4,40,400,4000")]
        counts: Vec<usize>,
    },
    /// Grid over noise strength and direct flip-angle error
    SweepContour {
        /// Per-segment phase standard deviations, radians
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3"
        )]
        sigma_dphi: Vec<f64>,
        /// Flip-angle error fractions of π
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,0.05,0.1,0.2,0.3,0.4,0.5"
        )]
        epsilon: Vec<f64>,
    },
    /// Free-evolution fidelity against fiber length
    FreeDecay {
        /// Fiber lengths in meters, ascending
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "1000,2000,3000,4000,5000,6000,7000,8000,9000,10000"
        )]
        lengths: Vec<f64>,
    },
    /// Dump a waveplate index profile (`x,delta_N`) or a birefringence realization
    DumpProfile {
        /// gaussian | rectangular | tanh | ideal (defaults to the configured plate)
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        width: Option<f64>,
        /// Dump noise realization I of the configured ensemble instead
        #[arg(long, value_name = "I", conflicts_with_all = ["profile", "a", "x0", "sigma", "width"])]
        noise_realization: Option<usize>,
    },
    /// Dump the waveplate schedule (`index,position_m,axis`)
    DumpSchedule,
}

fn load_config(global: &GlobalArgs) -> Result<SimConfig, CliError> {
    let text = match &global.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = global.overrides.clone();
    if let Some(seed) = global.seed {
        overrides.push(format!("master_seed={seed}"));
    }
    Ok(parse_config_with_overrides(&text, &overrides)?)
}

fn is_json(path: Option<&Path>) -> bool {
    path.and_then(|p| p.extension())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, bytes)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

/// Summary goes to stdout unless stdout carries the data.
fn summary(path: Option<&Path>, line: String) {
    if path.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn run_csv(r: &EnsembleResult) -> String {
    let m = r.rho_out.entries();
    let mut s = String::from(
        "fidelity,std_error,realizations,rho_hh_re,rho_hh_im,rho_hv_re,rho_hv_im,rho_vh_re,rho_vh_im,rho_vv_re,rho_vv_im\n",
    );
    s.push_str(&format!(
        "{},{},{}",
        real(r.fidelity),
        real(r.fidelity_std_error),
        r.realizations
    ));
    for row in m {
        for c in row {
            s.push_str(&format!(",{},{}", real(c.re), real(c.im)));
        }
    }
    s.push('\n');
    s
}

fn run_json(config: &SimConfig, r: &EnsembleResult) -> String {
    let m = r.rho_out.entries();
    let rho: Vec<Vec<[f64; 2]>> = m
        .iter()
        .map(|row| row.iter().map(|c| [c.re, c.im]).collect())
        .collect();
    let v = serde_json::json!({
        "result": {
            "fidelity": r.fidelity,
            "std_error": r.fidelity_std_error,
            "realizations": r.realizations,
            "rho_out": rho,
        },
        "provenance": {
            "master_seed": config.master_seed,
            "config": config_to_value(config),
        },
    });
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}

fn sweep_bytes(result: &SweepResult, path: Option<&Path>) -> Result<Vec<u8>, CliError> {
    if is_json(path) {
        Ok((serde_json::to_string_pretty(&result.to_json()).unwrap() + "\n").into_bytes())
    } else {
        let mut buf = Vec::new();
        result.write_csv(&mut buf)?;
        Ok(buf)
    }
}

fn sweep_summary(result: &SweepResult, started: Instant) -> String {
    let (lo, hi) = result
        .cells
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c.fidelity), hi.max(c.fidelity))
        });
    format!(
        "{} cells, fidelity in [{lo:.6}, {hi:.6}] ({:.2} s)",
        result.cells.len(),
        started.elapsed().as_secs_f64()
    )
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let out = g.output.as_deref();
    let config = load_config(g)?;
    let settings = SweepSettings {
        common_random_numbers: g.common_random_numbers,
    };
    let started = Instant::now();
    match &cli.command {
        Command::Run => {
            let r = run_ensemble(&config)?;
            let bytes = if is_json(out) {
                run_json(&config, &r)
            } else {
                run_csv(&r)
            };
            emit(out, bytes.as_bytes())?;
            summary(
                out,
                format!(
                    "fidelity = {:.6} ± {:.6} (n = {}, {:.2} s)",
                    r.fidelity,
                    r.fidelity_std_error,
                    r.realizations,
                    started.elapsed().as_secs_f64()
                ),
            );
        }
        Command::SweepWaveplates { counts } => {
            let r = sweep_waveplate_count(&config, counts, settings)?;
            emit(out, &sweep_bytes(&r, out)?)?;
            summary(out, sweep_summary(&r, started));
        }
        Command::SweepContour {
            sigma_dphi,
            epsilon,
        } => {
            let r = sweep_contour(&config, sigma_dphi, epsilon, settings)?;
            emit(out, &sweep_bytes(&r, out)?)?;
            summary(out, sweep_summary(&r, started));
        }
        Command::FreeDecay { lengths } => {
            let r = free_decay_curve(&config, lengths, settings)?;
            emit(out, &sweep_bytes(&r, out)?)?;
            summary(out, sweep_summary(&r, started));
        }
        Command::DumpProfile {
            profile,
            a,
            x0,
            sigma,
            width,
            noise_realization,
        } => {
            let mut buf = Vec::new();
            if let Some(i) = noise_realization {
                let p = generate_profile(
                    &config.noise,
                    config.fiber_length,
                    realization_seed(config.master_seed, *i),
                )?;
                p.write_csv(&mut buf)?;
                emit(out, &buf)?;
                summary(out, format!("realization {i}: {} segments", p.len()));
            } else {
                let mut plate = config.waveplate;
                if let Some(name) = profile {
                    plate.profile = match name.to_ascii_lowercase().as_str() {
                        "gaussian" => RefractiveIndexProfile::Gaussian {
                            x0: 1.0,
                            sigma: 1.8,
                        },
                        "rectangular" => RefractiveIndexProfile::Rectangular,
                        "tanh" => RefractiveIndexProfile::Tanh { a: 8.0 },
                        "ideal" => RefractiveIndexProfile::Ideal,
                        other => {
                            return Err(CliError::Config(format!("unknown profile `{other}`")))
                        }
                    };
                }
                match &mut plate.profile {
                    RefractiveIndexProfile::Gaussian { x0: px0, sigma: ps } => {
                        *px0 = x0.unwrap_or(*px0);
                        *ps = sigma.unwrap_or(*ps);
                    }
                    RefractiveIndexProfile::Tanh { a: pa } => *pa = a.unwrap_or(*pa),
                    _ => {}
                }
                plate.width = width.unwrap_or(plate.width);
                write_profile_csv(&plate.profile, plate.width, &mut buf)?;
                emit(out, &buf)?;
                summary(
                    out,
                    format!(
                        "{} profile, flip-angle error {:.6} rad",
                        plate.profile.name(),
                        flip_angle_error(&plate)?
                    ),
                );
            }
        }
        Command::DumpSchedule => {
            let s = config.schedule()?;
            let mut buf = Vec::new();
            s.write_csv(&mut buf)?;
            emit(out, &buf)?;
            summary(
                out,
                format!(
                    "{} schedule: {} waveplates, tau = {} m",
                    s.kind,
                    s.len(),
                    s.tau
                ),
            );
        }
    }
    Ok(())
}
