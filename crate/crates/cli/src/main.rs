mod compare;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use ppsim_core::exact::{closed_evolve_with_cutoff, open_evolve_with, OpenOptions};
use ppsim_core::gauge::modified_potential;
use ppsim_core::semiclassics::{barrier, effective_potential, inversion_ode_evolve};
use ppsim_core::{
    closed_evolve, fit_singularity_exponent, initial_state, run_ensemble, total_energy, ExactError,
};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{json_number, write_columns_csv, write_json, write_stats_csv, CSV_SCHEMA};

#[derive(Parser)]
#[command(name = "ppsim", version, about = "Positive-P simulations of the Tavis-Cummings model")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the ensemble.
    #[arg(long, global = true, env = "PPSIM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stochastic ensemble; writes simulate.csv and simulate.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Closed-system exact reference; writes exact_closed.csv.
    ExactClosed {
        #[arg(long)]
        config: PathBuf,
    },
    /// Open-system exact reference (at most 6 atoms); writes exact_open.csv.
    ExactOpen {
        #[arg(long)]
        config: PathBuf,
    },
    /// Noise-free inversion equation for the configured initial state.
    Semiclassical {
        #[arg(long)]
        config: PathBuf,
    },
    /// Samples the (gauge-modified) effective potential.
    Potential {
        #[arg(long, allow_hyphen_values = true)]
        energy: f64,
        #[arg(long, default_value_t = 0.0)]
        kappa: f64,
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        w_min: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        w_max: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Deviation of a statistics CSV from a reference CSV, in standard errors.
    Compare {
        #[arg(long)]
        stochastic: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value = "rho_ee")]
        observable: String,
        /// Use the weighted columns of the stochastic file.
        #[arg(long)]
        weighted: bool,
        /// Only grid points with tau below this value are compared.
        #[arg(long)]
        tau_limit: Option<f64>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = seed {
        cfg.ensemble.seed = seed;
    }
    Ok(cfg)
}

fn exact_error(e: ExactError) -> CliError {
    match e {
        ExactError::UnsupportedSize { .. } | ExactError::CutoffOverflow { .. } | ExactError::Model(_) => {
            CliError::Config(e.to_string())
        }
        ExactError::InvalidGrid => CliError::Other(e.to_string()),
    }
}

struct Run<'a> {
    command: &'static str,
    out: &'a Path,
    started: Instant,
    outputs: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(command: &'static str, out: &'a Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(out)?;
        Ok(Run {
            command,
            out,
            started: Instant::now(),
            outputs: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    /// Writes `<command>.json` with the manifest merged into `fields`.
    fn finish(mut self, seed: Option<u64>, cfg: Option<&RunConfig>, mut fields: Map<String, Value>) -> Result<(), CliError> {
        let json_name = format!("{}.json", self.command.replace('-', "_"));
        let json_path = self.path(&json_name);
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        if let Some(cfg) = cfg {
            let echo: Map<String, Value> = cfg.echo().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
            fields.insert("config".into(), Value::Object(echo));
        }
        fields.insert(
            "manifest".into(),
            json!({
                "run_id": format!("{}-{}-{}", self.command, seed.unwrap_or(0), started),
                "command": self.command,
                "code_version": env!("CARGO_PKG_VERSION"),
                "seed": seed,
                "wall_clock_s": self.started.elapsed().as_secs_f64(),
                "outputs": self.outputs,
            }),
        );
        write_json(&json_path, &Value::Object(fields))
    }
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut run = Run::new("simulate", out)?;
    let result = run_ensemble(&cfg.params, &cfg.ensemble).map_err(|e| CliError::Other(e.to_string()))?;
    let csv_path = run.path("simulate.csv");
    write_stats_csv(&csv_path, &result)?;
    let final_alive = *result.alive_fraction.last().unwrap();
    eprintln!(
        "{} trajectories, threshold_time {}, final alive fraction {final_alive}",
        result.n_traj, result.threshold_time
    );
    let mut fields = Map::new();
    fields.insert("csv_schema".into(), json!(CSV_SCHEMA));
    fields.insert("threshold_time".into(), json_number(result.threshold_time));
    fields.insert("final_alive_fraction".into(), json!(final_alive));
    fields.insert("diverged".into(), json!(result.diverged_count()));
    fields.insert("n_traj".into(), json!(result.n_traj));
    run.finish(Some(cfg.ensemble.seed), Some(cfg), fields)?;
    if result.alive_fraction.get(1).is_some_and(|a| *a == 0.0) {
        return Err(CliError::AllDiverged);
    }
    Ok(())
}

fn exact_closed(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut run = Run::new("exact-closed", out)?;
    if cfg.params.gamma_over_f != 0.0 {
        return Err(CliError::Config("key `gamma_over_f`: the closed solver needs 0, use exact-open".into()));
    }
    let taus = cfg.ensemble.record_taus();
    let s = match cfg.cutoff {
        Some(c) => closed_evolve_with_cutoff(&cfg.params, &taus, c),
        None => closed_evolve(&cfg.params, &taus),
    }
    .map_err(exact_error)?;
    let path = run.path("exact_closed.csv");
    write_columns_csv(&path, &[("tau", &s.taus), ("p_e", &s.p_e), ("photons", &s.photons)])?;
    let mut fields = Map::new();
    fields.insert("cutoff".into(), json!(s.cutoff));
    run.finish(None, Some(cfg), fields)
}

fn exact_open(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut run = Run::new("exact-open", out)?;
    let taus = cfg.ensemble.record_taus();
    let opts = OpenOptions {
        cutoff: cfg.cutoff,
        ..OpenOptions::default()
    };
    let s = open_evolve_with(&cfg.params, &taus, &opts).map_err(exact_error)?;
    let path = run.path("exact_open.csv");
    write_columns_csv(&path, &[("tau", &s.taus), ("p_e", &s.p_e), ("photons", &s.photons)])?;
    let mut fields = Map::new();
    fields.insert("cutoff".into(), json!(s.cutoff));
    fields.insert("max_trace_deviation".into(), json_number(s.max_trace_deviation));
    fields.insert("max_hermiticity_deviation".into(), json_number(s.max_hermiticity_deviation));
    fields.insert("min_eigenvalue".into(), json_number(s.min_eigenvalue));
    run.finish(None, Some(cfg), fields)
}

fn semiclassical(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut run = Run::new("semiclassical", out)?;
    let s0 = initial_state(&cfg.params);
    let energy = total_energy(&s0, &cfg.params).re;
    let w0 = cfg.semi_w0.unwrap_or(s0.inversion().re);
    let kappa = if cfg.ensemble.gauge.enabled {
        cfg.ensemble.gauge.kappa_override.unwrap_or(0.0)
    } else {
        0.0
    };
    let bound = cfg.ensemble.step.runaway_bound;
    let taus = cfg.ensemble.record_taus();
    let s = inversion_ode_evolve(w0, cfg.semi_wdot0, energy, kappa, &taus, bound);
    let h: Vec<f64> = s
        .w
        .iter()
        .zip(&s.wdot)
        .map(|(w, v)| 0.5 * v * v + modified_potential(*w, energy, kappa))
        .collect();
    let path = run.path("semiclassical.csv");
    write_columns_csv(&path, &[("tau", &s.taus), ("w", &s.w), ("wdot", &s.wdot), ("h", &h)])?;
    let (wb, ub) = barrier(energy);
    let fit = s.blow_up.and_then(|_| {
        let mags: Vec<f64> = s.w.iter().map(|w| w.abs()).collect();
        fit_singularity_exponent(&s.taus, &mags, bound).ok()
    });
    let mut fields = Map::new();
    fields.insert("energy".into(), json!(energy));
    fields.insert("w0".into(), json!(w0));
    fields.insert("wdot0".into(), json!(cfg.semi_wdot0));
    fields.insert("kappa".into(), json!(kappa));
    fields.insert("h_w".into(), json!(h.first().copied().unwrap_or(f64::NAN)));
    fields.insert("barrier".into(), json!({ "w": wb, "u": ub }));
    fields.insert("blow_up_tau".into(), s.blow_up.map_or(Value::Null, json_number));
    fields.insert(
        "fit".into(),
        fit.map_or(Value::Null, |f| {
            json!({ "exponent": f.exponent, "tau_s": f.tau_s, "points": f.points, "rms_residual": f.rms_residual })
        }),
    );
    run.finish(None, Some(cfg), fields)
}

fn potential(energy: f64, kappa: f64, w_min: f64, w_max: f64, points: usize, out: &Path) -> Result<(), CliError> {
    if !(energy.is_finite() && kappa.is_finite() && kappa >= 0.0) {
        return Err(CliError::Config("energy must be finite and kappa finite and nonnegative".into()));
    }
    if !(w_min.is_finite() && w_max.is_finite() && w_min < w_max && points >= 2) {
        return Err(CliError::Config("need w_min < w_max and at least 2 points".into()));
    }
    let mut run = Run::new("potential", out)?;
    let mut w: Vec<f64> = (0..points)
        .map(|i| w_min + (w_max - w_min) * i as f64 / (points - 1) as f64)
        .collect();
    if w_min < 0.0 && w_max > 0.0 && !w.contains(&0.0) {
        let at = w.partition_point(|x| *x < 0.0);
        w.insert(at, 0.0);
    }
    let u: Vec<f64> = w.iter().map(|x| modified_potential(*x, energy, kappa)).collect();
    let u0: Vec<f64> = w.iter().map(|x| effective_potential(*x, energy)).collect();
    let path = run.path("potential.csv");
    write_columns_csv(&path, &[("w", &w), ("u", &u), ("u_bare", &u0)])?;
    let q = kappa / 8.0;
    let mut fields = Map::new();
    fields.insert("energy".into(), json!(energy));
    fields.insert("kappa".into(), json!(kappa));
    fields.insert(
        "coefficients".into(),
        json!({ "linear": 1.0 + q, "quadratic": 2.0 * energy - q, "cubic": -(1.0 - q), "quartic": kappa / 32.0 }),
    );
    run.finish(None, None, fields)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { config } => simulate(&load(&config, cli.seed)?, &cli.out),
        Command::ExactClosed { config } => exact_closed(&load(&config, cli.seed)?, &cli.out),
        Command::ExactOpen { config } => exact_open(&load(&config, cli.seed)?, &cli.out),
        Command::Semiclassical { config } => semiclassical(&load(&config, cli.seed)?, &cli.out),
        Command::Potential {
            energy,
            kappa,
            w_min,
            w_max,
            points,
        } => potential(energy, kappa, w_min, w_max, points, &cli.out),
        Command::Compare {
            stochastic,
            reference,
            observable,
            weighted,
            tau_limit,
        } => {
            let run = Run::new("compare", &cli.out)?;
            let r = compare::compare(&stochastic, &reference, &observable, weighted, tau_limit)?;
            let report = json!({
                "observable": observable,
                "weighted": weighted,
                "points": r.points,
                "max_deviation_sigma": json_number(r.max_deviation_sigma),
                "tau_at_max": r.tau_at_max,
                "violation_sigma": compare::VIOLATION_SIGMA,
                "first_violation_tau": r.first_violation_tau,
            });
            println!("{}", serde_json::to_string(&report)?);
            let Value::Object(fields) = report else { unreachable!() };
            run.finish(None, None, fields)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ppsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
