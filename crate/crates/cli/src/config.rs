//! Flat `key = value` run configuration.
//!
//! Blank lines and everything after `#` are ignored. Every key must be known;
//! the model keys and `tau_max` are required, the rest have defaults.

use std::collections::BTreeMap;

use ppsim_core::{
    AtomicInit, EnsembleConfig, GaugeConfig, ModelParams, NoiseScheme, Observable, Scheme, StepConfig,
};

use crate::error::CliError;

pub const KEYS: &[&str] = &[
    "n_atoms",
    "n_ph",
    "gamma_over_f",
    "atoms",
    "field_phase",
    "tau_max",
    "dtau",
    "record_every",
    "n_traj",
    "seed",
    "scheme",
    "noise_scheme",
    "runaway_bound",
    "observables",
    "gauge",
    "gauge_k",
    "gauge_x1",
    "gauge_x2",
    "gauge_kappa",
    "cutoff",
    "semi_w0",
    "semi_wdot0",
];

const REQUIRED: &[&str] = &["n_atoms", "n_ph", "gamma_over_f", "atoms", "tau_max"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub ensemble: EnsembleConfig,
    /// Photon cutoff for the exact solvers; derived from `n_ph` when unset.
    pub cutoff: Option<usize>,
    /// Initial inversion for the semiclassical run; the atomic state's when unset.
    pub semi_w0: Option<f64>,
    pub semi_wdot0: f64,
}

fn split_lines(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected `key = value`", no + 1)));
        };
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{key}`", no + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("key `{key}`: cannot parse `{value}`")))
}

struct Lookup(BTreeMap<String, String>);

impl Lookup {
    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        self.0.get(key).map_or(Ok(default), |v| parse_value(key, v))
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.0.get(key).map(|v| parse_value(key, v)).transpose()
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(CliError::Config(format!("key `{key}`: expected on/off, got `{value}`"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let map = split_lines(text)?;
        let unknown: Vec<&str> = map.keys().map(String::as_str).filter(|k| !KEYS.contains(k)).collect();
        if !unknown.is_empty() {
            return Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let missing: Vec<&str> = REQUIRED.iter().copied().filter(|k| !map.contains_key(*k)).collect();
        if !missing.is_empty() {
            return Err(CliError::Config(format!("missing required keys: {}", missing.join(", "))));
        }
        let l = Lookup(map);

        let atoms = match l.raw("atoms").unwrap() {
            "ground" => AtomicInit::AllGround,
            "excited" => AtomicInit::AllExcited,
            other => {
                return Err(CliError::Config(format!(
                    "key `atoms`: expected ground or excited, got `{other}`"
                )))
            }
        };
        let field_phase = l.get("field_phase", 0.0)?;
        let params = ModelParams::new(
            l.get("n_atoms", 0u32)?,
            l.get("gamma_over_f", 0.0)?,
            l.get("n_ph", 0.0)?,
            atoms,
        )
        .and_then(|p| p.with_field_phase(field_phase))
        .map_err(|e| CliError::Config(e.to_string()))?;

        let defaults = EnsembleConfig::default();
        let step_defaults = StepConfig::default();
        let scheme = match l.raw("scheme").unwrap_or("srk2") {
            "srk2" => Scheme::Srk2,
            "euler" => Scheme::EulerMaruyama,
            other => return Err(CliError::Config(format!("key `scheme`: expected srk2 or euler, got `{other}`"))),
        };
        let noise_scheme = match l.raw("noise_scheme").unwrap_or("b") {
            "a" => NoiseScheme::A,
            "b" => NoiseScheme::B,
            other => return Err(CliError::Config(format!("key `noise_scheme`: expected a or b, got `{other}`"))),
        };
        let observables = match l.raw("observables") {
            None => defaults.observables.clone(),
            Some(list) => list
                .split(',')
                .map(|name| {
                    Observable::from_name(name.trim())
                        .ok_or_else(|| CliError::Config(format!("key `observables`: unknown observable `{}`", name.trim())))
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let gauge_defaults = GaugeConfig::default();
        let gauge = GaugeConfig {
            enabled: l.raw("gauge").map_or(Ok(false), |v| parse_bool("gauge", v))?,
            k: l.get("gauge_k", gauge_defaults.k)?,
            x1: l.get("gauge_x1", gauge_defaults.x1)?,
            x2: l.get("gauge_x2", gauge_defaults.x2)?,
            kappa_override: l.opt("gauge_kappa")?,
        };
        let ensemble = EnsembleConfig {
            n_traj: l.get("n_traj", defaults.n_traj)?,
            seed: l.get("seed", defaults.seed)?,
            step: StepConfig {
                dtau: l.get("dtau", step_defaults.dtau)?,
                scheme,
                noise_scheme,
                runaway_bound: l.get("runaway_bound", step_defaults.runaway_bound)?,
            },
            gauge,
            tau_max: l.get("tau_max", defaults.tau_max)?,
            record_every: l.get("record_every", defaults.record_every)?,
            observables,
        };
        ensemble.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let cfg = RunConfig {
            params,
            ensemble,
            cutoff: l.opt("cutoff")?,
            semi_w0: l.opt("semi_w0")?,
            semi_wdot0: l.get("semi_wdot0", 0.0)?,
        };
        if let Some(w0) = cfg.semi_w0 {
            if !w0.is_finite() {
                return Err(CliError::Config("key `semi_w0`: must be finite".into()));
            }
        }
        if !cfg.semi_wdot0.is_finite() {
            return Err(CliError::Config("key `semi_wdot0`: must be finite".into()));
        }
        Ok(cfg)
    }

    /// Every effective setting as `(key, value)`, in [`KEYS`] order. Unset
    /// optional keys are omitted. Parsing the echo gives back `self`.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let e = &self.ensemble;
        let mut out = vec![
            ("n_atoms", p.n_atoms.to_string()),
            ("n_ph", p.n_ph.to_string()),
            ("gamma_over_f", p.gamma_over_f.to_string()),
            (
                "atoms",
                match p.atoms_initial {
                    AtomicInit::AllGround => "ground",
                    AtomicInit::AllExcited => "excited",
                }
                .to_string(),
            ),
            ("field_phase", p.field_phase.to_string()),
            ("tau_max", e.tau_max.to_string()),
            ("dtau", e.step.dtau.to_string()),
            ("record_every", e.record_every.to_string()),
            ("n_traj", e.n_traj.to_string()),
            ("seed", e.seed.to_string()),
            (
                "scheme",
                match e.step.scheme {
                    Scheme::Srk2 => "srk2",
                    Scheme::EulerMaruyama => "euler",
                }
                .to_string(),
            ),
            (
                "noise_scheme",
                match e.step.noise_scheme {
                    NoiseScheme::A => "a",
                    NoiseScheme::B => "b",
                }
                .to_string(),
            ),
            ("runaway_bound", e.step.runaway_bound.to_string()),
            (
                "observables",
                e.observables.iter().map(|o| o.name()).collect::<Vec<_>>().join(","),
            ),
            ("gauge", if e.gauge.enabled { "on" } else { "off" }.to_string()),
            ("gauge_k", e.gauge.k.to_string()),
            ("gauge_x1", e.gauge.x1.to_string()),
            ("gauge_x2", e.gauge.x2.to_string()),
        ];
        if let Some(kappa) = e.gauge.kappa_override {
            out.push(("gauge_kappa", kappa.to_string()));
        }
        if let Some(cutoff) = self.cutoff {
            out.push(("cutoff", cutoff.to_string()));
        }
        if let Some(w0) = self.semi_w0 {
            out.push(("semi_w0", w0.to_string()));
        }
        out.push(("semi_wdot0", self.semi_wdot0.to_string()));
        out
    }

    #[cfg(test)]
    pub fn echo_text(&self) -> String {
        self.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
