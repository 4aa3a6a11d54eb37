//! Pointwise comparison of a stochastic statistics CSV with a reference CSV.
//!
//! The reference is either an exact curve (`p_e` / `photons` columns) or
//! another statistics CSV, in which case both standard errors combine.

use std::collections::HashMap;
use std::path::Path;

use crate::error::CliError;

pub const VIOLATION_SIGMA: f64 = 3.0;

struct Table {
    columns: HashMap<String, Vec<f64>>,
}

impl Table {
    fn read(path: &Path) -> Result<Table, CliError> {
        let mut r = csv::Reader::from_path(path)
            .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut cols = vec![Vec::new(); names.len()];
        for (line, record) in r.records().enumerate() {
            let record = record?;
            for (i, cell) in record.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    CliError::Other(format!("{}: row {}: bad number `{cell}`", path.display(), line + 2))
                })?;
                cols[i].push(v);
            }
        }
        Ok(Table {
            columns: names.into_iter().zip(cols).collect(),
        })
    }

    fn column(&self, name: &str, path: &Path) -> Result<&[f64], CliError> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| CliError::Other(format!("{}: no column `{name}`", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub points: usize,
    pub max_deviation_sigma: f64,
    pub tau_at_max: Option<f64>,
    pub first_violation_tau: Option<f64>,
}

/// Exact-solver column that corresponds to a stochastic observable.
fn exact_column(observable: &str) -> Option<&'static str> {
    match observable {
        "rho_ee" => Some("p_e"),
        "photon_proxy" => Some("photons"),
        _ => None,
    }
}

pub fn compare(
    stochastic: &Path,
    reference: &Path,
    observable: &str,
    weighted: bool,
    tau_limit: Option<f64>,
) -> Result<Report, CliError> {
    let sto = Table::read(stochastic)?;
    let refr = Table::read(reference)?;
    let prefix = if weighted {
        format!("{observable}_weighted")
    } else {
        observable.to_string()
    };
    let taus = sto.column("tau", stochastic)?;
    let mean = sto.column(&format!("{prefix}_mean_re"), stochastic)?;
    let se = sto.column(&format!("{prefix}_stderr_re"), stochastic)?;
    let ref_taus = refr.column("tau", reference)?;
    let (ref_mean, ref_se): (&[f64], Option<&[f64]>) = if refr.columns.contains_key(&format!("{prefix}_mean_re")) {
        (
            refr.column(&format!("{prefix}_mean_re"), reference)?,
            Some(refr.column(&format!("{prefix}_stderr_re"), reference)?),
        )
    } else {
        let name = exact_column(observable)
            .ok_or_else(|| CliError::Other(format!("no exact counterpart for `{observable}`")))?;
        (refr.column(name, reference)?, None)
    };
    if ref_taus.len() != taus.len() {
        return Err(CliError::Other(format!(
            "grids differ in length: {} vs {}",
            taus.len(),
            ref_taus.len()
        )));
    }

    let mut report = Report {
        points: 0,
        max_deviation_sigma: 0.0,
        tau_at_max: None,
        first_violation_tau: None,
    };
    for k in 0..taus.len() {
        if (taus[k] - ref_taus[k]).abs() > 1e-9 * (1.0 + taus[k].abs()) {
            return Err(CliError::Other(format!("grids differ at row {}: {} vs {}", k + 2, taus[k], ref_taus[k])));
        }
        if tau_limit.is_some_and(|limit| taus[k] >= limit) {
            break;
        }
        // Points without alive trajectories carry no information.
        if mean[k].is_nan() {
            continue;
        }
        report.points += 1;
        let sigma = (se[k].powi(2) + ref_se.map_or(0.0, |s| s[k].powi(2))).sqrt();
        let d = (mean[k] - ref_mean[k]).abs();
        // Differences below the 12-digit CSV precision count as exact agreement.
        let z = if d <= 1e-12 * ref_mean[k].abs().max(1.0) {
            0.0
        } else if sigma > 0.0 {
            d / sigma
        } else {
            f64::INFINITY
        };
        if z > report.max_deviation_sigma {
            report.max_deviation_sigma = z;
            report.tau_at_max = Some(taus[k]);
        }
        if z > VIOLATION_SIGMA && report.first_violation_tau.is_none() {
            report.first_violation_tau = Some(taus[k]);
        }
    }
    Ok(report)
}
