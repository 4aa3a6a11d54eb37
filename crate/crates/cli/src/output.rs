//! CSV and JSON writers.

use std::path::Path;

use ppsim_core::{EnsembleResult, Estimate};
use serde_json::Value;

use crate::error::CliError;

/// Version tag of the statistics CSV layout, recorded in every summary.
pub const CSV_SCHEMA: &str = "ppsim-stats/1";

/// Decimal notation with 12 significant digits, no exponent.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Rounding is done by the exponent formatter; only the point moves.
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else if (exp as usize) < digits.len() - 1 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("{}{}", digits, "0".repeat(exp as usize + 1 - digits.len()))
    };
    format!("{sign}{body}")
}

fn estimate_cells(e: &Estimate) -> [String; 4] {
    [fmt_sig(e.mean.re), fmt_sig(e.mean.im), fmt_sig(e.stderr_re), fmt_sig(e.stderr_im)]
}

const PARTS: [&str; 4] = ["mean_re", "mean_im", "stderr_re", "stderr_im"];

pub fn stats_header(result: &EnsembleResult) -> Vec<String> {
    let mut header = vec!["tau".to_string()];
    for s in &result.series {
        header.extend(PARTS.iter().map(|p| format!("{}_{p}", s.observable.name())));
    }
    header.push("alive_fraction".into());
    for s in result.series.iter().filter(|s| s.weighted.is_some()) {
        header.extend(PARTS.iter().map(|p| format!("{}_weighted_{p}", s.observable.name())));
    }
    header
}

pub fn write_stats_csv(path: &Path, result: &EnsembleResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(stats_header(result))?;
    for (k, tau) in result.taus.iter().enumerate() {
        let mut row = vec![fmt_sig(*tau)];
        for s in &result.series {
            row.extend(estimate_cells(&s.masked[k]));
        }
        row.push(fmt_sig(result.alive_fraction[k]));
        for s in &result.series {
            if let Some(weighted) = &s.weighted {
                row.extend(estimate_cells(&weighted[k]));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes named columns of equal length.
pub fn write_columns_csv(path: &Path, columns: &[(&str, &[f64])]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(columns.iter().map(|c| c.0))?;
    let rows = columns.first().map_or(0, |c| c.1.len());
    for k in 0..rows {
        w.write_record(columns.iter().map(|c| fmt_sig(c.1[k])))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON numbers cannot hold infinities; those become `null`.
pub fn json_number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
