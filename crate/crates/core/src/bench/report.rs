//! CSV and JSON output of metric rows.
//!
//! The CSV schema is fixed; columns that do not apply to an experiment are
//! left empty.

use std::io::Write;

use super::metrics::MetricRow;
use crate::Result;

pub const CSV_COLUMNS: [&str; 17] = [
    "experiment",
    "codec",
    "bits",
    "b_dir",
    "b_nrm",
    "rounding",
    "seeds",
    "cos",
    "cos_se",
    "mse",
    "mse_se",
    "ip_abs_err",
    "ip_se",
    "tail95",
    "softmax_mass",
    "mass_se",
    "delta_mse_pct",
];

/// Formats `x` with six significant digits, switching to exponent
/// notation outside `[1e-5, 1e6)`.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        return format!("{mantissa}e{exp}");
    }
    let rounded: f64 = sci.parse().expect("valid float");
    format!("{:.*}", (5 - exp).max(0) as usize, rounded)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn optf(v: Option<f64>) -> String {
    v.map(format_sig6).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[MetricRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| crate::Error::InvalidArgument(format!("csv output failed: {e}"));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.codec.to_string(),
            r.bits.to_string(),
            opt(r.b_dir),
            opt(r.b_nrm),
            r.rounding.clone().unwrap_or_default(),
            r.seeds.to_string(),
            optf(r.cos),
            optf(r.cos_se),
            optf(r.mse),
            optf(r.mse_se),
            optf(r.ip_abs_err),
            optf(r.ip_se),
            optf(r.tail95),
            optf(r.softmax_mass),
            optf(r.mass_se),
            optf(r.delta_mse_pct),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| crate::Error::InvalidArgument(format!("csv output failed: {e}")))?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[MetricRow], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows).map_err(|e| crate::Error::InvalidArgument(format!("json output failed: {e}")))
}
