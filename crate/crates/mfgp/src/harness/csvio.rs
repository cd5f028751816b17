//! CSV serialization of experiment artifacts.
//!
//! Numeric fields are serialized with 17 significant digits so outputs are
//! byte-reproducible and round-trip through f64 exactly.

use std::io::Write;

use crate::error::Result;

use super::{ExperimentResults, SweepTable};

/// 17 significant digits, scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `results.csv`: one row per trial.
///
/// The `wall_time_ms` column is reserved and always 0: outputs are required
/// to be byte-identical across runs with the same seed, and measured wall
/// time is not. Timings are logged to stderr at info level instead.
pub fn write_results_csv<W: Write>(out: &mut W, results: &ExperimentResults) -> Result<()> {
    writeln!(
        out,
        "benchmark,method,n_high,trial,log_l2_error,status,wall_time_ms"
    )?;
    for trial in &results.trials {
        let (status, err) = match trial.log_l2_error {
            Some(e) => ("ok", fmt_f64(e)),
            None => ("failed", String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},0",
            results.benchmark, trial.method, trial.n_high, trial.trial, err, status
        )?;
    }
    Ok(())
}

/// Write `summary.csv`: one row per (method, n_high) cell.
pub fn write_summary_csv<W: Write>(out: &mut W, results: &ExperimentResults) -> Result<()> {
    writeln!(out, "benchmark,method,n_high,mean_log_l2,n_failed")?;
    for cell in &results.cells {
        let mean = cell.mean_log_l2.map(fmt_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            results.benchmark, cell.method, cell.n_high, mean, cell.n_failed
        )?;
    }
    Ok(())
}

/// Write `predictions_<benchmark>_<method>.csv` content.
pub fn write_predictions_csv<W: Write>(
    out: &mut W,
    t: &[f64],
    mean: &[f64],
    variance: &[f64],
    truth: &[f64],
) -> Result<()> {
    writeln!(out, "t,mean,variance,truth")?;
    for i in 0..t.len() {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(t[i]),
            fmt_f64(mean[i]),
            fmt_f64(variance[i]),
            fmt_f64(truth[i])
        )?;
    }
    Ok(())
}

/// Write a sweep table as CSV (methods as rows, one column per n_high).
pub fn write_sweep_csv<W: Write>(out: &mut W, table: &SweepTable) -> Result<()> {
    write!(out, "method")?;
    for n in &table.n_high {
        write!(out, ",n_high_{n}")?;
    }
    writeln!(out)?;
    for (m, row) in table.methods.iter().zip(&table.rows) {
        write!(out, "{m}")?;
        for v in row {
            match v {
                Some(x) => write!(out, ",{}", fmt_f64(*x))?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn round_trips_are_exact() {
        for v in [1.0 / 3.0, -2.5e-17, 6.02e23, f64::MIN_POSITIVE] {
            let back: f64 = fmt_f64(v).parse().unwrap();
            assert_eq!(back, v);
        }
    }
}
