//! Error metric used by all experiments.

use crate::error::{Error, Result};

/// Floor applied to the log error so exact fits stay plottable.
pub const LOG_ERROR_FLOOR: f64 = -16.0;

/// `log10(||pred - truth||_2 / ||truth||_2)`, clamped below at -16.
pub fn log_l2_error(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "log_l2_error: {} predictions vs {} truth values",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("log_l2_error: empty input".into()));
    }
    let truth_norm = truth.iter().map(|y| y * y).sum::<f64>().sqrt();
    if truth_norm == 0.0 {
        return Err(Error::InvalidArgument(
            "log_l2_error: truth is identically zero".into(),
        ));
    }
    let err_norm = predictions
        .iter()
        .zip(truth)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        .sqrt();
    Ok((err_norm / truth_norm).log10().max(LOG_ERROR_FLOOR))
}
