//! Extended input spaces built from delay coordinates of the low-fidelity
//! function.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gp::TrainedGP;

/// A scalar function of one variable, shared across threads.
pub type EvalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Source of low-fidelity values at arbitrary points.
///
/// Analytic evaluators have unbounded domain. Surrogate evaluators are GP
/// posteriors trained on the low-fidelity grid; queried outside the grid
/// they extrapolate through the posterior mean and log a warning.
#[derive(Clone)]
pub enum LowFiEvaluator {
    Analytic(EvalFn),
    Surrogate(Arc<TrainedGP>),
}

impl std::fmt::Debug for LowFiEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Analytic(_) => f.write_str("LowFiEvaluator::Analytic"),
            Self::Surrogate(_) => f.write_str("LowFiEvaluator::Surrogate"),
        }
    }
}

impl LowFiEvaluator {
    pub fn analytic(f: EvalFn) -> Self {
        Self::Analytic(f)
    }

    pub fn surrogate(gp: TrainedGP) -> Self {
        Self::Surrogate(Arc::new(gp))
    }

    /// Evaluate at many points. Surrogates use one batched prediction.
    pub fn eval_many(&self, points: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Analytic(f) => Ok(points.iter().map(|&t| f(t)).collect()),
            Self::Surrogate(gp) => {
                let (lo, hi) = gp.input_range(0);
                let outside = points.iter().filter(|&&t| t < lo || t > hi).count();
                if outside > 0 {
                    let min = points.iter().cloned().fold(f64::INFINITY, f64::min);
                    log::warn!(
                        "low-fidelity surrogate extrapolating at {outside} of {} points \
                         (surrogate trained on [{lo:.6}, {hi:.6}], min query {min:.6})",
                        points.len()
                    );
                }
                let (mean, _) = gp.predict_scalar(points)?;
                Ok(mean)
            }
        }
    }
}

/// Shape of an extended input space.
///
/// A row for query point `t` is, in fixed column order,
/// `[t]? ++ [f_l(t)]? ++ [f_l(t - k tau) for k = 1..=num_delays]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingConfig {
    pub num_delays: usize,
    pub delay_step: f64,
    pub include_t: bool,
    pub include_fl: bool,
}

impl EmbeddingConfig {
    /// Plain GP input space `(t)` — Kriging.
    pub fn plain_t() -> Self {
        Self {
            num_delays: 0,
            delay_step: 0.0,
            include_t: true,
            include_fl: false,
        }
    }

    /// NARGP input space `(t, f_l(t))`.
    pub fn nargp() -> Self {
        Self {
            num_delays: 0,
            delay_step: 0.0,
            include_t: true,
            include_fl: true,
        }
    }

    /// `(t, f_l(t), f_l(t - tau), f_l(t - 2 tau))` — 4-dimensional space.
    pub fn gpe(tau: f64) -> Self {
        Self {
            num_delays: 2,
            delay_step: tau,
            include_t: true,
            include_fl: true,
        }
    }

    /// Six-dimensional variant with 4 delays.
    pub fn gpe2(tau: f64) -> Self {
        Self {
            num_delays: 4,
            delay_step: tau,
            include_t: true,
            include_fl: true,
        }
    }

    /// Delay coordinates only: `(f_l(t), f_l(t - tau), f_l(t - 2 tau))`.
    pub fn delays_only(tau: f64) -> Self {
        Self {
            num_delays: 2,
            delay_step: tau,
            include_t: false,
            include_fl: true,
        }
    }

    /// Extended dimension: `include_t + include_fl + num_delays`.
    pub fn dim(&self) -> usize {
        usize::from(self.include_t) + usize::from(self.include_fl) + self.num_delays
    }

    /// Whether any column needs a low-fidelity evaluator.
    pub fn needs_evaluator(&self) -> bool {
        self.include_fl || self.num_delays > 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::InvalidArgument(
                "embedding config selects no columns".into(),
            ));
        }
        if self.num_delays > 0 && !(self.delay_step.is_finite() && self.delay_step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delay_step must be positive when num_delays > 0 (got {})",
                self.delay_step
            )));
        }
        Ok(())
    }
}

/// Build the extended-space matrix (`|t| x dim`) for query points `t`.
///
/// A pure function of its arguments; column order is fixed as documented on
/// [`EmbeddingConfig`].
pub fn build_embedding(
    t: &[f64],
    f_l: Option<&LowFiEvaluator>,
    config: &EmbeddingConfig,
) -> Result<DMatrix<f64>> {
    config.validate()?;
    if config.needs_evaluator() && f_l.is_none() {
        return Err(Error::InvalidArgument(
            "embedding needs a low-fidelity evaluator but none was given".into(),
        ));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("embedding query contains non-finite t".into()));
    }

    let dim = config.dim();
    let mut out = DMatrix::zeros(t.len(), dim);
    let mut col = 0;

    if config.include_t {
        for (i, &ti) in t.iter().enumerate() {
            out[(i, col)] = ti;
        }
        col += 1;
    }

    if let Some(eval) = f_l {
        // Evaluate all shifts with one call per k so surrogate warnings and
        // batched predictions stay per-shift.
        for k in 0..=config.num_delays {
            if k == 0 && !config.include_fl {
                continue;
            }
            let shift = config.delay_step * k as f64;
            let shifted: Vec<f64> = t.iter().map(|&ti| ti - shift).collect();
            let values = eval.eval_many(&shifted)?;
            for (i, v) in values.into_iter().enumerate() {
                out[(i, col)] = v;
            }
            col += 1;
        }
    }

    debug_assert_eq!(col, dim);
    Ok(out)
}
