//! Fusion strategies: plain Kriging, AR1 coKriging, NARGP, and GPs over
//! delay-embedded input spaces, plus the end-to-end two-stage pipeline.

mod ar1;
mod embedding;

pub use ar1::{Ar1Model, Ar1Params};
pub use embedding::{build_embedding, EmbeddingConfig, EvalFn, LowFiEvaluator};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gp::{fit_with, FitOptions, TrainedGP};
use crate::seed;

/// High- and low-fidelity samples of one scenario over a closed interval.
#[derive(Debug, Clone)]
pub struct FidelityPair {
    pub t_h: Vec<f64>,
    pub y_h: Vec<f64>,
    pub t_l: Vec<f64>,
    pub y_l: Vec<f64>,
    pub domain: (f64, f64),
}

impl FidelityPair {
    pub fn new(
        t_h: Vec<f64>,
        y_h: Vec<f64>,
        t_l: Vec<f64>,
        y_l: Vec<f64>,
        domain: (f64, f64),
    ) -> Result<Self> {
        let pair = Self {
            t_h,
            y_h,
            t_l,
            y_l,
            domain,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_h.len() != self.y_h.len() || self.t_l.len() != self.y_l.len() {
            return Err(Error::InvalidArgument(
                "fidelity pair: inputs and targets have different lengths".into(),
            ));
        }
        if !(self.domain.0 < self.domain.1) {
            return Err(Error::InvalidArgument("fidelity pair: empty domain".into()));
        }
        let (a, b) = self.domain;
        let tol = 1e-12 * (b - a).abs().max(1.0);
        for &t in self.t_h.iter().chain(self.t_l.iter()) {
            if !t.is_finite() || t < a - tol || t > b + tol {
                return Err(Error::InvalidArgument(format!(
                    "fidelity pair: point {t} outside domain [{a}, {b}]"
                )));
            }
        }
        if self
            .y_h
            .iter()
            .chain(self.y_l.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument(
                "fidelity pair: non-finite target value".into(),
            ));
        }
        Ok(())
    }
}

/// Which fusion strategy to build.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodChoice {
    /// Single GP on the high-fidelity data only.
    Kriging,
    /// Joint two-block coKriging with a scalar correlation factor.
    Ar1,
    /// GP over `(t, f_l(t))`.
    Nargp,
    /// GP over an arbitrary delay embedding.
    Gpe(EmbeddingConfig),
}

impl MethodChoice {
    /// The embedding the method trains in, when it has one.
    pub fn embedding(&self) -> Option<EmbeddingConfig> {
        match self {
            MethodChoice::Kriging => Some(EmbeddingConfig::plain_t()),
            MethodChoice::Ar1 => None,
            MethodChoice::Nargp => Some(EmbeddingConfig::nargp()),
            MethodChoice::Gpe(cfg) => Some(*cfg),
        }
    }

    pub fn needs_low_fidelity(&self) -> bool {
        match self {
            MethodChoice::Kriging => false,
            MethodChoice::Ar1 => true,
            MethodChoice::Nargp => true,
            MethodChoice::Gpe(cfg) => cfg.needs_evaluator(),
        }
    }
}

/// Posterior summary at a set of query points.
#[derive(Debug, Clone)]
pub struct Predictions {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

enum ModelInner {
    Extended {
        gp: TrainedGP,
        config: EmbeddingConfig,
        low_fi: Option<LowFiEvaluator>,
    },
    Ar1(Ar1Model),
}

/// A fitted fusion model, immutable and safe to share across threads.
pub struct FusionModel {
    choice: MethodChoice,
    inner: ModelInner,
}

impl FusionModel {
    /// Posterior mean and variance of the high-fidelity function at `t`.
    pub fn predict(&self, t: &[f64]) -> Result<Predictions> {
        match &self.inner {
            ModelInner::Extended {
                gp,
                config,
                low_fi,
            } => {
                let x = build_embedding(t, low_fi.as_ref(), config)?;
                let (mean, variance) = gp.predict(&x)?;
                Ok(Predictions {
                    mean: mean.as_slice().to_vec(),
                    variance: variance.as_slice().to_vec(),
                })
            }
            ModelInner::Ar1(model) => {
                let (mean, variance) = model.predict(t)?;
                Ok(Predictions { mean, variance })
            }
        }
    }

    pub fn choice(&self) -> &MethodChoice {
        &self.choice
    }

    /// The trained low-fidelity surrogate, for methods that carry one.
    pub fn low_fidelity(&self) -> Option<&LowFiEvaluator> {
        match &self.inner {
            ModelInner::Extended { low_fi, .. } => low_fi.as_ref(),
            ModelInner::Ar1(_) => None,
        }
    }

    /// The high-fidelity GP in the extended space (absent for AR1).
    pub fn high_fidelity_gp(&self) -> Option<&TrainedGP> {
        match &self.inner {
            ModelInner::Extended { gp, .. } => Some(gp),
            ModelInner::Ar1(_) => None,
        }
    }

    pub fn ar1(&self) -> Option<&Ar1Model> {
        match &self.inner {
            ModelInner::Extended { .. } => None,
            ModelInner::Ar1(model) => Some(model),
        }
    }
}

/// Fit a 1-D GP surrogate to the low-fidelity samples.
///
/// The surrogate is queried at shifted points `t - k tau`, some of which
/// fall outside `[min t_l, max t_l]`; extrapolation is permitted there (the
/// posterior mean is used, with a logged warning).
pub fn train_low_fidelity(t_l: &[f64], y_l: &[f64], fit_seed: u64) -> Result<TrainedGP> {
    if t_l.len() < 2 {
        return Err(Error::InvalidArgument(
            "train_low_fidelity: need at least 2 points".into(),
        ));
    }
    // Data-driven start for the last restart: length-scale at twice the
    // median spacing, variances from the sample variance. The surrogate must
    // interpolate its dense grid for shifted-point queries to mean anything.
    let mut sorted = t_l.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let spacing = gaps[gaps.len() / 2].max(1e-12);
    let mean = y_l.iter().sum::<f64>() / y_l.len() as f64;
    let var = (y_l.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>()
        / y_l.len() as f64)
        .max(1e-12);
    let informed = crate::gp::KernelParams::isotropic(
        1,
        1.0 / (2.0 * spacing).powi(2),
        var,
        1e-4 * var,
    );
    fit_with(
        DMatrix::from_column_slice(t_l.len(), 1, t_l),
        DVector::from_column_slice(y_l),
        fit_seed,
        &FitOptions::with_informed_init(informed),
    )
}

/// Where the low-fidelity values used by embedded methods come from.
#[derive(Clone)]
pub enum LowFiSource {
    /// Train a surrogate GP from the pair's low-fidelity samples (the
    /// data-driven default).
    Train,
    /// Reuse an already-trained surrogate (e.g. shared across methods
    /// within a trial).
    Pretrained(LowFiEvaluator),
    /// Evaluate the known low-fidelity function exactly.
    Analytic(EvalFn),
}

impl LowFiSource {
    fn resolve(&self, pair: &FidelityPair, fit_seed: u64) -> Result<LowFiEvaluator> {
        match self {
            LowFiSource::Train => {
                let surrogate = train_low_fidelity(
                    &pair.t_l,
                    &pair.y_l,
                    seed::mix_str(fit_seed, "lowfi"),
                )?;
                Ok(LowFiEvaluator::surrogate(surrogate))
            }
            LowFiSource::Pretrained(eval) => Ok(eval.clone()),
            LowFiSource::Analytic(f) => Ok(LowFiEvaluator::analytic(f.clone())),
        }
    }
}

/// Plain GP regression on the high-fidelity data only.
pub fn build_kriging(pair: &FidelityPair, fit_seed: u64) -> Result<FusionModel> {
    build_gpe_with(pair, EmbeddingConfig::plain_t(), &LowFiSource::Train, fit_seed)
}

/// NARGP: GP over `(t, f_l(t))` with a trained low-fidelity surrogate.
pub fn build_nargp(pair: &FidelityPair, fit_seed: u64) -> Result<FusionModel> {
    build_gpe_with(pair, EmbeddingConfig::nargp(), &LowFiSource::Train, fit_seed)
}

/// GP in a delay-embedded space with a trained low-fidelity surrogate.
pub fn build_gpe(
    pair: &FidelityPair,
    config: EmbeddingConfig,
    fit_seed: u64,
) -> Result<FusionModel> {
    build_gpe_with(pair, config, &LowFiSource::Train, fit_seed)
}

/// GP in a delay-embedded space with an explicit low-fidelity source.
pub fn build_gpe_with(
    pair: &FidelityPair,
    config: EmbeddingConfig,
    low_fi: &LowFiSource,
    fit_seed: u64,
) -> Result<FusionModel> {
    build_gpe_opts(pair, config, low_fi, fit_seed, &FitOptions::default())
}

/// [`build_gpe_with`] with explicit fit options for the high-fidelity GP.
pub fn build_gpe_opts(
    pair: &FidelityPair,
    config: EmbeddingConfig,
    low_fi: &LowFiSource,
    fit_seed: u64,
    opts: &FitOptions,
) -> Result<FusionModel> {
    pair.validate()?;
    config.validate()?;
    if pair.t_h.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one high-fidelity point".into(),
        ));
    }
    let evaluator = if config.needs_evaluator() {
        Some(low_fi.resolve(pair, fit_seed)?)
    } else {
        None
    };
    let x = build_embedding(&pair.t_h, evaluator.as_ref(), &config)?;
    let gp = fit_with(
        x,
        DVector::from_column_slice(&pair.y_h),
        seed::mix_str(fit_seed, "hifi"),
        opts,
    )?;
    let choice = match (config.include_t, config.include_fl, config.num_delays) {
        (true, false, 0) => MethodChoice::Kriging,
        (true, true, 0) => MethodChoice::Nargp,
        _ => MethodChoice::Gpe(config),
    };
    Ok(FusionModel {
        choice,
        inner: ModelInner::Extended {
            gp,
            config,
            low_fi: evaluator,
        },
    })
}

/// AR1 coKriging over the stacked two-fidelity data.
pub fn build_ar1(pair: &FidelityPair, fit_seed: u64) -> Result<FusionModel> {
    build_ar1_opts(pair, fit_seed, &FitOptions::default())
}

/// [`build_ar1`] with explicit fit options.
pub fn build_ar1_opts(
    pair: &FidelityPair,
    fit_seed: u64,
    opts: &FitOptions,
) -> Result<FusionModel> {
    let model = Ar1Model::fit(pair, seed::mix_str(fit_seed, "ar1"), opts)?;
    Ok(FusionModel {
        choice: MethodChoice::Ar1,
        inner: ModelInner::Ar1(model),
    })
}

/// AR1 with pinned hyperparameters (no optimization).
pub fn build_ar1_with_params(pair: &FidelityPair, params: Ar1Params) -> Result<FusionModel> {
    let model = Ar1Model::with_params(pair, params)?;
    Ok(FusionModel {
        choice: MethodChoice::Ar1,
        inner: ModelInner::Ar1(model),
    })
}

/// End-to-end pipeline: resolve the low-fidelity source, build the chosen
/// model, and predict at the test points.
pub fn run_fusion_pipeline(
    pair: &FidelityPair,
    choice: &MethodChoice,
    test_points: &[f64],
    fit_seed: u64,
    low_fi: &LowFiSource,
) -> Result<Predictions> {
    let model = build_fusion_model(pair, choice, fit_seed, low_fi)?;
    model.predict(test_points)
}

/// Build any fusion model from a [`MethodChoice`].
pub fn build_fusion_model(
    pair: &FidelityPair,
    choice: &MethodChoice,
    fit_seed: u64,
    low_fi: &LowFiSource,
) -> Result<FusionModel> {
    build_fusion_model_opts(pair, choice, fit_seed, low_fi, &FitOptions::default())
}

/// [`build_fusion_model`] with explicit fit options for the high-fidelity
/// stage (the low-fidelity surrogate always uses defaults).
pub fn build_fusion_model_opts(
    pair: &FidelityPair,
    choice: &MethodChoice,
    fit_seed: u64,
    low_fi: &LowFiSource,
    opts: &FitOptions,
) -> Result<FusionModel> {
    match choice {
        MethodChoice::Ar1 => build_ar1_opts(pair, fit_seed, opts),
        MethodChoice::Kriging => {
            build_gpe_opts(pair, EmbeddingConfig::plain_t(), low_fi, fit_seed, opts)
        }
        MethodChoice::Nargp => {
            build_gpe_opts(pair, EmbeddingConfig::nargp(), low_fi, fit_seed, opts)
        }
        MethodChoice::Gpe(cfg) => build_gpe_opts(pair, *cfg, low_fi, fit_seed, opts),
    }
}
