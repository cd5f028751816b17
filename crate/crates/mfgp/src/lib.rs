//! Multifidelity Gaussian Process regression with delay-coordinate
//! embeddings.
//!
//! The crate fuses a few expensive "high-fidelity" samples with many cheap
//! "low-fidelity" samples of a related function. Beyond the classical
//! baselines (plain Kriging on the high-fidelity data, linear AR1
//! coKriging, and NARGP over the extended input `(t, f_l(t))`), it builds
//! GP regressions over delay-coordinate input spaces
//! `(t, f_l(t), f_l(t - tau), ..., f_l(t - n tau))`, which capture
//! derivative information of the low-fidelity function and remain usable
//! when the high-fidelity response is not a function of `f_l` alone.
//!
//! Modules:
//! - [`gp`]: exact GP regression engine (ARD-RBF kernel, marginal-likelihood
//!   optimization, posterior prediction).
//! - [`fusion`]: the fusion strategies and the two-stage pipeline.
//! - [`models`]: analytic benchmark pairs and the Hodgkin-Huxley simulator.
//! - [`harness`]: randomized-trial experiments, error metrics, CSV output.

pub mod error;
pub mod exec;
pub mod fusion;
pub mod gp;
pub mod harness;
pub mod models;
pub mod seed;

pub use error::{Error, Result};

// Matrix types appear in the public API (gp::fit, TrainedGP::predict).
pub use nalgebra;
