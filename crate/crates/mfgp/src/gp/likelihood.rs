//! Log marginal likelihood of a GP dataset and its gradient in
//! log-hyperparameter space.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::gp::kernel::{gram_from_distances, squared_distances, KernelParams};

/// Relative jitter start: `1e-10 * mean(diag K)`.
pub const JITTER_START_FRACTION: f64 = 1e-10;
/// Relative jitter ceiling: `1e-4 * mean(diag K)`; past this, error out.
pub const JITTER_MAX_FRACTION: f64 = 1e-4;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Cholesky of `K + jitter*I`, escalating jitter by x10 until the
/// factorization succeeds or the ceiling is passed.
///
/// `K` must already contain the noise diagonal. Returns the factorization
/// and the jitter actually used.
pub fn cholesky_with_jitter(k: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    let mean_diag = k.diagonal().sum() / n as f64;
    let scale = if mean_diag > 0.0 { mean_diag } else { 1.0 };
    let mut jitter = JITTER_START_FRACTION * scale;
    let max_jitter = JITTER_MAX_FRACTION * scale;
    loop {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = kj.cholesky() {
            return Ok((chol, jitter));
        }
        jitter *= 10.0;
        if jitter > max_jitter {
            return Err(Error::Conditioning(format!(
                "Cholesky failed after jitter escalation to {:.3e} (n = {n})",
                max_jitter
            )));
        }
    }
}

/// Solve `(K + jitter I) alpha = y` through an existing factorization, with
/// two steps of iterative refinement. Refinement keeps the training
/// residual near machine scale even when the covariance is badly
/// conditioned (smooth data, long length-scales).
pub(crate) fn refined_solve(
    chol: &Cholesky<f64, Dyn>,
    k: &DMatrix<f64>,
    jitter: f64,
    y: &DVector<f64>,
) -> DVector<f64> {
    let apply = |alpha: &DVector<f64>| {
        let mut out = k * alpha;
        out.axpy(jitter, alpha, 1.0);
        out
    };
    let mut alpha = chol.solve(y);
    for _ in 0..2 {
        let residual = y - apply(&alpha);
        alpha += chol.solve(&residual);
    }
    alpha
}

/// Dense evaluation pieces shared between the value and gradient paths.
pub(crate) struct LmlEval {
    pub chol: Cholesky<f64, Dyn>,
    pub alpha: DVector<f64>,
    pub signal_gram: DMatrix<f64>,
    pub value: f64,
}

/// Precomputed objective for one dataset: squared distances are built once,
/// each evaluation only rebuilds the Gram matrix.
pub(crate) struct GpObjective {
    pub dists: Vec<DMatrix<f64>>,
    pub targets: DVector<f64>,
    pub n: usize,
    pub dim: usize,
}

impl GpObjective {
    pub fn new(inputs: &DMatrix<f64>, targets: DVector<f64>) -> Self {
        Self {
            dists: squared_distances(inputs),
            n: inputs.nrows(),
            dim: inputs.ncols(),
            targets,
        }
    }

    pub fn eval(&self, params: &KernelParams) -> Result<LmlEval> {
        let n = self.n;
        let signal_gram = gram_from_distances(&self.dists, params);
        let mut k = signal_gram.clone();
        for i in 0..n {
            k[(i, i)] += params.noise_variance;
        }
        let (chol, jitter) = cholesky_with_jitter(&k)?;
        let alpha = refined_solve(&chol, &k, jitter, &self.targets);
        let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let value =
            -0.5 * self.targets.dot(&alpha) - log_det_half - 0.5 * n as f64 * LN_2PI;
        Ok(LmlEval {
            chol,
            alpha,
            signal_gram,
            value,
        })
    }

    /// Value and gradient with respect to
    /// `[ln theta_1, .., ln theta_d, ln signal_variance, ln noise_variance]`.
    ///
    /// Gradient of the jitter term is omitted; jitter is at most 1e-4 of the
    /// diagonal scale, far below the gradient tolerance anywhere we use it.
    pub fn eval_grad(&self, params: &KernelParams) -> Result<(f64, Vec<f64>)> {
        let ev = self.eval(params)?;
        let n = self.n;
        let k_inv = ev.chol.inverse();
        // A = alpha alpha^T - K^{-1}; dL/dp = 1/2 tr(A dK/dp)
        let mut grad = vec![0.0; self.dim + 2];

        for k in 0..self.dim {
            let theta = params.ard_weights[k];
            if theta == 0.0 {
                continue;
            }
            let dk = &self.dists[k];
            let mut acc = 0.0;
            for j in 0..n {
                for i in 0..n {
                    let a_ij = ev.alpha[i] * ev.alpha[j] - k_inv[(i, j)];
                    acc += a_ij * dk[(i, j)] * ev.signal_gram[(i, j)];
                }
            }
            grad[k] = -0.25 * theta * acc;
        }

        let mut acc_sf = 0.0;
        let mut acc_noise = 0.0;
        for j in 0..n {
            for i in 0..n {
                let a_ij = ev.alpha[i] * ev.alpha[j] - k_inv[(i, j)];
                acc_sf += a_ij * ev.signal_gram[(i, j)];
                if i == j {
                    acc_noise += a_ij;
                }
            }
        }
        grad[self.dim] = 0.5 * acc_sf;
        grad[self.dim + 1] = 0.5 * params.noise_variance * acc_noise;

        Ok((ev.value, grad))
    }
}

/// Log marginal likelihood of `(inputs, targets)` under `params`, plus its
/// gradient in log-hyperparameter space.
///
/// Layout of the gradient: `d` ARD weight components, then signal variance,
/// then noise variance (all with respect to the natural log of the
/// parameter).
pub fn log_marginal_likelihood(
    inputs: &DMatrix<f64>,
    targets: &DVector<f64>,
    params: &KernelParams,
) -> Result<(f64, Vec<f64>)> {
    if inputs.nrows() == 0 {
        return Err(Error::InvalidArgument(
            "log_marginal_likelihood: empty dataset".into(),
        ));
    }
    if inputs.nrows() != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "log_marginal_likelihood: {} inputs vs {} targets",
            inputs.nrows(),
            targets.len()
        )));
    }
    if inputs.ncols() != params.dim() {
        return Err(Error::InvalidArgument(format!(
            "log_marginal_likelihood: input dim {} vs {} weights",
            inputs.ncols(),
            params.dim()
        )));
    }
    params.validate()?;
    GpObjective::new(inputs, targets.clone()).eval_grad(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_zero_target() {
        // K = [1 + j]; quadratic term vanishes.
        let x = DMatrix::from_row_slice(1, 1, &[0.3]);
        let y = DVector::from_vec(vec![0.0]);
        let p = KernelParams::new(vec![1.0], 1.0, 0.0).unwrap();
        let (value, _) = log_marginal_likelihood(&x, &y, &p).unwrap();
        let j = JITTER_START_FRACTION * 1.0;
        let expected = -0.5 * (1.0 + j).ln() - 0.5 * LN_2PI;
        assert_relative_eq!(value, expected, max_relative = 1e-12);
    }

    #[test]
    fn single_point_unit_noise() {
        // K = [2] (+ tiny jitter): -1/4 - 1/2 ln 2 - 1/2 ln 2pi.
        let x = DMatrix::from_row_slice(1, 1, &[0.0]);
        let y = DVector::from_vec(vec![1.0]);
        let p = KernelParams::new(vec![1.0], 1.0, 1.0).unwrap();
        let (value, _) = log_marginal_likelihood(&x, &y, &p).unwrap();
        let expected = -0.25 - 0.5 * 2.0f64.ln() - 0.5 * LN_2PI;
        assert_relative_eq!(value, expected, epsilon = 1e-9);
    }

    /// Central finite differences in log-parameter space.
    pub(crate) fn fd_gradient(
        inputs: &DMatrix<f64>,
        targets: &DVector<f64>,
        params: &KernelParams,
        step: f64,
    ) -> Vec<f64> {
        let d = params.dim();
        let mut grad = vec![0.0; d + 2];
        let perturbed = |idx: usize, h: f64| -> KernelParams {
            let mut p = params.clone();
            if idx < d {
                p.ard_weights[idx] = (p.ard_weights[idx].ln() + h).exp();
            } else if idx == d {
                p.signal_variance = (p.signal_variance.ln() + h).exp();
            } else {
                p.noise_variance = (p.noise_variance.ln() + h).exp();
            }
            p
        };
        for idx in 0..d + 2 {
            let (hi, _) = log_marginal_likelihood(inputs, targets, &perturbed(idx, step)).unwrap();
            let (lo, _) = log_marginal_likelihood(inputs, targets, &perturbed(idx, -step)).unwrap();
            grad[idx] = (hi - lo) / (2.0 * step);
        }
        grad
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let n = rng.gen_range(2..=8);
            let d = rng.gen_range(1..=3);
            let x = DMatrix::from_fn(n, d, |_, _| rng.gen_range(-2.0..2.0));
            let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let p = KernelParams::new(
                (0..d).map(|_| rng.gen_range(0.1..3.0)).collect(),
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.05..0.5),
            )
            .unwrap();
            let (_, analytic) = log_marginal_likelihood(&x, &y, &p).unwrap();
            let numeric = fd_gradient(&x, &y, &p, 1e-6);
            let num_norm = numeric.iter().map(|v| v * v).sum::<f64>().sqrt();
            let diff = analytic
                .iter()
                .zip(&numeric)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(
                diff <= 1e-5 * num_norm.max(1e-8),
                "gradient mismatch: analytic {analytic:?} fd {numeric:?}"
            );
        }
    }

    #[test]
    fn mismatched_shapes_error() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let y = DVector::from_vec(vec![0.0]);
        let p = KernelParams::new(vec![1.0], 1.0, 0.0).unwrap();
        assert!(log_marginal_likelihood(&x, &y, &p).is_err());
    }
}
