//! ARD radial-basis kernel.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Hyperparameters of one ARD-RBF Gaussian Process.
///
/// The kernel is `k(x, x') = signal_variance * exp(-1/2 * sum_i
/// ard_weights[i] * (x_i - x'_i)^2)`, with `noise_variance` added on the
/// Gram diagonal. Weights are inverse squared length-scales.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub ard_weights: DVector<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(ard_weights: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let params = Self {
            ard_weights: DVector::from_vec(ard_weights),
            signal_variance,
            noise_variance,
        };
        params.validate()?;
        Ok(params)
    }

    /// Isotropic unit-weight parameters in `dim` dimensions.
    pub fn isotropic(dim: usize, weight: f64, signal_variance: f64, noise_variance: f64) -> Self {
        Self {
            ard_weights: DVector::from_element(dim, weight),
            signal_variance,
            noise_variance,
        }
    }

    pub fn dim(&self) -> usize {
        self.ard_weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.ard_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "ard_weights must be finite and nonnegative".into(),
            ));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::InvalidArgument(
                "signal_variance must be finite and positive".into(),
            ));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::InvalidArgument(
                "noise_variance must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Kernel value between two points.
///
/// Errors if the point dimensions do not match the weight vector.
pub fn kernel_eval(x: &[f64], x_prime: &[f64], params: &KernelParams) -> Result<f64> {
    let d = params.dim();
    if x.len() != d || x_prime.len() != d {
        return Err(Error::InvalidArgument(format!(
            "kernel_eval: dimension mismatch (x: {}, x': {}, weights: {})",
            x.len(),
            x_prime.len(),
            d
        )));
    }
    let mut q = 0.0;
    for i in 0..d {
        let delta = x[i] - x_prime[i];
        q += params.ard_weights[i] * delta * delta;
    }
    Ok(params.signal_variance * (-0.5 * q).exp())
}

/// Per-dimension squared-difference matrices for a training set.
///
/// `result[k][(i, j)] = (X[i,k] - X[j,k])^2`. These depend only on the
/// inputs, so they are computed once per fit and reused across all
/// likelihood evaluations.
pub fn squared_distances(inputs: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let (n, d) = inputs.shape();
    (0..d)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                let delta = inputs[(i, k)] - inputs[(j, k)];
                delta * delta
            })
        })
        .collect()
}

/// Signal Gram matrix (no noise, no jitter) from precomputed distances.
pub fn gram_from_distances(dists: &[DMatrix<f64>], params: &KernelParams) -> DMatrix<f64> {
    let n = dists.first().map_or(0, DMatrix::nrows);
    let mut q = DMatrix::zeros(n, n);
    for (k, dk) in dists.iter().enumerate() {
        let w = params.ard_weights[k];
        if w != 0.0 {
            q += dk * w;
        }
    }
    q.apply(|v| *v = params.signal_variance * (-0.5 * *v).exp());
    q
}

/// Cross-covariance between query rows and training rows: `M x N`.
pub fn cross_gram(
    query: &DMatrix<f64>,
    inputs: &DMatrix<f64>,
    params: &KernelParams,
) -> Result<DMatrix<f64>> {
    if query.ncols() != inputs.ncols() || query.ncols() != params.dim() {
        return Err(Error::InvalidArgument(format!(
            "cross_gram: dimension mismatch (query: {}, inputs: {}, weights: {})",
            query.ncols(),
            inputs.ncols(),
            params.dim()
        )));
    }
    let (m, n) = (query.nrows(), inputs.nrows());
    Ok(DMatrix::from_fn(m, n, |i, j| {
        let mut q = 0.0;
        for k in 0..params.dim() {
            let delta = query[(i, k)] - inputs[(j, k)];
            q += params.ard_weights[k] * delta * delta;
        }
        params.signal_variance * (-0.5 * q).exp()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params1(theta: f64) -> KernelParams {
        KernelParams::new(vec![theta], 1.0, 0.0).unwrap()
    }

    #[test]
    fn zero_distance_gives_signal_variance() {
        let p = params1(3.0);
        assert_relative_eq!(kernel_eval(&[0.7], &[0.7], &p).unwrap(), 1.0);
    }

    #[test]
    fn zero_weights_degenerate_to_constant() {
        let p = KernelParams::new(vec![0.0, 0.0], 1.0, 0.0).unwrap();
        let v = kernel_eval(&[1.0, -4.0], &[100.0, 3.0], &p).unwrap();
        assert_relative_eq!(v, 1.0);
    }

    #[test]
    fn direct_substitution() {
        let p = params1(2.0);
        let v = kernel_eval(&[0.0], &[1.0], &p).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = params1(1.0);
        assert!(kernel_eval(&[0.0, 1.0], &[0.0, 1.0], &p).is_err());
        assert!(kernel_eval(&[0.0], &[0.0, 1.0], &p).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(KernelParams::new(vec![-1.0], 1.0, 0.0).is_err());
        assert!(KernelParams::new(vec![1.0], 0.0, 0.0).is_err());
        assert!(KernelParams::new(vec![1.0], 1.0, -1e-3).is_err());
        assert!(KernelParams::new(vec![f64::NAN], 1.0, 0.0).is_err());
    }

    #[test]
    fn gram_matches_pairwise_eval() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 0.5, -0.25, 2.0, 0.1]);
        let p = KernelParams::new(vec![1.3, 0.4], 2.0, 0.0).unwrap();
        let dists = squared_distances(&x);
        let gram = gram_from_distances(&dists, &p);
        for i in 0..3 {
            for j in 0..3 {
                let xi: Vec<f64> = x.row(i).iter().copied().collect();
                let xj: Vec<f64> = x.row(j).iter().copied().collect();
                assert_relative_eq!(
                    gram[(i, j)],
                    kernel_eval(&xi, &xj, &p).unwrap(),
                    max_relative = 1e-14
                );
            }
        }
    }

    proptest! {
        #[test]
        fn kernel_symmetry(
            x in prop::collection::vec(-50.0f64..50.0, 3),
            y in prop::collection::vec(-50.0f64..50.0, 3),
            theta in prop::collection::vec(0.0f64..10.0, 3),
            sf in 1e-3f64..1e3,
        ) {
            let p = KernelParams::new(theta, sf, 0.0).unwrap();
            let a = kernel_eval(&x, &y, &p).unwrap();
            let b = kernel_eval(&y, &x, &p).unwrap();
            prop_assert_eq!(a, b);
            // mathematically in (0, sf]; the exponential can underflow to 0
            prop_assert!(a >= 0.0 && a <= sf);
        }

        #[test]
        fn gram_plus_jitter_is_positive_definite(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..50),
            theta in 0.01f64..20.0,
        ) {
            let n = pts.len();
            let x = DMatrix::from_fn(n, 2, |i, j| pts[i][j]);
            let p = KernelParams::new(vec![theta, theta], 1.0, 0.0).unwrap();
            let dists = squared_distances(&x);
            let mut gram = gram_from_distances(&dists, &p);
            for i in 0..n {
                gram[(i, i)] += 1e-8;
            }
            prop_assert!(gram.cholesky().is_some());
        }
    }
}
