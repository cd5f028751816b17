//! Linear autoregressive (AR1 / coKriging) fusion.
//!
//! The two fidelities are modeled as one zero-mean joint GP over the
//! stacked targets `[y_l; y_h]` with block covariance
//!
//! ```text
//! [ k1(x,x')        rho k1(x,x')              ]
//! [ rho k1(x,x')    rho^2 k1(x,x') + k2(x,x') ]
//! ```
//!
//! plus per-block noise on the diagonal. The scaling constant `rho`, both
//! kernels and both noise variances are optimized jointly by marginal
//! likelihood; `rho` starts at 1 and lives in linear space (it may be
//! negative), everything else in log space.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gp::{
    cholesky_with_jitter, lbfgs_maximize, refined_solve, Bounds, FitOptions, KernelParams,
};
use crate::seed;

use super::FidelityPair;

/// Hyperparameters of the joint two-block model.
#[derive(Debug, Clone)]
pub struct Ar1Params {
    /// Low-fidelity kernel (1-D).
    pub k1: KernelParams,
    /// Discrepancy kernel on the high-fidelity block (1-D).
    pub k2: KernelParams,
    /// Scaling constant between the fidelities.
    pub rho: f64,
}

/// Fitted AR1 model.
#[derive(Debug, Clone)]
pub struct Ar1Model {
    t_l: Vec<f64>,
    t_h: Vec<f64>,
    offset_h: f64,
    params: Ar1Params,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
    lml: f64,
}

struct Blocks {
    d_ll: DMatrix<f64>,
    d_lh: DMatrix<f64>,
    d_hh: DMatrix<f64>,
    y: DVector<f64>,
    n_l: usize,
    n_h: usize,
}

fn sq_diff(a: &[f64], b: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        let d = a[i] - b[j];
        d * d
    })
}

fn rbf(d: &DMatrix<f64>, theta: f64, sf: f64) -> DMatrix<f64> {
    d.map(|v| sf * (-0.5 * theta * v).exp())
}

impl Blocks {
    fn new(pair: &FidelityPair) -> Self {
        let ybar_l = mean(&pair.y_l);
        let ybar_h = mean(&pair.y_h);
        let mut y = DVector::zeros(pair.t_l.len() + pair.t_h.len());
        for (i, v) in pair.y_l.iter().enumerate() {
            y[i] = v - ybar_l;
        }
        for (i, v) in pair.y_h.iter().enumerate() {
            y[pair.t_l.len() + i] = v - ybar_h;
        }
        Self {
            d_ll: sq_diff(&pair.t_l, &pair.t_l),
            d_lh: sq_diff(&pair.t_l, &pair.t_h),
            d_hh: sq_diff(&pair.t_h, &pair.t_h),
            y,
            n_l: pair.t_l.len(),
            n_h: pair.t_h.len(),
        }
    }

    fn n(&self) -> usize {
        self.n_l + self.n_h
    }

    /// Joint covariance (with noise, without jitter) and the kernel pieces
    /// the gradient needs.
    fn covariance(&self, p: &Ar1Params) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let k1_ll = rbf(&self.d_ll, p.k1.ard_weights[0], p.k1.signal_variance);
        let k1_lh = rbf(&self.d_lh, p.k1.ard_weights[0], p.k1.signal_variance);
        let k1_hh = rbf(&self.d_hh, p.k1.ard_weights[0], p.k1.signal_variance);
        let k2_hh = rbf(&self.d_hh, p.k2.ard_weights[0], p.k2.signal_variance);

        let n = self.n();
        let mut c = DMatrix::zeros(n, n);
        for i in 0..self.n_l {
            for j in 0..self.n_l {
                c[(i, j)] = k1_ll[(i, j)];
            }
        }
        for i in 0..self.n_l {
            for j in 0..self.n_h {
                let v = p.rho * k1_lh[(i, j)];
                c[(i, self.n_l + j)] = v;
                c[(self.n_l + j, i)] = v;
            }
        }
        for i in 0..self.n_h {
            for j in 0..self.n_h {
                c[(self.n_l + i, self.n_l + j)] =
                    p.rho * p.rho * k1_hh[(i, j)] + k2_hh[(i, j)];
            }
        }
        for i in 0..self.n_l {
            c[(i, i)] += p.k1.noise_variance;
        }
        for i in 0..self.n_h {
            let d = self.n_l + i;
            c[(d, d)] += p.k2.noise_variance;
        }
        (c, k1_ll, k1_lh, k1_hh, k2_hh)
    }

    fn eval(&self, p: &Ar1Params) -> Result<(f64, Cholesky<f64, Dyn>, DVector<f64>, f64)> {
        let (c, ..) = self.covariance(p);
        let (chol, jitter) = cholesky_with_jitter(&c)?;
        let alpha = refined_solve(&chol, &c, jitter, &self.y);
        let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let value = -0.5 * self.y.dot(&alpha)
            - log_det_half
            - 0.5 * self.n() as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok((value, chol, alpha, jitter))
    }

    /// Value and gradient with respect to
    /// `[ln th1, ln sf1, ln sn1, ln th2, ln sf2, ln sn2, rho]`.
    fn eval_grad(&self, p: &Ar1Params) -> Result<(f64, Vec<f64>)> {
        let (c, k1_ll, k1_lh, k1_hh, k2_hh) = self.covariance(p);
        let (chol, jitter) = cholesky_with_jitter(&c)?;
        let alpha = refined_solve(&chol, &c, jitter, &self.y);
        let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let value = -0.5 * self.y.dot(&alpha)
            - log_det_half
            - 0.5 * self.n() as f64 * (2.0 * std::f64::consts::PI).ln();

        let c_inv = chol.inverse();
        let n_l = self.n_l;
        let n_h = self.n_h;
        let a = |i: usize, j: usize| alpha[i] * alpha[j] - c_inv[(i, j)];

        let th1 = p.k1.ard_weights[0];
        let th2 = p.k2.ard_weights[0];
        let rho = p.rho;

        // Accumulate 1/2 tr(A dC/dp) per parameter in one pass per block.
        let mut g = vec![0.0; 7];
        for i in 0..n_l {
            for j in 0..n_l {
                let aij = a(i, j);
                // d ln th1: -1/2 th1 D (.) K1
                g[0] += aij * (-0.5 * th1 * self.d_ll[(i, j)]) * k1_ll[(i, j)];
                // d ln sf1: K1
                g[1] += aij * k1_ll[(i, j)];
                if i == j {
                    g[2] += aij * p.k1.noise_variance;
                }
            }
        }
        for i in 0..n_l {
            for j in 0..n_h {
                // off-diagonal blocks appear twice (A symmetric)
                let aij = 2.0 * a(i, n_l + j);
                g[0] += aij * rho * (-0.5 * th1 * self.d_lh[(i, j)]) * k1_lh[(i, j)];
                g[1] += aij * rho * k1_lh[(i, j)];
                g[6] += aij * k1_lh[(i, j)];
            }
        }
        for i in 0..n_h {
            for j in 0..n_h {
                let aij = a(n_l + i, n_l + j);
                g[0] += aij * rho * rho * (-0.5 * th1 * self.d_hh[(i, j)]) * k1_hh[(i, j)];
                g[1] += aij * rho * rho * k1_hh[(i, j)];
                g[3] += aij * (-0.5 * th2 * self.d_hh[(i, j)]) * k2_hh[(i, j)];
                g[4] += aij * k2_hh[(i, j)];
                g[6] += aij * 2.0 * rho * k1_hh[(i, j)];
                if i == j {
                    g[5] += aij * p.k2.noise_variance;
                }
            }
        }
        for v in g.iter_mut() {
            *v *= 0.5;
        }
        Ok((value, g))
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn params_from_vec(x: &[f64]) -> Ar1Params {
    Ar1Params {
        k1: KernelParams::isotropic(1, x[0].exp(), x[1].exp(), x[2].exp()),
        k2: KernelParams::isotropic(1, x[3].exp(), x[4].exp(), x[5].exp()),
        rho: x[6],
    }
}

/// With pinned noise the optimizer sees `[ln th1, ln sf1, ln th2, ln sf2,
/// rho]`; this maps back to the full 7-slot layout.
fn expand_fixed_noise(x: &[f64], noise: f64) -> [f64; 7] {
    let ln_noise = if noise > 0.0 { noise.ln() } else { f64::NEG_INFINITY };
    [x[0], x[1], ln_noise, x[2], x[3], ln_noise, x[4]]
}

impl Ar1Model {
    /// Build the joint model from fixed hyperparameters.
    pub fn with_params(pair: &FidelityPair, params: Ar1Params) -> Result<Self> {
        pair.validate()?;
        params.k1.validate()?;
        params.k2.validate()?;
        if !params.rho.is_finite() {
            return Err(Error::InvalidArgument("rho must be finite".into()));
        }
        let blocks = Blocks::new(pair);
        let (lml, chol, alpha, jitter) = blocks.eval(&params)?;
        Ok(Self {
            t_l: pair.t_l.clone(),
            t_h: pair.t_h.clone(),
            offset_h: mean(&pair.y_h),
            params,
            chol,
            alpha,
            jitter,
            lml,
        })
    }

    /// Fit by joint marginal-likelihood maximization with seeded restarts.
    pub fn fit(pair: &FidelityPair, fit_seed: u64, opts: &FitOptions) -> Result<Self> {
        pair.validate()?;
        let blocks = Blocks::new(pair);
        let fixed_noise = match opts.noise {
            crate::gp::NoiseMode::Optimize => None,
            crate::gp::NoiseMode::Fixed(v) => Some(v),
        };

        let outcomes: Vec<Option<(usize, f64, Ar1Params)>> =
            crate::exec::map_indexed(opts.restarts, |r| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed::mix(fit_seed, &[0xa21, r as u64]));
                let lo = opts.init_low.ln();
                let hi = opts.init_high.ln();
                let n_kernel = if fixed_noise.is_some() { 4 } else { 6 };
                let mut x0: Vec<f64> = (0..n_kernel).map(|_| rng.gen_range(lo..hi)).collect();
                x0.push(1.0); // rho initialized at 1

                let mut bounds = vec![Bounds::LOG_SPACE; n_kernel];
                bounds.push(Bounds::LINEAR);

                let to_params = |x: &[f64]| match fixed_noise {
                    None => params_from_vec(x),
                    Some(noise) => params_from_vec(&expand_fixed_noise(x, noise)),
                };
                let outcome = lbfgs_maximize(
                    &x0,
                    &bounds,
                    &opts.optimize,
                    |x| blocks.eval(&to_params(x)).ok().map(|e| e.0),
                    |x| {
                        blocks.eval_grad(&to_params(x)).ok().map(|(v, g)| {
                            let g = match fixed_noise {
                                None => g,
                                Some(_) => vec![g[0], g[1], g[3], g[4], g[6]],
                            };
                            (v, g)
                        })
                    },
                )?;
                Some((r, outcome.value, to_params(&outcome.point)))
            });

        let best = outcomes
            .into_iter()
            .flatten()
            .fold(None::<(usize, f64, Ar1Params)>, |acc, cand| match acc {
                None => Some(cand),
                Some(best) => {
                    if cand.1 > best.1 || (cand.1 == best.1 && cand.0 < best.0) {
                        Some(cand)
                    } else {
                        Some(best)
                    }
                }
            })
            .ok_or_else(|| Error::Conditioning("AR1 fit: every restart failed".into()))?;

        Self::with_params(pair, best.2)
    }

    /// Posterior mean and variance of the high-fidelity process.
    pub fn predict(&self, points: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n_l = self.t_l.len();
        let n_h = self.t_h.len();
        let n = n_l + n_h;
        let p = &self.params;
        let th1 = p.k1.ard_weights[0];
        let th2 = p.k2.ard_weights[0];

        let mut cross = DMatrix::zeros(points.len(), n);
        for (i, &t) in points.iter().enumerate() {
            for (j, &tl) in self.t_l.iter().enumerate() {
                let d = t - tl;
                cross[(i, j)] =
                    p.rho * p.k1.signal_variance * (-0.5 * th1 * d * d).exp();
            }
            for (j, &th) in self.t_h.iter().enumerate() {
                let d = t - th;
                let k1 = p.k1.signal_variance * (-0.5 * th1 * d * d).exp();
                let k2 = p.k2.signal_variance * (-0.5 * th2 * d * d).exp();
                cross[(i, n_l + j)] = p.rho * p.rho * k1 + k2;
            }
        }

        let mean: Vec<f64> = (0..points.len())
            .map(|i| cross.row(i).transpose().dot(&self.alpha) + self.offset_h)
            .collect();

        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&cross.transpose())
            .ok_or_else(|| Error::Conditioning("singular factor in AR1 predict".into()))?;
        let prior = p.rho * p.rho * p.k1.signal_variance + p.k2.signal_variance;
        let variance: Vec<f64> = (0..points.len())
            .map(|i| (prior - v.column(i).norm_squared()).max(0.0))
            .collect();

        Ok((mean, variance))
    }

    pub fn params(&self) -> &Ar1Params {
        &self.params
    }

    pub fn rho(&self) -> f64 {
        self.params.rho
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::TrainedGP;

    fn linear_pair() -> FidelityPair {
        let t_l: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let t_h: Vec<f64> = (0..8).map(|i| i as f64 / 7.0).collect();
        let f = |t: f64| (3.0 * t).sin();
        FidelityPair::new(
            t_h.clone(),
            t_h.iter().map(|&t| 2.0 * f(t)).collect(),
            t_l.clone(),
            t_l.iter().map(|&t| f(t)).collect(),
            (0.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pair = linear_pair();
        let blocks = Blocks::new(&pair);
        let x = [1.2f64.ln(), 0.8f64.ln(), 0.05f64.ln(), 2.0f64.ln(), 0.5f64.ln(), 0.02f64.ln(), 1.3];
        let (_, analytic) = blocks.eval_grad(&params_from_vec(&x)).unwrap();
        let h = 1e-6;
        let mut fd = vec![0.0; 7];
        for k in 0..7 {
            let mut hi = x;
            hi[k] += h;
            let mut lo = x;
            lo[k] -= h;
            let (vh, ..) = blocks.eval(&params_from_vec(&hi)).unwrap();
            let (vl, ..) = blocks.eval(&params_from_vec(&lo)).unwrap();
            fd[k] = (vh - vl) / (2.0 * h);
        }
        let norm = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff = analytic
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-5 * norm.max(1.0), "analytic {analytic:?} fd {fd:?}");
    }

    #[test]
    fn rho_zero_decouples_to_plain_kriging() {
        let pair = linear_pair();
        let k2 = KernelParams::isotropic(1, 5.0, 1.0, 1e-6);
        let ar1 = Ar1Model::with_params(
            &pair,
            Ar1Params {
                k1: KernelParams::isotropic(1, 3.0, 1.0, 1e-4),
                k2: k2.clone(),
                rho: 0.0,
            },
        )
        .unwrap();
        let gp = TrainedGP::with_params(
            nalgebra::DMatrix::from_column_slice(pair.t_h.len(), 1, &pair.t_h),
            nalgebra::DVector::from_vec(pair.y_h.clone()),
            k2,
        )
        .unwrap();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let (m_ar1, v_ar1) = ar1.predict(&grid).unwrap();
        let (m_gp, v_gp) = gp.predict_scalar(&grid).unwrap();
        for i in 0..grid.len() {
            assert!((m_ar1[i] - m_gp[i]).abs() <= 1e-8, "mean mismatch at {i}");
            assert!((v_ar1[i] - v_gp[i]).abs() <= 1e-8, "variance mismatch at {i}");
        }
    }

    #[test]
    fn recovers_linearly_correlated_pair() {
        let pair = linear_pair();
        let ar1 = Ar1Model::fit(&pair, 17, &FitOptions::default()).unwrap();
        let grid: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
        let truth: Vec<f64> = grid.iter().map(|&t| 2.0 * (3.0 * t).sin()).collect();
        let (mean, _) = ar1.predict(&grid).unwrap();
        let num: f64 = mean
            .iter()
            .zip(&truth)
            .map(|(m, y)| (m - y) * (m - y))
            .sum::<f64>()
            .sqrt();
        let den: f64 = truth.iter().map(|y| y * y).sum::<f64>().sqrt();
        assert!(num / den <= 1e-3, "relative L2 {}", num / den);
    }
}
