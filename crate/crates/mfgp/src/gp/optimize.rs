//! Quasi-Newton (L-BFGS) maximizer with a backtracking line search.
//!
//! Works on a plain `Vec<f64>` parameter vector; callers map their
//! hyperparameters into and out of it (log-space for positive quantities).
//! Line-search probes only need objective values; the gradient is evaluated
//! once per accepted iterate, which keeps the cost per iteration at one
//! Cholesky plus one inverse.

use std::collections::VecDeque;

/// Bounds applied by clamping after every step. Wide enough to be inactive
/// for healthy problems; they only stop runaway drift toward +-inf.
#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const LOG_SPACE: Bounds = Bounds {
        lower: -23.0, // exp(-23) ~ 1e-10
        upper: 23.0,
    };

    pub const LINEAR: Bounds = Bounds {
        lower: -1e3,
        upper: 1e3,
    };

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub memory: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 120,
            grad_tol: 1e-5,
            memory: 8,
        }
    }
}

pub struct OptimizeOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Two-loop recursion: multiply the gradient by the approximate inverse
/// Hessian built from stored (s, y) pairs. Returns an ascent direction.
fn lbfgs_direction(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut a = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let ai = rho * dot(s, &q);
        for (qk, yk) in q.iter_mut().zip(y) {
            *qk -= ai * yk;
        }
        a.push(ai);
    }
    if let Some((s, y, _)) = history.back() {
        let ys = dot(y, s);
        let yy = dot(y, y);
        if yy > 0.0 && ys > 0.0 {
            let gamma = ys / yy;
            for qk in q.iter_mut() {
                *qk *= gamma;
            }
        }
    }
    for ((s, y, rho), ai) in history.iter().zip(a.iter().rev()) {
        let bi = rho * dot(y, &q);
        for (qk, sk) in q.iter_mut().zip(s) {
            *qk += (ai - bi) * sk;
        }
    }
    q
}

/// Maximize `value`/`value_grad` starting from `x0`.
///
/// `value` may return `None` when the point is not evaluable (for GP
/// likelihoods: Cholesky failure past the jitter ceiling); the line search
/// treats that as minus infinity and backtracks. Returns `None` only when
/// the starting point itself is not evaluable.
pub fn lbfgs_maximize<V, G>(
    x0: &[f64],
    bounds: &[Bounds],
    opts: &OptimizeOptions,
    mut value: V,
    mut value_grad: G,
) -> Option<OptimizeOutcome>
where
    V: FnMut(&[f64]) -> Option<f64>,
    G: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    debug_assert_eq!(x0.len(), bounds.len());
    let mut x: Vec<f64> = x0
        .iter()
        .zip(bounds)
        .map(|(v, b)| b.clamp(*v))
        .collect();
    let (mut f, mut g) = value_grad(&x)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        if inf_norm(&g) <= opts.grad_tol {
            break;
        }
        iterations += 1;

        let mut dir = lbfgs_direction(&g, &history);
        if dot(&dir, &g) <= 0.0 {
            // Not an ascent direction (stale curvature); fall back to steepest.
            history.clear();
            dir = g.clone();
        }

        // Backtracking Armijo search on the clamped step.
        let slope = dot(&dir, &g);
        let mut step = 1.0;
        let mut accepted: Option<(Vec<f64>, f64)> = None;
        for _ in 0..30 {
            let cand: Vec<f64> = x
                .iter()
                .zip(&dir)
                .zip(bounds)
                .map(|((xi, di), b)| b.clamp(xi + step * di))
                .collect();
            if let Some(fc) = value(&cand) {
                if fc.is_finite() && fc >= f + 1e-4 * step * slope {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, _)) = accepted else {
            break; // no improving step found
        };
        let Some((f_new, g_new)) = value_grad(&x_new) else {
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(old, new)| old - new).collect();
        let ys = dot(&y, &s);
        if ys > 1e-12 * inf_norm(&y) * inf_norm(&s) && ys > 0.0 {
            if history.len() >= opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / ys));
        }

        x = x_new;
        f = f_new;
        g = g_new;
    }

    Some(OptimizeOutcome {
        point: x,
        value: f,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn maximizes_concave_quadratic() {
        // f(x) = -(x0-1)^2 - 2 (x1+0.5)^2
        let f = |x: &[f64]| Some(-(x[0] - 1.0).powi(2) - 2.0 * (x[1] + 0.5).powi(2));
        let fg = |x: &[f64]| {
            f(x).map(|v| (v, vec![-2.0 * (x[0] - 1.0), -4.0 * (x[1] + 0.5)]))
        };
        let out = lbfgs_maximize(
            &[5.0, 5.0],
            &[Bounds::LOG_SPACE; 2],
            &OptimizeOptions::default(),
            f,
            fg,
        )
        .unwrap();
        assert_relative_eq!(out.point[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(out.point[1], -0.5, epsilon = 1e-6);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| Some(x[0]);
        let fg = |x: &[f64]| Some((x[0], vec![1.0]));
        let bounds = [Bounds {
            lower: -1.0,
            upper: 2.0,
        }];
        let out =
            lbfgs_maximize(&[0.0], &bounds, &OptimizeOptions::default(), f, fg).unwrap();
        assert!(out.point[0] <= 2.0 + 1e-12);
        assert_relative_eq!(out.point[0], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn value_never_decreases_from_start() {
        let f = |x: &[f64]| {
            if x[0] > 3.0 {
                None // unevaluable region
            } else {
                Some(-(x[0] - 2.0).powi(2))
            }
        };
        let fg = |x: &[f64]| f(x).map(|v| (v, vec![-2.0 * (x[0] - 2.0)]));
        let out = lbfgs_maximize(
            &[-4.0],
            &[Bounds::LOG_SPACE],
            &OptimizeOptions::default(),
            f,
            fg,
        )
        .unwrap();
        assert!(out.value >= -(-4.0f64 - 2.0).powi(2));
        assert_relative_eq!(out.point[0], 2.0, epsilon = 1e-6);
    }
}
