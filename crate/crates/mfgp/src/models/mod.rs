//! Benchmark generators: the four analytic function pairs and the
//! Hodgkin-Huxley two-fidelity scenario.

pub mod hodgkin_huxley;

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fusion::EvalFn;

/// One two-fidelity benchmark: high- and low-fidelity functions over a
/// closed interval, with the sample counts its figure uses.
#[derive(Clone)]
pub struct BenchmarkPair {
    pub name: &'static str,
    pub f_h: EvalFn,
    pub f_l: EvalFn,
    pub domain: (f64, f64),
    /// `(|t_h|, |t_l|)` used in the corresponding figure.
    pub default_sizes: (usize, usize),
}

impl std::fmt::Debug for BenchmarkPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkPair")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("default_sizes", &self.default_sizes)
            .finish()
    }
}

/// Names of the analytic benchmarks, in presentation order.
pub const ANALYTIC_BENCHMARKS: [&str; 5] = [
    "simple",
    "embed_demo",
    "phase_shift",
    "periodicity",
    "discontinuity",
];

/// Low-fidelity half of the discontinuity benchmark. Jump of -5 across
/// t = 0.5; the point t = 0.5 itself takes the right-hand branch (the
/// interval [0.5, 1] is closed on the left).
fn discontinuous_low(t: f64) -> f64 {
    let base = 0.5 * (6.0 * t - 2.0).powi(2) * (12.0 * t - 4.0).sin() + 10.0 * (t - 0.5);
    if t < 0.5 {
        base - 5.0
    } else {
        base
    }
}

/// Look up an analytic benchmark by name.
pub fn benchmark(name: &str) -> Result<BenchmarkPair> {
    let pair = match name {
        // Over [0, 1] the high-fidelity target has 16 oscillation features,
        // so the introductory comparison (15 points on t versus 15 points on
        // f_l) is structural rather than an artifact of optimizer luck.
        "simple" => BenchmarkPair {
            name: "simple",
            f_h: Arc::new(|t: f64| (8.0 * PI * t).sin().powi(2)),
            f_l: Arc::new(|t: f64| (8.0 * PI * t).sin()),
            domain: (0.0, 1.0),
            default_sizes: (15, 100),
        },
        "embed_demo" => BenchmarkPair {
            name: "embed_demo",
            f_h: Arc::new(|t: f64| t * t + (8.0 * PI * t).sin().powi(2)),
            f_l: Arc::new(|t: f64| (8.0 * PI * t).sin()),
            domain: (0.0, 0.25),
            default_sizes: (7, 100),
        },
        "phase_shift" => BenchmarkPair {
            name: "phase_shift",
            f_h: Arc::new(|t: f64| t * t + (8.0 * PI * t + PI / 10.0).sin().powi(2)),
            f_l: Arc::new(|t: f64| (8.0 * PI * t).sin()),
            domain: (0.0, 1.0),
            default_sizes: (10, 100),
        },
        "periodicity" => BenchmarkPair {
            name: "periodicity",
            f_h: Arc::new(|t: f64| (8.0 * PI * t + PI / 10.0).sin()),
            f_l: Arc::new(|t: f64| (6.0 * 2.0f64.sqrt() * PI * t).sin()),
            domain: (0.0, 1.0),
            default_sizes: (15, 200),
        },
        "discontinuity" => BenchmarkPair {
            name: "discontinuity",
            f_h: Arc::new(|t: f64| 2.0 * discontinuous_low(t) - 20.0 * t + 20.0),
            f_l: Arc::new(discontinuous_low),
            domain: (0.0, 1.0),
            default_sizes: (10, 200),
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown benchmark '{other}' (expected one of {:?})",
                ANALYTIC_BENCHMARKS
            )))
        }
    };
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simple_peaks_at_one_sixteenth() {
        let b = benchmark("simple").unwrap();
        assert_relative_eq!((b.f_h)(1.0 / 16.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!((b.f_l)(1.0 / 16.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_shift_at_zero() {
        let b = benchmark("phase_shift").unwrap();
        assert_relative_eq!((b.f_h)(0.0), (PI / 10.0).sin().powi(2), epsilon = 1e-12);
        assert_relative_eq!((b.f_h)(0.0), 0.09549, epsilon = 1e-5);
    }

    #[test]
    fn discontinuity_jump_and_linear_relation() {
        let b = benchmark("discontinuity").unwrap();
        let left = (b.f_l)(0.5 - 1e-12);
        let right = (b.f_l)(0.5);
        assert_relative_eq!(left - right, -5.0, epsilon = 1e-8);
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let residual = (b.f_h)(t) - (2.0 * (b.f_l)(t) - 20.0 * t + 20.0);
            assert!(residual.abs() <= 1e-12);
        }
    }

    #[test]
    fn exactness_against_independent_formulas() {
        // Regression-proof re-statement of each pair, written from the
        // original expressions rather than the closures above.
        let grid: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let checks: [(&str, fn(f64) -> f64, fn(f64) -> f64); 5] = [
            (
                "simple",
                |t| (8.0 * PI * t).sin() * (8.0 * PI * t).sin(),
                |t| (8.0 * PI * t).sin(),
            ),
            (
                "embed_demo",
                |t| t.powi(2) + (8.0 * PI * t).sin() * (8.0 * PI * t).sin(),
                |t| (8.0 * PI * t).sin(),
            ),
            (
                "phase_shift",
                |t| {
                    let s = (8.0 * PI * t).sin() * (PI / 10.0).cos()
                        + (8.0 * PI * t).cos() * (PI / 10.0).sin();
                    t.powi(2) + s * s
                },
                |t| (8.0 * PI * t).sin(),
            ),
            (
                "periodicity",
                |t| {
                    (8.0 * PI * t).sin() * (PI / 10.0).cos()
                        + (8.0 * PI * t).cos() * (PI / 10.0).sin()
                },
                |t| (6.0 * std::f64::consts::SQRT_2 * PI * t).sin(),
            ),
            (
                "discontinuity",
                |t| {
                    let fl = 0.5 * (6.0 * t - 2.0).powi(2) * (12.0 * t - 4.0).sin()
                        + 10.0 * (t - 0.5)
                        + if t < 0.5 { -5.0 } else { 0.0 };
                    2.0 * fl - 20.0 * t + 20.0
                },
                |t| {
                    0.5 * (6.0 * t - 2.0).powi(2) * (12.0 * t - 4.0).sin()
                        + 10.0 * (t - 0.5)
                        + if t < 0.5 { -5.0 } else { 0.0 }
                },
            ),
        ];
        for (name, fh_ref, fl_ref) in checks {
            let b = benchmark(name).unwrap();
            let (a, bb) = b.domain;
            for &u in &grid {
                let t = a + u * (bb - a);
                assert!(
                    ((b.f_h)(t) - fh_ref(t)).abs() <= 1e-12,
                    "{name}: f_h mismatch at t = {t}"
                );
                assert!(
                    ((b.f_l)(t) - fl_ref(t)).abs() <= 1e-12,
                    "{name}: f_l mismatch at t = {t}"
                );
            }
        }
    }

    #[test]
    fn periodicity_trigonometric_identity() {
        let b = benchmark("periodicity").unwrap();
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let rewritten = (8.0 * PI * t).sin() * (PI / 10.0).cos()
                + (8.0 * PI * t).cos() * (PI / 10.0).sin();
            assert!(((b.f_h)(t) - rewritten).abs() <= 1e-12);
        }
    }

    #[test]
    fn unknown_name_is_an_error() {
        assert!(benchmark("nope").is_err());
        assert!(benchmark("hh").is_err()); // the HH pair is built by simulation
    }

    #[test]
    fn all_pairs_finite_on_their_domain() {
        for name in ANALYTIC_BENCHMARKS {
            let b = benchmark(name).unwrap();
            let (a, bb) = b.domain;
            for i in 0..=500 {
                let t = a + (bb - a) * i as f64 / 500.0;
                assert!((b.f_h)(t).is_finite() && (b.f_l)(t).is_finite());
            }
        }
    }
}
