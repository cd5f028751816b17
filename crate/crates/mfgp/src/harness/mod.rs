//! Experiment orchestration: random high-fidelity subset selection,
//! repeated trials, log-L2 errors, and sensitivity sweeps over the number
//! of high-fidelity points.

mod csvio;
mod metrics;
mod sampling;

pub use csvio::{
    fmt_f64, write_predictions_csv, write_results_csv, write_summary_csv, write_sweep_csv,
};
pub use metrics::{log_l2_error, LOG_ERROR_FLOOR};
pub use sampling::{sample_high_fidelity, uniform_grid};

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::fusion::{
    train_low_fidelity, EmbeddingConfig, FidelityPair, LowFiEvaluator, LowFiSource, MethodChoice,
    run_fusion_pipeline,
};
use crate::models::{benchmark, hodgkin_huxley, BenchmarkPair};
use crate::seed;

/// The six scenarios the harness can run: the five analytic pairs plus the
/// simulated Hodgkin-Huxley pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkId {
    Simple,
    EmbedDemo,
    PhaseShift,
    Periodicity,
    Discontinuity,
    HodgkinHuxley,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 6] = [
        BenchmarkId::Simple,
        BenchmarkId::EmbedDemo,
        BenchmarkId::PhaseShift,
        BenchmarkId::Periodicity,
        BenchmarkId::Discontinuity,
        BenchmarkId::HodgkinHuxley,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "simple" => Ok(Self::Simple),
            "embed_demo" => Ok(Self::EmbedDemo),
            "phase_shift" => Ok(Self::PhaseShift),
            "periodicity" => Ok(Self::Periodicity),
            "discontinuity" => Ok(Self::Discontinuity),
            "hh" => Ok(Self::HodgkinHuxley),
            other => Err(Error::InvalidArgument(format!(
                "unknown benchmark '{other}'"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Simple => "simple",
            Self::EmbedDemo => "embed_demo",
            Self::PhaseShift => "phase_shift",
            Self::Periodicity => "periodicity",
            Self::Discontinuity => "discontinuity",
            Self::HodgkinHuxley => "hh",
        }
    }

    /// Materialize the benchmark functions (simulates the HH traces).
    pub fn load(&self) -> Result<BenchmarkPair> {
        match self {
            Self::HodgkinHuxley => hodgkin_huxley::hh_benchmark(),
            other => benchmark(other.name()),
        }
    }

    /// Input domain (known statically; `load` is not needed for it).
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::EmbedDemo => (0.0, 0.25),
            _ => (0.0, 1.0),
        }
    }

    /// Low-fidelity grid size used in the corresponding figure.
    pub fn default_n_low(&self) -> usize {
        match self {
            Self::Simple | Self::EmbedDemo | Self::PhaseShift => 100,
            Self::Periodicity | Self::Discontinuity => 200,
            Self::HodgkinHuxley => 300,
        }
    }

    pub fn default_n_high(&self) -> Vec<usize> {
        match self {
            Self::Simple => vec![15],
            Self::EmbedDemo => vec![7],
            Self::HodgkinHuxley => vec![20, 25, 30, 35],
            _ => vec![10, 15, 20, 25],
        }
    }

    /// Default delay step.
    ///
    /// For the two benchmarks whose low-fidelity signal is a pure sinusoid
    /// over many periods, the default is a quarter of that period (the
    /// first zero of the autocorrelation, the usual delay-embedding
    /// choice): the first delay column then carries the quadrature
    /// component at full amplitude instead of a nearly collinear copy of
    /// `f_l(t)`. Everything else defaults to the low-fidelity grid spacing.
    pub fn default_tau(&self, n_low: usize, domain: (f64, f64)) -> f64 {
        match self {
            // f_l = sin(8 pi t): period 1/4
            Self::PhaseShift => 0.25 / 4.0,
            // f_l = sin(6 sqrt(2) pi t): period 1/(3 sqrt(2))
            Self::Periodicity => 1.0 / (3.0 * std::f64::consts::SQRT_2) / 4.0,
            // an eighth of the limit-cycle period, in window-normalized time
            Self::HodgkinHuxley => {
                hodgkin_huxley::OSCILLATION_PERIOD_MS
                    / 8.0
                    / (hodgkin_huxley::WINDOW_END - hodgkin_huxley::WINDOW_START)
            }
            _ => (domain.1 - domain.0) / n_low as f64,
        }
    }
}

/// One method to run, with a stable identifier for CSV output.
#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub id: String,
    pub choice: MethodChoice,
}

impl MethodSpec {
    pub fn new(id: impl Into<String>, choice: MethodChoice) -> Self {
        Self {
            id: id.into(),
            choice,
        }
    }

    /// Build one of the named method families.
    ///
    /// `tau` is the delay step used by the embedded families
    /// (`delays_only`, `gpe`, `gpe2`); `kriging`, `ar1` and `nargp` ignore
    /// it.
    pub fn standard(kind: &str, tau: f64) -> Result<Self> {
        let spec = match kind {
            "kriging" => Self::new("kriging", MethodChoice::Kriging),
            "ar1" => Self::new("ar1", MethodChoice::Ar1),
            "nargp" => Self::new("nargp", MethodChoice::Nargp),
            "delays_only" => Self::new(
                "delays_only",
                MethodChoice::Gpe(EmbeddingConfig::delays_only(tau)),
            ),
            "gpe" => Self::new("gpe", MethodChoice::Gpe(EmbeddingConfig::gpe(tau))),
            "gpe2" => Self::new("gpe2", MethodChoice::Gpe(EmbeddingConfig::gpe2(tau))),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown method '{other}' (expected kriging, ar1, nargp, delays_only, gpe or gpe2)"
                )))
            }
        };
        Ok(spec)
    }

    pub const STANDARD_KINDS: [&'static str; 6] =
        ["kriging", "ar1", "nargp", "delays_only", "gpe", "gpe2"];
}

/// Full description of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkId,
    pub methods: Vec<MethodSpec>,
    pub n_high: Vec<usize>,
    pub n_low: usize,
    pub n_trials: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Evaluate the analytic low-fidelity function instead of training a
    /// surrogate from sampled data.
    pub analytic_lowfi: bool,
    /// Worker cap for trial execution (`None`: all available cores).
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    /// Paper-reproduction defaults for a benchmark: the methods its figure
    /// compares, its sample counts, 10 trials, a 500-point test grid.
    pub fn defaults(benchmark: BenchmarkId) -> Result<Self> {
        let n_low = benchmark.default_n_low();
        let tau = benchmark.default_tau(n_low, benchmark.domain());
        let method_kinds: &[&str] = match benchmark {
            BenchmarkId::Simple => &["kriging"],
            BenchmarkId::EmbedDemo => &["kriging", "nargp", "gpe"],
            BenchmarkId::PhaseShift => &["kriging", "ar1", "nargp", "delays_only", "gpe"],
            _ => &["kriging", "ar1", "nargp", "gpe", "gpe2"],
        };
        let mut methods: Vec<MethodSpec> = method_kinds
            .iter()
            .map(|k| MethodSpec::standard(k, tau))
            .collect::<Result<_>>()?;
        if benchmark == BenchmarkId::Simple {
            // The introductory comparison: GP over t alone versus GP over
            // f_l(t) alone.
            methods.push(MethodSpec::new(
                "gp_on_fl",
                MethodChoice::Gpe(EmbeddingConfig {
                    num_delays: 0,
                    delay_step: 0.0,
                    include_t: false,
                    include_fl: true,
                }),
            ));
        }
        Ok(Self {
            benchmark,
            methods,
            n_high: benchmark.default_n_high(),
            n_low,
            n_trials: 10,
            n_test: 500,
            seed: 0,
            analytic_lowfi: false,
            jobs: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("config: no methods".into()));
        }
        let mut ids: Vec<&str> = self.methods.iter().map(|m| m.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.methods.len() {
            return Err(Error::InvalidArgument(
                "config: duplicate method ids".into(),
            ));
        }
        if self.n_high.is_empty() || self.n_high.iter().any(|&n| n < 1) {
            return Err(Error::InvalidArgument(
                "config: n_high values must all be >= 1".into(),
            ));
        }
        if self.n_trials < 1 {
            return Err(Error::InvalidArgument("config: n_trials must be >= 1".into()));
        }
        if self.n_low < 2 {
            return Err(Error::InvalidArgument("config: n_low must be >= 2".into()));
        }
        if self.n_test < 2 {
            return Err(Error::InvalidArgument("config: n_test must be >= 2".into()));
        }
        Ok(())
    }
}

/// Outcome of one (method, n_high, trial) work unit.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub method: String,
    pub n_high: usize,
    pub trial: usize,
    /// `None` when the trial failed (conditioning error etc.).
    pub log_l2_error: Option<f64>,
    pub wall_time: Duration,
}

/// Aggregate over trials for one (method, n_high) cell.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub method: String,
    pub n_high: usize,
    /// Arithmetic mean of the successful trials' log errors.
    pub mean_log_l2: Option<f64>,
    pub n_failed: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub benchmark: String,
    pub trials: Vec<TrialResult>,
    pub cells: Vec<CellSummary>,
}

impl ExperimentResults {
    pub fn cell(&self, method: &str, n_high: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.n_high == n_high)
    }

    /// Per-trial relative L2 errors (`10^log`) for one cell.
    pub fn cell_trial_errors(&self, method: &str, n_high: usize) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|t| t.method == method && t.n_high == n_high)
            .filter_map(|t| t.log_l2_error)
            .map(|e| 10f64.powf(e))
            .collect()
    }
}

/// Sensitivity table: mean log-L2 per (method, n_high).
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub benchmark: String,
    pub methods: Vec<String>,
    pub n_high: Vec<usize>,
    /// Row-per-method, column-per-n_high.
    pub rows: Vec<Vec<Option<f64>>>,
}

impl SweepTable {
    pub fn from_results(cfg: &ExperimentConfig, results: &ExperimentResults) -> Self {
        let methods: Vec<String> = cfg.methods.iter().map(|m| m.id.clone()).collect();
        let rows = methods
            .iter()
            .map(|m| {
                cfg.n_high
                    .iter()
                    .map(|&n| results.cell(m, n).and_then(|c| c.mean_log_l2))
                    .collect()
            })
            .collect();
        Self {
            benchmark: results.benchmark.clone(),
            methods,
            n_high: cfg.n_high.clone(),
            rows,
        }
    }

    pub fn mean(&self, method: &str, n_high: usize) -> Option<f64> {
        let r = self.methods.iter().position(|m| m == method)?;
        let c = self.n_high.iter().position(|&n| n == n_high)?;
        self.rows[r][c]
    }
}

impl std::fmt::Display for SweepTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:<14}", format!("{} ", self.benchmark))?;
        for n in &self.n_high {
            write!(f, "{:>10}", format!("n={n}"))?;
        }
        writeln!(f)?;
        for (m, row) in self.methods.iter().zip(&self.rows) {
            write!(f, "{m:<14}")?;
            for v in row {
                match v {
                    Some(x) => write!(f, "{x:>10.3}")?,
                    None => write!(f, "{:>10}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

struct TrialOutput {
    method_idx: usize,
    n_high_idx: usize,
    trial: usize,
    log_l2: Result<f64>,
    wall_time: Duration,
}

/// Run the full trial matrix for one experiment.
///
/// For each (method, n_high, trial): a fresh random high-fidelity subset
/// (shared across methods within the trial for a paired comparison), the
/// fixed uniform low-fidelity grid, the full two-stage pipeline, and the
/// log-L2 error on the uniform test grid. Failed trials are excluded from
/// cell means; a cell with more than 50% failures fails the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let bench = cfg.benchmark.load()?;
    let domain = bench.domain;
    let bench_name = bench.name.to_string();

    let t_l = uniform_grid(domain, cfg.n_low);
    let y_l: Vec<f64> = t_l.iter().map(|&t| (bench.f_l)(t)).collect();
    let test_grid = uniform_grid(domain, cfg.n_test);
    let truth: Vec<f64> = test_grid.iter().map(|&t| (bench.f_h)(t)).collect();

    // High-fidelity subsets: one per (n_high, trial), shared across methods.
    let subsets: Vec<Vec<Vec<f64>>> = cfg
        .n_high
        .iter()
        .map(|&n| {
            (0..cfg.n_trials)
                .map(|trial| {
                    let s = seed::mix(
                        seed::mix_str(cfg.seed, "highfi"),
                        &[hash_tag(&bench_name), n as u64, trial as u64],
                    );
                    sample_high_fidelity(domain, n, s)
                })
                .collect()
        })
        .collect();

    // Low-fidelity surrogates: one per trial, shared across methods and
    // n_high (the low-fidelity grid does not depend on either). Re-seeded
    // per trial so optimizer restarts are re-randomized like everything
    // else.
    let needs_surrogate = !cfg.analytic_lowfi
        && cfg.methods.iter().any(|m| {
            m.choice.needs_low_fidelity() && !matches!(m.choice, MethodChoice::Ar1)
        });
    let surrogates: Vec<Option<Result<LowFiEvaluator>>> = if needs_surrogate {
        crate::exec::map_items((0..cfg.n_trials).collect(), cfg.jobs, |trial| {
            let s = seed::mix(
                seed::mix_str(cfg.seed, "lowfi"),
                &[hash_tag(&bench_name), trial as u64],
            );
            let started = Instant::now();
            let fit = train_low_fidelity(&t_l, &y_l, s).map(LowFiEvaluator::surrogate);
            log::info!(
                "surrogate fit trial {trial}: {:?} ({} points)",
                started.elapsed(),
                t_l.len()
            );
            Some(fit)
        })
    } else {
        (0..cfg.n_trials).map(|_| None).collect()
    };

    // One work unit per (method, n_high, trial).
    let mut units = Vec::new();
    for (mi, _) in cfg.methods.iter().enumerate() {
        for (ni, _) in cfg.n_high.iter().enumerate() {
            for trial in 0..cfg.n_trials {
                units.push((mi, ni, trial));
            }
        }
    }

    let outputs: Vec<TrialOutput> = crate::exec::map_items(units, cfg.jobs, |(mi, ni, trial)| {
        let started = Instant::now();
        let method = &cfg.methods[mi];
        let n_high = cfg.n_high[ni];
        let t_h = &subsets[ni][trial];
        let fit_seed = seed::mix(
            seed::mix_str(seed::mix_str(cfg.seed, "fit"), &method.id),
            &[hash_tag(&bench_name), n_high as u64, trial as u64],
        );
        let log_l2 = run_trial(
            cfg,
            &bench,
            method,
            t_h,
            &t_l,
            &y_l,
            &test_grid,
            &truth,
            surrogates[trial].as_ref(),
            fit_seed,
        );
        if let Err(err) = &log_l2 {
            log::warn!(
                "trial failed: benchmark {bench_name}, method {}, n_high {n_high}, trial {trial}: {err}",
                method.id
            );
        }
        TrialOutput {
            method_idx: mi,
            n_high_idx: ni,
            trial,
            log_l2,
            wall_time: started.elapsed(),
        }
    });

    // Deterministic assembly in (method, n_high, trial) order.
    let mut trials: Vec<TrialResult> = Vec::with_capacity(outputs.len());
    let mut sorted = outputs;
    sorted.sort_by_key(|o| (o.method_idx, o.n_high_idx, o.trial));
    for o in &sorted {
        trials.push(TrialResult {
            method: cfg.methods[o.method_idx].id.clone(),
            n_high: cfg.n_high[o.n_high_idx],
            trial: o.trial,
            log_l2_error: o.log_l2.as_ref().ok().copied(),
            wall_time: o.wall_time,
        });
    }

    let mut cells = Vec::new();
    for method in &cfg.methods {
        for &n_high in &cfg.n_high {
            let cell_trials: Vec<&TrialResult> = trials
                .iter()
                .filter(|t| t.method == method.id && t.n_high == n_high)
                .collect();
            let ok: Vec<f64> = cell_trials.iter().filter_map(|t| t.log_l2_error).collect();
            let n_failed = cell_trials.len() - ok.len();
            if n_failed * 2 > cell_trials.len() {
                return Err(Error::Experiment(format!(
                    "cell (method {}, n_high {n_high}): {n_failed} of {} trials failed",
                    method.id,
                    cell_trials.len()
                )));
            }
            let mean_log_l2 = if ok.is_empty() {
                None
            } else {
                Some(ok.iter().sum::<f64>() / ok.len() as f64)
            };
            cells.push(CellSummary {
                method: method.id.clone(),
                n_high,
                mean_log_l2,
                n_failed,
            });
        }
    }

    Ok(ExperimentResults {
        benchmark: bench_name,
        trials,
        cells,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    cfg: &ExperimentConfig,
    bench: &BenchmarkPair,
    method: &MethodSpec,
    t_h: &[f64],
    t_l: &[f64],
    y_l: &[f64],
    test_grid: &[f64],
    truth: &[f64],
    surrogate: Option<&Result<LowFiEvaluator>>,
    fit_seed: u64,
) -> Result<f64> {
    let y_h: Vec<f64> = t_h.iter().map(|&t| (bench.f_h)(t)).collect();
    let pair = FidelityPair::new(
        t_h.to_vec(),
        y_h,
        t_l.to_vec(),
        y_l.to_vec(),
        bench.domain,
    )?;
    let source = if cfg.analytic_lowfi {
        LowFiSource::Analytic(bench.f_l.clone())
    } else if method.choice.needs_low_fidelity()
        && !matches!(method.choice, MethodChoice::Ar1)
    {
        match surrogate {
            Some(Ok(eval)) => LowFiSource::Pretrained(eval.clone()),
            Some(Err(err)) => {
                return Err(Error::Conditioning(format!(
                    "shared low-fidelity surrogate failed: {err}"
                )))
            }
            None => LowFiSource::Train,
        }
    } else {
        LowFiSource::Train
    };
    let preds = run_fusion_pipeline(&pair, &method.choice, test_grid, fit_seed, &source)?;
    if preds.mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::Conditioning("non-finite prediction mean".into()));
    }
    if preds.variance.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Conditioning("invalid prediction variance".into()));
    }
    log_l2_error(&preds.mean, truth)
}

/// Sensitivity sweep: run the experiment and pivot the cell means into a
/// (method x n_high) table. Requires at least two n_high entries.
pub fn sensitivity_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    if cfg.n_high.len() < 2 {
        return Err(Error::InvalidArgument(
            "sensitivity_sweep: need at least two n_high values".into(),
        ));
    }
    let results = run_experiment(cfg)?;
    Ok(SweepTable::from_results(cfg, &results))
}

/// One prediction dump per method (trial 0, first n_high entry) for
/// plotting: t, posterior mean/variance, truth.
#[derive(Debug, Clone)]
pub struct PredictionRun {
    pub method: String,
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub truth: Vec<f64>,
    pub log_l2: f64,
}

pub fn run_predictions(cfg: &ExperimentConfig) -> Result<Vec<PredictionRun>> {
    cfg.validate()?;
    let bench = cfg.benchmark.load()?;
    let bench_name = bench.name.to_string();
    let domain = bench.domain;
    let n_high = cfg.n_high[0];

    let t_l = uniform_grid(domain, cfg.n_low);
    let y_l: Vec<f64> = t_l.iter().map(|&t| (bench.f_l)(t)).collect();
    let test_grid = uniform_grid(domain, cfg.n_test);
    let truth: Vec<f64> = test_grid.iter().map(|&t| (bench.f_h)(t)).collect();
    let t_h = sample_high_fidelity(
        domain,
        n_high,
        seed::mix(
            seed::mix_str(cfg.seed, "highfi"),
            &[hash_tag(&bench_name), n_high as u64, 0],
        ),
    );

    let surrogate: Option<LowFiEvaluator> = if cfg.analytic_lowfi {
        None
    } else {
        let s = seed::mix(
            seed::mix_str(cfg.seed, "lowfi"),
            &[hash_tag(&bench_name), 0],
        );
        Some(LowFiEvaluator::surrogate(train_low_fidelity(
            &t_l, &y_l, s,
        )?))
    };

    let runs = crate::exec::map_items(cfg.methods.clone(), cfg.jobs, |method| {
        let fit_seed = seed::mix(
            seed::mix_str(seed::mix_str(cfg.seed, "fit"), &method.id),
            &[hash_tag(&bench_name), n_high as u64, 0],
        );
        let log_l2 = run_trial(
            cfg,
            &bench,
            &method,
            &t_h,
            &t_l,
            &y_l,
            &test_grid,
            &truth,
            surrogate.clone().map(Ok).as_ref(),
            fit_seed,
        )?;
        // Re-run prediction to capture the dump (run_trial only returns the
        // error metric; model builds are deterministic per seed).
        let y_h: Vec<f64> = t_h.iter().map(|&t| (bench.f_h)(t)).collect();
        let pair = FidelityPair::new(
            t_h.clone(),
            y_h,
            t_l.clone(),
            y_l.clone(),
            domain,
        )?;
        let source = match (&surrogate, cfg.analytic_lowfi) {
            (_, true) => LowFiSource::Analytic(bench.f_l.clone()),
            (Some(eval), _) => LowFiSource::Pretrained(eval.clone()),
            (None, _) => LowFiSource::Train,
        };
        let preds = run_fusion_pipeline(&pair, &method.choice, &test_grid, fit_seed, &source)?;
        Ok(PredictionRun {
            method: method.id.clone(),
            t: test_grid.clone(),
            mean: preds.mean,
            variance: preds.variance,
            truth: truth.clone(),
            log_l2,
        })
    });
    runs.into_iter().collect()
}

fn hash_tag(s: &str) -> u64 {
    let mut fnv: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.as_bytes() {
        fnv ^= u64::from(*b);
        fnv = fnv.wrapping_mul(0x0000_0100_0000_01B3);
    }
    fnv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            benchmark: BenchmarkId::EmbedDemo,
            methods: vec![
                MethodSpec::standard("kriging", 0.0025).unwrap(),
                MethodSpec::standard("nargp", 0.0025).unwrap(),
            ],
            n_high: vec![7],
            n_low: 30,
            n_trials: 2,
            n_test: 60,
            seed: 5,
            analytic_lowfi: false,
            jobs: None,
        }
    }

    #[test]
    fn smoke_run_produces_finite_results() {
        let results = run_experiment(&tiny_config()).unwrap();
        assert_eq!(results.trials.len(), 4);
        for t in &results.trials {
            let e = t.log_l2_error.expect("trial should succeed");
            assert!(e.is_finite());
        }
        for c in &results.cells {
            assert_eq!(c.n_failed, 0);
            assert!(c.mean_log_l2.unwrap().is_finite());
        }
    }

    #[test]
    fn reproducible_and_paired() {
        let cfg = tiny_config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        for (x, y) in a.trials.iter().zip(&b.trials) {
            assert_eq!(x.log_l2_error, y.log_l2_error, "bitwise reproducibility");
        }
        // Aggregation exactness: mean equals arithmetic mean of trial values.
        for c in &a.cells {
            let vals: Vec<f64> = a
                .trials
                .iter()
                .filter(|t| t.method == c.method && t.n_high == c.n_high)
                .filter_map(|t| t.log_l2_error)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert_eq!(c.mean_log_l2.unwrap(), mean);
        }
    }

    #[test]
    fn sweep_requires_two_points() {
        let cfg = tiny_config();
        assert!(sensitivity_sweep(&cfg).is_err());
    }

    #[test]
    fn sweep_table_shape() {
        let mut cfg = tiny_config();
        cfg.n_high = vec![5, 7];
        let table = sensitivity_sweep(&cfg).unwrap();
        assert_eq!(table.methods.len(), 2);
        assert_eq!(table.n_high, vec![5, 7]);
        for row in &table.rows {
            assert_eq!(row.len(), 2);
            assert!(row.iter().all(|v| v.unwrap().is_finite()));
        }
        assert!(table.mean("kriging", 5).is_some());
        assert!(table.mean("absent", 5).is_none());
    }

    #[test]
    fn config_validation() {
        let mut cfg = tiny_config();
        cfg.n_trials = 0;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = tiny_config();
        cfg.methods.push(MethodSpec::standard("kriging", 0.1).unwrap());
        assert!(cfg.validate().is_err(), "duplicate ids rejected");
    }

    #[test]
    fn defaults_echo_figure_captions() {
        let cfg = ExperimentConfig::defaults(BenchmarkId::PhaseShift).unwrap();
        assert_eq!(cfg.n_low, 100);
        assert_eq!(cfg.n_high, vec![10, 15, 20, 25]);
        assert_eq!(cfg.n_trials, 10);
        let ids: Vec<&str> = cfg.methods.iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids, ["kriging", "ar1", "nargp", "delays_only", "gpe"]);
        match &cfg.methods[4].choice {
            MethodChoice::Gpe(c) => assert!((c.delay_step - 0.0625).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }

        let hh = ExperimentConfig::defaults(BenchmarkId::HodgkinHuxley).unwrap();
        assert_eq!(hh.n_low, 300);
        assert_eq!(hh.n_high, vec![20, 25, 30, 35]);

        let disc = ExperimentConfig::defaults(BenchmarkId::Discontinuity).unwrap();
        assert_eq!(disc.n_low, 200);
    }

    #[test]
    fn prediction_runs_cover_methods() {
        let mut cfg = tiny_config();
        cfg.n_test = 40;
        let runs = run_predictions(&cfg).unwrap();
        assert_eq!(runs.len(), 2);
        for r in runs {
            assert_eq!(r.t.len(), 40);
            assert!(r.mean.iter().all(|v| v.is_finite()));
            assert!(r.variance.iter().all(|v| *v >= 0.0));
            assert!(r.log_l2.is_finite());
        }
    }
}
