//! Benchmark CLI: run fusion experiments from JSON configs, sweep the
//! number of high-fidelity points, simulate the Hodgkin-Huxley model, and
//! write CSV artifacts.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use mfgp::harness::{self, run_experiment, run_predictions, ExperimentConfig, SweepTable};
use mfgp::models::hodgkin_huxley::{
    hh_simulate, HHParameters, HHState, DEFAULT_DT, DEFAULT_T_END, DEFAULT_V0, SPIKE_THRESHOLD,
};
use mfgp::models::ANALYTIC_BENCHMARKS;

#[derive(Parser)]
#[command(
    name = "mfgp",
    about = "Multifidelity GP regression benchmarks",
    version
)]
struct Cli {
    /// Output directory for CSV artifacts (fallback: $MFGP_OUT, then ./out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the master seed from the config
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap the number of concurrent trials
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Evaluate the analytic low-fidelity function instead of training a
    /// surrogate on sampled data
    #[arg(long, global = true)]
    analytic_lowfi: bool,

    /// Increase logging (-v: info, -vv: debug)
    #[arg(short, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded draw per method and dump prediction curves
    Run { config: PathBuf },
    /// Run the full trial matrix and write results/summary CSVs
    Sweep { config: PathBuf },
    /// Integrate the Hodgkin-Huxley model and write the trajectory
    SimulateHh {
        /// External current
        #[arg(long, default_value_t = 1.0)]
        i_ext: f64,
        /// Simulation horizon (ms)
        #[arg(long, default_value_t = DEFAULT_T_END)]
        t_end: f64,
        /// Integrator step (ms)
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
    },
    /// List available benchmarks
    ListBenchmarks,
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn out_dir(cli_out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = cli_out
        .clone()
        .or_else(|| std::env::var_os("MFGP_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

fn load_config(cli: &Cli, path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = config::parse_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.analytic_lowfi {
        cfg.analytic_lowfi = true;
    }
    cfg.jobs = cli.jobs;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::ListBenchmarks => {
            for name in ANALYTIC_BENCHMARKS {
                println!("{name}");
            }
            println!("hh");
            Ok(())
        }
        Command::SimulateHh { i_ext, t_end, dt } => {
            let dir = out_dir(&cli.out)?;
            let traj = hh_simulate(
                &HHParameters::with_current(*i_ext),
                HHState::resting(DEFAULT_V0),
                *t_end,
                *dt,
            )?;
            let path = dir.join("hh_trajectory.csv");
            let mut w = BufWriter::new(File::create(&path)?);
            writeln!(w, "t,V,n,m,h")?;
            for (t, s) in traj.times.iter().zip(&traj.states) {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    harness::fmt_f64(*t),
                    harness::fmt_f64(s.v),
                    harness::fmt_f64(s.n),
                    harness::fmt_f64(s.m),
                    harness::fmt_f64(s.h)
                )?;
            }
            w.flush()?;
            println!(
                "wrote {} ({} samples, {} spikes above {} mV, max gate overshoot {:.2e})",
                path.display(),
                traj.times.len(),
                traj.spike_count(SPIKE_THRESHOLD),
                SPIKE_THRESHOLD,
                traj.max_gate_overshoot
            );
            Ok(())
        }
        Command::Run { config } => {
            let cfg = load_config(&cli, config)?;
            let dir = out_dir(&cli.out)?;
            let runs = run_predictions(&cfg)?;
            let bench = cfg.benchmark.name();
            println!("benchmark {bench}: n_high = {}, seed = {}", cfg.n_high[0], cfg.seed);
            for r in &runs {
                let path = dir.join(format!("predictions_{bench}_{}.csv", r.method));
                let mut w = BufWriter::new(File::create(&path)?);
                harness::write_predictions_csv(&mut w, &r.t, &r.mean, &r.variance, &r.truth)?;
                w.flush()?;
                println!("  {:<12} log10 rel L2 = {:+.3}  -> {}", r.method, r.log_l2, path.display());
            }
            Ok(())
        }
        Command::Sweep { config } => {
            let cfg = load_config(&cli, config)?;
            let dir = out_dir(&cli.out)?;
            let results = run_experiment(&cfg)?;

            let results_path = dir.join("results.csv");
            let mut w = BufWriter::new(File::create(&results_path)?);
            harness::write_results_csv(&mut w, &results)?;
            w.flush()?;

            let summary_path = dir.join("summary.csv");
            let mut w = BufWriter::new(File::create(&summary_path)?);
            harness::write_summary_csv(&mut w, &results)?;
            w.flush()?;

            let table = SweepTable::from_results(&cfg, &results);
            print!("{table}");
            println!("wrote {} and {}", results_path.display(), summary_path.display());

            let failed: usize = results.cells.iter().map(|c| c.n_failed).sum();
            if failed > 0 {
                log::warn!("{failed} trial(s) failed and were excluded from means");
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn out_dir_env_fallback() {
        let tmp = tempfile::tempdir().unwrap();
        let target = tmp.path().join("envout");
        std::env::set_var("MFGP_OUT", &target);
        let dir = out_dir(&None).unwrap();
        std::env::remove_var("MFGP_OUT");
        assert_eq!(dir, target);
        assert!(target.is_dir());
    }
}
