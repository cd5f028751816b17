//! JSON experiment configuration.
//!
//! Every field except `benchmark` is optional; defaults reproduce the
//! corresponding figure's setup (sample counts, methods, trial count).
//! Schema:
//!
//! ```json
//! {
//!   "benchmark": "phase_shift",
//!   "methods": ["kriging", {"method": "gpe", "num_delays": 2}],
//!   "n_high": [10, 15, 20, 25],
//!   "n_low": 100,
//!   "n_trials": 10,
//!   "n_test": 500,
//!   "seed": 0,
//!   "tau": 0.0025
//! }
//! ```
//!
//! A method entry is either a name (`kriging`, `ar1`, `nargp`,
//! `delays_only`, `gpe`, `gpe2`) or an object with fields `method` (one of
//! the names or `custom`), `name` (CSV identifier), `include_t`,
//! `include_fl`, `num_delays`, `tau`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use mfgp::fusion::{EmbeddingConfig, MethodChoice};
use mfgp::harness::{BenchmarkId, ExperimentConfig, MethodSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    benchmark: String,
    #[serde(default)]
    methods: Option<Vec<RawMethod>>,
    #[serde(default)]
    n_high: Option<Vec<usize>>,
    #[serde(default)]
    n_low: Option<usize>,
    #[serde(default)]
    n_trials: Option<usize>,
    #[serde(default)]
    n_test: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tau: Option<f64>,
    #[serde(default)]
    analytic_lowfi: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawMethod {
    Name(String),
    Full(RawMethodObject),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMethodObject {
    method: String,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    include_t: Option<bool>,
    #[serde(default)]
    include_fl: Option<bool>,
    #[serde(default)]
    num_delays: Option<usize>,
    #[serde(default)]
    tau: Option<f64>,
}

fn build_method(raw: &RawMethod, default_tau: f64) -> Result<MethodSpec> {
    match raw {
        RawMethod::Name(name) => {
            MethodSpec::standard(name, default_tau).map_err(anyhow::Error::from)
        }
        RawMethod::Full(obj) => {
            let tau = obj.tau.unwrap_or(default_tau);
            let has_embedding_overrides = obj.include_t.is_some()
                || obj.include_fl.is_some()
                || obj.num_delays.is_some();
            let mut spec = if obj.method == "custom" {
                if !has_embedding_overrides {
                    bail!("method 'custom' needs include_t/include_fl/num_delays");
                }
                let config = EmbeddingConfig {
                    num_delays: obj.num_delays.unwrap_or(0),
                    delay_step: tau,
                    include_t: obj.include_t.unwrap_or(false),
                    include_fl: obj.include_fl.unwrap_or(false),
                };
                config.validate()?;
                MethodSpec::new("custom", MethodChoice::Gpe(config))
            } else {
                let base = MethodSpec::standard(&obj.method, tau)
                    .with_context(|| format!("in method entry '{}'", obj.method))?;
                if has_embedding_overrides {
                    let mut config = match base.choice {
                        MethodChoice::Gpe(c) => c,
                        MethodChoice::Kriging => EmbeddingConfig::plain_t(),
                        MethodChoice::Nargp => EmbeddingConfig::nargp(),
                        MethodChoice::Ar1 => {
                            bail!("method 'ar1' takes no embedding overrides")
                        }
                    };
                    if let Some(v) = obj.include_t {
                        config.include_t = v;
                    }
                    if let Some(v) = obj.include_fl {
                        config.include_fl = v;
                    }
                    if let Some(v) = obj.num_delays {
                        config.num_delays = v;
                    }
                    config.delay_step = tau;
                    config.validate()?;
                    MethodSpec::new(base.id, MethodChoice::Gpe(config))
                } else {
                    base
                }
            };
            if let Some(name) = &obj.name {
                spec.id = name.clone();
            }
            Ok(spec)
        }
    }
}

/// Parse and validate a JSON config file into an [`ExperimentConfig`].
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let raw: RawConfig = serde_json::from_str(&text)
        .with_context(|| format!("invalid config in {}", path.display()))?;

    let benchmark = BenchmarkId::parse(&raw.benchmark)?;
    let mut cfg = ExperimentConfig::defaults(benchmark)?;

    if let Some(n_low) = raw.n_low {
        cfg.n_low = n_low;
    }
    let tau = raw
        .tau
        .unwrap_or_else(|| benchmark.default_tau(cfg.n_low, benchmark.domain()));
    if !(tau.is_finite() && tau > 0.0) {
        bail!("field 'tau' must be positive, got {tau}");
    }

    if let Some(methods) = &raw.methods {
        cfg.methods = methods
            .iter()
            .map(|m| build_method(m, tau))
            .collect::<Result<_>>()?;
    } else if raw.tau.is_some() {
        // Rebuild the default method set with the overridden delay step.
        let ids: Vec<String> = cfg.methods.iter().map(|m| m.id.clone()).collect();
        cfg.methods = ids
            .iter()
            .filter(|id| MethodSpec::STANDARD_KINDS.contains(&id.as_str()))
            .map(|id| MethodSpec::standard(id, tau).map_err(anyhow::Error::from))
            .collect::<Result<_>>()?;
    }

    if let Some(n_high) = raw.n_high {
        cfg.n_high = n_high;
    }
    if let Some(n_trials) = raw.n_trials {
        cfg.n_trials = n_trials;
    }
    if let Some(n_test) = raw.n_test {
        cfg.n_test = n_test;
    }
    if let Some(seed) = raw.seed {
        cfg.seed = seed;
    }
    if let Some(flag) = raw.analytic_lowfi {
        cfg.analytic_lowfi = flag;
    }

    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(json: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(json.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_config_gets_full_defaults() {
        let f = write_config(r#"{"benchmark": "phase_shift"}"#);
        let cfg = parse_config(f.path()).unwrap();
        assert_eq!(cfg.n_low, 100);
        assert_eq!(cfg.n_high, vec![10, 15, 20, 25]);
        assert_eq!(cfg.n_trials, 10);
        assert_eq!(cfg.n_test, 500);
        let ids: Vec<&str> = cfg.methods.iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids, ["kriging", "ar1", "nargp", "delays_only", "gpe"]);
    }

    #[test]
    fn zero_trials_rejected() {
        let f = write_config(r#"{"benchmark": "phase_shift", "n_trials": 0}"#);
        let err = parse_config(f.path()).unwrap_err().to_string();
        assert!(err.contains("n_trials"), "error was: {err}");
    }

    #[test]
    fn unknown_field_names_the_field() {
        let f = write_config(r#"{"benchmark": "phase_shift", "n_trail": 3}"#);
        let err = format!("{:#}", parse_config(f.path()).unwrap_err());
        assert!(err.contains("n_trail"), "error was: {err}");
    }

    #[test]
    fn unknown_method_rejected() {
        let f = write_config(r#"{"benchmark": "phase_shift", "methods": ["bogus"]}"#);
        assert!(parse_config(f.path()).is_err());
    }

    #[test]
    fn unknown_benchmark_rejected() {
        let f = write_config(r#"{"benchmark": "bogus"}"#);
        let err = format!("{:#}", parse_config(f.path()).unwrap_err());
        assert!(err.contains("bogus"));
    }

    #[test]
    fn custom_embedding_method() {
        let f = write_config(
            r#"{
                "benchmark": "simple",
                "methods": [
                    "kriging",
                    {"method": "custom", "name": "gp_on_fl",
                     "include_t": false, "include_fl": true, "num_delays": 0}
                ],
                "n_high": [15]
            }"#,
        );
        let cfg = parse_config(f.path()).unwrap();
        assert_eq!(cfg.methods[1].id, "gp_on_fl");
        match &cfg.methods[1].choice {
            MethodChoice::Gpe(c) => {
                assert!(!c.include_t && c.include_fl && c.num_delays == 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tau_override_applies_to_default_methods() {
        let f = write_config(r#"{"benchmark": "periodicity", "tau": 0.01}"#);
        let cfg = parse_config(f.path()).unwrap();
        let gpe = cfg.methods.iter().find(|m| m.id == "gpe").unwrap();
        match &gpe.choice {
            MethodChoice::Gpe(c) => assert!((c.delay_step - 0.01).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hh_defaults() {
        let f = write_config(r#"{"benchmark": "hh"}"#);
        let cfg = parse_config(f.path()).unwrap();
        assert_eq!(cfg.n_low, 300);
        assert_eq!(cfg.n_trials, 10);
    }
}
