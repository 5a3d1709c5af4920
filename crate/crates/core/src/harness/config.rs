use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::coupling::{verify_coupling_lemmas, CouplingConfig};
use super::cross::{cross_validate, CrossConfig};
use super::records::{write_records, ResultRecord};
use super::suite::{run_suite, SuiteConfig};
use super::theorems::{theorem_targets, TheoremConfig};
use super::torus::{run_torus_experiment, TorusConfig};
use crate::error::Result;

/// One experiment from a JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Torus(TorusConfig),
    Coupling(CouplingConfig),
    CrossValidate(CrossConfig),
    TheoremTargets(TheoremConfig),
    Suite(Box<SuiteConfig>),
}

fn default_seed() -> u64 {
    2024
}

fn default_sigma() -> f64 {
    3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Runs the experiment; writes `records.csv` (and the suite's other files)
/// when an output directory is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let (seed, sigma) = (cfg.seed, cfg.sigma);
    let records = match &cfg.experiment {
        Experiment::Torus(t) => run_torus_experiment(t, seed, sigma)?.records,
        Experiment::Coupling(c) => verify_coupling_lemmas(c, seed, sigma)?,
        Experiment::CrossValidate(c) => cross_validate(c, seed, sigma)?,
        Experiment::TheoremTargets(t) => theorem_targets(t, seed, sigma)?,
        Experiment::Suite(s) => {
            let mut s = s.clone();
            s.seed = seed;
            s.sigma = sigma;
            let out = run_suite(&s)?;
            if let Some(dir) = &cfg.output_dir {
                out.write(dir)?;
            }
            return Ok(out.records);
        }
    };
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
        write_records(std::fs::File::create(dir.join("records.csv"))?, &records)?;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tagged_experiment() {
        let cfg = ExperimentConfig::parse(
            r#"{"seed": 5, "experiment": {"kind": "cross_validate", "model": "asymmetric", "eps": 0.25, "t_max": 1.0, "replicates": 200}}"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.sigma, 3.0);
        assert!(matches!(cfg.experiment, Experiment::CrossValidate(_)));
        let recs = run_experiment(&cfg).unwrap();
        assert!(!recs.is_empty());
    }
}
