use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::coupling::{verify_coupling_lemmas, CouplingConfig};
use super::cross::{cross_validate, CrossConfig, PalmTorus};
use super::hier::{hierarchical_checks, write_level_stats, write_pmf_comparison, HierConfig};
use super::records::{write_records, Provenance, ResultRecord, Uncertainty};
use super::theorems::{theorem_targets, TheoremConfig};
use super::torus::{run_torus_experiment, DistanceBin, TorusConfig};
use crate::error::Result;
use crate::hierarchical::{LevelStats, PmfComparison};
use crate::models::ModelFamily;
use crate::odes::{
    closed_form_b_infinity, closed_form_x1_infinity, integrate, integrate_to_plateau,
    two_value_constant, two_value_x2, OdeSystem,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricCase {
    pub k: usize,
    pub p1: f64,
    pub p2: f64,
}

impl SymmetricCase {
    pub fn probs(&self) -> Vec<f64> {
        let mut p = vec![self.p2; self.k];
        p[0] = self.p1;
        p
    }
}

/// Everything `verify` runs. Missing JSON fields take the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub sigma: f64,
    pub ode_tolerance: f64,
    pub ode_accuracy: f64,
    pub one_type_horizon: f64,
    pub one_type_max_error: f64,
    pub asymmetric_eps: Vec<f64>,
    pub symmetric_cases: Vec<SymmetricCase>,
    pub relation_tolerance: f64,
    pub cross: Vec<CrossConfig>,
    pub coupling: CouplingConfig,
    pub theorems: Vec<TheoremConfig>,
    pub hierarchical: HierConfig,
    pub torus: Vec<TorusConfig>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let asym = ModelFamily::Asymmetric { eps: 0.25 };
        let sym = ModelFamily::Symmetric {
            probs: vec![0.5, 0.25, 0.25],
        };
        let mut cross_asym = CrossConfig::new(asym.clone(), 5.0, 20_000);
        cross_asym.torus = Some(PalmTorus {
            dimension: 2,
            side: 20.0,
            replicates: 400,
        });
        let fig = |eps: f64| {
            let mut t = TorusConfig::new(ModelFamily::Asymmetric { eps }, 2, 3000f64.sqrt());
            t.replicates = 4;
            t
        };
        let line = |side: f64, replicates: usize| {
            let mut t = TorusConfig::new(
                ModelFamily::Symmetric {
                    probs: vec![0.5, 0.5],
                },
                1,
                side,
            );
            t.replicates = replicates;
            t
        };
        let mut one = TorusConfig::new(ModelFamily::OneType, 2, 20.0);
        one.replicates = 20;
        let mut palm = TorusConfig::new(asym.clone(), 2, 15.0);
        palm.replicates = 400;
        palm.palm_replicates = 2000;
        SuiteConfig {
            seed: 2024,
            sigma: 3.0,
            ode_tolerance: 1e-10,
            ode_accuracy: 1e-4,
            one_type_horizon: 10.0,
            one_type_max_error: 1e-6,
            asymmetric_eps: vec![0.1, 0.2, 0.25, 0.4, 0.5],
            symmetric_cases: vec![
                SymmetricCase {
                    k: 2,
                    p1: 0.75,
                    p2: 0.25,
                },
                SymmetricCase {
                    k: 3,
                    p1: 0.5,
                    p2: 0.25,
                },
                SymmetricCase {
                    k: 4,
                    p1: 0.4,
                    p2: 0.2,
                },
            ],
            relation_tolerance: 1e-6,
            cross: vec![cross_asym, CrossConfig::new(sym.clone(), 5.0, 20_000)],
            coupling: CouplingConfig::default(),
            theorems: vec![
                TheoremConfig::new(asym, 6.0, 10_000),
                TheoremConfig::new(sym, 6.0, 10_000),
                TheoremConfig::new(ModelFamily::Asymmetric { eps: 0.9 }, 4.0, 5_000),
            ],
            hierarchical: HierConfig::default(),
            torus: vec![
                fig(1.0 / 3.0),
                fig(1.0 / 6.0),
                line(100.0, 20),
                line(1000.0, 20),
                line(10_000.0, 5),
                one,
                palm,
            ],
        }
    }
}

/// The closed-form ODE checks.
pub fn ode_checks(cfg: &SuiteConfig) -> Result<Vec<ResultRecord>> {
    let mut records = Vec::new();
    let horizon = cfg.one_type_horizon;
    let traj = integrate(&OdeSystem::one_type(), horizon, cfg.ode_tolerance)?;
    let mut sup: f64 = 0.0;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        sup = sup.max((y[0] - 1.0 / (1.0 + t)).abs());
    }
    for i in 0..=10_000 {
        let t = horizon * i as f64 / 10_000.0;
        sup = sup.max((traj.at(t)[0] - 1.0 / (1.0 + t)).abs());
    }
    records.push(
        ResultRecord::check(
            "ode/one_type_sup_error",
            format!("tmax={horizon};tol={}", cfg.ode_tolerance),
            sup,
            0.0,
            sup < cfg.one_type_max_error,
        )
        .with_reference(0.0, Provenance::ClosedForm)
        .with_tolerance(cfg.one_type_max_error)
        .with_uncertainty(0.0, Uncertainty::Exact),
    );

    for &eps in &cfg.asymmetric_eps {
        let (_, p) = integrate_to_plateau(
            &OdeSystem::asymmetric(eps)?,
            1,
            cfg.ode_accuracy,
            cfg.ode_tolerance,
            1e8,
        )?;
        let target = closed_form_b_infinity(eps)?;
        let params = format!("eps={eps};t={}", p.t_max);
        records.push(
            ResultRecord::two_sided(
                "ode/asym_plateau",
                params.clone(),
                p.estimate,
                0.0,
                target,
                Provenance::ClosedForm,
                cfg.sigma,
                cfg.ode_accuracy,
            )
            .with_uncertainty(p.bound, Uncertainty::Bound),
        );
        records.push(
            ResultRecord::check(
                "ode/asym_plateau_certified",
                params,
                p.estimate,
                0.0,
                p.contains(target),
            )
            .with_reference(target, Provenance::ClosedForm)
            .with_tolerance(p.bound)
            .with_uncertainty(p.bound, Uncertainty::Bound),
        );
    }

    for case in &cfg.symmetric_cases {
        let sys = OdeSystem::symmetric(case.probs())?;
        let (traj, p) = integrate_to_plateau(&sys, 0, cfg.ode_accuracy, cfg.ode_tolerance, 1e8)?;
        let target = closed_form_x1_infinity(case.p1, case.p2, case.k)?;
        let params = format!("k={};p1={};p2={};t={}", case.k, case.p1, case.p2, p.t_max);
        records.push(
            ResultRecord::two_sided(
                "ode/sym_plateau",
                params.clone(),
                p.estimate,
                0.0,
                target,
                Provenance::ClosedForm,
                cfg.sigma,
                p.bound + cfg.ode_accuracy,
            )
            .with_uncertainty(p.bound, Uncertainty::Bound),
        );
        let c = two_value_constant(case.p1, case.p2, case.k)?;
        let worst = traj
            .states
            .iter()
            .map(|y| (y[1] - two_value_x2(y[0], c, case.k)).abs())
            .fold(0.0f64, f64::max);
        records.push(
            ResultRecord::check(
                "ode/sym_two_value_relation",
                params,
                worst,
                0.0,
                worst <= cfg.relation_tolerance,
            )
            .with_reference(0.0, Provenance::ClosedForm)
            .with_tolerance(cfg.relation_tolerance)
            .with_uncertainty(0.0, Uncertainty::Exact),
        );
    }
    Ok(records)
}

#[derive(Clone, Debug)]
pub struct SuiteOutput {
    pub records: Vec<ResultRecord>,
    pub levels: Vec<LevelStats>,
    pub comparisons: Vec<PmfComparison>,
    pub histograms: Vec<(String, Vec<DistanceBin>)>,
}

impl SuiteOutput {
    pub fn gated_failures(&self) -> Vec<&ResultRecord> {
        self.records.iter().filter(|r| r.gated_failure()).collect()
    }

    /// Writes `records.csv`, `hier_levels.csv`, `hier_pmf.csv` and
    /// `torus_histograms.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let paths: Vec<PathBuf> = [
            "records.csv",
            "hier_levels.csv",
            "hier_pmf.csv",
            "torus_histograms.csv",
        ]
        .iter()
        .map(|f| dir.join(f))
        .collect();
        write_records(std::fs::File::create(&paths[0])?, &self.records)?;
        write_level_stats(std::fs::File::create(&paths[1])?, &self.levels)?;
        write_pmf_comparison(std::fs::File::create(&paths[2])?, &self.comparisons)?;
        let mut w = csv::Writer::from_writer(std::fs::File::create(&paths[3])?);
        w.write_record(["experiment", "t_lo", "t_hi", "r_lo", "r_hi", "count"])?;
        for (name, bins) in &self.histograms {
            for b in bins {
                w.write_record([
                    name.clone(),
                    b.t_lo.to_string(),
                    b.t_hi.to_string(),
                    b.r_lo.to_string(),
                    b.r_hi.to_string(),
                    b.count.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(paths)
    }
}

/// Runs every section in a fixed order; each section draws from its own
/// stream of the master seed.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutput> {
    let seed = cfg.seed;
    let sigma = cfg.sigma;
    let mut records = ode_checks(cfg)?;
    for (i, c) in cfg.cross.iter().enumerate() {
        records.extend(cross_validate(
            c,
            seed ^ (i as u64 + 1).wrapping_mul(0x9e37_79b9),
            sigma,
        )?);
    }
    records.extend(verify_coupling_lemmas(&cfg.coupling, seed, sigma)?);
    for (i, t) in cfg.theorems.iter().enumerate() {
        records.extend(theorem_targets(
            t,
            seed ^ (i as u64 + 1).wrapping_mul(0x85eb_ca6b),
            sigma,
        )?);
    }
    let hier = hierarchical_checks(&cfg.hierarchical, seed, sigma)?;
    records.extend(hier.records);
    let mut histograms = Vec::new();
    for (i, t) in cfg.torus.iter().enumerate() {
        let report =
            run_torus_experiment(t, seed ^ (i as u64 + 1).wrapping_mul(0xc2b2_ae35), sigma)?;
        records.extend(report.records);
        histograms.push((t.describe(), report.histogram));
    }
    Ok(SuiteOutput {
        records,
        levels: hier.levels,
        comparisons: hier.comparisons,
        histograms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ode_section_passes() {
        let recs = ode_checks(&SuiteConfig::default()).unwrap();
        assert_eq!(recs.len(), 1 + 2 * 5 + 2 * 3);
        assert!(recs.iter().all(|r| r.pass), "{recs:?}");
    }

    #[test]
    fn config_round_trip() {
        let cfg = SuiteConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SuiteConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: SuiteConfig = serde_json::from_str(r#"{"seed": 7}"#).unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.sigma, 3.0);
    }
}
