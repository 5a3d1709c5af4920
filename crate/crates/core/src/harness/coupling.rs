use serde::{Deserialize, Serialize};

use super::geometry::lens_fraction;
use super::records::{mean_se, proportion, Provenance, ResultRecord};
use crate::error::Result;
use crate::models::ModelFamily;
use crate::pwit::{simulate_replicates, DEFAULT_NODE_CAP};
use crate::rng::SeedStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CouplingConfig {
    pub dimensions: Vec<usize>,
    pub lens_samples: usize,
    pub times: Vec<f64>,
    pub tree_replicates: usize,
    pub node_cap: usize,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            dimensions: vec![5, 10, 20],
            lens_samples: 200_000,
            times: vec![0.5, 1.0, 2.0, 4.0],
            tree_replicates: 10_000,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

/// Lens volume of two balls of radius `R` at distance `R/2` against
/// `(15/16)^(d/2) omega_d R^d`, disjoint balls at distance `2R`, and the
/// PWIT size law: mean `e^T` and `P(|V| > e^(2T)) <= e^-T`.
pub fn verify_coupling_lemmas(
    cfg: &CouplingConfig,
    seed: u64,
    sigma: f64,
) -> Result<Vec<ResultRecord>> {
    let stream = SeedStream::new(seed);
    let mut records = Vec::new();
    for &d in &cfg.dimensions {
        let mut rng = stream.rng(&format!("lens_{d}"), 0);
        let (p, se) = lens_fraction(d, 0.5, cfg.lens_samples, &mut rng)?;
        let bound = (15.0f64 / 16.0).powf(d as f64 / 2.0);
        records.push(
            ResultRecord::at_most(
                "coupling/lens_volume",
                format!("d={d};separation=R/2"),
                p,
                se,
                bound,
                Provenance::ClosedForm,
                sigma,
            )
            .with_note("volume in units of omega_d R^d"),
        );
        let (q, _) = lens_fraction(d, 2.0, cfg.lens_samples / 10 + 1, &mut rng)?;
        records.push(ResultRecord::flag(
            "coupling/lens_disjoint",
            format!("d={d};separation=2R"),
            (q > 0.0) as usize,
        ));
    }
    for &t in &cfg.times {
        let key = stream.key(&format!("pwit_size_{t}"));
        let outcomes = simulate_replicates(
            &ModelFamily::OneType,
            t,
            cfg.tree_replicates,
            key,
            cfg.node_cap,
        )?;
        let sizes: Vec<f64> = outcomes.iter().flatten().map(|o| o.2 as f64).collect();
        let censored = outcomes.len() - sizes.len();
        let (mean, se) = mean_se(&sizes);
        let params = format!("T={t};reps={}", cfg.tree_replicates);
        records.push(ResultRecord::two_sided(
            "pwit/size_mean",
            params.clone(),
            mean,
            se,
            t.exp(),
            Provenance::ClosedForm,
            sigma,
            0.0,
        ));
        let big = sizes.iter().filter(|&&s| s > (2.0 * t).exp()).count();
        let (f, f_se) = proportion(big, sizes.len());
        records.push(ResultRecord::at_most(
            "pwit/size_tail",
            params.clone(),
            f,
            f_se,
            (-t).exp(),
            Provenance::ClosedForm,
            sigma,
        ));
        records.push(ResultRecord::flag("pwit/size_censored", params, censored));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let cfg = CouplingConfig {
            dimensions: vec![5],
            lens_samples: 20_000,
            times: vec![1.0, 2.0],
            tree_replicates: 2000,
            node_cap: DEFAULT_NODE_CAP,
        };
        let recs = verify_coupling_lemmas(&cfg, 1, 3.0).unwrap();
        assert_eq!(recs.len(), 2 + 3 * 2);
        assert!(recs.iter().all(|r| r.pass), "{recs:?}");
    }
}
