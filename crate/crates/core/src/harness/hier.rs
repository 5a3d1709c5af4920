use std::io::Write;

use serde::{Deserialize, Serialize};

use super::records::{Provenance, ResultRecord, Uncertainty};
use crate::error::Result;
use crate::hierarchical::{
    compare_pmf, exact_chain, mc_segments, stats, verify_level_inequalities, InequalityReport,
    LevelStats, PmfComparison, Status, DEFAULT_N_MAX,
};
use crate::rng::SeedStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HierConfig {
    pub lambda: f64,
    pub eps: f64,
    pub base_depth: u32,
    pub top_level: i32,
    pub n_max: usize,
    pub slack_budget: f64,
    /// Segment `[0, 2^mc_levels)`; must not exceed `top_level`.
    pub mc_levels: u32,
    pub mc_replicates: u64,
    /// Extra informational density runs, one per `K`.
    pub sweep_levels: Vec<u32>,
    pub sweep_eps: f64,
    pub sweep_replicates: u64,
}

impl Default for HierConfig {
    fn default() -> Self {
        HierConfig {
            lambda: 1.0,
            eps: 0.3,
            base_depth: 30,
            top_level: 10,
            n_max: DEFAULT_N_MAX,
            slack_budget: 1e-6,
            mc_levels: 10,
            mc_replicates: 2000,
            sweep_levels: vec![8, 10, 12],
            sweep_eps: 0.5,
            sweep_replicates: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HierOutput {
    pub records: Vec<ResultRecord>,
    /// Stats from unit length (`k = 0`) up.
    pub levels: Vec<LevelStats>,
    pub report: InequalityReport,
    /// Inconclusive checks below unit length (not part of the report).
    pub sub_unit_inconclusive: usize,
    pub comparisons: Vec<PmfComparison>,
}

fn status_record(name: &str, level: i32, status: Status, detail: &str) -> ResultRecord {
    let failures = (status == Status::Violated) as usize;
    let note = match status {
        Status::Holds => format!("holds: {detail}"),
        Status::Inconclusive => format!("inconclusive: {detail}"),
        Status::Violated => format!("violated: {detail}"),
    };
    ResultRecord::flag(&format!("hier/{name}"), format!("k={level}"), failures).with_note(note)
}

/// Certified recursion from depth `base_depth`, checks on levels `k >= 0`,
/// and the segment Monte Carlo at `K = mc_levels`.
pub fn hierarchical_checks(cfg: &HierConfig, seed: u64, sigma: f64) -> Result<HierOutput> {
    let chain = exact_chain(
        cfg.lambda,
        cfg.eps,
        cfg.base_depth,
        cfg.top_level,
        cfg.n_max,
        cfg.slack_budget,
    )?;
    let all: Vec<LevelStats> = chain.iter().map(stats).collect();
    let sub_unit: Vec<LevelStats> = all.iter().copied().filter(|s| s.level <= 0).collect();
    let sub_unit_inconclusive = verify_level_inequalities(&sub_unit, cfg.eps)
        .inconclusive()
        .iter()
        .filter(|c| c.level < 0)
        .count();
    let sub_unit_violated = verify_level_inequalities(&all, cfg.eps).violated().len();
    let levels: Vec<LevelStats> = all.into_iter().filter(|s| s.level >= 0).collect();
    let report = verify_level_inequalities(&levels, cfg.eps);

    let base = format!("lambda={};eps={}", cfg.lambda, cfg.eps);
    let mut records: Vec<ResultRecord> = report
        .checks
        .iter()
        .map(|c| status_record(c.name, c.level, c.status, &c.detail))
        .collect();
    records.push(
        ResultRecord::flag(
            "hier/sub_unit_levels",
            format!("{base};base_depth={}", cfg.base_depth),
            sub_unit_violated,
        )
        .with_note(format!(
            "violations below unit length; {sub_unit_inconclusive} inconclusive checks there"
        )),
    );
    records.push(
        ResultRecord::info(
            "hier/first_gamma_crossing",
            base.clone(),
            report.first_gamma_crossing.map_or(f64::NAN, f64::from),
            0.0,
        )
        .with_reference(2.0 * report.k0_reference, Provenance::ClosedForm)
        .with_note("first k with gamma lower bound >= 1/3; reference 2 * 3e/eps"),
    );
    if let Some(en) = report.mean_lower_at_crossing {
        records.push(
            ResultRecord::info("hier/mean_lower_at_crossing", base.clone(), en, 0.0)
                .with_uncertainty(0.0, Uncertainty::Bound),
        );
    }

    let stream = SeedStream::new(seed);
    let summary = mc_segments(
        cfg.lambda,
        cfg.eps,
        cfg.mc_levels,
        cfg.mc_replicates,
        stream.key("hier_mc"),
    )?;
    let mc = format!("{base};K={};reps={}", cfg.mc_levels, cfg.mc_replicates);
    records.push(ResultRecord::flag(
        "hier/mc_recursion_equals_matching",
        mc.clone(),
        summary.inconsistent as usize,
    ));
    records.push(ResultRecord::flag(
        "hier/mc_superadditive",
        mc.clone(),
        summary.non_superadditive as usize,
    ));
    let (dens, dens_se) = (summary.density, summary.density_se);
    records.push(
        ResultRecord::check(
            "hier/unmatched_blue_density",
            mc.clone(),
            dens,
            dens_se,
            dens > sigma * dens_se,
        )
        .with_reference(0.0, Provenance::None)
        .with_tolerance(sigma * dens_se)
        .with_note("window convention: unmatched blue = max(N_K(0), 0); positive beyond sigma SE"),
    );
    let exact = chain
        .iter()
        .find(|p| p.level() == cfg.mc_levels as i32)
        .ok_or_else(|| crate::Error::InvalidParameter("mc_levels above top_level".into()))?;
    let comparisons = compare_pmf(exact, &summary)?;
    for c in &comparisons {
        records.push(
            ResultRecord::check(
                "hier/pmf_agreement",
                format!("{mc};N={}", c.value),
                c.empirical,
                c.se,
                c.within,
            )
            .with_reference(
                0.5 * (c.reference.lo + c.reference.hi),
                Provenance::ClosedForm,
            )
            .with_tolerance(0.5 * c.reference.width() + sigma * c.se)
            .with_note("reference: certified interval recursion"),
        );
    }
    for &k in &cfg.sweep_levels {
        let s = mc_segments(
            cfg.lambda,
            cfg.sweep_eps,
            k,
            cfg.sweep_replicates,
            stream.key(&format!("hier_sweep_{k}")),
        )?;
        records.push(ResultRecord::info(
            "hier/density_sweep",
            format!(
                "lambda={};eps={};K={k};reps={}",
                cfg.lambda, cfg.sweep_eps, cfg.sweep_replicates
            ),
            s.density,
            s.density_se,
        ));
    }
    Ok(HierOutput {
        records,
        levels,
        report,
        sub_unit_inconclusive,
        comparisons,
    })
}

/// `k, beta_lo, beta_hi, gamma_lo, gamma_hi, delta_lo, delta_hi, EN_lo`.
pub fn write_level_stats<W: Write>(out: W, levels: &[LevelStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "k", "beta_lo", "beta_hi", "gamma_lo", "gamma_hi", "delta_lo", "delta_hi", "EN_lo",
    ])?;
    for s in levels {
        w.write_record([
            s.level.to_string(),
            s.beta.lo.to_string(),
            s.beta.hi.to_string(),
            s.gamma.lo.to_string(),
            s.gamma.hi.to_string(),
            s.delta.lo.to_string(),
            s.delta.hi.to_string(),
            s.mean_lower.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pmf_comparison<W: Write>(out: W, rows: &[PmfComparison]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "value",
        "empirical",
        "reference_lo",
        "reference_hi",
        "se",
        "within",
    ])?;
    for r in rows {
        w.write_record([
            r.value.clone(),
            r.empirical.to_string(),
            r.reference.lo.to_string(),
            r.reference.hi.to_string(),
            r.se.to_string(),
            r.within.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_config() {
        let cfg = HierConfig {
            top_level: 6,
            mc_levels: 6,
            mc_replicates: 300,
            sweep_levels: vec![4],
            sweep_replicates: 20,
            ..Default::default()
        };
        let out = hierarchical_checks(&cfg, 1, 3.0).unwrap();
        assert_eq!(out.levels.first().unwrap().level, 0);
        assert!(out.report.violated().is_empty());
        assert!(out
            .records
            .iter()
            .any(|r| r.experiment == "hier/pmf_agreement"));
        let mut buf = Vec::new();
        write_level_stats(&mut buf, &out.levels).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,beta_lo,beta_hi,gamma_lo,gamma_hi,delta_lo,delta_hi,EN_lo\n0,"));
        assert_eq!(text.lines().count(), 8);
    }
}
