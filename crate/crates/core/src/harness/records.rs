use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Where a reference value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Ode,
    None,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::Ode => "ode",
            Provenance::None => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Uncertainty {
    /// Monte Carlo standard error.
    Se,
    /// Certified (deterministic) bound.
    Bound,
    Exact,
}

impl Uncertainty {
    pub fn as_str(self) -> &'static str {
        match self {
            Uncertainty::Se => "se",
            Uncertainty::Bound => "bound",
            Uncertainty::Exact => "exact",
        }
    }
}

/// One line of experiment output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub parameters: String,
    pub estimate: f64,
    pub uncertainty: f64,
    pub uncertainty_kind: Uncertainty,
    pub reference: Option<f64>,
    pub provenance: Provenance,
    /// Allowed deviation actually applied.
    pub tolerance: f64,
    pub gated: bool,
    pub pass: bool,
    pub note: String,
}

impl ResultRecord {
    fn base(
        experiment: &str,
        parameters: String,
        estimate: f64,
        uncertainty: f64,
        kind: Uncertainty,
    ) -> Self {
        ResultRecord {
            experiment: experiment.to_string(),
            parameters,
            estimate,
            uncertainty,
            uncertainty_kind: kind,
            reference: None,
            provenance: Provenance::None,
            tolerance: 0.0,
            gated: true,
            pass: true,
            note: String::new(),
        }
    }

    /// `|estimate - reference| <= sigma * se + extra`.
    #[allow(clippy::too_many_arguments)]
    pub fn two_sided(
        experiment: &str,
        parameters: String,
        estimate: f64,
        se: f64,
        reference: f64,
        provenance: Provenance,
        sigma: f64,
        extra: f64,
    ) -> Self {
        let tolerance = sigma * se + extra;
        ResultRecord {
            reference: Some(reference),
            provenance,
            tolerance,
            pass: (estimate - reference).abs() <= tolerance,
            ..Self::base(experiment, parameters, estimate, se, Uncertainty::Se)
        }
    }

    /// `estimate <= bound + sigma * se`.
    pub fn at_most(
        experiment: &str,
        parameters: String,
        estimate: f64,
        se: f64,
        bound: f64,
        provenance: Provenance,
        sigma: f64,
    ) -> Self {
        ResultRecord {
            reference: Some(bound),
            provenance,
            tolerance: sigma * se,
            pass: estimate <= bound + sigma * se,
            ..Self::base(experiment, parameters, estimate, se, Uncertainty::Se)
        }
    }

    /// `estimate >= bound - sigma * se`.
    pub fn at_least(
        experiment: &str,
        parameters: String,
        estimate: f64,
        se: f64,
        bound: f64,
        provenance: Provenance,
        sigma: f64,
    ) -> Self {
        ResultRecord {
            reference: Some(bound),
            provenance,
            tolerance: sigma * se,
            pass: estimate >= bound - sigma * se,
            ..Self::base(experiment, parameters, estimate, se, Uncertainty::Se)
        }
    }

    /// A yes/no structural check; the estimate is the number of failures.
    pub fn flag(experiment: &str, parameters: String, failures: usize) -> Self {
        ResultRecord {
            reference: Some(0.0),
            pass: failures == 0,
            ..Self::base(
                experiment,
                parameters,
                failures as f64,
                0.0,
                Uncertainty::Exact,
            )
        }
    }

    /// A gated check decided by the caller.
    pub fn check(experiment: &str, parameters: String, estimate: f64, se: f64, pass: bool) -> Self {
        ResultRecord {
            pass,
            ..Self::base(experiment, parameters, estimate, se, Uncertainty::Se)
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// An ungated value.
    pub fn info(experiment: &str, parameters: String, estimate: f64, se: f64) -> Self {
        ResultRecord {
            gated: false,
            ..Self::base(experiment, parameters, estimate, se, Uncertainty::Se)
        }
    }

    pub fn with_uncertainty(mut self, value: f64, kind: Uncertainty) -> Self {
        self.uncertainty = value;
        self.uncertainty_kind = kind;
        self
    }

    pub fn with_reference(mut self, reference: f64, provenance: Provenance) -> Self {
        self.reference = Some(reference);
        self.provenance = provenance;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn informational(mut self) -> Self {
        self.gated = false;
        self
    }

    pub fn gated_failure(&self) -> bool {
        self.gated && !self.pass
    }
}

pub const RECORD_HEADER: [&str; 11] = [
    "experiment",
    "parameters",
    "estimate",
    "uncertainty",
    "uncertainty_kind",
    "reference",
    "provenance",
    "tolerance",
    "gated",
    "pass",
    "note",
];

pub fn write_records<W: Write>(out: W, records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.experiment.clone(),
            r.parameters.clone(),
            r.estimate.to_string(),
            r.uncertainty.to_string(),
            r.uncertainty_kind.as_str().to_string(),
            r.reference.map_or(String::new(), |v| v.to_string()),
            r.provenance.as_str().to_string(),
            r.tolerance.to_string(),
            r.gated.to_string(),
            r.pass.to_string(),
            r.note.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Binomial proportion and its standard error.
pub fn proportion(hits: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks() {
        let r =
            ResultRecord::two_sided("x", "a=1".into(), 1.0, 0.1, 1.25, Provenance::Ode, 3.0, 0.0);
        assert!(r.pass && (r.tolerance - 0.3).abs() < 1e-15);
        let r =
            ResultRecord::two_sided("x", "a=1".into(), 1.0, 0.1, 1.5, Provenance::Ode, 3.0, 0.0);
        assert!(r.gated_failure());
        assert!(
            ResultRecord::at_most(
                "x",
                String::new(),
                1.2,
                0.1,
                1.0,
                Provenance::ClosedForm,
                3.0
            )
            .pass
        );
        assert!(
            !ResultRecord::at_least(
                "x",
                String::new(),
                0.5,
                0.1,
                1.0,
                Provenance::ClosedForm,
                3.0
            )
            .pass
        );
        assert!(!ResultRecord::flag("x", String::new(), 2).pass);
        assert!(!ResultRecord::info("x", String::new(), 1.0, 0.0).gated);
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let r = ResultRecord::flag("e", "k=1;m=2".into(), 0).with_note("ok, fine");
        write_records(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "experiment,parameters,estimate,uncertainty,uncertainty_kind,reference,provenance,tolerance,gated,pass,note\n\
             e,k=1;m=2,0,0,exact,0,none,0,true,true,\"ok, fine\"\n"
        );
        assert_eq!(mean_se(&[1.0, 3.0]), (2.0, 1.0));
        assert_eq!(proportion(1, 4).0, 0.25);
    }
}
