use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Colour index of red points in the asymmetric two-type model.
pub const RED: u32 = 0;
/// Colour index of blue points in the asymmetric two-type model.
pub const BLUE: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    OneType,
    AsymmetricTwoType,
    SymmetricKType,
}

/// Which colour pairs may be matched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorRule {
    kind: RuleKind,
    k: usize,
    allowed: Vec<bool>,
}

impl ColorRule {
    pub fn one_type() -> Self {
        ColorRule {
            kind: RuleKind::OneType,
            k: 1,
            allowed: vec![true],
        }
    }

    /// Red-red and red-blue allowed, blue-blue forbidden.
    pub fn asymmetric() -> Self {
        ColorRule {
            kind: RuleKind::AsymmetricTwoType,
            k: 2,
            allowed: vec![true, true, true, false],
        }
    }

    /// `k` colours; only differently coloured points may be matched.
    pub fn symmetric(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "symmetric rule needs at least 2 colours, got {k}"
            )));
        }
        let allowed = (0..k * k).map(|i| i / k != i % k).collect();
        Ok(ColorRule {
            kind: RuleKind::SymmetricKType,
            k,
            allowed,
        })
    }

    pub fn from_kind(kind: RuleKind, k: usize) -> Result<Self> {
        match kind {
            RuleKind::OneType if k == 1 => Ok(Self::one_type()),
            RuleKind::AsymmetricTwoType if k == 2 => Ok(Self::asymmetric()),
            RuleKind::SymmetricKType => Self::symmetric(k),
            _ => Err(Error::InvalidParameter(format!(
                "rule {kind:?} does not take {k} colours"
            ))),
        }
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    /// Number of colours.
    pub fn colors(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn compatible(&self, a: u32, b: u32) -> bool {
        self.allowed[a as usize * self.k + b as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetric_forbids_only_blue_blue() {
        let r = ColorRule::asymmetric();
        assert!(r.compatible(RED, RED));
        assert!(r.compatible(RED, BLUE));
        assert!(r.compatible(BLUE, RED));
        assert!(!r.compatible(BLUE, BLUE));
    }

    #[test]
    fn symmetric_forbids_same_colour() {
        let r = ColorRule::symmetric(3).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(r.compatible(a, b), a != b);
            }
        }
        assert!(ColorRule::symmetric(1).is_err());
        assert!(ColorRule::from_kind(RuleKind::OneType, 2).is_err());
    }
}

/// One of the three colour models, with its colour probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelFamily {
    OneType,
    /// Blue with probability `eps`, red otherwise.
    Asymmetric {
        eps: f64,
    },
    Symmetric {
        probs: Vec<f64>,
    },
}

impl ModelFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelFamily::OneType => Ok(()),
            ModelFamily::Asymmetric { eps } => {
                if *eps > 0.0 && *eps < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "eps must lie in (0, 1), got {eps}"
                    )))
                }
            }
            ModelFamily::Symmetric { probs } => {
                if probs.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "symmetric model needs k >= 2 colours".into(),
                    ));
                }
                if probs.iter().any(|&p| !(p > 0.0)) {
                    return Err(Error::InvalidParameter(format!(
                        "colour probabilities must be positive: {probs:?}"
                    )));
                }
                super::config::check_probability_vector(probs)
            }
        }
    }

    pub fn rule(&self) -> ColorRule {
        match self {
            ModelFamily::OneType => ColorRule::one_type(),
            ModelFamily::Asymmetric { .. } => ColorRule::asymmetric(),
            ModelFamily::Symmetric { probs } => {
                ColorRule::symmetric(probs.len()).unwrap_or_else(|_| ColorRule::one_type())
            }
        }
    }

    /// Colour probabilities in colour-index order (red, blue for the
    /// asymmetric model).
    pub fn probs(&self) -> Vec<f64> {
        match self {
            ModelFamily::OneType => vec![1.0],
            ModelFamily::Asymmetric { eps } => vec![1.0 - eps, *eps],
            ModelFamily::Symmetric { probs } => probs.clone(),
        }
    }

    pub fn colors(&self) -> usize {
        self.probs().len()
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::OneType => "one",
            ModelFamily::Asymmetric { .. } => "asym",
            ModelFamily::Symmetric { .. } => "sym",
        }
    }
}
