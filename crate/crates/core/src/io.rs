//! Instance files and point dumps.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{NeighborView, WeightedInstance};
use crate::matching::Matching;
use crate::models::{build_instance, ColorRule, MetricKind, PointConfig, RuleKind};
use crate::weight::Weight;

/// A weight as written in files: a number or `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightValue {
    Number(f64),
    Text(String),
}

impl WeightValue {
    fn to_weight(&self) -> Result<Weight> {
        match self {
            WeightValue::Number(v) => Weight::new(*v),
            WeightValue::Text(s) if matches!(s.as_str(), "inf" | "+inf" | "infinity") => {
                Ok(Weight::INFINITE)
            }
            WeightValue::Text(s) => Err(Error::Format(format!("bad weight {s:?}"))),
        }
    }

    fn from_weight(w: Weight) -> Self {
        if w.is_finite() {
            WeightValue::Number(w.value())
        } else {
            WeightValue::Text("inf".into())
        }
    }
}

/// JSON instance: explicit `weights`, or `rule` + `positions` (+ `metric`,
/// `side`) handed to the point models. Unlisted pairs are `inf`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub vertices: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<(String, String, WeightValue)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_instance(instance: &WeightedInstance) -> Self {
        let ids = instance.ids();
        InstanceFile {
            vertices: ids.to_vec(),
            colors: instance.colors().map(<[u32]>::to_vec),
            weights: Some(
                instance
                    .edges()
                    .into_iter()
                    .map(|(u, v, w)| (ids[u].clone(), ids[v].clone(), WeightValue::from_weight(w)))
                    .collect(),
            ),
            ..Default::default()
        }
    }

    /// The point configuration behind a `rule` + `positions` file.
    pub fn point_config(&self) -> Result<Option<(PointConfig, ColorRule, MetricKind)>> {
        let (Some(kind), Some(positions)) = (self.rule, self.positions.as_ref()) else {
            return Ok(None);
        };
        if positions.len() != self.vertices.len() {
            return Err(Error::Format("one position per vertex required".into()));
        }
        let colors = match &self.colors {
            Some(c) => c.clone(),
            None if kind == RuleKind::OneType => vec![0; positions.len()],
            None => {
                return Err(Error::Format(
                    "colours required with a multi-colour rule".into(),
                ))
            }
        };
        let d = positions.first().map_or(1, Vec::len);
        if positions.iter().any(|p| p.len() != d) {
            return Err(Error::Format("positions have mixed dimensions".into()));
        }
        let metric = self.metric.unwrap_or(MetricKind::EuclideanTorus);
        let extent = positions.iter().flatten().fold(0.0f64, |a, &x| a.max(x));
        // default torus wide enough that no distance wraps
        let side = self.side.unwrap_or(2.0 * extent + 1.0);
        let k = colors.iter().copied().max().map_or(1, |c| c as usize + 1);
        let rule =
            ColorRule::from_kind(kind, k.max(if kind == RuleKind::OneType { 1 } else { 2 }))?;
        let config = PointConfig::new(d, side, positions.concat(), colors)?;
        Ok(Some((config, rule, metric)))
    }

    pub fn to_instance(&self) -> Result<WeightedInstance> {
        let ids = self.vertices.clone();
        let mut seen = HashMap::new();
        for (i, id) in ids.iter().enumerate() {
            if seen.insert(id.as_str(), i).is_some() {
                return Err(Error::Format(format!("duplicate vertex id {id:?}")));
            }
        }
        if let Some((config, rule, metric)) = self.point_config()? {
            return build_instance(&config, &rule, metric)?.with_ids(ids);
        }
        let weights = self.weights.as_ref().ok_or_else(|| {
            Error::Format("instance needs `weights` or `rule` + `positions`".into())
        })?;
        let lookup = |id: &String| {
            seen.get(id.as_str())
                .copied()
                .ok_or_else(|| Error::Format(format!("unknown vertex {id:?}")))
        };
        let edges = weights
            .iter()
            .map(|(a, b, w)| Ok((lookup(a)?, lookup(b)?, w.to_weight()?)))
            .collect::<Result<Vec<_>>>()?;
        WeightedInstance::from_edges(ids, self.colors.clone(), &edges)
    }
}

pub fn load_instance(path: &Path) -> Result<WeightedInstance> {
    InstanceFile::load(path)?.to_instance()
}

/// Matching as JSON: pairs with weights, and the unmatched ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingFile {
    pub pairs: Vec<(String, String, WeightValue)>,
    pub unmatched: Vec<String>,
    pub stable: bool,
}

impl MatchingFile {
    pub fn new(ids: &[String], m: &Matching, stable: bool) -> Self {
        MatchingFile {
            pairs: m
                .pairs()
                .into_iter()
                .map(|(a, b)| {
                    (
                        ids[a].clone(),
                        ids[b].clone(),
                        WeightValue::from_weight(m.match_weight(a)),
                    )
                })
                .collect(),
            unmatched: m.unmatched().into_iter().map(|v| ids[v].clone()).collect(),
            stable,
        }
    }
}

/// CSV rows `index, x0.., color, partner | -1, distance | inf`.
pub fn write_point_dump<W: Write, V: NeighborView + ?Sized>(
    out: W,
    config: &PointConfig,
    view: &V,
    m: &Matching,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = config.dimension;
    let mut header = vec!["index".to_string()];
    header.extend((0..d).map(|a| format!("x{a}")));
    header.extend(["color", "partner", "distance"].map(String::from));
    w.write_record(&header)?;
    for i in 0..config.len() {
        let mut row = vec![i.to_string()];
        row.extend(config.point(i).iter().map(|x| x.to_string()));
        row.push(config.color(i).to_string());
        match m.partner_of(i) {
            Some(j) => {
                row.push(j.to_string());
                row.push(view.weight(i, j).value().to_string());
            }
            None => {
                row.push("-1".into());
                row.push("inf".into());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::stable_match;

    #[test]
    fn weights_file_round_trip() {
        let text = r#"{"vertices": ["a", "b", "c"], "colors": [0, 1, 1],
            "weights": [["a", "b", 1.0], ["a", "c", 2.0], ["b", "c", "inf"]]}"#;
        let inst = InstanceFile::parse(text).unwrap().to_instance().unwrap();
        let m = stable_match(&inst);
        assert_eq!(m.partner_of(0), Some(1));
        assert!(!m.is_matched(2));
        let again = InstanceFile::from_instance(&inst).to_instance().unwrap();
        assert_eq!(again.edges(), inst.edges());
    }

    #[test]
    fn positions_file() {
        let text = r#"{"vertices": ["p", "q", "r", "s"], "rule": "one_type",
            "positions": [[0.0], [1.0], [3.0], [7.0]]}"#;
        let inst = InstanceFile::parse(text).unwrap().to_instance().unwrap();
        let m = stable_match(&inst);
        assert_eq!(m.pairs(), vec![(0, 1), (2, 3)]);
        assert_eq!(m.match_weight(2).value(), 4.0);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(
            InstanceFile::parse(r#"{"vertices": ["a"], "weights": [["a", "z", 1.0]]}"#)
                .unwrap()
                .to_instance()
                .is_err()
        );
        assert!(
            InstanceFile::parse(r#"{"vertices": ["a", "a"], "weights": []}"#)
                .unwrap()
                .to_instance()
                .is_err()
        );
        assert!(
            InstanceFile::parse(r#"{"vertices": ["a", "b"], "weights": [["a", "b", "big"]]}"#)
                .unwrap()
                .to_instance()
                .is_err()
        );
        assert!(InstanceFile::parse(r#"{"vertices": ["a"]}"#)
            .unwrap()
            .to_instance()
            .is_err());
    }

    #[test]
    fn point_dump_rows() {
        let config = PointConfig::new(1, 10.0, vec![0.0, 1.0, 5.0], vec![0, 0, 0]).unwrap();
        let inst =
            build_instance(&config, &ColorRule::one_type(), MetricKind::EuclideanTorus).unwrap();
        let m = stable_match(&inst);
        let mut buf = Vec::new();
        write_point_dump(&mut buf, &config, &inst, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "index,x0,color,partner,distance\n0,0,0,1,1\n1,1,0,0,1\n2,5,0,-1,inf\n"
        );
    }
}
