use super::config::PointConfig;
use super::metric::{check_dyadic_side, rho, rho_tilde, torus_distance, MetricKind};
use super::rule::ColorRule;
use crate::error::{Error, Result};
use crate::instance::{NeighborView, WeightedInstance};
use crate::weight::Weight;

/// On-demand weights of a point configuration, with a spatial index so that
/// the matching engine and descending closures only touch nearby pairs.
#[derive(Clone, Debug)]
pub struct ConfigView<'a> {
    config: &'a PointConfig,
    rule: ColorRule,
    metric: MetricKind,
    index: Index,
}

#[derive(Clone, Debug)]
enum Index {
    /// Uniform grid with `per_axis^d` cells on the torus.
    Grid {
        per_axis: usize,
        cell: f64,
        cells: Vec<Vec<usize>>,
    },
    /// Points of the segment sorted by position; `rank[i]` is the slot of `i`.
    Sorted { order: Vec<usize>, rank: Vec<usize> },
}

impl<'a> ConfigView<'a> {
    pub fn new(config: &'a PointConfig, rule: &ColorRule, metric: MetricKind) -> Result<Self> {
        if let Some(&c) = config
            .colors()
            .iter()
            .find(|&&c| c as usize >= rule.colors())
        {
            return Err(Error::InvalidParameter(format!(
                "colour {c} not covered by a {}-colour rule",
                rule.colors()
            )));
        }
        let n = config.len();
        let index = if metric.is_hierarchical() {
            if config.dimension != 1 {
                return Err(Error::InvalidParameter(
                    "hierarchical metrics need a one-dimensional configuration".into(),
                ));
            }
            check_dyadic_side(config.side)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| config.point(a)[0].total_cmp(&config.point(b)[0]));
            if let Some(w) = order
                .windows(2)
                .find(|w| config.point(w[0]) == config.point(w[1]))
            {
                return Err(coincident(w[0], w[1]));
            }
            let mut rank = vec![0; n];
            for (slot, &i) in order.iter().enumerate() {
                rank[i] = slot;
            }
            Index::Sorted { order, rank }
        } else {
            let d = config.dimension as i32;
            let mut per_axis = ((n as f64 / 2.0).powf(1.0 / d as f64).floor() as usize).max(1);
            while per_axis > 1 && per_axis.pow(d as u32) > 4 * n.max(1) {
                per_axis -= 1;
            }
            let cell = config.side / per_axis as f64;
            let mut cells = vec![Vec::new(); per_axis.pow(d as u32)];
            for i in 0..n {
                cells[cell_of(config.point(i), cell, per_axis)].push(i);
            }
            for members in &cells {
                for (a, &i) in members.iter().enumerate() {
                    if let Some(&j) = members[a + 1..]
                        .iter()
                        .find(|&&j| config.point(i) == config.point(j))
                    {
                        return Err(coincident(i, j));
                    }
                }
            }
            Index::Grid {
                per_axis,
                cell,
                cells,
            }
        };
        Ok(ConfigView {
            config,
            rule: rule.clone(),
            metric,
            index,
        })
    }

    pub fn config(&self) -> &PointConfig {
        self.config
    }

    pub fn rule(&self) -> &ColorRule {
        &self.rule
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    /// Geometric distance, ignoring colours.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.config.point(i), self.config.point(j));
        match self.metric {
            MetricKind::EuclideanTorus => torus_distance(a, b, self.config.side),
            MetricKind::HierarchicalRho => rho(a[0], b[0]),
            MetricKind::HierarchicalRhoTilde => rho_tilde(a[0], b[0]),
        }
    }

    #[inline]
    fn pair_weight(&self, i: usize, j: usize) -> Weight {
        if i == j
            || !self
                .rule
                .compatible(self.config.color(i), self.config.color(j))
        {
            return Weight::INFINITE;
        }
        // distinct positions are checked at construction, so this is positive
        Weight::new(self.distance(i, j)).unwrap_or(Weight::INFINITE)
    }

    fn push_if_below(&self, v: usize, u: usize, bound: f64, out: &mut Vec<(usize, Weight)>) {
        if u != v {
            let w = self.pair_weight(v, u);
            if w.is_finite() && w.value() < bound {
                out.push((u, w));
            }
        }
    }
}

fn coincident(i: usize, j: usize) -> Error {
    Error::InvalidParameter(format!("points {i} and {j} coincide"))
}

fn cell_of(p: &[f64], cell: f64, per_axis: usize) -> usize {
    p.iter().fold(0, |acc, &x| {
        let c = ((x / cell) as usize).min(per_axis - 1);
        acc * per_axis + c
    })
}

impl NeighborView for ConfigView<'_> {
    fn vertex_count(&self) -> usize {
        self.config.len()
    }

    fn weight(&self, u: usize, v: usize) -> Weight {
        self.pair_weight(u, v)
    }

    fn neighbors_below(&self, v: usize, bound: f64, out: &mut Vec<(usize, Weight)>) {
        let n = self.config.len();
        match &self.index {
            Index::Grid {
                per_axis,
                cell,
                cells,
            } => {
                let g = *per_axis;
                let span = if bound.is_finite() {
                    (bound / cell).ceil() as usize
                } else {
                    usize::MAX
                };
                if span >= g / 2 {
                    for u in 0..n {
                        self.push_if_below(v, u, bound, out);
                    }
                    return;
                }
                let d = self.config.dimension;
                let home: Vec<usize> = self
                    .config
                    .point(v)
                    .iter()
                    .map(|&x| ((x / cell) as usize).min(g - 1))
                    .collect();
                let width = 2 * span + 1;
                let mut offset = vec![0usize; d];
                loop {
                    let idx = (0..d).fold(0, |acc, a| {
                        let c = (home[a] + g + offset[a] - span) % g;
                        acc * g + c
                    });
                    for &u in &cells[idx] {
                        self.push_if_below(v, u, bound, out);
                    }
                    // odometer over the (2 span + 1)^d neighbouring cells
                    let mut a = 0;
                    while a < d {
                        offset[a] += 1;
                        if offset[a] < width {
                            break;
                        }
                        offset[a] = 0;
                        a += 1;
                    }
                    if a == d {
                        break;
                    }
                }
            }
            Index::Sorted { order, rank } => {
                let x = self.config.point(v)[0];
                let pos = |slot: usize| self.config.point(order[slot])[0];
                let r = rank[v];
                // rho and rho_tilde both exceed |x - y|
                for slot in (0..r).rev() {
                    if x - pos(slot) >= bound {
                        break;
                    }
                    self.push_if_below(v, order[slot], bound, out);
                }
                for slot in r + 1..n {
                    if pos(slot) - x >= bound {
                        break;
                    }
                    self.push_if_below(v, order[slot], bound, out);
                }
            }
        }
    }

    fn initial_radius(&self) -> f64 {
        let n = self.config.len().max(1) as f64;
        let d = self.config.dimension as f64;
        (self.config.side.powf(d) / n).powf(1.0 / d)
    }

    fn weight_ceiling(&self) -> f64 {
        match self.metric {
            MetricKind::EuclideanTorus => self.config.side * (self.config.dimension as f64).sqrt(),
            _ => 2.0 * self.config.side,
        }
    }
}

/// The weight of the pair `(i, j)`: the metric distance, or `+inf` if the
/// colours may not be matched.
pub fn weight(
    config: &PointConfig,
    rule: &ColorRule,
    metric: MetricKind,
    i: usize,
    j: usize,
) -> Result<Weight> {
    if i == j {
        return Err(Error::InvalidParameter(
            "weight of a point with itself".into(),
        ));
    }
    if metric.is_hierarchical() && config.dimension != 1 {
        return Err(Error::InvalidParameter(
            "hierarchical metrics need a one-dimensional configuration".into(),
        ));
    }
    if !rule.compatible(config.color(i), config.color(j)) {
        return Ok(Weight::INFINITE);
    }
    let (a, b) = (config.point(i), config.point(j));
    let d = match metric {
        MetricKind::EuclideanTorus => torus_distance(a, b, config.side),
        MetricKind::HierarchicalRho => rho(a[0], b[0]),
        MetricKind::HierarchicalRhoTilde => rho_tilde(a[0], b[0]),
    };
    Weight::new(d)
}

/// Materialises all pairwise weights. Fails on ties, which is what the
/// plain hierarchical metric produces on almost every input.
pub fn build_instance(
    config: &PointConfig,
    rule: &ColorRule,
    metric: MetricKind,
) -> Result<WeightedInstance> {
    if config.is_empty() {
        return Err(Error::InvalidParameter("empty configuration".into()));
    }
    let view = ConfigView::new(config, rule, metric)?;
    let inst = WeightedInstance::from_fn_unchecked(config.len(), |i, j| view.pair_weight(i, j));
    inst.check_distinct()?;
    inst.with_colors(config.colors().to_vec())
}
