//! The descending part of the Poisson-weighted infinite tree.
//!
//! Only vertices reachable from the root along paths with strictly
//! decreasing edge weights below the bound `T` are generated: a node entered
//! along an edge of weight `t` gets the points of its own unit-rate Poisson
//! process that fall in `[0, t)` as children. That tree is exactly the
//! information that decides whether the root is matched below `T`, and its
//! expected size is `e^T`.
//!
//! Each node draws from its own generator keyed by the path label, colour
//! first and then the exponential gaps, so regrowing a tree with a larger
//! bound reproduces it and only adds nodes.

use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::NeighborView;
use crate::models::{draw_color, ColorRule, ModelFamily};
use crate::rng::{node_key, node_rng, splitmix64, SeedStream};
use crate::weight::Weight;

pub const DEFAULT_NODE_CAP: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PwitNode {
    /// `None` at the root.
    pub parent: Option<usize>,
    /// Weight of the edge to the parent; `0` at the root.
    pub weight: f64,
    pub color: u32,
    pub depth: u32,
    /// Children occupy `first_child..first_child + child_count`, ascending
    /// by weight.
    pub first_child: usize,
    pub child_count: usize,
}

impl PwitNode {
    pub fn children(&self) -> std::ops::Range<usize> {
        self.first_child..self.first_child + self.child_count
    }
}

/// A sampled descending tree with bound `T`, nodes in breadth-first order.
#[derive(Clone, Debug, PartialEq)]
pub struct DescendingTree {
    nodes: Vec<PwitNode>,
    bound: f64,
    censored: bool,
}

impl DescendingTree {
    pub fn root(&self) -> &PwitNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[PwitNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Generation stopped at the node cap; the tree is incomplete.
    pub fn is_censored(&self) -> bool {
        self.censored
    }

    /// The node's label: 1-based child indices along the path from the root.
    pub fn label(&self, mut v: usize) -> Vec<u32> {
        let mut label = Vec::new();
        while let Some(p) = self.nodes[v].parent {
            label.push((v - self.nodes[p].first_child + 1) as u32);
            v = p;
        }
        label.reverse();
        label
    }

    /// Number of descending paths of each length (depth histogram).
    pub fn depth_counts(&self) -> Vec<usize> {
        let mut counts = Vec::new();
        for n in &self.nodes {
            let d = n.depth as usize;
            if counts.len() <= d {
                counts.resize(d + 1, 0);
            }
            counts[d] += 1;
        }
        counts
    }
}

/// Samples the descending tree below `bound` with i.i.d. colours.
///
/// `root_key` fixes the realisation (see [`root_key`]). If more than
/// `node_cap` nodes would be generated the tree is returned flagged as
/// censored.
pub fn generate_descending_tree(
    bound: f64,
    color_probs: &[f64],
    root_key: u64,
    node_cap: usize,
) -> Result<DescendingTree> {
    if !(bound > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tree bound must be positive, got {bound}"
        )));
    }
    let mut nodes = vec![PwitNode {
        parent: None,
        weight: 0.0,
        color: 0,
        depth: 0,
        first_child: 1,
        child_count: 0,
    }];
    let mut keys = vec![root_key];
    let mut censored = false;
    let mut next = 0;
    while next < nodes.len() {
        let v = next;
        next += 1;
        let mut rng = node_rng(keys[v]);
        nodes[v].color = draw_color(&mut rng, color_probs);
        let limit = if v == 0 { bound } else { nodes[v].weight };
        let first = nodes.len();
        let depth = nodes[v].depth + 1;
        let mut t = 0.0;
        let mut j = 0u64;
        loop {
            let gap: f64 = Exp1.sample(&mut rng);
            t += gap;
            if t >= limit {
                break;
            }
            if nodes.len() >= node_cap {
                censored = true;
                break;
            }
            j += 1;
            keys.push(node_key(keys[v], j));
            nodes.push(PwitNode {
                parent: Some(v),
                weight: t,
                color: 0,
                depth,
                first_child: 0,
                child_count: 0,
            });
        }
        nodes[v].first_child = first;
        nodes[v].child_count = nodes.len() - first;
        if censored {
            break;
        }
    }
    Ok(DescendingTree {
        nodes,
        bound,
        censored,
    })
}

/// Root key of replicate `replicate` under master seed `seed`.
pub fn root_key(seed: u64, replicate: u64) -> u64 {
    node_key(SeedStream::new(seed).key("pwit"), splitmix64(replicate))
}

/// The weight along which the root is matched, if below the tree bound.
///
/// Bottom-up availability: a node entered along weight `t` is matched below
/// `t` iff one of its children (all lighter than `t`) has a compatible
/// colour and is itself not matched below the connecting weight. The root
/// takes the lightest such child.
pub fn root_match_weight(tree: &DescendingTree, rule: &ColorRule) -> Option<f64> {
    let nodes = &tree.nodes;
    let mut matched = vec![false; nodes.len()];
    for v in (1..nodes.len()).rev() {
        let c = nodes[v].color;
        matched[v] = nodes[v]
            .children()
            .any(|w| !matched[w] && rule.compatible(c, nodes[w].color));
    }
    let root = &nodes[0];
    root.children()
        .find(|&w| !matched[w] && rule.compatible(root.color, nodes[w].color))
        .map(|w| nodes[w].weight)
}

/// True iff the PWIT stable matching has `d_M(root) < T`.
pub fn root_matched_within(tree: &DescendingTree, rule: &ColorRule) -> Result<bool> {
    if tree.censored {
        return Err(Error::InvalidParameter("tree is censored".into()));
    }
    Ok(root_match_weight(tree, rule).is_some())
}

/// The tree as a weighted graph: parent-child edges, `+inf` elsewhere and
/// between incompatible colours.
pub struct TreeView<'a> {
    tree: &'a DescendingTree,
    rule: &'a ColorRule,
}

impl<'a> TreeView<'a> {
    pub fn new(tree: &'a DescendingTree, rule: &'a ColorRule) -> Self {
        TreeView { tree, rule }
    }

    fn edge(&self, child: usize) -> Weight {
        let n = &self.tree.nodes[child];
        let p = n.parent.expect("non-root");
        if self.rule.compatible(n.color, self.tree.nodes[p].color) {
            Weight::new(n.weight).unwrap_or(Weight::INFINITE)
        } else {
            Weight::INFINITE
        }
    }
}

impl NeighborView for TreeView<'_> {
    fn vertex_count(&self) -> usize {
        self.tree.nodes.len()
    }

    fn weight(&self, u: usize, v: usize) -> Weight {
        let nodes = &self.tree.nodes;
        if nodes[v].parent == Some(u) {
            self.edge(v)
        } else if nodes[u].parent == Some(v) {
            self.edge(u)
        } else {
            Weight::INFINITE
        }
    }

    fn neighbors_below(&self, v: usize, bound: f64, out: &mut Vec<(usize, Weight)>) {
        let node = &self.tree.nodes[v];
        if let Some(p) = node.parent {
            let w = self.edge(v);
            if w.is_finite() && w.value() < bound {
                out.push((p, w));
            }
        }
        for c in node.children() {
            if self.tree.nodes[c].weight >= bound {
                break;
            }
            let w = self.edge(c);
            if w.is_finite() {
                out.push((c, w));
            }
        }
    }
}

/// Monte Carlo estimates of `P(root has colour i and is not matched below t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootEstimates {
    pub family: ModelFamily,
    pub bound: f64,
    pub times: Vec<f64>,
    /// `estimates[t][i]`.
    pub estimates: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    pub replicates: usize,
    pub censored: usize,
    /// Sizes of all complete trees, in replicate order.
    pub sizes: Vec<usize>,
}

impl RootEstimates {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.replicates.max(1) as f64
    }

    /// Estimates at the last time of the grid (normally `bound`).
    pub fn at_bound(&self) -> &[f64] {
        self.estimates.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn se_at_bound(&self) -> &[f64] {
        self.std_errors.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Outcome of one replicate: root colour, its match weight (if below the
/// bound) and the tree size; `None` if censored.
pub type ReplicateOutcome = Option<(u32, Option<f64>, usize)>;

pub fn simulate_replicates(
    family: &ModelFamily,
    bound: f64,
    replicates: usize,
    seed: u64,
    node_cap: usize,
) -> Result<Vec<ReplicateOutcome>> {
    family.validate()?;
    let rule = family.rule();
    let probs = family.probs();
    (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let tree = generate_descending_tree(bound, &probs, root_key(seed, rep), node_cap)?;
            if tree.is_censored() {
                return Ok(None);
            }
            Ok(Some((
                tree.root().color,
                root_match_weight(&tree, &rule),
                tree.node_count(),
            )))
        })
        .collect()
}

/// Estimates the colour-resolved unmatched probabilities on `times` (each
/// `<= bound`) from one population of trees grown to `bound`. Censored
/// replicates are excluded and counted; standard errors are binomial.
pub fn estimate_root_probabilities(
    family: &ModelFamily,
    bound: f64,
    times: &[f64],
    replicates: usize,
    seed: u64,
    node_cap: usize,
) -> Result<RootEstimates> {
    if replicates == 0 {
        return Err(Error::InvalidParameter(
            "need at least one replicate".into(),
        ));
    }
    if let Some(t) = times.iter().find(|&&t| !(0.0..=bound).contains(&t)) {
        return Err(Error::InvalidParameter(format!(
            "time {t} outside [0, {bound}]"
        )));
    }
    let outcomes = simulate_replicates(family, bound, replicates, seed, node_cap)?;
    let k = family.colors();
    let complete: Vec<_> = outcomes.iter().flatten().collect();
    let used = complete.len();
    let mut estimates = Vec::with_capacity(times.len());
    let mut std_errors = Vec::with_capacity(times.len());
    for &t in times {
        let mut counts = vec![0usize; k];
        for &&(color, w, _) in &complete {
            if w.is_none_or(|w| w >= t) {
                counts[color as usize] += 1;
            }
        }
        let (est, se): (Vec<f64>, Vec<f64>) = counts.iter().map(|&c| binomial(c, used)).unzip();
        estimates.push(est);
        std_errors.push(se);
    }
    Ok(RootEstimates {
        family: family.clone(),
        bound,
        times: times.to_vec(),
        estimates,
        std_errors,
        replicates,
        censored: replicates - used,
        sizes: complete.iter().map(|o| o.2).collect(),
    })
}

fn binomial(hits: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}
