//! Finite weighted instances and the neighbour-query view the matching
//! engine runs on.

use crate::error::{Error, Result};
use crate::weight::Weight;

/// Read access to a symmetric weight function, by neighbourhood.
///
/// Dense instances, lazily generated trees and spatial point sets all
/// implement this; the matching engine and the descending-closure code only
/// ever ask for "everything adjacent to `v` strictly below `bound`".
pub trait NeighborView {
    fn vertex_count(&self) -> usize;

    fn weight(&self, u: usize, v: usize) -> Weight;

    /// Appends every `(u, weight(v, u))` with `u != v` and weight `< bound`.
    /// `bound` may be `f64::INFINITY`, which asks for all finite edges.
    fn neighbors_below(&self, v: usize, bound: f64, out: &mut Vec<(usize, Weight)>);

    /// First search radius of the matching engine. Infinite means a single
    /// pass over all finite edges.
    fn initial_radius(&self) -> f64 {
        f64::INFINITY
    }

    /// A strict upper bound on all finite weights, if one is known.
    fn weight_ceiling(&self) -> f64 {
        f64::INFINITY
    }
}

/// A finite vertex set with a symmetric weight function and optional colours.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedInstance {
    ids: Vec<String>,
    colors: Option<Vec<u32>>,
    weights: Vec<Weight>,
}

impl WeightedInstance {
    /// Builds an instance from a weight function evaluated on `i < j`.
    /// Fails if two edges at one vertex share a finite weight.
    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> Weight) -> Result<Self> {
        let inst = Self::from_fn_unchecked(n, f);
        inst.check_distinct()?;
        Ok(inst)
    }

    /// Same as [`from_fn`](Self::from_fn) but skips the distinct-weights check.
    /// Useful for weight functions with ties (the plain hierarchical metric),
    /// on which only [`verify_stable`](crate::matching::verify_stable) is meaningful.
    pub fn from_fn_unchecked(n: usize, mut f: impl FnMut(usize, usize) -> Weight) -> Self {
        let mut weights = vec![Weight::INFINITE; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = f(i, j);
                weights[i * n + j] = w;
                weights[j * n + i] = w;
            }
        }
        WeightedInstance {
            ids: (0..n).map(|i| i.to_string()).collect(),
            colors: None,
            weights,
        }
    }

    /// Builds an instance from an explicit edge list; missing pairs are `+inf`.
    pub fn from_edges(
        ids: Vec<String>,
        colors: Option<Vec<u32>>,
        edges: &[(usize, usize, Weight)],
    ) -> Result<Self> {
        let n = ids.len();
        if let Some(c) = &colors {
            if c.len() != n {
                return Err(Error::Format(format!(
                    "{} colours for {} vertices",
                    c.len(),
                    n
                )));
            }
        }
        let mut weights = vec![Weight::INFINITE; n * n];
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::Format(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                if w.is_finite() {
                    return Err(Error::Format(format!("self-loop at vertex {a}")));
                }
                continue;
            }
            let prev = weights[a * n + b];
            if prev.is_finite() && prev != w {
                return Err(Error::Format(format!(
                    "conflicting weights {prev} and {w} for pair ({a}, {b})"
                )));
            }
            weights[a * n + b] = w;
            weights[b * n + a] = w;
        }
        let inst = WeightedInstance {
            ids,
            colors,
            weights,
        };
        inst.check_distinct()?;
        Ok(inst)
    }

    pub fn with_colors(mut self, colors: Vec<u32>) -> Result<Self> {
        if colors.len() != self.len() {
            return Err(Error::Format(format!(
                "{} colours for {} vertices",
                colors.len(),
                self.len()
            )));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.len() {
            return Err(Error::Format(format!(
                "{} ids for {} vertices",
                ids.len(),
                self.len()
            )));
        }
        self.ids = ids;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn colors(&self) -> Option<&[u32]> {
        self.colors.as_deref()
    }

    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> Weight {
        self.weights[u * self.len() + v]
    }

    /// Every finite edge `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize, Weight)> {
        let n = self.len();
        let mut out = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let w = self.weight(u, v);
                if w.is_finite() {
                    out.push((u, v, w));
                }
            }
        }
        out
    }

    /// Checks that no vertex sees two neighbours at the same finite weight.
    pub fn check_distinct(&self) -> Result<()> {
        let n = self.len();
        let mut row: Vec<(Weight, usize)> = Vec::with_capacity(n);
        for x in 0..n {
            row.clear();
            row.extend(
                (0..n)
                    .filter(|&y| y != x)
                    .map(|y| (self.weight(x, y), y))
                    .filter(|(w, _)| w.is_finite()),
            );
            row.sort_unstable();
            if let Some(pair) = row.windows(2).find(|p| p[0].0 == p[1].0) {
                return Err(Error::TiedWeights {
                    vertex: x,
                    first: pair[0].1,
                    second: pair[1].1,
                    weight: pair[0].0.value(),
                });
            }
        }
        Ok(())
    }

    /// Applies `f` to every finite weight. `f` must be strictly increasing;
    /// the result is re-checked for distinct weights, which also catches a
    /// non-injective `f`.
    pub fn rescaled(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let weights = self
            .weights
            .iter()
            .map(|w| w.map(&f))
            .collect::<Result<Vec<_>>>()?;
        let inst = WeightedInstance {
            ids: self.ids.clone(),
            colors: self.colors.clone(),
            weights,
        };
        inst.check_distinct()?;
        Ok(inst)
    }

    /// Returns a different instance whose finite weights are multiplied by
    /// `1 + jitter(u, v)` (with `u < v`). This changes the instance; it is
    /// the explicit opt-in for breaking ties in file input.
    pub fn perturbed(&self, jitter: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = self.len();
        let mut weights = self.weights.clone();
        for u in 0..n {
            for v in (u + 1)..n {
                let w = self.weight(u, v);
                if w.is_finite() {
                    let p = Weight::new(w.value() * (1.0 + jitter(u, v)))?;
                    weights[u * n + v] = p;
                    weights[v * n + u] = p;
                }
            }
        }
        let inst = WeightedInstance {
            ids: self.ids.clone(),
            colors: self.colors.clone(),
            weights,
        };
        inst.check_distinct()?;
        Ok(inst)
    }
}

impl NeighborView for WeightedInstance {
    fn vertex_count(&self) -> usize {
        self.len()
    }

    fn weight(&self, u: usize, v: usize) -> Weight {
        WeightedInstance::weight(self, u, v)
    }

    fn neighbors_below(&self, v: usize, bound: f64, out: &mut Vec<(usize, Weight)>) {
        let n = self.len();
        let row = &self.weights[v * n..(v + 1) * n];
        out.extend(
            row.iter()
                .enumerate()
                .filter(|&(u, w)| u != v && w.is_finite() && w.value() < bound)
                .map(|(u, &w)| (u, w)),
        );
    }
}
