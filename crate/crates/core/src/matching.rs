//! The stable matching engine.
//!
//! The unique stable matching of an instance with distinct weights is built
//! by repeatedly matching mutually closest free pairs. Processing the finite
//! edges in increasing weight order and accepting an edge whenever both ends
//! are still free does exactly that: the lightest edge between two free
//! vertices is always mutually closest among the free vertices.
//!
//! For large spatial instances the edges are fetched in rounds of doubling
//! radius, so only short edges are ever materialised.

use crate::error::{Error, Result};
use crate::instance::{NeighborView, WeightedInstance};
use crate::weight::Weight;

/// An involution on the vertex set together with the match weight `d_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    partner: Vec<usize>,
    match_weight: Vec<Weight>,
}

impl Matching {
    /// Everyone unmatched.
    pub fn empty(n: usize) -> Self {
        Matching {
            partner: (0..n).collect(),
            match_weight: vec![Weight::INFINITE; n],
        }
    }

    /// Builds a matching from disjoint pairs, reading weights from `view`.
    pub fn from_pairs<V: NeighborView + ?Sized>(
        view: &V,
        pairs: &[(usize, usize)],
    ) -> Result<Self> {
        let mut m = Matching::empty(view.vertex_count());
        for &(a, b) in pairs {
            if a >= m.len() || b >= m.len() || a == b {
                return Err(Error::MalformedMatching(format!("bad pair ({a}, {b})")));
            }
            if m.partner[a] != a || m.partner[b] != b {
                return Err(Error::MalformedMatching(format!(
                    "vertex in pair ({a}, {b}) matched twice"
                )));
            }
            let w = view.weight(a, b);
            if !w.is_finite() {
                return Err(Error::MalformedMatching(format!(
                    "pair ({a}, {b}) joined by an infinite weight"
                )));
            }
            m.link(a, b, w);
        }
        Ok(m)
    }

    fn link(&mut self, a: usize, b: usize, w: Weight) {
        self.partner[a] = b;
        self.partner[b] = a;
        self.match_weight[a] = w;
        self.match_weight[b] = w;
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    #[inline]
    pub fn partner(&self, x: usize) -> usize {
        self.partner[x]
    }

    /// `None` when unmatched.
    pub fn partner_of(&self, x: usize) -> Option<usize> {
        let p = self.partner[x];
        (p != x).then_some(p)
    }

    /// `d_M(x)`: the weight to the partner, `+inf` when unmatched.
    #[inline]
    pub fn match_weight(&self, x: usize) -> Weight {
        self.match_weight[x]
    }

    pub fn is_matched(&self, x: usize) -> bool {
        self.partner[x] != x
    }

    pub fn partners(&self) -> &[usize] {
        &self.partner
    }

    /// Matched pairs `(a, b)` with `a < b`, in order of `a`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(a, &b)| a < b)
            .map(|(a, &b)| (a, b))
            .collect()
    }

    pub fn unmatched(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| !self.is_matched(x)).collect()
    }

    /// Checks the involution and `d_M = weight(x, M(x))` against `view`.
    pub fn validate<V: NeighborView + ?Sized>(&self, view: &V) -> Result<()> {
        if self.len() != view.vertex_count() {
            return Err(Error::MalformedMatching(format!(
                "matching has {} vertices, instance has {}",
                self.len(),
                view.vertex_count()
            )));
        }
        for x in 0..self.len() {
            let y = self.partner[x];
            if y >= self.len() || self.partner[y] != x {
                return Err(Error::MalformedMatching(format!(
                    "partner map is not an involution at {x}"
                )));
            }
            let expected = if y == x {
                Weight::INFINITE
            } else {
                view.weight(x, y)
            };
            if y != x && !expected.is_finite() {
                return Err(Error::MalformedMatching(format!(
                    "{x} matched to {y} across an infinite weight"
                )));
            }
            if self.match_weight[x] != expected {
                return Err(Error::MalformedMatching(format!(
                    "match weight of {x} is {}, expected {expected}",
                    self.match_weight[x]
                )));
            }
        }
        Ok(())
    }
}

/// The unique stable matching of a finite instance.
///
/// The instance type already guarantees distinct weights, so this cannot
/// fail on a [`WeightedInstance`]; views are checked as edges are consumed.
pub fn stable_match(instance: &WeightedInstance) -> Matching {
    stable_match_view(instance).expect("WeightedInstance enforces distinct weights")
}

/// Stable matching on any [`NeighborView`], fetching edges in rounds of
/// doubling radius starting from [`NeighborView::initial_radius`].
///
/// Ties among the edges that are actually examined are reported as
/// [`Error::TiedWeights`].
pub fn stable_match_view<V: NeighborView + ?Sized>(view: &V) -> Result<Matching> {
    let n = view.vertex_count();
    let mut m = Matching::empty(n);
    let mut lower = 0.0f64;
    let mut radius = view.initial_radius();
    let ceiling = view.weight_ceiling();
    let mut edges: Vec<(Weight, usize, usize)> = Vec::new();
    let mut scratch = Vec::new();
    loop {
        let bound = if radius >= ceiling {
            f64::INFINITY
        } else {
            radius
        };
        edges.clear();
        let mut scanned = 0usize;
        for v in 0..n {
            if m.is_matched(v) {
                continue;
            }
            scratch.clear();
            view.neighbors_below(v, bound, &mut scratch);
            scanned += scratch.len();
            for &(u, w) in &scratch {
                if v < u && !m.is_matched(u) && w.value() >= lower {
                    edges.push((w, v, u));
                }
            }
        }
        greedy_round(&mut m, &mut edges)?;
        if bound.is_infinite() {
            break;
        }
        // once a round scans more than there are free pairs, finish on the
        // free pairs directly; none of them lies below `bound`
        let free: Vec<usize> = (0..n).filter(|&v| !m.is_matched(v)).collect();
        if free.len() < 2 {
            break;
        }
        if scanned >= free.len() * (free.len() - 1) / 2 {
            edges.clear();
            for (i, &a) in free.iter().enumerate() {
                for &b in &free[i + 1..] {
                    let w = view.weight(a, b);
                    if w.is_finite() {
                        edges.push((w, a, b));
                    }
                }
            }
            greedy_round(&mut m, &mut edges)?;
            break;
        }
        lower = bound;
        radius = bound * 2.0;
    }
    Ok(m)
}

fn greedy_round(m: &mut Matching, edges: &mut [(Weight, usize, usize)]) -> Result<()> {
    edges.sort_unstable();
    check_round_ties(edges)?;
    for &(w, a, b) in edges.iter() {
        if !m.is_matched(a) && !m.is_matched(b) {
            m.link(a, b, w);
        }
    }
    Ok(())
}

fn check_round_ties(sorted: &[(Weight, usize, usize)]) -> Result<()> {
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end].0 == sorted[start].0 {
            end += 1;
        }
        if end - start > 1 {
            let group = &sorted[start..end];
            for (i, &(w, a, b)) in group.iter().enumerate() {
                for &(_, c, d) in &group[i + 1..] {
                    let shared = [a, b].into_iter().find(|x| *x == c || *x == d);
                    if let Some(vertex) = shared {
                        let other = |p: usize, q: usize| if p == vertex { q } else { p };
                        return Err(Error::TiedWeights {
                            vertex,
                            first: other(a, b),
                            second: other(c, d),
                            weight: w.value(),
                        });
                    }
                }
            }
        }
        start = end;
    }
    Ok(())
}

/// Outcome of [`verify_stable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Stable,
    /// A pair with `weight(x, y) < min(d_M(x), d_M(y))`.
    Unstable(usize, usize),
}

impl Stability {
    pub fn is_stable(self) -> bool {
        self == Stability::Stable
    }
}

/// Checks `weight(x, y) >= min(d_M(x), d_M(y))` for every pair.
///
/// Does not assume distinct weights, so it also certifies stability with
/// respect to weight functions that have ties.
pub fn verify_stable<V: NeighborView + ?Sized>(view: &V, m: &Matching) -> Result<Stability> {
    m.validate(view)?;
    let mut scratch = Vec::new();
    for x in 0..view.vertex_count() {
        let dx = m.match_weight(x);
        scratch.clear();
        view.neighbors_below(x, dx.value(), &mut scratch);
        for &(y, w) in &scratch {
            if w < m.match_weight(y) {
                let (a, b) = if x < y { (x, y) } else { (y, x) };
                return Ok(Stability::Unstable(a, b));
            }
        }
    }
    Ok(Stability::Stable)
}

/// True iff rescaling every finite weight by the strictly increasing `f`
/// leaves the stable partner map unchanged.
pub fn check_rescale_invariance(
    instance: &WeightedInstance,
    f: impl Fn(f64) -> f64,
) -> Result<bool> {
    let before = stable_match(instance);
    let after = stable_match(&instance.rescaled(f)?);
    Ok(before.partners() == after.partners())
}
