//! Descending closures and the local decision "is `x` matched below `R`".
//!
//! A vertex `x` is matched along an edge of weight `< R` exactly when some
//! neighbour `y` with `weight(x, y) < R` is itself *not* matched below
//! `weight(x, y)`. Each such sub-question only looks at strictly lighter
//! edges, so it is answered inside the descending closure of `x`.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::instance::NeighborView;
use crate::weight::Weight;

pub const DEFAULT_CLOSURE_CAP: usize = 10_000_000;

/// Union of all descending paths from `root` with weights below `radius`.
#[derive(Clone, Debug)]
pub struct DescendingClosure {
    root: usize,
    radius: f64,
    vertices: Vec<usize>,
    edges: Vec<(usize, usize, Weight)>,
    /// Outgoing edges per vertex, ascending by weight.
    adjacency: HashMap<usize, Vec<(Weight, usize)>>,
}

impl DescendingClosure {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Sorted vertex ids.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Edges `(u, v, w)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize, Weight)] {
        &self.edges
    }

    fn neighbors(&self, v: usize) -> &[(Weight, usize)] {
        self.adjacency.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Explores every descending path from `root` with weights `< radius`.
///
/// Never asks `view` for edges at or above the weight a vertex was entered
/// by (or `radius` at the root). Fails once more than `cap` vertices have
/// been reached.
pub fn descending_closure<V: NeighborView + ?Sized>(
    view: &V,
    root: usize,
    radius: f64,
    cap: usize,
) -> Result<DescendingClosure> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "closure radius must be positive, got {radius}"
        )));
    }
    // Largest bound each vertex has been expanded with; a smaller bound
    // would only revisit a subset of edges.
    let mut expanded: HashMap<usize, f64> = HashMap::new();
    let mut edge_set: HashSet<(usize, usize)> = HashSet::new();
    let mut edges = Vec::new();
    let mut stack = vec![(root, radius)];
    let mut scratch = Vec::new();
    expanded.insert(root, f64::NEG_INFINITY);
    while let Some((v, bound)) = stack.pop() {
        let seen = expanded.get(&v).copied().unwrap_or(f64::NEG_INFINITY);
        if bound <= seen {
            continue;
        }
        expanded.insert(v, bound);
        scratch.clear();
        view.neighbors_below(v, bound, &mut scratch);
        for &(u, w) in &scratch {
            let key = (v.min(u), v.max(u));
            if edge_set.insert(key) {
                edges.push((key.0, key.1, w));
            }
            if let std::collections::hash_map::Entry::Vacant(e) = expanded.entry(u) {
                e.insert(f64::NEG_INFINITY);
                if expanded.len() > cap {
                    return Err(Error::ClosureCapExceeded { cap });
                }
            }
            if w.value() > expanded[&u] {
                stack.push((u, w.value()));
            }
        }
    }
    let mut vertices: Vec<usize> = expanded.into_keys().collect();
    vertices.sort_unstable();
    edges.sort_unstable_by_key(|a| (a.0, a.1));
    let mut adjacency: HashMap<usize, Vec<(Weight, usize)>> = HashMap::new();
    for &(a, b, w) in &edges {
        adjacency.entry(a).or_default().push((w, b));
        adjacency.entry(b).or_default().push((w, a));
    }
    for list in adjacency.values_mut() {
        list.sort_unstable();
    }
    Ok(DescendingClosure {
        root,
        radius,
        vertices,
        edges,
        adjacency,
    })
}

/// The root's match inside the closure, if it is matched below the radius:
/// its partner and the match weight.
///
/// The sub-questions are memoised on `(vertex, bound)` and evaluated with an
/// explicit stack, smallest neighbours first, so the first neighbour that is
/// free below the connecting weight is the partner.
pub fn match_within(closure: &DescendingClosure) -> Option<(usize, Weight)> {
    struct Frame {
        vertex: usize,
        bound: f64,
        next: usize,
    }

    let key = |v: usize, b: f64| (v, b.to_bits());
    let mut memo: HashMap<(usize, u64), bool> = HashMap::new();
    let mut stack = vec![Frame {
        vertex: closure.root,
        bound: closure.radius,
        next: 0,
    }];
    // Result of the most recently finished frame, consumed by its parent.
    let mut returned: Option<bool> = None;

    while let Some(frame) = stack.last_mut() {
        let nbrs = closure.neighbors(frame.vertex);
        if let Some(child_matched) = returned.take() {
            if !child_matched {
                // Neighbour at index `next` is free below the edge weight.
                let done = key(frame.vertex, frame.bound);
                memo.insert(done, true);
                if stack.len() == 1 {
                    let (w, y) = nbrs[stack[0].next];
                    return Some((y, w));
                }
                stack.pop();
                returned = Some(true);
                continue;
            }
            frame.next += 1;
        }
        match nbrs.get(frame.next) {
            Some(&(w, y)) if w.value() < frame.bound => {
                let sub = key(y, w.value());
                match memo.get(&sub) {
                    Some(&matched) => returned = Some(matched),
                    None => stack.push(Frame {
                        vertex: y,
                        bound: w.value(),
                        next: 0,
                    }),
                }
            }
            _ => {
                memo.insert(key(frame.vertex, frame.bound), false);
                stack.pop();
                if stack.is_empty() {
                    return None;
                }
                returned = Some(false);
            }
        }
    }
    None
}

/// True iff the closure's root has `d_M(root) < radius` in the stable
/// matching of the whole instance.
pub fn matched_within(closure: &DescendingClosure) -> bool {
    match_within(closure).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::WeightedInstance;

    fn w(x: f64) -> Weight {
        Weight::new(x).unwrap()
    }

    fn chain(ab: f64, bc: f64) -> WeightedInstance {
        let ids = vec!["a".into(), "b".into(), "c".into()];
        WeightedInstance::from_edges(ids, None, &[(0, 1, w(ab)), (1, 2, w(bc))]).unwrap()
    }

    #[test]
    fn no_edge_below_radius() {
        let ids = vec!["r".into(), "x".into(), "y".into()];
        let inst =
            WeightedInstance::from_edges(ids, None, &[(0, 1, w(0.5)), (0, 2, w(0.9))]).unwrap();
        let c = descending_closure(&inst, 0, 0.4, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(c.vertices(), &[0]);
        assert!(c.edges().is_empty());
        assert!(!matched_within(&c));
    }

    #[test]
    fn descending_chain_is_followed() {
        let c = descending_closure(&chain(3.0, 1.0), 0, 4.0, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(c.vertices(), &[0, 1, 2]);
        assert_eq!(c.edges().len(), 2);
        // b and c are mutually closest, so a is left alone
        assert!(!matched_within(&c));
    }

    #[test]
    fn ascending_chain_stops() {
        let c = descending_closure(&chain(1.0, 3.0), 0, 4.0, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(c.vertices(), &[0, 1]);
        assert_eq!(c.edges(), &[(0, 1, w(1.0))]);
        assert_eq!(match_within(&c), Some((1, w(1.0))));
    }

    #[test]
    fn cap_is_enforced() {
        let pos: Vec<f64> = (0..20).map(|i| (i as f64).powf(1.5)).collect();
        let inst = WeightedInstance::from_fn(20, |i, j| w((pos[i] - pos[j]).abs())).unwrap();
        assert!(matches!(
            descending_closure(&inst, 19, 1e9, 5),
            Err(Error::ClosureCapExceeded { cap: 5 })
        ));
        assert!(descending_closure(&inst, 0, 0.0, 5).is_err());
    }

    #[test]
    fn agrees_with_engine_on_a_line() {
        let pos: [f64; 6] = [0.0, 1.0, 3.0, 7.0, 7.5, 12.7];
        let inst = WeightedInstance::from_fn(6, |i, j| w((pos[i] - pos[j]).abs())).unwrap();
        let m = crate::matching::stable_match(&inst);
        for x in 0..6 {
            for r in [0.2, 0.6, 1.5, 2.5, 4.1, 6.0, 100.0] {
                let c = descending_closure(&inst, x, r, DEFAULT_CLOSURE_CAP).unwrap();
                assert_eq!(
                    matched_within(&c),
                    m.match_weight(x).value() < r,
                    "x={x} r={r}"
                );
            }
        }
    }
}
