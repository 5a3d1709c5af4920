//! Stable matchings of coloured Poisson point processes.
//!
//! Three families of models are covered: points on a Euclidean torus,
//! the Poisson-weighted infinite tree, and a segment with the dyadic
//! hierarchical metric. The crate provides the generic matching engine,
//! samplers for each model, numerical solutions of the tree's ODE systems,
//! certified interval recursions for the hierarchical model, and the
//! experiment harness that cross-checks them.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closure;
pub mod error;
pub mod harness;
pub mod hierarchical;
pub mod instance;
pub mod io;
pub mod matching;
pub mod models;
pub mod odes;
pub mod pwit;
pub mod rng;
pub mod weight;

pub use closure::{descending_closure, match_within, matched_within, DescendingClosure};
pub use error::{Error, Result};
pub use instance::{NeighborView, WeightedInstance};
pub use matching::{
    check_rescale_invariance, stable_match, stable_match_view, verify_stable, Matching, Stability,
};
pub use weight::Weight;
