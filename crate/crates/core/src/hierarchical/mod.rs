//! The blue-minus-red excess `N_k(m)` of dyadic intervals: certified
//! interval recursion and segment Monte Carlo.

mod certify;
mod pmf;
mod segment;

pub use certify::{beta_recursion, verify_level_inequalities, Check, InequalityReport, Status};
pub use pmf::{
    base_pmf, base_pmf_with, exact_chain, g, level_up, stats, ExcessPmf, Interval, LevelStats,
    DEFAULT_N_MAX, DEFAULT_SLACK_BUDGET,
};
pub use segment::{
    compare_pmf, mc_segment, mc_segment_replicate, mc_segments, segment_excess, PmfComparison,
    SegmentSample, SegmentSummary, MAX_SEGMENT_LEVEL,
};
