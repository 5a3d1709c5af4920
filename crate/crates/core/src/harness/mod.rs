//! Experiment drivers and result records.

mod config;
mod coupling;
mod cross;
mod figures;
mod geometry;
mod hier;
mod records;
mod suite;
mod svg;
mod theorems;
mod torus;

pub use config::{run_experiment, Experiment, ExperimentConfig};
pub use coupling::{verify_coupling_lemmas, CouplingConfig};
pub use cross::{cross_validate, time_grid, CrossConfig, PalmTorus};
pub use figures::{fixed_count_config, scatter_panel, trajectory_csv};
pub use geometry::{f_d, f_d_inverse, lens_fraction, omega, uniform_in_ball};
pub use hier::{
    hierarchical_checks, write_level_stats, write_pmf_comparison, HierConfig, HierOutput,
};
pub use records::{
    mean_se, proportion, write_records, Provenance, ResultRecord, Uncertainty, RECORD_HEADER,
};
pub use suite::{ode_checks, run_suite, SuiteConfig, SuiteOutput, SymmetricCase};
pub use svg::matching_svg;
pub use theorems::{theorem_limit, theorem_targets, TheoremConfig};
pub use torus::{
    color_labels, family_label, palm_origin_outcomes, run_torus_experiment, DistanceBin,
    TorusConfig, TorusReport,
};
