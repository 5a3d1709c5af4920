//! Colored Poisson configurations, weight functions and colour rules.

mod config;
mod metric;
mod rule;
mod view;

pub use config::{
    draw_color, palm_version, sample_config, sample_config_with, ConfigParams, PointConfig,
};
pub use metric::{quantize, rho, rho_tilde, torus_distance, MetricKind, SEGMENT_BITS};
pub use rule::{ColorRule, ModelFamily, RuleKind, BLUE, RED};
pub use view::{build_instance, weight, ConfigView};
