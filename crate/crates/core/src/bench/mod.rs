//! Monte-Carlo harness: contaminated data generators, EMSE / total time /
//! relative efficiency per estimator, and breakdown and equivariance probes.

mod generate;
mod probes;
mod study;

pub use generate::{clean_line_data, gen_contaminated, Scheme, SimulationSpec};
pub use probes::{
    breakdown_probe, contaminate, equivariance_probe, scaled_deviation, EquivarianceReport, Pattern,
};
pub use study::{
    emse, fmt_full, relative_efficiency, run_study, Estimator, EstimatorMetrics, MetricsReport,
};
