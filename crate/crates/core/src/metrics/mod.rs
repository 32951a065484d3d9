//! Text, image and cross-modal sensitivity metrics, reward/interaction
//! differences, Pearson correlation and dataset aggregation.

mod pearson;
mod report;
mod sample;
mod sensitivity;

pub use pearson::pearson;
pub use report::{
    aggregate_report, Correlation, Family, MeanValue, Metric, MetricReport, SampleResult, Selector, Side,
};
pub use sample::{
    Aspect, Caption, Category, Image, ObjectGroup, Perturbation, RegionAssignment, RegionSelector, RegionTag, Role,
    RoleAssignment, SamplePair,
};
pub use sensitivity::{
    crossmodal_d, crossmodal_q, d_sensitivity, interaction_difference, q_sensitivity, reward_difference, DiagnosisSide,
    MetricConfig, SampleDiagnostics,
};
