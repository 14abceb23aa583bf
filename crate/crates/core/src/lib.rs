//! Classifiers that are fair with respect to rich families of subgroups.
//!
//! The learner minimizes error over linear threshold classifiers; an auditor
//! searches linear-threshold subgroups of the protected attributes for the
//! largest false-positive disparity weighted by the group's negative mass
//! (its γ-unfairness). Fictitious play between the two, with
//! cost-sensitive classification solved by least squares, yields a uniform
//! mixture of thresholds that trades error against subgroup fairness.
//!
//! Everything numeric is generic over [`Scalar`]; the aliases below fix it to
//! `f64`.

pub mod auditor;
pub mod dataset;
pub mod error;
pub mod fictplay;
pub mod frontier;
pub mod io;
pub mod linalg;
pub mod marginal;
pub mod metrics;
pub mod regression;
pub mod scalar;
pub mod subgroup;

pub use auditor::{
    audit_exhaustive, audit_grid, audit_heuristic, audit_marginal, AuditResult, Auditor,
};
pub use dataset::{load_csv, PreprocessConfig};
pub use error::{Error, Result};
pub use fictplay::{run, FictPlayConfig};
pub use frontier::{pareto_frontier, sweep, Algo, SweepSpec};
pub use marginal::run_marginal;
pub use scalar::Scalar;

pub type Dataset = dataset::Dataset<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type LinearThreshold = regression::LinearThreshold<f64>;
pub type MixtureClassifier = metrics::MixtureClassifier<f64>;
pub type Subgroup = subgroup::Subgroup<f64>;
pub type FairnessReport = metrics::FairnessReport<f64>;
pub type RunOutput = fictplay::RunOutput<f64>;
pub type TraceRecord = fictplay::TraceRecord<f64>;
pub type ParetoPoint = frontier::ParetoPoint<f64>;
pub type Model = io::Model<f64>;
