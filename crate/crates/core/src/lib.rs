//! Feature-oriented defect prediction for C projects that use the
//! preprocessor for variability.

pub mod cache;
pub mod context;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod labels;
pub mod learn;
pub mod metrics;
pub mod pipeline;
pub mod repo;
pub mod scenarios;
pub mod testkit;
