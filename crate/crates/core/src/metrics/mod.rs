//! Feature and file metrics.
//!
//! Metric ids are stable lowercase strings and appear verbatim in dataset
//! headers.

mod file;
mod process;
mod structure;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use file::{file_process_metrics, max_aggregate_to_file, FileProcessMetrics};
pub use process::{developer_experience, feature_process_metrics, ProcessMetrics};
pub use structure::{cyclomatic_complexity, feature_structure_metrics, nonblank_loc, ScopeSnapshots, StructureMetrics};

use crate::context::ReleaseContext;
use crate::labels::KeywordMatcher;
use crate::repo::RepoError;

pub const QUEIROZ_MET: [&str; 5] = ["fcomm", "fadev", "fddev", "fexp", "foexp"];
pub const PROC_MET: [&str; 8] = ["fcomm", "fadev", "fddev", "fexp", "foexp", "fmodd", "faddl", "freml"];
pub const PROC_STRUCT_MET: [&str; 14] = [
    "fcomm", "fadev", "fddev", "fexp", "foexp", "fmodd", "faddl", "freml", "fnloc", "fcyco", "lofc", "ndep", "scat",
    "tanga",
];
pub const FILE_MOSER: [&str; 17] = [
    "revi", "refa", "bugf", "auth", "addl", "addm", "adda", "reml", "remm", "rema", "cchn", "cchm", "ccha", "maxc",
    "avgc", "aage", "wage",
];
pub const FEATURE_COUNT: &str = "fnof";

pub const REFACTOR_KEYWORDS: [&str; 3] = ["refactor", "refactoring", "refactored"];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("feature `{0}` is not affected in this scope")]
    FeatureNotInRelease(String),
    #[error(transparent)]
    Repo(#[from] RepoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricSet {
    QueirozMet,
    ProcMet,
    ProcStructMet,
    FileMoser17,
    FileCombined32,
}

impl MetricSet {
    pub const FEATURE_SETS: [MetricSet; 3] = [MetricSet::QueirozMet, MetricSet::ProcMet, MetricSet::ProcStructMet];

    pub fn ids(self) -> Vec<&'static str> {
        match self {
            MetricSet::QueirozMet => QUEIROZ_MET.to_vec(),
            MetricSet::ProcMet => PROC_MET.to_vec(),
            MetricSet::ProcStructMet => PROC_STRUCT_MET.to_vec(),
            MetricSet::FileMoser17 => FILE_MOSER.to_vec(),
            MetricSet::FileCombined32 => {
                let mut ids = FILE_MOSER.to_vec();
                ids.extend(PROC_STRUCT_MET);
                ids.push(FEATURE_COUNT);
                ids
            }
        }
    }

    pub fn is_file_level(self) -> bool {
        matches!(self, MetricSet::FileMoser17 | MetricSet::FileCombined32)
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricSet::QueirozMet => "QueirozMet",
            MetricSet::ProcMet => "ProcMet",
            MetricSet::ProcStructMet => "ProcStructMet",
            MetricSet::FileMoser17 => "FileMoser17",
            MetricSet::FileCombined32 => "FileCombined32",
        }
    }
}

impl fmt::Display for MetricSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "queirozmet" | "queiroz" => Ok(MetricSet::QueirozMet),
            "procmet" | "proc" => Ok(MetricSet::ProcMet),
            "procstructmet" | "procstruct" => Ok(MetricSet::ProcStructMet),
            "filemoser17" | "file17" => Ok(MetricSet::FileMoser17),
            "filecombined32" | "file32" => Ok(MetricSet::FileCombined32),
            other => Err(format!("unknown metric set `{other}`")),
        }
    }
}

/// The fourteen feature metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMetricVector {
    pub process: ProcessMetrics,
    pub structure: StructureMetrics,
}

impl FeatureMetricVector {
    /// Values in `PROC_STRUCT_MET` order.
    pub fn values(&self) -> [f64; 14] {
        let p = &self.process;
        let s = &self.structure;
        [
            p.fcomm, p.fadev, p.fddev, p.fexp, p.foexp, p.fmodd, p.faddl, p.freml, s.fnloc, s.fcyco, s.lofc, s.ndep,
            s.scat, s.tanga,
        ]
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        PROC_STRUCT_MET.iter().position(|m| *m == id).map(|i| self.values()[i])
    }
}

/// Matchers for the message-based file metrics.
#[derive(Debug, Clone)]
pub struct MessageMatchers {
    pub corrective: KeywordMatcher,
    pub refactor: KeywordMatcher,
}

impl Default for MessageMatchers {
    fn default() -> Self {
        Self {
            corrective: KeywordMatcher::default(),
            refactor: KeywordMatcher::new(&REFACTOR_KEYWORDS),
        }
    }
}

/// All fourteen metrics of one feature in one scope.
pub fn feature_vector(
    feature: &str,
    ctx: &ReleaseContext<'_>,
    snapshots: &ScopeSnapshots,
) -> Result<FeatureMetricVector, MetricsError> {
    Ok(FeatureMetricVector {
        process: feature_process_metrics(feature, ctx)?,
        structure: feature_structure_metrics(feature, ctx, snapshots),
    })
}

/// Geometric mean of `values`, each shifted by one so zeros do not
/// collapse the product.
pub(crate) fn shifted_geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let product: f64 = values.iter().map(|v| v + 1.0).product();
    if product.is_finite() {
        product.powf(1.0 / n) - 1.0
    } else {
        let log_mean = values.iter().map(|v| (v + 1.0).ln()).sum::<f64>() / n;
        log_mean.exp() - 1.0
    }
}

pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
