//! Labelled instance tables: assembly from mined projects, chronological
//! splitting, SMOTE balancing and CSV/ARFF exchange.

mod assemble;
mod io;
mod smote;
mod split;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::labels::ClassLabel;
pub use assemble::{assemble, assemble_project, scope_instances, ProjectInput};
pub use io::{export_table, format_number, import_table, provenance_path, TableFormat};
pub use smote::{smote_balance, SmoteConfig, SmoteReport};
pub use split::{chronological_split, split_rounding, ProjectSplit, SplitSpec};

use crate::context::ContextError;
use crate::labels::LabelError;
use crate::metrics::MetricsError;
use crate::repo::RepoError;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset has no instances")]
    EmptyDataset,
    #[error("project {project} has {releases} scope(s); at least 2 are needed to split")]
    TooFewReleases { project: String, releases: usize },
    #[error("SMOTE needs at least {needed} minority instances, found {found}")]
    TooFewMinority { needed: usize, found: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("instance {index} has {found} values for {expected} attributes")]
    LengthMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("instance {index} attribute {attribute} is not finite")]
    NonFinite { index: usize, attribute: String },
    #[error("i/o on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error(transparent)]
    Context(#[from] ContextError),
}

/// A numeric attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub id: String,
}

impl Attribute {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub project: String,
    /// Release tag or abbreviated commit hash.
    pub scope: String,
    /// Chronological position of the scope within its project.
    pub scope_index: usize,
    /// Feature name or file path.
    pub name: String,
    pub values: Vec<f64>,
    pub label: ClassLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    attributes: Vec<Attribute>,
    instances: Vec<Instance>,
}

impl Dataset {
    /// Checks vector lengths and finiteness.
    pub fn new(attributes: Vec<Attribute>, instances: Vec<Instance>) -> Result<Self, DatasetError> {
        for (index, inst) in instances.iter().enumerate() {
            if inst.values.len() != attributes.len() {
                return Err(DatasetError::LengthMismatch {
                    index,
                    expected: attributes.len(),
                    found: inst.values.len(),
                });
            }
            if let Some(a) = inst.values.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite {
                    index,
                    attribute: attributes[a].id.clone(),
                });
            }
        }
        Ok(Self { attributes, instances })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute_ids(&self) -> Vec<&str> {
        self.attributes.iter().map(|a| a.id.as_str()).collect()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn into_instances(self) -> Vec<Instance> {
        self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn width(&self) -> usize {
        self.attributes.len()
    }

    pub fn rows(&self) -> Vec<&[f64]> {
        self.instances.iter().map(|i| i.values.as_slice()).collect()
    }

    /// True for defective instances.
    pub fn targets(&self) -> Vec<bool> {
        self.instances.iter().map(|i| i.label.is_defective()).collect()
    }

    /// (defective, clean)
    pub fn class_counts(&self) -> (usize, usize) {
        let d = self.instances.iter().filter(|i| i.label.is_defective()).count();
        (d, self.instances.len() - d)
    }

    pub fn has_both_classes(&self) -> bool {
        let (d, c) = self.class_counts();
        d > 0 && c > 0
    }

    pub fn projects(&self) -> BTreeSet<&str> {
        self.instances.iter().map(|i| i.project.as_str()).collect()
    }

    /// Keeps the instances matching `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Instance) -> bool) -> Dataset {
        Dataset {
            attributes: self.attributes.clone(),
            instances: self.instances.iter().filter(|i| keep(i)).cloned().collect(),
        }
    }

    /// Restricts to the attributes at `columns`, in that order.
    pub fn select_columns(&self, columns: &[usize]) -> Dataset {
        Dataset {
            attributes: columns.iter().map(|&c| self.attributes[c].clone()).collect(),
            instances: self
                .instances
                .iter()
                .map(|i| Instance {
                    values: columns.iter().map(|&c| i.values[c]).collect(),
                    ..i.clone()
                })
                .collect(),
        }
    }

    /// Restricts to the named attributes, in the order given.
    pub fn select(&self, ids: &[&str]) -> Result<Dataset, DatasetError> {
        let columns = ids
            .iter()
            .map(|id| {
                self.attributes
                    .iter()
                    .position(|a| a.id == *id)
                    .ok_or_else(|| DatasetError::SchemaMismatch(format!("no attribute `{id}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.select_columns(&columns))
    }

    /// Drops the attribute at `column`.
    pub fn without_column(&self, column: usize) -> Dataset {
        let keep: Vec<usize> = (0..self.width()).filter(|&c| c != column).collect();
        self.select_columns(&keep)
    }

    /// Appends the instances of `other`, which must share the schema.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset, DatasetError> {
        if self.attributes != other.attributes {
            return Err(DatasetError::SchemaMismatch("attribute lists differ".into()));
        }
        let mut instances = self.instances.clone();
        instances.extend(other.instances.iter().cloned());
        Ok(Dataset {
            attributes: self.attributes.clone(),
            instances,
        })
    }

    pub fn concat_all<'a>(parts: impl IntoIterator<Item = &'a Dataset>) -> Result<Dataset, DatasetError> {
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or(DatasetError::EmptyDataset)?.clone();
        iter.try_fold(first, |acc, d| acc.concat(d))
    }

    /// Per-attribute (min, max).
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.width())
            .map(|c| {
                self.instances
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                        (lo.min(i.values[c]), hi.max(i.values[c]))
                    })
            })
            .collect()
    }
}
