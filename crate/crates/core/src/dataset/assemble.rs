use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{Attribute, Dataset, DatasetError, Instance};
use crate::context::{Level, ProjectHistory, ReleaseContext};
use crate::features::is_c_family;
use crate::labels::{label_features, label_files, ClassLabel};
use crate::metrics::{
    feature_process_metrics, feature_vector, file_process_metrics, max_aggregate_to_file, FeatureMetricVector,
    MessageMatchers, MetricSet, ScopeSnapshots,
};
use crate::repo::SnapshotSource;

/// One mined and traced project.
#[derive(Clone, Copy)]
pub struct ProjectInput<'a> {
    pub history: &'a ProjectHistory,
    /// Bug-introducing commit hashes.
    pub introducers: &'a BTreeSet<String>,
    pub snapshots: &'a dyn SnapshotSource,
}

/// One instance per affected feature (or changed C file) and scope, over
/// all projects in order.
pub fn assemble(
    projects: &[ProjectInput<'_>],
    level: Level,
    set: MetricSet,
    matchers: &MessageMatchers,
) -> Result<Dataset, DatasetError> {
    let parts = projects
        .par_iter()
        .map(|p| assemble_project(p, level, set, matchers))
        .collect::<Result<Vec<_>, _>>()?;
    let instances: Vec<Instance> = parts.into_iter().flatten().collect();
    if instances.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let attributes = set.ids().into_iter().map(Attribute::new).collect();
    Dataset::new(attributes, instances)
}

pub fn assemble_project(
    project: &ProjectInput<'_>,
    level: Level,
    set: MetricSet,
    matchers: &MessageMatchers,
) -> Result<Vec<Instance>, DatasetError> {
    let n = project.history.scope_count(level);
    let parts = (0..n)
        .into_par_iter()
        .map(|idx| {
            let ctx = project.history.scope_context(level, idx)?;
            scope_instances(&ctx, project.introducers, project.snapshots, set, matchers)
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn needs_structure(set: MetricSet) -> bool {
    matches!(set, MetricSet::ProcStructMet | MetricSet::FileCombined32)
}

fn instance(ctx: &ReleaseContext<'_>, name: &str, values: Vec<f64>, label: ClassLabel) -> Instance {
    Instance {
        project: ctx.history.name.clone(),
        scope: ctx.release.tag.clone(),
        scope_index: ctx.scope_index,
        name: name.to_string(),
        values,
        label,
    }
}

/// Instances of a single scope.
pub fn scope_instances(
    ctx: &ReleaseContext<'_>,
    introducers: &BTreeSet<String>,
    source: &dyn SnapshotSource,
    set: MetricSet,
    matchers: &MessageMatchers,
) -> Result<Vec<Instance>, DatasetError> {
    let file_labels = label_files(ctx, introducers);
    let snapshots = if needs_structure(set) {
        ScopeSnapshots::load(ctx, source)?
    } else {
        ScopeSnapshots::default()
    };
    let width = set.ids().len();

    let mut vectors: BTreeMap<String, FeatureMetricVector> = BTreeMap::new();
    for f in &ctx.features {
        let v = if needs_structure(set) {
            feature_vector(f, ctx, &snapshots)?
        } else {
            FeatureMetricVector {
                process: feature_process_metrics(f, ctx)?,
                ..Default::default()
            }
        };
        vectors.insert(f.clone(), v);
    }

    if !set.is_file_level() {
        let labels = label_features(ctx, &file_labels)?;
        return Ok(vectors
            .iter()
            .map(|(f, v)| instance(ctx, f, v.values()[..width].to_vec(), labels[f]))
            .collect());
    }

    let mut out = Vec::new();
    for (path, label) in &file_labels {
        if !is_c_family(path) {
            continue;
        }
        let mut values = file_process_metrics(path, ctx, matchers).values().to_vec();
        if set == MetricSet::FileCombined32 {
            values.extend(max_aggregate_to_file(&ctx.features_in_file(path), &vectors));
        }
        out.push(instance(ctx, path, values, *label));
    }
    Ok(out)
}
