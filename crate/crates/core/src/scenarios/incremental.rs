use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{run_cell, Cell, ScenarioError, ScenarioOptions, ScenarioResult, FLAG_SINGLE_CLASS_TEST};
use crate::context::{ContextError, Level, ProjectHistory};
use crate::dataset::{scope_instances, Dataset, DatasetError, ProjectSplit, SplitSpec};
use crate::metrics::{MessageMatchers, MetricSet};
use crate::repo::SnapshotSource;

/// For every project and n: train on its first n scopes, test on scope
/// n+1. Test scopes without both classes are skipped and flagged.
pub fn rq4_incremental(ds: &Dataset, opts: &ScenarioOptions) -> Result<ScenarioResult, ScenarioError> {
    let mut result = ScenarioResult::new("rq4");
    let mut scopes: BTreeMap<&str, BTreeMap<usize, &str>> = BTreeMap::new();
    for i in ds.instances() {
        scopes.entry(&i.project).or_default().insert(i.scope_index, &i.scope);
    }
    let mut jobs = Vec::new();
    let mut spec = SplitSpec::default();
    for (project, ordered) in &scopes {
        let ordered: Vec<(usize, &str)> = ordered.iter().map(|(k, v)| (*k, *v)).collect();
        for n in 1..ordered.len() {
            let (test_index, test_name) = ordered[n];
            let train_ds = ds.filter(|i| i.project == *project && i.scope_index < test_index);
            let test = ds.filter(|i| i.project == *project && i.scope_index == test_index);
            spec.projects.push(ProjectSplit {
                project: project.to_string(),
                train_scopes: ordered[..n].iter().map(|s| s.0).collect(),
                test_scopes: vec![test_index],
                target_ratio: 0.0,
                achieved_ratio: 100.0 * n as f64 / (n + 1) as f64,
                train_instances: train_ds.len(),
                test_instances: test.len(),
            });
            let key = [
                ("project", project.to_string()),
                ("scope_index", test_index.to_string()),
                ("scope", test_name.to_string()),
            ];
            jobs.push((Cell::new(&key), train_ds, test));
        }
    }
    result.add_split(spec)?;
    result.cells = jobs
        .into_par_iter()
        .map(|(mut cell, train_ds, test)| {
            if test.has_both_classes() {
                run_cell(opts.classifier, &train_ds, &test, opts, &mut cell)?;
            } else {
                cell.train_instances = train_ds.len();
                cell.train_defective = train_ds.class_counts().0;
                cell.test_instances = test.len();
                cell.test_defective = test.class_counts().0;
                cell.flags.push(FLAG_SINGLE_CLASS_TEST.into());
            }
            Ok(cell)
        })
        .collect::<Result<_, ScenarioError>>()?;
    Ok(result)
}

/// The history as it stood at the end of scope `idx`.
pub fn truncated_history(history: &ProjectHistory, level: Level, idx: usize) -> Result<ProjectHistory, ContextError> {
    let releases = match level {
        Level::Release => {
            if idx >= history.releases.len() {
                return Err(ContextError::UnknownRelease(idx));
            }
            history.releases[..=idx].to_vec()
        }
        Level::Commit => {
            let kept: BTreeSet<&str> = history.commits[..=idx].iter().map(|c| c.hash.as_str()).collect();
            let mut releases = history.releases[..=history.release_index_of(idx)].to_vec();
            let last = releases.last_mut().expect("commit belongs to a release");
            last.commits.retain(|h| kept.contains(h.as_str()));
            last.end_commit = history.commits[idx].hash.clone();
            releases
        }
    };
    // commits outside the kept releases are dropped
    ProjectHistory::new(history.name.clone(), history.commits.clone(), releases)
}

/// Scopes whose metric values change when every later commit is removed
/// from the history; empty when no metric looks ahead.
pub fn check_no_leakage(
    history: &ProjectHistory,
    introducers: &BTreeSet<String>,
    source: &dyn SnapshotSource,
    level: Level,
    set: MetricSet,
    matchers: &MessageMatchers,
) -> Result<Vec<usize>, DatasetError> {
    let values = |h: &ProjectHistory, idx: usize| -> Result<Vec<(String, Vec<f64>)>, DatasetError> {
        let ctx = h.scope_context(level, idx)?;
        Ok(scope_instances(&ctx, introducers, source, set, matchers)?
            .into_iter()
            .map(|i| (i.name, i.values))
            .collect())
    };
    let leaking = (0..history.scope_count(level))
        .into_par_iter()
        .map(|idx| {
            let past = truncated_history(history, level, idx)?;
            Ok((values(history, idx)? != values(&past, idx)?).then_some(idx))
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok(leaking.into_iter().flatten().collect())
}
