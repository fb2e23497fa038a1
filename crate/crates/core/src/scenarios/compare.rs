use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{run_cell, Cell, ScenarioError, ScenarioOptions, ScenarioResult};
use crate::context::{ContextError, Level, ProjectHistory};
use crate::dataset::{chronological_split, Dataset};

/// (project, scope index, feature) -> files changed for the feature in
/// that scope.
pub type FeatureFileMap = BTreeMap<(String, usize, String), BTreeSet<String>>;

pub fn feature_file_map(histories: &[&ProjectHistory], level: Level) -> Result<FeatureFileMap, ContextError> {
    let mut map = FeatureFileMap::new();
    for h in histories {
        for idx in 0..h.scope_count(level) {
            let ctx = h.scope_context(level, idx)?;
            for f in &ctx.features {
                map.insert((h.name.clone(), idx, f.clone()), ctx.scope_files_of(f));
            }
        }
    }
    Ok(map)
}

/// One feature/file pair of the test scopes. Predictions are `None` when
/// the side could not be trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinRow {
    pub project: String,
    pub scope: String,
    pub feature: String,
    pub feature_defective: bool,
    pub feature_predicted: Option<bool>,
    pub file: String,
    pub file_defective: Option<bool>,
    pub file_predicted: Option<bool>,
}

/// Defective test features and which side predicted them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingCounts {
    pub defective_features: usize,
    pub feature_correct: usize,
    /// Some defective mapped file was predicted defective.
    pub file_correct: usize,
    pub both: usize,
    pub feature_only: usize,
    pub file_only: usize,
    pub neither: usize,
}

impl MappingCounts {
    /// Counts over the rows of one (project, scope, feature) group at a time.
    pub fn from_rows(rows: &[JoinRow]) -> MappingCounts {
        let mut groups: BTreeMap<(&str, &str, &str), Vec<&JoinRow>> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.feature_defective) {
            groups.entry((&r.project, &r.scope, &r.feature)).or_default().push(r);
        }
        let mut c = MappingCounts::default();
        for g in groups.values() {
            let feature = g[0].feature_predicted == Some(true);
            let file = g
                .iter()
                .any(|r| r.file_defective == Some(true) && r.file_predicted == Some(true));
            c.defective_features += 1;
            c.feature_correct += feature as usize;
            c.file_correct += file as usize;
            match (feature, file) {
                (true, true) => c.both += 1,
                (true, false) => c.feature_only += 1,
                (false, true) => c.file_only += 1,
                (false, false) => c.neither += 1,
            }
        }
        c
    }
}

fn flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "defective",
        Some(false) => "clean",
        None => "",
    }
}

/// Trains on features and on files of the same early scopes and joins the
/// test predictions through `map`.
pub fn rq3_compare(
    features: &Dataset,
    files: &Dataset,
    map: &FeatureFileMap,
    opts: &ScenarioOptions,
) -> Result<ScenarioResult, ScenarioError> {
    let mut result = ScenarioResult::new("rq3");
    let (f_train, f_test, spec) = chronological_split(features, opts.target_ratio, &opts.ratios)?;
    // files follow the feature cut so both sides test the same scopes
    let cut: BTreeMap<&str, usize> = spec
        .projects
        .iter()
        .map(|p| {
            (
                p.project.as_str(),
                p.test_scopes.iter().copied().min().unwrap_or(usize::MAX),
            )
        })
        .collect();
    let in_test = |project: &str, scope: usize| cut.get(project).is_some_and(|&c| scope >= c);
    let file_train = files.filter(|i| !in_test(&i.project, i.scope_index));
    let file_test = files.filter(|i| in_test(&i.project, i.scope_index));
    result.add_split(spec.clone())?;

    let mut feature_cell = Cell::new(&[("side", "feature".into())]);
    let feature_scores = run_cell(opts.classifier, &f_train, &f_test, opts, &mut feature_cell)?;
    let mut file_cell = Cell::new(&[("side", "file".into())]);
    let file_scores = run_cell(opts.classifier, &file_train, &file_test, opts, &mut file_cell)?;

    let file_index: BTreeMap<(&str, usize, &str), (bool, Option<bool>)> = file_test
        .instances()
        .iter()
        .enumerate()
        .map(|(k, i)| {
            let predicted = file_scores.as_ref().map(|s| s[k] >= 0.5);
            (
                (i.project.as_str(), i.scope_index, i.name.as_str()),
                (i.label.is_defective(), predicted),
            )
        })
        .collect();
    let mut rows = Vec::new();
    for (k, i) in f_test.instances().iter().enumerate() {
        let mapped = map
            .get(&(i.project.clone(), i.scope_index, i.name.clone()))
            .filter(|m| !m.is_empty())
            .ok_or_else(|| ScenarioError::UnmappedFeature {
                project: i.project.clone(),
                scope: i.scope_index,
                feature: i.name.clone(),
            })?;
        for file in mapped {
            let found = file_index.get(&(i.project.as_str(), i.scope_index, file.as_str()));
            rows.push(JoinRow {
                project: i.project.clone(),
                scope: i.scope.clone(),
                feature: i.name.clone(),
                feature_defective: i.label.is_defective(),
                feature_predicted: feature_scores.as_ref().map(|s| s[k] >= 0.5),
                file: file.clone(),
                file_defective: found.map(|f| f.0),
                file_predicted: found.and_then(|f| f.1),
            });
        }
    }

    let mut join = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    join.write_record([
        "project",
        "scope",
        "feature",
        "feature_label",
        "feature_predicted",
        "file",
        "file_label",
        "file_predicted",
    ])?;
    for r in &rows {
        join.write_record([
            r.project.as_str(),
            &r.scope,
            &r.feature,
            flag(Some(r.feature_defective)),
            flag(r.feature_predicted),
            &r.file,
            flag(r.file_defective),
            flag(r.file_predicted),
        ])?;
    }

    let mut counts = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    counts.write_record([
        "project",
        "defective_features",
        "feature_correct",
        "file_correct",
        "both",
        "feature_only",
        "file_only",
        "neither",
    ])?;
    let projects: BTreeSet<&str> = rows.iter().map(|r| r.project.as_str()).collect();
    let per_project = projects.iter().map(|p| {
        let own: Vec<JoinRow> = rows.iter().filter(|r| r.project == *p).cloned().collect();
        (p.to_string(), MappingCounts::from_rows(&own))
    });
    for (name, c) in per_project.chain([("total".to_string(), MappingCounts::from_rows(&rows))]) {
        counts.write_record(
            [name].into_iter().chain(
                [
                    c.defective_features,
                    c.feature_correct,
                    c.file_correct,
                    c.both,
                    c.feature_only,
                    c.file_only,
                    c.neither,
                ]
                .map(|v| v.to_string()),
            ),
        )?;
    }

    let finish = |w: csv::Writer<Vec<u8>>| String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
    result.tables.insert("join.csv".into(), finish(join));
    result.tables.insert("counts.csv".into(), finish(counts));
    result.cells = vec![feature_cell, file_cell];
    Ok(result)
}
