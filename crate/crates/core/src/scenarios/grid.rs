use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::{run_cell, Cell, ScenarioError, ScenarioOptions, ScenarioResult};
use crate::dataset::{chronological_split, format_number, Dataset};
use crate::eval::{relieff_rank, select_top, ReliefConfig};
use crate::learn::ClassifierKind;
use crate::metrics::MetricSet;

/// Every classifier on every feature-level dataset, trained on the
/// balanced early scopes and tested on the later ones.
pub fn rq1_grid(
    datasets: &[(MetricSet, Dataset)],
    classifiers: &[ClassifierKind],
    opts: &ScenarioOptions,
) -> Result<ScenarioResult, ScenarioError> {
    let mut result = ScenarioResult::new("rq1");
    let mut splits = Vec::new();
    for (_, ds) in datasets {
        let (train_ds, test, spec) = chronological_split(ds, opts.target_ratio, &opts.ratios)?;
        result.add_split(spec)?;
        splits.push((train_ds, test));
    }
    let jobs: Vec<(ClassifierKind, usize)> = classifiers
        .iter()
        .flat_map(|&k| (0..datasets.len()).map(move |d| (k, d)))
        .collect();
    result.cells = jobs
        .par_iter()
        .map(|&(kind, d)| {
            let mut cell = Cell::new(&[
                ("classifier", kind.name().into()),
                ("metric_set", datasets[d].0.name().into()),
            ]);
            run_cell(kind, &splits[d].0, &splits[d].1, opts, &mut cell)?;
            Ok(cell)
        })
        .collect::<Result<_, ScenarioError>>()?;
    Ok(result)
}

const SUBSETS: [(&str, f64); 3] = [("all", 1.0), ("top75", 0.75), ("top50", 0.5)];

/// The configured classifier on the file-only and the combined file
/// datasets, each with all attributes and with the ReliefF top 75% and 50%
/// ranked on the training split.
pub fn rq2_file_level(
    file17: &Dataset,
    file32: &Dataset,
    opts: &ScenarioOptions,
) -> Result<ScenarioResult, ScenarioError> {
    let mut result = ScenarioResult::new("rq2");
    let mut ranking_csv = String::from("metrics,rank,attribute,weight\n");
    let mut jobs = Vec::new();
    for (label, ds) in [("file17", file17), ("file32", file32)] {
        let (train_ds, test, spec) = chronological_split(ds, opts.target_ratio, &opts.ratios)?;
        result.add_split(spec)?;
        let relief = ReliefConfig {
            seed: opts.seed,
            ..opts.relief
        };
        let ranking = relieff_rank(&train_ds, &relief)?;
        for (rank, r) in ranking.iter().enumerate() {
            let _ = writeln!(ranking_csv, "{label},{},{},{}", rank + 1, r.id, format_number(r.weight));
        }
        for (subset, fraction) in SUBSETS {
            let columns = if fraction < 1.0 {
                select_top(&ranking, fraction)
            } else {
                (0..train_ds.width()).collect()
            };
            jobs.push((
                label,
                subset,
                train_ds.select_columns(&columns),
                test.select_columns(&columns),
            ));
        }
    }
    result.cells = jobs
        .par_iter()
        .map(|(label, subset, train_ds, test)| {
            let mut cell = Cell::new(&[("metrics", label.to_string()), ("subset", subset.to_string())]);
            run_cell(opts.classifier, train_ds, test, opts, &mut cell)?;
            Ok(cell)
        })
        .collect::<Result<_, ScenarioError>>()?;
    result.tables = BTreeMap::from([("ranking.csv".to_string(), ranking_csv)]);
    Ok(result)
}
