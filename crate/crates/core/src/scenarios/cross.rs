use std::collections::BTreeSet;

use itertools::Itertools;
use rayon::prelude::*;

use super::{
    balance, Cell, ScenarioError, ScenarioOptions, ScenarioResult, FLAG_SINGLE_CLASS_TEST, FLAG_SINGLE_CLASS_TRAINING,
};
use crate::dataset::{format_number, Dataset};
use crate::eval::evaluate;
use crate::learn::{train, LearnError};

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of (training combination, test project) pairs over all
/// combination sizes 1..p-1.
pub fn pair_count(p: usize) -> usize {
    (1..p).map(|k| binomial(p, k) * (p - k)).sum()
}

/// Trains one model per combination of projects and tests it on each
/// project left out of that combination.
pub fn rq5_cross_project(ds: &Dataset, opts: &ScenarioOptions) -> Result<ScenarioResult, ScenarioError> {
    let projects: Vec<String> = ds.projects().into_iter().map(String::from).collect();
    let p = projects.len();
    if p < 2 {
        return Err(ScenarioError::TooFewProjects {
            scenario: "rq5",
            needed: 2,
            found: p,
        });
    }
    let combos: Vec<Vec<usize>> = (1..p).flat_map(|k| (0..p).combinations(k)).collect();
    let per_combo = combos
        .par_iter()
        .map(|combo| {
            let names: BTreeSet<&str> = combo.iter().map(|&i| projects[i].as_str()).collect();
            let train_ds = ds.filter(|i| names.contains(i.project.as_str()));
            let joined = combo.iter().map(|&i| projects[i].as_str()).join("+");
            let mut template = Cell::new(&[
                ("k", combo.len().to_string()),
                ("train", joined),
                ("test", String::new()),
            ]);
            template.attributes = ds.attribute_ids().into_iter().map(String::from).collect();
            template.train_instances = train_ds.len();
            template.train_defective = train_ds.class_counts().0;
            let balanced = balance(&train_ds, opts, &mut template)?;
            let model = match train(&opts.spec(opts.classifier), &balanced) {
                Ok(m) => Some(m),
                Err(LearnError::SingleClassTraining) => {
                    template.flags.push(FLAG_SINGLE_CLASS_TRAINING.into());
                    None
                }
                Err(e) => return Err(e.into()),
            };
            let mut cells = Vec::new();
            let excluded = projects.iter().enumerate().filter(|(t, _)| !combo.contains(t));
            for (_, name) in excluded {
                let test = ds.filter(|i| i.project == *name);
                let mut cell = template.clone();
                cell.key[2].1 = name.clone();
                cell.test_instances = test.len();
                cell.test_defective = test.class_counts().0;
                if let Some(m) = &model {
                    let report = evaluate(&test.targets(), &m.scores(&test)?)?;
                    if report.auc.is_none() {
                        cell.flags.push(FLAG_SINGLE_CLASS_TEST.into());
                    }
                    cell.report = Some(report);
                }
                cells.push(cell);
            }
            Ok(cells)
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    let mut result = ScenarioResult::new("rq5");
    result.cells = per_combo.into_iter().flatten().collect();

    // single-project training: rows train, columns test
    let mut heat = String::from("train");
    for t in &projects {
        heat.push(',');
        heat.push_str(t);
    }
    heat.push('\n');
    for a in &projects {
        heat.push_str(a);
        for t in &projects {
            heat.push(',');
            let auc = result
                .cells
                .iter()
                .find(|c| c.value("k") == Some("1") && c.value("train") == Some(a) && c.value("test") == Some(t))
                .and_then(Cell::auc);
            if let Some(v) = auc {
                heat.push_str(&format_number(v));
            }
        }
        heat.push('\n');
    }
    result.tables.insert("heatmap.csv".into(), heat);
    Ok(result)
}
