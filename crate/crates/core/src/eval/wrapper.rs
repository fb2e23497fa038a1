use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{evaluate, EvalError};
use crate::dataset::Dataset;
use crate::learn::{train, ClassifierSpec};

fn weighted_f(spec: &ClassifierSpec, train_ds: &Dataset, test: &Dataset) -> Result<f64, EvalError> {
    let model = train(spec, train_ds)?;
    let scores = model.scores(test)?;
    Ok(evaluate(&test.targets(), &scores)?.weighted.f)
}

/// Drop in weighted F on `test` when each attribute is left out.
pub fn wrapper_influence(
    spec: &ClassifierSpec,
    train_ds: &Dataset,
    test: &Dataset,
) -> Result<BTreeMap<String, f64>, EvalError> {
    let full = weighted_f(spec, train_ds, test)?;
    (0..train_ds.width())
        .into_par_iter()
        .map(|c| {
            let without = weighted_f(spec, &train_ds.without_column(c), &test.without_column(c))?;
            Ok((train_ds.attributes()[c].id.clone(), full - without))
        })
        .collect()
}
