use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{mean, shifted_geometric_mean, MetricsError};
use crate::context::ReleaseContext;

/// The eight feature process metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProcessMetrics {
    pub fcomm: f64,
    pub fadev: f64,
    pub fddev: f64,
    pub fexp: f64,
    pub foexp: f64,
    pub fmodd: f64,
    pub faddl: f64,
    pub freml: f64,
}

/// Lines added plus deleted by `dev` to `files` over the window.
pub fn developer_experience(dev: &str, ctx: &ReleaseContext<'_>, files: &BTreeSet<String>) -> u64 {
    ctx.window
        .iter()
        .map(|&i| ctx.commit(i))
        .filter(|c| c.author == dev)
        .flat_map(|c| c.changes.iter())
        .filter(|ch| files.contains(&ch.path))
        .map(|ch| (ch.added_count() + ch.deleted_count()) as u64)
        .sum()
}

pub fn feature_process_metrics(feature: &str, ctx: &ReleaseContext<'_>) -> Result<ProcessMetrics, MetricsError> {
    if !ctx.features.contains(feature) {
        return Err(MetricsError::FeatureNotInRelease(feature.to_string()));
    }
    let history = ctx.history;
    let files = ctx.files_of(feature);
    let touching: Vec<usize> = ctx
        .window
        .iter()
        .copied()
        .filter(|&i| history.commit_references(i, feature))
        .collect();

    let authors: BTreeSet<&str> = touching.iter().map(|&i| ctx.commit(i).author.as_str()).collect();
    let all_authors: BTreeSet<&str> = ctx
        .cumulative
        .iter()
        .copied()
        .filter(|&i| history.commit_references(i, feature))
        .map(|i| ctx.commit(i).author.as_str())
        .collect();

    let experience: Vec<f64> = authors
        .iter()
        .map(|a| developer_experience(a, ctx, &files) as f64)
        .collect();

    let owners = files.iter().filter_map(|path| {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for &i in &touching {
            if history.refs_in(i, path).iter().any(|f| f == feature) {
                *counts.entry(ctx.commit(i).author.as_str()).or_default() += 1;
            }
        }
        // BTreeMap order plus strict comparison keeps the smallest id on ties
        let mut best: Option<(&str, usize)> = None;
        for (a, n) in counts {
            if best.is_none_or(|(_, m)| n > m) {
                best = Some((a, n));
            }
        }
        best.map(|(a, _)| a)
    });
    let foexp = mean(
        owners
            .map(|a| developer_experience(a, ctx, &files) as f64)
            .collect::<Vec<_>>(),
    );

    let fmodd = mean(touching.iter().map(|&i| {
        history
            .diff_refs(i)
            .values()
            .flatten()
            .filter(|f| *f == feature)
            .count() as f64
    }));

    let churn = |path: &str, added: bool| -> f64 {
        ctx.window
            .iter()
            .filter_map(|&i| ctx.commit(i).change(path))
            .map(|ch| if added { ch.added_count() } else { ch.deleted_count() } as f64)
            .sum()
    };

    Ok(ProcessMetrics {
        fcomm: touching.len() as f64,
        fadev: authors.len() as f64,
        fddev: all_authors.len() as f64,
        fexp: shifted_geometric_mean(&experience),
        foexp,
        fmodd,
        faddl: mean(files.iter().map(|p| churn(p, true))),
        freml: mean(files.iter().map(|p| churn(p, false))),
    })
}
