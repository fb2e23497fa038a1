use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{FeatureMetricVector, MessageMatchers};
use crate::context::ReleaseContext;

const WEEK_SECONDS: f64 = 7.0 * 24.0 * 3600.0;

/// The seventeen file process metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FileProcessMetrics {
    pub revi: f64,
    pub refa: f64,
    pub bugf: f64,
    pub auth: f64,
    pub addl: f64,
    pub addm: f64,
    pub adda: f64,
    pub reml: f64,
    pub remm: f64,
    pub rema: f64,
    pub cchn: f64,
    pub cchm: f64,
    pub ccha: f64,
    pub maxc: f64,
    pub avgc: f64,
    pub aage: f64,
    pub wage: f64,
}

impl FileProcessMetrics {
    /// Values in `FILE_MOSER` order.
    pub fn values(&self) -> [f64; 17] {
        [
            self.revi, self.refa, self.bugf, self.auth, self.addl, self.addm, self.adda, self.reml, self.remm,
            self.rema, self.cchn, self.cchm, self.ccha, self.maxc, self.avgc, self.aage, self.wage,
        ]
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

fn avg(total: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

/// Moser-style metrics of `path`. Counts cover the window; ages reach back
/// over the cumulative history and are measured in weeks before the
/// window's last commit.
pub fn file_process_metrics(path: &str, ctx: &ReleaseContext<'_>, matchers: &MessageMatchers) -> FileProcessMetrics {
    let revisions: Vec<usize> = ctx
        .window
        .iter()
        .copied()
        .filter(|&i| ctx.commit(i).touches(path))
        .collect();
    let n = revisions.len();
    let mut added = Vec::with_capacity(n);
    let mut deleted = Vec::with_capacity(n);
    let mut churn = Vec::with_capacity(n);
    let mut changeset = Vec::with_capacity(n);
    let mut authors = BTreeSet::new();
    let mut refa = 0;
    let mut bugf = 0;
    for &i in &revisions {
        let c = ctx.commit(i);
        let ch = c.change(path).expect("revision touches path");
        let (a, d) = (ch.added_count() as f64, ch.deleted_count() as f64);
        added.push(a);
        deleted.push(d);
        churn.push(a + d);
        changeset.push(c.changes.len() as f64);
        authors.insert(c.author.as_str());
        if matchers.refactor.find(&c.message_first_line).is_some() {
            refa += 1;
        }
        if matchers.corrective.find(&c.message_first_line).is_some() {
            bugf += 1;
        }
    }

    let end = ctx.end_timestamp();
    let weeks = |ts: i64| (end - ts) as f64 / WEEK_SECONDS;
    let mut first: Option<i64> = None;
    let mut weighted = 0.0;
    let mut total_added = 0.0;
    for &i in &ctx.cumulative {
        let c = ctx.commit(i);
        let Some(ch) = c.change(path) else { continue };
        first = Some(first.map_or(c.timestamp, |f| f.min(c.timestamp)));
        let a = ch.added_count() as f64;
        weighted += weeks(c.timestamp) * a;
        total_added += a;
    }

    let addl: f64 = added.iter().sum();
    let reml: f64 = deleted.iter().sum();
    FileProcessMetrics {
        revi: n as f64,
        refa: refa as f64,
        bugf: bugf as f64,
        auth: authors.len() as f64,
        addl,
        addm: max_of(added.iter().copied()),
        adda: avg(addl, n),
        reml,
        remm: max_of(deleted.iter().copied()),
        rema: avg(reml, n),
        cchn: addl + reml,
        cchm: max_of(churn.iter().copied()),
        ccha: avg(addl + reml, n),
        maxc: max_of(changeset.iter().copied()),
        avgc: avg(changeset.iter().sum(), n),
        aage: first.map_or(0.0, weeks),
        wage: if total_added > 0.0 { weighted / total_added } else { 0.0 },
    }
}

/// Per-metric maximum over the features of a file, followed by the feature
/// count. Features without a vector are ignored.
pub fn max_aggregate_to_file(
    features_in_file: &BTreeSet<String>,
    vectors: &BTreeMap<String, FeatureMetricVector>,
) -> [f64; 15] {
    let mut out = [0.0; 15];
    for f in features_in_file {
        let Some(v) = vectors.get(f) else { continue };
        for (o, x) in out.iter_mut().zip(v.values()) {
            *o = f64::max(*o, x);
        }
    }
    out[14] = features_in_file.len() as f64;
    out
}
