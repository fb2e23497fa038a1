//! Mining and tracing of whole projects with the file cache in between.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{read_json, read_jsonl, write_json, write_jsonl, CacheError, ProjectCache, ReleaseIndex};
use crate::context::{ContextError, ProjectHistory};
use crate::labels::{introducers, trace_history, BugTrace, CorrectiveVerdict, KeywordMatcher, LabelError};
use crate::repo::{CommitRecord, Release, RepoError, RepoHandle};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Label(#[from] LabelError),
}

/// Releases matching `tag_glob` and all their commits, oldest first.
pub fn mine(repo: &RepoHandle, tag_glob: &str) -> Result<(Vec<CommitRecord>, Vec<Release>), RepoError> {
    let releases = repo.resolve_releases(tag_glob)?;
    let mut commits = Vec::new();
    for r in &releases {
        commits.extend(repo.walk_commits(r)?);
    }
    Ok((commits, releases))
}

/// Mines into the cache unless it already holds this project. Returns the
/// number of cached commits.
pub fn mine_to_cache(
    repo: &RepoHandle,
    cache: &ProjectCache,
    project: &str,
    tag_glob: &str,
) -> Result<usize, PipelineError> {
    if cache.is_mined() {
        let index = cache.read_releases()?;
        if index.tag_filter == tag_glob {
            return Ok(index.releases.iter().map(|r| r.commits.len()).sum());
        }
    }
    let (commits, releases) = mine(repo, tag_glob)?;
    cache.write_commits(&commits)?;
    cache.write_releases(&ReleaseIndex {
        project: project.to_string(),
        tag_filter: tag_glob.to_string(),
        releases,
    })?;
    Ok(commits.len())
}

pub fn load_history(cache: &ProjectCache, project: &str) -> Result<ProjectHistory, PipelineError> {
    let commits = cache.read_commits()?;
    let index = cache.read_releases()?;
    Ok(ProjectHistory::new(project, commits, index.releases)?)
}

/// Corrective verdicts and SZZ traces of one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub verdict: CorrectiveVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<BugTrace>,
}

#[derive(Debug, Clone, Default)]
pub struct Traces {
    pub verdicts: Vec<CorrectiveVerdict>,
    pub traces: Vec<BugTrace>,
}

impl Traces {
    pub fn introducers(&self) -> BTreeSet<String> {
        introducers(&self.traces)
    }

    pub fn corrective_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_corrective).count()
    }

    fn records(&self) -> Vec<TraceRecord> {
        let mut traces = self.traces.iter();
        self.verdicts
            .iter()
            .map(|v| TraceRecord {
                verdict: v.clone(),
                trace: if v.is_corrective { traces.next().cloned() } else { None },
            })
            .collect()
    }

    fn from_records(records: Vec<TraceRecord>) -> Self {
        let mut out = Traces::default();
        for r in records {
            out.verdicts.push(r.verdict);
            out.traces.extend(r.trace);
        }
        out
    }
}

pub fn trace(repo: &RepoHandle, history: &ProjectHistory, matcher: &KeywordMatcher) -> Result<Traces, LabelError> {
    let (verdicts, traces) = trace_history(repo, &history.commits, matcher)?;
    Ok(Traces { verdicts, traces })
}

/// Summary written next to the cached traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub project: String,
    pub keywords: Vec<String>,
    pub commits: usize,
    pub corrective: usize,
    pub introducers: BTreeSet<String>,
}

/// Traces from the cache, computing and storing them on a miss. A cache
/// built with other keywords counts as a miss.
pub fn trace_cached(
    repo: &RepoHandle,
    cache: &ProjectCache,
    history: &ProjectHistory,
    matcher: &KeywordMatcher,
) -> Result<Traces, PipelineError> {
    let path = cache.traces_path();
    let summary_path = cache.labels_path();
    if path.exists() && summary_path.exists() {
        let summary: LabelSummary = read_json(&summary_path)?;
        let cached = Traces::from_records(read_jsonl(&path)?);
        if summary.keywords == matcher.keywords() && cached.verdicts.len() == history.commits.len() {
            return Ok(cached);
        }
    }
    let traces = trace(repo, history, matcher)?;
    write_jsonl(&path, &traces.records())?;
    write_json(
        &summary_path,
        &LabelSummary {
            project: history.name.clone(),
            keywords: matcher.keywords().to_vec(),
            commits: history.commits.len(),
            corrective: traces.corrective_count(),
            introducers: traces.introducers(),
        },
    )?;
    Ok(traces)
}
