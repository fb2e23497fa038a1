use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use featforge::cache::ProjectCache;
use featforge::context::ProjectHistory;
use featforge::dataset::ProjectInput;
use featforge::labels::KeywordMatcher;
use featforge::metrics::MessageMatchers;
use featforge::pipeline::{load_history, mine_to_cache, trace_cached, Traces};
use featforge::repo::{open_repo, RepoHandle};
use log::info;

use crate::config::{ProjectConfig, ProjectEntry};

pub struct Loaded {
    pub name: String,
    pub repo: RepoHandle,
    pub history: ProjectHistory,
    pub traces: Traces,
    pub introducers: BTreeSet<String>,
}

impl Loaded {
    pub fn input(&self) -> ProjectInput<'_> {
        ProjectInput {
            history: &self.history,
            introducers: &self.introducers,
            snapshots: &self.repo,
        }
    }
}

pub struct Workspace {
    pub config: ProjectConfig,
    pub cache_dir: PathBuf,
}

impl Workspace {
    pub fn matcher(&self) -> KeywordMatcher {
        match &self.config.keywords {
            Some(k) => KeywordMatcher::new(k),
            None => KeywordMatcher::default(),
        }
    }

    pub fn message_matchers(&self) -> MessageMatchers {
        MessageMatchers {
            corrective: self.matcher(),
            ..Default::default()
        }
    }

    fn selected(&self, only: &[String]) -> Result<Vec<&ProjectEntry>> {
        for name in only {
            if !self.config.projects.iter().any(|p| &p.name == name) {
                bail!("no project named `{name}` in the config");
            }
        }
        Ok(self
            .config
            .projects
            .iter()
            .filter(|p| only.is_empty() || only.contains(&p.name))
            .collect())
    }

    pub fn cache(&self, project: &str) -> ProjectCache {
        ProjectCache::new(&self.cache_dir, project)
    }

    /// Mines every selected project into the cache; returns (name, commits).
    pub fn mine(&self, only: &[String]) -> Result<Vec<(String, usize)>> {
        self.selected(only)?
            .into_iter()
            .map(|p| {
                let repo = open_repo(&p.repo)?;
                let n = mine_to_cache(&repo, &self.cache(&p.name), &p.name, &p.tag_glob)
                    .with_context(|| format!("mining {}", p.name))?;
                info!("{}: {n} commits cached", p.name);
                Ok((p.name.clone(), n))
            })
            .collect()
    }

    /// Mined history plus SZZ traces of every selected project.
    pub fn load(&self, only: &[String]) -> Result<Vec<Loaded>> {
        let matcher = self.matcher();
        self.selected(only)?
            .into_iter()
            .map(|p| {
                let repo = open_repo(&p.repo)?;
                let cache = self.cache(&p.name);
                mine_to_cache(&repo, &cache, &p.name, &p.tag_glob).with_context(|| format!("mining {}", p.name))?;
                let history = load_history(&cache, &p.name)?;
                let traces =
                    trace_cached(&repo, &cache, &history, &matcher).with_context(|| format!("tracing {}", p.name))?;
                let introducers = traces.introducers();
                info!(
                    "{}: {} commits, {} releases, {} corrective, {} introducers",
                    p.name,
                    history.commits.len(),
                    history.releases.len(),
                    traces.corrective_count(),
                    introducers.len()
                );
                Ok(Loaded {
                    name: p.name.clone(),
                    repo,
                    history,
                    traces,
                    introducers,
                })
            })
            .collect()
    }
}
