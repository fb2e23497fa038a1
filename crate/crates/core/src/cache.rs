//! File cache of mined projects: one JSONL file of commit records per
//! project plus its release layout.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::repo::{CommitRecord, Release};

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache i/o on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed cache entry in {path} line {line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

/// Release layout written next to the commit records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseIndex {
    pub project: String,
    pub tag_filter: String,
    pub releases: Vec<Release>,
}

/// Paths of one project's cache files.
#[derive(Debug, Clone)]
pub struct ProjectCache {
    dir: PathBuf,
    project: String,
}

impl ProjectCache {
    pub fn new(dir: impl Into<PathBuf>, project: impl Into<String>) -> Self {
        Self {
            dir: dir.into(),
            project: project.into(),
        }
    }

    pub fn commits_path(&self) -> PathBuf {
        self.dir.join(format!("{}.jsonl", self.project))
    }

    pub fn releases_path(&self) -> PathBuf {
        self.dir.join(format!("{}.releases.json", self.project))
    }

    pub fn traces_path(&self) -> PathBuf {
        self.dir.join(format!("{}.traces.jsonl", self.project))
    }

    pub fn labels_path(&self) -> PathBuf {
        self.dir.join(format!("{}.labels.json", self.project))
    }

    pub fn is_mined(&self) -> bool {
        self.commits_path().exists() && self.releases_path().exists()
    }

    pub fn write_commits(&self, commits: &[CommitRecord]) -> Result<(), CacheError> {
        write_jsonl(&self.commits_path(), commits)
    }

    pub fn read_commits(&self) -> Result<Vec<CommitRecord>, CacheError> {
        read_jsonl(&self.commits_path())
    }

    pub fn write_releases(&self, index: &ReleaseIndex) -> Result<(), CacheError> {
        write_json(&self.releases_path(), index)
    }

    pub fn read_releases(&self) -> Result<ReleaseIndex, CacheError> {
        read_json(&self.releases_path())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CacheError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|source| CacheError::Json {
            path: path.to_path_buf(),
            line: 0,
            source,
        })?;
        out.write_all(line.as_bytes()).map_err(io_err(path))?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CacheError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|source| CacheError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(items)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CacheError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CacheError::Json {
        path: path.to_path_buf(),
        line: 0,
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CacheError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CacheError::Json {
        path: path.to_path_buf(),
        line: 0,
        source,
    })
}
