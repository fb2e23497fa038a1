use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError};

/// Scope assignment of one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectSplit {
    pub project: String,
    pub train_scopes: Vec<usize>,
    pub test_scopes: Vec<usize>,
    /// Requested share of scopes for training, in percent.
    pub target_ratio: f64,
    /// Share actually achieved, in percent of scopes.
    pub achieved_ratio: f64,
    pub train_instances: usize,
    pub test_instances: usize,
}

impl ProjectSplit {
    pub fn is_sound(&self) -> bool {
        match (self.train_scopes.iter().max(), self.test_scopes.iter().min()) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub projects: Vec<ProjectSplit>,
}

impl SplitSpec {
    pub fn is_sound(&self) -> bool {
        self.projects.iter().all(ProjectSplit::is_sound)
    }
}

/// Number of training scopes for `scopes` scopes and a target training
/// share in percent.
pub fn split_rounding(scopes: usize, target_ratio: f64) -> usize {
    let k = (target_ratio / 100.0 * scopes as f64).round() as usize;
    k.clamp(1, scopes.saturating_sub(1).max(1))
}

/// Earliest scopes of every project go to training. `ratios` may override
/// the target per project.
pub fn chronological_split(
    ds: &Dataset,
    target_ratio: f64,
    ratios: &BTreeMap<String, f64>,
) -> Result<(Dataset, Dataset, SplitSpec), DatasetError> {
    let mut scopes: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for i in ds.instances() {
        scopes.entry(i.project.as_str()).or_default().insert(i.scope_index);
    }
    let mut cut: BTreeMap<&str, usize> = BTreeMap::new();
    let mut spec = SplitSpec::default();
    for (project, set) in &scopes {
        if set.len() < 2 {
            return Err(DatasetError::TooFewReleases {
                project: project.to_string(),
                releases: set.len(),
            });
        }
        let target = ratios.get(*project).copied().unwrap_or(target_ratio);
        let ordered: Vec<usize> = set.iter().copied().collect();
        let k = split_rounding(ordered.len(), target);
        cut.insert(project, ordered[k]);
        let (train, test) = ordered.split_at(k);
        let count = |s: &[usize]| {
            ds.instances()
                .iter()
                .filter(|i| i.project == *project && s.contains(&i.scope_index))
                .count()
        };
        spec.projects.push(ProjectSplit {
            project: project.to_string(),
            train_scopes: train.to_vec(),
            test_scopes: test.to_vec(),
            target_ratio: target,
            achieved_ratio: 100.0 * k as f64 / ordered.len() as f64,
            train_instances: count(train),
            test_instances: count(test),
        });
    }
    let is_train = |i: &super::Instance| i.scope_index < cut[i.project.as_str()];
    let train = ds.filter(is_train);
    let test = ds.filter(|i| !is_train(i));
    Ok((train, test, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::project_dataset;

    #[test]
    fn rounding() {
        assert_eq!(split_rounding(10, 70.0), 7);
        assert_eq!(split_rounding(2, 80.0), 1);
        assert_eq!(split_rounding(3, 99.0), 2);
        assert_eq!(split_rounding(5, 1.0), 1);
    }

    #[test]
    fn ten_releases_seventy_thirty() {
        let ds = project_dataset("p", &["a", "b"], 10, 4, 1);
        let (train, test, spec) = chronological_split(&ds, 70.0, &BTreeMap::new()).unwrap();
        assert_eq!(spec.projects[0].train_scopes, (0..7).collect::<Vec<_>>());
        assert_eq!(spec.projects[0].test_scopes, vec![7, 8, 9]);
        assert_eq!(train.len(), 28);
        assert_eq!(test.len(), 12);
        assert!(spec.is_sound());
    }

    #[test]
    fn two_releases_reports_fifty_fifty() {
        let ds = project_dataset("p", &["a"], 2, 3, 1);
        let (_, _, spec) = chronological_split(&ds, 80.0, &BTreeMap::new()).unwrap();
        assert_eq!(spec.projects[0].achieved_ratio, 50.0);
    }

    #[test]
    fn single_release_is_an_error() {
        let ds = project_dataset("p", &["a"], 1, 3, 1);
        assert!(matches!(
            chronological_split(&ds, 80.0, &BTreeMap::new()),
            Err(DatasetError::TooFewReleases { releases: 1, .. })
        ));
    }

    #[test]
    fn per_project_ratio_override() {
        let a = project_dataset("a", &["x"], 4, 2, 1);
        let b = project_dataset("b", &["x"], 4, 2, 2);
        let ds = a.concat(&b).unwrap();
        let ratios = BTreeMap::from([("b".to_string(), 50.0)]);
        let (_, _, spec) = chronological_split(&ds, 75.0, &ratios).unwrap();
        assert_eq!(spec.projects[0].train_scopes.len(), 3);
        assert_eq!(spec.projects[1].train_scopes.len(), 2);
    }
}
