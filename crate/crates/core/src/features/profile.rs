use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::lexer::mask_text;
use super::{build_block_tree, constituents, extract_refs_with, is_header_macro, Diagnostics, ScanMode};

/// Snapshot-based measures of one feature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureStructure {
    /// Non-blank, non-directive lines in then-branches guarded by the feature.
    pub lofc: u64,
    /// Deepest nesting of the feature's blocks.
    pub ndep: u64,
    /// Number of `#ifdef`/`#ifndef` references.
    pub scat: u64,
    /// Distinct other features named together with it.
    pub tanga: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureProfile {
    pub features: BTreeMap<String, FeatureStructure>,
    pub diagnostics: Diagnostics,
}

impl StructureProfile {
    pub fn get(&self, feature: &str) -> FeatureStructure {
        self.features.get(feature).copied().unwrap_or_default()
    }
}

/// Structure measures for `features` over files taken at one commit.
/// Files with unbalanced conditionals are skipped.
pub fn structure_profile(snapshots: &BTreeMap<String, String>, features: &BTreeSet<String>) -> StructureProfile {
    let mut diag = Diagnostics::default();
    let mut scat: BTreeMap<&str, u64> = BTreeMap::new();
    let mut lofc: BTreeMap<&str, u64> = BTreeMap::new();
    let mut ndep: BTreeMap<&str, u64> = BTreeMap::new();
    let mut co: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let wanted: Vec<(&str, BTreeSet<&str>)> = features
        .iter()
        .map(|f| (f.as_str(), constituents(f).into_iter().collect()))
        .collect();

    for (path, text) in snapshots {
        let tree = match build_block_tree(text) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("skipping {path} for structure metrics: {e}");
                diag.files_scanned += 1;
                diag.unbalanced_files += 1;
                continue;
            }
        };
        let refs = extract_refs_with(path, text, ScanMode::Snapshot, &mut diag);
        for r in &refs {
            if let Some((f, _)) = wanted.iter().find(|(f, _)| *f == r.name) {
                *scat.entry(f).or_default() += 1;
            }
            let names: BTreeSet<&str> = constituents(&r.name)
                .into_iter()
                .filter(|n| !is_header_macro(n))
                .collect();
            for (f, parts) in &wanted {
                if !parts.is_empty() && parts.is_subset(&names) {
                    co.entry(f)
                        .or_default()
                        .extend(names.difference(parts).map(|s| s.to_string()));
                }
            }
        }

        let masked = mask_text(text.lines(), false);
        let raw: Vec<&str> = text.lines().collect();
        let mut guarded: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
        for (block, depth) in tree.walk() {
            let Some(name) = block.feature.as_deref() else {
                continue;
            };
            let Some((f, _)) = wanted.iter().find(|(f, _)| *f == name) else {
                continue;
            };
            let d = ndep.entry(f).or_default();
            *d = (*d).max(depth as u64);
            let lines = guarded.entry(f).or_default();
            for n in block.then_lines() {
                let idx = (n - 1) as usize;
                let is_code = raw.get(idx).is_some_and(|l| !l.trim().is_empty())
                    && masked.get(idx).is_some_and(|m| !m.trim_start().starts_with('#'));
                if is_code {
                    lines.insert(n);
                }
            }
        }
        for (f, lines) in guarded {
            *lofc.entry(f).or_default() += lines.len() as u64;
        }
    }

    let features = wanted
        .iter()
        .map(|(f, _)| {
            (
                f.to_string(),
                FeatureStructure {
                    lofc: lofc.get(f).copied().unwrap_or(0),
                    ndep: ndep.get(f).copied().unwrap_or(0),
                    scat: scat.get(f).copied().unwrap_or(0),
                    tanga: co.get(f).map(|s| s.len() as u64).unwrap_or(0),
                },
            )
        })
        .collect();
    StructureProfile {
        features,
        diagnostics: diag,
    }
}
