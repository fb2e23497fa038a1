use std::collections::BTreeSet;

use featforge::cache::ProjectCache;
use featforge::labels::{label_features, label_files, ClassLabel, KeywordMatcher};
use featforge::metrics::{feature_vector, ScopeSnapshots, PROC_STRUCT_MET};
use featforge::pipeline::{load_history, mine_to_cache, trace};
use featforge::repo::open_repo;
use featforge::testkit::{build_fixture, fixture_alpha};

fn expected(release: &str, feature: &str) -> [f64; 14] {
    match (release, feature) {
        ("v1.0", "FEAT_A") => [
            2.0,
            2.0,
            2.0,
            200f64.sqrt() - 1.0,
            14.0,
            1.5,
            28.0,
            0.0,
            25.5,
            3.0,
            4.0,
            2.0,
            2.0,
            0.0,
        ],
        ("v1.0", "FEAT_B") => [1.0, 1.0, 1.0, 14.0, 14.0, 1.0, 14.0, 0.0, 13.0, 1.0, 2.0, 1.0, 1.0, 0.0],
        ("v2.0", "FEAT_A") => [2.0, 2.0, 3.0, 2.0, 2.0, 1.0, 1.0, 1.0, 25.5, 3.0, 4.0, 2.0, 2.0, 0.0],
        ("v2.0", "FEAT_B") => [1.0, 1.0, 2.0, 2.0, 2.0, 1.0, 1.0, 1.0, 13.0, 1.0, 2.0, 1.0, 1.0, 0.0],
        other => panic!("no oracle for {other:?}"),
    }
}

/// Mines, labels and measures fixture alpha against hand-derived values.
pub fn end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let fx = build_fixture(&fixture_alpha(), &dir.path().join("alpha")).unwrap();
    let repo = open_repo(&fx.path).unwrap();
    let cache = ProjectCache::new(dir.path().join("cache"), "alpha");
    assert_eq!(mine_to_cache(&repo, &cache, "alpha", "v*").unwrap(), 8);
    let history = load_history(&cache, "alpha").unwrap();
    assert_eq!(history.releases.len(), 2);

    let traces = trace(&repo, &history, &KeywordMatcher::default()).unwrap();
    assert_eq!(traces.corrective_count(), 1);
    let introducers = traces.introducers();
    assert_eq!(introducers, BTreeSet::from([fx.hash("c3").to_string()]));

    let all_features: BTreeSet<&str> = (0..history.commits.len())
        .flat_map(|i| history.diff_refs(i).values().flatten().map(String::as_str))
        .collect();
    assert_eq!(all_features, BTreeSet::from(["FEAT_A", "FEAT_B"]));
    assert!(
        history.diagnostics.header_macros_filtered > 0,
        "CONFIG_H_ must be seen and filtered"
    );

    for (idx, tag) in [(0, "v1.0"), (1, "v2.0")] {
        let ctx = history.release_context(idx).unwrap();
        assert_eq!(ctx.release.tag, tag);
        let file_labels = label_files(&ctx, &introducers);
        let feature_labels = label_features(&ctx, &file_labels).unwrap();
        let want_a = if idx == 0 {
            ClassLabel::Defective
        } else {
            ClassLabel::Clean
        };
        assert_eq!(feature_labels["FEAT_A"], want_a, "{tag}");
        assert_eq!(feature_labels["FEAT_B"], ClassLabel::Clean, "{tag}");
        assert!(!feature_labels.contains_key("CONFIG_H_"));
        if idx == 0 {
            assert_eq!(file_labels["parser.c"], ClassLabel::Defective);
            assert_eq!(file_labels["util.c"], ClassLabel::Clean);
        } else {
            assert!(file_labels.values().all(|l| *l == ClassLabel::Clean));
        }

        let snaps = ScopeSnapshots::load(&ctx, &repo).unwrap();
        for f in ["FEAT_A", "FEAT_B"] {
            let got = feature_vector(f, &ctx, &snaps).unwrap().values();
            let want = expected(tag, f);
            for (k, id) in PROC_STRUCT_MET.iter().enumerate() {
                assert_eq!(got[k], want[k], "{tag} {f} {id}");
            }
        }
    }
}
