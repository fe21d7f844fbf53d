//! Dataset loaders against the checked-in samples, plus an opt-in check of
//! the real HOVER validation file.

use std::path::{Path, PathBuf};

use claimpipe::data::{self, DatasetKind, HOVER_VALIDATION_SIZES};
use claimpipe::{fixtures, Verdict};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

#[test]
fn generic_sample_matches_fixture_claims() {
    let loaded = data::load(DatasetKind::Generic, &fixture("six_claims.jsonl"), None).unwrap();
    assert_eq!(loaded, fixtures::six_claims());
}

#[test]
fn hover_sample_filters_by_hops() {
    let path = fixture("hover_sample.json");
    let all = data::load_hover(&path, None).unwrap();
    assert_eq!(all.len(), 6);
    let two: Vec<_> = data::load_hover(&path, Some(2))
        .unwrap()
        .into_iter()
        .map(|c| c.id)
        .collect();
    assert_eq!(two, ["spam", "ford", "curie", "everest"]);
    let ford = all.iter().find(|c| c.id == "ford").unwrap();
    assert_eq!(ford.evidence.len(), 1, "same-page sentences are grouped");
    assert_eq!(ford.gold_label, Some(Verdict::True));
}

#[test]
fn feverous_sample_skips_table_only_claims() {
    let (claims, diag) =
        data::load_feverous_with_diagnostics(&fixture("feverous_sample.jsonl")).unwrap();
    assert_eq!(claims.len(), 2);
    assert_eq!(diag.rejected_structured, 1);
    assert_eq!(diag.dropped_elements, 1);
    assert_eq!(claims[1].evidence.len(), 3);
    assert_eq!(
        claims[1].evidence[0].title.as_deref(),
        Some("James Cameron")
    );
}

/// Set `CLAIMPIPE_HOVER_DEV` to the HOVER validation JSON to run.
#[test]
#[ignore]
fn real_hover_subset_sizes() {
    let path = std::env::var("CLAIMPIPE_HOVER_DEV").expect("CLAIMPIPE_HOVER_DEV not set");
    for (hops, size) in HOVER_VALIDATION_SIZES {
        let n = data::load_hover(Path::new(&path), Some(hops))
            .unwrap()
            .len();
        assert_eq!(n, size, "{hops}-hop subset");
    }
}
