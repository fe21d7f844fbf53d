//! Score claim keywords against an evidence sentence and keep those above the
//! thresholds.
//!
//!     cargo run --example fuzzy_selection

use claimpipe::fixtures::{MUSUBI_EVIDENCE, SPAM_KEYWORDS};
use claimpipe::pipeline::{parse_keywords, select_keywords};
use claimpipe::EvidencePiece;

fn main() {
    let keywords = parse_keywords(SPAM_KEYWORDS);
    let piece = EvidencePiece::new(MUSUBI_EVIDENCE);
    let all = select_keywords(&keywords, 0, &piece, -1.0, -1.0);
    let kept = select_keywords(&keywords, 0, &piece, 60.0, 60.0);

    println!(
        "{:<28} {:>8} {:>10}  kept",
        "keyword", "partial", "token_set"
    );
    for s in &all.selected {
        let keep = kept.keywords().contains(&s.keyword);
        println!(
            "{:<28} {:>8.2} {:>10.2}  {}",
            s.keyword,
            s.partial_score,
            s.token_set_score,
            if keep { "yes" } else { "" }
        );
    }
}
