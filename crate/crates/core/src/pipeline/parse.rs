//! Parsers for model completions.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

use super::{Subclaim, Verdict};

/// Splits a keyword-extraction completion on commas.
///
/// Items are trimmed, one trailing period is removed from the final item,
/// empty items are dropped and duplicates (compared case-insensitively) keep
/// their first occurrence. Returns an empty list when nothing usable remains.
pub fn parse_keywords(completion: &str) -> Vec<String> {
    let mut items: Vec<&str> = completion.split(',').map(str::trim).collect();
    if let Some(last) = items.last_mut() {
        *last = last.strip_suffix('.').unwrap_or(last).trim_end();
    }
    let mut seen = HashSet::new();
    items
        .into_iter()
        .filter(|k| !k.is_empty())
        .filter(|k| seen.insert(k.to_lowercase()))
        .map(str::to_owned)
        .collect()
}

fn marker_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#\s*(\d+)").unwrap())
}

/// A `#k` marker counts when it starts a line or follows sentence-ending
/// punctuation, so "ranked #1 in" inside a statement is left alone.
fn is_marker_position(text: &str, start: usize) -> bool {
    let before = text[..start].trim_end_matches([' ', '\t']);
    match before.chars().last() {
        None | Some('\n') | Some('\r') => true,
        Some(c) => matches!(c, '.' | '!' | '?' | ':' | ';' | '"' | '\''),
    }
}

/// Parses a claim-deconstruction completion into subclaims ordered by their
/// `#k` markers. Without markers the whole completion is one subclaim.
/// Returns `None` for a completion with no text.
pub fn parse_subclaims(completion: &str) -> Option<Vec<Subclaim>> {
    // models sometimes echo the example's literal "\n"
    let text = completion.replace("\\n", "\n");
    let markers: Vec<(usize, usize, u64)> = marker_regex()
        .captures_iter(&text)
        .filter_map(|c| {
            let whole = c.get(0).unwrap();
            if !is_marker_position(&text, whole.start()) {
                return None;
            }
            let n = c[1].parse().ok()?;
            Some((whole.start(), whole.end(), n))
        })
        .collect();

    let clean = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut numbered: Vec<(u64, String)> = markers
        .iter()
        .enumerate()
        .map(|(i, &(_, end, n))| {
            let stop = markers.get(i + 1).map_or(text.len(), |m| m.0);
            (n, clean(&text[end..stop]))
        })
        .filter(|(_, t)| !t.is_empty())
        .collect();

    if numbered.is_empty() {
        let whole = clean(&text);
        if whole.is_empty() {
            return None;
        }
        numbered.push((1, whole));
    }
    numbered.sort_by_key(|(n, _)| *n);
    Some(
        numbered
            .into_iter()
            .enumerate()
            .map(|(i, (_, text))| Subclaim { index: i + 1, text })
            .collect(),
    )
}

/// First standalone `yes`/`no` token decides; `None` means abstention.
pub fn parse_answer(completion: &str) -> Option<Verdict> {
    completion
        .split(|c: char| !c.is_alphanumeric())
        .find_map(|tok| {
            if tok.eq_ignore_ascii_case("yes") {
                Some(Verdict::True)
            } else if tok.eq_ignore_ascii_case("no") {
                Some(Verdict::False)
            } else {
                None
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &[Subclaim]) -> Vec<&str> {
        s.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn keywords_from_example_output() {
        let k = parse_keywords(
            "spam, canned cooked meat, Hormel Foods Corporation, used, popular snack, lunch food, Hawaii.",
        );
        assert_eq!(
            k,
            vec![
                "spam",
                "canned cooked meat",
                "Hormel Foods Corporation",
                "used",
                "popular snack",
                "lunch food",
                "Hawaii"
            ]
        );
    }

    #[test]
    fn keywords_dedup_and_empty() {
        assert_eq!(parse_keywords("a, A, a "), vec!["a"]);
        assert!(parse_keywords("").is_empty());
        assert!(parse_keywords(" , .").is_empty());
        assert_eq!(parse_keywords("x; y, z.."), vec!["x; y", "z."]);
        assert_eq!(parse_keywords("U.S. Navy, born"), vec!["U.S. Navy", "born"]);
    }

    #[test]
    fn subclaims_inline_markers() {
        let s = parse_subclaims(
            "#1 Spam is a canned cooked meat product manufactured by Hormel Foods Corporation. #2 Spam is not used to make a popular snack and lunch food in Hawaii.",
        )
        .unwrap();
        assert_eq!(
            texts(&s),
            vec![
                "Spam is a canned cooked meat product manufactured by Hormel Foods Corporation.",
                "Spam is not used to make a popular snack and lunch food in Hawaii."
            ]
        );
        assert_eq!(s[1].index, 2);
    }

    #[test]
    fn subclaims_fallback_and_order() {
        let s = parse_subclaims("Just one statement.").unwrap();
        assert_eq!(texts(&s), vec!["Just one statement."]);
        let s = parse_subclaims("#2 Second.\n#1 First.").unwrap();
        assert_eq!(texts(&s), vec!["First.", "Second."]);
        assert_eq!(s[0].index, 1);
        assert!(parse_subclaims("  \n ").is_none());
    }

    #[test]
    fn subclaims_literal_newlines_and_embedded_hash() {
        let s = parse_subclaims(r"\n #1 A team ranked #1 in 2001. \n # 2 B won.").unwrap();
        assert_eq!(texts(&s), vec!["A team ranked #1 in 2001.", "B won."]);
        let s = parse_subclaims("Output:\n#1 X.\n#2\n#3 Y.").unwrap();
        assert_eq!(texts(&s), vec!["X.", "Y."]);
    }

    #[test]
    fn answers() {
        assert_eq!(
            parse_answer("Yes, the evidence confirms this."),
            Some(Verdict::True)
        );
        assert_eq!(parse_answer("No."), Some(Verdict::False));
        assert_eq!(parse_answer("  NO, because yes"), Some(Verdict::False));
        assert_eq!(parse_answer("The evidence is unclear."), None);
        assert_eq!(parse_answer("Nothing noted; yesterday"), None);
        assert_eq!(parse_answer(""), None);
    }
}
