//! Offline demo data: a six-claim set with a matching response script.
//!
//! Script entries are regexes anchored on the final query section of each
//! rendered prompt, so they keep matching if few-shot examples change.

use crate::llm::ScriptEntry;
use crate::pipeline::{ClaimInstance, EvidencePiece, Verdict};

pub const SPAM_CLAIM: &str = "Spam is canned cooked meat by Hormel Foods Corporation is never used to make a popular snack and lunch food in Hawaii.";
pub const MUSUBI_EVIDENCE: &str = "Spam msubi is a popular snack and lunch food in Hawaii composed of a slice of grilled Spam on top of a block of rice, wrapped together with nori in the traditional of Japanese 'omusubi'.";
pub const SPAM_BRAND_EVIDENCE: &str =
    "Spam is a brand of canned cooked pork made by Hormel Foods Corporation.";
pub const SPAM_KEYWORDS: &str =
    "spam, canned cooked meat, Hormel Foods Corporation, used, popular snack, lunch food, Hawaii.";
pub const MUSUBI_SUMMARY: &str = "Spam is popular snack and lunch food in Hawaii.";
pub const SPAM_SUBCLAIMS: &str = "#1 Spam is a canned cooked meat product manufactured by Hormel Foods Corporation. #2 Spam is not used to make a popular snack and lunch food in Hawaii.";

fn escape_line(text: &str) -> String {
    regex::escape(&text.split_whitespace().collect::<Vec<_>>().join(" "))
}

fn strip_period(text: &str) -> &str {
    let t = text.trim();
    t.strip_suffix('.').unwrap_or(t).trim_end()
}

/// Keyword-extraction answer for `claim`.
pub fn keywords_entry(claim: &str, response: &str) -> ScriptEntry {
    ScriptEntry::regex(
        format!(r"\nInput: {}\nOutput:$", escape_line(claim)),
        response,
    )
}

/// Keyword-guided summary of `evidence`, whatever keywords were selected.
pub fn summary_entry(evidence: &str, response: &str) -> ScriptEntry {
    ScriptEntry::regex(
        format!(
            r"\nInput: {}\nKeywords: [^\n]*\nOutput:$",
            escape_line(evidence)
        ),
        response,
    )
}

/// Claim-guided summary of `evidence` (no-keyword ablation).
pub fn claim_guided_entry(evidence: &str, response: &str) -> ScriptEntry {
    ScriptEntry::regex(
        format!(
            r"\nInput: {}\nClaim: [^\n]*\nOutput:$",
            escape_line(evidence)
        ),
        response,
    )
}

pub fn deconstruction_entry(claim: &str, response: &str) -> ScriptEntry {
    ScriptEntry::regex(
        format!(r"no explanation\.\nClaim: {}\nOutput:$", escape_line(claim)),
        response,
    )
}

/// Verification answer for `subclaim`, with or without claim context.
pub fn verification_entry(subclaim: &str, response: &str) -> ScriptEntry {
    ScriptEntry::regex(
        format!(
            r"Is it true that {}\? \(Yes or No\)$",
            escape_line(strip_period(subclaim))
        ),
        response,
    )
}

struct DemoClaim {
    id: &'static str,
    claim: &'static str,
    gold: Verdict,
    hops: u32,
    evidence: &'static [(&'static str, &'static str)],
    keywords: &'static str,
    summaries: &'static [&'static str],
    subclaims: &'static str,
    answers: &'static [(&'static str, &'static str)],
}

const DEMO: &[DemoClaim] = &[
    DemoClaim {
        id: "spam",
        hops: 2,
        claim: SPAM_CLAIM,
        gold: Verdict::False,
        evidence: &[("Spam musubi", MUSUBI_EVIDENCE), ("Spam (food)", SPAM_BRAND_EVIDENCE)],
        keywords: SPAM_KEYWORDS,
        summaries: &[MUSUBI_SUMMARY, "Spam is canned cooked pork made by Hormel Foods Corporation."],
        subclaims: SPAM_SUBCLAIMS,
        answers: &[
            ("Spam is a canned cooked meat product manufactured by Hormel Foods Corporation.", "Yes."),
            ("Spam is not used to make a popular snack and lunch food in Hawaii.", "No."),
        ],
    },
    DemoClaim {
        id: "titanic",
        hops: 3,
        claim: "The director of the film Titanic was born in Canada and also directed Avatar.",
        gold: Verdict::True,
        evidence: &[
            ("James Cameron", "James Cameron is a Canadian filmmaker. Born in Kapuskasing, Ontario, he moved to the United States in 1971."),
            ("Titanic (1997 film)", "Titanic is a 1997 American epic romance film directed by James Cameron."),
            ("Avatar (2009 film)", "Avatar is a 2009 epic science fiction film directed by James Cameron."),
        ],
        keywords: "director, film Titanic, born, Canada, directed, Avatar.",
        summaries: &[
            "James Cameron was born in Ontario, Canada.",
            "The film Titanic was directed by James Cameron.",
            "Avatar was directed by James Cameron.",
        ],
        subclaims: "#1 The director of the film Titanic was born in Canada.\n#2 The director of the film Titanic directed Avatar.",
        answers: &[
            ("The director of the film Titanic was born in Canada.", "Yes."),
            ("The director of the film Titanic directed Avatar.", "Yes, Avatar was directed by James Cameron."),
        ],
    },
    DemoClaim {
        id: "ford",
        hops: 2,
        claim: "Gerald Ford was the 38th President of the United States and served in the Navy during World War II.",
        gold: Verdict::True,
        evidence: &[
            ("Gerald Ford", "Gerald Rudolph Ford Jr. was an American politician who served as the 38th president of the United States from 1974 to 1977."),
            ("Gerald Ford", "During World War II, Ford served in the United States Navy Reserve aboard the aircraft carrier USS Monterey."),
        ],
        keywords: "Gerald Ford, 38th President, United States, served, Navy, World War II.",
        summaries: &[
            "Gerald Ford served as the 38th president of the United States.",
            "Ford served in the United States Navy Reserve during World War II.",
        ],
        subclaims: "#1 Gerald Ford was the 38th President of the United States.\n#2 Gerald Ford served in the Navy during World War II.",
        answers: &[
            ("Gerald Ford was the 38th President of the United States.", "Yes."),
            ("Gerald Ford served in the Navy during World War II.", "No. He served in the Navy Reserve."),
        ],
    },
    DemoClaim {
        id: "eiffel",
        hops: 3,
        claim: "The Eiffel Tower is located in Paris, was completed in 1889, and is made of concrete.",
        gold: Verdict::False,
        evidence: &[
            ("Eiffel Tower", "The Eiffel Tower is a wrought-iron lattice tower on the Champ de Mars in Paris, France."),
            ("Eiffel Tower", "Constructed from 1887 to 1889, it was the entrance arch to the 1889 World's Fair."),
        ],
        keywords: "Eiffel Tower, located, Paris, completed, 1889, made of concrete.",
        summaries: &[
            "The Eiffel Tower is a wrought-iron tower in Paris.",
            "The tower was constructed from 1887 to 1889.",
        ],
        subclaims: "#1 The Eiffel Tower is located in Paris.\n#2 The Eiffel Tower was completed in 1889.\n#3 The Eiffel Tower is made of concrete.",
        answers: &[
            ("The Eiffel Tower is located in Paris.", "Yes."),
            ("The Eiffel Tower was completed in 1889.", "Yes."),
            ("The Eiffel Tower is made of concrete.", "No, it is made of wrought iron."),
        ],
    },
    DemoClaim {
        id: "curie",
        hops: 2,
        claim: "Marie Curie won the Nobel Prize in Physics and was born in Warsaw.",
        gold: Verdict::True,
        evidence: &[
            ("Marie Curie", "Marie Curie was a Polish and naturalised-French physicist and chemist born in Warsaw."),
            ("Marie Curie", "She shared the 1903 Nobel Prize in Physics with Pierre Curie and Henri Becquerel."),
        ],
        keywords: "Marie Curie, won, Nobel Prize in Physics, born, Warsaw.",
        summaries: &[
            "Marie Curie was born in Warsaw.",
            "She shared the 1903 Nobel Prize in Physics.",
        ],
        subclaims: "#1 Marie Curie won the Nobel Prize in Physics.\n#2 Marie Curie was born in Warsaw.",
        answers: &[
            ("Marie Curie won the Nobel Prize in Physics.", "The evidence is unclear."),
            ("Marie Curie was born in Warsaw.", "Yes."),
        ],
    },
    DemoClaim {
        id: "everest",
        hops: 2,
        claim: "Mount Everest is the tallest mountain in Africa.",
        gold: Verdict::False,
        evidence: &[(
            "Mount Everest",
            "Mount Everest is Earth's highest mountain above sea level, located in the Mahalangur Himal sub-range of the Himalayas in Asia.",
        )],
        keywords: "Mount Everest, tallest mountain, Africa.",
        summaries: &["Mount Everest is the highest mountain, located in Asia."],
        subclaims: "Mount Everest is the tallest mountain in Africa.",
        answers: &[("Mount Everest is the tallest mountain in Africa.", "No, it is in Asia.")],
    },
];

/// Six claims with gold labels.
///
/// Scripted outcome: spam False, titanic True, ford False (a wrong "No"),
/// eiffel False, curie True (one abstention), everest False (undeconstructed).
pub fn six_claims() -> Vec<ClaimInstance> {
    DEMO.iter()
        .map(|d| ClaimInstance {
            id: d.id.to_owned(),
            claim: d.claim.to_owned(),
            evidence: d
                .evidence
                .iter()
                .map(|(title, text)| EvidencePiece::titled(*title, *text))
                .collect(),
            gold_label: Some(d.gold),
        })
        .collect()
}

/// A claim with no script entries; every stage misses.
pub fn unscripted_claim() -> ClaimInstance {
    ClaimInstance {
        id: "unscripted".into(),
        claim: "The Great Wall of China is visible from the Moon.".into(),
        evidence: vec![EvidencePiece::titled(
            "Great Wall of China",
            "The Great Wall of China is a series of fortifications built across northern China.",
        )],
        gold_label: Some(Verdict::False),
    }
}

/// Script for [`six_claims`]: per-claim entries, then catch-all summaries and
/// a catch-all "Yes." for verification prompts not covered above (used by the
/// ablation variants).
pub fn six_claim_script() -> Vec<ScriptEntry> {
    let mut entries = Vec::new();
    for d in DEMO {
        push_claim_entries(
            &mut entries,
            d,
            d.evidence
                .iter()
                .map(|(_, t)| t.to_string())
                .zip(d.summaries.iter().map(|s| s.to_string())),
        );
    }
    push_catch_alls(&mut entries);
    entries
}

fn push_claim_entries(
    entries: &mut Vec<ScriptEntry>,
    d: &DemoClaim,
    pieces: impl Iterator<Item = (String, String)>,
) {
    entries.push(keywords_entry(d.claim, d.keywords));
    for (text, summary) in pieces {
        entries.push(summary_entry(&text, &summary));
    }
    entries.push(deconstruction_entry(d.claim, d.subclaims));
    for (sub, answer) in d.answers {
        entries.push(verification_entry(sub, answer));
    }
}

fn push_catch_alls(entries: &mut Vec<ScriptEntry>) {
    entries.push(ScriptEntry::regex(
        r"based on the given claim\.(?s:.*)\nClaim: [^\n]*\nOutput:$",
        "Summary guided by the claim.",
    ));
    entries.push(ScriptEntry::regex(
        r"^Given golden evidence:\n(?s:.*)\(Yes or No\)$",
        "Yes.",
    ));
}

/// Evidence and summaries with same-page sentences joined, as the HOVER
/// loader groups them.
fn grouped(d: &DemoClaim) -> Vec<(String, String, String)> {
    let mut out: Vec<(String, String, String)> = Vec::new();
    for ((title, text), summary) in d.evidence.iter().zip(d.summaries) {
        match out.iter_mut().find(|(t, _, _)| t == title) {
            Some((_, t, s)) => {
                t.push(' ');
                t.push_str(text);
                s.push(' ');
                s.push_str(summary);
            }
            None => out.push((title.to_string(), text.to_string(), summary.to_string())),
        }
    }
    out
}

/// The six claims as a HOVER-format JSON array (`num_hops` 2 or 3, evidence
/// as `[title, sentence_id, text]`).
pub fn hover_sample_json() -> String {
    let records: Vec<_> = DEMO
        .iter()
        .map(|d| {
            let evidence: Vec<_> = d
                .evidence
                .iter()
                .enumerate()
                .map(|(i, (title, text))| serde_json::json!([title, i, text]))
                .collect();
            serde_json::json!({
                "uid": d.id,
                "claim": d.claim,
                "label": if d.gold == Verdict::True { "SUPPORTED" } else { "NOT_SUPPORTED" },
                "num_hops": d.hops,
                "evidence": evidence,
            })
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("json") + "\n"
}

/// Script for the 2-hop claims of [`hover_sample_json`] after loading.
pub fn hover2_script() -> Vec<ScriptEntry> {
    let mut entries = Vec::new();
    for d in DEMO.iter().filter(|d| d.hops == 2) {
        let pieces = grouped(d)
            .into_iter()
            .map(|(_, text, summary)| (text, summary));
        push_claim_entries(&mut entries, d, pieces);
    }
    push_catch_alls(&mut entries);
    entries
}

/// A small FEVEROUS-format file: two sentence-evidence claims and one with
/// only table cells.
pub fn feverous_sample_jsonl() -> String {
    let lines = [
        serde_json::json!({"id": "", "claim": "", "label": "", "evidence": []}),
        serde_json::json!({
            "id": 101,
            "claim": DEMO[5].claim,
            "label": "REFUTES",
            "evidence": [{"id": "Mount_Everest_sentence_0", "text": DEMO[5].evidence[0].1}],
        }),
        serde_json::json!({
            "id": 102,
            "claim": DEMO[1].claim,
            "label": "SUPPORTS",
            "evidence": [
                {"id": "James_Cameron_sentence_0", "text": DEMO[1].evidence[0].1},
                {"id": "Titanic_(1997_film)_sentence_0", "text": DEMO[1].evidence[1].1},
                {"id": "Avatar_(2009_film)_sentence_0", "text": DEMO[1].evidence[2].1},
                {"id": "Avatar_(2009_film)_cell_0_2_1", "text": "James Cameron"},
            ],
        }),
        serde_json::json!({
            "id": 103,
            "claim": "Avatar grossed more than Titanic.",
            "label": "SUPPORTS",
            "evidence": [{"id": "List_of_highest-grossing_films_cell_0_1_2", "text": "$2.92 billion"}],
        }),
    ];
    lines.iter().map(|l| l.to_string() + "\n").collect()
}

/// Serializes entries as a script file.
pub fn script_jsonl(entries: &[ScriptEntry]) -> String {
    entries
        .iter()
        .map(|e| serde_json::to_string(e).expect("json") + "\n")
        .collect()
}

/// [`six_claims`] in the generic JSON-lines format.
pub fn six_claims_jsonl() -> String {
    let mut buf = Vec::new();
    crate::data::write_generic(&six_claims(), &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8")
}

/// Every checked-in fixture file under `fixtures/`, by name.
pub fn fixture_files() -> Vec<(&'static str, String)> {
    vec![
        ("six_claims.jsonl", six_claims_jsonl()),
        ("six_claims.script.jsonl", script_jsonl(&six_claim_script())),
        ("hover_sample.json", hover_sample_json()),
        ("hover2.script.jsonl", script_jsonl(&hover2_script())),
        ("feverous_sample.jsonl", feverous_sample_jsonl()),
        (
            "spam_evidence.json",
            serde_json::to_string_pretty(&six_claims()[0].evidence).expect("json") + "\n",
        ),
    ]
}

/// Rendered prompts for the spam example, by golden file name.
pub fn prompt_goldens() -> Vec<(&'static str, String)> {
    use crate::prompts::{evidence_block, PromptSet};
    let set = PromptSet::default();
    let keywords = ["spam", "used", "popular snack", "lunch food", "Hawaii"];
    let block = evidence_block([MUSUBI_SUMMARY], [MUSUBI_EVIDENCE]);
    let subclaim = "Spam is not used to make a popular snack and lunch food in Hawaii.";
    let sv = |ctx| {
        set.render_subclaim_verification(&block, subclaim, SPAM_CLAIM, ctx)
            .expect("renders")
    };
    vec![
        (
            "keyword_extraction.txt",
            set.render_keyword_extraction(SPAM_CLAIM).expect("renders"),
        ),
        (
            "evidence_summarization.txt",
            set.render_evidence_summarization(MUSUBI_EVIDENCE, &keywords)
                .expect("renders"),
        ),
        (
            "claim_guided_summarization.txt",
            set.render_claim_guided_summarization(MUSUBI_EVIDENCE, SPAM_CLAIM)
                .expect("renders"),
        ),
        (
            "claim_deconstruction.txt",
            set.render_claim_deconstruction(SPAM_CLAIM)
                .expect("renders"),
        ),
        ("subclaim_verification.txt", sv(false)),
        ("subclaim_verification_claim_context.txt", sv(true)),
    ]
}
