use std::sync::Arc;

use super::*;
use crate::fixtures::{self, MUSUBI_EVIDENCE, MUSUBI_SUMMARY, SPAM_CLAIM};
use crate::llm::{Script, ScriptEntry};

fn scripted(entries: Vec<ScriptEntry>) -> StageModel {
    StageModel::new(Arc::new(Script::from_entries(entries).unwrap()), "scripted")
}

fn demo_model() -> StageModel {
    scripted(fixtures::six_claim_script())
}

fn result(verdict: Verdict) -> SubclaimResult {
    SubclaimResult {
        subclaim: Subclaim {
            index: 1,
            text: "s".into(),
        },
        raw_answer: String::new(),
        verdict,
        abstained: false,
    }
}

fn spam_instance() -> ClaimInstance {
    fixtures::six_claims()
        .into_iter()
        .find(|c| c.id == "spam")
        .unwrap()
}

#[test]
fn extract_keywords_from_script() {
    let k = extract_keywords(&PromptSet::default(), SPAM_CLAIM, &demo_model()).unwrap();
    assert_eq!(k.len(), 7);
    assert_eq!(k.last().unwrap(), "Hawaii");
}

#[test]
fn extract_keywords_empty_completion_errors() {
    let model = scripted(vec![ScriptEntry::regex("Output:$", "")]);
    let err = extract_keywords(&PromptSet::default(), "c", &model).unwrap_err();
    assert!(matches!(err.kind, FailureKind::NoKeywords));
}

#[test]
fn selection_examples() {
    let ev = EvidencePiece::new(MUSUBI_EVIDENCE);
    let set = select_keywords(&["Hawaii", "Hormel Foods Corporation"], 0, &ev, 60.0, 60.0);
    assert_eq!(set.keywords(), vec!["Hawaii"]);
    assert_eq!(set.selected[0].partial_score, 100.0);
    let none = select_keywords(&["Hawaii", "spam"], 0, &ev, 100.0, 100.0);
    assert!(none.is_empty());
}

#[test]
fn musubi_selection_keeps_order_and_scores() {
    let keywords = parse_keywords(fixtures::SPAM_KEYWORDS);
    let set = select_keywords(
        &keywords,
        3,
        &EvidencePiece::new(MUSUBI_EVIDENCE),
        60.0,
        60.0,
    );
    assert_eq!(set.evidence_index, 3);
    // "used" matches "osed" in "composed" at 75
    assert_eq!(
        set.keywords(),
        vec!["spam", "used", "popular snack", "lunch food", "Hawaii"]
    );
    for s in &set.selected {
        assert!(s.partial_score > 60.0 || s.token_set_score > 60.0);
    }
}

#[test]
fn threshold_is_strict() {
    // "ad" vs "abcd" has partial 50 and token-set well below
    let ev = EvidencePiece::new("abcd");
    assert!(select_keywords(&["ad"], 0, &ev, 50.0, 100.0).is_empty());
    assert_eq!(select_keywords(&["ad"], 0, &ev, 49.9, 100.0).len(), 1);
}

#[test]
fn punctuation_only_keyword_never_selected() {
    let ev = EvidencePiece::new("anything at all");
    assert!(select_keywords(&["--"], 0, &ev, 0.0, 0.0).is_empty());
}

#[test]
fn abstraction_gate() {
    let prompts = PromptSet::default();
    let model = demo_model();
    let cfg = PipelineConfig::default();
    let ev = EvidencePiece::new(MUSUBI_EVIDENCE);
    for n in 0..2 {
        let keywords = ["spam", "Hawaii"];
        let set = select_keywords(&keywords[..n], 0, &ev, 0.0, 0.0);
        assert_eq!(set.len(), n);
        assert!(abstract_evidence(&prompts, &ev, &set, &model, &cfg)
            .unwrap()
            .is_none());
    }
    let set = select_keywords(
        &["spam", "popular snack", "lunch food", "Hawaii"],
        0,
        &ev,
        60.0,
        60.0,
    );
    let a = abstract_evidence(&prompts, &ev, &set, &model, &cfg)
        .unwrap()
        .unwrap();
    assert_eq!(a.text, MUSUBI_SUMMARY);
    assert_eq!(
        a.keywords,
        vec!["spam", "popular snack", "lunch food", "Hawaii"]
    );
}

#[test]
fn abstraction_error_carries_index() {
    let prompts = PromptSet::default();
    let model = scripted(vec![]);
    let ev = EvidencePiece::new("alpha beta");
    let set = select_keywords(&["alpha", "beta"], 4, &ev, 60.0, 60.0);
    let err =
        abstract_evidence(&prompts, &ev, &set, &model, &PipelineConfig::default()).unwrap_err();
    assert_eq!(err.index, Some(4));
    assert!(matches!(
        err.kind,
        FailureKind::Llm(LlmError::ScriptMiss { .. })
    ));
}

#[test]
fn deconstruction_from_script() {
    let subs = deconstruct_claim(&PromptSet::default(), SPAM_CLAIM, &demo_model()).unwrap();
    assert_eq!(subs.len(), 2);
    assert!(subs[1].text.starts_with("Spam is not used"));
    let empty = scripted(vec![ScriptEntry::regex("Output:$", "  ")]);
    let err = deconstruct_claim(&PromptSet::default(), "c", &empty).unwrap_err();
    assert!(matches!(err.kind, FailureKind::EmptyCompletion));
}

#[test]
fn verify_subclaim_answers() {
    let prompts = PromptSet::default();
    let cfg = PipelineConfig::default();
    let raw = [EvidencePiece::new("e")];
    for (answer, verdict, abstained) in [
        ("Yes, the evidence confirms this.", Verdict::True, false),
        ("No.", Verdict::False, false),
        ("The evidence is unclear.", Verdict::True, true),
    ] {
        let model = scripted(vec![ScriptEntry::regex(r"\(Yes or No\)$", answer)]);
        let sub = Subclaim {
            index: 2,
            text: "x".into(),
        };
        let r = verify_subclaim(&prompts, &sub, &[], &raw, "c", &cfg, &model).unwrap();
        assert_eq!((r.verdict, r.abstained), (verdict, abstained), "{answer}");
        assert_eq!(r.raw_answer, answer);
    }
}

#[test]
fn verify_subclaim_requires_evidence() {
    let sub = Subclaim {
        index: 1,
        text: "x".into(),
    };
    let err = verify_subclaim(
        &PromptSet::default(),
        &sub,
        &[],
        &[],
        "c",
        &PipelineConfig::default(),
        &demo_model(),
    )
    .unwrap_err();
    assert!(matches!(err.kind, FailureKind::NoEvidence));
}

#[test]
fn aggregate_examples() {
    use Verdict::*;
    let run = |vs: &[Verdict]| aggregate(&vs.iter().copied().map(result).collect::<Vec<_>>());
    assert_eq!(run(&[True, True, True]).unwrap(), True);
    assert_eq!(run(&[True, False, True]).unwrap(), False);
    assert_eq!(run(&[False]).unwrap(), False);
    assert!(matches!(run(&[]), Err(FailureKind::EmptyResults)));
}

#[test]
fn spam_claim_end_to_end() {
    let pipeline = Pipeline::single_model(PipelineConfig::default(), demo_model());
    let report = pipeline.verify_claim(&spam_instance()).unwrap();
    assert_eq!(report.final_verdict, Verdict::False);
    assert_eq!(report.keywords.len(), 7);
    assert_eq!(report.keyword_sets.len(), 2);
    assert_eq!(report.abstracted[0].text, MUSUBI_SUMMARY);
    assert_eq!(report.subclaims.len(), 2);
    let verdicts: Vec<_> = report.results.iter().map(|r| r.verdict).collect();
    assert_eq!(verdicts, vec![Verdict::True, Verdict::False]);
    let stages: Vec<_> = report.trace.iter().map(|t| (t.stage, t.index)).collect();
    assert_eq!(
        stages,
        vec![
            (Stage::KeywordExtraction, None),
            (Stage::EvidenceSummarization, Some(0)),
            (Stage::EvidenceSummarization, Some(1)),
            (Stage::ClaimDeconstruction, None),
            (Stage::SubclaimVerification, Some(1)),
            (Stage::SubclaimVerification, Some(2)),
        ]
    );
    let sv = &report.trace[4].prompt;
    let a_pos = sv.find(MUSUBI_SUMMARY).unwrap();
    let e_pos = sv.find(MUSUBI_EVIDENCE).unwrap();
    assert!(a_pos < e_pos, "abstracted lines precede raw lines");
}

#[test]
fn short_circuit_stops_at_first_false() {
    let cfg = PipelineConfig {
        short_circuit: true,
        ..PipelineConfig::default()
    };
    let model = scripted(vec![
        ScriptEntry::regex(r"\nInput: [^\n]*\nOutput:$", "a, b"),
        ScriptEntry::regex(r"\nClaim: [^\n]*\nOutput:$", "#1 A.\n#2 B.\n#3 C."),
        ScriptEntry::regex(r"that B\? \(Yes or No\)$", "No."),
        ScriptEntry::regex(r"\(Yes or No\)$", "Yes."),
    ]);
    let inst = ClaimInstance {
        id: "c".into(),
        claim: "A and B and C.".into(),
        evidence: vec![EvidencePiece::new("zzz")],
        gold_label: None,
    };
    let pipeline = Pipeline::single_model(cfg.clone(), model.clone());
    let report = pipeline.verify_claim(&inst).unwrap();
    assert_eq!(report.results.len(), 2);
    assert_eq!(report.final_verdict, Verdict::False);

    let full = Pipeline::single_model(PipelineConfig::default(), model)
        .verify_claim(&inst)
        .unwrap();
    assert_eq!(full.results.len(), 3);
    assert_eq!(full.final_verdict, Verdict::False);
}

#[test]
fn no_claim_deconstruction_verifies_whole_claim() {
    let model = scripted(vec![
        ScriptEntry::regex(r"\nInput: [^\n]*\nOutput:$", "x"),
        ScriptEntry::regex(r"\(Yes or No\)$", "Yes"),
    ]);
    let cfg = PipelineConfig::default().with_ablation(Ablation::NoClaimDeconstruction);
    let inst = ClaimInstance {
        id: "c".into(),
        claim: "Cats are mammals.".into(),
        evidence: vec![EvidencePiece::new("Cats are small domesticated mammals.")],
        gold_label: None,
    };
    let report = Pipeline::single_model(cfg, model)
        .verify_claim(&inst)
        .unwrap();
    assert_eq!(report.final_verdict, Verdict::True);
    assert_eq!(report.results.len(), 1);
    assert_eq!(report.results[0].subclaim.text, "Cats are mammals.");
    assert!(report
        .trace
        .iter()
        .all(|t| t.stage != Stage::ClaimDeconstruction));
}

#[test]
fn no_raw_evidence_without_abstractions_fails() {
    // a single keyword never passes the summarization gate, so A is empty
    let model = scripted(vec![
        ScriptEntry::regex(r"\nInput: [^\n]*\nOutput:$", "solo"),
        ScriptEntry::regex(r"\nClaim: [^\n]*\nOutput:$", "#1 S."),
    ]);
    let cfg = PipelineConfig::default().with_ablation(Ablation::NoRawEvidence);
    let inst = ClaimInstance {
        id: "lonely".into(),
        claim: "Solo claim.".into(),
        evidence: vec![EvidencePiece::new("solo evidence")],
        gold_label: None,
    };
    let err = Pipeline::single_model(cfg, model)
        .verify_claim(&inst)
        .unwrap_err();
    assert_eq!(err.claim_id, "lonely");
    assert_eq!(err.stage, Stage::SubclaimVerification);
    assert!(matches!(err.kind, FailureKind::NoEvidence));
    assert!(!err.is_backend());
}

#[test]
fn invalid_inputs_rejected() {
    let pipeline = Pipeline::single_model(PipelineConfig::default(), demo_model());
    let mut inst = spam_instance();
    inst.evidence.clear();
    let err = pipeline.verify_claim(&inst).unwrap_err();
    assert_eq!(err.stage, Stage::Input);

    let bad_cfg = PipelineConfig {
        t1: 101.0,
        ..PipelineConfig::default()
    };
    let err = pipeline
        .with_config(bad_cfg)
        .verify_claim(&spam_instance())
        .unwrap_err();
    assert!(matches!(err.kind, FailureKind::InvalidInput(_)));
}

#[test]
fn separate_stage_models() {
    // abstraction and verification may use different backends
    let abstraction = scripted(vec![
        ScriptEntry::regex(r"\nInput: [^\n]*\nOutput:$", "alpha, beta"),
        ScriptEntry::regex(r"\nKeywords: [^\n]*\nOutput:$", "abstracted"),
    ]);
    let verification = scripted(vec![
        ScriptEntry::regex(r"\nClaim: [^\n]*\nOutput:$", "#1 Alpha beta."),
        ScriptEntry::regex(r"\(Yes or No\)$", "yes"),
    ]);
    let pipeline = Pipeline::new(
        PipelineConfig::default(),
        Arc::new(PromptSet::default()),
        StageModel::new(abstraction.completer.clone(), "abstraction-model"),
        StageModel::new(verification.completer.clone(), "verification-model"),
    );
    let inst = ClaimInstance {
        id: "c".into(),
        claim: "Alpha beta.".into(),
        evidence: vec![EvidencePiece::new("alpha and beta")],
        gold_label: None,
    };
    let report = pipeline.verify_claim(&inst).unwrap();
    assert_eq!(report.abstracted[0].text, "abstracted");
    assert_eq!(report.models.abstraction_model, "abstraction-model");
    assert_eq!(report.models.verification_model, "verification-model");
}

#[test]
fn report_json_field_order() {
    let pipeline = Pipeline::single_model(PipelineConfig::default(), demo_model());
    let json = pipeline
        .verify_claim(&spam_instance())
        .unwrap()
        .to_json_pretty();
    let keys = [
        "\"schema_version\"",
        "\"claim_id\"",
        "\"keywords\"",
        "\"keyword_sets\"",
        "\"abstracted\"",
        "\"subclaims\"",
        "\"results\"",
        "\"final\"",
        "\"trace\"",
    ];
    let positions: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    let back: VerificationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.final_verdict, Verdict::False);
}

#[test]
fn ablation_names() {
    for a in Ablation::ALL {
        assert_eq!(a.short_name().parse::<Ablation>().unwrap(), a);
    }
    assert_eq!(
        "no-claim-deconstruction".parse::<Ablation>().unwrap(),
        Ablation::NoClaimDeconstruction
    );
    assert!("bogus".parse::<Ablation>().is_err());
}
