use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    True,
    False,
}

impl Verdict {
    /// Verdict recorded for an answer with neither "yes" nor "no".
    pub const ABSTENTION_DEFAULT: Verdict = Verdict::True;

    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn as_bool(self) -> bool {
        self == Verdict::True
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "True",
            Verdict::False => "False",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidencePiece {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

impl EvidencePiece {
    pub fn new(text: impl Into<String>) -> Self {
        EvidencePiece {
            title: None,
            text: text.into(),
        }
    }

    pub fn titled(title: impl Into<String>, text: impl Into<String>) -> Self {
        EvidencePiece {
            title: Some(title.into()),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimInstance {
    pub id: String,
    pub claim: String,
    pub evidence: Vec<EvidencePiece>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Verdict>,
}

impl ClaimInstance {
    pub fn validate(&self) -> Result<(), String> {
        if self.claim.trim().is_empty() {
            return Err("claim text is empty".into());
        }
        if self.evidence.is_empty() {
            return Err("evidence set is empty".into());
        }
        if let Some(i) = self.evidence.iter().position(|e| e.text.trim().is_empty()) {
            return Err(format!("evidence piece {i} has no text"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredKeyword {
    pub keyword: String,
    pub partial_score: f64,
    pub token_set_score: f64,
}

/// Keywords kept for one evidence piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub evidence_index: usize,
    pub selected: Vec<ScoredKeyword>,
}

impl KeywordSet {
    pub fn keywords(&self) -> Vec<String> {
        self.selected.iter().map(|s| s.keyword.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractedEvidence {
    pub source_index: usize,
    pub text: String,
    /// Keywords that guided the summary; empty for claim-guided summaries.
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subclaim {
    /// 1-based position.
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubclaimResult {
    pub subclaim: Subclaim,
    pub raw_answer: String,
    pub verdict: Verdict,
    pub abstained: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    None,
    /// Verify the original claim as the only subclaim.
    NoClaimDeconstruction,
    /// Skip keyword extraction, selection and summarization.
    NoEvidenceAbstraction,
    /// Summarize every piece guided by the whole claim.
    NoKeywordGuidance,
    /// Use every extracted keyword for every piece.
    NoKeywordSelection,
    /// Verify against abstracted evidence only.
    NoRawEvidence,
}

impl Ablation {
    pub const ALL: [Ablation; 6] = [
        Ablation::None,
        Ablation::NoClaimDeconstruction,
        Ablation::NoEvidenceAbstraction,
        Ablation::NoKeywordGuidance,
        Ablation::NoKeywordSelection,
        Ablation::NoRawEvidence,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::NoClaimDeconstruction => "no-cd",
            Ablation::NoEvidenceAbstraction => "no-ea",
            Ablation::NoKeywordGuidance => "no-keyword",
            Ablation::NoKeywordSelection => "no-selection",
            Ablation::NoRawEvidence => "no-raw",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        Ablation::ALL
            .into_iter()
            .find(|a| {
                a.short_name() == key
                    || serde_json::to_value(a)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        == Some(key.clone())
            })
            .ok_or_else(|| {
                format!(
                    "unknown ablation `{s}` (expected one of: {})",
                    Ablation::ALL.map(Ablation::short_name).join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub t1: f64,
    pub t2: f64,
    pub min_keywords_for_summary: usize,
    pub with_claim_context: bool,
    pub ablation: Ablation,
    pub short_circuit: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            t1: 60.0,
            t2: 60.0,
            min_keywords_for_summary: 2,
            with_claim_context: false,
            ablation: Ablation::None,
            short_circuit: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, t) in [("t1", self.t1), ("t2", self.t2)] {
            if !(0.0..=100.0).contains(&t) {
                return Err(format!("{name} must lie in [0, 100], got {t}"));
            }
        }
        if self.min_keywords_for_summary < 2 {
            return Err(format!(
                "min_keywords_for_summary must be at least 2, got {}",
                self.min_keywords_for_summary
            ));
        }
        Ok(())
    }

    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        self.ablation = ablation;
        self
    }

    pub fn with_claim_context(mut self, on: bool) -> Self {
        self.with_claim_context = on;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Input,
    KeywordExtraction,
    EvidenceSummarization,
    ClaimDeconstruction,
    SubclaimVerification,
    Aggregation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Input => "input",
            Stage::KeywordExtraction => "keyword extraction",
            Stage::EvidenceSummarization => "evidence summarization",
            Stage::ClaimDeconstruction => "claim deconstruction",
            Stage::SubclaimVerification => "subclaim verification",
            Stage::Aggregation => "aggregation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub prompt_hash: String,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: Self) {
        self.prompt_tokens += rhs.prompt_tokens;
        self.completion_tokens += rhs.completion_tokens;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub abstraction_model: String,
    pub verification_model: String,
    pub temperature: f64,
    pub abstraction_temperature: f64,
    pub max_tokens: u32,
}

/// Full trace of one claim's verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub claim_id: String,
    pub claim: String,
    pub config: PipelineConfig,
    pub models: ModelSnapshot,
    pub keywords: Vec<String>,
    pub keyword_sets: Vec<KeywordSet>,
    pub abstracted: Vec<AbstractedEvidence>,
    pub subclaims: Vec<Subclaim>,
    pub results: Vec<SubclaimResult>,
    #[serde(rename = "final")]
    pub final_verdict: Verdict,
    pub usage: TokenUsage,
    pub trace: Vec<TraceEntry>,
}

impl VerificationReport {
    pub fn abstained_count(&self) -> usize {
        self.results.iter().filter(|r| r.abstained).count()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
