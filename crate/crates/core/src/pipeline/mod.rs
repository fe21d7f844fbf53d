//! Claim verification: keyword extraction, fuzzy keyword selection,
//! keyword-guided evidence summarization, claim deconstruction, per-subclaim
//! yes/no verification and conjunctive aggregation.

mod parse;
mod types;

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::fuzzy::{self, NormalizedText};
use crate::llm::{Completer, CompletionRequest, LlmError, DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE};
use crate::prompts::{evidence_block, PromptError, PromptSet};

pub use parse::{parse_answer, parse_keywords, parse_subclaims};
pub use types::*;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FailureKind {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("keyword extraction produced no keywords")]
    NoKeywords,
    #[error("model returned an empty completion")]
    EmptyCompletion,
    #[error("no evidence lines available for verification")]
    NoEvidence,
    #[error("no subclaim results to aggregate")]
    EmptyResults,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Error)]
#[error("claim {claim_id}: {stage}{}: {kind}", index.map(|i| format!(" #{i}")).unwrap_or_default())]
pub struct PipelineError {
    pub claim_id: String,
    pub stage: Stage,
    pub index: Option<usize>,
    #[source]
    pub kind: FailureKind,
}

impl PipelineError {
    pub fn is_backend(&self) -> bool {
        matches!(self.kind, FailureKind::Llm(_))
    }
}

/// Stage-level error before the claim id is attached.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub index: Option<usize>,
    pub kind: FailureKind,
}

impl StageError {
    fn new(stage: Stage, index: Option<usize>, kind: impl Into<FailureKind>) -> Self {
        StageError {
            stage,
            index,
            kind: kind.into(),
        }
    }

    fn for_claim(self, claim_id: &str) -> PipelineError {
        PipelineError {
            claim_id: claim_id.to_owned(),
            stage: self.stage,
            index: self.index,
            kind: self.kind,
        }
    }
}

/// A backend bound to the model and sampling settings one stage uses.
#[derive(Clone)]
pub struct StageModel {
    pub completer: Arc<dyn Completer>,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl StageModel {
    pub fn new(completer: Arc<dyn Completer>, model_id: impl Into<String>) -> Self {
        StageModel {
            completer,
            model_id: model_id.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    fn call(
        &self,
        stage: Stage,
        index: Option<usize>,
        prompt: String,
    ) -> Result<(String, TraceEntry, TokenUsage), StageError> {
        let request = CompletionRequest::new(prompt, self.model_id.clone())
            .with_temperature(self.temperature)
            .with_max_tokens(self.max_tokens);
        let response = self
            .completer
            .complete(&request)
            .map_err(|e| StageError::new(stage, index, e))?;
        let usage = TokenUsage {
            prompt_tokens: response.prompt_tokens,
            completion_tokens: response.completion_tokens,
        };
        let trace = TraceEntry {
            stage,
            index,
            prompt_hash: request.prompt_hash(),
            prompt: request.prompt,
            response: response.text.clone(),
        };
        Ok((response.text, trace, usage))
    }
}

/// Calls one stage and records its trace entry.
struct Recorder {
    trace: Vec<TraceEntry>,
    usage: TokenUsage,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            trace: Vec::new(),
            usage: TokenUsage::default(),
        }
    }

    fn absorb(&mut self, other: Recorder) {
        self.trace.extend(other.trace);
        self.usage += other.usage;
    }

    fn call(
        &mut self,
        model: &StageModel,
        stage: Stage,
        index: Option<usize>,
        prompt: String,
    ) -> Result<String, StageError> {
        let (text, entry, usage) = model.call(stage, index, prompt)?;
        self.trace.push(entry);
        self.usage += usage;
        Ok(text)
    }
}

/// Renders the keyword-extraction prompt, queries the model and parses the
/// comma-separated answer.
fn extract_keywords_recorded(
    prompts: &PromptSet,
    claim: &str,
    model: &StageModel,
    rec: &mut Recorder,
) -> Result<Vec<String>, StageError> {
    let stage = Stage::KeywordExtraction;
    let prompt = prompts
        .render_keyword_extraction(claim)
        .map_err(|e| StageError::new(stage, None, e))?;
    let completion = rec.call(model, stage, None, prompt)?;
    let keywords = parse_keywords(&completion);
    if keywords.is_empty() {
        return Err(StageError::new(stage, None, FailureKind::NoKeywords));
    }
    Ok(keywords)
}

pub fn extract_keywords(
    prompts: &PromptSet,
    claim: &str,
    model: &StageModel,
) -> Result<Vec<String>, StageError> {
    extract_keywords_recorded(prompts, claim, model, &mut Recorder::new())
}

/// Keywords with their normalized form computed once per claim.
pub struct PreparedKeywords {
    items: Vec<(String, NormalizedText)>,
}

impl PreparedKeywords {
    pub fn new<S: AsRef<str>>(keywords: &[S]) -> Self {
        PreparedKeywords {
            items: keywords
                .iter()
                .map(|k| (k.as_ref().to_owned(), fuzzy::preprocess(k.as_ref())))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn scored<'a>(
        &'a self,
        evidence: &'a NormalizedText,
    ) -> impl Iterator<Item = ScoredKeyword> + 'a {
        self.items.iter().map(move |(raw, norm)| {
            // a keyword that normalizes to nothing carries no signal
            let (partial, token_set) = if norm.is_empty() {
                (0.0, 0.0)
            } else {
                (
                    fuzzy::partial_ratio(norm.as_str(), evidence.as_str()).value(),
                    fuzzy::token_set_ratio(norm.as_str(), evidence.as_str()).value(),
                )
            };
            ScoredKeyword {
                keyword: raw.clone(),
                partial_score: partial,
                token_set_score: token_set,
            }
        })
    }

    /// Keeps keyword `k` iff `partial_ratio(k, e) > t1` or
    /// `token_set_ratio(k, e) > t2`, in keyword order.
    pub fn select(&self, evidence_index: usize, evidence: &str, t1: f64, t2: f64) -> KeywordSet {
        let evidence = fuzzy::preprocess(evidence);
        KeywordSet {
            evidence_index,
            selected: self
                .scored(&evidence)
                .filter(|s| s.partial_score > t1 || s.token_set_score > t2)
                .collect(),
        }
    }

    /// Every keyword, with scores recorded but no threshold applied.
    pub fn select_all(&self, evidence_index: usize, evidence: &str) -> KeywordSet {
        let evidence = fuzzy::preprocess(evidence);
        KeywordSet {
            evidence_index,
            selected: self.scored(&evidence).collect(),
        }
    }
}

pub fn select_keywords<S: AsRef<str>>(
    keywords: &[S],
    evidence_index: usize,
    evidence: &EvidencePiece,
    t1: f64,
    t2: f64,
) -> KeywordSet {
    PreparedKeywords::new(keywords).select(evidence_index, &evidence.text, t1, t2)
}

fn abstract_evidence_recorded(
    prompts: &PromptSet,
    evidence: &EvidencePiece,
    keyword_set: &KeywordSet,
    min_keywords: usize,
    model: &StageModel,
    rec: &mut Recorder,
) -> Result<Option<AbstractedEvidence>, StageError> {
    let stage = Stage::EvidenceSummarization;
    let index = Some(keyword_set.evidence_index);
    if keyword_set.selected.len() < min_keywords {
        return Ok(None);
    }
    let keywords = keyword_set.keywords();
    let prompt = prompts
        .render_evidence_summarization(&evidence.text, &keywords)
        .map_err(|e| StageError::new(stage, index, e))?;
    let completion = rec.call(model, stage, index, prompt)?;
    Ok(non_empty_abstraction(
        keyword_set.evidence_index,
        &completion,
        keywords,
    ))
}

fn non_empty_abstraction(
    source_index: usize,
    completion: &str,
    keywords: Vec<String>,
) -> Option<AbstractedEvidence> {
    let text = completion.trim();
    if text.is_empty() {
        // nothing to add to the evidence block
        return None;
    }
    Some(AbstractedEvidence {
        source_index,
        text: text.to_owned(),
        keywords,
    })
}

/// Summarizes one evidence piece under its selected keywords. Pieces with
/// fewer than `cfg.min_keywords_for_summary` keywords are not summarized.
pub fn abstract_evidence(
    prompts: &PromptSet,
    evidence: &EvidencePiece,
    keyword_set: &KeywordSet,
    model: &StageModel,
    cfg: &PipelineConfig,
) -> Result<Option<AbstractedEvidence>, StageError> {
    abstract_evidence_recorded(
        prompts,
        evidence,
        keyword_set,
        cfg.min_keywords_for_summary,
        model,
        &mut Recorder::new(),
    )
}

fn deconstruct_claim_recorded(
    prompts: &PromptSet,
    claim: &str,
    model: &StageModel,
    rec: &mut Recorder,
) -> Result<Vec<Subclaim>, StageError> {
    let stage = Stage::ClaimDeconstruction;
    let prompt = prompts
        .render_claim_deconstruction(claim)
        .map_err(|e| StageError::new(stage, None, e))?;
    let completion = rec.call(model, stage, None, prompt)?;
    parse_subclaims(&completion)
        .ok_or_else(|| StageError::new(stage, None, FailureKind::EmptyCompletion))
}

pub fn deconstruct_claim(
    prompts: &PromptSet,
    claim: &str,
    model: &StageModel,
) -> Result<Vec<Subclaim>, StageError> {
    deconstruct_claim_recorded(prompts, claim, model, &mut Recorder::new())
}

fn verify_subclaim_recorded(
    prompts: &PromptSet,
    subclaim: &Subclaim,
    evidence: &str,
    claim: &str,
    with_context: bool,
    model: &StageModel,
    rec: &mut Recorder,
) -> Result<SubclaimResult, StageError> {
    let stage = Stage::SubclaimVerification;
    let index = Some(subclaim.index);
    if evidence.trim().is_empty() {
        return Err(StageError::new(stage, index, FailureKind::NoEvidence));
    }
    let prompt = prompts
        .render_subclaim_verification(evidence, &subclaim.text, claim, with_context)
        .map_err(|e| StageError::new(stage, index, e))?;
    let raw_answer = rec.call(model, stage, index, prompt)?;
    let parsed = parse_answer(&raw_answer);
    Ok(SubclaimResult {
        subclaim: subclaim.clone(),
        raw_answer,
        verdict: parsed.unwrap_or(Verdict::ABSTENTION_DEFAULT),
        abstained: parsed.is_none(),
    })
}

/// Asks the verification model whether one subclaim holds given the
/// abstracted lines followed by the raw lines.
pub fn verify_subclaim(
    prompts: &PromptSet,
    subclaim: &Subclaim,
    abstracted: &[AbstractedEvidence],
    raw: &[EvidencePiece],
    claim: &str,
    cfg: &PipelineConfig,
    model: &StageModel,
) -> Result<SubclaimResult, StageError> {
    let block = evidence_block(
        abstracted.iter().map(|a| a.text.as_str()),
        raw.iter().map(|e| e.text.as_str()),
    );
    verify_subclaim_recorded(
        prompts,
        subclaim,
        &block,
        claim,
        cfg.with_claim_context,
        model,
        &mut Recorder::new(),
    )
}

/// `False` iff any subclaim is `False`.
pub fn aggregate(results: &[SubclaimResult]) -> Result<Verdict, FailureKind> {
    if results.is_empty() {
        return Err(FailureKind::EmptyResults);
    }
    Ok(aggregate_verdicts(results.iter().map(|r| r.verdict)))
}

fn aggregate_verdicts(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    if verdicts.into_iter().any(|v| v == Verdict::False) {
        Verdict::False
    } else {
        Verdict::True
    }
}

/// Output of the evidence-abstraction half of the pipeline.
#[derive(Default)]
struct Abstraction {
    keywords: Vec<String>,
    keyword_sets: Vec<KeywordSet>,
    abstracted: Vec<AbstractedEvidence>,
}

/// The configured verifier: prompts, settings and the two stage models.
///
/// Keyword extraction and evidence summarization use the abstraction model;
/// claim deconstruction and subclaim verification use the verification model.
#[derive(Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub prompts: Arc<PromptSet>,
    pub abstraction: StageModel,
    pub verification: StageModel,
}

impl Pipeline {
    pub fn new(
        config: PipelineConfig,
        prompts: Arc<PromptSet>,
        abstraction: StageModel,
        verification: StageModel,
    ) -> Self {
        Pipeline {
            config,
            prompts,
            abstraction,
            verification,
        }
    }

    /// Same model for every stage.
    pub fn single_model(config: PipelineConfig, model: StageModel) -> Self {
        Pipeline::new(config, Arc::new(PromptSet::default()), model.clone(), model)
    }

    pub fn with_config(&self, config: PipelineConfig) -> Self {
        Pipeline {
            config,
            ..self.clone()
        }
    }

    pub fn models(&self) -> ModelSnapshot {
        ModelSnapshot {
            abstraction_model: self.abstraction.model_id.clone(),
            verification_model: self.verification.model_id.clone(),
            temperature: self.verification.temperature,
            abstraction_temperature: self.abstraction.temperature,
            max_tokens: self.verification.max_tokens,
        }
    }

    fn abstract_all(
        &self,
        instance: &ClaimInstance,
        rec: &mut Recorder,
    ) -> Result<Abstraction, StageError> {
        let cfg = &self.config;
        if cfg.ablation == Ablation::NoEvidenceAbstraction {
            return Ok(Abstraction::default());
        }
        if cfg.ablation == Ablation::NoKeywordGuidance {
            let per_piece: Vec<_> = instance
                .evidence
                .par_iter()
                .enumerate()
                .map(|(i, piece)| {
                    let mut local = Recorder::new();
                    let prompt = self
                        .prompts
                        .render_claim_guided_summarization(&piece.text, &instance.claim)
                        .map_err(|e| StageError::new(Stage::EvidenceSummarization, Some(i), e))?;
                    let text = local.call(
                        &self.abstraction,
                        Stage::EvidenceSummarization,
                        Some(i),
                        prompt,
                    )?;
                    Ok((non_empty_abstraction(i, &text, Vec::new()), local))
                })
                .collect::<Result<_, StageError>>()?;
            let mut out = Abstraction::default();
            for (a, local) in per_piece {
                rec.absorb(local);
                out.abstracted.extend(a);
            }
            return Ok(out);
        }

        let keywords =
            extract_keywords_recorded(&self.prompts, &instance.claim, &self.abstraction, rec)?;
        let prepared = PreparedKeywords::new(&keywords);
        let per_piece: Vec<_> = instance
            .evidence
            .par_iter()
            .enumerate()
            .map(|(i, piece)| {
                let set = if cfg.ablation == Ablation::NoKeywordSelection {
                    prepared.select_all(i, &piece.text)
                } else {
                    prepared.select(i, &piece.text, cfg.t1, cfg.t2)
                };
                let mut local = Recorder::new();
                let abstracted = abstract_evidence_recorded(
                    &self.prompts,
                    piece,
                    &set,
                    cfg.min_keywords_for_summary,
                    &self.abstraction,
                    &mut local,
                )?;
                Ok((set, abstracted, local))
            })
            .collect::<Result<_, StageError>>()?;

        let mut out = Abstraction {
            keywords,
            ..Abstraction::default()
        };
        for (set, abstracted, local) in per_piece {
            rec.absorb(local);
            out.keyword_sets.push(set);
            out.abstracted.extend(abstracted);
        }
        Ok(out)
    }

    fn subclaims(&self, claim: &str, rec: &mut Recorder) -> Result<Vec<Subclaim>, StageError> {
        if self.config.ablation == Ablation::NoClaimDeconstruction {
            return Ok(vec![Subclaim {
                index: 1,
                text: claim.trim().to_owned(),
            }]);
        }
        deconstruct_claim_recorded(&self.prompts, claim, &self.verification, rec)
    }

    /// Runs the full composition for one claim under `self.config`.
    pub fn verify_claim(
        &self,
        instance: &ClaimInstance,
    ) -> Result<VerificationReport, PipelineError> {
        instance.validate().map_err(|e| {
            StageError::new(Stage::Input, None, FailureKind::InvalidInput(e))
                .for_claim(&instance.id)
        })?;
        self.config.validate().map_err(|e| {
            StageError::new(Stage::Input, None, FailureKind::InvalidInput(e))
                .for_claim(&instance.id)
        })?;
        self.run(instance).map_err(|e| e.for_claim(&instance.id))
    }

    fn run(&self, instance: &ClaimInstance) -> Result<VerificationReport, StageError> {
        let cfg = &self.config;
        let mut abstraction_rec = Recorder::new();
        let mut deconstruction_rec = Recorder::new();
        let (abstraction, subclaims) = rayon::join(
            || self.abstract_all(instance, &mut abstraction_rec),
            || self.subclaims(&instance.claim, &mut deconstruction_rec),
        );
        let (abstraction, subclaims) = (abstraction?, subclaims?);

        let mut rec = abstraction_rec;
        rec.absorb(deconstruction_rec);

        let raw: &[EvidencePiece] = if cfg.ablation == Ablation::NoRawEvidence {
            &[]
        } else {
            &instance.evidence
        };
        let block = evidence_block(
            abstraction.abstracted.iter().map(|a| a.text.as_str()),
            raw.iter().map(|e| e.text.as_str()),
        );

        let mut results = Vec::with_capacity(subclaims.len());
        for sub in &subclaims {
            let r = verify_subclaim_recorded(
                &self.prompts,
                sub,
                &block,
                &instance.claim,
                cfg.with_claim_context,
                &self.verification,
                &mut rec,
            )?;
            let stop = cfg.short_circuit && r.verdict == Verdict::False;
            results.push(r);
            if stop {
                break;
            }
        }
        let final_verdict =
            aggregate(&results).map_err(|e| StageError::new(Stage::Aggregation, None, e))?;

        Ok(VerificationReport {
            schema_version: REPORT_SCHEMA_VERSION,
            claim_id: instance.id.clone(),
            claim: instance.claim.clone(),
            config: cfg.clone(),
            models: self.models(),
            keywords: abstraction.keywords,
            keyword_sets: abstraction.keyword_sets,
            abstracted: abstraction.abstracted,
            subclaims,
            results,
            final_verdict,
            usage: rec.usage,
            trace: rec.trace,
        })
    }
}

#[cfg(test)]
mod tests;
