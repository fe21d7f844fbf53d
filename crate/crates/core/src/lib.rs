//! Claim verification with large language models by keyword-guided evidence
//! abstraction and claim deconstruction.
//!
//! A claim and its gold evidence go through five steps:
//!
//! 1. keywords are extracted from the claim by the model;
//! 2. for each evidence piece, keywords are kept when their
//!    [`partial_ratio`](fuzzy::partial_ratio) or
//!    [`token_set_ratio`](fuzzy::token_set_ratio) exceeds a threshold;
//! 3. pieces with at least two kept keywords are summarized under those
//!    keywords;
//! 4. the claim is split into atomic subclaims;
//! 5. each subclaim is checked with a yes/no question against the summaries
//!    plus the raw evidence, and the claim is true only if every subclaim is.
//!
//! See [`pipeline::Pipeline`] for the entry point and [`eval`] for batch
//! scoring and ablations.

pub mod cli;
pub mod data;
pub mod eval;
pub mod fixtures;
pub mod fuzzy;
pub mod llm;
pub mod pipeline;
pub mod prompts;

pub use pipeline::{
    Ablation, ClaimInstance, EvidencePiece, Pipeline, PipelineConfig, StageModel, Verdict,
    VerificationReport,
};
