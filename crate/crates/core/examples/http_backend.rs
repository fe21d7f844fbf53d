//! Verify the spam claim against a live chat-completions endpoint.
//!
//!     CLAIMPIPE_ENDPOINT=http://localhost:8000/v1/chat/completions \
//!     CLAIMPIPE_MODEL=mistralai/Mixtral-8x7B-Instruct-v0.1 \
//!     cargo run --example http_backend
//!
//! The API key, if any, is read from `LLM_API_KEY`. Without an endpoint the
//! example prints a note and exits.

use std::sync::Arc;

use claimpipe::fixtures::six_claims;
use claimpipe::llm::{BackendConfig, LlmClient, ResponseCache};
use claimpipe::{Pipeline, PipelineConfig, StageModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let Ok(endpoint) = std::env::var("CLAIMPIPE_ENDPOINT") else {
        println!("CLAIMPIPE_ENDPOINT not set; skipping");
        return Ok(());
    };
    let model = std::env::var("CLAIMPIPE_MODEL").unwrap_or_else(|_| "default".into());
    let cache = ResponseCache::open(".claimpipe-cache")?;
    let client = LlmClient::from_config(&BackendConfig::http(endpoint), Some(cache))?;
    let pipeline = Pipeline::single_model(
        PipelineConfig::default().with_claim_context(true),
        StageModel::new(Arc::new(client), model),
    );
    let report = pipeline.verify_claim(&six_claims()[0])?;
    println!("{}", report.to_json_pretty());
    Ok(())
}
