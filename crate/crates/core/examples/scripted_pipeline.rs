//! Verify one claim with canned model responses and print the trace.
//!
//!     cargo run --example scripted_pipeline

use std::sync::Arc;

use claimpipe::fixtures::{six_claim_script, six_claims};
use claimpipe::llm::Script;
use claimpipe::{Pipeline, PipelineConfig, StageModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = Script::from_entries(six_claim_script())?;
    let model = StageModel::new(Arc::new(script), "scripted");
    let pipeline =
        Pipeline::single_model(PipelineConfig::default().with_claim_context(true), model);

    let claim = &six_claims()[0];
    let report = pipeline.verify_claim(claim)?;

    println!("claim: {}", report.claim);
    println!("keywords: {}", report.keywords.join(" | "));
    for set in &report.keyword_sets {
        println!(
            "  evidence {} keeps: {}",
            set.evidence_index,
            set.keywords().join(" | ")
        );
    }
    for a in &report.abstracted {
        println!("  summary of {}: {}", a.source_index, a.text);
    }
    for r in &report.results {
        println!(
            "#{} {} -> {} ({:?})",
            r.subclaim.index, r.subclaim.text, r.verdict, r.raw_answer
        );
    }
    println!(
        "final: {} (gold {:?})",
        report.final_verdict, claim.gold_label
    );
    Ok(())
}
