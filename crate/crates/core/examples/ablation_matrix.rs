//! Run every ablation variant over the six-claim fixture and print the
//! comparison table.
//!
//!     cargo run --example ablation_matrix

use std::sync::Arc;

use claimpipe::eval::{comparison_table, run_ablation_matrix, AblationVariant, EvalOptions};
use claimpipe::fixtures::{six_claim_script, six_claims};
use claimpipe::llm::Script;
use claimpipe::{Pipeline, PipelineConfig, StageModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = Script::from_entries(six_claim_script())?;
    let pipeline = Pipeline::single_model(
        PipelineConfig::default(),
        StageModel::new(Arc::new(script), "scripted"),
    );
    let variants = AblationVariant::parse_list(
        "none,no-cd,no-ea,no-keyword,no-selection,no-raw,with-claim,without-claim",
    )?;
    let reports =
        run_ablation_matrix(&six_claims(), &pipeline, &variants, &EvalOptions::default())?;
    print!("{}", comparison_table(&reports));
    Ok(())
}
