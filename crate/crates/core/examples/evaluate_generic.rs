//! Evaluate a generic JSON-lines dataset with a script file, writing
//! report.json, table.txt and traces/ to an output directory.
//!
//!     cargo run --example evaluate_generic -- \
//!         crates/core/fixtures/six_claims.jsonl crates/core/fixtures/six_claims.script.jsonl /tmp/six

use std::path::PathBuf;
use std::sync::Arc;

use claimpipe::eval::{default_workers, run_eval, write_outputs, EvalOptions};
use claimpipe::llm::{BackendConfig, LlmClient};
use claimpipe::{data, Pipeline, PipelineConfig, StageModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (Some(data_path), Some(script), Some(out)) = (args.next(), args.next(), args.next()) else {
        eprintln!("usage: evaluate_generic <data.jsonl> <script.jsonl> <out-dir>");
        std::process::exit(2);
    };
    let instances = data::load_generic(data_path.as_ref())?;
    let client = LlmClient::from_config(&BackendConfig::scripted(script), None)?;
    let pipeline = Pipeline::single_model(
        PipelineConfig::default(),
        StageModel::new(Arc::new(client), "scripted"),
    );
    let out = PathBuf::from(out);
    let opts = EvalOptions {
        workers: default_workers(),
        trace_dir: Some(out.join("traces")),
        cancel: None,
    };
    let report = run_eval(&instances, &pipeline, &opts)?;
    write_outputs(&out, std::slice::from_ref(&report))?;
    println!(
        "{} claims, macro-F1 {:.2}, {} errors; written to {}",
        report.claims,
        report.macro_f1,
        report.counts.error_count,
        out.display()
    );
    Ok(())
}
