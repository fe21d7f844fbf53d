//! Print every rendered prompt for the spam example, optionally from a
//! directory of prompt overrides.
//!
//!     cargo run --example render_prompts [-- <prompts-dir>]

use claimpipe::fixtures::prompt_goldens;
use claimpipe::fixtures::{MUSUBI_EVIDENCE, SPAM_CLAIM};
use claimpipe::prompts::PromptSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    match std::env::args().nth(1) {
        Some(dir) => {
            let set = PromptSet::load_dir(dir.as_ref())?;
            println!("{}", set.render_keyword_extraction(SPAM_CLAIM)?);
            println!("\n---\n");
            println!(
                "{}",
                set.render_evidence_summarization(MUSUBI_EVIDENCE, &["spam", "Hawaii"])?
            );
        }
        None => {
            for (name, prompt) in prompt_goldens() {
                println!("=== {name}\n{prompt}\n");
            }
        }
    }
    Ok(())
}
