//! Load HOVER or FEVEROUS files and convert them to the generic format.
//!
//!     cargo run --example load_datasets -- hover crates/core/fixtures/hover_sample.json 2
//!     cargo run --example load_datasets -- feverous crates/core/fixtures/feverous_sample.jsonl

use claimpipe::data::{self, DatasetKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [kind, path, rest @ ..] = args.as_slice() else {
        eprintln!("usage: load_datasets <hover|feverous|generic> <path> [hops]");
        std::process::exit(2);
    };
    let kind: DatasetKind = kind.parse()?;
    let hops = rest.first().map(|h| h.parse()).transpose()?;
    let instances = data::load(kind, path.as_ref(), hops)?;
    eprintln!("loaded {} claims", instances.len());
    data::write_generic(&instances, std::io::stdout().lock())?;
    Ok(())
}
