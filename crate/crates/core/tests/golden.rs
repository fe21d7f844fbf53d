//! Checked-in fixture and prompt files must match what the library
//! generates. Run with `UPDATE_GOLDEN=1` to rewrite them.

use std::path::{Path, PathBuf};

use claimpipe::fixtures;

fn check(dir: &Path, files: Vec<(&'static str, String)>) {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut stale = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        if update {
            std::fs::create_dir_all(dir).unwrap();
            std::fs::write(&path, &body).unwrap();
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(on_disk) if on_disk == body => {}
            _ => stale.push(path),
        }
    }
    assert!(
        stale.is_empty(),
        "stale files (rerun with UPDATE_GOLDEN=1): {stale:?}"
    );
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn fixture_files_in_sync() {
    check(&root().join("fixtures"), fixtures::fixture_files());
}

#[test]
fn prompt_goldens_in_sync() {
    check(&root().join("tests/golden"), fixtures::prompt_goldens());
}
