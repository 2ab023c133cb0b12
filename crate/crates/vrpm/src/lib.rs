//! File formats and directory helpers behind the `vrpm` command.

pub mod obj;
pub mod stream;

use std::path::{Path, PathBuf};

/// Files in `dir` with the given extension (case-insensitive), sorted by name
/// so that reports do not depend on directory iteration order.
pub fn list_files(dir: &Path, extension: &str) -> std::io::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case(extension));
        if matches && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
