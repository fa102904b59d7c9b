//! Shared fixtures for the benchmarks under `benches/`.

use std::path::PathBuf;

use idaracer::{parse, Program};

/// Every program of the shipped corpus, by file stem, in name order.
pub fn corpus() -> Vec<(String, Program)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("corpus directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "ida"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let src = std::fs::read_to_string(&f).expect("readable corpus file");
            let name = f.file_stem().unwrap().to_string_lossy().into_owned();
            (name, parse(&src).expect("corpus program parses"))
        })
        .collect()
}
