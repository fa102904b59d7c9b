//! Corpus runner, soundness audit against the oracle, and random program
//! generation.

mod audit;
mod corpus;
mod fuzz;

pub use audit::{audit_program, Audit, Violation};
pub use corpus::{corpus_files, lines_of_code, run_corpus, run_file, CorpusResult, CorpusRun, HarnessError};
pub use fuzz::{fuzz_soundness, generate, Counterexample, FuzzConfig, FuzzReport};
