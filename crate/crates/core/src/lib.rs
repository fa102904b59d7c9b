//! Static race detection for interrupt-driven RTOS applications, together with
//! a bounded explicit-state interpreter of the scheduling semantics used as a
//! ground-truth oracle.
pub mod analyses;
pub mod config;
pub mod detector;
pub mod frontend;
pub mod harness;
pub mod semantics;

pub use config::{DetectorConfig, MutexMode};
pub use frontend::{parse, validate, Command, Diagnostic, FuncKind, Program, StmtId};
