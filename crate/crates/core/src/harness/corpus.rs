use std::fmt::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::audit::{audit_program, Audit};
use crate::config::DetectorConfig;
use crate::detector::Metrics;
use crate::frontend::{parse, validate};
use crate::semantics::Bounds;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Invalid { path: PathBuf, msg: String },
}

/// One row of the summary table.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusResult {
    pub program: String,
    pub loc: usize,
    pub audit: Audit,
}

impl CorpusResult {
    pub fn metrics(&self) -> &Metrics {
        &self.audit.report.metrics
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusRun {
    pub results: Vec<CorpusResult>,
}

/// Source lines that are neither blank nor comments.
pub fn lines_of_code(src: &str) -> usize {
    src.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with("//")).count()
}

pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let io = |source| HarnessError::Io { path: dir.to_path_buf(), source };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "ida"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn run_file(path: &Path, cfg: DetectorConfig, bounds: Bounds) -> Result<CorpusResult, HarnessError> {
    let src = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
    let invalid = |msg: String| HarnessError::Invalid { path: path.into(), msg };
    let p = parse(&src).map_err(|e| invalid(e.to_string()))?;
    if let Some(d) = validate(&p).first() {
        return Err(invalid(format!("{}: {}", d.stmt, d.message)));
    }
    let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let audit = audit_program(&name, &p, cfg, bounds);
    Ok(CorpusResult { program: name, loc: lines_of_code(&src), audit })
}

/// Audit every `.ida` file of `dir`, in parallel; rows ordered by file name.
pub fn run_corpus(dir: &Path, cfg: DetectorConfig, bounds: Bounds) -> Result<CorpusRun, HarnessError> {
    let results = corpus_files(dir)?
        .par_iter()
        .map(|f| run_file(f, cfg, bounds))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CorpusRun { results })
}

const COLUMNS: [&str; 11] = [
    "Program",
    "LoC",
    "Conf. acc.",
    "True Races",
    "Time (in s)",
    "Pot. Races",
    "% Elim.",
    "% Prec.",
    "Oracle (in s)",
    "Bounds hit",
    "Violations",
];

impl CorpusRun {
    pub fn violations(&self) -> usize {
        self.results.iter().map(|r| r.audit.violations.len()).sum()
    }

    /// Totals over all programs: (conflicting, potential, confirmed).
    pub fn totals(&self) -> Metrics {
        let c = self.results.iter().map(|r| r.metrics().conflicting).sum();
        let p = self.results.iter().map(|r| r.metrics().potential).sum();
        let t = self.results.iter().map(|r| r.audit.confirmed).sum();
        Metrics::new(c, p, Some(t))
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .results
            .iter()
            .map(|r| {
                let m = r.metrics();
                let prec = m.precision_pct.unwrap_or(100.0);
                let lower = if r.audit.caps_hit.state_cap { ">=" } else { "" };
                vec![
                    r.program.clone(),
                    r.loc.to_string(),
                    m.conflicting.to_string(),
                    r.audit.confirmed.to_string(),
                    format!("{:.3}", r.audit.detector_millis / 1e3),
                    m.potential.to_string(),
                    format!("{:.2}", m.elim_pct),
                    format!("{lower}{prec:.2}"),
                    format!("{:.3}", r.audit.oracle_millis / 1e3),
                    if r.audit.caps_hit.any() { "yes" } else { "no" }.into(),
                    r.audit.violations.len().to_string(),
                ]
            })
            .collect();
        let t = self.totals();
        rows.push(vec![
            "Total".into(),
            self.results.iter().map(|r| r.loc).sum::<usize>().to_string(),
            t.conflicting.to_string(),
            self.results.iter().map(|r| r.audit.confirmed).sum::<usize>().to_string(),
            format!("{:.3}", self.results.iter().map(|r| r.audit.detector_millis).sum::<f64>() / 1e3),
            t.potential.to_string(),
            format!("{:.2}", t.elim_pct),
            format!("{:.2}", t.precision_pct.unwrap_or(100.0)),
            format!("{:.3}", self.results.iter().map(|r| r.audit.oracle_millis).sum::<f64>() / 1e3),
            if self.results.iter().any(|r| r.audit.caps_hit.any()) { "yes" } else { "no" }.into(),
            self.violations().to_string(),
        ]);
        rows
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        writeln!(out, "| {} |", COLUMNS.join(" | ")).unwrap();
        writeln!(out, "|{}", "---|".repeat(COLUMNS.len())).unwrap();
        for r in self.rows() {
            writeln!(out, "| {} |", r.join(" | ")).unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(COLUMNS).expect("in-memory write");
        for r in self.rows() {
            w.write_record(&r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 fields")
    }
}
