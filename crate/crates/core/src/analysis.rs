//! Offline analysis of harness record directories.
//!
//! Reads `model.json` (and `gold.json` when present) from a record directory
//! and writes `findings.txt`, `findings.json`, `level.txt`, `model.dot` and,
//! with a gold model, `diff.txt` and `diff.json`. Outputs depend only on the
//! record contents and the options, so re-running is byte-stable.
//!
//! A record without `model.json` (extraction or provider failure) is
//! analyzed as an empty model: level L0, and every gold element missing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use crate::diff::{diff_models_with, DiffOptions, DiffReport};
use crate::dot::{emit_dot, RenderError, RenderOptions};
use crate::harness::{GOLD_FILE, MODEL_FILE, RECORD_FILE};
use crate::lint::{assess_level, lint_model, render_report, LevelAssessment, LintError, QualityLevel, RuleConfig};
use crate::model::ErModel;
use crate::schema::{parse_model, SchemaError};

pub const FINDINGS_TXT: &str = "findings.txt";
pub const FINDINGS_JSON: &str = "findings.json";
pub const LEVEL_TXT: &str = "level.txt";
pub const DIFF_TXT: &str = "diff.txt";
pub const DIFF_JSON: &str = "diff.json";
pub const DOT_FILE: &str = "model.dot";

#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    pub lint: RuleConfig,
    pub diff: DiffOptions,
    pub render: RenderOptions,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Document { path: PathBuf, source: SchemaError },
    #[error(transparent)]
    Lint(#[from] LintError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSummary {
    pub dir: PathBuf,
    pub model_present: bool,
    pub level: QualityLevel,
    pub findings: usize,
    pub overall_f1: Option<f64>,
}

fn read_model(path: &Path) -> Result<Option<ErModel>, AnalysisError> {
    match std::fs::read_to_string(path) {
        Ok(text) => {
            parse_model(&text).map(Some).map_err(|source| AnalysisError::Document { path: path.to_owned(), source })
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(AnalysisError::Io { path: path.to_owned(), source }),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), AnalysisError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| AnalysisError::Io { path, source })
}

/// Human-readable level report.
pub fn render_level(assessment: &LevelAssessment) -> String {
    let mut out = format!("level: {}\n", assessment.level);
    for g in &assessment.gates {
        if g.passed {
            let _ = writeln!(out, "{} gate: pass", g.level);
        } else {
            let _ = writeln!(out, "{} gate: fail ({})", g.level, g.reasons.join("; "));
        }
    }
    out.push_str("L4 needs manual review:\n");
    for item in &assessment.manual_review {
        let _ = writeln!(out, "- {item}");
    }
    out
}

pub fn diff_json(report: &DiffReport) -> String {
    serde_json::to_string_pretty(report).expect("diff report serializes") + "\n"
}

pub fn analyze_record_dir(dir: &Path, opts: &AnalysisOptions) -> Result<AnalysisSummary, AnalysisError> {
    let loaded = read_model(&dir.join(MODEL_FILE))?;
    let model_present = loaded.is_some();
    let model = loaded.unwrap_or_default();

    let findings = lint_model(&model, &opts.lint)?;
    let assessment = assess_level(&model, &findings);
    write(dir, FINDINGS_TXT, &render_report(&findings))?;
    let findings_doc = json!({ "findings": findings, "assessment": assessment });
    write(dir, FINDINGS_JSON, &(serde_json::to_string_pretty(&findings_doc).expect("serializes") + "\n"))?;

    let mut level_txt = String::new();
    if !model_present {
        level_txt.push_str("model: none extracted\n");
    }
    level_txt.push_str(&render_level(&assessment));
    write(dir, LEVEL_TXT, &level_txt)?;

    write(dir, DOT_FILE, &emit_dot(&model, &opts.render)?)?;

    let mut overall_f1 = None;
    if let Some(gold) = read_model(&dir.join(GOLD_FILE))? {
        let report = diff_models_with(&model, &gold, &opts.diff);
        write(dir, DIFF_TXT, &report.render_table())?;
        write(dir, DIFF_JSON, &diff_json(&report))?;
        overall_f1 = Some(report.overall_f1);
    }

    Ok(AnalysisSummary {
        dir: dir.to_owned(),
        model_present,
        level: assessment.level,
        findings: findings.len(),
        overall_f1,
    })
}

/// Every directory under `root` holding a `record.json`, sorted.
pub fn find_record_dirs(root: &Path) -> Result<Vec<PathBuf>, AnalysisError> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_owned()];
    while let Some(dir) = stack.pop() {
        if dir.join(RECORD_FILE).is_file() {
            out.push(dir.clone());
        }
        let entries = std::fs::read_dir(&dir).map_err(|source| AnalysisError::Io { path: dir.clone(), source })?;
        for entry in entries {
            let entry = entry.map_err(|source| AnalysisError::Io { path: dir.clone(), source })?;
            if entry.file_type().map(|t| t.is_dir()).unwrap_or(false) {
                stack.push(entry.path());
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn analyze_run_tree(root: &Path, opts: &AnalysisOptions) -> Result<Vec<AnalysisSummary>, AnalysisError> {
    find_record_dirs(root)?.iter().map(|d| analyze_record_dir(d, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL: &str = r#"{"entities":[
        {"name":"Hospital","attributes":[{"name":"hospital_id","pk":true,"not_null":true}]},
        {"name":"Ward","attributes":[{"name":"ward_id","pk":true,"not_null":true},{"name":"hospital_id","fk":true,"not_null":true}]}],
      "relationships":["Hospital:hospital_id 1--* Ward:hospital_id"]}"#;

    #[test]
    fn writes_all_outputs_deterministically() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        std::fs::write(dir.join(RECORD_FILE), "{}").unwrap();
        std::fs::write(dir.join(MODEL_FILE), MODEL).unwrap();
        std::fs::write(dir.join(GOLD_FILE), MODEL).unwrap();
        let s = analyze_record_dir(dir, &AnalysisOptions::default()).unwrap();
        assert_eq!(s.level, QualityLevel::L3);
        assert_eq!(s.overall_f1, Some(1.0));
        let names = [FINDINGS_TXT, FINDINGS_JSON, LEVEL_TXT, DIFF_TXT, DIFF_JSON, DOT_FILE];
        let first: Vec<Vec<u8>> = names.iter().map(|n| std::fs::read(dir.join(n)).unwrap()).collect();
        analyze_record_dir(dir, &AnalysisOptions::default()).unwrap();
        let second: Vec<Vec<u8>> = names.iter().map(|n| std::fs::read(dir.join(n)).unwrap()).collect();
        assert_eq!(first, second);
        assert!(std::fs::read_to_string(dir.join(LEVEL_TXT)).unwrap().starts_with("level: L3\n"));
    }

    #[test]
    fn missing_model_is_analyzed_as_empty() {
        let tmp = tempfile::tempdir().unwrap();
        std::fs::write(tmp.path().join(GOLD_FILE), MODEL).unwrap();
        let s = analyze_record_dir(tmp.path(), &AnalysisOptions::default()).unwrap();
        assert!(!s.model_present);
        assert_eq!(s.level, QualityLevel::L0);
        assert_eq!(s.overall_f1, Some(0.0));
    }

    #[test]
    fn finds_nested_records() {
        let tmp = tempfile::tempdir().unwrap();
        for d in ["b/x/p", "a/y/p"] {
            std::fs::create_dir_all(tmp.path().join(d)).unwrap();
            std::fs::write(tmp.path().join(d).join(RECORD_FILE), "{}").unwrap();
        }
        let dirs = find_record_dirs(tmp.path()).unwrap();
        assert_eq!(dirs.len(), 2);
        assert!(dirs[0] < dirs[1]);
    }
}
