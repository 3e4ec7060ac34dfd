//! Reference-free structural quality rules and the L0-L3 level classifier.
//!
//! Every rule is a pure function of the model and the [`RuleConfig`].
//! Findings are returned sorted by `(rule_id, location)`.

mod level;
mod redundancy;
mod rules;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ErModel;
use crate::path::ModelPath;

pub use level::{assess_level, classify_level, GateResult, LevelAssessment, QualityLevel, MANUAL_REVIEW_L4};
pub use redundancy::detect_transitive_redundancy;

pub const ATTRIBUTE_OVERLOAD: &str = "attribute-overload";
pub const DEEP_HIERARCHY: &str = "deep-hierarchy";
pub const NARY_REVIEW: &str = "nary-review";
pub const DUPLICATE_ATTRIBUTE: &str = "duplicate-attribute";
pub const ISOLATED_ENTITY: &str = "isolated-entity";
pub const DANGLING_FK_ENDPOINT: &str = "dangling-fk-endpoint";
pub const KEY_NAMING_INCONSISTENT: &str = "key-naming-inconsistent";
pub const DUPLICATE_CONCEPT: &str = "duplicate-concept";
pub const MISSING_CONSTRAINTS: &str = "missing-constraints";
pub const TRANSITIVE_REDUNDANCY: &str = "transitive-redundancy";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub rule_id: &'static str,
    pub severity: Severity,
    pub location: ModelPath,
    pub message: String,
}

impl Finding {
    pub fn new(rule: &dyn Rule, location: ModelPath, message: impl Into<String>) -> Self {
        Self { rule_id: rule.id(), severity: rule.severity(), location, message: message.into() }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}: {}", self.severity, self.rule_id, self.location, self.message)
    }
}

pub trait Rule: Sync {
    fn id(&self) -> &'static str;
    fn severity(&self) -> Severity;
    fn description(&self) -> &'static str;
    fn check(&self, model: &ErModel, cfg: &RuleConfig, out: &mut Vec<Finding>);
}

/// All registered rules, in catalog order.
pub fn catalog() -> Vec<Box<dyn Rule>> {
    vec![
        Box::new(rules::AttributeOverload),
        Box::new(rules::DeepHierarchy),
        Box::new(rules::NaryReview),
        Box::new(rules::DuplicateAttribute),
        Box::new(rules::IsolatedEntity),
        Box::new(rules::DanglingFkEndpoint),
        Box::new(rules::KeyNamingInconsistent),
        Box::new(rules::DuplicateConcept),
        Box::new(rules::MissingConstraints),
        Box::new(redundancy::TransitiveRedundancy),
    ]
}

pub fn rule_ids() -> Vec<&'static str> {
    catalog().iter().map(|r| r.id()).collect()
}

#[derive(Debug, Error)]
pub enum LintError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("{name} must be at least 1")]
    ThresholdTooSmall { name: &'static str },
    #[error("cannot read rule config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid rule config: {0}")]
    Toml(#[from] toml::de::Error),
}

fn default_attribute_threshold() -> usize {
    12
}

fn default_depth_threshold() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleConfig {
    #[serde(default = "default_attribute_threshold")]
    pub attribute_overload_threshold: usize,
    #[serde(default = "default_depth_threshold")]
    pub hierarchy_depth_threshold: usize,
    /// `None` enables the whole catalog.
    #[serde(default)]
    pub enabled_rules: Option<BTreeSet<String>>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            attribute_overload_threshold: default_attribute_threshold(),
            hierarchy_depth_threshold: default_depth_threshold(),
            enabled_rules: None,
        }
    }
}

impl RuleConfig {
    pub fn with_rules<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.enabled_rules = Some(ids.into_iter().map(Into::into).collect());
        self
    }

    pub fn validate(&self) -> Result<(), LintError> {
        if self.attribute_overload_threshold < 1 {
            return Err(LintError::ThresholdTooSmall { name: "attribute_overload_threshold" });
        }
        if self.hierarchy_depth_threshold < 1 {
            return Err(LintError::ThresholdTooSmall { name: "hierarchy_depth_threshold" });
        }
        if let Some(enabled) = &self.enabled_rules {
            let known = rule_ids();
            if let Some(bad) = enabled.iter().find(|id| !known.contains(&id.as_str())) {
                return Err(LintError::UnknownRule(bad.clone()));
            }
        }
        Ok(())
    }

    pub fn is_enabled(&self, id: &str) -> bool {
        self.enabled_rules.as_ref().is_none_or(|set| set.contains(id))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, LintError> {
        let cfg: RuleConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LintError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| LintError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }
}

fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| {
        a.rule_id.cmp(b.rule_id).then_with(|| a.location.cmp(&b.location)).then_with(|| a.message.cmp(&b.message))
    });
}

/// Run every enabled catalog rule except `transitive-redundancy`, which has
/// its own entry point.
pub fn run_lints(model: &ErModel, cfg: &RuleConfig) -> Result<Vec<Finding>, LintError> {
    cfg.validate()?;
    let mut findings = Vec::new();
    for rule in catalog() {
        if rule.id() != TRANSITIVE_REDUNDANCY && cfg.is_enabled(rule.id()) {
            rule.check(model, cfg, &mut findings);
        }
    }
    sort_findings(&mut findings);
    Ok(findings)
}

/// [`run_lints`] plus [`detect_transitive_redundancy`] when enabled; the
/// finding set [`classify_level`] expects.
pub fn lint_model(model: &ErModel, cfg: &RuleConfig) -> Result<Vec<Finding>, LintError> {
    let mut findings = run_lints(model, cfg)?;
    if cfg.is_enabled(TRANSITIVE_REDUNDANCY) {
        findings.extend(detect_transitive_redundancy(model));
        sort_findings(&mut findings);
    }
    Ok(findings)
}

/// One line per finding: `<severity> <rule_id> <location>: <message>`.
pub fn render_report(findings: &[Finding]) -> String {
    findings.iter().map(|f| format!("{f}\n")).collect()
}
