//! Tool-wide settings file.
//!
//! ```toml
//! [lint]
//! attribute_overload_threshold = 12
//! hierarchy_depth_threshold = 3
//! enabled_rules = ["isolated-entity", "transitive-redundancy"]
//!
//! [diff]
//! overlap_threshold = 0.5
//!
//! [render]
//! renderer = "/usr/bin/dot"
//! title_visible = true
//! record_style = "table"   # or "plain"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::diff::{DiffOptions, DEFAULT_OVERLAP_THRESHOLD};
use crate::dot::{RecordStyle, RenderOptions};
use crate::lint::{LintError, RuleConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Lint(#[from] LintError),
    #[error("overlap_threshold must lie in (0, 1], got {0}")]
    BadOverlapThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffSection {
    pub overlap_threshold: f64,
}

impl Default for DiffSection {
    fn default() -> Self {
        Self { overlap_threshold: DEFAULT_OVERLAP_THRESHOLD }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStyleName {
    #[default]
    Table,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSection {
    pub renderer: Option<PathBuf>,
    pub title_visible: bool,
    pub record_style: RecordStyleName,
}

impl Default for RenderSection {
    fn default() -> Self {
        Self { renderer: None, title_visible: true, record_style: RecordStyleName::Table }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub lint: RuleConfig,
    pub diff: DiffSection,
    pub render: RenderSection,
}

impl AppConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: AppConfig = toml::from_str(text)?;
        cfg.lint.validate()?;
        let t = cfg.diff.overlap_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(ConfigError::BadOverlapThreshold(t));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn diff_options(&self) -> DiffOptions {
        DiffOptions { overlap_threshold: self.diff.overlap_threshold }
    }

    pub fn render_options(&self) -> RenderOptions {
        RenderOptions {
            title_visible: self.render.title_visible,
            record_style: match self.render.record_style {
                RecordStyleName::Table => RecordStyle::TableLabels,
                RecordStyleName::Plain => RecordStyle::PlainNodes,
            },
        }
    }
}
