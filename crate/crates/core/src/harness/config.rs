//! Experiment configuration (TOML).
//!
//! ```toml
//! output_root = "runs"
//! parallelism = 4
//! scenarios = ["scenarios/hospital.txt"]
//! strategies = ["baseline", "cot", "cot-verifier"]
//!
//! [gold]
//! hospital = "gold/hospital.json"
//!
//! [[providers]]
//! id = "recorded"
//! kind = "replay"
//! replay_file = "replay.json"
//!
//! [[providers]]
//! id = "gpt"
//! kind = "openai"
//! endpoint = "https://api.openai.com/v1"
//! model = "gpt-4o"
//! credential_env = "OPENAI_API_KEY"
//! temperature = 0.0
//! ```
//!
//! Relative paths are resolved against the directory holding the config
//! file. A scenario's id is its file stem.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::prompt::PromptStrategy;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Replay,
    Openai,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub id: String,
    pub kind: ProviderKind,
    pub replay_file: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub credential_env: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_retries() -> u32 {
    2
}

fn default_timeout() -> u64 {
    120
}

fn default_parallelism() -> usize {
    1
}

fn default_strategies() -> Vec<PromptStrategy> {
    PromptStrategy::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_root: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    pub scenarios: Vec<PathBuf>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<PromptStrategy>,
    pub providers: Vec<ProviderConfig>,
    /// Gold model document per scenario id.
    #[serde(default)]
    pub gold: BTreeMap<String, PathBuf>,
    /// File replacing the built-in format description.
    pub format_spec: Option<PathBuf>,
}

/// Ids become directory names, so keep them to a portable subset.
fn is_safe_id(s: &str) -> bool {
    !s.is_empty()
        && s != "."
        && s != ".."
        && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    /// Parse `text`, resolving relative paths against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        resolve(&mut cfg.output_root);
        cfg.scenarios.iter_mut().for_each(resolve);
        cfg.gold.values_mut().for_each(resolve);
        if let Some(p) = cfg.format_spec.as_mut() {
            resolve(p);
        }
        for p in &mut cfg.providers {
            if let Some(f) = p.replay_file.as_mut() {
                resolve(f);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_owned(), source: e })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn scenario_id(path: &Path) -> Option<String> {
        path.file_stem().and_then(|s| s.to_str()).map(str::to_owned)
    }

    /// Scenario ids in config order.
    pub fn scenario_ids(&self) -> Vec<String> {
        self.scenarios.iter().filter_map(|p| Self::scenario_id(p)).collect()
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.parallelism == 0 {
            return Err(bad("parallelism must be at least 1"));
        }
        if self.scenarios.is_empty() || self.strategies.is_empty() || self.providers.is_empty() {
            return Err(bad("scenarios, strategies and providers must all be non-empty"));
        }
        let mut seen = BTreeSet::new();
        for p in &self.scenarios {
            let id =
                Self::scenario_id(p).ok_or_else(|| bad(format!("scenario path {} has no file name", p.display())))?;
            if !is_safe_id(&id) {
                return Err(bad(format!("scenario id `{id}` must use only letters, digits, `-`, `_` and `.`")));
            }
            if !seen.insert(id.clone()) {
                return Err(bad(format!("duplicate scenario id `{id}`")));
            }
        }
        for id in self.gold.keys() {
            if !seen.contains(id) {
                return Err(bad(format!("gold model given for unknown scenario `{id}`")));
            }
        }
        let mut strategies = BTreeSet::new();
        for s in &self.strategies {
            if !strategies.insert(*s) {
                return Err(bad(format!("strategy `{s}` listed twice")));
            }
        }
        let mut providers = BTreeSet::new();
        for p in &self.providers {
            if !is_safe_id(&p.id) {
                return Err(bad(format!("provider id `{}` must use only letters, digits, `-`, `_` and `.`", p.id)));
            }
            if !providers.insert(p.id.as_str()) {
                return Err(bad(format!("duplicate provider id `{}`", p.id)));
            }
            match p.kind {
                ProviderKind::Replay if p.replay_file.is_none() => {
                    return Err(bad(format!("replay provider `{}` needs replay_file", p.id)));
                }
                ProviderKind::Openai if p.endpoint.is_none() || p.model.is_none() || p.credential_env.is_none() => {
                    return Err(bad(format!("openai provider `{}` needs endpoint, model and credential_env", p.id)));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
output_root = "out"
parallelism = 2
scenarios = ["s/hospital.txt", "/abs/library.txt"]

[gold]
hospital = "gold/h.json"

[[providers]]
id = "rec"
kind = "replay"
replay_file = "replay.json"
"#;

    #[test]
    fn paths_resolve_against_base() {
        let cfg = ExperimentConfig::from_toml_str(BASIC, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.output_root, Path::new("/cfg/out"));
        assert_eq!(cfg.scenarios[0], Path::new("/cfg/s/hospital.txt"));
        assert_eq!(cfg.scenarios[1], Path::new("/abs/library.txt"));
        assert_eq!(cfg.gold["hospital"], Path::new("/cfg/gold/h.json"));
        assert_eq!(cfg.providers[0].replay_file.as_deref(), Some(Path::new("/cfg/replay.json")));
        assert_eq!(cfg.strategies, PromptStrategy::ALL.to_vec());
        assert_eq!(cfg.scenario_ids(), ["hospital", "library"]);
    }

    #[test]
    fn rejects_duplicates_and_missing_fields() {
        let dup = BASIC.replace("/abs/library.txt", "other/hospital.txt");
        assert!(ExperimentConfig::from_toml_str(&dup, Path::new("/")).is_err());

        let no_file = BASIC.replace("replay_file = \"replay.json\"", "");
        assert!(ExperimentConfig::from_toml_str(&no_file, Path::new("/")).is_err());

        let unknown_gold = BASIC.replace("hospital = \"gold", "clinic = \"gold");
        assert!(ExperimentConfig::from_toml_str(&unknown_gold, Path::new("/")).is_err());

        let bad_strategy = format!("strategies = [\"zero-shot\"]\n{BASIC}");
        assert!(ExperimentConfig::from_toml_str(&bad_strategy, Path::new("/")).is_err());
    }

    #[test]
    fn openai_provider_needs_credential_variable() {
        let text = BASIC.replace(
            "kind = \"replay\"\nreplay_file = \"replay.json\"",
            "kind = \"openai\"\nendpoint = \"http://x\"\nmodel = \"m\"",
        );
        assert!(ExperimentConfig::from_toml_str(&text, Path::new("/")).is_err());
    }
}
