//! Experiment harness: build prompts, call providers, persist every raw
//! response and its extraction outcome under a run tree
//! `<output_root>/<scenario>/<strategy>/<provider>/`.
//!
//! Files in a record directory, in the order they are written:
//! `requirements.txt`, `prompts.json`, `raw_stage<N>.txt` (as soon as stage N
//! returns), `model.json` or `extraction_error.txt`, `gold.json` (when a gold
//! model is configured) and finally `record.json`.

pub mod config;
pub mod prompt;
pub mod provider;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::extract::ExtractionReport;
use crate::model::ErModel;
use crate::normalize::{normalize_pipeline, NormalizeError};
use crate::schema::{parse_model, to_document};

pub use config::{ExperimentConfig, ProviderConfig, ProviderKind};
pub use prompt::{
    build_prompt, Message, PromptBundle, PromptError, PromptStrategy, Role, INTERCHANGE_FORMAT_SPEC,
    PROMPT_TEMPLATE_VERSION, STAGE1_OUTPUT_SLOT,
};
#[cfg(feature = "http")]
pub use provider::HttpProvider;
pub use provider::{prompt_hash, HttpSettings, Provider, ProviderError, ReplayFile, ReplayProvider};

pub const RECORD_FILE: &str = "record.json";
pub const MODEL_FILE: &str = "model.json";
pub const GOLD_FILE: &str = "gold.json";
pub const REQUIREMENTS_FILE: &str = "requirements.txt";
pub const PROMPTS_FILE: &str = "prompts.json";
pub const EXTRACTION_ERROR_FILE: &str = "extraction_error.txt";

pub fn raw_stage_file(stage: usize) -> String {
    format!("raw_stage{}.txt", stage + 1)
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("scenario `{scenario}`: {source}")]
    Prompt { scenario: String, source: PromptError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_owned(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    ExtractionFailed,
    ProviderError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub prompt_hash: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    /// Calls made, including the first.
    pub attempts: u32,
    pub raw_file: Option<String>,
}

/// One cell of the scenario x strategy x provider product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub scenario_id: String,
    pub strategy: PromptStrategy,
    pub provider_id: String,
    pub template_version: String,
    pub outcome: Outcome,
    pub decoding: Value,
    pub stages: Vec<StageRecord>,
    /// Stage (1-based) whose response produced the model.
    pub model_stage: Option<usize>,
    pub extraction: Option<ExtractionReport>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    #[serde(skip)]
    pub prompts: PromptBundle,
    #[serde(skip)]
    pub raw_responses: Vec<String>,
    #[serde(skip)]
    pub model: Option<ErModel>,
    #[serde(skip)]
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    /// Records in scenario, strategy, provider order.
    pub records: Vec<ExperimentRecord>,
}

impl RunSummary {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.records.iter().filter(|r| r.outcome == outcome).count()
    }
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Build the provider described by `cfg`. Credentials are resolved here.
pub fn build_provider(cfg: &ProviderConfig) -> Result<Arc<dyn Provider>, ProviderError> {
    match cfg.kind {
        ProviderKind::Replay => {
            let path = cfg.replay_file.as_deref().ok_or_else(|| ProviderError::Setup("no replay_file".into()))?;
            Ok(Arc::new(ReplayProvider::load(path)?))
        }
        ProviderKind::Openai => {
            #[cfg(feature = "http")]
            {
                let settings = HttpSettings {
                    endpoint: cfg.endpoint.clone().unwrap_or_default(),
                    model: cfg.model.clone().unwrap_or_default(),
                    credential_env: cfg.credential_env.clone().unwrap_or_default(),
                    temperature: cfg.temperature,
                    max_tokens: cfg.max_tokens,
                    timeout_secs: cfg.timeout_secs,
                };
                Ok(Arc::new(HttpProvider::new(settings)?))
            }
            #[cfg(not(feature = "http"))]
            {
                Err(ProviderError::Setup("built without the `http` feature".into()))
            }
        }
    }
}

struct Cell<'a> {
    scenario: &'a str,
    requirements: &'a str,
    gold: Option<&'a str>,
    bundle: &'a PromptBundle,
    provider_id: &'a str,
    provider: &'a Result<Arc<dyn Provider>, ProviderError>,
    max_retries: u32,
    dir: PathBuf,
}

fn send_with_retries(p: &dyn Provider, messages: &[Message], max_retries: u32) -> (Result<String, ProviderError>, u32) {
    let mut attempts = 0;
    loop {
        attempts += 1;
        match p.send(messages) {
            Err(e) if e.is_transient() && attempts <= max_retries => continue,
            r => return (r, attempts),
        }
    }
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<(), HarnessError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(io_err(&path))
}

fn run_cell(cell: &Cell<'_>) -> Result<ExperimentRecord, HarnessError> {
    let dir = &cell.dir;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write(dir, REQUIREMENTS_FILE, cell.requirements.as_bytes())?;
    let prompts_json = serde_json::to_string_pretty(cell.bundle).expect("bundle serializes") + "\n";
    write(dir, PROMPTS_FILE, prompts_json.as_bytes())?;

    let mut rec = ExperimentRecord {
        scenario_id: cell.scenario.to_owned(),
        strategy: cell.bundle.strategy,
        provider_id: cell.provider_id.to_owned(),
        template_version: cell.bundle.template_version.clone(),
        outcome: Outcome::Ok,
        decoding: Value::Null,
        stages: Vec::new(),
        model_stage: None,
        extraction: None,
        warnings: Vec::new(),
        error: None,
        prompts: cell.bundle.clone(),
        raw_responses: Vec::new(),
        model: None,
        dir: dir.clone(),
    };

    match cell.provider {
        Err(e) => {
            rec.outcome = Outcome::ProviderError;
            rec.error = Some(e.to_string());
        }
        Ok(provider) => {
            rec.decoding = provider.decoding();
            for stage in 0..cell.bundle.stages.len() {
                let messages = cell.bundle.resolve_stage(stage, rec.raw_responses.last().map(String::as_str));
                let started = now_ms();
                let (result, attempts) = send_with_retries(provider.as_ref(), &messages, cell.max_retries);
                let mut stage_rec = StageRecord {
                    prompt_hash: prompt_hash(&messages),
                    started_unix_ms: started,
                    finished_unix_ms: now_ms(),
                    attempts,
                    raw_file: None,
                };
                match result {
                    Ok(raw) => {
                        let name = raw_stage_file(stage);
                        write(dir, &name, raw.as_bytes())?;
                        stage_rec.raw_file = Some(name);
                        rec.stages.push(stage_rec);
                        rec.raw_responses.push(raw);
                    }
                    Err(e) => {
                        rec.stages.push(stage_rec);
                        rec.outcome = Outcome::ProviderError;
                        rec.error = Some(format!("stage {}: {e}", stage + 1));
                        break;
                    }
                }
            }
            if rec.outcome == Outcome::Ok {
                extract_into(&mut rec)?;
            }
        }
    }

    if let Some(gold) = cell.gold {
        write(dir, GOLD_FILE, gold.as_bytes())?;
    }
    let record_json = serde_json::to_string_pretty(&rec).expect("record serializes") + "\n";
    write(dir, RECORD_FILE, record_json.as_bytes())?;
    Ok(rec)
}

/// Extract from the final stage; a failed verification stage falls back to
/// the stage before it.
fn extract_into(rec: &mut ExperimentRecord) -> Result<(), HarnessError> {
    let last = rec.raw_responses.len() - 1;
    let mut result: Result<(ErModel, ExtractionReport, usize), NormalizeError> =
        normalize_pipeline(&rec.raw_responses[last]).map(|(m, r)| (m, r, last));
    if let Err(e) = &result {
        if last > 0 {
            let first_err = e.clone();
            if let Ok((m, r)) = normalize_pipeline(&rec.raw_responses[last - 1]) {
                rec.warnings.push(format!(
                    "stage {} output unusable ({} stage: {first_err}); using stage {} output",
                    last + 1,
                    first_err.stage(),
                    last
                ));
                result = Ok((m, r, last - 1));
            }
        }
    }
    match result {
        Ok((model, report, stage)) => {
            write(&rec.dir, MODEL_FILE, to_document(&model).as_bytes())?;
            rec.warnings.extend(report.warnings.iter().cloned());
            rec.extraction = Some(report);
            rec.model_stage = Some(stage + 1);
            rec.model = Some(model);
        }
        Err(e) => {
            let text = format!("{e}\n");
            write(&rec.dir, EXTRACTION_ERROR_FILE, text.as_bytes())?;
            rec.outcome = Outcome::ExtractionFailed;
            rec.error = Some(text.trim_end().to_owned());
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

/// A named provider, or the error that prevented building it.
pub type ProviderSlot = (String, Result<Arc<dyn Provider>, ProviderError>);

/// Run the full product with providers built from the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    let providers = cfg.providers.iter().map(|p| (p.id.clone(), build_provider(p))).collect();
    run_experiment_with(cfg, providers)
}

/// Run the full product with explicit providers, one per `cfg.providers`
/// entry, in the same order. A provider that failed to build still yields
/// a materialized, failing record for each of its cells.
pub fn run_experiment_with(cfg: &ExperimentConfig, providers: Vec<ProviderSlot>) -> Result<RunSummary, HarnessError> {
    if providers.len() != cfg.providers.len() {
        return Err(HarnessError::Config("one provider instance per configured provider".into()));
    }
    let format_spec = match &cfg.format_spec {
        Some(p) => read(p)?,
        None => INTERCHANGE_FORMAT_SPEC.to_owned(),
    };

    let mut scenarios = Vec::new();
    for path in &cfg.scenarios {
        let id = ExperimentConfig::scenario_id(path).expect("validated");
        let requirements = read(path)?;
        let gold = match cfg.gold.get(&id) {
            Some(g) => {
                let text = read(g)?;
                parse_model(&text).map_err(|e| HarnessError::Config(format!("gold model {}: {e}", g.display())))?;
                Some(text)
            }
            None => None,
        };
        let mut bundles = Vec::new();
        for &s in &cfg.strategies {
            let b = build_prompt(s, &requirements, &format_spec)
                .map_err(|source| HarnessError::Prompt { scenario: id.clone(), source })?;
            bundles.push(b);
        }
        scenarios.push((id, requirements, gold, bundles));
    }

    let mut cells = Vec::new();
    for (id, requirements, gold, bundles) in &scenarios {
        for bundle in bundles {
            for ((pid, provider), pcfg) in providers.iter().zip(&cfg.providers) {
                cells.push(Cell {
                    scenario: id,
                    requirements,
                    gold: gold.as_deref(),
                    bundle,
                    provider_id: pid,
                    provider,
                    max_retries: pcfg.max_retries,
                    dir: cfg.output_root.join(id).join(bundle.strategy.id()).join(pid),
                });
            }
        }
    }

    let results: Vec<Mutex<Option<Result<ExperimentRecord, HarnessError>>>> =
        cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = cfg.parallelism.min(cells.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let r = run_cell(cell);
                *results[i].lock().expect("no panics while holding the lock") = Some(r);
            });
        }
    });

    let mut records = Vec::with_capacity(cells.len());
    for slot in results {
        records.push(slot.into_inner().expect("lock not poisoned").expect("every cell ran")?);
    }
    Ok(RunSummary { records })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scripted(Vec<&'static str>);

    impl Provider for Scripted {
        fn send(&self, messages: &[Message]) -> Result<String, ProviderError> {
            // Stage 2 prompts carry the reviewer system message.
            let idx = usize::from(messages[0].content.contains("reviewer"));
            Ok(self.0[idx.min(self.0.len() - 1)].to_owned())
        }
    }

    struct Flaky(AtomicUsize);

    impl Provider for Flaky {
        fn send(&self, _: &[Message]) -> Result<String, ProviderError> {
            if self.0.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(ProviderError::Transport("reset".into()))
            } else {
                Ok(r#"{"entities":[{"name":"A","attributes":[{"name":"id"}]}]}"#.into())
            }
        }
    }

    const DOC: &str = r#"{"entities":[{"name":"A","attributes":[{"name":"id","pk":true}]}]}"#;

    fn setup(strategies: &str) -> (tempfile::TempDir, ExperimentConfig) {
        let tmp = tempfile::tempdir().unwrap();
        std::fs::write(tmp.path().join("s1.txt"), "A thing has an id.").unwrap();
        let text = format!(
            "output_root = \"runs\"\nscenarios = [\"s1.txt\"]\nstrategies = {strategies}\n\
             [[providers]]\nid = \"p\"\nkind = \"replay\"\nreplay_file = \"unused.json\"\n"
        );
        let cfg = ExperimentConfig::from_toml_str(&text, tmp.path()).unwrap();
        (tmp, cfg)
    }

    #[test]
    fn writes_record_tree() {
        let (_tmp, cfg) = setup("[\"baseline\", \"cot-verifier\"]");
        let p: Arc<dyn Provider> = Arc::new(Scripted(vec![DOC]));
        let sum = run_experiment_with(&cfg, vec![("p".into(), Ok(p))]).unwrap();
        assert_eq!(sum.records.len(), 2);
        assert_eq!(sum.count(Outcome::Ok), 2);
        let dir = cfg.output_root.join("s1/cot-verifier/p");
        for f in ["requirements.txt", "prompts.json", "raw_stage1.txt", "raw_stage2.txt", "model.json", "record.json"] {
            assert!(dir.join(f).is_file(), "{f}");
        }
        assert_eq!(sum.records[1].raw_responses.len(), 2);
    }

    #[test]
    fn verifier_falls_back_to_stage_one() {
        let (_tmp, cfg) = setup("[\"cot-verifier\"]");
        let p: Arc<dyn Provider> = Arc::new(Scripted(vec![DOC, "I could not improve it."]));
        let sum = run_experiment_with(&cfg, vec![("p".into(), Ok(p))]).unwrap();
        let r = &sum.records[0];
        assert_eq!(r.outcome, Outcome::Ok);
        assert_eq!(r.model_stage, Some(1));
        assert!(r.warnings.iter().any(|w| w.contains("using stage 1")));
    }

    #[test]
    fn extraction_failure_keeps_raw_response() {
        let (_tmp, cfg) = setup("[\"baseline\"]");
        let p: Arc<dyn Provider> = Arc::new(Scripted(vec!["no json here"]));
        let sum = run_experiment_with(&cfg, vec![("p".into(), Ok(p))]).unwrap();
        let r = &sum.records[0];
        assert_eq!(r.outcome, Outcome::ExtractionFailed);
        assert_eq!(std::fs::read_to_string(r.dir.join("raw_stage1.txt")).unwrap(), "no json here");
        assert!(r.dir.join(EXTRACTION_ERROR_FILE).is_file());
        assert!(!r.dir.join(MODEL_FILE).exists());
    }

    #[test]
    fn provider_failure_is_materialized() {
        let (_tmp, cfg) = setup("[\"baseline\", \"cot\"]");
        let err = Err(ProviderError::MissingCredential { env: "KEY".into() });
        let sum = run_experiment_with(&cfg, vec![("p".into(), err)]).unwrap();
        assert_eq!(sum.count(Outcome::ProviderError), 2);
        assert!(sum.records.iter().all(|r| r.dir.join(RECORD_FILE).is_file()));
    }

    #[test]
    fn transient_errors_are_retried() {
        let (_tmp, cfg) = setup("[\"baseline\"]");
        let p: Arc<dyn Provider> = Arc::new(Flaky(AtomicUsize::new(0)));
        let sum = run_experiment_with(&cfg, vec![("p".into(), Ok(p))]).unwrap();
        assert_eq!(sum.records[0].outcome, Outcome::Ok);
        assert_eq!(sum.records[0].stages[0].attempts, 3);
    }
}
