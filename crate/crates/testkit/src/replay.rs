//! Build replay files from a directory of canned responses named
//! `<scenario>__<strategy>__stage<N>.txt`, so recorded keys always match the
//! current prompt templates.

use std::io;
use std::path::Path;

use erforge::harness::{build_prompt, prompt_hash, ExperimentConfig, ReplayFile, INTERCHANGE_FORMAT_SPEC};

pub fn response_file_name(scenario: &str, strategy: &str, stage: usize) -> String {
    format!("{scenario}__{strategy}__stage{stage}.txt")
}

/// Replay entries for every scenario x strategy cell of `cfg` that has a
/// stage-1 response in `responses`. Later stages are keyed on the prompt
/// that embeds the earlier response, exactly as the runner will send it.
pub fn build_replay(cfg: &ExperimentConfig, responses: &Path) -> io::Result<ReplayFile> {
    let format_spec = match &cfg.format_spec {
        Some(p) => std::fs::read_to_string(p)?,
        None => INTERCHANGE_FORMAT_SPEC.to_owned(),
    };
    let mut file = ReplayFile::default();
    for path in &cfg.scenarios {
        let id = ExperimentConfig::scenario_id(path).expect("config validated");
        let requirements = std::fs::read_to_string(path)?;
        for &strategy in &cfg.strategies {
            let bundle = build_prompt(strategy, &requirements, &format_spec)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            let mut previous: Option<String> = None;
            for stage in 0..bundle.stages.len() {
                let name = response_file_name(&id, strategy.id(), stage + 1);
                let Ok(text) = std::fs::read_to_string(responses.join(&name)) else { break };
                let messages = bundle.resolve_stage(stage, previous.as_deref());
                file.responses.insert(prompt_hash(&messages), text.clone());
                previous = Some(text);
            }
        }
    }
    Ok(file)
}

pub fn replay_json(file: &ReplayFile) -> String {
    serde_json::to_string_pretty(file).expect("replay file serializes") + "\n"
}
