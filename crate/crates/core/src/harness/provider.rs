//! Model providers: recorded replays and an OpenAI-compatible HTTP client.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::prompt::Message;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("credential variable `{env}` is not set")]
    MissingCredential { env: String },
    #[error("provider rejected the credentials: {0}")]
    Unauthorized(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed provider response: {0}")]
    BadResponse(String),
    #[error("no recorded response for prompt {hash}")]
    NoRecording { hash: String },
    #[error("provider setup failed: {0}")]
    Setup(String),
}

impl ProviderError {
    /// Whether a retry has any chance of succeeding.
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Transport(_))
    }
}

/// Something that turns a message list into response text.
pub trait Provider: Send + Sync {
    fn send(&self, messages: &[Message]) -> Result<String, ProviderError>;

    /// Decoding parameters recorded alongside each response.
    fn decoding(&self) -> Value {
        Value::Null
    }
}

/// Hex SHA-256 of the JSON serialization of `messages`.
pub fn prompt_hash(messages: &[Message]) -> String {
    let bytes = serde_json::to_vec(messages).expect("messages always serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// On-disk replay file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayFile {
    /// Response text keyed by [`prompt_hash`].
    #[serde(default)]
    pub responses: BTreeMap<String, String>,
    /// Returned for prompts that have no recording.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

/// Replays recorded responses, keyed by prompt hash.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    file: ReplayFile,
    source: Option<PathBuf>,
}

impl ReplayProvider {
    pub fn new(file: ReplayFile) -> Self {
        Self { file, source: None }
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Setup(format!("cannot read {}: {e}", path.display())))?;
        let file: ReplayFile = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Setup(format!("bad replay file {}: {e}", path.display())))?;
        Ok(Self { file, source: Some(path.to_owned()) })
    }
}

impl Provider for ReplayProvider {
    fn send(&self, messages: &[Message]) -> Result<String, ProviderError> {
        let hash = prompt_hash(messages);
        self.file
            .responses
            .get(&hash)
            .or(self.file.fallback.as_ref())
            .cloned()
            .ok_or(ProviderError::NoRecording { hash })
    }

    fn decoding(&self) -> Value {
        json!({
            "kind": "replay",
            "source": self.source.as_ref().map(|p| p.display().to_string()),
        })
    }
}

/// Settings for an OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpSettings {
    /// Base URL, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model: String,
    pub credential_env: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub timeout_secs: u64,
}

#[cfg(feature = "http")]
pub use http::HttpProvider;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde_json::{json, Value};

    use super::{HttpSettings, Provider, ProviderError};
    use crate::harness::prompt::Message;

    pub struct HttpProvider {
        settings: HttpSettings,
        api_key: String,
        agent: ureq::Agent,
    }

    impl HttpProvider {
        /// Resolve the credential now so a missing key fails before any run.
        pub fn new(settings: HttpSettings) -> Result<Self, ProviderError> {
            let api_key = std::env::var(&settings.credential_env)
                .ok()
                .filter(|k| !k.trim().is_empty())
                .ok_or_else(|| ProviderError::MissingCredential { env: settings.credential_env.clone() })?;
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(settings.timeout_secs)))
                .http_status_as_error(false)
                .build()
                .into();
            Ok(Self { settings, api_key, agent })
        }

        fn url(&self) -> String {
            format!("{}/chat/completions", self.settings.endpoint.trim_end_matches('/'))
        }
    }

    impl Provider for HttpProvider {
        fn send(&self, messages: &[Message]) -> Result<String, ProviderError> {
            let mut body = json!({
                "model": self.settings.model,
                "messages": messages,
                "temperature": self.settings.temperature,
            });
            if let Some(n) = self.settings.max_tokens {
                body["max_tokens"] = json!(n);
            }
            let mut resp = self
                .agent
                .post(&self.url())
                .header("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(&body)
                .map_err(|e| ProviderError::Transport(e.to_string()))?;
            let status = resp.status().as_u16();
            let text = resp.body_mut().read_to_string().map_err(|e| ProviderError::Transport(e.to_string()))?;
            match status {
                200..=299 => {}
                401 | 403 => return Err(ProviderError::Unauthorized(format!("HTTP {status}"))),
                429 | 500..=599 => return Err(ProviderError::Transport(format!("HTTP {status}: {}", snippet(&text)))),
                _ => return Err(ProviderError::BadResponse(format!("HTTP {status}: {}", snippet(&text)))),
            }
            let v: Value = serde_json::from_str(&text).map_err(|e| ProviderError::BadResponse(e.to_string()))?;
            v.pointer("/choices/0/message/content")
                .and_then(Value::as_str)
                .map(str::to_owned)
                .ok_or_else(|| ProviderError::BadResponse("missing choices[0].message.content".to_owned()))
        }

        fn decoding(&self) -> Value {
            json!({
                "kind": "openai",
                "endpoint": self.settings.endpoint,
                "model": self.settings.model,
                "temperature": self.settings.temperature,
                "max_tokens": self.settings.max_tokens,
            })
        }
    }

    fn snippet(s: &str) -> String {
        s.chars().take(200).collect()
    }
}
