//! Text-completion backends.
//!
//! Every stage of the pipeline talks to a [`Completer`]. The shipped
//! implementation, [`LlmClient`], fronts either a chat-completions HTTP
//! endpoint or a [`Script`] of canned responses, optionally behind an on-disk
//! [`ResponseCache`].

mod cache;
mod http;
mod script;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CacheStats, ResponseCache};
pub use http::HttpChat;
pub use script::{Script, ScriptEntry, ScriptMatch};

pub const DEFAULT_TEMPERATURE: f64 = 0.05;
pub const DEFAULT_MAX_TOKENS: u32 = 512;
pub const DEFAULT_API_KEY_ENV: &str = "LLM_API_KEY";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("request {prompt_hash}: network failure after {attempts} attempt(s): {message}")]
    Network {
        prompt_hash: String,
        attempts: u32,
        message: String,
    },
    #[error("request {prompt_hash}: endpoint returned HTTP {status}: {body}")]
    Status {
        prompt_hash: String,
        status: u16,
        body: String,
    },
    #[error("request {prompt_hash}: malformed endpoint response: {reason}")]
    Malformed { prompt_hash: String, reason: String },
    #[error("request {prompt_hash}: no script entry matches the prompt")]
    ScriptMiss { prompt_hash: String },
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("script {path}:{line}: {reason}")]
    Script {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("cache {path}: {source}")]
    Cache {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl LlmError {
    /// Timeouts, connection failures and rate-limit/server statuses.
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Network { .. } => true,
            LlmError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }

    pub fn prompt_hash(&self) -> Option<&str> {
        match self {
            LlmError::Network { prompt_hash, .. }
            | LlmError::Status { prompt_hash, .. }
            | LlmError::Malformed { prompt_hash, .. }
            | LlmError::ScriptMiss { prompt_hash } => Some(prompt_hash),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub model_id: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

fn default_max_tokens() -> u32 {
    DEFAULT_MAX_TOKENS
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>, model_id: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            model_id: model_id.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::Config(format!(
                "temperature must be a finite value >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::Config("max_tokens must be positive".into()));
        }
        Ok(())
    }

    pub fn prompt_hash(&self) -> String {
        prompt_hash(&self.prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    /// Raw model output, untrimmed.
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cached: bool,
}

/// SHA-256 of the prompt text, lowercase hex.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Content address of a request: SHA-256 over length-prefixed model id and
/// prompt, the temperature's IEEE-754 bits and `max_tokens`, all big-endian.
pub fn cache_key(request: &CompletionRequest) -> String {
    let mut h = Sha256::new();
    h.update(b"claimpipe-cache-v1");
    for field in [request.model_id.as_bytes(), request.prompt.as_bytes()] {
        h.update((field.len() as u64).to_be_bytes());
        h.update(field);
    }
    h.update(request.temperature.to_bits().to_be_bytes());
    h.update(request.max_tokens.to_be_bytes());
    hex::encode(h.finalize())
}

/// Anything that can turn a prompt into a completion.
pub trait Completer: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    Scripted,
}

mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    pub api_key_env: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_path: Option<PathBuf>,
    #[serde(rename = "request_timeout_ms", with = "duration_ms")]
    pub request_timeout: Duration,
    pub max_retries: u32,
    #[serde(rename = "backoff_base_ms", with = "duration_ms")]
    pub backoff_base: Duration,
}

impl BackendConfig {
    fn base(kind: BackendKind) -> Self {
        BackendConfig {
            kind,
            endpoint_url: None,
            api_key_env: DEFAULT_API_KEY_ENV.to_owned(),
            script_path: None,
            request_timeout: Duration::from_secs(120),
            max_retries: 3,
            backoff_base: Duration::from_millis(500),
        }
    }

    pub fn http(endpoint_url: impl Into<String>) -> Self {
        BackendConfig {
            endpoint_url: Some(endpoint_url.into()),
            ..Self::base(BackendKind::HttpChat)
        }
    }

    pub fn scripted(script_path: impl Into<PathBuf>) -> Self {
        BackendConfig {
            script_path: Some(script_path.into()),
            ..Self::base(BackendKind::Scripted)
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        match self.kind {
            BackendKind::HttpChat if self.endpoint_url.as_deref().is_none_or(str::is_empty) => Err(
                LlmError::Config("http backend requires an endpoint url".into()),
            ),
            BackendKind::Scripted if self.script_path.is_none() => Err(LlmError::Config(
                "scripted backend requires a script path".into(),
            )),
            _ => Ok(()),
        }
    }
}

enum Backend {
    Http(HttpChat),
    Scripted(Script),
}

/// A configured backend plus optional response cache.
pub struct LlmClient {
    backend: Backend,
    cache: Option<ResponseCache>,
}

impl LlmClient {
    pub fn from_config(
        config: &BackendConfig,
        cache: Option<ResponseCache>,
    ) -> Result<Self, LlmError> {
        config.validate()?;
        let backend = match config.kind {
            BackendKind::HttpChat => Backend::Http(HttpChat::new(config)?),
            BackendKind::Scripted => {
                Backend::Scripted(Script::load(config.script_path.as_ref().unwrap())?)
            }
        };
        Ok(LlmClient { backend, cache })
    }

    pub fn scripted(script: Script, cache: Option<ResponseCache>) -> Self {
        LlmClient {
            backend: Backend::Scripted(script),
            cache,
        }
    }

    pub fn http(http: HttpChat, cache: Option<ResponseCache>) -> Self {
        LlmClient {
            backend: Backend::Http(http),
            cache,
        }
    }
}

impl Completer for LlmClient {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        request.validate()?;
        let key = cache_key(request);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&key)? {
                return Ok(hit);
            }
        }
        let response = match &self.backend {
            Backend::Http(http) => http.complete(request)?,
            Backend::Scripted(script) => script.complete(request)?,
        };
        if let Some(cache) = &self.cache {
            cache.put(&key, &response)?;
        }
        Ok(response)
    }
}

impl<T: Completer + ?Sized> Completer for std::sync::Arc<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        (**self).complete(request)
    }
}
