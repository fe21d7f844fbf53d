use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{BackendConfig, CompletionRequest, CompletionResponse, LlmError};

/// Client for a chat-completions-compatible endpoint. The prompt is sent as a
/// single user message; only temperature and max_tokens are set, every other
/// sampling parameter is left to the server.
pub struct HttpChat {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    max_retries: u32,
    backoff_base: Duration,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Deserialize, Default)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl HttpChat {
    pub fn new(config: &BackendConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| LlmError::Config(format!("building http client: {e}")))?;
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        Ok(HttpChat {
            client,
            endpoint: config.endpoint_url.clone().unwrap_or_default(),
            api_key,
            max_retries: config.max_retries,
            backoff_base: config.backoff_base,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.attempt(request, attempt) {
                Err(e) if e.is_retryable() && attempt <= self.max_retries => {
                    let delay = self.backoff_base.saturating_mul(1 << (attempt - 1).min(16));
                    log::warn!("{e}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                }
                Err(LlmError::Network {
                    prompt_hash,
                    message,
                    ..
                }) => {
                    return Err(LlmError::Network {
                        prompt_hash,
                        attempts: attempt,
                        message,
                    })
                }
                other => return other,
            }
        }
    }

    fn attempt(
        &self,
        request: &CompletionRequest,
        attempt: u32,
    ) -> Result<CompletionResponse, LlmError> {
        let prompt_hash = request.prompt_hash();
        let body = json!({
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut builder = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| LlmError::Network {
            prompt_hash: prompt_hash.clone(),
            attempts: attempt,
            message: e.to_string(),
        })?;
        let status = response.status();
        let text = response.text().map_err(|e| LlmError::Network {
            prompt_hash: prompt_hash.clone(),
            attempts: attempt,
            message: e.to_string(),
        })?;
        if !status.is_success() {
            return Err(LlmError::Status {
                prompt_hash,
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| LlmError::Malformed {
                prompt_hash: prompt_hash.clone(),
                reason: e.to_string(),
            })?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Malformed {
                prompt_hash: prompt_hash.clone(),
                reason: "no choices[0].message.content".into(),
            })?;
        let usage = parsed.usage.unwrap_or_default();
        Ok(CompletionResponse {
            text: content,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
            cached: false,
        })
    }
}
