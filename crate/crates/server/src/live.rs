use std::time::Duration;

use serde_json::{json, Value};

use voxchat::pipeline::{Provider, ProviderError, ProviderRequest};

/// Client for an OpenAI-style chat completions endpoint.
///
/// Calls block, so they must run off the async executor.
#[derive(Debug, Clone)]
pub struct LiveProvider {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    timeout: Duration,
}

impl LiveProvider {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        model: impl Into<String>,
        timeout: Duration,
    ) -> Result<Self, ProviderError> {
        let endpoint = endpoint.into();
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(ProviderError::Config(format!("endpoint `{endpoint}` is not an http(s) URL")));
        }
        if timeout.is_zero() {
            return Err(ProviderError::Config("timeout must be positive".into()));
        }
        Ok(Self { endpoint, api_key, model: model.into(), timeout })
    }

    fn body(&self, request: &ProviderRequest) -> Value {
        let mut messages = vec![json!({ "role": "system", "content": request.system })];
        messages.extend(request.messages.iter().map(|m| json!({ "role": m.role, "content": m.content })));
        json!({ "model": self.model, "messages": messages, "temperature": 0 })
    }
}

/// Pulls the reply text out of a completion. Tool calls are turned into the
/// `{"calls": [...]}` payload the response parser reads.
pub fn completion_text(body: &Value) -> Option<String> {
    let message = body.get("choices")?.get(0)?.get("message")?;
    if let Some(calls) = message.get("tool_calls").and_then(Value::as_array).filter(|c| !c.is_empty()) {
        let calls: Vec<Value> = calls
            .iter()
            .filter_map(|c| {
                let f = c.get("function")?;
                Some(json!({ "name": f.get("name")?, "arguments": f.get("arguments").cloned().unwrap_or(json!({})) }))
            })
            .collect();
        return Some(json!({ "calls": calls }).to_string());
    }
    message.get("content")?.as_str().map(str::to_string)
}

impl Provider for LiveProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        let mut call = client.post(&self.endpoint).json(&self.body(request));
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }
        let response = call.send().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout(self.timeout.as_secs())
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            return Err(ProviderError::Transport(format!("endpoint returned {status}")));
        }
        let body: Value = response.json().map_err(|e| ProviderError::Transport(e.to_string()))?;
        completion_text(&body).ok_or_else(|| ProviderError::Transport("completion had no message".into()))
    }
}
