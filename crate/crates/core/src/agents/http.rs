// SPDX-License-Identifier: Apache-2.0

//! Generic chat-completion backend.

use super::{AgentError, AgentRole, Backend, BackendConfig, Context};
use serde_json::{json, Value};
use std::time::Duration;

#[derive(Clone, Debug)]
pub struct HttpBackend {
    config: BackendConfig,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Self {
        HttpBackend { config }
    }

    /// Request body for one prompt.
    pub fn request_body(&self, role: AgentRole, prompt: &str) -> Value {
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": format!("You are the {role} agent of an HLS design assistant. Reply with a single JSON object.")},
                {"role": "user", "content": prompt},
            ],
            "temperature": self.config.temperature,
        })
    }
}

/// Assistant text from a chat-completion reply; falls back to the whole body.
fn reply_text(body: &str) -> String {
    let Ok(v) = serde_json::from_str::<Value>(body) else { return body.to_string() };
    v.pointer("/choices/0/message/content")
        .or_else(|| v.pointer("/message/content"))
        .or_else(|| v.get("content"))
        .and_then(Value::as_str)
        .map_or_else(|| body.to_string(), str::to_string)
}

impl Backend for HttpBackend {
    fn label(&self) -> String {
        format!("http:{}", self.config.model)
    }

    fn max_retries(&self) -> u32 {
        self.config.max_retries
    }

    fn send(&self, role: AgentRole, _ctx: &Context, prompt: &str) -> Result<String, AgentError> {
        let endpoint = self.config.endpoint.as_deref().ok_or_else(|| AgentError::Config("missing endpoint".into()))?;
        let var = self.config.credential_env.as_deref().unwrap_or_default();
        let key = std::env::var(var).unwrap_or_default();
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.config.timeout_secs.max(1))))
            .http_status_as_error(true)
            .build()
            .into();
        let body = self.request_body(role, prompt).to_string();
        let mut req = agent.post(endpoint).header("Content-Type", "application/json");
        if !key.is_empty() {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let resp = req.send(body.as_str()).map_err(|e| AgentError::TransportFailure(e.to_string()))?;
        let text = resp.into_body().read_to_string().map_err(|e| AgentError::TransportFailure(e.to_string()))?;
        Ok(reply_text(&text))
    }
}
