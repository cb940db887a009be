// SPDX-License-Identifier: Apache-2.0

//! Agent roles, prompt templates, response schemas and backends.

mod http;
mod rules;

pub use http::HttpBackend;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Repair retries allowed after the first response.
pub const MAX_RETRIES: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Transformer,
    Optimizer,
    Analyzer,
    Fixer,
    EvaluatorGroup,
    Scorer,
    CotGenerator,
    Inserter,
    BugAnalyzer,
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// JSON type a response field must have.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    String,
    Number,
    Array,
    Object,
}

impl FieldKind {
    fn accepts(self, v: &Value) -> bool {
        match self {
            FieldKind::String => v.is_string(),
            FieldKind::Number => v.is_number(),
            FieldKind::Array => v.is_array(),
            FieldKind::Object => v.is_object(),
        }
    }
}

use FieldKind::{Array, Object, String as Str};

const SUGGESTION_SCHEMA: &[(&str, FieldKind)] =
    &[("localization", Array), ("diagnosis", Str), ("edits", Array), ("reasoning", Str)];

impl AgentRole {
    pub const ALL: [AgentRole; 9] = [
        AgentRole::Transformer,
        AgentRole::Optimizer,
        AgentRole::Analyzer,
        AgentRole::Fixer,
        AgentRole::EvaluatorGroup,
        AgentRole::Scorer,
        AgentRole::CotGenerator,
        AgentRole::Inserter,
        AgentRole::BugAnalyzer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentRole::Transformer => "transformer",
            AgentRole::Optimizer => "optimizer",
            AgentRole::Analyzer => "analyzer",
            AgentRole::Fixer => "fixer",
            AgentRole::EvaluatorGroup => "evaluator_group",
            AgentRole::Scorer => "scorer",
            AgentRole::CotGenerator => "cot_generator",
            AgentRole::Inserter => "inserter",
            AgentRole::BugAnalyzer => "bug_analyzer",
        }
    }

    pub fn parse(s: &str) -> Option<AgentRole> {
        AgentRole::ALL.into_iter().find(|r| r.as_str() == s)
    }

    /// Context keys the template requires.
    pub fn holes(self) -> &'static [&'static str] {
        match self {
            AgentRole::Transformer => &["code"],
            AgentRole::Optimizer => &["code", "caps", "device"],
            AgentRole::Analyzer | AgentRole::EvaluatorGroup => &["code", "errors", "slice"],
            AgentRole::Fixer => &["code", "suggestion"],
            AgentRole::Scorer => &["code", "errors", "candidates"],
            AgentRole::CotGenerator => &["code", "errors", "slice", "edits"],
            AgentRole::Inserter => &["code", "slice", "seed"],
            AgentRole::BugAnalyzer => &["code", "errors", "known"],
        }
    }

    /// Required top-level fields of the JSON response.
    pub fn schema(self) -> &'static [(&'static str, FieldKind)] {
        match self {
            AgentRole::Transformer | AgentRole::Fixer => &[("code", Str), ("reasoning", Str)],
            AgentRole::Optimizer => &[("directives", Array), ("reasoning", Str)],
            AgentRole::Analyzer | AgentRole::EvaluatorGroup => SUGGESTION_SCHEMA,
            AgentRole::Scorer => &[("scores", Array), ("reasoning", Str)],
            AgentRole::CotGenerator => &[("localization", Str), ("diagnosis", Str), ("suggestion", Str)],
            AgentRole::Inserter => &[("code", Str), ("note", Object), ("reasoning", Str)],
            AgentRole::BugAnalyzer => &[
                ("category", Str),
                ("error_type", Str),
                ("mnemonic", Str),
                ("description", Str),
                ("cot", Object),
                ("example_buggy", Str),
                ("example_fixed", Str),
            ],
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            AgentRole::Transformer => {
                "Rewrite the following C function into synthesizable HLS-C without changing its behavior.\n\
                 Code:\n{{code}}\n"
            }
            AgentRole::Optimizer => {
                "Allocate PIPELINE, UNROLL and ARRAY_PARTITION directives for this design on device {{device}} \
                 under resource caps {{caps}}. Never use DATAFLOW.\nCode:\n{{code}}\n"
            }
            AgentRole::Analyzer | AgentRole::EvaluatorGroup => {
                "Localize, diagnose and propose structured edits for the reported HLS errors.\n\
                 Knowledge slice:\n{{slice}}\nErrors (JSON):\n{{errors}}\nCode:\n{{code}}\n"
            }
            AgentRole::Fixer => {
                "Apply exactly the listed edits to the code and return the result. Do not change anything else.\n\
                 Suggestion:\n{{suggestion}}\nCode:\n{{code}}\n"
            }
            AgentRole::Scorer => {
                "Score each candidate suggestion for schema validity, slice consistency, predicted error \
                 reduction and edit minimality.\nCandidates:\n{{candidates}}\nErrors (JSON):\n{{errors}}\nCode:\n{{code}}\n"
            }
            AgentRole::CotGenerator => {
                "Explain the repair step by step: localization, diagnosis, then the correction suggestion.\n\
                 Knowledge slice:\n{{slice}}\nEdits:\n{{edits}}\nErrors (JSON):\n{{errors}}\nCode:\n{{code}}\n"
            }
            AgentRole::Inserter => {
                "Insert exactly one instance of the error described by the slice below, using seed {{seed}} to \
                 choose the site. Record the site and the original fragment.\nSlice:\n{{slice}}\nCode:\n{{code}}\n"
            }
            AgentRole::BugAnalyzer => {
                "The errors below match no known error type (known mnemonics: {{known}}). Describe a new error \
                 slice with a fresh three-letter mnemonic, templates and examples.\nErrors (JSON):\n{{errors}}\nCode:\n{{code}}\n"
            }
        }
    }
}

/// Named template inputs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context(pub BTreeMap<String, String>);

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub raw: String,
    pub parsed: Value,
    pub retries_used: u32,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AgentError {
    #[error("{role} prompt is missing hole `{hole}`")]
    MissingHole { role: AgentRole, hole: String },
    #[error("{role} response violates its schema after {retries} retries: {detail}")]
    SchemaViolation { role: AgentRole, retries: u32, detail: String },
    #[error("transport failure: {0}")]
    TransportFailure(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

/// Fills every `{{hole}}` of the role template.
pub fn render_prompt(role: AgentRole, ctx: &Context) -> Result<String, AgentError> {
    let mut out = role.template().to_string();
    for hole in role.holes() {
        let v = ctx.get(hole).ok_or_else(|| AgentError::MissingHole { role, hole: hole.to_string() })?;
        out = out.replace(&format!("{{{{{hole}}}}}"), v);
    }
    Ok(out)
}

/// Checks a response against the role schema.
pub fn validate(role: AgentRole, v: &Value) -> Result<(), String> {
    let obj = v.as_object().ok_or("response is not a JSON object")?;
    for (field, kind) in role.schema() {
        match obj.get(*field) {
            None => return Err(format!("missing field `{field}`")),
            Some(x) if !kind.accepts(x) => return Err(format!("field `{field}` must be {kind:?}")),
            _ => {}
        }
    }
    Ok(())
}

/// Extracts the JSON object from a reply, tolerating code fences.
pub fn parse_reply(raw: &str) -> Result<Value, String> {
    let t = raw.trim();
    let body = match (t.find('{'), t.rfind('}')) {
        (Some(a), Some(b)) if a <= b => &t[a..=b],
        _ => return Err("no JSON object in reply".into()),
    };
    serde_json::from_str(body).map_err(|e| format!("invalid JSON: {e}"))
}

/// A completion provider.
pub trait Backend: Send + Sync {
    fn label(&self) -> String;

    fn max_retries(&self) -> u32 {
        MAX_RETRIES
    }

    /// Returns the raw reply for a rendered prompt.
    fn send(&self, role: AgentRole, ctx: &Context, prompt: &str) -> Result<String, AgentError>;
}

/// Renders the prompt, sends it and validates the reply, re-prompting with
/// the validation error up to the backend's retry limit.
pub fn complete(role: AgentRole, ctx: &Context, backend: &dyn Backend) -> Result<AgentResponse, AgentError> {
    let base = render_prompt(role, ctx)?;
    let retries = backend.max_retries().min(MAX_RETRIES);
    let mut prompt = base.clone();
    let mut detail = String::new();
    for attempt in 0..=retries {
        let raw = backend.send(role, ctx, &prompt)?;
        match parse_reply(&raw).and_then(|v| validate(role, &v).map(|_| v)) {
            Ok(parsed) => return Ok(AgentResponse { raw, parsed, retries_used: attempt }),
            Err(e) => {
                detail = e;
                prompt = format!(
                    "{base}\nYour previous reply was rejected: {detail}. Reply with one JSON object containing the fields {}.\n",
                    role.schema().iter().map(|(f, _)| *f).collect::<Vec<_>>().join(", ")
                );
            }
        }
    }
    Err(AgentError::SchemaViolation { role, retries, detail })
}

/// Rule-based offline backend. Replies are pure functions of
/// `(role, context, variant)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DeterministicBackend {
    /// Evaluator variant; 0 is the primary policy.
    pub variant: u32,
}

impl DeterministicBackend {
    pub fn new() -> Self {
        DeterministicBackend { variant: 0 }
    }

    pub fn variant(variant: u32) -> Self {
        DeterministicBackend { variant }
    }
}

impl Backend for DeterministicBackend {
    fn label(&self) -> String {
        format!("deterministic#{}", self.variant)
    }

    fn send(&self, role: AgentRole, ctx: &Context, _prompt: &str) -> Result<String, AgentError> {
        let v = rules::respond(role, ctx, self.variant);
        Ok(serde_json::to_string(&v).expect("values serialize"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Deterministic,
    Http,
}

/// How to reach a backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// Environment variable holding the API credential.
    pub credential_env: Option<String>,
    pub temperature: f64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Deterministic,
            endpoint: None,
            model: String::new(),
            timeout_secs: 60,
            max_retries: MAX_RETRIES,
            credential_env: None,
            temperature: 0.0,
        }
    }
}

impl BackendConfig {
    pub fn deterministic() -> Self {
        BackendConfig::default()
    }

    pub fn check(&self) -> Result<(), AgentError> {
        if self.max_retries > MAX_RETRIES {
            return Err(AgentError::Config(format!("max_retries must be at most {MAX_RETRIES}")));
        }
        match self.kind {
            BackendKind::Deterministic => Ok(()),
            BackendKind::Http => {
                if self.endpoint.as_deref().is_none_or(str::is_empty) {
                    return Err(AgentError::Config("http backend needs an endpoint".into()));
                }
                if self.credential_env.as_deref().is_none_or(str::is_empty) {
                    return Err(AgentError::Config("http backend needs a credential variable".into()));
                }
                if self.timeout_secs == 0 {
                    return Err(AgentError::Config("http backend needs a positive timeout".into()));
                }
                Ok(())
            }
        }
    }

    /// Builds the backend after checking the configuration.
    pub fn build(&self) -> Result<Box<dyn Backend>, AgentError> {
        self.check()?;
        Ok(match self.kind {
            BackendKind::Deterministic => Box::new(DeterministicBackend::new()),
            BackendKind::Http => Box::new(HttpBackend::new(self.clone())),
        })
    }
}
