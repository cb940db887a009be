// SPDX-License-Identifier: Apache-2.0

//! TOML configuration.

use crate::agents::{AgentError, AgentRole, Backend, BackendConfig, DeterministicBackend};
use crate::fixer::Agents;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentsConfig {
    /// Backend for roles without their own entry.
    pub default: BackendConfig,
    /// Per-role overrides keyed by role name (`analyzer`, `scorer`, ...).
    pub roles: BTreeMap<String, BackendConfig>,
    /// Evaluator group members. When empty, `group_size` seeded
    /// deterministic variants are used.
    pub evaluators: Vec<BackendConfig>,
    pub group_size: Option<u32>,
}

impl AgentsConfig {
    pub fn check(&self) -> Result<(), AgentError> {
        self.default.check()?;
        for (name, c) in &self.roles {
            AgentRole::parse(name).ok_or_else(|| AgentError::Config(format!("unknown role `{name}`")))?;
            c.check()?;
        }
        self.evaluators.iter().try_for_each(BackendConfig::check)
    }

    pub fn for_role(&self, role: AgentRole) -> &BackendConfig {
        self.roles.get(role.as_str()).unwrap_or(&self.default)
    }

    pub fn backend(&self, role: AgentRole) -> Result<Box<dyn Backend>, AgentError> {
        self.for_role(role).build()
    }

    /// Backends for the repair loop.
    pub fn fixer_agents(&self) -> Result<Agents, AgentError> {
        self.check()?;
        let evaluators: Vec<Box<dyn Backend>> = if self.evaluators.is_empty() {
            let n = self.group_size.unwrap_or(crate::fixer::DEFAULT_GROUP_SIZE).max(1);
            let base = self.for_role(AgentRole::EvaluatorGroup);
            (0..n)
                .map(|v| match base.kind {
                    crate::agents::BackendKind::Deterministic => {
                        Ok(Box::new(DeterministicBackend::variant(v)) as Box<dyn Backend>)
                    }
                    crate::agents::BackendKind::Http => base.build(),
                })
                .collect::<Result<_, _>>()?
        } else {
            self.evaluators.iter().map(BackendConfig::build).collect::<Result<_, _>>()?
        };
        Ok(Agents { analyzer: self.backend(AgentRole::Analyzer)?, evaluators, scorer: self.backend(AgentRole::Scorer)? })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub device: String,
    /// Kernel problem size.
    pub size: u64,
    /// Repair and tuning budget.
    pub budget: usize,
    /// Resource caps for tuning, as `dsp=..,ff=..,lut=..`.
    pub caps: String,
    pub agents: AgentsConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 42,
            device: "zcu106".into(),
            size: super::corpus::DEFAULT_SIZE,
            budget: 5,
            caps: "dsp=0.6,ff=0.2,lut=0.2".into(),
            agents: AgentsConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let c: Config = toml::from_str(text).map_err(|e| e.to_string())?;
        c.agents.check().map_err(|e| e.to_string())?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text)
    }
}
