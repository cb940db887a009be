// SPDX-License-Identifier: Apache-2.0

//! Mnemonic-indexed repository of error knowledge slices.

mod seed;
mod text;

pub use text::{keywords, overlap};

use crate::agents::{complete, AgentError, AgentRole, Backend, Context};
use crate::diagnostics::{records_json, verify, verify_against, Category, ErrorRecord, DEFAULT_DIFF_RUNS};
use crate::frontend::{parse_str, SourceUnit};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Minimum keyword overlap for a fuzzy match.
pub const MATCH_THRESHOLD: f64 = 0.5;

/// Seed used when a slice's examples are compared by simulation.
const EXAMPLE_SEED: u64 = 1;

/// Localization and diagnosis templates. Holes are `{line}`, `{snippet}`,
/// `{identifier}` and `{message}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cot {
    pub localization_template: String,
    pub diagnosis_template: String,
}

/// Holes understood by [`Cot::render`].
pub const HOLES: [&str; 4] = ["{line}", "{snippet}", "{identifier}", "{message}"];

impl Cot {
    /// Fills both templates from a record.
    pub fn render(&self, record: &ErrorRecord) -> (String, String) {
        (fill(&self.localization_template, record), fill(&self.diagnosis_template, record))
    }
}

fn fill(template: &str, r: &ErrorRecord) -> String {
    template
        .replace("{line}", &r.line.to_string())
        .replace("{snippet}", &r.snippet)
        .replace("{identifier}", &identifier(r))
        .replace("{message}", &r.message)
}

/// First back-quoted name in the record message, else the snippet.
pub fn identifier(r: &ErrorRecord) -> String {
    let mut parts = r.message.split('`');
    match (parts.next(), parts.next()) {
        (Some(_), Some(id)) if !id.is_empty() => id.to_string(),
        _ => r.snippet.clone(),
    }
}

fn has_hole(t: &str) -> bool {
    HOLES.iter().any(|h| t.contains(h))
}

/// One knowledge entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSlice {
    pub category: Category,
    pub error_type: String,
    pub mnemonic: String,
    pub description: String,
    pub cot: Cot,
    pub example_buggy: String,
    pub example_fixed: String,
}

impl ErrorSlice {
    /// Text the fuzzy matcher compares against.
    pub fn match_text(&self) -> String {
        format!("{} {} {} {}", self.error_type, self.description, self.cot.localization_template, self.cot.diagnosis_template)
    }

    /// Structural checks that do not run the verifier.
    pub fn check_form(&self) -> Result<(), String> {
        if self.mnemonic.len() != 3 || !self.mnemonic.chars().all(|c| c.is_ascii_uppercase()) {
            return Err(format!("mnemonic `{}` must be three uppercase letters", self.mnemonic));
        }
        if self.error_type.trim().is_empty() || self.description.trim().is_empty() {
            return Err("error type and description must be non-empty".into());
        }
        if !has_hole(&self.cot.localization_template) || !has_hole(&self.cot.diagnosis_template) {
            return Err("both templates need at least one parameter hole".into());
        }
        Ok(())
    }

    /// The buggy example reports exactly this mnemonic and the fixed example
    /// is free of it. Functional mnemonics compare the two by simulation.
    pub fn check_examples(&self) -> Result<(), String> {
        let buggy = parse_str(&self.example_buggy).map_err(|e| format!("example_buggy does not parse: {e}"))?;
        let fixed = if self.example_fixed.trim().is_empty() {
            None
        } else {
            Some(parse_str(&self.example_fixed).map_err(|e| format!("example_fixed does not parse: {e}"))?)
        };
        let report = match (&fixed, self.mnemonic.as_str()) {
            (Some(f), "FIN") => verify_against(&buggy, f, DEFAULT_DIFF_RUNS, EXAMPLE_SEED),
            _ => verify(&buggy),
        };
        if !report.has(&self.mnemonic) {
            return Err(format!("example_buggy verifies without a {} record", self.mnemonic));
        }
        if let Some(other) = report.records.iter().find(|r| !r.mnemonic.eq_ignore_ascii_case(&self.mnemonic)) {
            return Err(format!("example_buggy also reports {}", other.mnemonic));
        }
        if let Some(f) = &fixed {
            if verify(f).has(&self.mnemonic) {
                return Err(format!("example_fixed still reports {}", self.mnemonic));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BugragError {
    #[error("no slice for mnemonic `{0}`")]
    NotFound(String),
    #[error("duplicate slice {mnemonic}: {reason}")]
    DuplicateSlice { mnemonic: String, reason: String },
    #[error("invalid slice: {0}")]
    Validation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("repository file: {0}")]
    Io(#[from] std::io::Error),
    #[error("repository file is not a slice array: {0}")]
    Format(#[from] serde_json::Error),
}

/// The slice store. Slices are keyed by upper-case mnemonic.
#[derive(Clone, Debug, PartialEq)]
pub struct Repository {
    slices: BTreeMap<String, ErrorSlice>,
    pub version: u64,
}

impl Default for Repository {
    fn default() -> Self {
        Repository::seeded()
    }
}

impl Repository {
    /// The ten cataloged slices at version 1.
    pub fn seeded() -> Self {
        let slices = seed::slices().into_iter().map(|s| (s.mnemonic.clone(), s)).collect();
        Repository { slices, version: 1 }
    }

    /// Slices in mnemonic order.
    pub fn slices(&self) -> impl Iterator<Item = &ErrorSlice> {
        self.slices.values()
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Case-insensitive exact lookup.
    pub fn lookup(&self, mnemonic: &str) -> Result<&ErrorSlice, BugragError> {
        self.slices.get(&mnemonic.to_ascii_uppercase()).ok_or_else(|| BugragError::NotFound(mnemonic.to_string()))
    }

    /// Exact mnemonic match, else the best keyword overlap between the
    /// record message and a slice at or above [`MATCH_THRESHOLD`].
    pub fn match_record(&self, record: &ErrorRecord) -> Option<&ErrorSlice> {
        if let Ok(s) = self.lookup(&record.mnemonic) {
            return Some(s);
        }
        self.best_match(&record.message).map(|(s, _)| s)
    }

    /// Highest-overlap slice for `text`; ties go to the earlier mnemonic.
    pub fn best_match(&self, text: &str) -> Option<(&ErrorSlice, f64)> {
        let mut best: Option<(&ErrorSlice, f64)> = None;
        for s in self.slices.values() {
            let score = overlap(text, &s.match_text());
            if score >= MATCH_THRESHOLD && best.is_none_or(|(_, b)| score > b) {
                best = Some((s, score));
            }
        }
        best
    }

    /// Asks the bug-analysis agent for a slice covering records that no
    /// existing slice matches.
    pub fn propose_new_slice(
        &self,
        code: &SourceUnit,
        records: &[ErrorRecord],
        backend: &dyn Backend,
    ) -> Result<ErrorSlice, BugragError> {
        if records.is_empty() {
            return Err(BugragError::Precondition("no records to analyze".into()));
        }
        if let Some(r) = records.iter().find(|r| self.match_record(r).is_some()) {
            return Err(BugragError::Precondition(format!("record {} already matches a slice", r.mnemonic)));
        }
        let known: Vec<&str> = self.slices.keys().map(String::as_str).collect();
        let ctx = Context::new().with("code", &code.text).with("errors", &records_json(records)).with("known", &known.join(","));
        let resp = complete(AgentRole::BugAnalyzer, &ctx, backend)?;
        serde_json::from_value(resp.parsed).map_err(|e| BugragError::Validation(e.to_string()))
    }

    /// Adds a novel, self-consistent slice and bumps the version.
    pub fn expand(&mut self, candidate: ErrorSlice) -> Result<u64, BugragError> {
        candidate.check_form().map_err(BugragError::Validation)?;
        if self.slices.contains_key(&candidate.mnemonic) {
            return Err(BugragError::DuplicateSlice {
                mnemonic: candidate.mnemonic.clone(),
                reason: "mnemonic already in use".into(),
            });
        }
        if let Some((existing, score)) = self.best_match(&candidate.description) {
            return Err(BugragError::DuplicateSlice {
                mnemonic: candidate.mnemonic.clone(),
                reason: format!("description overlaps {} ({score:.2})", existing.mnemonic),
            });
        }
        candidate.check_examples().map_err(BugragError::Validation)?;
        self.slices.insert(candidate.mnemonic.clone(), candidate);
        self.version += 1;
        Ok(self.version)
    }

    /// Serializes the slices as a JSON array.
    pub fn to_json(&self) -> String {
        let v: Vec<&ErrorSlice> = self.slices.values().collect();
        serde_json::to_string_pretty(&v).expect("slices serialize")
    }

    /// Parses a slice array. The version counts slices beyond the seed set.
    pub fn from_json(text: &str) -> Result<Self, BugragError> {
        let list: Vec<ErrorSlice> = serde_json::from_str(text)?;
        let mut slices = BTreeMap::new();
        for s in list {
            s.check_form().map_err(BugragError::Validation)?;
            let key = s.mnemonic.clone();
            if slices.insert(key.clone(), s).is_some() {
                return Err(BugragError::DuplicateSlice { mnemonic: key, reason: "listed twice".into() });
            }
        }
        let seeds = seed::slices();
        let extra = slices.keys().filter(|k| !seeds.iter().any(|s| &s.mnemonic == *k)).count();
        Ok(Repository { slices, version: 1 + extra as u64 })
    }

    pub fn load(path: &Path) -> Result<Self, BugragError> {
        Repository::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), BugragError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
