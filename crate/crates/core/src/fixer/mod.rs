// SPDX-License-Identifier: Apache-2.0

//! Verification-in-the-loop repair: localize, diagnose, suggest, apply and
//! re-verify, escalating to multi-candidate evaluation within a budget.

pub mod canned;
mod edit;

pub use edit::{
    apply_edits, each_stmt, each_stmt_mut, parse_decl_text, parse_expr_text, parse_stmt_text, Applied, Edit, EditError, NodeKind,
};

use crate::agents::{complete, AgentError, AgentRole, Backend, Context, DeterministicBackend};
use crate::bugrag::{ErrorSlice, Repository};
use crate::diagnostics::{records_json, verify, verify_against, ErrorRecord, VerificationReport, DEFAULT_DIFF_RUNS};
use crate::frontend::{emit_ast, parse_str, Ast};
use crate::harness::Thresholds;
use crate::qor::{estimate, DeviceProfile, OpCostTable, QoRReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default iteration budget; the first attempt counts.
pub const DEFAULT_BUDGET: usize = 5;

/// Default number of evaluators consulted on escalation.
pub const DEFAULT_GROUP_SIZE: u32 = 3;

/// Seed for the differential checks run during repair.
pub const VERIFY_SEED: u64 = 7;

/// Rubric weights: schema validity, slice consistency, predicted record
/// reduction, edit minimality.
pub const SCORE_WEIGHTS: [f64; 4] = [0.2, 0.2, 0.4, 0.2];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Localization {
    pub line: u32,
    pub col: u32,
    /// Loop id or array name, when one applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionSource {
    AnalysisAgent,
    Evaluator(u32),
    #[default]
    Deterministic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub localization: Vec<Localization>,
    pub diagnosis: String,
    pub edits: Vec<Edit>,
    /// Free-text reasoning; never interpreted as edits.
    #[serde(default)]
    pub reasoning: String,
    #[serde(default)]
    pub source: SuggestionSource,
}

impl Suggestion {
    pub fn empty(diagnosis: &str) -> Self {
        Suggestion {
            localization: Vec::new(),
            diagnosis: diagnosis.to_string(),
            edits: Vec::new(),
            reasoning: String::new(),
            source: SuggestionSource::Deterministic,
        }
    }
}

/// Rubric result for one candidate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub schema_validity: f64,
    pub slice_consistency: f64,
    pub record_reduction: f64,
    pub edit_minimality: f64,
}

impl Score {
    pub fn new(schema_validity: f64, slice_consistency: f64, record_reduction: f64, edit_minimality: f64) -> Self {
        let [a, b, c, d] = SCORE_WEIGHTS;
        let value = a * schema_validity + b * slice_consistency + c * record_reduction + d * edit_minimality;
        Score { value, schema_validity, slice_consistency, record_reduction, edit_minimality }
    }

    pub fn invalid() -> Self {
        Score::new(0.0, 0.0, 0.0, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Multifaceted,
}

/// One repair attempt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub index: usize,
    pub mode: Mode,
    pub suggestions: Vec<Suggestion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<Score>,
    pub chosen: Option<usize>,
    pub applied: Vec<String>,
    pub report: VerificationReport,
    pub qor: Option<QoRReport>,
    /// Why the attempt made no progress, if it did not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Fixed,
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairTrace {
    pub budget: usize,
    pub initial: VerificationReport,
    pub iterations: Vec<Iteration>,
    pub outcome: Outcome,
}

impl RepairTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Debug, Error)]
pub enum FixError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("agent reply is not a suggestion: {0}")]
    BadSuggestion(String),
    #[error("no evaluator produced a valid suggestion")]
    AllCandidatesInvalid,
    #[error(transparent)]
    Edit(#[from] EditError),
}

/// Backends used by the repair loop.
pub struct Agents {
    pub analyzer: Box<dyn Backend>,
    pub evaluators: Vec<Box<dyn Backend>>,
    pub scorer: Box<dyn Backend>,
}

impl Agents {
    /// Offline backends with `group` evaluator variants.
    pub fn deterministic(group: u32) -> Self {
        Agents {
            analyzer: Box::new(DeterministicBackend::new()),
            evaluators: (0..group.max(1)).map(|v| Box::new(DeterministicBackend::variant(v)) as Box<dyn Backend>).collect(),
            scorer: Box::new(DeterministicBackend::new()),
        }
    }
}

impl Default for Agents {
    fn default() -> Self {
        Agents::deterministic(DEFAULT_GROUP_SIZE)
    }
}

/// Repair settings.
#[derive(Clone, Debug)]
pub struct FixConfig {
    pub thresholds: Thresholds,
    pub budget: usize,
    /// Known-good design for functional checks, when available.
    pub reference: Option<Ast>,
    pub device: DeviceProfile,
    pub costs: OpCostTable,
}

impl FixConfig {
    pub fn new(thresholds: Thresholds) -> Self {
        FixConfig {
            thresholds,
            budget: DEFAULT_BUDGET,
            reference: None,
            device: DeviceProfile::default(),
            costs: OpCostTable::default(),
        }
    }

    pub fn with_reference(mut self, reference: Ast) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }
}

/// Re-parses the printed form so that locations match the text agents see.
fn normalize(ast: &Ast) -> Ast {
    parse_str(&emit_ast(ast)).unwrap_or_else(|_| ast.clone())
}

/// Static verification, plus a differential check when a reference exists.
pub fn check(design: &Ast, reference: Option<&Ast>) -> VerificationReport {
    match reference {
        Some(r) => verify_against(design, r, DEFAULT_DIFF_RUNS, VERIFY_SEED),
        None => verify(design),
    }
}

fn context(design: &Ast, records: &[ErrorRecord], slice: Option<&ErrorSlice>, reference: Option<&Ast>) -> Context {
    let slice_json = slice.map(|s| serde_json::to_string(s).expect("slice serializes")).unwrap_or_default();
    let mut ctx =
        Context::new().with("code", &emit_ast(design)).with("errors", &records_json(records)).with("slice", &slice_json);
    if let Some(r) = reference {
        ctx = ctx.with("reference", &emit_ast(r));
    }
    ctx
}

fn to_suggestion(v: serde_json::Value, source: SuggestionSource) -> Result<Suggestion, FixError> {
    let mut s: Suggestion = serde_json::from_value(v).map_err(|e| FixError::BadSuggestion(e.to_string()))?;
    s.source = source;
    Ok(s)
}

fn source_of(backend: &dyn Backend, agent: SuggestionSource) -> SuggestionSource {
    if backend.label().starts_with("deterministic") && agent == SuggestionSource::AnalysisAgent {
        SuggestionSource::Deterministic
    } else {
        agent
    }
}

/// Asks the analysis agent for a suggestion with `slice` as context.
pub fn diagnose(
    records: &[ErrorRecord],
    design: &Ast,
    slice: Option<&ErrorSlice>,
    agent: &dyn Backend,
    reference: Option<&Ast>,
) -> Result<Suggestion, FixError> {
    if records.is_empty() {
        return Err(FixError::Precondition("no records to diagnose".into()));
    }
    let resp = complete(AgentRole::Analyzer, &context(design, records, slice, reference), agent)?;
    to_suggestion(resp.parsed, source_of(agent, SuggestionSource::AnalysisAgent))
}

/// Applies a suggestion's edits verbatim.
pub fn apply_suggestion(design: &Ast, s: &Suggestion) -> Result<Applied, EditError> {
    apply_edits(design, &s.edits)
}

/// Edit kinds a slice's repair is expected to use.
fn expected_kinds(mnemonic: &str) -> &'static [&'static str] {
    match mnemonic {
        "DAA" | "PTR" => &["rewrite_decl", "replace_node"],
        "OOB" => &["clamp_bound", "replace_node"],
        "UDT" => &["rewrite_decl"],
        "AID" => &["remove_pragma", "attach_pragma"],
        "DPC" | "MLP" | "PUC" => &["remove_pragma"],
        "UDM" | "FIN" => &["replace_node"],
        _ => &["replace_node", "remove_pragma", "attach_pragma", "rewrite_decl", "clamp_bound"],
    }
}

/// Scores a candidate against the rubric.
pub fn score_suggestion(
    design: &Ast,
    records: &[ErrorRecord],
    slice: Option<&ErrorSlice>,
    s: &Suggestion,
    reference: Option<&Ast>,
) -> Score {
    let Ok(applied) = apply_suggestion(design, s) else { return Score::invalid() };
    let n = s.edits.len();
    let consistency = match (slice, n) {
        (Some(sl), n) if n > 0 => {
            let kinds = expected_kinds(&sl.mnemonic);
            s.edits.iter().filter(|e| kinds.contains(&e.kind_name())).count() as f64 / n as f64
        }
        _ => 0.0,
    };
    let reduction = if n == 0 || records.is_empty() {
        0.0
    } else {
        let after = check(&normalize(&applied.ast), reference).records.len();
        (records.len().saturating_sub(after)) as f64 / records.len() as f64
    };
    let minimality = if n == 0 { 0.0 } else { 1.0 / n as f64 };
    Score::new(1.0, consistency, reduction, minimality)
}

/// Collects one suggestion per evaluator, scores them and returns the best
/// with its index. Ties go to fewer edits, then the earlier evaluator.
pub fn multifaceted_evaluate(
    design: &Ast,
    records: &[ErrorRecord],
    slice: Option<&ErrorSlice>,
    evaluators: &[Box<dyn Backend>],
    scorer: &dyn Backend,
    reference: Option<&Ast>,
) -> Result<(usize, Vec<Suggestion>, Vec<Score>), FixError> {
    if evaluators.is_empty() {
        return Err(FixError::Precondition("evaluator group is empty".into()));
    }
    let ctx = context(design, records, slice, reference);
    let mut candidates: Vec<Option<Suggestion>> = Vec::new();
    for (i, ev) in evaluators.iter().enumerate() {
        let s = complete(AgentRole::EvaluatorGroup, &ctx, ev.as_ref())
            .ok()
            .and_then(|r| to_suggestion(r.parsed, SuggestionSource::Evaluator(i as u32)).ok())
            .filter(|s| apply_suggestion(design, s).is_ok());
        candidates.push(s);
    }
    if candidates.iter().all(Option::is_none) {
        return Err(FixError::AllCandidatesInvalid);
    }
    let listed: Vec<serde_json::Value> =
        candidates.iter().map(|c| c.as_ref().map_or(serde_json::Value::Null, |s| serde_json::to_value(s).unwrap())).collect();
    let sctx = ctx.clone().with("candidates", &serde_json::Value::Array(listed).to_string());
    let resp = complete(AgentRole::Scorer, &sctx, scorer)?;
    let scores = parse_scores(&resp.parsed, candidates.len());
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        let Some(c) = c else { continue };
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = candidates[b].as_ref().unwrap();
                let better =
                    scores[i].value > scores[b].value || (scores[i].value == scores[b].value && c.edits.len() < cur.edits.len());
                Some(if better { i } else { b })
            }
        };
    }
    let best = best.ok_or(FixError::AllCandidatesInvalid)?;
    let suggestions = candidates.into_iter().map(|c| c.unwrap_or_else(|| Suggestion::empty("invalid candidate"))).collect();
    Ok((best, suggestions, scores))
}

/// Reads scorer output: numbers or objects with a `value` field.
fn parse_scores(v: &serde_json::Value, n: usize) -> Vec<Score> {
    let list = v.get("scores").and_then(|s| s.as_array()).cloned().unwrap_or_default();
    (0..n)
        .map(|i| match list.get(i) {
            Some(x) if x.is_object() => serde_json::from_value(x.clone()).unwrap_or_else(|_| {
                let value = x.get("value").and_then(serde_json::Value::as_f64).unwrap_or(0.0);
                Score { value, ..Score::invalid() }
            }),
            Some(x) => Score { value: x.as_f64().unwrap_or(0.0), ..Score::invalid() },
            None => Score::invalid(),
        })
        .collect()
}

/// First record that a slice covers, with that slice.
fn pick_slice<'r>(repo: &'r Repository, records: &[ErrorRecord]) -> Option<&'r ErrorSlice> {
    records.iter().find_map(|r| repo.match_record(r))
}

fn qor_ok(q: &QoRReport, th: &Thresholds) -> bool {
    th.admits(q.latency_cycles, &q.resources)
}

/// Repairs `buggy` within `cfg.budget` iterations. The returned design is
/// the best one reached; the trace records every attempt.
pub fn fix(buggy: &Ast, cfg: &FixConfig, repo: &Repository, agents: &Agents) -> Result<(Ast, RepairTrace), FixError> {
    let reference = cfg.reference.as_ref();
    let mut current = normalize(buggy);
    let mut report = check(&current, reference);
    let initial = report.clone();
    let mut trace = RepairTrace { budget: cfg.budget, initial, iterations: Vec::new(), outcome: Outcome::Exhausted };
    let q = estimate(&current, &cfg.device, &cfg.costs);
    if report.is_clean() && qor_ok(&q, &cfg.thresholds) {
        trace.outcome = Outcome::Fixed;
        return Ok((current, trace));
    }
    let mut escalate = false;
    for index in 1..=cfg.budget {
        let records = report.records.clone();
        let slice = pick_slice(repo, &records);
        let mode = if escalate { Mode::Multifaceted } else { Mode::Single };
        let mut it = Iteration {
            index,
            mode,
            suggestions: Vec::new(),
            scores: Vec::new(),
            chosen: None,
            applied: Vec::new(),
            report: report.clone(),
            qor: None,
            note: None,
        };
        if records.is_empty() {
            it.note = Some("design is clean but misses the QoR thresholds".into());
            trace.iterations.push(it);
            continue;
        }
        let chosen = if escalate {
            match multifaceted_evaluate(&current, &records, slice, &agents.evaluators, agents.scorer.as_ref(), reference) {
                Ok((best, suggestions, scores)) => {
                    it.suggestions = suggestions;
                    it.scores = scores;
                    it.chosen = Some(best);
                    Ok(it.suggestions[best].clone())
                }
                Err(e) => Err(e),
            }
        } else {
            diagnose(&records, &current, slice, agents.analyzer.as_ref(), reference).inspect(|s| {
                it.suggestions = vec![s.clone()];
                it.chosen = Some(0);
            })
        };
        let suggestion = match chosen {
            Ok(s) if !s.edits.is_empty() => s,
            Ok(_) => {
                it.note = Some("suggestion carries no edits".into());
                trace.iterations.push(it);
                escalate = true;
                continue;
            }
            Err(e) => {
                it.note = Some(e.to_string());
                trace.iterations.push(it);
                escalate = true;
                continue;
            }
        };
        let applied = match apply_suggestion(&current, &suggestion) {
            Ok(a) => a,
            Err(e) => {
                it.note = Some(e.to_string());
                trace.iterations.push(it);
                escalate = true;
                continue;
            }
        };
        let candidate = normalize(&applied.ast);
        let new_report = check(&candidate, reference);
        let q = estimate(&candidate, &cfg.device, &cfg.costs);
        it.applied = applied.log;
        it.report = new_report.clone();
        it.qor = Some(q.clone());
        let done = new_report.is_clean() && qor_ok(&q, &cfg.thresholds);
        let progress = new_report.records.len() < report.records.len() || (new_report.is_clean() && !report.is_clean());
        if !done && !progress {
            it.note = Some("edits did not reduce the error count".into());
        }
        trace.iterations.push(it);
        if done {
            trace.outcome = Outcome::Fixed;
            return Ok((candidate, trace));
        }
        if progress {
            current = candidate;
            report = new_report;
            escalate = false;
        } else {
            escalate = true;
        }
    }
    Ok((current, trace))
}
