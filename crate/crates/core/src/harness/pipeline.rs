// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs shared by the CLI and the tests.

use super::corpus::{buggy_designs, kernels};
use super::eval::{pass_rate, CaseResult, EvalError, EvalSummary, Thresholds};
use crate::agents::Backend;
use crate::bugrag::Repository;
use crate::diagnostics::SEED_MNEMONICS;
use crate::fixer::{fix, Agents, FixConfig, FixError, RepairTrace};
use crate::frontend::{parse, parse_str, Ast};
use crate::qor::{baseline_estimate, estimate, DeviceProfile, OpCostTable};
use crate::voda::{build_corpus, Corpus, VodaError};
use serde::{Deserialize, Serialize};

/// One buggy design to repair.
#[derive(Clone, Debug)]
pub struct RepairCase {
    pub id: String,
    pub mnemonic: String,
    pub buggy: Ast,
    pub reference: Option<Ast>,
}

/// Kernels at `size` as named ASTs.
pub fn kernel_designs(size: u64) -> Vec<(String, Ast)> {
    kernels(size).iter().map(|k| (k.name.clone(), parse(k).expect("embedded kernels parse"))).collect()
}

/// Dataset built from the embedded kernels with every seed mnemonic.
pub fn kernel_dataset(size: u64, per_pair: usize, seed: u64, repo: &Repository, cot: &dyn Backend) -> Result<Corpus, VodaError> {
    let mnemonics: Vec<String> = SEED_MNEMONICS.iter().map(|m| m.to_string()).collect();
    build_corpus(&kernel_designs(size), &mnemonics, per_pair, seed, repo, cot)
}

/// Single-injection cases: every admitted dataset sample, paired with its
/// fixed code as reference, plus the shipped buggy designs.
pub fn single_injection_cases(corpus: &Corpus) -> Vec<RepairCase> {
    let mut out: Vec<RepairCase> = corpus
        .samples
        .iter()
        .map(|s| RepairCase {
            id: s.id.clone(),
            mnemonic: s.mnemonic.clone(),
            buggy: parse_str(&s.input.code).expect("admitted samples parse"),
            reference: parse_str(&s.fixed).ok(),
        })
        .collect();
    for c in buggy_designs() {
        out.push(RepairCase {
            id: c.id.clone(),
            mnemonic: c.mnemonic.clone(),
            buggy: parse(&c.buggy).expect("shipped designs parse"),
            reference: parse(&c.reference).ok(),
        });
    }
    out
}

/// Thresholds for a case: 1.2 times the baseline of the reference (or of the
/// buggy design) and the device totals.
pub fn case_thresholds(case: &RepairCase, device: &DeviceProfile, costs: &OpCostTable) -> Thresholds {
    let base = baseline_estimate(case.reference.as_ref().unwrap_or(&case.buggy), device, costs);
    Thresholds::from_baseline(base.latency_cycles, device)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepairRun {
    pub result: CaseResult,
    pub trace: RepairTrace,
}

pub fn repair_case(
    case: &RepairCase,
    budget: usize,
    device: &DeviceProfile,
    costs: &OpCostTable,
    repo: &Repository,
    agents: &Agents,
) -> Result<RepairRun, FixError> {
    let th = case_thresholds(case, device, costs);
    let mut cfg = FixConfig::new(th).with_budget(budget);
    cfg.device = device.clone();
    cfg.costs = costs.clone();
    cfg.reference = case.reference.clone();
    let (fixed, trace) = fix(&case.buggy, &cfg, repo, agents)?;
    let report = crate::fixer::check(&fixed, case.reference.as_ref());
    let q = estimate(&fixed, device, costs);
    let result = CaseResult {
        id: case.id.clone(),
        mnemonic: case.mnemonic.clone(),
        latency: q.latency_cycles,
        resources: q.resources,
        clean: report.is_clean(),
        thresholds: Some(th),
    };
    Ok(RepairRun { result, trace })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PassRateRun {
    pub summary: EvalSummary,
    pub runs: Vec<RepairRun>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Fix(#[from] FixError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Repairs every case, in parallel across cases, and scores the results.
/// Runs keep the case order.
pub fn eval_pass_rate(
    cases: &[RepairCase],
    budget: usize,
    device: &DeviceProfile,
    costs: &OpCostTable,
    repo: &Repository,
    agents: &Agents,
) -> Result<PassRateRun, RunError> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(cases.len().max(1));
    let chunk = cases.len().div_ceil(workers).max(1);
    let parts: Vec<Result<Vec<RepairRun>, FixError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|c| repair_case(c, budget, device, costs, repo, agents)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("repair worker panicked")).collect()
    });
    let mut runs = Vec::with_capacity(cases.len());
    for p in parts {
        runs.extend(p?);
    }
    let results: Vec<CaseResult> = runs.iter().map(|r| r.result.clone()).collect();
    let summary = pass_rate(&results, &Thresholds::permissive())?;
    Ok(PassRateRun { summary, runs })
}
