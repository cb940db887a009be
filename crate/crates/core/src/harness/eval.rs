// SPDX-License-Identifier: Apache-2.0

//! Pass-rate and speedup metrics.

use crate::agents::Backend;
use crate::frontend::Ast;
use crate::qor::{DeviceProfile, OpCostTable, QoRReport, Resources};
use crate::tuner::{tune, OptimizationSpec, TuneError, TuneOutcome};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Latency and resource thresholds a repaired design must meet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub l_t: u64,
    pub r_t: Resources,
}

impl Thresholds {
    pub fn new(l_t: u64, r_t: Resources) -> Result<Self, EvalError> {
        if l_t == 0 || r_t.dsp == 0 || r_t.ff == 0 || r_t.lut == 0 {
            return Err(EvalError::InvalidThresholds);
        }
        Ok(Thresholds { l_t, r_t })
    }

    /// `L_T = 1.2 × baseline` (exact, floored to whole cycles) and
    /// `R_T` = device totals.
    pub fn from_baseline(baseline_latency: u64, device: &DeviceProfile) -> Self {
        let l_t = (Ratio::from_integer(baseline_latency.max(1)) * Ratio::new(6, 5)).floor().to_integer();
        Thresholds { l_t, r_t: device_totals(device) }
    }

    /// Accepts any latency and any resource use.
    pub fn permissive() -> Self {
        Thresholds { l_t: u64::MAX, r_t: Resources { dsp: u64::MAX, ff: u64::MAX, lut: u64::MAX } }
    }

    pub fn admits(&self, latency: u64, r: &Resources) -> bool {
        latency <= self.l_t && r.dsp <= self.r_t.dsp && r.ff <= self.r_t.ff && r.lut <= self.r_t.lut
    }
}

pub fn device_totals(device: &DeviceProfile) -> Resources {
    Resources { dsp: device.dsp_total, ff: device.ff_total, lut: device.lut_total }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no results to evaluate")]
    EmptyResultSet,
    #[error("thresholds must be positive")]
    InvalidThresholds,
}

/// Outcome of one repaired case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub mnemonic: String,
    pub latency: u64,
    pub resources: Resources,
    pub clean: bool,
    /// Case-specific thresholds; the shared ones apply when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
}

impl CaseResult {
    pub fn succeeds(&self, shared: &Thresholds) -> bool {
        self.clean && self.thresholds.as_ref().unwrap_or(shared).admits(self.latency, &self.resources)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MnemonicTally {
    pub n: u64,
    pub successes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n: u64,
    pub successes: u64,
    /// Percentage rounded to one decimal for display.
    pub pass_rate: String,
    pub per_mnemonic: BTreeMap<String, MnemonicTally>,
    pub failed: Vec<String>,
}

impl EvalSummary {
    /// Exact percentage.
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.successes * 100, self.n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<8} {:>5} {:>9} {:>7}\n", "mnemonic", "cases", "successes", "rate");
        for (m, t) in &self.per_mnemonic {
            out.push_str(&format!("{m:<8} {:>5} {:>9} {:>6}%\n", t.n, t.successes, percent_text(t.successes, t.n)));
        }
        out.push_str(&format!("{:<8} {:>5} {:>9} {:>6}%\n", "total", self.n, self.successes, self.pass_rate));
        out
    }
}

/// `successes / n × 100`, rounded half away from zero to one decimal.
pub fn percent_text(successes: u64, n: u64) -> String {
    if n == 0 {
        return "0.0".into();
    }
    let tenths = Ratio::new(successes * 1000, n).round().to_integer();
    format!("{}.{}", tenths / 10, tenths % 10)
}

/// Proportion of cases that verify clean within the thresholds.
pub fn pass_rate(results: &[CaseResult], th: &Thresholds) -> Result<EvalSummary, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyResultSet);
    }
    let mut sorted: Vec<&CaseResult> = results.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut per_mnemonic: BTreeMap<String, MnemonicTally> = BTreeMap::new();
    let mut successes = 0;
    let mut failed = Vec::new();
    for r in sorted {
        let ok = r.succeeds(th);
        let t = per_mnemonic.entry(r.mnemonic.clone()).or_insert(MnemonicTally { n: 0, successes: 0 });
        t.n += 1;
        if ok {
            t.successes += 1;
            successes += 1;
        } else {
            failed.push(r.id.clone());
        }
    }
    let n = results.len() as u64;
    Ok(EvalSummary { n, successes, pass_rate: percent_text(successes, n), per_mnemonic, failed })
}

/// Geometric mean of positive values.
pub fn geomean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub kernel: String,
    pub baseline: QoRReport,
    pub optimized: QoRReport,
    pub speedup: f64,
    pub iterations: usize,
    pub outcome: TuneOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub rows: Vec<SpeedupRow>,
    pub geomean: f64,
}

impl SpeedupReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>10} {:>10} {:>8} {:>5} {:>7} {:>7} {:>4}\n",
            "kernel", "baseline", "optimized", "speedup", "dsp", "ff", "lut", "iter"
        );
        for r in &self.rows {
            let q = &r.optimized.resources;
            out.push_str(&format!(
                "{:<10} {:>10} {:>10} {:>7.2}x {:>5} {:>7} {:>7} {:>4}\n",
                r.kernel, r.baseline.latency_cycles, r.optimized.latency_cycles, r.speedup, q.dsp, q.ff, q.lut, r.iterations
            ));
        }
        out.push_str(&format!("geomean speedup {:.2}x\n", self.geomean));
        out
    }
}

/// Tunes every kernel and reports speedups over the directive-free baseline.
pub fn speedup_eval(
    kernels: &[(String, Ast)],
    spec: &OptimizationSpec,
    device: &DeviceProfile,
    costs: &OpCostTable,
    optimizer: &dyn Backend,
) -> Result<SpeedupReport, TuneError> {
    let mut rows = Vec::new();
    for (name, ast) in kernels {
        let (optimized, trace) = tune(ast, spec, device, costs, optimizer, None)?;
        let opt = crate::qor::estimate(&optimized, device, costs);
        let speedup = trace.baseline.latency_cycles.max(1) as f64 / opt.latency_cycles.max(1) as f64;
        rows.push(SpeedupRow {
            kernel: name.clone(),
            baseline: trace.baseline.clone(),
            optimized: opt,
            speedup,
            iterations: trace.iterations.len(),
            outcome: trace.outcome,
        });
    }
    let geomean = geomean(&rows.iter().map(|r| r.speedup).collect::<Vec<_>>());
    Ok(SpeedupReport { rows, geomean })
}
