// SPDX-License-Identifier: Apache-2.0

//! Directive allocation: dependence classification, innermost-first unroll
//! selection, aligned partitioning, pipeline placement and QoR-driven
//! refinement under resource caps.

use crate::agents::{complete, AgentError, AgentRole, Backend, Context};
use crate::bugrag::Repository;
use crate::diagnostics::verify;
use crate::fixer::{self, Agents, FixConfig};
use crate::frontend::*;
use crate::harness::Thresholds;
use crate::qor::{estimate, DeviceProfile, OpCostTable, QoRReport, ResourceCaps};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub const DEFAULT_BUDGET: usize = 5;

/// Mnemonics of the pragma-misuse detectors a plan must never trigger.
pub const PRAGMA_MNEMONICS: [&str; 4] = ["AID", "DPC", "MLP", "PUC"];

/// Fraction of each cap below which a design is considered to have headroom
/// for a larger factor.
pub const HEADROOM: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Parallel,
    Reduction,
    Sequential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSpec {
    pub latency_target: Option<u64>,
    pub caps: ResourceCaps,
    pub budget: usize,
}

impl OptimizationSpec {
    pub fn new(caps: ResourceCaps) -> Self {
        OptimizationSpec { latency_target: None, caps, budget: DEFAULT_BUDGET }
    }

    pub fn with_target(mut self, cycles: u64) -> Self {
        self.latency_target = Some(cycles);
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn check(&self) -> Result<(), TuneError> {
        let ok = |v: f64| v > 0.0 && v <= 1.0;
        if !(ok(self.caps.dsp) && ok(self.caps.ff) && ok(self.caps.lut)) {
            return Err(TuneError::Precondition("cap fractions must lie in (0, 1]".into()));
        }
        if self.budget == 0 {
            return Err(TuneError::Precondition("budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// `dsp=..,ff=..,lut=..` form accepted by [`ResourceCaps::parse`].
pub fn caps_text(caps: &ResourceCaps) -> String {
    format!("dsp={},ff={},lut={}", caps.dsp, caps.ff, caps.lut)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedDirective {
    pub site: PragmaSite,
    pub pragma: PragmaKind,
    pub rationale: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PragmaPlan {
    pub directives: Vec<PlannedDirective>,
}

impl PragmaPlan {
    /// Unroll factor per loop; loops without an Unroll are absent.
    pub fn factors(&self) -> BTreeMap<LoopId, u32> {
        self.directives
            .iter()
            .filter_map(|d| match (&d.site, &d.pragma) {
                (PragmaSite::Loop(id), PragmaKind::Unroll { factor: Some(f) }) => Some((*id, *f)),
                _ => None,
            })
            .collect()
    }

    /// Attaches every directive to the directive-free form of `design`.
    pub fn apply(&self, design: &Ast) -> Result<Ast, TuneError> {
        let mut out = design.without_pragmas();
        for d in &self.directives {
            out = attach_pragma(&out, &d.site, Pragma::new(d.pragma.clone()))
                .map_err(|e| TuneError::BadPlan(format!("{}: {e}", d.site)))?;
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Refine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneIteration {
    pub index: usize,
    pub plan: PragmaPlan,
    pub qor: QoRReport,
    pub within_caps: bool,
    pub decision: Decision,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneOutcome {
    MetTarget,
    BudgetExhaustedBestFeasible,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneTrace {
    pub baseline: QoRReport,
    pub iterations: Vec<TuneIteration>,
    pub outcome: TuneOutcome,
    /// Iteration whose design was returned, when one was.
    pub accepted: Option<usize>,
}

impl TuneTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("no plan fits the caps, even with every factor at 1")]
    InfeasibleUnderCaps,
    #[error("no refinement rule applies")]
    NoRefinementPossible,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("plan cannot be attached: {0}")]
    BadPlan(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Classifies every loop by its carried dependences.
pub fn analyze_dependencies(meta: &DesignMetadata) -> BTreeMap<LoopId, Parallelism> {
    meta.loops
        .iter()
        .map(|l| {
            let class = if l.dependences.is_empty() && !l.carried_dependence {
                Parallelism::Parallel
            } else if !l.dependences.is_empty() && l.dependences.iter().all(|d| matches!(d.kind, DepKind::Accumulation(_))) {
                Parallelism::Reduction
            } else {
                Parallelism::Sequential
            };
            (l.id, class)
        })
        .collect()
}

/// Divisors of `n` in ascending order.
pub fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// One refinement step on bare factors. `trips[i]` bounds `factors[i]`.
/// Over cap: the largest factor drops to the next divisor at or below half.
/// Otherwise, with `grow`: the smallest factor that can still grow rises to
/// the smallest divisor at or above double.
pub fn refine_factors(factors: &[u32], trips: &[u64], over_cap: bool, grow: bool) -> Result<Vec<u32>, TuneError> {
    let mut out = factors.to_vec();
    if over_cap {
        let (i, &f) = factors
            .iter()
            .enumerate()
            .filter(|(_, f)| **f > 1)
            .max_by_key(|(i, f)| (**f, std::cmp::Reverse(*i)))
            .ok_or(TuneError::NoRefinementPossible)?;
        let half = u64::from(f / 2);
        out[i] = divisors(trips[i]).into_iter().filter(|d| *d <= half).max().unwrap_or(1) as u32;
        return Ok(out);
    }
    if grow {
        let next = |i: usize| divisors(trips[i]).into_iter().find(|d| *d >= 2 * u64::from(factors[i]));
        let (i, d) = factors
            .iter()
            .enumerate()
            .filter_map(|(i, f)| next(i).map(|d| (i, f, d)))
            .min_by_key(|(i, f, _)| (**f, *i))
            .map(|(i, _, d)| (i, d))
            .ok_or(TuneError::NoRefinementPossible)?;
        out[i] = d as u32;
        return Ok(out);
    }
    Err(TuneError::NoRefinementPossible)
}

/// Loops whose unroll factor the tuner may choose.
fn eligible(meta: &DesignMetadata, classes: &BTreeMap<LoopId, Parallelism>) -> Vec<LoopId> {
    meta.loops
        .iter()
        .filter(|l| l.trip_count.is_some_and(|t| t >= 2) && classes.get(&l.id) != Some(&Parallelism::Sequential))
        .map(|l| l.id)
        .collect()
}

fn trip(meta: &DesignMetadata, id: LoopId) -> u64 {
    meta.loop_info(id).and_then(|l| l.trip_count).unwrap_or(1)
}

/// (array, 0-based dim) pairs a loop's variable indexes.
fn indexed_dims(meta: &DesignMetadata, id: LoopId) -> BTreeSet<(String, usize)> {
    let Some(info) = meta.loop_info(id) else { return BTreeSet::new() };
    let mut out = BTreeSet::new();
    for a in &meta.arrays {
        for acc in &a.accesses {
            if acc.loops.contains(&id) && acc.index.as_ref().is_some_and(|x| x.coeff(&info.index_var) != 0) {
                out.insert((a.name.clone(), acc.dim));
            }
        }
    }
    out
}

/// Makes loops that share a partitioned dimension agree on one factor.
fn harmonize(meta: &DesignMetadata, factors: &mut BTreeMap<LoopId, u32>) {
    let dims: BTreeMap<LoopId, BTreeSet<(String, usize)>> = factors.keys().map(|id| (*id, indexed_dims(meta, *id))).collect();
    loop {
        let mut changed = false;
        let mut groups: BTreeMap<(String, usize), Vec<LoopId>> = BTreeMap::new();
        for (id, ds) in &dims {
            if factors[id] > 1 {
                for d in ds {
                    groups.entry(d.clone()).or_default().push(*id);
                }
            }
        }
        for ids in groups.values() {
            let g = ids.iter().map(|id| u64::from(factors[id])).fold(0, gcd) as u32;
            for id in ids {
                if factors[id] != g {
                    factors.insert(*id, g);
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

fn scalar_type(design: &Ast, name: &str) -> Option<ScalarType> {
    let mut found = None;
    for f in design.functions() {
        if let Some(p) = f.params.iter().find(|p| p.name == name) {
            return Some(p.ty.scalar.clone());
        }
        f.body.walk(&mut |s| match s {
            Stmt::Decl(d) if d.name == name => found = Some(d.ty.scalar.clone()),
            Stmt::For(l) => {
                if let Some(Stmt::Decl(d)) = l.init.as_deref() {
                    if d.name == name {
                        found = Some(d.ty.scalar.clone());
                    }
                }
            }
            _ => {}
        });
    }
    found.or_else(|| design.globals().find(|g| g.name == name).map(|g| g.ty.scalar.clone()))
}

/// Target II for a reduction: latency of its accumulation operator.
fn reduction_ii(design: &Ast, info: &LoopInfo, costs: &OpCostTable) -> Option<u32> {
    let dep = info.dependences.iter().find(|d| matches!(d.kind, DepKind::Accumulation(_)))?;
    let DepKind::Accumulation(op) = dep.kind else { return None };
    let float = scalar_type(design, &dep.variable).is_some_and(|t| t.is_float());
    let cost = match (op, float) {
        (BinaryOp::Mul, true) => costs.float_mul,
        (BinaryOp::Mul, false) => costs.int_mul,
        (_, true) => costs.float_add,
        (_, false) => costs.int_add,
    };
    Some(cost.latency.max(1))
}

/// Builds the full plan implied by a factor assignment.
pub fn build_plan(
    design: &Ast,
    meta: &DesignMetadata,
    classes: &BTreeMap<LoopId, Parallelism>,
    factors: &BTreeMap<LoopId, u32>,
    costs: &OpCostTable,
) -> PragmaPlan {
    let mut factors = factors.clone();
    harmonize(meta, &mut factors);
    let full =
        |id: LoopId, f: &BTreeMap<LoopId, u32>| f.get(&id).is_some_and(|x| u64::from(*x) == trip(meta, id) && trip(meta, id) > 1);
    let mut directives = Vec::new();
    for l in &meta.loops {
        let class = classes.get(&l.id).copied().unwrap_or(Parallelism::Sequential);
        let f = factors.get(&l.id).copied().unwrap_or(1);
        if f > 1 {
            directives.push(PlannedDirective {
                site: PragmaSite::Loop(l.id),
                pragma: PragmaKind::Unroll { factor: Some(f) },
                rationale: format!(
                    "loop {} is {:?}; factor {f} divides trip {} and fits the caps",
                    l.id,
                    class,
                    trip(meta, l.id)
                )
                .to_lowercase(),
            });
        }
        let pipelined_here = !full(l.id, &factors) && meta.descendants(l.id).iter().all(|d| full(*d, &factors));
        if pipelined_here {
            let ii = if class == Parallelism::Reduction { reduction_ii(design, l, costs) } else { None };
            directives.push(PlannedDirective {
                site: PragmaSite::Loop(l.id),
                pragma: PragmaKind::Pipeline { ii },
                rationale: format!("loop {} is the innermost loop of its nest that is not fully unrolled", l.id),
            });
        }
    }
    let top = design.top().map(|f| f.name.clone()).unwrap_or_default();
    let mut parts: BTreeMap<(String, usize), u32> = BTreeMap::new();
    for (id, f) in factors.iter().filter(|(_, f)| **f > 1) {
        for d in indexed_dims(meta, *id) {
            let e = parts.entry(d).or_insert(*f);
            *e = (*e).max(*f);
        }
    }
    for ((array, dim), f) in parts {
        let owner = meta.array(&array).and_then(|a| a.function.clone()).unwrap_or_else(|| top.clone());
        directives.push(PlannedDirective {
            site: PragmaSite::Function(owner),
            pragma: PragmaKind::ArrayPartition {
                variable: array.clone(),
                ptype: PartitionType::Cyclic,
                factor: Some(f),
                dim: dim as i64 + 1,
            },
            rationale: format!("cyclic factor {f} on dim {} of `{array}` serves the unrolled accesses in parallel", dim + 1),
        });
    }
    PragmaPlan { directives }
}

fn fits(plan: &PragmaPlan, design: &Ast, caps: &ResourceCaps, device: &DeviceProfile, costs: &OpCostTable) -> Option<QoRReport> {
    let d = plan.apply(design).ok()?;
    let q = estimate(&d, device, costs);
    q.within_caps(caps, device).then_some(q)
}

/// Deterministic planning policy. Innermost loops take the largest divisor
/// of their trip that fits the caps; an outer loop is considered only once
/// every loop below it is fully unrolled.
pub fn policy_plan(
    design: &Ast,
    caps: &ResourceCaps,
    device: &DeviceProfile,
    costs: &OpCostTable,
) -> Result<PragmaPlan, TuneError> {
    let meta = extract_metadata(design);
    let classes = analyze_dependencies(&meta);
    let ids = eligible(&meta, &classes);
    let mut factors: BTreeMap<LoopId, u32> = ids.iter().map(|id| (*id, 1)).collect();
    if fits(&build_plan(design, &meta, &classes, &factors, costs), design, caps, device, costs).is_none() {
        return Err(TuneError::InfeasibleUnderCaps);
    }
    let mut order: Vec<LoopId> = ids.clone();
    order.sort_by_key(|id| (std::cmp::Reverse(meta.loop_info(*id).map_or(0, |l| l.depth)), *id));
    let inner: Vec<LoopId> = order.iter().copied().filter(|id| meta.is_innermost(*id)).collect();
    let outer: Vec<LoopId> = order.iter().copied().filter(|id| !meta.is_innermost(*id)).collect();
    for id in inner.into_iter().chain(outer) {
        let maxed = meta.descendants(id).iter().all(|d| factors.get(d).is_some_and(|f| u64::from(*f) == trip(&meta, *d)));
        if !maxed {
            continue;
        }
        for d in divisors(trip(&meta, id)).into_iter().rev().filter(|d| *d > 1) {
            let mut trial = factors.clone();
            trial.insert(id, d as u32);
            let plan = build_plan(design, &meta, &classes, &trial, costs);
            if plan.factors().get(&id).copied().unwrap_or(1) as u64 != d {
                continue;
            }
            if fits(&plan, design, caps, device, costs).is_some() {
                factors = plan_factors(&plan, &ids);
                break;
            }
        }
    }
    Ok(build_plan(design, &meta, &classes, &factors, costs))
}

fn plan_factors(plan: &PragmaPlan, ids: &[LoopId]) -> BTreeMap<LoopId, u32> {
    let f = plan.factors();
    ids.iter().map(|id| (*id, f.get(id).copied().unwrap_or(1))).collect()
}

/// Next plan after `qor`, following the halving and doubling rules. Outer
/// factors shrink before inner ones; inner factors grow before outer ones.
pub fn refine(
    design: &Ast,
    plan: &PragmaPlan,
    qor: &QoRReport,
    spec: &OptimizationSpec,
    device: &DeviceProfile,
    costs: &OpCostTable,
) -> Result<PragmaPlan, TuneError> {
    let meta = extract_metadata(design);
    let classes = analyze_dependencies(&meta);
    let ids = eligible(&meta, &classes);
    let mut factors = plan_factors(plan, &ids);
    let over = !qor.within_caps(&spec.caps, device);
    let unmet = spec.latency_target.is_some_and(|t| qor.latency_cycles > t);
    let headroom = qor.pressure(&spec.caps, device) < HEADROOM;
    let grow = unmet && headroom;
    let (inner, outer): (Vec<LoopId>, Vec<LoopId>) = ids.iter().partition(|id| meta.is_innermost(**id));
    let maxed = |f: &BTreeMap<LoopId, u32>, id: &LoopId| u64::from(f[id]) == trip(&meta, *id);
    let group: Vec<LoopId> = if over {
        let outer_set: Vec<LoopId> = outer.iter().copied().filter(|id| factors[id] > 1).collect();
        if outer_set.is_empty() {
            inner.clone()
        } else {
            outer_set
        }
    } else if inner.iter().all(|id| maxed(&factors, id)) {
        outer
            .iter()
            .copied()
            .filter(|id| meta.descendants(*id).iter().all(|d| !factors.contains_key(d) || maxed(&factors, d)))
            .collect()
    } else {
        inner.clone()
    };
    let fs: Vec<u32> = group.iter().map(|id| factors[id]).collect();
    let trips: Vec<u64> = group.iter().map(|id| trip(&meta, *id)).collect();
    let next = refine_factors(&fs, &trips, over, grow)?;
    for (id, f) in group.iter().zip(next) {
        factors.insert(*id, f);
    }
    let out = build_plan(design, &meta, &classes, &factors, costs);
    if out == *plan {
        return Err(TuneError::NoRefinementPossible);
    }
    Ok(out)
}

/// Asks the optimizer agent for a plan and checks it. A plan that cannot be
/// attached, misuses pragmas or exceeds the caps is replaced by the policy
/// plan.
pub fn plan(
    design: &Ast,
    spec: &OptimizationSpec,
    device: &DeviceProfile,
    costs: &OpCostTable,
    agent: &dyn Backend,
) -> Result<PragmaPlan, TuneError> {
    let ctx = Context::new().with("code", &emit_ast(design)).with("caps", &caps_text(&spec.caps)).with("device", &device.name);
    let proposed = complete(AgentRole::Optimizer, &ctx, agent)
        .ok()
        .and_then(|r| serde_json::from_value::<Vec<PlannedDirective>>(r.parsed["directives"].clone()).ok())
        .map(|directives| PragmaPlan { directives });
    if let Some(p) = proposed {
        if legal(&p, design) && fits(&p, design, &spec.caps, device, costs).is_some() {
            return Ok(p);
        }
    }
    policy_plan(design, &spec.caps, device, costs)
}

/// Attachable, Dataflow-free and clean under the pragma detectors.
pub fn legal(plan: &PragmaPlan, design: &Ast) -> bool {
    if plan.directives.iter().any(|d| d.pragma.tag() == PragmaTag::Dataflow) {
        return false;
    }
    match plan.apply(design) {
        Ok(d) => {
            let r = verify(&d);
            !PRAGMA_MNEMONICS.iter().any(|m| r.has(m))
        }
        Err(_) => false,
    }
}

/// Plan, attach, verify, estimate and refine within the budget. Returns the
/// best design that respects the caps.
pub fn tune(
    design: &Ast,
    spec: &OptimizationSpec,
    device: &DeviceProfile,
    costs: &OpCostTable,
    optimizer: &dyn Backend,
    repair: Option<&Agents>,
) -> Result<(Ast, TuneTrace), TuneError> {
    spec.check()?;
    if !verify(design).is_clean() {
        return Err(TuneError::Precondition("design must verify clean before tuning".into()));
    }
    let base = design.without_pragmas();
    let baseline = estimate(&base, device, costs);
    let mut trace = TuneTrace { baseline, iterations: Vec::new(), outcome: TuneOutcome::Infeasible, accepted: None };
    let mut best: Option<(Ast, u64, usize)> = None;
    let mut current = plan(design, spec, device, costs, optimizer)?;
    for index in 1..=spec.budget {
        let mut candidate = current.apply(design)?;
        let mut notes = Vec::new();
        if !verify(&candidate).is_clean() {
            match repair {
                Some(agents) => {
                    let cfg = FixConfig::new(Thresholds::permissive()).with_reference(design.clone());
                    let (fixed, t) = fixer::fix(&candidate, &cfg, &Repository::seeded(), agents)
                        .map_err(|e| TuneError::BadPlan(e.to_string()))?;
                    notes.push(format!("repaired attached plan ({:?})", t.outcome).to_lowercase());
                    candidate = fixed;
                }
                None => notes.push("attached plan does not verify clean".into()),
            }
        }
        let clean = verify(&candidate).is_clean();
        let qor = estimate(&candidate, device, costs);
        let within = qor.within_caps(&spec.caps, device) && clean;
        if within && best.as_ref().is_none_or(|(_, l, _)| qor.latency_cycles < *l) {
            best = Some((candidate.clone(), qor.latency_cycles, index));
        }
        let met = spec.latency_target.is_none_or(|t| qor.latency_cycles <= t);
        let mut it = TuneIteration {
            index,
            plan: current.clone(),
            qor: qor.clone(),
            within_caps: within,
            decision: Decision::Refine,
            reason: String::new(),
        };
        if within && met {
            it.decision = Decision::Accept;
            it.reason = join(notes, "caps respected and latency target met");
            trace.iterations.push(it);
            trace.outcome = TuneOutcome::MetTarget;
            trace.accepted = Some(index);
            return Ok((candidate, trace));
        }
        let next = if index < spec.budget { Some(refine(design, &current, &qor, spec, device, costs)) } else { None };
        match next {
            Some(Ok(p)) => {
                it.reason = join(notes, if within { "latency target unmet; refining" } else { "caps exceeded; refining" });
                trace.iterations.push(it);
                current = p;
            }
            Some(Err(_)) if within => {
                it.decision = Decision::Accept;
                it.reason = join(notes, "caps respected; no refinement rule applies");
                trace.iterations.push(it);
                trace.outcome = TuneOutcome::BudgetExhaustedBestFeasible;
                trace.accepted = Some(index);
                return Ok((candidate, trace));
            }
            Some(Err(_)) | None => {
                it.reason = join(notes, if within { "budget exhausted" } else { "caps exceeded; no refinement possible" });
                trace.iterations.push(it);
                break;
            }
        }
    }
    match best {
        Some((ast, _, index)) => {
            trace.outcome = TuneOutcome::BudgetExhaustedBestFeasible;
            trace.accepted = Some(index);
            if let Some(it) = trace.iterations.iter_mut().find(|i| i.index == index) {
                it.decision = Decision::Accept;
                it.reason.push_str("; best feasible iterate");
            }
            Ok((ast, trace))
        }
        None => Err(TuneError::InfeasibleUnderCaps),
    }
}

fn join(mut notes: Vec<String>, last: &str) -> String {
    notes.push(last.to_string());
    notes.join("; ")
}
