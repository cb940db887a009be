// SPDX-License-Identifier: Apache-2.0

//! Analytic latency and resource model, a cycle-level reference scheduler
//! used as its oracle, and adapters for external synthesis reports.

mod lower;
mod sim;
mod suite;

pub use sim::{simulate_schedule, Issue, ScheduleTrace};
pub use suite::{generated_nests, GeneratedNest};

use crate::frontend::*;
use lower::{has_inner_loop, lower_region, unroll_copies, Ctx, Dag, Env, Lowerer};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::ops::{Add, Mul};
use std::path::Path;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    pub dsp_total: u64,
    pub ff_total: u64,
    pub lut_total: u64,
    #[serde(default = "default_ports")]
    pub bram_ports_per_bank: u32,
}

fn default_ports() -> u32 {
    2
}

impl DeviceProfile {
    /// Zynq UltraScale+ ZCU106 (XCZU7EV).
    pub fn zcu106() -> Self {
        DeviceProfile { name: "zcu106".into(), dsp_total: 1728, ff_total: 460_800, lut_total: 230_400, bram_ports_per_bank: 2 }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "zcu106" | "xczu7ev" => Some(Self::zcu106()),
            _ => None,
        }
    }
}

impl Default for DeviceProfile {
    fn default() -> Self {
        Self::zcu106()
    }
}

/// Scheduling class of a lowered operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpClass {
    IntAdd,
    IntMul,
    FloatAdd,
    FloatMul,
    Div,
    Load,
    Store,
    /// Branch merge; free.
    Mux,
    /// Call to a user function; costs come from the callee.
    Call,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCost {
    pub latency: u32,
    pub dsp: u64,
    pub ff: u64,
    pub lut: u64,
}

const fn cost(latency: u32, dsp: u64, ff: u64, lut: u64) -> OpCost {
    OpCost { latency, dsp, ff, lut }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpCostTable {
    pub int_add: OpCost,
    pub int_mul: OpCost,
    pub float_add: OpCost,
    pub float_mul: OpCost,
    pub div: OpCost,
    /// Loads and stores.
    pub mem: OpCost,
}

impl Default for OpCostTable {
    fn default() -> Self {
        OpCostTable {
            int_add: cost(1, 0, 32, 32),
            int_mul: cost(3, 4, 128, 64),
            float_add: cost(4, 2, 300, 250),
            float_mul: cost(4, 3, 200, 150),
            div: cost(16, 0, 600, 800),
            mem: cost(2, 0, 8, 16),
        }
    }
}

impl OpCostTable {
    pub fn get(&self, class: OpClass) -> OpCost {
        match class {
            OpClass::IntAdd => self.int_add,
            OpClass::IntMul => self.int_mul,
            OpClass::FloatAdd => self.float_add,
            OpClass::FloatMul => self.float_mul,
            OpClass::Div => self.div,
            OpClass::Load | OpClass::Store => self.mem,
            OpClass::Mux | OpClass::Call => cost(0, 0, 0, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resources {
    pub dsp: u64,
    pub ff: u64,
    pub lut: u64,
}

impl Add for Resources {
    type Output = Resources;
    fn add(self, o: Resources) -> Resources {
        Resources { dsp: self.dsp + o.dsp, ff: self.ff + o.ff, lut: self.lut + o.lut }
    }
}

impl Mul<u64> for Resources {
    type Output = Resources;
    fn mul(self, k: u64) -> Resources {
        Resources { dsp: self.dsp * k, ff: self.ff * k, lut: self.lut * k }
    }
}

/// Fractions of device totals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceCaps {
    pub dsp: f64,
    pub ff: f64,
    pub lut: f64,
}

impl ResourceCaps {
    pub const FULL: ResourceCaps = ResourceCaps { dsp: 1.0, ff: 1.0, lut: 1.0 };

    /// Parses `dsp=0.6,ff=0.2,lut=0.2`; omitted keys stay at 1.0.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut caps = Self::FULL;
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("bad fraction `{v}`"))?;
            if !(v > 0.0 && v <= 1.0) {
                return Err(format!("cap `{k}` must be in (0, 1], got {v}"));
            }
            match k.trim().to_ascii_lowercase().as_str() {
                "dsp" => caps.dsp = v,
                "ff" => caps.ff = v,
                "lut" => caps.lut = v,
                other => return Err(format!("unknown resource `{other}`")),
            }
        }
        Ok(caps)
    }

    /// Absolute limits on `device`.
    pub fn limits(&self, device: &DeviceProfile) -> Resources {
        Resources {
            dsp: (self.dsp * device.dsp_total as f64).floor() as u64,
            ff: (self.ff * device.ff_total as f64).floor() as u64,
            lut: (self.lut * device.lut_total as f64).floor() as u64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub id: LoopId,
    pub trip: u64,
    /// Iterations issued together (unroll factor).
    pub copies: u64,
    /// Achieved initiation interval, for pipelined loops.
    pub ii: Option<u64>,
    /// Latency of one iteration group.
    pub depth: u64,
    pub latency: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QoRReport {
    pub device: String,
    pub latency_cycles: u64,
    pub resources: Resources,
    pub dsp_util: f64,
    pub ff_util: f64,
    pub lut_util: f64,
    pub loops: Vec<LoopReport>,
    /// Loops whose unknown trip count was taken as 1.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assumed_trip: Vec<LoopId>,
}

impl QoRReport {
    pub fn new(device: &DeviceProfile, latency_cycles: u64, resources: Resources) -> Self {
        QoRReport {
            device: device.name.clone(),
            latency_cycles,
            resources,
            dsp_util: resources.dsp as f64 / device.dsp_total as f64,
            ff_util: resources.ff as f64 / device.ff_total as f64,
            lut_util: resources.lut as f64 / device.lut_total as f64,
            loops: Vec::new(),
            assumed_trip: Vec::new(),
        }
    }

    pub fn within(&self, limits: &Resources) -> bool {
        self.resources.dsp <= limits.dsp && self.resources.ff <= limits.ff && self.resources.lut <= limits.lut
    }

    pub fn within_caps(&self, caps: &ResourceCaps, device: &DeviceProfile) -> bool {
        self.within(&caps.limits(device))
    }

    /// Largest ratio of used resources to the cap limits.
    pub fn pressure(&self, caps: &ResourceCaps, device: &DeviceProfile) -> f64 {
        let l = caps.limits(device);
        let r = |used: u64, lim: u64| {
            if lim == 0 {
                if used == 0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                used as f64 / lim as f64
            }
        };
        r(self.resources.dsp, l.dsp).max(r(self.resources.ff, l.ff)).max(r(self.resources.lut, l.lut))
    }

    pub fn loop_report(&self, id: LoopId) -> Option<&LoopReport> {
        self.loops.iter().find(|l| l.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum QorError {
    #[error("loop {0} has no constant trip count")]
    UnknownTripCount(LoopId),
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error("external tool failed: {0}")]
    Tool(String),
}

/// Closed-form estimate for `design` with the directives it carries.
pub fn estimate(design: &Ast, device: &DeviceProfile, costs: &OpCostTable) -> QoRReport {
    let mut ctx = Ctx::new(design, costs);
    let mut est = Estimator { ports: u64::from(device.bram_ports_per_bank.max(1)), loops: Vec::new(), assumed: Vec::new() };
    let top = design.top().map(|f| f.name.clone());
    let mut top_result = (0, Resources::default());
    for f in design.functions() {
        est.loops.clear();
        let r = est.seq(&mut ctx, &f.body.stmts, &HashMap::new());
        ctx.calls.insert(f.name.clone(), (r.0.max(1), r.1));
        if Some(&f.name) == top.as_ref() {
            top_result = r;
            break;
        }
    }
    let (latency, mut res) = top_result;
    res = res + register_arrays(&ctx);
    let nonempty = design.top().is_some_and(|f| !f.body.stmts.is_empty());
    let mut report = QoRReport::new(device, if nonempty { latency.max(1) } else { latency }, res);
    est.loops.sort_by_key(|l| l.id);
    report.loops = est.loops;
    est.assumed.sort();
    est.assumed.dedup();
    report.assumed_trip = est.assumed;
    report
}

/// Flip-flops for arrays partitioned completely in every dimension.
fn register_arrays(ctx: &Ctx) -> Resources {
    let mut ff = 0;
    for (name, dims) in &ctx.dims {
        let parts = ctx.parts.get(name).map(Vec::as_slice).unwrap_or(&[]);
        if (1..=dims.len()).all(|d| parts.iter().any(|p| p.dim == d && p.ptype == PartitionType::Complete)) {
            let width = ctx.types.get(name).map_or(32, |t| u64::from(t.width()));
            ff += dims.iter().product::<u64>() * width;
        }
    }
    Resources { dsp: 0, ff, lut: 0 }
}

/// Greedy list schedule of one group honoring bank ports; returns its length.
fn list_schedule(dag: &Dag, ports: u64) -> u64 {
    let mut usage: HashMap<(usize, u64), u64> = HashMap::new();
    let mut finish = vec![0u64; dag.ops.len()];
    let mut end = 0;
    for (i, op) in dag.ops.iter().enumerate() {
        let mut t = op.deps.iter().map(|&d| finish[d]).max().unwrap_or(0);
        if let Some(b) = op.bank {
            while usage.get(&(b, t)).copied().unwrap_or(0) >= ports {
                t += 1;
            }
            *usage.entry((b, t)).or_insert(0) += 1;
        }
        finish[i] = t + u64::from(op.latency);
        end = end.max(finish[i]);
    }
    end
}

struct Estimator {
    ports: u64,
    loops: Vec<LoopReport>,
    assumed: Vec<LoopId>,
}

impl Estimator {
    fn segment(&mut self, ctx: &mut Ctx, stmts: &[&Stmt], bind: &HashMap<String, i64>) -> (u64, Resources) {
        if stmts.is_empty() {
            return (0, Resources::default());
        }
        let mut env = Env::new(bind.clone());
        let mut lw = Lowerer::new(ctx);
        for s in stmts {
            lw.stmt(s, &mut env);
        }
        self.assumed.extend(env.assumed);
        (list_schedule(&lw.dag, self.ports), lw.dag.cost(0))
    }

    fn seq(&mut self, ctx: &mut Ctx, stmts: &[Stmt], bind: &HashMap<String, i64>) -> (u64, Resources) {
        let mut lat = 0;
        let mut res = Resources::default();
        let mut pending: Vec<&Stmt> = Vec::new();
        for s in stmts {
            let structured = match s {
                Stmt::For(_) => true,
                Stmt::If(i) => has_inner_loop(&i.then_branch) || i.else_branch.as_ref().is_some_and(has_inner_loop),
                Stmt::Block(b) => has_inner_loop(b),
                _ => false,
            };
            if !structured {
                pending.push(s);
                continue;
            }
            let (l, r) = self.segment(ctx, &pending, bind);
            pending.clear();
            lat += l;
            res = res + r;
            let (l, r) = match s {
                Stmt::For(lp) => self.for_loop(ctx, lp, bind),
                Stmt::Block(b) => self.seq(ctx, &b.stmts, bind),
                Stmt::If(i) => {
                    let (lt, rt) = self.seq(ctx, &i.then_branch.stmts, bind);
                    let (le, re) = i.else_branch.as_ref().map_or((0, Resources::default()), |e| self.seq(ctx, &e.stmts, bind));
                    (lt.max(le) + 1, rt + re)
                }
                _ => unreachable!(),
            };
            lat += l;
            res = res + r;
        }
        let (l, r) = self.segment(ctx, &pending, bind);
        (lat + l, res + r)
    }

    fn for_loop(&mut self, ctx: &mut Ctx, l: &ForLoop, bind: &HashMap<String, i64>) -> (u64, Resources) {
        let (var, bounds) = loop_bounds(l);
        let b = bounds.unwrap_or_else(|| {
            self.assumed.push(l.id);
            LoopBounds { start: 0, step: 1, trip: 1 }
        });
        let control = {
            let c = ctx.costs.get(OpClass::IntAdd);
            Resources { dsp: c.dsp, ff: c.ff, lut: c.lut }
        };
        let copies = unroll_copies(l, b.trip);
        let groups = b.trip.div_ceil(copies);
        let target = l.pipeline_ii().map(|ii| u64::from(ii.unwrap_or(1)));
        let flat = target.is_some() || !has_inner_loop(&l.body);
        let (latency, res, depth, ii) = if b.trip == 0 {
            (0, control, 0, None)
        } else if flat {
            let lowered = if target.is_some() { groups.min(4) } else { 1 };
            let mut env = Env::new(bind.clone());
            let mut lw = Lowerer::new(ctx);
            lower_region(&mut lw, l, &b, &var, copies, 0, lowered, &mut env);
            self.assumed.extend(env.assumed);
            let dag = lw.dag;
            let res = dag.cost(0) + control;
            match target {
                Some(t) => {
                    let depth = dag.depth(0).max(1);
                    let ii_res = dag.bank_load(0).values().map(|n| n.div_ceil(self.ports)).max().unwrap_or(1);
                    let ii = t.max(ii_res).max(dag.recurrence_ii()).max(1);
                    (depth + (groups - 1) * ii, res, depth, Some(ii))
                }
                None => {
                    let depth = list_schedule(&dag, self.ports).max(1);
                    (groups * depth, res, depth, None)
                }
            }
        } else {
            let mut inner = bind.clone();
            inner.insert(var, b.start);
            let (body_lat, body_res) = self.seq(ctx, &l.body.stmts, &inner);
            let depth = body_lat.max(1);
            (groups * depth, body_res * copies + control, depth, None)
        };
        self.loops.push(LoopReport { id: l.id, trip: b.trip, copies, ii, depth, latency });
        (latency, res)
    }
}

/// Fills the callee table used by the scheduler for call latencies.
pub(crate) fn callee_table(design: &Ast, ctx: &mut Ctx, ports: u64) {
    let mut est = Estimator { ports, loops: Vec::new(), assumed: Vec::new() };
    for f in design.functions() {
        let r = est.seq(ctx, &f.body.stmts, &HashMap::new());
        ctx.calls.insert(f.name.clone(), (r.0.max(1), r.1));
    }
}

/// The un-optimized form of a design: every directive removed. With
/// `autopipeline`, innermost loops get a default pipeline, mimicking tools
/// that pipeline innermost loops on their own.
pub fn baseline_design(design: &Ast, autopipeline: bool) -> Ast {
    let mut out = design.without_pragmas();
    if autopipeline {
        let meta = extract_metadata(&out);
        for l in meta.loops.iter().filter(|l| l.children.is_empty()) {
            if let Ok(next) = attach_pragma(&out, &PragmaSite::Loop(l.id), Pragma::pipeline(None)) {
                out = next;
            }
        }
    }
    out
}

/// Latency estimate of the directive-free design.
pub fn baseline_estimate(design: &Ast, device: &DeviceProfile, costs: &OpCostTable) -> QoRReport {
    estimate(&baseline_design(design, false), device, costs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportDialect {
    /// One line `latency,dsp,ff,lut`, optionally after a header line.
    #[default]
    Csv,
}

/// Reads a synthesis report into a QoR record for `device`.
pub fn parse_tool_report(text: &str, dialect: ReportDialect, device: &DeviceProfile) -> Result<QoRReport, QorError> {
    let ReportDialect::Csv = dialect;
    let line = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .find(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .ok_or_else(|| QorError::MalformedReport("no data line".into()))?;
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(QorError::MalformedReport(format!("expected 4 fields, got {}", fields.len())));
    }
    let mut nums = [0u64; 4];
    for (slot, f) in nums.iter_mut().zip(&fields) {
        *slot = f.parse().map_err(|_| QorError::MalformedReport(format!("not a count: `{f}`")))?;
    }
    Ok(QoRReport::new(device, nums[0], Resources { dsp: nums[1], ff: nums[2], lut: nums[3] }))
}

/// Environment variable naming an external synthesis command.
pub const TOOL_CMD_ENV: &str = "HLSFORGE_TOOL_CMD";

/// Runs an external tool whose standard output is a report in `dialect`.
/// The command template may contain `{file}`, replaced by the source path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolAdapter {
    pub command: String,
    #[serde(default)]
    pub dialect: ReportDialect,
}

impl ToolAdapter {
    pub fn from_env() -> Option<Self> {
        std::env::var(TOOL_CMD_ENV)
            .ok()
            .filter(|c| !c.trim().is_empty())
            .map(|command| ToolAdapter { command, dialect: ReportDialect::Csv })
    }

    pub fn run(&self, source: &Path, device: &DeviceProfile) -> Result<QoRReport, QorError> {
        let cmd = self.command.replace("{file}", &source.display().to_string());
        let out = std::process::Command::new("sh").arg("-c").arg(&cmd).output().map_err(|e| QorError::Tool(e.to_string()))?;
        if !out.status.success() {
            return Err(QorError::Tool(format!("`{cmd}` exited with {}", out.status)));
        }
        parse_tool_report(&String::from_utf8_lossy(&out.stdout), self.dialect, device)
    }
}
