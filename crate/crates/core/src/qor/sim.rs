// SPDX-License-Identifier: Apache-2.0

//! Cycle-level list scheduler over the fully expanded iteration space.

use super::lower::{has_inner_loop, lower_region, unroll_copies, Ctx, Dag, Env, Lowerer};
use super::{callee_table, DeviceProfile, OpClass, OpCostTable, QorError};
use crate::frontend::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// One operation issue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub cycle: u64,
    pub class: OpClass,
    /// Index into `ScheduleTrace::banks` for memory operations.
    pub bank: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleTrace {
    pub issues: Vec<Issue>,
    pub banks: Vec<String>,
    pub ports_per_bank: u32,
}

impl ScheduleTrace {
    /// Ports in use per (cycle, bank).
    pub fn port_usage(&self) -> BTreeMap<(u64, u32), u32> {
        let mut m = BTreeMap::new();
        for i in &self.issues {
            if let Some(b) = i.bank {
                *m.entry((i.cycle, b)).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn max_port_usage(&self) -> u32 {
        self.port_usage().values().copied().max().unwrap_or(0)
    }

    /// Operations issued in `cycle`.
    pub fn issued_at(&self, cycle: u64) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(move |i| i.cycle == cycle)
    }
}

/// Schedules every operation of every iteration, honoring data
/// dependences, operation latencies and bank ports. Pipelined loops start
/// a new iteration group every II cycles when dependences and ports allow.
pub fn simulate_schedule(design: &Ast, device: &DeviceProfile, costs: &OpCostTable) -> Result<(u64, ScheduleTrace), QorError> {
    let ports = device.bram_ports_per_bank.max(1);
    let mut ctx = Ctx::new(design, costs);
    callee_table(design, &mut ctx, u64::from(ports));
    let mut sim = Sim { ports: u64::from(ports), usage: HashMap::new(), issues: Vec::new() };
    let end = match design.top() {
        Some(f) => {
            let e = sim.seq(&mut ctx, &f.body.stmts, &HashMap::new(), 0)?;
            if f.body.stmts.is_empty() {
                e
            } else {
                e.max(1)
            }
        }
        None => 0,
    };
    let mut issues = sim.issues;
    issues.sort_by_key(|i| i.cycle);
    Ok((end, ScheduleTrace { issues, banks: ctx.bank_names.clone(), ports_per_bank: ports }))
}

struct Sim {
    ports: u64,
    usage: HashMap<(usize, u64), u64>,
    issues: Vec<Issue>,
}

impl Sim {
    /// Places op `i` no earlier than `floor` and after its operands.
    fn place_op(&mut self, dag: &Dag, i: usize, finish: &mut [u64], floor: u64) {
        let op = &dag.ops[i];
        let mut t = op.deps.iter().map(|&d| finish[d]).fold(floor, u64::max);
        if let Some(b) = op.bank {
            while self.usage.get(&(b, t)).copied().unwrap_or(0) >= self.ports {
                t += 1;
            }
            *self.usage.entry((b, t)).or_insert(0) += 1;
        }
        self.issues.push(Issue { cycle: t, class: op.class, bank: op.bank.map(|b| b as u32) });
        finish[i] = t + u64::from(op.latency);
    }

    fn segment(&mut self, ctx: &mut Ctx, stmts: &[&Stmt], bind: &HashMap<String, i64>, start: u64) -> Result<u64, QorError> {
        if stmts.is_empty() {
            return Ok(start);
        }
        let mut env = Env::new(bind.clone());
        let mut lw = Lowerer::new(ctx);
        for s in stmts {
            lw.stmt(s, &mut env);
        }
        if let Some(id) = env.assumed.first() {
            return Err(QorError::UnknownTripCount(*id));
        }
        let dag = lw.dag;
        let mut finish = vec![0u64; dag.ops.len()];
        for i in 0..dag.ops.len() {
            self.place_op(&dag, i, &mut finish, start);
        }
        Ok(finish.into_iter().max().unwrap_or(start).max(start))
    }

    fn seq(&mut self, ctx: &mut Ctx, stmts: &[Stmt], bind: &HashMap<String, i64>, start: u64) -> Result<u64, QorError> {
        let mut cur = start;
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
            cur = self.segment(ctx, &pending, bind, cur)?;
            pending.clear();
            cur = match s {
                Stmt::For(l) => self.for_loop(ctx, l, bind, cur)?,
                Stmt::Block(b) => self.seq(ctx, &b.stmts, bind, cur)?,
                Stmt::If(i) => {
                    let t = self.seq(ctx, &i.then_branch.stmts, bind, cur)?;
                    let e = match &i.else_branch {
                        Some(e) => self.seq(ctx, &e.stmts, bind, cur)?,
                        None => cur,
                    };
                    t.max(e) + 1
                }
                _ => unreachable!(),
            };
        }
        self.segment(ctx, &pending, bind, cur)
    }

    fn for_loop(&mut self, ctx: &mut Ctx, l: &ForLoop, bind: &HashMap<String, i64>, start: u64) -> Result<u64, QorError> {
        let (var, bounds) = loop_bounds(l);
        let b = bounds.ok_or(QorError::UnknownTripCount(l.id))?;
        if b.trip == 0 {
            return Ok(start);
        }
        let copies = unroll_copies(l, b.trip);
        let groups = b.trip.div_ceil(copies);
        let target = l.pipeline_ii().map(|ii| u64::from(ii.unwrap_or(1)));
        let flat = target.is_some() || !has_inner_loop(&l.body);
        if flat {
            let mut env = Env::new(bind.clone());
            let mut lw = Lowerer::new(ctx);
            lower_region(&mut lw, l, &b, &var, copies, 0, groups, &mut env);
            if let Some(id) = env.assumed.first() {
                return Err(QorError::UnknownTripCount(*id));
            }
            let dag = lw.dag;
            let mut finish = vec![0u64; dag.ops.len()];
            return Ok(match target {
                Some(ii) => {
                    for i in 0..dag.ops.len() {
                        let floor = start + dag.ops[i].group as u64 * ii;
                        self.place_op(&dag, i, &mut finish, floor);
                    }
                    let end = finish.into_iter().max().unwrap_or(start);
                    end.max(start + (groups - 1) * ii + 1)
                }
                None => {
                    // Group g starts once group g - 1 has finished; every
                    // group takes at least one cycle.
                    let mut cur = start;
                    let mut i = 0;
                    for g in 0..groups as usize {
                        let mut end = cur + 1;
                        while i < dag.ops.len() && dag.ops[i].group == g {
                            self.place_op(&dag, i, &mut finish, cur);
                            end = end.max(finish[i]);
                            i += 1;
                        }
                        cur = end;
                    }
                    cur
                }
            });
        }
        let mut cur = start;
        for g in 0..groups {
            let mut end = cur + 1;
            for c in 0..copies {
                let k = g * copies + c;
                if k >= b.trip {
                    break;
                }
                let mut inner = bind.clone();
                inner.insert(var.to_string(), b.start + b.step * k as i64);
                end = end.max(self.seq(ctx, &l.body.stmts, &inner, cur)?);
            }
            cur = end;
        }
        Ok(cur)
    }
}
