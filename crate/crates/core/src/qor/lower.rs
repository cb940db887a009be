// SPDX-License-Identifier: Apache-2.0

//! Lowering of statement lists to operation DAGs, shared by the estimator
//! and the reference scheduler.

use super::{OpClass, OpCostTable, Resources};
use crate::frontend::*;
use std::collections::{BTreeMap, HashMap};

pub(crate) type BankId = usize;

#[derive(Clone, Debug)]
pub(crate) struct Op {
    pub class: OpClass,
    pub latency: u32,
    pub cost: Resources,
    pub deps: Vec<usize>,
    /// Memory bank whose port the op occupies for one cycle at issue.
    pub bank: Option<BankId>,
    pub group: usize,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Dag {
    pub ops: Vec<Op>,
}

impl Dag {
    pub fn cost(&self, group: usize) -> Resources {
        self.ops.iter().filter(|o| o.group == group).fold(Resources::default(), |acc, o| acc + o.cost)
    }

    /// Earliest start of every op, counting only edges inside its own group.
    pub fn offsets(&self) -> Vec<u64> {
        let mut start = vec![0u64; self.ops.len()];
        for (i, op) in self.ops.iter().enumerate() {
            start[i] = op
                .deps
                .iter()
                .filter(|&&d| self.ops[d].group == op.group)
                .map(|&d| start[d] + u64::from(self.ops[d].latency))
                .max()
                .unwrap_or(0);
        }
        start
    }

    /// Critical path of one group, unconstrained by ports.
    pub fn depth(&self, group: usize) -> u64 {
        let off = self.offsets();
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, o)| o.group == group)
            .map(|(i, o)| off[i] + u64::from(o.latency))
            .max()
            .unwrap_or(0)
    }

    /// Memory accesses per bank in one group.
    pub fn bank_load(&self, group: usize) -> BTreeMap<BankId, u64> {
        let mut m = BTreeMap::new();
        for o in self.ops.iter().filter(|o| o.group == group) {
            if let Some(b) = o.bank {
                *m.entry(b).or_insert(0) += 1;
            }
        }
        m
    }

    /// Smallest interval between group starts that satisfies every
    /// cross-group dependence, given in-group offsets.
    pub fn recurrence_ii(&self) -> u64 {
        let off = self.offsets();
        let mut ii = 0u64;
        for (v, op) in self.ops.iter().enumerate() {
            for &u in &op.deps {
                let gu = self.ops[u].group;
                if gu < op.group {
                    let need = (off[u] + u64::from(self.ops[u].latency)).saturating_sub(off[v]);
                    let dist = (op.group - gu) as u64;
                    ii = ii.max(need.div_ceil(dist));
                }
            }
        }
        ii
    }
}

/// A partition directive resolved against the array it names.
#[derive(Clone, Debug)]
pub(crate) struct PartSpec {
    pub dim: usize,
    pub ptype: PartitionType,
    pub factor: u64,
}

/// Design-wide facts needed while lowering.
pub(crate) struct Ctx<'a> {
    pub ast: &'a Ast,
    pub costs: &'a OpCostTable,
    pub types: HashMap<String, ScalarType>,
    pub dims: HashMap<String, Vec<u64>>,
    pub parts: HashMap<String, Vec<PartSpec>>,
    pub banks: HashMap<(String, Vec<u64>), BankId>,
    pub bank_names: Vec<String>,
    /// Latency and resources of user functions, filled by the estimator.
    pub calls: HashMap<String, (u64, Resources)>,
}

impl<'a> Ctx<'a> {
    pub fn new(ast: &'a Ast, costs: &'a OpCostTable) -> Self {
        let mut types = HashMap::new();
        let mut dims = HashMap::new();
        let mut note = |d: &VarDecl| {
            types.entry(d.name.clone()).or_insert_with(|| d.ty.scalar.clone());
            if d.is_array() {
                dims.entry(d.name.clone()).or_insert_with(|| d.dims.clone());
            }
        };
        for g in ast.globals() {
            note(g);
        }
        for f in ast.functions() {
            for p in &f.params {
                note(p);
            }
            f.body.walk(&mut |s| match s {
                Stmt::Decl(d) => note(d),
                Stmt::For(l) => {
                    if let Some(Stmt::Decl(d)) = l.init.as_deref() {
                        note(d);
                    }
                }
                _ => {}
            });
        }
        let mut parts: HashMap<String, Vec<PartSpec>> = HashMap::new();
        for (_, p) in ast.pragmas() {
            if let PragmaKind::ArrayPartition { variable, ptype, factor, dim } = &p.kind {
                if *dim >= 1 {
                    let spec = PartSpec { dim: *dim as usize, ptype: *ptype, factor: u64::from(factor.unwrap_or(1)).max(1) };
                    let list = parts.entry(variable.clone()).or_default();
                    list.retain(|s| s.dim != spec.dim);
                    list.push(spec);
                }
            }
        }
        Ctx { ast, costs, types, dims, parts, banks: HashMap::new(), bank_names: Vec::new(), calls: HashMap::new() }
    }

    fn is_float(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Float { .. } => true,
            ExprKind::Int(_) | ExprKind::SizeOf(_) | ExprKind::New { .. } | ExprKind::AddrOf(_) => false,
            ExprKind::Var(v) | ExprKind::Index { array: v, .. } => self.types.get(v).is_some_and(|t| t.is_float()),
            ExprKind::Unary { op: UnaryOp::Not, .. } => false,
            ExprKind::Unary { operand, .. } | ExprKind::Deref(operand) => self.is_float(operand),
            ExprKind::Binary { op, lhs, rhs } => {
                !op.is_comparison() && !matches!(op, BinaryOp::And | BinaryOp::Or) && (self.is_float(lhs) || self.is_float(rhs))
            }
            ExprKind::Call { name, args } => match name.as_str() {
                "sqrt" => true,
                "abs" | "min" | "max" => args.iter().any(|a| self.is_float(a)),
                other => self.ast.function(other).is_some_and(|f| f.ret.scalar.is_float()),
            },
        }
    }

    fn op(&self, class: OpClass, deps: Vec<usize>, group: usize) -> Op {
        let c = self.costs.get(class);
        Op { class, latency: c.latency, cost: Resources { dsp: c.dsp, ff: c.ff, lut: c.lut }, deps, bank: None, group }
    }

    /// Bank of an access, or `None` when the array lives in registers.
    fn bank(&mut self, array: &str, index: Option<&[i64]>) -> Option<BankId> {
        let dims = self.dims.get(array).cloned().unwrap_or_default();
        let parts = self.parts.get(array).cloned().unwrap_or_default();
        if !dims.is_empty() && (1..=dims.len()).all(|d| parts.iter().any(|p| p.dim == d && p.ptype == PartitionType::Complete)) {
            return None;
        }
        let mut comps = Vec::new();
        for p in &parts {
            let idx = index.and_then(|ix| ix.get(p.dim - 1)).copied();
            let extent = dims.get(p.dim - 1).copied().unwrap_or(1).max(1);
            let c = match (idx, p.ptype) {
                (None, _) => 0,
                (Some(i), PartitionType::Cyclic) => i.rem_euclid(p.factor as i64) as u64,
                (Some(i), PartitionType::Block) => i.max(0) as u64 / extent.div_ceil(p.factor),
                (Some(i), PartitionType::Complete) => i.max(0) as u64,
            };
            comps.push(p.dim as u64 * 1_000_000 + c);
        }
        comps.sort_unstable();
        let key = (array.to_string(), comps);
        let next = self.banks.len();
        let id = *self.banks.entry(key.clone()).or_insert(next);
        if id == next {
            self.bank_names.push(format!("{}{:?}", key.0, key.1));
        }
        Some(id)
    }
}

fn const_eval(e: &Expr, bind: &HashMap<String, i64>) -> Option<i64> {
    match &e.kind {
        ExprKind::Int(v) => Some(*v),
        ExprKind::Var(v) => bind.get(v).copied(),
        ExprKind::Unary { op: UnaryOp::Neg, operand } => const_eval(operand, bind).map(|v| -v),
        ExprKind::Binary { op, lhs, rhs } => {
            let (a, b) = (const_eval(lhs, bind)?, const_eval(rhs, bind)?);
            match op {
                BinaryOp::Add => a.checked_add(b),
                BinaryOp::Sub => a.checked_sub(b),
                BinaryOp::Mul => a.checked_mul(b),
                BinaryOp::Div if b != 0 => a.checked_div(b),
                BinaryOp::Rem if b != 0 => a.checked_rem(b),
                _ => None,
            }
        }
        _ => None,
    }
}

fn is_literal(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Float { .. } | ExprKind::SizeOf(_) => true,
        ExprKind::Unary { operand, .. } => is_literal(operand),
        ExprKind::Binary { lhs, rhs, .. } => is_literal(lhs) && is_literal(rhs),
        _ => false,
    }
}

fn has_effects(e: &Expr) -> bool {
    let mut hit = false;
    e.walk(&mut |x| {
        if matches!(x.kind, ExprKind::Index { .. } | ExprKind::Call { .. } | ExprKind::Deref(_)) {
            hit = true;
        }
    });
    hit
}

/// Stores per array: the issuing op and its subscripts, when known.
type StoreLog = HashMap<String, Vec<(usize, Option<Vec<i64>>)>>;

/// Mutable state of one lowering pass.
#[derive(Clone, Default)]
pub(crate) struct Env {
    pub bind: HashMap<String, i64>,
    regs: HashMap<String, Option<usize>>,
    stores: StoreLog,
    /// Index variables of the region; accesses invariant in all of them are
    /// held in registers.
    pub region_vars: Vec<String>,
    pub group: usize,
    pred: Option<usize>,
    /// Loops executed once because their trip count is unknown.
    pub assumed: Vec<LoopId>,
}

impl Env {
    pub fn new(bind: HashMap<String, i64>) -> Self {
        Env { bind, ..Default::default() }
    }
}

pub(crate) struct Lowerer<'c, 'a> {
    pub ctx: &'c mut Ctx<'a>,
    pub dag: Dag,
}

impl<'c, 'a> Lowerer<'c, 'a> {
    pub fn new(ctx: &'c mut Ctx<'a>) -> Self {
        Lowerer { ctx, dag: Dag::default() }
    }

    fn push(&mut self, mut op: Op, env: &Env) -> usize {
        op.deps.sort_unstable();
        op.deps.dedup();
        op.group = env.group;
        self.dag.ops.push(op);
        self.dag.ops.len() - 1
    }

    fn promoted(&self, indices: &[Expr], env: &Env) -> bool {
        !env.region_vars.is_empty() && indices.iter().all(|i| env.region_vars.iter().all(|v| !i.mentions_var(v)))
    }

    fn reg_key(array: &str, indices: &[Expr]) -> String {
        let mut k = array.to_string();
        for i in indices {
            k.push('[');
            k.push_str(&emit_expr(i));
            k.push(']');
        }
        k
    }

    fn load(&mut self, array: &str, indices: &[Expr], env: &mut Env) -> Option<usize> {
        let mut deps: Vec<usize> = indices.iter().filter(|i| has_effects(i)).filter_map(|i| self.expr(i, env)).collect();
        if self.promoted(indices, env) {
            return env.regs.get(&Self::reg_key(array, indices)).copied().flatten();
        }
        let addr: Option<Vec<i64>> = indices.iter().map(|i| const_eval(i, &env.bind)).collect();
        if let Some(list) = env.stores.get(array) {
            if let Some((s, _)) = list.iter().rev().find(|(_, a)| a.is_none() || addr.is_none() || *a == addr) {
                deps.push(*s);
            }
        }
        let bank = self.ctx.bank(array, addr.as_deref());
        let mut op = self.ctx.op(OpClass::Load, deps, env.group);
        if bank.is_none() {
            op.latency = 0;
            op.cost = Resources::default();
        }
        op.bank = bank;
        Some(self.push(op, env))
    }

    fn store(&mut self, array: &str, indices: &[Expr], value: Option<usize>, env: &mut Env) {
        if self.promoted(indices, env) {
            env.regs.insert(Self::reg_key(array, indices), value);
            return;
        }
        let mut deps: Vec<usize> = indices.iter().filter(|i| has_effects(i)).filter_map(|i| self.expr(i, env)).collect();
        deps.extend(value);
        deps.extend(env.pred);
        let addr: Option<Vec<i64>> = indices.iter().map(|i| const_eval(i, &env.bind)).collect();
        let bank = self.ctx.bank(array, addr.as_deref());
        let mut op = self.ctx.op(OpClass::Store, deps, env.group);
        if bank.is_none() {
            op.latency = 0;
            op.cost = Resources::default();
        }
        op.bank = bank;
        let id = self.push(op, env);
        env.stores.entry(array.to_string()).or_default().push((id, addr));
    }

    fn arith(&mut self, class: OpClass, deps: Vec<usize>, env: &Env) -> usize {
        let op = self.ctx.op(class, deps, env.group);
        self.push(op, env)
    }

    fn binary_class(&self, op: BinaryOp, float: bool) -> OpClass {
        match op {
            BinaryOp::Mul if float => OpClass::FloatMul,
            BinaryOp::Mul => OpClass::IntMul,
            BinaryOp::Div | BinaryOp::Rem => OpClass::Div,
            _ if float => OpClass::FloatAdd,
            _ => OpClass::IntAdd,
        }
    }

    /// Lowers an expression; returns the op producing its value, or `None`
    /// when the value is available at cycle 0.
    pub fn expr(&mut self, e: &Expr, env: &mut Env) -> Option<usize> {
        if is_literal(e) {
            return None;
        }
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Float { .. } | ExprKind::SizeOf(_) => None,
            ExprKind::Var(v) => env.regs.get(v).copied().flatten(),
            ExprKind::Index { array, indices } => self.load(array, indices, env),
            ExprKind::Deref(inner) => {
                let d = self.expr(inner, env);
                let mut op = self.ctx.op(OpClass::Load, d.into_iter().collect(), env.group);
                op.bank = self.ctx.bank("*", None);
                Some(self.push(op, env))
            }
            ExprKind::AddrOf(inner) => match &inner.kind {
                ExprKind::Index { indices, .. } => {
                    let deps: Vec<usize> = indices.iter().filter_map(|i| self.expr(i, env)).collect();
                    deps.into_iter().max()
                }
                _ => None,
            },
            ExprKind::Unary { operand, .. } => {
                let d = self.expr(operand, env);
                let class = if self.ctx.is_float(operand) { OpClass::FloatAdd } else { OpClass::IntAdd };
                Some(self.arith(class, d.into_iter().collect(), env))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let float = self.ctx.is_float(lhs) || self.ctx.is_float(rhs);
                let mut deps = Vec::new();
                deps.extend(self.expr(lhs, env));
                deps.extend(self.expr(rhs, env));
                let class = self.binary_class(*op, float);
                Some(self.arith(class, deps, env))
            }
            ExprKind::Call { name, args } => {
                let mut deps = Vec::new();
                for a in args {
                    deps.extend(self.expr(a, env));
                }
                let float = args.iter().any(|a| self.ctx.is_float(a));
                match name.as_str() {
                    "abs" | "min" | "max" => {
                        let class = if float { OpClass::FloatAdd } else { OpClass::IntAdd };
                        Some(self.arith(class, deps, env))
                    }
                    "sqrt" => Some(self.arith(OpClass::Div, deps, env)),
                    other => {
                        let (lat, cost) = self.ctx.calls.get(other).copied().unwrap_or((1, Resources::default()));
                        let op = Op {
                            class: OpClass::Call,
                            latency: lat.min(u64::from(u32::MAX)) as u32,
                            cost,
                            deps,
                            bank: None,
                            group: env.group,
                        };
                        Some(self.push(op, env))
                    }
                }
            }
            ExprKind::New { count, .. } => self.expr(count, env),
        }
    }

    fn assign(&mut self, a: &Assign, env: &mut Env) {
        let value = a.value.as_ref().and_then(|v| self.expr(v, env));
        let float = self.ctx.is_float(&a.target) || a.value.as_ref().is_some_and(|v| self.ctx.is_float(v));
        let combine = |this: &mut Self, old: Option<usize>, env: &mut Env| -> Option<usize> {
            match a.op.binary() {
                None => value,
                Some(op) => {
                    let class = this.binary_class(op, float);
                    let deps: Vec<usize> = old.into_iter().chain(value).collect();
                    Some(this.arith(class, deps, env))
                }
            }
        };
        match &a.target.kind {
            ExprKind::Var(v) => {
                let old = env.regs.get(v).copied().flatten();
                let new = if a.op == AssignOp::Set { value } else { combine(self, old, env) };
                env.regs.insert(v.clone(), new);
            }
            ExprKind::Index { array, indices } => {
                let new = if a.op == AssignOp::Set {
                    value
                } else {
                    let old = self.load(array, indices, env);
                    combine(self, old, env)
                };
                self.store(array, indices, new, env);
            }
            _ => {
                let new = combine(self, None, env);
                let mut op = self.ctx.op(OpClass::Store, new.into_iter().collect(), env.group);
                op.bank = self.ctx.bank("*", None);
                self.push(op, env);
            }
        }
    }

    /// Lowers straight-line statements; nested loops are fully unrolled with
    /// their index bound to concrete values.
    pub fn stmts(&mut self, stmts: &[Stmt], env: &mut Env) {
        for s in stmts {
            self.stmt(s, env);
        }
    }

    pub fn stmt(&mut self, s: &Stmt, env: &mut Env) {
        match s {
            Stmt::Decl(d) => {
                if !d.is_array() {
                    let v = d.init.as_ref().and_then(|e| self.expr(e, env));
                    env.regs.insert(d.name.clone(), v);
                }
            }
            Stmt::Assign(a) => self.assign(a, env),
            Stmt::Expr(e) => {
                self.expr(e, env);
            }
            Stmt::Return(e, _) => {
                if let Some(e) = e {
                    self.expr(e, env);
                }
            }
            Stmt::Block(b) => self.stmts(&b.stmts, env),
            Stmt::If(i) => {
                let cond = self.expr(&i.cond, env);
                let saved_pred = env.pred;
                env.pred = match (cond, saved_pred) {
                    (Some(c), _) => Some(c),
                    (None, p) => p,
                };
                let before = env.regs.clone();
                self.stmts(&i.then_branch.stmts, env);
                let after_then = std::mem::replace(&mut env.regs, before);
                if let Some(e) = &i.else_branch {
                    self.stmts(&e.stmts, env);
                }
                let mut keys: Vec<String> = after_then.keys().chain(env.regs.keys()).cloned().collect();
                keys.sort();
                keys.dedup();
                for k in keys {
                    let t = after_then.get(&k).copied().flatten();
                    let e = env.regs.get(&k).copied().flatten();
                    if t != e {
                        let deps: Vec<usize> = t.into_iter().chain(e).chain(cond).collect();
                        let id = self.arith(OpClass::Mux, deps, env);
                        env.regs.insert(k, Some(id));
                    }
                }
                env.pred = saved_pred;
            }
            Stmt::For(l) => {
                let (var, bounds) = loop_bounds(l);
                match bounds {
                    Some(b) => {
                        for k in 0..b.trip {
                            env.bind.insert(var.clone(), b.start + b.step * k as i64);
                            self.stmts(&l.body.stmts, env);
                        }
                        env.bind.remove(&var);
                    }
                    None => {
                        env.assumed.push(l.id);
                        self.stmts(&l.body.stmts, env);
                    }
                }
            }
        }
    }
}

/// Index variables of `l` and every loop nested in it.
pub(crate) fn nest_vars(l: &ForLoop) -> Vec<String> {
    let mut out = vec![loop_bounds(l).0];
    l.body.walk(&mut |s| {
        if let Stmt::For(inner) = s {
            out.push(loop_bounds(inner).0);
        }
    });
    out.retain(|v| !v.is_empty());
    out
}

pub(crate) fn has_inner_loop(b: &Block) -> bool {
    let mut hit = false;
    b.walk(&mut |s| {
        if matches!(s, Stmt::For(_)) {
            hit = true;
        }
    });
    hit
}

/// Unroll factor (copies per group), clamped to the trip count.
pub(crate) fn unroll_copies(l: &ForLoop, trip: u64) -> u64 {
    match l.unroll() {
        Some(Some(f)) => u64::from(f).min(trip).max(1),
        Some(None) => trip.max(1),
        None => 1,
    }
}

/// Lowers `groups` consecutive groups of a flat region starting at group
/// `first`, each holding `copies` iterations of `l`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lower_region(
    lw: &mut Lowerer<'_, '_>,
    l: &ForLoop,
    bounds: &LoopBounds,
    var: &str,
    copies: u64,
    first: u64,
    groups: u64,
    env: &mut Env,
) {
    env.region_vars = nest_vars(l);
    for g in first..first + groups {
        env.group = (g - first) as usize;
        for c in 0..copies {
            let k = g * copies + c;
            if k >= bounds.trip {
                break;
            }
            env.bind.insert(var.to_string(), bounds.start + bounds.step * k as i64);
            lw.stmts(&l.body.stmts, env);
        }
    }
    env.bind.remove(var);
}
