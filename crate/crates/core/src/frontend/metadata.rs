// SPDX-License-Identifier: Apache-2.0

//! Loop and array metadata: trip counts, affine accesses and a conservative
//! loop-carried dependence test.

use super::ast::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// `Σ coeff·var + constant` over integer variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Affine {
    pub terms: BTreeMap<String, i64>,
    pub constant: i64,
}

impl Affine {
    pub fn constant(c: i64) -> Self {
        Affine { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.to_string(), 1);
        Affine { terms, constant: 0 }
    }

    pub fn from_expr(e: &Expr) -> Option<Affine> {
        match &e.kind {
            ExprKind::Int(v) => Some(Affine::constant(*v)),
            ExprKind::Var(v) => Some(Affine::var(v)),
            ExprKind::Unary { op: UnaryOp::Neg, operand } => Some(Affine::from_expr(operand)?.scale(-1)),
            ExprKind::Binary { op, lhs, rhs } => {
                let l = Affine::from_expr(lhs)?;
                let r = Affine::from_expr(rhs)?;
                match op {
                    BinaryOp::Add => Some(l.add(&r, 1)),
                    BinaryOp::Sub => Some(l.add(&r, -1)),
                    BinaryOp::Mul if l.is_const() => Some(r.scale(l.constant)),
                    BinaryOp::Mul if r.is_const() => Some(l.scale(r.constant)),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, var: &str) -> i64 {
        self.terms.get(var).copied().unwrap_or(0)
    }

    fn add(mut self, other: &Affine, sign: i64) -> Affine {
        for (v, c) in &other.terms {
            *self.terms.entry(v.clone()).or_insert(0) += sign * c;
        }
        self.terms.retain(|_, c| *c != 0);
        self.constant += sign * other.constant;
        self
    }

    fn scale(mut self, k: i64) -> Affine {
        if k == 0 {
            return Affine::constant(0);
        }
        for c in self.terms.values_mut() {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    /// Terms other than `var`.
    pub fn without(&self, var: &str) -> BTreeMap<String, i64> {
        self.terms.iter().filter(|(v, _)| v.as_str() != var).map(|(v, c)| (v.clone(), *c)).collect()
    }

    /// Inclusive value range given per-variable ranges; `None` if some
    /// variable has no known range.
    pub fn range(&self, ranges: &dyn Fn(&str) -> Option<(i64, i64)>) -> Option<(i64, i64)> {
        let (mut lo, mut hi) = (self.constant, self.constant);
        for (v, c) in &self.terms {
            let (a, b) = ranges(v)?;
            let (x, y) = (c * a, c * b);
            lo += x.min(y);
            hi += x.max(y);
        }
        Some((lo, hi))
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.terms {
            let (sign, mag) = if *c < 0 { ("-", -c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{mag}*{v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", -self.constant)
        } else {
            Ok(())
        }
    }
}

/// Constant iteration space of a loop: `start, start+step, ...` (`trip` values).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopBounds {
    pub start: i64,
    pub step: i64,
    pub trip: u64,
}

impl LoopBounds {
    pub fn last(&self) -> i64 {
        self.start + self.step * (self.trip as i64 - 1)
    }

    pub fn min(&self) -> i64 {
        self.start.min(self.last())
    }

    pub fn max(&self) -> i64 {
        self.start.max(self.last())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepKind {
    /// Accumulation through an associative operator.
    Accumulation(BinaryOp),
    Flow,
}

/// A value produced in one iteration and consumed in a later one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarriedDep {
    pub variable: String,
    pub kind: DepKind,
    /// Iteration distance when it is a single known value.
    pub distance: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub id: LoopId,
    pub label: Option<String>,
    pub function: String,
    pub trip_count: Option<u64>,
    pub depth: u32,
    pub parent: Option<LoopId>,
    pub children: Vec<LoopId>,
    /// Arithmetic operations executed per iteration, nested loops included.
    pub body_ops: u64,
    pub carried_dependence: bool,
    pub dependences: Vec<CarriedDep>,
    pub index_var: String,
    pub bounds: Option<LoopBounds>,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    Read,
    Write,
}

/// One subscript of one array reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayAccess {
    /// Groups the subscripts of one reference.
    pub reference: usize,
    /// Innermost enclosing loop.
    pub loop_id: Option<LoopId>,
    /// Enclosing loops, outermost first.
    pub loops: Vec<LoopId>,
    pub dim: usize,
    pub index: Option<Affine>,
    pub text: String,
    pub kind: AccessKind,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayInfo {
    pub name: String,
    pub element_type: ScalarType,
    pub dims: Vec<u64>,
    /// Owning function; `None` for globals.
    pub function: Option<String>,
    pub is_param: bool,
    pub accesses: Vec<ArrayAccess>,
}

impl ArrayInfo {
    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn elements(&self) -> u64 {
        self.dims.iter().product()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMetadata {
    pub loops: Vec<LoopInfo>,
    pub arrays: Vec<ArrayInfo>,
    /// Legal directive insertion points: PIPELINE and UNROLL per loop, one
    /// ARRAY_PARTITION per partition type per array.
    pub pragma_sites: usize,
}

impl DesignMetadata {
    pub fn loop_info(&self, id: LoopId) -> Option<&LoopInfo> {
        self.loops.iter().find(|l| l.id == id)
    }

    pub fn array(&self, name: &str) -> Option<&ArrayInfo> {
        self.arrays.iter().find(|a| a.name == name)
    }

    /// Loops strictly inside `id`, in pre-order.
    pub fn descendants(&self, id: LoopId) -> Vec<LoopId> {
        let mut out = Vec::new();
        let mut stack: Vec<LoopId> = self.loop_info(id).map(|l| l.children.clone()).unwrap_or_default();
        stack.reverse();
        while let Some(c) = stack.pop() {
            out.push(c);
            if let Some(l) = self.loop_info(c) {
                stack.extend(l.children.iter().rev());
            }
        }
        out
    }

    pub fn is_innermost(&self, id: LoopId) -> bool {
        self.loop_info(id).is_some_and(|l| l.children.is_empty())
    }

    /// Loop whose index variable is `var` among `id` and its ancestors.
    pub fn enclosing_loop_with_var(&self, id: LoopId, var: &str) -> Option<LoopId> {
        let mut cur = Some(id);
        while let Some(c) = cur {
            let l = self.loop_info(c)?;
            if l.index_var == var {
                return Some(c);
            }
            cur = l.parent;
        }
        None
    }

    /// Inclusive range of a loop variable, if the loop has constant bounds.
    pub fn var_range(&self, loops: &[LoopId], var: &str) -> Option<(i64, i64)> {
        loops
            .iter()
            .rev()
            .filter_map(|id| self.loop_info(*id))
            .find(|l| l.index_var == var)
            .and_then(|l| l.bounds)
            .map(|b| (b.min(), b.max()))
    }
}

pub fn extract_metadata(ast: &Ast) -> DesignMetadata {
    let mut cx = Collector::default();
    for g in ast.globals() {
        if g.is_array() {
            cx.arrays.push(ArrayInfo {
                name: g.name.clone(),
                element_type: g.ty.scalar.clone(),
                dims: g.dims.clone(),
                function: None,
                is_param: false,
                accesses: Vec::new(),
            });
        }
    }
    for f in ast.functions() {
        cx.function = f.name.clone();
        for p in &f.params {
            if p.is_array() {
                cx.arrays.push(ArrayInfo {
                    name: p.name.clone(),
                    element_type: p.ty.scalar.clone(),
                    dims: p.dims.clone(),
                    function: Some(f.name.clone()),
                    is_param: true,
                    accesses: Vec::new(),
                });
            }
        }
        cx.block(&f.body, &mut Vec::new());
    }
    cx.finish()
}

#[derive(Clone, Debug)]
struct Ref {
    array: String,
    indices: Vec<Option<Affine>>,
    write: bool,
    loops: Vec<LoopId>,
    stmt: usize,
    accum: Option<BinaryOp>,
}

#[derive(Clone, Debug)]
struct ScalarEvent {
    var: String,
    write: bool,
    /// Enclosing scopes at the event, outermost first.
    scopes: Vec<Scope>,
    accum: Option<BinaryOp>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Scope {
    Loop(LoopId, bool),
    Branch,
}

#[derive(Default)]
struct Collector {
    function: String,
    loops: Vec<LoopInfo>,
    arrays: Vec<ArrayInfo>,
    refs: Vec<Ref>,
    scalars: Vec<ScalarEvent>,
    array_names: BTreeSet<String>,
    stmt_counter: usize,
    /// Ops per loop, excluding nested loops.
    own_ops: HashMap<LoopId, u64>,
}

impl Collector {
    fn loop_ids(scopes: &[Scope]) -> Vec<LoopId> {
        scopes
            .iter()
            .filter_map(|s| match s {
                Scope::Loop(id, _) => Some(*id),
                Scope::Branch => None,
            })
            .collect()
    }

    fn is_array(&self, name: &str) -> bool {
        self.array_names.contains(name)
            || self
                .arrays
                .iter()
                .any(|a| a.name == name && (a.function.is_none() || a.function.as_deref() == Some(&self.function)))
    }

    fn block(&mut self, b: &Block, scopes: &mut Vec<Scope>) {
        for s in &b.stmts {
            self.stmt(s, scopes);
        }
    }

    fn add_ops(&mut self, scopes: &[Scope], n: u64) {
        if let Some(id) = Self::loop_ids(scopes).last() {
            *self.own_ops.entry(*id).or_insert(0) += n;
        }
    }

    fn stmt(&mut self, s: &Stmt, scopes: &mut Vec<Scope>) {
        self.stmt_counter += 1;
        let sid = self.stmt_counter;
        match s {
            Stmt::Decl(d) => {
                if d.is_array() {
                    self.array_names.insert(d.name.clone());
                    self.arrays.push(ArrayInfo {
                        name: d.name.clone(),
                        element_type: d.ty.scalar.clone(),
                        dims: d.dims.clone(),
                        function: Some(self.function.clone()),
                        is_param: false,
                        accesses: Vec::new(),
                    });
                }
                if let Some(init) = &d.init {
                    self.reads(init, scopes, sid, None);
                    let n = value_ops(init);
                    self.add_ops(scopes, n);
                }
                if !d.is_array() {
                    self.scalars.push(ScalarEvent { var: d.name.clone(), write: true, scopes: scopes.clone(), accum: None });
                }
            }
            Stmt::Assign(a) => self.assign(a, scopes, sid),
            Stmt::Expr(e) => {
                self.reads(e, scopes, sid, None);
                let n = value_ops(e);
                self.add_ops(scopes, n);
            }
            Stmt::Return(e, _) => {
                if let Some(e) = e {
                    self.reads(e, scopes, sid, None);
                }
            }
            Stmt::Block(b) => self.block(b, scopes),
            Stmt::If(i) => {
                self.reads(&i.cond, scopes, sid, None);
                let n = value_ops(&i.cond);
                self.add_ops(scopes, n);
                scopes.push(Scope::Branch);
                self.block(&i.then_branch, scopes);
                if let Some(e) = &i.else_branch {
                    self.block(e, scopes);
                }
                scopes.pop();
            }
            Stmt::For(l) => self.for_loop(l, scopes),
        }
    }

    fn for_loop(&mut self, l: &ForLoop, scopes: &mut Vec<Scope>) {
        let enclosing = Self::loop_ids(scopes);
        let parent = enclosing.last().copied();
        let (index_var, bounds) = loop_bounds(l);
        if let Some(init) = &l.init {
            self.stmt(init, scopes);
        }
        let info = LoopInfo {
            id: l.id,
            label: l.label.clone(),
            function: self.function.clone(),
            trip_count: bounds.map(|b| b.trip),
            depth: enclosing.len() as u32,
            parent,
            children: Vec::new(),
            body_ops: 0,
            carried_dependence: false,
            dependences: Vec::new(),
            index_var: index_var.clone(),
            bounds,
            loc: l.loc,
        };
        if let Some(p) = parent {
            if let Some(pl) = self.loops.iter_mut().find(|x| x.id == p) {
                pl.children.push(l.id);
            }
        }
        self.loops.push(info);
        scopes.push(Scope::Loop(l.id, bounds.is_some()));
        let sid = self.stmt_counter;
        if let Some(c) = &l.cond {
            self.reads(c, scopes, sid, None);
        }
        self.block(&l.body, scopes);
        if let Some(step) = &l.step {
            self.stmt(step, scopes);
        }
        scopes.pop();
    }

    fn assign(&mut self, a: &Assign, scopes: &[Scope], sid: usize) {
        let accum = accumulation_op(a);
        // Reads happen before the write.
        if let Some(v) = &a.value {
            self.reads(v, scopes, sid, accum.map(|op| (op, &a.target)));
        }
        let compound = a.op != AssignOp::Set;
        let loop_vars = self.loop_vars(scopes);
        let mut ops = a.value.as_ref().map(value_ops).unwrap_or(0);
        if compound {
            let target_is_loop_var = matches!(&a.target.kind, ExprKind::Var(v) if loop_vars.contains(v));
            if !target_is_loop_var {
                ops += 1;
            }
        }
        self.add_ops(scopes, ops);
        match &a.target.kind {
            ExprKind::Var(v) => {
                if compound {
                    self.scalars.push(ScalarEvent { var: v.clone(), write: false, scopes: scopes.to_vec(), accum });
                }
                self.scalars.push(ScalarEvent { var: v.clone(), write: true, scopes: scopes.to_vec(), accum });
            }
            ExprKind::Index { array, indices } => {
                for i in indices {
                    self.reads(i, scopes, sid, None);
                }
                let affs: Vec<Option<Affine>> = indices.iter().map(Affine::from_expr).collect();
                if compound {
                    self.push_ref(array, &affs, indices, false, scopes, sid, accum, a.target.loc);
                }
                self.push_ref(array, &affs, indices, true, scopes, sid, accum, a.target.loc);
            }
            ExprKind::Deref(inner) => self.reads(inner, scopes, sid, None),
            _ => {}
        }
    }

    fn loop_vars(&self, scopes: &[Scope]) -> Vec<String> {
        Self::loop_ids(scopes)
            .iter()
            .filter_map(|id| self.loops.iter().find(|l| l.id == *id))
            .map(|l| l.index_var.clone())
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn push_ref(
        &mut self,
        array: &str,
        affs: &[Option<Affine>],
        exprs: &[Expr],
        write: bool,
        scopes: &[Scope],
        sid: usize,
        accum: Option<BinaryOp>,
        loc: Loc,
    ) {
        let loops = Self::loop_ids(scopes);
        let reference = self.refs.len();
        self.refs.push(Ref { array: array.to_string(), indices: affs.to_vec(), write, loops: loops.clone(), stmt: sid, accum });
        let function = self.function.clone();
        let info = self
            .arrays
            .iter_mut()
            .rev()
            .find(|a| a.name == array && (a.function.is_none() || a.function.as_deref() == Some(&function)));
        if let Some(info) = info {
            let rank = info.rank();
            for (dim, (aff, e)) in affs.iter().zip(exprs).enumerate().take(rank) {
                info.accesses.push(ArrayAccess {
                    reference,
                    loop_id: loops.last().copied(),
                    loops: loops.clone(),
                    dim,
                    index: aff.clone(),
                    text: super::emit_expr(e),
                    kind: if write { AccessKind::Write } else { AccessKind::Read },
                    loc,
                });
            }
        }
    }

    /// Records every read in `e`. `accum` marks reads of the accumulation
    /// target inside an accumulation statement.
    fn reads(&mut self, e: &Expr, scopes: &[Scope], sid: usize, accum: Option<(BinaryOp, &Expr)>) {
        match &e.kind {
            ExprKind::Var(v) => {
                let is_self = accum.is_some_and(|(_, t)| t == e);
                if self.is_array(v) {
                    // Whole-array use (e.g. passed to a call): unknown subscripts.
                    let rank = self.arrays.iter().rev().find(|a| &a.name == v).map(|a| a.rank()).unwrap_or(1);
                    let affs = vec![None; rank];
                    let exprs: Vec<Expr> = (0..rank).map(|_| Expr::var("?")).collect();
                    self.push_ref(v, &affs, &exprs, false, scopes, sid, None, e.loc);
                } else {
                    self.scalars.push(ScalarEvent {
                        var: v.clone(),
                        write: false,
                        scopes: scopes.to_vec(),
                        accum: if is_self { accum.map(|(op, _)| op) } else { None },
                    });
                }
            }
            ExprKind::Index { array, indices } => {
                for i in indices {
                    self.reads(i, scopes, sid, None);
                }
                let is_self = accum.is_some_and(|(_, t)| t == e);
                let affs: Vec<Option<Affine>> = indices.iter().map(Affine::from_expr).collect();
                let op = if is_self { accum.map(|(op, _)| op) } else { None };
                self.push_ref(array, &affs, indices, false, scopes, sid, op, e.loc);
            }
            ExprKind::Unary { operand, .. } => self.reads(operand, scopes, sid, accum),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.reads(lhs, scopes, sid, accum);
                self.reads(rhs, scopes, sid, accum);
            }
            ExprKind::Call { args, .. } => {
                for a in args {
                    self.reads(a, scopes, sid, None);
                }
            }
            ExprKind::New { count, .. } => self.reads(count, scopes, sid, None),
            ExprKind::Deref(inner) | ExprKind::AddrOf(inner) => self.reads(inner, scopes, sid, None),
            ExprKind::Int(_) | ExprKind::Float { .. } | ExprKind::SizeOf(_) => {}
        }
    }

    fn finish(mut self) -> DesignMetadata {
        // Per-iteration op counts with nested trips folded in (post-order).
        let ids: Vec<LoopId> = self.loops.iter().map(|l| l.id).collect();
        for id in ids.iter().rev() {
            let own = self.own_ops.get(id).copied().unwrap_or(0);
            let info = self.loops.iter().find(|l| l.id == *id).unwrap();
            let nested: u64 = info
                .children
                .iter()
                .filter_map(|c| self.loops.iter().find(|l| l.id == *c))
                .map(|c| c.body_ops * c.trip_count.unwrap_or(1))
                .sum();
            self.loops.iter_mut().find(|l| l.id == *id).unwrap().body_ops = own + nested;
        }
        for i in 0..self.loops.len() {
            let deps = self.carried(i);
            self.loops[i].carried_dependence = !deps.is_empty();
            self.loops[i].dependences = deps;
        }
        let pragma_sites = 2 * self.loops.len() + 3 * self.arrays.len();
        DesignMetadata { loops: self.loops, arrays: self.arrays, pragma_sites }
    }

    fn carried(&self, idx: usize) -> Vec<CarriedDep> {
        let l = &self.loops[idx];
        let mut deps: Vec<CarriedDep> = Vec::new();
        let mut push = |d: CarriedDep| {
            if !deps.iter().any(|x| x.variable == d.variable && x.kind == d.kind) {
                deps.push(d);
            }
        };
        let inner_vars: BTreeSet<String> = self
            .loops
            .iter()
            .filter(|x| x.function == l.function && self.is_descendant(x.id, l.id))
            .map(|x| x.index_var.clone())
            .collect();
        // Scalars read before any dominating write in the body.
        let mut state: BTreeMap<&str, (bool, bool, bool, Option<BinaryOp>)> = BTreeMap::new();
        for ev in self
            .scalars
            .iter()
            .filter(|e| e.scopes.contains(&Scope::Loop(l.id, true)) || e.scopes.contains(&Scope::Loop(l.id, false)))
        {
            if ev.var == l.index_var || inner_vars.contains(&ev.var) {
                continue;
            }
            // (killed, exposed read, written, accumulation op or conflict)
            let entry = state.entry(ev.var.as_str()).or_insert((false, false, false, ev.accum));
            if entry.3 != ev.accum {
                entry.3 = None;
            }
            if ev.write {
                entry.2 = true;
                let pos = ev.scopes.iter().position(|s| matches!(s, Scope::Loop(id, _) if *id == l.id)).unwrap();
                let dominating = ev.scopes[pos + 1..].iter().all(|s| matches!(s, Scope::Loop(_, true)));
                if dominating && ev.accum.is_none() {
                    entry.0 = true;
                }
            } else if !entry.0 {
                entry.1 = true;
            }
        }
        for (var, (_, exposed, written, accum)) in state {
            if exposed && written {
                push(CarriedDep {
                    variable: var.to_string(),
                    kind: accum.map(DepKind::Accumulation).unwrap_or(DepKind::Flow),
                    distance: Some(1),
                });
            }
        }
        if l.trip_count == Some(1) {
            return deps;
        }
        // Array flow dependences.
        let in_body: Vec<&Ref> = self.refs.iter().filter(|r| r.loops.contains(&l.id)).collect();
        for w in in_body.iter().filter(|r| r.write) {
            for r in in_body.iter().filter(|r| !r.write && r.array == w.array) {
                let Some(distance) = self.distance(l, &inner_vars, w, r) else { continue };
                let carried = match distance {
                    Some(d) => d >= 1 && l.trip_count.is_none_or(|t| (d as u64) < t),
                    None => true,
                };
                if !carried {
                    continue;
                }
                let kind = match (w.accum, r.accum) {
                    (Some(a), Some(b)) if a == b && w.stmt == r.stmt && w.indices == r.indices => DepKind::Accumulation(a),
                    _ => DepKind::Flow,
                };
                push(CarriedDep { variable: w.array.clone(), kind, distance });
            }
        }
        deps
    }

    fn is_descendant(&self, id: LoopId, ancestor: LoopId) -> bool {
        let mut cur = self.loops.iter().find(|x| x.id == id).and_then(|x| x.parent);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.loops.iter().find(|x| x.id == c).and_then(|x| x.parent);
        }
        false
    }

    /// `None` when the two references never touch the same element across
    /// iterations of `l`; `Some(Some(d))` for a single distance in
    /// iterations; `Some(None)` when any distance is possible.
    fn distance(&self, l: &LoopInfo, inner: &BTreeSet<String>, w: &Ref, r: &Ref) -> Option<Option<i64>> {
        let v = l.index_var.as_str();
        let step = l.bounds.map(|b| b.step);
        let mut exact: Option<i64> = None;
        for (iw, ir) in w.indices.iter().zip(&r.indices) {
            let (Some(aw), Some(ar)) = (iw, ir) else { continue };
            let uses_inner = |a: &Affine| a.terms.keys().any(|k| inner.contains(k));
            if uses_inner(aw) || uses_inner(ar) || aw.without(v) != ar.without(v) {
                continue;
            }
            let (a, b) = (aw.coeff(v), ar.coeff(v));
            if a != b {
                continue;
            }
            let diff = aw.constant - ar.constant;
            if a == 0 {
                if diff != 0 {
                    return None;
                }
                continue;
            }
            let d = match step {
                Some(s) => {
                    let denom = a * s;
                    if diff % denom != 0 {
                        return None;
                    }
                    diff / denom
                }
                None if diff == 0 => 0,
                None => continue,
            };
            match exact {
                Some(e) if e != d => return None,
                _ => exact = Some(d),
            }
        }
        Some(exact)
    }
}

/// Accumulation operator of `x op= e` / `x = x op e` forms, where `e` does
/// not mention `x`.
pub fn accumulation_op(a: &Assign) -> Option<BinaryOp> {
    let mentions = |e: &Expr| {
        let mut hit = false;
        e.walk(&mut |s| {
            if *s == a.target {
                hit = true;
            }
        });
        hit
    };
    match a.op {
        AssignOp::Add | AssignOp::Sub | AssignOp::Mul => {
            let v = a.value.as_ref()?;
            (!mentions(v)).then(|| a.op.binary().unwrap())
        }
        AssignOp::Inc | AssignOp::Dec => Some(a.op.binary().unwrap()),
        AssignOp::Set => {
            let ExprKind::Binary { op, lhs, rhs } = &a.value.as_ref()?.kind else { return None };
            if !matches!(op, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul) {
                return None;
            }
            if **lhs == a.target && !mentions(rhs) {
                return Some(*op);
            }
            if **rhs == a.target && !mentions(lhs) && *op != BinaryOp::Sub {
                return Some(*op);
            }
            None
        }
        _ => None,
    }
}

/// Arithmetic operations in a value expression; subscript arithmetic is free.
pub fn value_ops(e: &Expr) -> u64 {
    match &e.kind {
        ExprKind::Binary { op, lhs, rhs } => {
            let own = u64::from(!op.is_comparison());
            own + value_ops(lhs) + value_ops(rhs)
        }
        ExprKind::Unary { operand, .. } => value_ops(operand),
        ExprKind::Call { name, args } => {
            let own = u64::from(matches!(name.as_str(), "abs" | "min" | "max" | "sqrt"));
            own + args.iter().map(value_ops).sum::<u64>()
        }
        ExprKind::Deref(inner) | ExprKind::AddrOf(inner) => value_ops(inner),
        _ => 0,
    }
}

/// Index variable and constant iteration space of a `for` header.
pub fn loop_bounds(l: &ForLoop) -> (String, Option<LoopBounds>) {
    let (var, start) = match l.init.as_deref() {
        Some(Stmt::Decl(d)) => (d.name.clone(), d.init.as_ref().and_then(const_value)),
        Some(Stmt::Assign(Assign { target, op: AssignOp::Set, value: Some(v), .. })) => match &target.kind {
            ExprKind::Var(name) => (name.clone(), const_value(v)),
            _ => (String::new(), None),
        },
        _ => (String::new(), None),
    };
    let var = if var.is_empty() {
        // Fall back to the variable compared in the condition.
        match l.cond.as_ref().map(|c| &c.kind) {
            Some(ExprKind::Binary { lhs, .. }) => match &lhs.kind {
                ExprKind::Var(v) => v.clone(),
                _ => String::new(),
            },
            _ => String::new(),
        }
    } else {
        var
    };
    if var.is_empty() {
        return (var, None);
    }
    let step = match l.step.as_deref() {
        Some(Stmt::Assign(a)) if matches!(&a.target.kind, ExprKind::Var(v) if *v == var) => match (a.op, &a.value) {
            (AssignOp::Inc, _) => Some(1),
            (AssignOp::Dec, _) => Some(-1),
            (AssignOp::Add, Some(v)) => const_value(v),
            (AssignOp::Sub, Some(v)) => const_value(v).map(|s| -s),
            (AssignOp::Set, Some(v)) => {
                Affine::from_expr(v).filter(|aff| aff.coeff(&var) == 1 && aff.terms.len() == 1).map(|aff| aff.constant)
            }
            _ => None,
        },
        _ => None,
    };
    let cond = l.cond.as_ref().and_then(|c| match &c.kind {
        ExprKind::Binary { op, lhs, rhs } => match (&lhs.kind, &rhs.kind) {
            (ExprKind::Var(v), _) if *v == var => const_value(rhs).map(|b| (*op, b)),
            (_, ExprKind::Var(v)) if *v == var => const_value(lhs).map(|b| (flip(*op), b)),
            _ => None,
        },
        _ => None,
    });
    let (Some(start), Some(step), Some((op, bound))) = (start, step, cond) else {
        return (var, None);
    };
    if step == 0 || writes_var(&l.body, &var) {
        return (var, None);
    }
    let span = match (op, step > 0) {
        (BinaryOp::Lt, true) => bound - start,
        (BinaryOp::Le, true) => bound - start + 1,
        (BinaryOp::Gt, false) => start - bound,
        (BinaryOp::Ge, false) => start - bound + 1,
        (BinaryOp::Ne, _) => {
            let d = bound - start;
            if d % step != 0 || d / step <= 0 {
                return (var, None);
            }
            return (var, Some(LoopBounds { start, step, trip: (d / step) as u64 }));
        }
        _ => return (var, None),
    };
    let mag = step.abs();
    if span <= 0 {
        return (var, None);
    }
    let trip = ((span + mag - 1) / mag) as u64;
    (var, Some(LoopBounds { start, step, trip }))
}

fn flip(op: BinaryOp) -> BinaryOp {
    match op {
        BinaryOp::Lt => BinaryOp::Gt,
        BinaryOp::Le => BinaryOp::Ge,
        BinaryOp::Gt => BinaryOp::Lt,
        BinaryOp::Ge => BinaryOp::Le,
        o => o,
    }
}

fn const_value(e: &Expr) -> Option<i64> {
    Affine::from_expr(e).filter(Affine::is_const).map(|a| a.constant)
}

fn writes_var(b: &Block, var: &str) -> bool {
    let mut hit = false;
    b.walk(&mut |s| {
        let targets: Vec<&Expr> = match s {
            Stmt::Assign(a) => vec![&a.target],
            Stmt::For(l) => [l.init.as_deref(), l.step.as_deref()]
                .into_iter()
                .flatten()
                .filter_map(|s| match s {
                    Stmt::Assign(a) => Some(&a.target),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        };
        if targets.iter().any(|t| matches!(&t.kind, ExprKind::Var(v) if v == var)) {
            hit = true;
        }
    });
    hit
}
