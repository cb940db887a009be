// SPDX-License-Identifier: Apache-2.0

//! Reference interpreter for the HLS-C subset.
//!
//! Integer arithmetic wraps at the declared width (`char` 8, `short` 16,
//! `int`/`unsigned` 32, `long` 64 bits); `float` values are rounded through
//! `f32`. Out-of-range subscripts, division by zero and reads of
//! uninitialized storage trap.

use crate::frontend::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

/// A scalar value crossing the interpreter boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    pub fn as_f64(self) -> f64 {
        match self {
            Num::Int(v) => v as f64,
            Num::Float(v) => v,
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Int(v) => write!(f, "{v}"),
            Num::Float(v) => write!(f, "{v:?}"),
        }
    }
}

/// A named input or output: a scalar or a row-major flattened array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Datum {
    Scalar(Num),
    Array(Vec<Num>),
}

pub type Inputs = BTreeMap<String, Datum>;
/// Final contents of every array parameter, plus `"return"` for non-void
/// functions.
pub type Outputs = BTreeMap<String, Datum>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "trap", rename_all = "snake_case")]
pub enum TrapKind {
    OutOfBounds { array: String, index: i64, extent: u64 },
    DivisionByZero,
    UninitializedRead { name: String },
    UndefinedFunction { name: String },
    StepLimit,
    CallDepth,
    Unsupported { what: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
pub struct RuntimeTrap {
    pub kind: TrapKind,
    #[serde(skip)]
    pub loc: Loc,
}

impl fmt::Display for RuntimeTrap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TrapKind::OutOfBounds { array, index, extent } => {
                write!(f, "out-of-bounds access {array}[{index}] (extent {extent}) at {}", self.loc)
            }
            TrapKind::DivisionByZero => write!(f, "division by zero at {}", self.loc),
            TrapKind::UninitializedRead { name } => write!(f, "read of uninitialized `{name}` at {}", self.loc),
            TrapKind::UndefinedFunction { name } => write!(f, "call to undefined `{name}` at {}", self.loc),
            TrapKind::StepLimit => write!(f, "step limit exceeded at {}", self.loc),
            TrapKind::CallDepth => write!(f, "call depth exceeded at {}", self.loc),
            TrapKind::Unsupported { what } => write!(f, "cannot simulate {what} at {}", self.loc),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CsimError {
    #[error("runtime trap: {0}")]
    Trap(RuntimeTrap),
    #[error("no input bound to parameter `{0}`")]
    MissingInput(String),
    #[error("input `{name}` has the wrong shape: {reason}")]
    BadInput { name: String, reason: String },
    #[error("design has no function")]
    NoTopFunction,
}

impl From<RuntimeTrap> for CsimError {
    fn from(t: RuntimeTrap) -> Self {
        CsimError::Trap(t)
    }
}

pub const DEFAULT_STEP_LIMIT: u64 = 20_000_000;
const MAX_CALL_DEPTH: usize = 64;

/// Runs the top function on `inputs`.
pub fn csim(design: &Ast, inputs: &Inputs) -> Result<Outputs, CsimError> {
    csim_with_limit(design, inputs, DEFAULT_STEP_LIMIT)
}

pub fn csim_with_limit(design: &Ast, inputs: &Inputs, step_limit: u64) -> Result<Outputs, CsimError> {
    let top = design.top().ok_or(CsimError::NoTopFunction)?;
    let mut m = Machine { ast: design, heap: Vec::new(), steps: 0, limit: step_limit, depth: 0 };
    let mut args = Vec::new();
    let mut out_objs = Vec::new();
    for p in &top.params {
        let datum = inputs.get(&p.name).ok_or_else(|| CsimError::MissingInput(p.name.clone()))?;
        let st = storage_type(&p.ty.scalar);
        match (datum, p.is_array() || p.pointer) {
            (Datum::Array(values), true) => {
                let expected: u64 = if p.is_array() { p.dims.iter().product() } else { values.len() as u64 };
                if values.len() as u64 != expected {
                    return Err(CsimError::BadInput {
                        name: p.name.clone(),
                        reason: format!("expected {expected} elements, got {}", values.len()),
                    });
                }
                let cells = values.iter().map(|v| Some(convert(from_num(*v), &st))).collect();
                let id = m.alloc(&p.name, st, p.dims.clone(), cells, false);
                out_objs.push((p.name.clone(), id));
                args.push(Arg::Obj(id));
            }
            (Datum::Scalar(v), false) => args.push(Arg::Val(from_num(*v))),
            _ => {
                return Err(CsimError::BadInput {
                    name: p.name.clone(),
                    reason: "scalar/array kind does not match the parameter".into(),
                })
            }
        }
    }
    let ret = m.call(top, args, top.loc)?;
    let mut out = Outputs::new();
    for (name, id) in out_objs {
        let cells = m.heap[id].cells.iter().map(|c| c.map_or(Num::Int(0), to_num)).collect();
        out.insert(name, Datum::Array(cells));
    }
    if let Some(v) = ret {
        out.insert("return".into(), Datum::Scalar(to_num(v)));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum IntTy {
    I32,
    U32,
    I64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Val {
    I(i64, IntTy),
    F(f64, bool),
    P(usize, i64),
}

fn from_num(n: Num) -> Val {
    match n {
        Num::Int(v) => Val::I(v, IntTy::I64),
        Num::Float(v) => Val::F(v, false),
    }
}

fn to_num(v: Val) -> Num {
    match v {
        Val::I(x, _) => Num::Int(x),
        Val::F(x, _) => Num::Float(x),
        Val::P(_, off) => Num::Int(off),
    }
}

/// Simulation type for declared types; out-of-subset spellings fall back to
/// the nearest supported type.
fn storage_type(t: &ScalarType) -> ScalarType {
    match t {
        ScalarType::Other(s) => match s.as_str() {
            "long long" | "unsigned long" | "long long int" => ScalarType::Long,
            "long double" => ScalarType::Double,
            "float32_t" => ScalarType::Float,
            "unsigned char" | "signed char" | "char8_t" => ScalarType::Char,
            "char16_t" | "unsigned short" => ScalarType::Short,
            "char32_t" => ScalarType::Unsigned,
            _ => ScalarType::Int,
        },
        other => other.clone(),
    }
}

fn wrap(v: i128, ty: IntTy) -> i64 {
    match ty {
        IntTy::I32 => v as i32 as i64,
        IntTy::U32 => v as u32 as i64,
        IntTy::I64 => v as i64,
    }
}

/// Converts a value for storage in an object of type `t`.
fn convert(v: Val, t: &ScalarType) -> Val {
    let int = |x: i64, ty: &ScalarType| match ty {
        ScalarType::Char => Val::I(x as i8 as i64, IntTy::I32),
        ScalarType::Short => Val::I(x as i16 as i64, IntTy::I32),
        ScalarType::Unsigned => Val::I(x as u32 as i64, IntTy::U32),
        ScalarType::Long => Val::I(x, IntTy::I64),
        _ => Val::I(x as i32 as i64, IntTy::I32),
    };
    match (v, t) {
        (Val::P(..), _) => v,
        (Val::I(x, _), ScalarType::Float) => Val::F(x as f32 as f64, true),
        (Val::I(x, _), ScalarType::Double) => Val::F(x as f64, false),
        (Val::F(x, _), ScalarType::Float) => Val::F(x as f32 as f64, true),
        (Val::F(x, _), ScalarType::Double) => Val::F(x, false),
        (Val::F(x, _), ty) => int(x as i64, ty),
        (Val::I(x, _), ty) => int(x, ty),
    }
}

struct Obj {
    name: String,
    ty: ScalarType,
    dims: Vec<u64>,
    cells: Vec<Option<Val>>,
    is_ptr: bool,
}

enum Arg {
    Obj(usize),
    Val(Val),
}

enum Flow {
    Normal,
    Return(Option<Val>),
}

struct Machine<'a> {
    ast: &'a Ast,
    heap: Vec<Obj>,
    steps: u64,
    limit: u64,
    depth: usize,
}

const MAX_RANK: usize = 8;

/// Visible bindings, innermost last. A scope is a length mark.
type Scopes<'a> = Vec<(&'a str, usize)>;

fn trap(kind: TrapKind, loc: Loc) -> RuntimeTrap {
    RuntimeTrap { kind, loc }
}

impl<'a> Machine<'a> {
    fn alloc(&mut self, name: &str, ty: ScalarType, dims: Vec<u64>, cells: Vec<Option<Val>>, is_ptr: bool) -> usize {
        self.heap.push(Obj { name: name.to_string(), ty, dims, cells, is_ptr });
        self.heap.len() - 1
    }

    fn tick(&mut self, loc: Loc) -> Result<(), RuntimeTrap> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(trap(TrapKind::StepLimit, loc));
        }
        Ok(())
    }

    fn call(&mut self, f: &'a Function, args: Vec<Arg>, loc: Loc) -> Result<Option<Val>, RuntimeTrap> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(trap(TrapKind::CallDepth, loc));
        }
        self.depth += 1;
        let mut scopes: Scopes<'a> = self.globals()?;
        for (p, a) in f.params.iter().zip(args) {
            let st = storage_type(&p.ty.scalar);
            let id = match a {
                Arg::Obj(id) if p.is_array() => id,
                Arg::Obj(id) => self.alloc(&p.name, st, Vec::new(), vec![Some(Val::P(id, 0))], true),
                Arg::Val(v) if p.pointer => self.alloc(&p.name, st, Vec::new(), vec![Some(v)], true),
                Arg::Val(v) => {
                    let v = convert(v, &st);
                    self.alloc(&p.name, st, Vec::new(), vec![Some(v)], false)
                }
            };
            scopes.push((p.name.as_str(), id));
        }
        let flow = self.block(&f.body, &mut scopes)?;
        self.depth -= 1;
        let ret = match flow {
            Flow::Return(v) => v,
            Flow::Normal => None,
        };
        if f.ret.scalar == ScalarType::Void {
            return Ok(None);
        }
        Ok(Some(ret.map_or(Val::I(0, IntTy::I32), |v| convert(v, &storage_type(&f.ret.scalar)))))
    }

    fn globals(&mut self) -> Result<Scopes<'a>, RuntimeTrap> {
        let mut scopes: Scopes<'a> = Vec::new();
        let ast = self.ast;
        for g in ast.globals() {
            self.decl(g, &mut scopes)?;
        }
        Ok(scopes)
    }

    fn lookup(&self, scopes: &Scopes<'a>, name: &str, loc: Loc) -> Result<usize, RuntimeTrap> {
        scopes
            .iter()
            .rev()
            .find(|(n, _)| *n == name)
            .map(|&(_, id)| id)
            .ok_or_else(|| trap(TrapKind::UninitializedRead { name: name.to_string() }, loc))
    }

    fn block(&mut self, b: &'a Block, scopes: &mut Scopes<'a>) -> Result<Flow, RuntimeTrap> {
        let mark = scopes.len();
        let mut flow = Flow::Normal;
        for s in &b.stmts {
            flow = self.stmt(s, scopes)?;
            if matches!(flow, Flow::Return(_)) {
                break;
            }
        }
        scopes.truncate(mark);
        Ok(flow)
    }

    fn decl(&mut self, d: &'a VarDecl, scopes: &mut Scopes<'a>) -> Result<(), RuntimeTrap> {
        let st = storage_type(&d.ty.scalar);
        let id = if d.is_array() {
            if d.init.is_some() {
                return Err(trap(TrapKind::Unsupported { what: "array initializer".into() }, d.loc));
            }
            let n: u64 = d.dims.iter().product();
            self.alloc(&d.name, st, d.dims.clone(), vec![None; n as usize], false)
        } else {
            let init = match &d.init {
                Some(e) => {
                    let v = self.eval(e, scopes)?;
                    Some(if d.pointer { v } else { convert(v, &st) })
                }
                None => None,
            };
            self.alloc(&d.name, st, Vec::new(), vec![init], d.pointer)
        };
        scopes.push((d.name.as_str(), id));
        Ok(())
    }

    fn stmt(&mut self, s: &'a Stmt, scopes: &mut Scopes<'a>) -> Result<Flow, RuntimeTrap> {
        self.tick(s.loc())?;
        match s {
            Stmt::Decl(d) => self.decl(d, scopes)?,
            Stmt::Assign(a) => self.assign(a, scopes)?,
            Stmt::Expr(e) => {
                self.eval(e, scopes)?;
            }
            Stmt::Return(e, _) => {
                let v = match e {
                    Some(e) => Some(self.eval(e, scopes)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
            Stmt::Block(b) => return self.block(b, scopes),
            Stmt::If(i) => {
                let c = self.eval(&i.cond, scopes)?;
                if truthy(c) {
                    return self.block(&i.then_branch, scopes);
                } else if let Some(e) = &i.else_branch {
                    return self.block(e, scopes);
                }
            }
            Stmt::For(l) => {
                let mark = scopes.len();
                if let Some(init) = &l.init {
                    self.stmt(init, scopes)?;
                }
                loop {
                    self.tick(l.loc)?;
                    if let Some(c) = &l.cond {
                        if !truthy(self.eval(c, scopes)?) {
                            break;
                        }
                    }
                    if let Flow::Return(v) = self.block(&l.body, scopes)? {
                        scopes.truncate(mark);
                        return Ok(Flow::Return(v));
                    }
                    if let Some(step) = &l.step {
                        self.stmt(step, scopes)?;
                    }
                }
                scopes.truncate(mark);
            }
        }
        Ok(Flow::Normal)
    }

    fn assign(&mut self, a: &'a Assign, scopes: &mut Scopes<'a>) -> Result<(), RuntimeTrap> {
        let value = match &a.value {
            Some(v) => Some(self.eval(v, scopes)?),
            None => None,
        };
        let (obj, idx) = self.lvalue(&a.target, scopes)?;
        let new = match a.op {
            AssignOp::Set => value.unwrap(),
            op => {
                let old = self.load(obj, idx, a.target.loc)?;
                let rhs = value.unwrap_or(Val::I(1, IntTy::I32));
                arith(op.binary().unwrap(), old, rhs, a.loc)?
            }
        };
        let o = &self.heap[obj];
        let stored = if o.is_ptr { new } else { convert(new, &o.ty) };
        self.heap[obj].cells[idx] = Some(stored);
        Ok(())
    }

    fn load(&self, obj: usize, idx: usize, loc: Loc) -> Result<Val, RuntimeTrap> {
        self.heap[obj].cells[idx].ok_or_else(|| trap(TrapKind::UninitializedRead { name: self.heap[obj].name.clone() }, loc))
    }

    fn check_index(&self, obj: usize, flat: i64, loc: Loc) -> Result<usize, RuntimeTrap> {
        let len = self.heap[obj].cells.len();
        if flat < 0 || flat as usize >= len {
            return Err(trap(TrapKind::OutOfBounds { array: self.heap[obj].name.clone(), index: flat, extent: len as u64 }, loc));
        }
        Ok(flat as usize)
    }

    /// Storage cell designated by an lvalue expression.
    fn lvalue(&mut self, e: &'a Expr, scopes: &mut Scopes<'a>) -> Result<(usize, usize), RuntimeTrap> {
        match &e.kind {
            ExprKind::Var(v) => {
                let id = self.lookup(scopes, v, e.loc)?;
                if !self.heap[id].dims.is_empty() {
                    return Err(trap(TrapKind::Unsupported { what: format!("assignment to array `{v}`") }, e.loc));
                }
                Ok((id, 0))
            }
            ExprKind::Index { array, indices } => {
                let id = self.lookup(scopes, array, e.loc)?;
                if indices.len() > MAX_RANK {
                    return Err(trap(TrapKind::Unsupported { what: format!("more than {MAX_RANK} subscripts") }, e.loc));
                }
                let mut buf = [0i64; MAX_RANK];
                for (slot, i) in buf.iter_mut().zip(indices) {
                    *slot = int_of(self.eval(i, scopes)?, i.loc)?;
                }
                let idx = &buf[..indices.len()];
                if self.heap[id].is_ptr {
                    let Val::P(target, off) = self.load(id, 0, e.loc)? else {
                        return Err(trap(TrapKind::Unsupported { what: "non-pointer subscript".into() }, e.loc));
                    };
                    if idx.len() != 1 {
                        return Err(trap(TrapKind::Unsupported { what: "multi-subscript pointer".into() }, e.loc));
                    }
                    let flat = self.check_index(target, off + idx[0], e.loc)?;
                    return Ok((target, flat));
                }
                let dims = &self.heap[id].dims;
                if dims.len() != idx.len() {
                    return Err(trap(TrapKind::Unsupported { what: format!("partial subscript of `{array}`") }, e.loc));
                }
                let mut flat = 0i64;
                for (d, (&i, &n)) in idx.iter().zip(dims).enumerate() {
                    if i < 0 || i as u64 >= n {
                        return Err(trap(
                            TrapKind::OutOfBounds { array: format!("{array}[dim {}]", d + 1), index: i, extent: n },
                            e.loc,
                        ));
                    }
                    flat = flat * n as i64 + i;
                }
                Ok((id, flat as usize))
            }
            ExprKind::Deref(inner) => match self.eval(inner, scopes)? {
                Val::P(target, off) => Ok((target, self.check_index(target, off, e.loc)?)),
                _ => Err(trap(TrapKind::Unsupported { what: "dereference of a non-pointer".into() }, e.loc)),
            },
            _ => Err(trap(TrapKind::Unsupported { what: "assignment target".into() }, e.loc)),
        }
    }

    fn eval(&mut self, e: &'a Expr, scopes: &mut Scopes<'a>) -> Result<Val, RuntimeTrap> {
        match &e.kind {
            ExprKind::Int(v) => Ok(if i32::try_from(*v).is_ok() { Val::I(*v, IntTy::I32) } else { Val::I(*v, IntTy::I64) }),
            ExprKind::Float { value, single } => Ok(Val::F(if *single { *value as f32 as f64 } else { *value }, *single)),
            ExprKind::Var(v) => {
                let id = self.lookup(scopes, v, e.loc)?;
                if !self.heap[id].dims.is_empty() {
                    // Arrays decay to a pointer to their first element.
                    return Ok(Val::P(id, 0));
                }
                self.load(id, 0, e.loc)
            }
            ExprKind::Index { .. } | ExprKind::Deref(_) => {
                let (obj, idx) = self.lvalue(e, scopes)?;
                self.load(obj, idx, e.loc)
            }
            ExprKind::AddrOf(inner) => {
                let (obj, idx) = self.lvalue(inner, scopes)?;
                Ok(Val::P(obj, idx as i64))
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand, scopes)?;
                Ok(match (op, v) {
                    (UnaryOp::Neg, Val::I(x, t)) => Val::I(wrap(-(x as i128), t), t),
                    (UnaryOp::Neg, Val::F(x, s)) => Val::F(-x, s),
                    (UnaryOp::Not, v) => Val::I(i64::from(!truthy(v)), IntTy::I32),
                    (UnaryOp::Neg, Val::P(..)) => {
                        return Err(trap(TrapKind::Unsupported { what: "negated pointer".into() }, e.loc))
                    }
                })
            }
            ExprKind::Binary { op: BinaryOp::And, lhs, rhs } => {
                let l = truthy(self.eval(lhs, scopes)?);
                Ok(Val::I(i64::from(l && truthy(self.eval(rhs, scopes)?)), IntTy::I32))
            }
            ExprKind::Binary { op: BinaryOp::Or, lhs, rhs } => {
                let l = truthy(self.eval(lhs, scopes)?);
                Ok(Val::I(i64::from(l || truthy(self.eval(rhs, scopes)?)), IntTy::I32))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs, scopes)?;
                let r = self.eval(rhs, scopes)?;
                arith(*op, l, r, e.loc)
            }
            ExprKind::Call { name, args } => self.call_expr(name, args, e.loc, scopes),
            ExprKind::New { ty, count } => {
                let n = int_of(self.eval(count, scopes)?, count.loc)?.max(0) as usize;
                let st = storage_type(&ty.scalar);
                let id = self.alloc("heap", st, vec![n as u64], vec![None; n], false);
                Ok(Val::P(id, 0))
            }
            ExprKind::SizeOf(ty) => Ok(Val::I(i64::from(storage_type(&ty.scalar).width() / 8), IntTy::I32)),
        }
    }

    fn call_expr(&mut self, name: &str, args: &'a [Expr], loc: Loc, scopes: &mut Scopes<'a>) -> Result<Val, RuntimeTrap> {
        let ast = self.ast;
        if let Some(f) = ast.function(name) {
            let mut bound = Vec::new();
            for (p, a) in f.params.iter().zip(args) {
                if p.is_array() {
                    match &a.kind {
                        ExprKind::Var(v) => bound.push(Arg::Obj(self.lookup(scopes, v, a.loc)?)),
                        _ => return Err(trap(TrapKind::Unsupported { what: "array argument expression".into() }, a.loc)),
                    }
                } else {
                    bound.push(Arg::Val(self.eval(a, scopes)?));
                }
            }
            return Ok(self.call(f, bound, loc)?.unwrap_or(Val::I(0, IntTy::I32)));
        }
        let mut vals = Vec::new();
        for a in args {
            vals.push(self.eval(a, scopes)?);
        }
        let arity = |n: usize| -> Result<(), RuntimeTrap> {
            if vals.len() != n {
                return Err(trap(TrapKind::Unsupported { what: format!("`{name}` with {} argument(s)", vals.len()) }, loc));
            }
            Ok(())
        };
        match name {
            "abs" => {
                arity(1)?;
                Ok(match vals[0] {
                    Val::I(x, t) => Val::I(wrap((x as i128).abs(), t), t),
                    Val::F(x, s) => Val::F(x.abs(), s),
                    p => p,
                })
            }
            "min" | "max" => {
                arity(2)?;
                let lt = truthy(arith(BinaryOp::Lt, vals[0], vals[1], loc)?);
                Ok(if (name == "min") == lt { vals[0] } else { vals[1] })
            }
            "sqrt" => {
                arity(1)?;
                Ok(Val::F(num_f64(vals[0]).sqrt(), false))
            }
            "malloc" => {
                arity(1)?;
                let bytes = int_of(vals[0], loc)?.max(1) as usize;
                let n = bytes.div_ceil(4);
                let id = self.alloc("heap", ScalarType::Int, vec![n as u64], vec![None; n], false);
                Ok(Val::P(id, 0))
            }
            "calloc" => {
                arity(2)?;
                let n = int_of(vals[0], loc)?.max(0) as usize;
                let id = self.alloc("heap", ScalarType::Int, vec![n as u64], vec![Some(Val::I(0, IntTy::I32)); n], false);
                Ok(Val::P(id, 0))
            }
            "free" => Ok(Val::I(0, IntTy::I32)),
            _ => Err(trap(TrapKind::UndefinedFunction { name: name.to_string() }, loc)),
        }
    }
}

fn truthy(v: Val) -> bool {
    match v {
        Val::I(x, _) => x != 0,
        Val::F(x, _) => x != 0.0,
        Val::P(..) => true,
    }
}

fn num_f64(v: Val) -> f64 {
    match v {
        Val::I(x, _) => x as f64,
        Val::F(x, _) => x,
        Val::P(_, off) => off as f64,
    }
}

fn int_of(v: Val, loc: Loc) -> Result<i64, RuntimeTrap> {
    match v {
        Val::I(x, _) => Ok(x),
        Val::F(x, _) => Ok(x as i64),
        Val::P(..) => Err(trap(TrapKind::Unsupported { what: "pointer used as an integer".into() }, loc)),
    }
}

fn arith(op: BinaryOp, l: Val, r: Val, loc: Loc) -> Result<Val, RuntimeTrap> {
    match (l, r) {
        (Val::P(obj, off), Val::I(k, _)) if matches!(op, BinaryOp::Add | BinaryOp::Sub) => {
            Ok(Val::P(obj, if op == BinaryOp::Add { off + k } else { off - k }))
        }
        (Val::I(k, _), Val::P(obj, off)) if op == BinaryOp::Add => Ok(Val::P(obj, off + k)),
        (Val::P(a, x), Val::P(b, y)) if matches!(op, BinaryOp::Eq | BinaryOp::Ne) => {
            let eq = a == b && x == y;
            Ok(Val::I(i64::from(eq == (op == BinaryOp::Eq)), IntTy::I32))
        }
        (Val::P(..), _) | (_, Val::P(..)) => {
            Err(trap(TrapKind::Unsupported { what: format!("pointer operand of `{}`", op.symbol()) }, loc))
        }
        (Val::I(a, ta), Val::I(b, tb)) => {
            let t = ta.max(tb);
            let (a, b) = (wrap(a as i128, t) as i128, wrap(b as i128, t) as i128);
            let bool_val = |c: bool| Ok(Val::I(i64::from(c), IntTy::I32));
            match op {
                BinaryOp::Add => Ok(Val::I(wrap(a + b, t), t)),
                BinaryOp::Sub => Ok(Val::I(wrap(a - b, t), t)),
                BinaryOp::Mul => Ok(Val::I(wrap(a * b, t), t)),
                BinaryOp::Div | BinaryOp::Rem if b == 0 => Err(trap(TrapKind::DivisionByZero, loc)),
                BinaryOp::Div => Ok(Val::I(wrap(a / b, t), t)),
                BinaryOp::Rem => Ok(Val::I(wrap(a % b, t), t)),
                BinaryOp::Lt => bool_val(a < b),
                BinaryOp::Le => bool_val(a <= b),
                BinaryOp::Gt => bool_val(a > b),
                BinaryOp::Ge => bool_val(a >= b),
                BinaryOp::Eq => bool_val(a == b),
                BinaryOp::Ne => bool_val(a != b),
                BinaryOp::And => bool_val(a != 0 && b != 0),
                BinaryOp::Or => bool_val(a != 0 || b != 0),
            }
        }
        _ => {
            let single = |v: Val| match v {
                Val::F(_, s) => s,
                _ => true,
            };
            let s = single(l) && single(r);
            let (a, b) = (num_f64(l), num_f64(r));
            let round = |x: f64| if s { x as f32 as f64 } else { x };
            let bool_val = |c: bool| Ok(Val::I(i64::from(c), IntTy::I32));
            match op {
                BinaryOp::Add => Ok(Val::F(round(a + b), s)),
                BinaryOp::Sub => Ok(Val::F(round(a - b), s)),
                BinaryOp::Mul => Ok(Val::F(round(a * b), s)),
                BinaryOp::Div if b == 0.0 => Err(trap(TrapKind::DivisionByZero, loc)),
                BinaryOp::Div => Ok(Val::F(round(a / b), s)),
                BinaryOp::Rem if b == 0.0 => Err(trap(TrapKind::DivisionByZero, loc)),
                BinaryOp::Rem => Ok(Val::F(round(a % b), s)),
                BinaryOp::Lt => bool_val(a < b),
                BinaryOp::Le => bool_val(a <= b),
                BinaryOp::Gt => bool_val(a > b),
                BinaryOp::Ge => bool_val(a >= b),
                BinaryOp::Eq => bool_val(a == b),
                BinaryOp::Ne => bool_val(a != b),
                BinaryOp::And => bool_val(a != 0.0 && b != 0.0),
                BinaryOp::Or => bool_val(a != 0.0 || b != 0.0),
            }
        }
    }
}

/// Seeded inputs for every parameter of `f`: integers in [-100, 100]
/// (unsigned in [0, 100]), floating-point values in [-1, 1].
pub fn random_inputs(f: &Function, rng: &mut impl Rng) -> Inputs {
    let mut out = Inputs::new();
    for p in &f.params {
        let st = storage_type(&p.ty.scalar);
        let mut draw = || match st {
            ScalarType::Float => Num::Float(rng.gen_range(-1.0f64..=1.0) as f32 as f64),
            ScalarType::Double => Num::Float(rng.gen_range(-1.0f64..=1.0)),
            ScalarType::Unsigned => Num::Int(rng.gen_range(0..=100)),
            _ => Num::Int(rng.gen_range(-100..=100)),
        };
        let datum = if p.is_array() || p.pointer {
            let n: u64 = if p.is_array() { p.dims.iter().product() } else { 64 };
            Datum::Array((0..n).map(|_| draw()).collect())
        } else {
            Datum::Scalar(draw())
        };
        out.insert(p.name.clone(), datum);
    }
    out
}

pub const REL_TOLERANCE: f64 = 1e-6;
pub const ABS_TOLERANCE: f64 = 1e-9;

fn close(a: Num, b: Num) -> bool {
    match (a, b) {
        (Num::Int(x), Num::Int(y)) => x == y,
        _ => {
            let (x, y) = (a.as_f64(), b.as_f64());
            let diff = (x - y).abs();
            diff <= ABS_TOLERANCE || diff <= REL_TOLERANCE * x.abs().max(y.abs())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("signatures differ: candidate `{candidate}` vs reference `{reference}`")]
pub struct SignatureMismatch {
    pub candidate: String,
    pub reference: String,
}

/// Inputs that expose a difference, and the first differing output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub run: usize,
    pub inputs: Inputs,
    pub mismatch: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffOutcome {
    pub passed: bool,
    pub runs: usize,
    pub witness: Option<Witness>,
}

fn signature(f: &Function) -> String {
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| {
            let mut s = format!("{}{}", p.ty.scalar.spelling(), if p.pointer { "*" } else { "" });
            for d in &p.dims {
                s.push_str(&format!("[{d}]"));
            }
            s
        })
        .collect();
    format!("{}({})", f.ret.scalar.spelling(), params.join(", "))
}

/// Compares `candidate` against `reference` on `runs` seeded random input
/// sets. Parameters are matched by position.
pub fn differential_check(candidate: &Ast, reference: &Ast, runs: usize, seed: u64) -> Result<DiffOutcome, SignatureMismatch> {
    let (Some(cf), Some(rf)) = (candidate.top(), reference.top()) else {
        return Err(SignatureMismatch { candidate: "<none>".into(), reference: "<none>".into() });
    };
    let (cs, rs) = (signature(cf), signature(rf));
    if cs != rs {
        return Err(SignatureMismatch { candidate: cs, reference: rs });
    }
    let rename: HashMap<&str, &str> = rf.params.iter().zip(&cf.params).map(|(r, c)| (r.name.as_str(), c.name.as_str())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for run in 0..runs {
        let inputs = random_inputs(rf, &mut rng);
        let cand_inputs: Inputs = inputs.iter().map(|(k, v)| (rename[k.as_str()].to_string(), v.clone())).collect();
        let expected = csim(reference, &inputs);
        let actual = csim(candidate, &cand_inputs);
        if let Some(mismatch) = compare(&expected, &actual, &rename) {
            return Ok(DiffOutcome { passed: false, runs: run + 1, witness: Some(Witness { run, inputs, mismatch }) });
        }
    }
    Ok(DiffOutcome { passed: true, runs, witness: None })
}

fn compare(
    expected: &Result<Outputs, CsimError>,
    actual: &Result<Outputs, CsimError>,
    rename: &HashMap<&str, &str>,
) -> Option<String> {
    match (expected, actual) {
        (Err(CsimError::Trap(a)), Err(CsimError::Trap(b))) if a.kind == b.kind => None,
        (Err(a), Err(b)) if a == b => None,
        (Ok(_), Err(e)) => Some(format!("candidate failed: {e}")),
        (Err(e), Ok(_)) => Some(format!("reference failed ({e}) but candidate completed")),
        (Err(a), Err(b)) => Some(format!("reference failed ({a}), candidate failed ({b})")),
        (Ok(exp), Ok(act)) => {
            for (name, want) in exp {
                let cname = if name == "return" { "return" } else { rename.get(name.as_str()).copied().unwrap_or(name) };
                let Some(got) = act.get(cname) else { return Some(format!("output `{name}` missing")) };
                match (want, got) {
                    (Datum::Scalar(a), Datum::Scalar(b)) => {
                        if !close(*a, *b) {
                            return Some(format!("{name}: expected {a}, got {b}"));
                        }
                    }
                    (Datum::Array(a), Datum::Array(b)) if a.len() == b.len() => {
                        if let Some(i) = (0..a.len()).find(|&i| !close(a[i], b[i])) {
                            return Some(format!("{name}[{i}]: expected {}, got {}", a[i], b[i]));
                        }
                    }
                    _ => return Some(format!("output `{name}` changed shape")),
                }
            }
            None
        }
    }
}
