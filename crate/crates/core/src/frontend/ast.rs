// SPDX-License-Identifier: Apache-2.0

//! Syntax tree for the supported HLS-C subset.
//!
//! Every node carries a [`Loc`]. Locations are bookkeeping only: they never
//! participate in `==`, so two trees parsed from differently formatted text
//! compare equal when their structure matches.

use serde::{Deserialize, Serialize};
use std::fmt;

/// 1-based line/column position in the source text.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub const fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }

    /// Ordering key; use this instead of `==` when positions matter.
    pub fn key(self) -> (u32, u32) {
        (self.line, self.col)
    }

    pub fn same(self, other: Loc) -> bool {
        self.key() == other.key()
    }
}

impl PartialEq for Loc {
    fn eq(&self, _other: &Loc) -> bool {
        true
    }
}

impl Eq for Loc {}

impl std::hash::Hash for Loc {
    fn hash<H: std::hash::Hasher>(&self, _state: &mut H) {}
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalarType {
    Char,
    Short,
    Int,
    Unsigned,
    Long,
    Float,
    Double,
    Void,
    /// Anything outside the allowlist, spelled as written (`long double`,
    /// `wchar_t`, `std::string`, ...).
    Other(String),
}

impl ScalarType {
    pub fn is_float(&self) -> bool {
        matches!(self, ScalarType::Float | ScalarType::Double)
    }

    pub fn is_allowlisted(&self) -> bool {
        !matches!(self, ScalarType::Other(_))
    }

    /// Storage width in bits for allowlisted types.
    pub fn width(&self) -> u32 {
        match self {
            ScalarType::Char => 8,
            ScalarType::Short => 16,
            ScalarType::Int | ScalarType::Unsigned | ScalarType::Float => 32,
            ScalarType::Long | ScalarType::Double => 64,
            ScalarType::Void => 0,
            ScalarType::Other(_) => 32,
        }
    }

    pub fn spelling(&self) -> &str {
        match self {
            ScalarType::Char => "char",
            ScalarType::Short => "short",
            ScalarType::Int => "int",
            ScalarType::Unsigned => "unsigned",
            ScalarType::Long => "long",
            ScalarType::Float => "float",
            ScalarType::Double => "double",
            ScalarType::Void => "void",
            ScalarType::Other(s) => s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Type {
    pub scalar: ScalarType,
    pub is_const: bool,
}

impl Type {
    pub fn new(scalar: ScalarType) -> Self {
        Type { scalar, is_const: false }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_const {
            f.write_str("const ")?;
        }
        f.write_str(self.scalar.spelling())
    }
}

/// Pre-order loop number, unique within a unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LoopId(pub u32);

impl fmt::Display for LoopId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionType {
    Cyclic,
    Block,
    Complete,
}

impl PartitionType {
    pub fn keyword(self) -> &'static str {
        match self {
            PartitionType::Cyclic => "cyclic",
            PartitionType::Block => "block",
            PartitionType::Complete => "complete",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PragmaKind {
    Pipeline {
        ii: Option<u32>,
    },
    /// `factor: None` is a full unroll.
    Unroll {
        factor: Option<u32>,
    },
    ArrayPartition {
        variable: String,
        ptype: PartitionType,
        factor: Option<u32>,
        dim: i64,
    },
    Dataflow,
    /// Directives the tools do not reason about (INTERFACE, INLINE, ...),
    /// preserved verbatim after the `HLS` keyword.
    Other {
        text: String,
    },
}

/// Discriminant of [`PragmaKind`], used to name a pragma without its payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PragmaTag {
    Pipeline,
    Unroll,
    ArrayPartition,
    Dataflow,
    Other,
}

impl PragmaKind {
    pub fn tag(&self) -> PragmaTag {
        match self {
            PragmaKind::Pipeline { .. } => PragmaTag::Pipeline,
            PragmaKind::Unroll { .. } => PragmaTag::Unroll,
            PragmaKind::ArrayPartition { .. } => PragmaTag::ArrayPartition,
            PragmaKind::Dataflow => PragmaTag::Dataflow,
            PragmaKind::Other { .. } => PragmaTag::Other,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pragma {
    pub kind: PragmaKind,
    #[serde(skip)]
    pub loc: Loc,
}

impl Pragma {
    pub fn new(kind: PragmaKind) -> Self {
        Pragma { kind, loc: Loc::default() }
    }

    pub fn pipeline(ii: Option<u32>) -> Self {
        Pragma::new(PragmaKind::Pipeline { ii })
    }

    pub fn unroll(factor: Option<u32>) -> Self {
        Pragma::new(PragmaKind::Unroll { factor })
    }

    pub fn partition(variable: &str, ptype: PartitionType, factor: Option<u32>, dim: i64) -> Self {
        Pragma::new(PragmaKind::ArrayPartition { variable: variable.to_string(), ptype, factor, dim })
    }

    pub fn dataflow() -> Self {
        Pragma::new(PragmaKind::Dataflow)
    }

    fn sort_key(&self) -> (PragmaTag, String, i64) {
        match &self.kind {
            PragmaKind::ArrayPartition { variable, dim, .. } => (PragmaTag::ArrayPartition, variable.clone(), *dim),
            PragmaKind::Other { text } => (PragmaTag::Other, text.clone(), 0),
            k => (k.tag(), String::new(), 0),
        }
    }
}

/// Sorts pragmas into the canonical emission order: Pipeline, Unroll,
/// ArrayPartition (by variable, then dim), Dataflow, others.
pub fn canonicalize_pragmas(pragmas: &mut [Pragma]) {
    pragmas.sort_by_key(|p| p.sort_key());
}

/// Where a directive lives in the tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "site", content = "name", rename_all = "snake_case")]
pub enum PragmaSite {
    Loop(LoopId),
    Function(String),
}

impl fmt::Display for PragmaSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PragmaSite::Loop(id) => write!(f, "loop {id}"),
            PragmaSite::Function(name) => write!(f, "function {name}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Lt
                | BinaryOp::Le
                | BinaryOp::Gt
                | BinaryOp::Ge
                | BinaryOp::Eq
                | BinaryOp::Ne
                | BinaryOp::And
                | BinaryOp::Or
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExprKind {
    Int(i64),
    /// `single` records an `f` suffix.
    Float {
        value: f64,
        single: bool,
    },
    Var(String),
    Index {
        array: String,
        indices: Vec<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    New {
        ty: Type,
        count: Box<Expr>,
    },
    SizeOf(Type),
    Deref(Box<Expr>),
    AddrOf(Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Loc) -> Self {
        Expr { kind, loc }
    }

    pub fn int(v: i64) -> Self {
        Expr::new(ExprKind::Int(v), Loc::default())
    }

    pub fn var(name: &str) -> Self {
        Expr::new(ExprKind::Var(name.to_string()), Loc::default())
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        let loc = lhs.loc;
        Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, loc)
    }

    pub fn as_int(&self) -> Option<i64> {
        match &self.kind {
            ExprKind::Int(v) => Some(*v),
            ExprKind::Unary { op: UnaryOp::Neg, operand } => operand.as_int().map(|v| -v),
            _ => None,
        }
    }

    /// Pre-order traversal over this expression and all sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Index { indices, .. } => indices.iter().for_each(|e| e.walk(f)),
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Call { args, .. } => args.iter().for_each(|e| e.walk(f)),
            ExprKind::New { count, .. } => count.walk(f),
            ExprKind::Deref(e) | ExprKind::AddrOf(e) => e.walk(f),
            ExprKind::Int(_) | ExprKind::Float { .. } | ExprKind::Var(_) | ExprKind::SizeOf(_) => {}
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        f(self);
        match &mut self.kind {
            ExprKind::Index { indices, .. } => indices.iter_mut().for_each(|e| e.walk_mut(f)),
            ExprKind::Unary { operand, .. } => operand.walk_mut(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk_mut(f);
                rhs.walk_mut(f);
            }
            ExprKind::Call { args, .. } => args.iter_mut().for_each(|e| e.walk_mut(f)),
            ExprKind::New { count, .. } => count.walk_mut(f),
            ExprKind::Deref(e) | ExprKind::AddrOf(e) => e.walk_mut(f),
            ExprKind::Int(_) | ExprKind::Float { .. } | ExprKind::Var(_) | ExprKind::SizeOf(_) => {}
        }
    }

    pub fn mentions_var(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let ExprKind::Var(v) = &e.kind {
                if v == name {
                    found = true;
                }
            }
        });
        found
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarDecl {
    pub ty: Type,
    pub name: String,
    pub pointer: bool,
    /// Constant extents, outermost first. Empty for scalars.
    pub dims: Vec<u64>,
    pub init: Option<Expr>,
    #[serde(skip)]
    pub loc: Loc,
}

impl VarDecl {
    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn is_array(&self) -> bool {
        !self.dims.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Inc,
    Dec,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Rem => "%=",
            AssignOp::Inc => "++",
            AssignOp::Dec => "--",
        }
    }

    /// Arithmetic folded into a compound assignment, if any.
    pub fn binary(self) -> Option<BinaryOp> {
        match self {
            AssignOp::Add | AssignOp::Inc => Some(BinaryOp::Add),
            AssignOp::Sub | AssignOp::Dec => Some(BinaryOp::Sub),
            AssignOp::Mul => Some(BinaryOp::Mul),
            AssignOp::Div => Some(BinaryOp::Div),
            AssignOp::Rem => Some(BinaryOp::Rem),
            AssignOp::Set => None,
        }
    }
}

/// `target op value`; `value` is `None` only for `++`/`--`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assign {
    pub target: Expr,
    pub op: AssignOp,
    pub value: Option<Expr>,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    #[serde(skip)]
    pub loc: Loc,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Block { stmts, loc: Loc::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForLoop {
    pub id: LoopId,
    pub label: Option<String>,
    pub init: Option<Box<Stmt>>,
    pub cond: Option<Expr>,
    pub step: Option<Box<Stmt>>,
    pub body: Block,
    pub pragmas: Vec<Pragma>,
    #[serde(skip)]
    pub loc: Loc,
}

impl ForLoop {
    pub fn has_pragma(&self, tag: PragmaTag) -> bool {
        self.pragmas.iter().any(|p| p.kind.tag() == tag)
    }

    pub fn pipeline_ii(&self) -> Option<Option<u32>> {
        self.pragmas.iter().find_map(|p| match p.kind {
            PragmaKind::Pipeline { ii } => Some(ii),
            _ => None,
        })
    }

    pub fn unroll(&self) -> Option<Option<u32>> {
        self.pragmas.iter().find_map(|p| match p.kind {
            PragmaKind::Unroll { factor } => Some(factor),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfStmt {
    pub cond: Expr,
    pub then_branch: Block,
    pub else_branch: Option<Block>,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    Decl(VarDecl),
    Assign(Assign),
    Expr(Expr),
    For(ForLoop),
    If(IfStmt),
    Return(Option<Expr>, #[serde(skip)] Loc),
    Block(Block),
}

impl Stmt {
    pub fn loc(&self) -> Loc {
        match self {
            Stmt::Decl(d) => d.loc,
            Stmt::Assign(a) => a.loc,
            Stmt::Expr(e) => e.loc,
            Stmt::For(f) => f.loc,
            Stmt::If(i) => i.loc,
            Stmt::Return(_, loc) => *loc,
            Stmt::Block(b) => b.loc,
        }
    }

    /// Direct child blocks, in source order.
    pub fn child_blocks(&self) -> Vec<&Block> {
        match self {
            Stmt::For(f) => vec![&f.body],
            Stmt::If(i) => {
                let mut v = vec![&i.then_branch];
                if let Some(e) = &i.else_branch {
                    v.push(e);
                }
                v
            }
            Stmt::Block(b) => vec![b],
            _ => Vec::new(),
        }
    }

    pub fn child_blocks_mut(&mut self) -> Vec<&mut Block> {
        match self {
            Stmt::For(f) => vec![&mut f.body],
            Stmt::If(i) => {
                let mut v = vec![&mut i.then_branch];
                if let Some(e) = &mut i.else_branch {
                    v.push(e);
                }
                v
            }
            Stmt::Block(b) => vec![b],
            _ => Vec::new(),
        }
    }

    /// Expressions owned directly by this statement (not by nested blocks).
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Stmt::Decl(d) => d.init.iter().collect(),
            Stmt::Assign(a) => {
                let mut v = vec![&a.target];
                v.extend(a.value.iter());
                v
            }
            Stmt::Expr(e) => vec![e],
            Stmt::For(f) => {
                let mut v = Vec::new();
                if let Some(init) = &f.init {
                    v.extend(init.exprs());
                }
                v.extend(f.cond.iter());
                if let Some(step) = &f.step {
                    v.extend(step.exprs());
                }
                v
            }
            Stmt::If(i) => vec![&i.cond],
            Stmt::Return(e, _) => e.iter().collect(),
            Stmt::Block(_) => Vec::new(),
        }
    }

    pub fn exprs_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Stmt::Decl(d) => d.init.iter_mut().collect(),
            Stmt::Assign(a) => {
                let mut v = vec![&mut a.target];
                v.extend(a.value.iter_mut());
                v
            }
            Stmt::Expr(e) => vec![e],
            Stmt::For(f) => {
                let mut v = Vec::new();
                if let Some(init) = &mut f.init {
                    v.extend(init.exprs_mut());
                }
                v.extend(f.cond.iter_mut());
                if let Some(step) = &mut f.step {
                    v.extend(step.exprs_mut());
                }
                v
            }
            Stmt::If(i) => vec![&mut i.cond],
            Stmt::Return(e, _) => e.iter_mut().collect(),
            Stmt::Block(_) => Vec::new(),
        }
    }
}

impl Block {
    /// Pre-order walk over every statement in this block, including nested
    /// loop bodies and branches.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        for s in &self.stmts {
            f(s);
            for b in s.child_blocks() {
                b.walk(f);
            }
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Stmt)) {
        for s in &mut self.stmts {
            f(s);
            for b in s.child_blocks_mut() {
                b.walk_mut(f);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Function {
    pub ret: Type,
    pub name: String,
    pub params: Vec<VarDecl>,
    pub body: Block,
    /// Function-level directives (DATAFLOW, ARRAY_PARTITION, ...).
    pub pragmas: Vec<Pragma>,
    #[serde(skip)]
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Item {
    Function(Function),
    Global(VarDecl),
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Ast {
    pub items: Vec<Item>,
}

impl Ast {
    pub fn functions(&self) -> impl Iterator<Item = &Function> {
        self.items.iter().filter_map(|i| match i {
            Item::Function(f) => Some(f),
            Item::Global(_) => None,
        })
    }

    pub fn functions_mut(&mut self) -> impl Iterator<Item = &mut Function> {
        self.items.iter_mut().filter_map(|i| match i {
            Item::Function(f) => Some(f),
            Item::Global(_) => None,
        })
    }

    pub fn globals(&self) -> impl Iterator<Item = &VarDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Global(g) => Some(g),
            Item::Function(_) => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut Function> {
        self.functions_mut().find(|f| f.name == name)
    }

    /// The top-level function: the last one defined in the unit.
    pub fn top(&self) -> Option<&Function> {
        self.functions().last()
    }

    pub fn top_mut(&mut self) -> Option<&mut Function> {
        self.functions_mut().last()
    }

    pub fn find_loop(&self, id: LoopId) -> Option<&ForLoop> {
        let mut found = None;
        for f in self.functions() {
            f.body.walk(&mut |s| {
                if let Stmt::For(l) = s {
                    if l.id == id && found.is_none() {
                        found = Some(l);
                    }
                }
            });
        }
        found
    }

    pub fn with_loop_mut<R>(&mut self, id: LoopId, op: impl FnOnce(&mut ForLoop) -> R) -> Option<R> {
        let mut op = Some(op);
        let mut out = None;
        for f in self.functions_mut() {
            f.body.walk_mut(&mut |s| {
                if let Stmt::For(l) = s {
                    if l.id == id {
                        if let Some(op) = op.take() {
                            out = Some(op(l));
                        }
                    }
                }
            });
        }
        out
    }

    /// All loops in pre-order.
    pub fn loops(&self) -> Vec<&ForLoop> {
        let mut out = Vec::new();
        for f in self.functions() {
            f.body.walk(&mut |s| {
                if let Stmt::For(l) = s {
                    out.push(l);
                }
            });
        }
        out
    }

    /// Reassigns pre-order loop ids. Call after any structural edit.
    pub fn renumber_loops(&mut self) {
        let mut next = 0u32;
        for f in self.functions_mut() {
            f.body.walk_mut(&mut |s| {
                if let Stmt::For(l) = s {
                    l.id = LoopId(next);
                    next += 1;
                }
            });
        }
    }

    /// Strips every directive from the unit.
    pub fn without_pragmas(&self) -> Ast {
        let mut ast = self.clone();
        for f in ast.functions_mut() {
            f.pragmas.clear();
            f.body.walk_mut(&mut |s| {
                if let Stmt::For(l) = s {
                    l.pragmas.clear();
                }
            });
        }
        ast
    }

    /// Every `(site, pragma)` pair in the unit, functions first then loops in
    /// pre-order.
    pub fn pragmas(&self) -> Vec<(PragmaSite, &Pragma)> {
        let mut out = Vec::new();
        for f in self.functions() {
            for p in &f.pragmas {
                out.push((PragmaSite::Function(f.name.clone()), p));
            }
            f.body.walk(&mut |s| {
                if let Stmt::For(l) = s {
                    for p in &l.pragmas {
                        out.push((PragmaSite::Loop(l.id), p));
                    }
                }
            });
        }
        out
    }
}
