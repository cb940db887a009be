// SPDX-License-Identifier: Apache-2.0

//! Structured edit operations and their application.

use crate::frontend::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Expr,
    Stmt,
}

/// One edit. Targets are identified by position plus current text so that a
/// stale edit never lands on the wrong node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    /// Replaces the expression or statement at `line:col` whose rendering is
    /// `old`. An empty `new` deletes a statement.
    ReplaceNode {
        node: NodeKind,
        line: u32,
        col: u32,
        old: String,
        new: String,
    },
    RemovePragma {
        site: PragmaSite,
        pragma: PragmaKind,
    },
    AttachPragma {
        site: PragmaSite,
        pragma: PragmaKind,
    },
    /// Replaces the declaration of `name` in `function` (a local, a
    /// parameter, or the return type when `name` is the function itself).
    /// `line` narrows the match when the name is declared more than once.
    RewriteDecl {
        function: String,
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        line: Option<u32>,
        decl: String,
    },
    /// Sets the loop condition to `var < bound`.
    ClampBound {
        loop_id: LoopId,
        bound: i64,
    },
}

impl Edit {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Edit::ReplaceNode { .. } => "replace_node",
            Edit::RemovePragma { .. } => "remove_pragma",
            Edit::AttachPragma { .. } => "attach_pragma",
            Edit::RewriteDecl { .. } => "rewrite_decl",
            Edit::ClampBound { .. } => "clamp_bound",
        }
    }

    /// Key shared by edits that would touch the same node.
    fn target_key(&self) -> String {
        match self {
            Edit::ReplaceNode { line, col, .. } => format!("node {line}:{col}"),
            Edit::RemovePragma { site, pragma } | Edit::AttachPragma { site, pragma } => {
                format!("pragma {site} {}", emit_pragma(&Pragma::new(pragma.clone())))
            }
            Edit::RewriteDecl { function, name, line, .. } => format!("decl {function}.{name}@{line:?}"),
            Edit::ClampBound { loop_id, .. } => format!("bound {loop_id}"),
        }
    }
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edit::ReplaceNode { line, col, old, new, .. } if new.is_empty() => write!(f, "delete `{old}` at {line}:{col}"),
            Edit::ReplaceNode { line, col, old, new, .. } => write!(f, "replace `{old}` with `{new}` at {line}:{col}"),
            Edit::RemovePragma { site, pragma } => {
                write!(f, "remove `{}` from {site}", emit_pragma(&Pragma::new(pragma.clone())))
            }
            Edit::AttachPragma { site, pragma } => write!(f, "attach `{}` to {site}", emit_pragma(&Pragma::new(pragma.clone()))),
            Edit::RewriteDecl { function, name, decl, .. } => write!(f, "declare `{name}` in `{function}` as `{decl}`"),
            Edit::ClampBound { loop_id, bound } => write!(f, "bound loop {loop_id} by `< {bound}`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EditError {
    #[error("edits overlap at {0}")]
    EditConflict(String),
    #[error("edit target not found: {0}")]
    MissingTarget(String),
    #[error("edit text does not parse: {0}")]
    BadText(String),
}

/// Result of applying a set of edits.
#[derive(Clone, Debug, PartialEq)]
pub struct Applied {
    pub ast: Ast,
    /// One line per applied edit.
    pub log: Vec<String>,
}

/// Applies `edits` in order. Every target must exist in `design` and no two
/// edits may touch the same node. Nothing else changes.
pub fn apply_edits(design: &Ast, edits: &[Edit]) -> Result<Applied, EditError> {
    let mut seen = std::collections::BTreeSet::new();
    for e in edits {
        if !seen.insert(e.target_key()) {
            return Err(EditError::EditConflict(e.target_key()));
        }
        check_target(design, e)?;
    }
    let mut ast = design.clone();
    let mut log = Vec::new();
    for e in edits {
        ast = apply_one(&ast, e).map_err(|err| match err {
            EditError::MissingTarget(t) => EditError::EditConflict(t),
            other => other,
        })?;
        log.push(e.to_string());
    }
    Ok(Applied { ast, log })
}

fn check_target(ast: &Ast, e: &Edit) -> Result<(), EditError> {
    apply_one(ast, e).map(|_| ())
}

fn apply_one(ast: &Ast, e: &Edit) -> Result<Ast, EditError> {
    let missing = || EditError::MissingTarget(e.to_string());
    match e {
        Edit::ReplaceNode { node: NodeKind::Expr, line, col, old, new } => {
            let repl = parse_expr_text(new)?;
            let mut out = ast.clone();
            let mut done = false;
            for f in out.functions_mut() {
                each_stmt_mut(&mut f.body, &mut |s| {
                    for root in s.exprs_mut() {
                        replace_expr(root, Loc::new(*line, *col), old, &repl, &mut done);
                    }
                });
            }
            done.then_some(out).ok_or_else(missing)
        }
        Edit::ReplaceNode { node: NodeKind::Stmt, line, col, old, new } => {
            let repl = if new.trim().is_empty() { None } else { Some(parse_stmt_text(new)?) };
            let mut out = ast.clone();
            let mut done = false;
            for f in out.functions_mut() {
                replace_stmt(&mut f.body, Loc::new(*line, *col), old, repl.as_ref(), &mut done);
            }
            done.then_some(out).ok_or_else(missing)
        }
        Edit::RemovePragma { site, pragma } => {
            let d = detach_exact(ast, site, pragma).map_err(|_| missing())?;
            if d.is_noop() {
                return Err(missing());
            }
            Ok(d.ast)
        }
        Edit::AttachPragma { site, pragma } => attach_pragma(ast, site, Pragma::new(pragma.clone())).map_err(|_| missing()),
        Edit::RewriteDecl { function, name, line, decl } => {
            let mut out = ast.clone();
            let f = out.function_mut(function).ok_or_else(missing)?;
            if name == function && !declares(f, name) {
                let d = parse_decl_text(decl)?;
                if d.name != *name {
                    return Err(EditError::BadText(format!("`{decl}` must keep the name `{name}`")));
                }
                f.ret = d.ty;
                return Ok(out);
            }
            let d = parse_decl_text(decl)?;
            if d.name != *name {
                return Err(EditError::BadText(format!("`{decl}` must keep the name `{name}`")));
            }
            let mut done = false;
            for p in f.params.iter_mut().filter(|p| p.name == *name && line.is_none_or(|l| p.loc.line == l)) {
                *p = VarDecl { loc: p.loc, ..d.clone() };
                done = true;
            }
            each_stmt_mut(&mut f.body, &mut |s| {
                if let Stmt::Decl(v) = s {
                    if v.name == *name && line.is_none_or(|l| v.loc.line == l) {
                        *v = VarDecl { loc: v.loc, ..d.clone() };
                        done = true;
                    }
                }
            });
            done.then_some(out).ok_or_else(missing)
        }
        Edit::ClampBound { loop_id, bound } => {
            let mut out = ast.clone();
            let ok = out
                .with_loop_mut(*loop_id, |l| {
                    let (var, _) = loop_bounds(l);
                    let cond = l.cond.as_mut()?;
                    let ExprKind::Binary { op, lhs, rhs } = &mut cond.kind else { return None };
                    if !matches!(&lhs.kind, ExprKind::Var(v) if *v == var) || !op.is_comparison() {
                        return None;
                    }
                    *op = BinaryOp::Lt;
                    **rhs = Expr::int(*bound);
                    Some(())
                })
                .flatten()
                .is_some();
            ok.then_some(out).ok_or_else(missing)
        }
    }
}

fn declares(f: &Function, name: &str) -> bool {
    let mut hit = f.params.iter().any(|p| p.name == name);
    each_stmt(&f.body, &mut |s| {
        if matches!(s, Stmt::Decl(d) if d.name == name) {
            hit = true;
        }
    });
    hit
}

fn replace_expr(e: &mut Expr, at: Loc, old: &str, repl: &Expr, done: &mut bool) {
    if *done {
        return;
    }
    if e.loc.same(at) && emit_expr(e) == old {
        *e = repl.clone();
        *done = true;
        return;
    }
    match &mut e.kind {
        ExprKind::Index { indices, .. } => indices.iter_mut().for_each(|i| replace_expr(i, at, old, repl, done)),
        ExprKind::Unary { operand, .. } => replace_expr(operand, at, old, repl, done),
        ExprKind::Binary { lhs, rhs, .. } => {
            replace_expr(lhs, at, old, repl, done);
            replace_expr(rhs, at, old, repl, done);
        }
        ExprKind::Call { args, .. } => args.iter_mut().for_each(|a| replace_expr(a, at, old, repl, done)),
        ExprKind::New { count, .. } => replace_expr(count, at, old, repl, done),
        ExprKind::Deref(x) | ExprKind::AddrOf(x) => replace_expr(x, at, old, repl, done),
        _ => {}
    }
}

fn replace_stmt(b: &mut Block, at: Loc, old: &str, repl: Option<&Stmt>, done: &mut bool) {
    let mut i = 0;
    while i < b.stmts.len() && !*done {
        let s = &b.stmts[i];
        if s.loc().same(at) && stmt_head(s) == old {
            match repl {
                Some(r) => b.stmts[i] = r.clone(),
                None => {
                    b.stmts.remove(i);
                }
            }
            *done = true;
            return;
        }
        for c in b.stmts[i].child_blocks_mut() {
            replace_stmt(c, at, old, repl, done);
        }
        i += 1;
    }
}

/// Visits every statement, including loop headers, in pre-order.
pub fn each_stmt<'a>(b: &'a Block, f: &mut dyn FnMut(&'a Stmt)) {
    for s in &b.stmts {
        f(s);
        if let Stmt::For(l) = s {
            if let Some(init) = &l.init {
                f(init);
            }
            if let Some(step) = &l.step {
                f(step);
            }
        }
        for c in s.child_blocks() {
            each_stmt(c, f);
        }
    }
}

pub fn each_stmt_mut(b: &mut Block, f: &mut dyn FnMut(&mut Stmt)) {
    for s in &mut b.stmts {
        f(s);
        if let Stmt::For(l) = s {
            if let Some(init) = &mut l.init {
                f(init);
            }
            if let Some(step) = &mut l.step {
                f(step);
            }
        }
        for c in s.child_blocks_mut() {
            each_stmt_mut(c, f);
        }
    }
}

fn wrap(body: &str) -> Result<Function, EditError> {
    let ast = parse_str(&format!("void __edit() {{\n{body}\n}}\n")).map_err(|e| EditError::BadText(format!("{body}: {e}")))?;
    ast.top().cloned().ok_or_else(|| EditError::BadText(body.to_string()))
}

pub fn parse_expr_text(text: &str) -> Result<Expr, EditError> {
    let f = wrap(&format!("__edit_t = {text};"))?;
    match f.body.stmts.as_slice() {
        [Stmt::Assign(Assign { value: Some(v), .. })] => Ok(v.clone()),
        _ => Err(EditError::BadText(text.to_string())),
    }
}

pub fn parse_stmt_text(text: &str) -> Result<Stmt, EditError> {
    let f = wrap(text)?;
    match f.body.stmts.as_slice() {
        [s] => Ok(s.clone()),
        _ => Err(EditError::BadText(format!("`{text}` is not a single statement"))),
    }
}

pub fn parse_decl_text(text: &str) -> Result<VarDecl, EditError> {
    let t = text.trim().trim_end_matches(';');
    match parse_stmt_text(&format!("{t};"))? {
        Stmt::Decl(d) => Ok(d),
        _ => Err(EditError::BadText(format!("`{text}` is not a declaration"))),
    }
}
