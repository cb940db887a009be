// SPDX-License-Identifier: Apache-2.0

use super::ast::*;
use std::fmt::Write;

const INDENT: &str = "    ";

/// Pretty-prints a unit. Output always re-parses to an equal tree.
pub fn emit_ast(ast: &Ast) -> String {
    let mut out = String::new();
    for (i, item) in ast.items.iter().enumerate() {
        if i > 0 && matches!(item, Item::Function(_)) {
            out.push('\n');
        }
        match item {
            Item::Global(d) => {
                out.push_str(&decl(d));
                out.push_str(";\n");
            }
            Item::Function(f) => function(&mut out, f),
        }
    }
    out
}

fn function(out: &mut String, f: &Function) {
    let params: Vec<String> = f.params.iter().map(decl).collect();
    let _ = write!(out, "{} {}({})", f.ret, f.name, params.join(", "));
    // Partitions of top-level locals follow their declaration; everything
    // else opens the body.
    let local_names: Vec<&str> = f
        .body
        .stmts
        .iter()
        .filter_map(|s| match s {
            Stmt::Decl(d) => Some(d.name.as_str()),
            _ => None,
        })
        .collect();
    let is_local_partition = |p: &Pragma| {
        matches!(&p.kind, PragmaKind::ArrayPartition { variable, .. }
            if local_names.contains(&variable.as_str()) && !f.params.iter().any(|q| &q.name == variable))
    };
    let head: Vec<&Pragma> = f.pragmas.iter().filter(|p| !is_local_partition(p)).collect();
    if head.is_empty() && f.body.stmts.is_empty() && f.pragmas.is_empty() {
        out.push_str(" { }\n");
        return;
    }
    out.push_str(" {\n");
    for p in head {
        pragma_line(out, p, 1);
    }
    for s in &f.body.stmts {
        stmt(out, s, 1);
        if let Stmt::Decl(d) = s {
            for p in f.pragmas.iter().filter(|p| is_local_partition(p)) {
                if matches!(&p.kind, PragmaKind::ArrayPartition { variable, .. } if *variable == d.name) {
                    pragma_line(out, p, 1);
                }
            }
        }
    }
    out.push_str("}\n");
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str(INDENT);
    }
}

fn pragma_line(out: &mut String, p: &Pragma, level: usize) {
    indent(out, level);
    out.push_str(&emit_pragma(p));
    out.push('\n');
}

/// The `#pragma HLS ...` line for a directive.
pub fn emit_pragma(p: &Pragma) -> String {
    let body = match &p.kind {
        PragmaKind::Pipeline { ii: Some(ii) } => format!("PIPELINE II={ii}"),
        PragmaKind::Pipeline { ii: None } => "PIPELINE".to_string(),
        PragmaKind::Unroll { factor: Some(f) } => format!("UNROLL factor={f}"),
        PragmaKind::Unroll { factor: None } => "UNROLL".to_string(),
        PragmaKind::ArrayPartition { variable, ptype, factor, dim } => {
            let mut s = format!("ARRAY_PARTITION variable={variable} {}", ptype.keyword());
            if let Some(f) = factor {
                let _ = write!(s, " factor={f}");
            }
            let _ = write!(s, " dim={dim}");
            s
        }
        PragmaKind::Dataflow => "DATAFLOW".to_string(),
        PragmaKind::Other { text } => text.clone(),
    };
    format!("#pragma HLS {body}")
}

fn decl(d: &VarDecl) -> String {
    let mut s = format!("{} {}{}", d.ty, if d.pointer { "*" } else { "" }, d.name);
    for n in &d.dims {
        let _ = write!(s, "[{n}]");
    }
    if let Some(init) = &d.init {
        let _ = write!(s, " = {}", emit_expr(init));
    }
    s
}

fn simple(s: &Stmt) -> String {
    match s {
        Stmt::Decl(d) => decl(d),
        Stmt::Assign(a) => match &a.value {
            None => format!("{}{}", emit_expr(&a.target), a.op.symbol()),
            Some(v) => format!("{} {} {}", emit_expr(&a.target), a.op.symbol(), emit_expr(v)),
        },
        Stmt::Expr(e) => emit_expr(e),
        _ => String::new(),
    }
}

/// One-line rendering of a statement: the full text for simple statements,
/// the header for loops and branches.
pub fn stmt_head(s: &Stmt) -> String {
    match s {
        Stmt::Decl(_) | Stmt::Assign(_) | Stmt::Expr(_) => format!("{};", simple(s)),
        Stmt::Return(None, _) => "return;".to_string(),
        Stmt::Return(Some(e), _) => format!("return {};", emit_expr(e)),
        Stmt::Block(_) => "{".to_string(),
        Stmt::For(l) => {
            let init = l.init.as_deref().map(simple).unwrap_or_default();
            let cond = l.cond.as_ref().map(emit_expr).unwrap_or_default();
            let step = l.step.as_deref().map(simple).unwrap_or_default();
            let label = l.label.as_ref().map(|x| format!("{x}: ")).unwrap_or_default();
            format!("{label}for ({init}; {cond}; {step})")
        }
        Stmt::If(i) => format!("if ({})", emit_expr(&i.cond)),
    }
}

/// Renders a declaration without the trailing `;`.
pub fn emit_decl(d: &VarDecl) -> String {
    decl(d)
}

fn block(out: &mut String, b: &Block, pragmas: &[Pragma], level: usize) {
    if b.stmts.is_empty() && pragmas.is_empty() {
        out.push_str("{ }");
        return;
    }
    out.push_str("{\n");
    for p in pragmas {
        pragma_line(out, p, level + 1);
    }
    for s in &b.stmts {
        stmt(out, s, level + 1);
    }
    indent(out, level);
    out.push('}');
}

fn stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match s {
        Stmt::Decl(_) | Stmt::Assign(_) | Stmt::Expr(_) => {
            out.push_str(&simple(s));
            out.push(';');
        }
        Stmt::Return(None, _) => out.push_str("return;"),
        Stmt::Return(Some(e), _) => {
            let _ = write!(out, "return {};", emit_expr(e));
        }
        Stmt::Block(b) => block(out, b, &[], level),
        Stmt::For(l) => {
            out.push_str(&stmt_head(s));
            out.push(' ');
            block(out, &l.body, &l.pragmas, level);
        }
        Stmt::If(i) => if_chain(out, i, level),
    }
    out.push('\n');
}

fn if_chain(out: &mut String, i: &IfStmt, level: usize) {
    let _ = write!(out, "if ({}) ", emit_expr(&i.cond));
    block(out, &i.then_branch, &[], level);
    if let Some(e) = &i.else_branch {
        out.push_str(" else ");
        match e.stmts.as_slice() {
            [Stmt::If(inner)] => if_chain(out, inner, level),
            _ => block(out, e, &[], level),
        }
    }
}

/// Renders an expression with the minimum parentheses needed to re-parse it
/// to the same tree.
pub fn emit_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Float { value, single } => {
            let mut s = format!("{value:?}");
            if !s.contains(['.', 'e', 'E']) {
                s.push_str(".0");
            }
            if *single {
                s.push('f');
            }
            s
        }
        ExprKind::Var(v) => v.clone(),
        ExprKind::Index { array, indices } => {
            let mut s = array.clone();
            for i in indices {
                let _ = write!(s, "[{}]", emit_expr(i));
            }
            s
        }
        ExprKind::Unary { op, operand } => {
            let sym = match op {
                UnaryOp::Neg => "-",
                UnaryOp::Not => "!",
            };
            format!("{sym}{}", unary_operand(operand))
        }
        ExprKind::Deref(inner) => format!("*{}", unary_operand(inner)),
        ExprKind::AddrOf(inner) => format!("&{}", unary_operand(inner)),
        ExprKind::Binary { op, lhs, rhs } => {
            let l = binary_child(lhs, |p| p < op.precedence());
            let r = binary_child(rhs, |p| p <= op.precedence());
            format!("{l} {} {r}", op.symbol())
        }
        ExprKind::Call { name, args } => {
            let args: Vec<String> = args.iter().map(emit_expr).collect();
            format!("{name}({})", args.join(", "))
        }
        ExprKind::New { ty, count } => format!("new {ty}[{}]", emit_expr(count)),
        ExprKind::SizeOf(ty) => format!("sizeof({ty})"),
    }
}

fn unary_operand(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Binary { .. } | ExprKind::Unary { .. } | ExprKind::Deref(_) | ExprKind::AddrOf(_) => {
            format!("({})", emit_expr(e))
        }
        // Negative literals would fold into the literal on re-parse.
        ExprKind::Int(_) | ExprKind::Float { .. } => format!("({})", emit_expr(e)),
        _ => emit_expr(e),
    }
}

fn binary_child(e: &Expr, needs_parens: impl Fn(u8) -> bool) -> String {
    match &e.kind {
        ExprKind::Binary { op, .. } if needs_parens(op.precedence()) => format!("({})", emit_expr(e)),
        _ => emit_expr(e),
    }
}
