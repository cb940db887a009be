// SPDX-License-Identifier: Apache-2.0

//! Structural mutations that plant one error of a given mnemonic.

use crate::diagnostics::verify;
use crate::fixer::{each_stmt, each_stmt_mut};
use crate::frontend::*;
use serde::{Deserialize, Serialize};

/// One text fragment changed by an injection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    /// Text before injection; empty when the injection added code.
    pub original: String,
    pub injected: String,
}

impl Fragment {
    fn new(original: impl Into<String>, injected: impl Into<String>) -> Self {
        Fragment { original: original.into(), injected: injected.into() }
    }

    /// Instruction that undoes this fragment.
    pub fn correction(&self) -> String {
        match (self.original.is_empty(), self.injected.is_empty()) {
            (true, _) => format!("remove `{}`", self.injected),
            (false, true) => format!("restore `{}`", self.original),
            (false, false) => format!("replace `{}` with `{}`", self.injected, self.original),
        }
    }
}

/// A candidate injection.
#[derive(Clone, Debug)]
pub struct Mutation {
    pub ast: Ast,
    pub site: String,
    pub fragments: Vec<Fragment>,
}

/// Why a mnemonic has no site in a design.
pub fn inapplicable_reason(mnemonic: &str) -> &'static str {
    match mnemonic {
        "DAA" => "no one-dimensional local array",
        "OOB" => "no loop bound equal to an extent it indexes",
        "PTR" => "no assignment inside a loop",
        "UDT" => "no local int declaration",
        "AID" => "no array to partition",
        "DPC" => "no loop or conflicting sibling loops",
        "MLP" => "no nested loops",
        "PUC" => "no loop with a known trip count",
        "UDM" => "no loop to host a call",
        "FIN" => "no array access indexed by an innermost loop variable",
        _ => "no injection rule for this mnemonic",
    }
}

/// All eligible injections of `mnemonic`, in a stable order.
pub fn mutations(design: &Ast, mnemonic: &str) -> Vec<Mutation> {
    match mnemonic {
        "DAA" => daa(design),
        "OOB" => oob(design),
        "PTR" => ptr(design),
        "UDT" => udt(design),
        "AID" => aid(design),
        "DPC" => dpc(design),
        "MLP" => mlp(design),
        "PUC" => puc(design),
        "UDM" => udm(design),
        "FIN" => fin(design),
        _ => Vec::new(),
    }
}

/// Statements of `b` in pre-order over nested blocks, with whether each sits
/// inside a loop body.
fn flat(b: &Block, in_loop: bool, out: &mut Vec<(Stmt, bool)>) {
    for s in &b.stmts {
        out.push((s.clone(), in_loop));
        let inner = in_loop || matches!(s, Stmt::For(_));
        for c in s.child_blocks() {
            flat(c, inner, out);
        }
    }
}

/// Replaces the `n`th statement of the [`flat`] order with `with`.
fn splice(b: &mut Block, n: &mut usize, with: &[Stmt]) -> bool {
    let mut i = 0;
    while i < b.stmts.len() {
        if *n == 0 {
            b.stmts.splice(i..=i, with.iter().cloned());
            return true;
        }
        *n -= 1;
        for c in b.stmts[i].child_blocks_mut() {
            if splice(c, n, with) {
                return true;
            }
        }
        i += 1;
    }
    false
}

fn top_name(design: &Ast) -> String {
    design.top().map(|f| f.name.clone()).unwrap_or_default()
}

fn reparse(ast: &Ast) -> Ast {
    parse_str(&emit_ast(ast)).unwrap_or_else(|_| ast.clone())
}

fn daa(design: &Ast) -> Vec<Mutation> {
    let mut out = Vec::new();
    let top = top_name(design);
    let Some(f) = design.top() else { return out };
    let mut all = Vec::new();
    flat(&f.body, false, &mut all);
    for (n, (s, _)) in all.iter().enumerate() {
        let Stmt::Decl(d) = s else { continue };
        if d.dims.len() != 1 || d.init.is_some() || d.pointer {
            continue;
        }
        let alloc = VarDecl {
            ty: d.ty.clone(),
            name: d.name.clone(),
            pointer: true,
            dims: Vec::new(),
            init: Some(Expr::new(
                ExprKind::New { ty: d.ty.clone(), count: Box::new(Expr::int(d.dims[0] as i64)) },
                Loc::default(),
            )),
            loc: d.loc,
        };
        let mut ast = design.clone();
        let body = &mut ast.function_mut(&top).unwrap().body;
        splice(body, &mut n.clone(), &[Stmt::Decl(alloc.clone())]);
        out.push(Mutation {
            ast: reparse(&ast),
            site: format!("declaration of `{}`", d.name),
            fragments: vec![Fragment::new(format!("{};", emit_decl(d)), format!("{};", emit_decl(&alloc)))],
        });
    }
    out
}

fn oob(design: &Ast) -> Vec<Mutation> {
    let meta = extract_metadata(design);
    let mut out = Vec::new();
    for l in design.loops() {
        let Some(cond) = &l.cond else { continue };
        let ExprKind::Binary { op: BinaryOp::Lt, lhs, rhs } = &cond.kind else { continue };
        let (ExprKind::Var(v), Some(bound)) = (&lhs.kind, rhs.as_int()) else { continue };
        let hits = meta.arrays.iter().any(|a| {
            a.accesses.iter().any(|acc| {
                acc.loops.contains(&l.id)
                    && acc.index.as_ref().is_some_and(|x| x.terms.len() == 1 && x.coeff(v) == 1 && x.constant == 0)
                    && a.dims.get(acc.dim).is_some_and(|e| *e as i64 == bound)
            })
        });
        if !hits {
            continue;
        }
        let mut ast = design.clone();
        ast.with_loop_mut(l.id, |m| {
            if let Some(Expr { kind: ExprKind::Binary { op, .. }, .. }) = &mut m.cond {
                *op = BinaryOp::Le;
            }
        });
        out.push(Mutation {
            ast: reparse(&ast),
            site: format!("bound of loop {}", l.id),
            fragments: vec![Fragment::new(format!("{v} < {bound}"), format!("{v} <= {bound}"))],
        });
    }
    out
}

fn decl_type(f: &Function, name: &str) -> Option<Type> {
    if let Some(p) = f.params.iter().find(|p| p.name == name) {
        return Some(p.ty.clone());
    }
    let mut found = None;
    each_stmt(&f.body, &mut |s| {
        if let Stmt::Decl(d) = s {
            if d.name == name && found.is_none() {
                found = Some(d.ty.clone());
            }
        }
    });
    found
}

fn ptr(design: &Ast) -> Vec<Mutation> {
    let mut out = Vec::new();
    let top = top_name(design);
    let Some(f) = design.top() else { return out };
    let mut all = Vec::new();
    flat(&f.body, false, &mut all);
    let name = "ptr_0";
    if decl_type(f, name).is_some() {
        return out;
    }
    for (n, (s, in_loop)) in all.iter().enumerate() {
        let Stmt::Assign(a) = s else { continue };
        if !in_loop || a.op != AssignOp::Set {
            continue;
        }
        let Some(value) = &a.value else { continue };
        let base = match &a.target.kind {
            ExprKind::Var(v) | ExprKind::Index { array: v, .. } => v.clone(),
            _ => continue,
        };
        let Some(ty) = decl_type(f, &base) else { continue };
        let deref = Expr::new(ExprKind::Deref(Box::new(Expr::var(name))), Loc::default());
        let store =
            Stmt::Assign(Assign { target: deref.clone(), op: AssignOp::Set, value: Some(value.clone()), loc: Loc::default() });
        let load = Stmt::Assign(Assign { target: a.target.clone(), op: AssignOp::Set, value: Some(deref), loc: Loc::default() });
        let decl = VarDecl {
            ty: Type::new(ty.scalar.clone()),
            name: name.into(),
            pointer: true,
            dims: Vec::new(),
            init: None,
            loc: Loc::default(),
        };
        let mut ast = design.clone();
        let body = &mut ast.function_mut(&top).unwrap().body;
        splice(body, &mut n.clone(), &[store.clone(), load.clone()]);
        body.stmts.insert(0, Stmt::Decl(decl.clone()));
        out.push(Mutation {
            ast: reparse(&ast),
            site: format!("assignment `{}`", stmt_head(s)),
            fragments: vec![
                Fragment::new("", format!("{};", emit_decl(&decl))),
                Fragment::new(stmt_head(s), format!("{} {}", stmt_head(&store), stmt_head(&load))),
            ],
        });
    }
    out
}

fn udt(design: &Ast) -> Vec<Mutation> {
    let mut out = Vec::new();
    let top = top_name(design);
    let Some(f) = design.top() else { return out };
    let mut count = 0;
    each_stmt(&f.body, &mut |s| {
        if matches!(s, Stmt::Decl(d) if d.ty.scalar == ScalarType::Int) {
            count += 1;
        }
    });
    for k in 0..count {
        let mut ast = design.clone();
        let mut seen = 0;
        let mut frag = None;
        each_stmt_mut(&mut ast.function_mut(&top).unwrap().body, &mut |s| {
            if let Stmt::Decl(d) = s {
                if d.ty.scalar == ScalarType::Int {
                    if seen == k {
                        let before = emit_decl(d);
                        d.ty.scalar = ScalarType::Other("long long".into());
                        frag = Some((d.name.clone(), Fragment::new(before, emit_decl(d))));
                    }
                    seen += 1;
                }
            }
        });
        if let Some((name, fragment)) = frag {
            out.push(Mutation { ast: reparse(&ast), site: format!("declaration of `{name}`"), fragments: vec![fragment] });
        }
    }
    out
}

fn aid(design: &Ast) -> Vec<Mutation> {
    let meta = extract_metadata(design);
    let top = top_name(design);
    let mut out = Vec::new();
    for a in meta.arrays.iter().filter(|a| a.rank() >= 1) {
        let owner = a.function.clone().unwrap_or_else(|| top.clone());
        let p = Pragma::partition(&a.name, PartitionType::Cyclic, Some(2), a.rank() as i64 + 1);
        let Ok(ast) = attach_pragma(design, &PragmaSite::Function(owner.clone()), p.clone()) else { continue };
        out.push(Mutation {
            ast: reparse(&ast),
            site: format!("function {owner}, array `{}`", a.name),
            fragments: vec![Fragment::new("", emit_pragma(&p))],
        });
    }
    out
}

fn dpc(design: &Ast) -> Vec<Mutation> {
    let mut out = Vec::new();
    let top = top_name(design);
    if let Ok(ast) = attach_pragma(design, &PragmaSite::Function(top.clone()), Pragma::dataflow()) {
        if verify(&ast).has("DPC") {
            out.push(Mutation {
                ast: reparse(&ast),
                site: format!("function {top}"),
                fragments: vec![Fragment::new("", emit_pragma(&Pragma::dataflow()))],
            });
        }
    }
    let meta = extract_metadata(design);
    for l in meta.loops.iter().filter(|l| l.children.is_empty()) {
        let site = PragmaSite::Loop(l.id);
        let mut ast = design.clone();
        let mut frags = Vec::new();
        if !design.find_loop(l.id).is_some_and(|x| x.has_pragma(PragmaTag::Pipeline)) {
            let Ok(next) = attach_pragma(&ast, &site, Pragma::pipeline(None)) else { continue };
            ast = next;
            frags.push(Fragment::new("", emit_pragma(&Pragma::pipeline(None))));
        }
        let Ok(next) = attach_pragma(&ast, &site, Pragma::dataflow()) else { continue };
        frags.push(Fragment::new("", emit_pragma(&Pragma::dataflow())));
        out.push(Mutation { ast: reparse(&next), site: format!("loop {}", l.id), fragments: frags });
    }
    out
}

fn mlp(design: &Ast) -> Vec<Mutation> {
    let meta = extract_metadata(design);
    let mut out = Vec::new();
    for l in meta.loops.iter().filter(|l| !l.children.is_empty()) {
        let Some(inner) = meta.descendants(l.id).into_iter().find(|d| meta.is_innermost(*d)) else { continue };
        let mut ast = design.clone();
        let mut frags = Vec::new();
        for id in [l.id, inner] {
            if ast.find_loop(id).is_some_and(|x| x.has_pragma(PragmaTag::Pipeline)) {
                continue;
            }
            let Ok(next) = attach_pragma(&ast, &PragmaSite::Loop(id), Pragma::pipeline(None)) else { continue };
            ast = next;
            frags.push(Fragment::new("", format!("{} (loop {id})", emit_pragma(&Pragma::pipeline(None)))));
        }
        if frags.is_empty() {
            continue;
        }
        out.push(Mutation { ast: reparse(&ast), site: format!("loops {} and {inner}", l.id), fragments: frags });
    }
    out
}

fn puc(design: &Ast) -> Vec<Mutation> {
    let meta = extract_metadata(design);
    let mut out = Vec::new();
    for l in meta.loops.iter().filter(|l| l.trip_count.is_some_and(|t| t >= 2)) {
        let Some(lp) = design.find_loop(l.id) else { continue };
        if lp.has_pragma(PragmaTag::Unroll) {
            continue;
        }
        let site = PragmaSite::Loop(l.id);
        let mut ast = design.clone();
        let mut frags = Vec::new();
        if !lp.has_pragma(PragmaTag::Pipeline) {
            let Ok(next) = attach_pragma(&ast, &site, Pragma::pipeline(None)) else { continue };
            ast = next;
            frags.push(Fragment::new("", emit_pragma(&Pragma::pipeline(None))));
        }
        let Ok(next) = attach_pragma(&ast, &site, Pragma::unroll(None)) else { continue };
        frags.push(Fragment::new("", emit_pragma(&Pragma::unroll(None))));
        out.push(Mutation { ast: reparse(&next), site: format!("loop {}", l.id), fragments: frags });
    }
    out
}

fn udm(design: &Ast) -> Vec<Mutation> {
    let meta = extract_metadata(design);
    let mut out = Vec::new();
    for l in &meta.loops {
        if l.index_var.is_empty() {
            continue;
        }
        let call = Stmt::Expr(Expr::new(
            ExprKind::Call { name: "hls_trace".into(), args: vec![Expr::var(&l.index_var)] },
            Loc::default(),
        ));
        let mut ast = design.clone();
        ast.with_loop_mut(l.id, |m| m.body.stmts.insert(0, call.clone()));
        out.push(Mutation {
            ast: reparse(&ast),
            site: format!("body of loop {}", l.id),
            fragments: vec![Fragment::new("", stmt_head(&call))],
        });
    }
    out
}

/// Subscripts in `e` that are exactly `var`, in walk order.
fn var_subscripts(e: &Expr, var: &str) -> usize {
    let mut n = 0;
    e.walk(&mut |x| {
        if let ExprKind::Index { indices, .. } = &x.kind {
            n += indices.iter().filter(|i| matches!(&i.kind, ExprKind::Var(v) if v == var)).count();
        }
    });
    n
}

fn fin(design: &Ast) -> Vec<Mutation> {
    let meta = extract_metadata(design);
    let mut out = Vec::new();
    for l in meta.loops.iter().filter(|l| l.children.is_empty() && !l.index_var.is_empty()) {
        let Some(lp) = design.find_loop(l.id) else { continue };
        let var = l.index_var.clone();
        let repl = {
            let mut cur = l.parent;
            let mut found = None;
            while let Some(p) = cur {
                let pi = meta.loop_info(p).unwrap();
                if pi.trip_count == l.trip_count && !pi.index_var.is_empty() {
                    found = Some(pi.index_var.clone());
                    break;
                }
                cur = pi.parent;
            }
            found.map_or_else(|| Expr::int(0), |v| Expr::var(&v))
        };
        let mut total = 0;
        each_stmt(&lp.body, &mut |s| total += s.exprs().iter().map(|e| var_subscripts(e, &var)).sum::<usize>());
        for k in 0..total {
            let mut ast = design.clone();
            let mut seen = 0;
            let mut frag = None;
            ast.with_loop_mut(l.id, |m| {
                each_stmt_mut(&mut m.body, &mut |s| {
                    for root in s.exprs_mut() {
                        root.walk_mut(&mut |x| {
                            let text = emit_expr(x);
                            if let ExprKind::Index { indices, .. } = &mut x.kind {
                                for i in indices.iter_mut() {
                                    if matches!(&i.kind, ExprKind::Var(v) if *v == var) {
                                        if seen == k {
                                            *i = repl.clone();
                                            frag = Some(text.clone());
                                        }
                                        seen += 1;
                                    }
                                }
                            }
                        });
                    }
                });
            });
            let Some(before) = frag else { continue };
            let after = find_changed(&ast, design, l.id).unwrap_or_default();
            out.push(Mutation {
                ast: reparse(&ast),
                site: format!("subscript in loop {}", l.id),
                fragments: vec![Fragment::new(before, after)],
            });
        }
    }
    out
}

/// Text of the first array reference in loop `id` of `a` that differs from `b`.
fn find_changed(a: &Ast, b: &Ast, id: LoopId) -> Option<String> {
    let refs = |ast: &Ast| {
        let mut v = Vec::new();
        if let Some(l) = ast.find_loop(id) {
            each_stmt(&l.body, &mut |s| {
                for e in s.exprs() {
                    e.walk(&mut |x| {
                        if matches!(x.kind, ExprKind::Index { .. }) {
                            v.push(emit_expr(x));
                        }
                    });
                }
            });
        }
        v
    };
    let (ra, rb) = (refs(a), refs(b));
    ra.into_iter().zip(rb).find(|(x, y)| x != y).map(|(x, _)| x)
}
