// SPDX-License-Identifier: Apache-2.0

//! Per-mnemonic repair policies of the offline backend.

use super::edit::{apply_edits, each_stmt, Edit, NodeKind};
use super::{Localization, Suggestion, SuggestionSource};
use crate::bugrag::{identifier, ErrorSlice};
use crate::diagnostics::{differential_check, ErrorRecord};
use crate::frontend::*;
use std::collections::BTreeSet;

/// Runs used when a candidate index repair is confirmed by simulation.
pub const CONFIRM_RUNS: usize = 8;
const CONFIRM_SEED: u64 = 11;

/// Fallback array size when an allocation size is not a constant.
pub const FALLBACK_ARRAY_SIZE: u64 = 1024;

/// Builds the suggestion for the records sharing the first actionable
/// mnemonic. `variant` selects an alternative repair where one exists.
pub fn suggest(
    ast: &Ast,
    records: &[ErrorRecord],
    slice: Option<&ErrorSlice>,
    variant: u32,
    reference: Option<&Ast>,
) -> Suggestion {
    let Some(first) = records.first() else {
        return Suggestion::empty("no records");
    };
    let mnemonic = slice.map_or(first.mnemonic.clone(), |s| s.mnemonic.clone());
    let group: Vec<&ErrorRecord> = records.iter().filter(|r| r.mnemonic.eq_ignore_ascii_case(&mnemonic)).collect();
    let group = if group.is_empty() { vec![first] } else { group };
    let mut edits: Vec<Edit> = Vec::new();
    if slice.is_some() {
        for r in &group {
            for e in edits_for(ast, &mnemonic, r, variant, reference) {
                if !edits.contains(&e) {
                    edits.push(e);
                }
            }
        }
    }
    let localization = group.iter().map(|r| Localization { line: r.line, col: r.col, target: target_of(ast, r) }).collect();
    let (loc_text, diag_text) = match slice {
        Some(s) => s.cot.render(group[0]),
        None => (format!("{} at line {}: {}", group[0].mnemonic, group[0].line, group[0].message), String::new()),
    };
    let diagnosis = match slice {
        Some(s) => format!("[{}] {} {}", s.mnemonic, s.error_type, diag_text),
        None => format!("[{}] no knowledge slice covers this error", group[0].mnemonic),
    };
    let steps: Vec<String> = edits.iter().map(ToString::to_string).collect();
    let reasoning = format!(
        "Localization: {loc_text}\nDiagnosis: {diagnosis}\nCorrection: {}",
        if steps.is_empty() { "no structured edit available".to_string() } else { steps.join("; ") }
    );
    Suggestion { localization, diagnosis, edits, reasoning, source: SuggestionSource::Deterministic }
}

fn target_of(ast: &Ast, r: &ErrorRecord) -> Option<String> {
    for l in ast.loops() {
        if l.loc.line == r.line || l.pragmas.iter().any(|p| p.loc.same(r.loc())) {
            return Some(l.id.to_string());
        }
    }
    let id = identifier(r);
    (id != r.snippet).then_some(id)
}

fn edits_for(ast: &Ast, mnemonic: &str, r: &ErrorRecord, variant: u32, reference: Option<&Ast>) -> Vec<Edit> {
    match mnemonic {
        "DAA" => daa(ast, r),
        "OOB" => oob(ast, r),
        "PTR" => ptr(ast, r),
        "UDT" => udt(ast, r),
        "AID" => aid(ast, r, variant),
        "DPC" => dpc(ast, r),
        "MLP" => mlp(ast, r, variant),
        "PUC" => puc(ast, r, variant),
        "UDM" => udm(ast, r),
        "FIN" => fin(ast, variant, reference),
        _ => Vec::new(),
    }
}

/// A statement reached by walking a function, with its enclosing loops.
struct Hit<'a> {
    function: &'a Function,
    stmt: &'a Stmt,
    loops: Vec<&'a ForLoop>,
}

fn walk_hits<'a>(b: &'a Block, f: &'a Function, loops: &mut Vec<&'a ForLoop>, out: &mut Vec<Hit<'a>>) {
    for s in &b.stmts {
        out.push(Hit { function: f, stmt: s, loops: loops.clone() });
        if let Stmt::For(l) = s {
            loops.push(l);
            if let Some(init) = &l.init {
                out.push(Hit { function: f, stmt: init, loops: loops.clone() });
            }
            walk_hits(&l.body, f, loops, out);
            loops.pop();
        } else {
            for c in s.child_blocks() {
                walk_hits(c, f, loops, out);
            }
        }
    }
}

fn hits(ast: &Ast) -> Vec<Hit<'_>> {
    let mut out = Vec::new();
    for f in ast.functions() {
        walk_hits(&f.body, f, &mut Vec::new(), &mut out);
    }
    out
}

/// Own expressions of a statement (loop headers count only their condition).
fn own_exprs(s: &Stmt) -> Vec<&Expr> {
    match s {
        Stmt::For(l) => l.cond.iter().collect(),
        _ => s.exprs(),
    }
}

fn find_expr<'a>(s: &'a Stmt, pred: &dyn Fn(&Expr) -> bool) -> Option<&'a Expr> {
    let mut found = None;
    for e in own_exprs(s) {
        e.walk(&mut |x| {
            if found.is_none() && pred(x) {
                found = Some(x);
            }
        });
    }
    found
}

fn delete_stmt(s: &Stmt) -> Edit {
    let loc = s.loc();
    Edit::ReplaceNode { node: NodeKind::Stmt, line: loc.line, col: loc.col, old: stmt_head(s), new: String::new() }
}

fn replace_expr(e: &Expr, new: String) -> Edit {
    Edit::ReplaceNode { node: NodeKind::Expr, line: e.loc.line, col: e.loc.col, old: emit_expr(e), new }
}

fn local_decl<'a>(f: &'a Function, name: &str) -> Option<&'a VarDecl> {
    let mut found = None;
    each_stmt(&f.body, &mut |s| {
        if let Stmt::Decl(d) = s {
            if d.name == name && found.is_none() {
                found = Some(d);
            }
        }
    });
    found
}

/// Constant value of an allocation size expression in bytes or elements.
fn const_eval(e: &Expr) -> Option<i64> {
    match &e.kind {
        ExprKind::Int(v) => Some(*v),
        ExprKind::SizeOf(t) => Some(i64::from(t.scalar.width().max(8) / 8)),
        ExprKind::Binary { op, lhs, rhs } => {
            let (a, b) = (const_eval(lhs)?, const_eval(rhs)?);
            match op {
                BinaryOp::Add => Some(a + b),
                BinaryOp::Sub => Some(a - b),
                BinaryOp::Mul => Some(a * b),
                BinaryOp::Div if b != 0 => Some(a / b),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Element count of an allocation.
fn alloc_count(e: &Expr, elem: &Type) -> Option<u64> {
    let n = match &e.kind {
        ExprKind::New { count, .. } => const_eval(count)?,
        ExprKind::Call { name, args } if name == "malloc" && args.len() == 1 => {
            const_eval(&args[0])? / i64::from(elem.scalar.width().max(8) / 8)
        }
        ExprKind::Call { name, args } if name == "calloc" && args.len() == 2 => const_eval(&args[0])?,
        _ => return None,
    };
    u64::try_from(n).ok().filter(|n| *n > 0)
}

fn is_alloc(e: &Expr) -> bool {
    matches!(&e.kind, ExprKind::New { .. })
        || matches!(&e.kind, ExprKind::Call { name, .. } if name == "malloc" || name == "calloc")
}

fn static_decl(ty: &Type, name: &str, count: Option<u64>) -> String {
    format!("{ty} {name}[{}]", count.unwrap_or(FALLBACK_ARRAY_SIZE))
}

fn free_calls(f: &Function, name: &str) -> Vec<Edit> {
    let mut out = Vec::new();
    each_stmt(&f.body, &mut |s| {
        if let Stmt::Expr(Expr { kind: ExprKind::Call { name: callee, args }, .. }) = s {
            if callee == "free" && matches!(args.as_slice(), [a] if matches!(&a.kind, ExprKind::Var(v) if v == name)) {
                out.push(delete_stmt(s));
            }
        }
    });
    out
}

fn daa(ast: &Ast, r: &ErrorRecord) -> Vec<Edit> {
    for h in hits(ast) {
        let Some(alloc) = find_expr(h.stmt, &|x| x.loc.same(r.loc()) && is_alloc(x)) else { continue };
        let fname = h.function.name.clone();
        match h.stmt {
            Stmt::Decl(d) => {
                let elem = match &alloc.kind {
                    ExprKind::New { ty, .. } => ty.clone(),
                    _ => d.ty.clone(),
                };
                let mut edits = vec![Edit::RewriteDecl {
                    function: fname,
                    name: d.name.clone(),
                    line: Some(d.loc.line),
                    decl: static_decl(&elem, &d.name, alloc_count(alloc, &elem)),
                }];
                edits.extend(free_calls(h.function, &d.name));
                return edits;
            }
            Stmt::Assign(a) => {
                let ExprKind::Var(p) = &a.target.kind else { return Vec::new() };
                let Some(d) = local_decl(h.function, p) else { return Vec::new() };
                let elem = match &alloc.kind {
                    ExprKind::New { ty, .. } => ty.clone(),
                    _ => d.ty.clone(),
                };
                let mut edits = vec![
                    Edit::RewriteDecl {
                        function: fname,
                        name: d.name.clone(),
                        line: Some(d.loc.line),
                        decl: static_decl(&elem, &d.name, alloc_count(alloc, &elem)),
                    },
                    delete_stmt(h.stmt),
                ];
                edits.extend(free_calls(h.function, &d.name));
                return edits;
            }
            _ => return Vec::new(),
        }
    }
    Vec::new()
}

fn array_dims(ast: &Ast, f: &Function, name: &str) -> Option<Vec<u64>> {
    if let Some(p) = f.params.iter().find(|p| p.name == name && p.is_array()) {
        return Some(p.dims.clone());
    }
    if let Some(d) = local_decl(f, name).filter(|d| d.is_array()) {
        return Some(d.dims.clone());
    }
    ast.globals().find(|g| g.name == name && g.is_array()).map(|g| g.dims.clone())
}

fn oob(ast: &Ast, r: &ErrorRecord) -> Vec<Edit> {
    for h in hits(ast) {
        let Some(access) = find_expr(h.stmt, &|x| x.loc.same(r.loc()) && matches!(x.kind, ExprKind::Index { .. })) else {
            continue;
        };
        let ExprKind::Index { array, indices } = &access.kind else { continue };
        let Some(dims) = array_dims(ast, h.function, array) else { continue };
        for (d, idx) in indices.iter().enumerate().take(dims.len()) {
            let Some(aff) = Affine::from_expr(idx) else { continue };
            if aff.terms.len() != 1 {
                continue;
            }
            let (var, coeff) = aff.terms.iter().next().unwrap();
            if *coeff != 1 {
                continue;
            }
            let Some(l) = h.loops.iter().rev().find(|l| loop_bounds(l).0 == *var) else { continue };
            let Some(b) = loop_bounds(l).1 else { continue };
            let extent = dims[d] as i64;
            if b.step > 0 && b.max() + aff.constant >= extent {
                let bound = extent - aff.constant;
                if bound > b.start {
                    return vec![Edit::ClampBound { loop_id: l.id, bound }];
                }
            }
        }
    }
    Vec::new()
}

fn ptr(ast: &Ast, r: &ErrorRecord) -> Vec<Edit> {
    let name = identifier(r);
    for f in ast.functions() {
        let Some(d) = local_decl(f, &name).filter(|d| d.pointer && d.dims.is_empty()) else { continue };
        let mut edits = vec![Edit::RewriteDecl {
            function: f.name.clone(),
            name: name.clone(),
            line: Some(d.loc.line),
            decl: format!("{} {}", d.ty, name),
        }];
        let mut seen = BTreeSet::new();
        each_stmt(&f.body, &mut |s| {
            for e in own_exprs(s) {
                e.walk(&mut |x| {
                    let hit = match &x.kind {
                        ExprKind::Deref(inner) => matches!(&inner.kind, ExprKind::Var(v) if *v == name),
                        ExprKind::Index { array, indices } => {
                            *array == name && matches!(indices.as_slice(), [i] if i.as_int() == Some(0))
                        }
                        _ => false,
                    };
                    if hit && seen.insert(x.loc.key()) {
                        edits.push(replace_expr(x, name.clone()));
                    }
                });
            }
        });
        return edits;
    }
    Vec::new()
}

/// Nearest allowlisted type of the same width.
pub fn allowlisted_swap(t: &ScalarType) -> ScalarType {
    let ScalarType::Other(name) = t else { return t.clone() };
    match name.as_str() {
        "long long" | "unsigned long" | "unsigned long long" | "int64_t" | "uint64_t" | "size_t" | "intptr_t" => ScalarType::Long,
        "long double" | "float64_t" => ScalarType::Double,
        "unsigned char" | "signed char" | "int8_t" | "uint8_t" | "bool" => ScalarType::Char,
        "unsigned short" | "int16_t" | "uint16_t" => ScalarType::Short,
        "uint32_t" => ScalarType::Unsigned,
        "half" | "float32_t" => ScalarType::Float,
        _ => ScalarType::Int,
    }
}

fn udt(ast: &Ast, r: &ErrorRecord) -> Vec<Edit> {
    let names: Vec<&str> = r.message.split('`').skip(1).step_by(2).collect();
    let Some(name) = names.get(1) else { return Vec::new() };
    for f in ast.functions() {
        if f.name == *name && f.loc.line == r.line && !f.ret.scalar.is_allowlisted() {
            let ty = Type { scalar: allowlisted_swap(&f.ret.scalar), is_const: f.ret.is_const };
            return vec![Edit::RewriteDecl {
                function: f.name.clone(),
                name: f.name.clone(),
                line: None,
                decl: format!("{ty} {}", f.name),
            }];
        }
        let mut found: Option<VarDecl> = f.params.iter().find(|p| p.name == *name && p.loc.line == r.line).cloned();
        if found.is_none() {
            each_stmt(&f.body, &mut |s| {
                if let Stmt::Decl(d) = s {
                    if d.name == *name && d.loc.line == r.line && found.is_none() {
                        found = Some(d.clone());
                    }
                }
            });
        }
        if let Some(d) = found {
            let swapped = VarDecl { ty: Type { scalar: allowlisted_swap(&d.ty.scalar), is_const: d.ty.is_const }, ..d.clone() };
            return vec![Edit::RewriteDecl {
                function: f.name.clone(),
                name: d.name.clone(),
                line: Some(d.loc.line),
                decl: emit_decl(&swapped),
            }];
        }
    }
    Vec::new()
}

fn pragma_at(ast: &Ast, loc: Loc) -> Option<(PragmaSite, Pragma)> {
    ast.pragmas().into_iter().find(|(_, p)| p.loc.same(loc)).map(|(s, p)| (s, p.clone()))
}

fn aid(ast: &Ast, r: &ErrorRecord, variant: u32) -> Vec<Edit> {
    let Some((site, p)) = pragma_at(ast, r.loc()) else { return Vec::new() };
    let PragmaKind::ArrayPartition { variable, ptype, factor, .. } = &p.kind else { return Vec::new() };
    let remove = Edit::RemovePragma { site: site.clone(), pragma: p.kind.clone() };
    let meta = extract_metadata(ast);
    let Some(info) = meta.array(variable).filter(|a| a.rank() > 0) else { return vec![remove] };
    if variant % 2 == 1 {
        return vec![remove];
    }
    let dim =
        info.accesses.iter().filter(|a| a.index.as_ref().is_none_or(|i| !i.is_const())).map(|a| a.dim).min().unwrap_or(0) + 1;
    let fixed = PragmaKind::ArrayPartition { variable: variable.clone(), ptype: *ptype, factor: *factor, dim: dim as i64 };
    vec![remove, Edit::AttachPragma { site, pragma: fixed }]
}

fn dpc(ast: &Ast, r: &ErrorRecord) -> Vec<Edit> {
    match pragma_at(ast, r.loc()) {
        Some((site, p)) if p.kind == PragmaKind::Dataflow => vec![Edit::RemovePragma { site, pragma: p.kind }],
        _ => Vec::new(),
    }
}

fn pipeline_of(l: &ForLoop) -> Option<PragmaKind> {
    l.pragmas.iter().find(|p| p.kind.tag() == PragmaTag::Pipeline).map(|p| p.kind.clone())
}

fn mlp(ast: &Ast, r: &ErrorRecord, variant: u32) -> Vec<Edit> {
    let Some((PragmaSite::Loop(id), _)) = pragma_at(ast, r.loc()) else { return Vec::new() };
    let Some(root) = ast.find_loop(id) else { return Vec::new() };
    let mut nest: Vec<&ForLoop> = vec![root];
    root.body.walk(&mut |s| {
        if let Stmt::For(l) = s {
            nest.push(l);
        }
    });
    let piped_below = |l: &ForLoop| {
        let mut hit = false;
        l.body.walk(&mut |s| {
            if matches!(s, Stmt::For(x) if x.has_pragma(PragmaTag::Pipeline)) {
                hit = true;
            }
        });
        hit
    };
    let mut edits = Vec::new();
    for l in nest {
        let Some(kind) = pipeline_of(l) else { continue };
        let drop = if variant % 2 == 1 { l.id != root.id } else { piped_below(l) };
        if drop {
            edits.push(Edit::RemovePragma { site: PragmaSite::Loop(l.id), pragma: kind });
        }
    }
    edits
}

fn puc(ast: &Ast, r: &ErrorRecord, variant: u32) -> Vec<Edit> {
    let Some((site @ PragmaSite::Loop(id), p)) = pragma_at(ast, r.loc()) else { return Vec::new() };
    if variant % 2 == 1 {
        if let Some(kind) = ast.find_loop(id).and_then(pipeline_of) {
            return vec![Edit::RemovePragma { site, pragma: kind }];
        }
    }
    vec![Edit::RemovePragma { site, pragma: p.kind }]
}

fn udm(ast: &Ast, r: &ErrorRecord) -> Vec<Edit> {
    for h in hits(ast) {
        if let Stmt::Expr(e) = h.stmt {
            if e.loc.same(r.loc()) && matches!(e.kind, ExprKind::Call { .. }) {
                return vec![delete_stmt(h.stmt)];
            }
        }
    }
    Vec::new()
}

/// Index repairs: an access inside a loop that ignores the innermost loop
/// variable gets that variable substituted for one of its subscripts.
/// Reads come before writes; subscripts repeating a variable come first.
pub fn fin_candidates(ast: &Ast) -> Vec<Edit> {
    let Some(top) = ast.top() else { return Vec::new() };
    let mut scored: Vec<(u8, usize, Edit)> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut order = 0usize;
    let mut all = Vec::new();
    walk_hits(&top.body, top, &mut Vec::new(), &mut all);
    for h in &all {
        let Some(inner) = h.loops.last() else { continue };
        let (v, _) = loop_bounds(inner);
        if v.is_empty() {
            continue;
        }
        let loop_vars: Vec<String> = h.loops.iter().map(|l| loop_bounds(l).0).collect();
        let write_loc = match h.stmt {
            Stmt::Assign(a) => Some(a.target.loc.key()),
            _ => None,
        };
        for e in own_exprs(h.stmt) {
            e.walk(&mut |x| {
                let ExprKind::Index { indices, .. } = &x.kind else { return };
                if indices.iter().any(|i| i.mentions_var(&v)) {
                    return;
                }
                let is_write = write_loc == Some(x.loc.key());
                for (d, idx) in indices.iter().enumerate() {
                    let eligible = match &idx.kind {
                        ExprKind::Var(u) => loop_vars.contains(u),
                        ExprKind::Int(_) => true,
                        _ => false,
                    };
                    if !eligible || !seen.insert((x.loc.key(), d)) {
                        continue;
                    }
                    let repeated = match &idx.kind {
                        ExprKind::Var(u) => indices.iter().filter(|i| matches!(&i.kind, ExprKind::Var(w) if w == u)).count() > 1,
                        _ => false,
                    };
                    let rank = u8::from(is_write) * 2 + u8::from(!repeated);
                    scored.push((rank, order, replace_expr(idx, v.clone())));
                    order += 1;
                }
            });
        }
    }
    scored.sort_by_key(|(rank, order, _)| (*rank, std::cmp::Reverse(*order)));
    scored.into_iter().map(|(_, _, e)| e).collect()
}

fn fin(ast: &Ast, variant: u32, reference: Option<&Ast>) -> Vec<Edit> {
    let candidates = fin_candidates(ast);
    let pick = |list: Vec<Edit>| list.into_iter().nth(variant as usize).map(|e| vec![e]).unwrap_or_default();
    let Some(reference) = reference else { return pick(candidates) };
    candidates
        .into_iter()
        .filter(|e| {
            apply_edits(ast, std::slice::from_ref(e))
                .ok()
                .and_then(|a| differential_check(&a.ast, reference, CONFIRM_RUNS, CONFIRM_SEED).ok())
                .is_some_and(|o| o.passed)
        })
        .nth(variant as usize)
        .map(|e| vec![e])
        .unwrap_or_default()
}
