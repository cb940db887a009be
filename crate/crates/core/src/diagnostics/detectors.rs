// SPDX-License-Identifier: Apache-2.0

use super::ErrorRecord;
use crate::frontend::*;
use std::collections::{BTreeSet, HashMap};

/// Calls that synthesize without a definition in the unit.
pub const INTRINSICS: [&str; 4] = ["abs", "min", "max", "sqrt"];

/// Allocation routines; reported as DAA rather than as undefined calls.
pub const ALLOCATORS: [&str; 3] = ["malloc", "calloc", "free"];

pub struct Detector {
    pub mnemonic: &'static str,
    pub run: fn(&Ast, &DesignMetadata) -> Vec<ErrorRecord>,
}

pub const DETECTORS: [Detector; 10] = [
    Detector { mnemonic: "DAA", run: daa },
    Detector { mnemonic: "OOB", run: oob },
    Detector { mnemonic: "PTR", run: ptr },
    Detector { mnemonic: "UDT", run: udt },
    Detector { mnemonic: "AID", run: aid },
    Detector { mnemonic: "DPC", run: dpc },
    Detector { mnemonic: "MLP", run: mlp },
    Detector { mnemonic: "PUC", run: puc },
    Detector { mnemonic: "UDM", run: udm },
    Detector { mnemonic: "REC", run: rec },
];

/// Runs all static detectors, unsorted.
pub fn detect(ast: &Ast) -> Vec<ErrorRecord> {
    let meta = extract_metadata(ast);
    DETECTORS.iter().flat_map(|d| (d.run)(ast, &meta)).collect()
}

/// Visits every statement with its enclosing loops (outermost first).
fn each_stmt<'a>(block: &'a Block, loops: &mut Vec<&'a ForLoop>, f: &mut dyn FnMut(&'a Stmt, &[&'a ForLoop])) {
    for s in &block.stmts {
        f(s, loops);
        match s {
            Stmt::For(l) => {
                if let Some(init) = &l.init {
                    f(init, loops);
                }
                loops.push(l);
                each_stmt(&l.body, loops, f);
                if let Some(step) = &l.step {
                    f(step, loops);
                }
                loops.pop();
            }
            _ => {
                for b in s.child_blocks() {
                    each_stmt(b, loops, f);
                }
            }
        }
    }
}

/// Sub-expressions owned by a statement itself; loop headers are visited
/// separately, so only the condition is included for loops.
fn own_exprs(s: &Stmt) -> Vec<&Expr> {
    match s {
        Stmt::For(l) => l.cond.iter().collect(),
        _ => s.exprs(),
    }
}

fn all_subexprs<'a>(s: &'a Stmt, f: &mut dyn FnMut(&'a Expr)) {
    for e in own_exprs(s) {
        e.walk(f);
    }
}

fn daa(ast: &Ast, _: &DesignMetadata) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    for f in ast.functions() {
        each_stmt(&f.body, &mut Vec::new(), &mut |s, _| {
            all_subexprs(s, &mut |e| {
                let hit = match &e.kind {
                    ExprKind::New { .. } => true,
                    ExprKind::Call { name, .. } => name == "malloc" || name == "calloc",
                    _ => false,
                };
                if hit {
                    let target = match s {
                        Stmt::Decl(d) => format!(" for `{}`", d.name),
                        _ => String::new(),
                    };
                    out.push(ErrorRecord::new(
                        "DAA",
                        e.loc,
                        format!(
                            "`{}` allocates array storage dynamically{target}; array sizes must be fixed at synthesis time",
                            emit_expr(e)
                        ),
                        stmt_head(s),
                    ));
                }
            });
        });
    }
    out
}

fn oob(ast: &Ast, meta: &DesignMetadata) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    for f in ast.functions() {
        let extents = array_extents(ast, f);
        each_stmt(&f.body, &mut Vec::new(), &mut |s, loops| {
            let ids: Vec<LoopId> = loops.iter().map(|l| l.id).collect();
            all_subexprs(s, &mut |e| {
                let ExprKind::Index { array, indices } = &e.kind else { return };
                let Some(dims) = extents.get(array.as_str()) else { return };
                for (d, idx) in indices.iter().enumerate().take(dims.len()) {
                    let Some(aff) = Affine::from_expr(idx) else { continue };
                    let Some((lo, hi)) = aff.range(&|v| meta.var_range(&ids, v)) else { continue };
                    let extent = dims[d] as i64;
                    if lo < 0 || hi >= extent {
                        let bad = if hi >= extent { hi } else { lo };
                        out.push(ErrorRecord::new(
                            "OOB",
                            e.loc,
                            format!(
                                "index `{}` of `{array}` reaches {bad} but dimension {} has extent {extent}",
                                emit_expr(idx),
                                d + 1
                            ),
                            stmt_head(s),
                        ));
                        break;
                    }
                }
            });
        });
    }
    out
}

/// Extents of every array visible in `f`.
fn array_extents<'a>(ast: &'a Ast, f: &'a Function) -> HashMap<&'a str, &'a [u64]> {
    let mut m: HashMap<&str, &[u64]> = HashMap::new();
    for g in ast.globals().filter(|g| g.is_array()) {
        m.insert(&g.name, &g.dims);
    }
    for p in f.params.iter().filter(|p| p.is_array()) {
        m.insert(&p.name, &p.dims);
    }
    f.body.walk(&mut |s| {
        if let Stmt::Decl(d) = s {
            if d.is_array() {
                m.insert(&d.name, &d.dims);
            }
        }
    });
    m
}

fn ptr(ast: &Ast, _: &DesignMetadata) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    for f in ast.functions() {
        let mut bound: HashMap<String, bool> = HashMap::new();
        for p in f.params.iter().filter(|p| p.pointer) {
            bound.insert(p.name.clone(), true);
        }
        for g in ast.globals().filter(|g| g.pointer) {
            bound.insert(g.name.clone(), g.init.is_some());
        }
        each_stmt(&f.body, &mut Vec::new(), &mut |s, _| {
            let check = |e: &Expr, out: &mut Vec<ErrorRecord>, bound: &HashMap<String, bool>| {
                e.walk(&mut |x| {
                    let name = match &x.kind {
                        ExprKind::Deref(inner) => match &inner.kind {
                            ExprKind::Var(v) => Some(v),
                            _ => None,
                        },
                        ExprKind::Index { array, .. } => Some(array),
                        _ => None,
                    };
                    if let Some(name) = name {
                        if bound.get(name) == Some(&false) {
                            out.push(ErrorRecord::new(
                                "PTR",
                                x.loc,
                                format!("pointer `{name}` is dereferenced before it is bound to an array or address"),
                                stmt_head(s),
                            ));
                        }
                    }
                });
            };
            match s {
                Stmt::Decl(d) => {
                    if let Some(init) = &d.init {
                        check(init, &mut out, &bound);
                    }
                    if d.pointer {
                        bound.insert(d.name.clone(), d.init.is_some());
                    }
                }
                Stmt::Assign(a) => {
                    if let Some(v) = &a.value {
                        check(v, &mut out, &bound);
                    }
                    match &a.target.kind {
                        ExprKind::Var(v) if bound.contains_key(v) && a.op == AssignOp::Set => {
                            bound.insert(v.clone(), true);
                        }
                        _ => check(&a.target, &mut out, &bound),
                    }
                }
                _ => {
                    for e in own_exprs(s) {
                        check(e, &mut out, &bound);
                    }
                }
            }
        });
    }
    out
}

fn udt(ast: &Ast, _: &DesignMetadata) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    let flag = |d: &VarDecl, snippet: String, out: &mut Vec<ErrorRecord>| {
        if !d.ty.scalar.is_allowlisted() {
            out.push(ErrorRecord::new(
                "UDT",
                d.loc,
                format!("type `{}` of `{}` is outside the synthesizable type subset", d.ty.scalar.spelling(), d.name),
                snippet,
            ));
        }
    };
    for g in ast.globals() {
        flag(g, format!("{};", emit_decl(g)), &mut out);
    }
    for f in ast.functions() {
        if !f.ret.scalar.is_allowlisted() {
            out.push(ErrorRecord::new(
                "UDT",
                f.loc,
                format!("return type `{}` of `{}` is outside the synthesizable type subset", f.ret.scalar.spelling(), f.name),
                format!("{} {}(...)", f.ret, f.name),
            ));
        }
        for p in &f.params {
            flag(p, emit_decl(p), &mut out);
        }
        each_stmt(&f.body, &mut Vec::new(), &mut |s, _| {
            if let Stmt::Decl(d) = s {
                flag(d, stmt_head(s), &mut out);
            }
            all_subexprs(s, &mut |e| {
                let ty = match &e.kind {
                    ExprKind::New { ty, .. } | ExprKind::SizeOf(ty) => ty,
                    _ => return,
                };
                if !ty.scalar.is_allowlisted() {
                    out.push(ErrorRecord::new(
                        "UDT",
                        e.loc,
                        format!("type `{}` is outside the synthesizable type subset", ty.scalar.spelling()),
                        stmt_head(s),
                    ));
                }
            });
        });
    }
    out
}

/// Rank of every name declared in `f` (0 for scalars and pointers).
fn ranks<'a>(ast: &'a Ast, f: &'a Function) -> HashMap<&'a str, usize> {
    let mut m: HashMap<&str, usize> = HashMap::new();
    for g in ast.globals() {
        m.insert(&g.name, g.rank());
    }
    for p in &f.params {
        m.insert(&p.name, p.rank());
    }
    f.body.walk(&mut |s| {
        if let Stmt::Decl(d) = s {
            m.insert(&d.name, d.rank());
        }
    });
    m
}

/// Directives of a function and its loops, paired with their site.
fn function_pragmas(f: &Function) -> Vec<(PragmaSite, &Pragma)> {
    let mut out: Vec<(PragmaSite, &Pragma)> = f.pragmas.iter().map(|p| (PragmaSite::Function(f.name.clone()), p)).collect();
    f.body.walk(&mut |s| {
        if let Stmt::For(l) = s {
            out.extend(l.pragmas.iter().map(|p| (PragmaSite::Loop(l.id), p)));
        }
    });
    out
}

fn aid(ast: &Ast, _: &DesignMetadata) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    for f in ast.functions() {
        let ranks = ranks(ast, f);
        for (_, p) in function_pragmas(f) {
            let PragmaKind::ArrayPartition { variable, dim, .. } = &p.kind else { continue };
            let problem = match ranks.get(variable.as_str()) {
                None => Some(format!("partition target `{variable}` is not declared")),
                Some(0) => Some(format!("partition target `{variable}` is not an array")),
                Some(&r) if *dim < 1 || *dim as usize > r => {
                    Some(format!("dim={dim} is invalid for `{variable}`, which has {r} dimension(s)"))
                }
                _ => None,
            };
            if let Some(msg) = problem {
                out.push(ErrorRecord::new("AID", p.loc, msg, emit_pragma(p)));
            }
        }
    }
    out
}

/// Arrays read and written anywhere inside a block.
fn rw_sets(b: &Block) -> (BTreeSet<String>, BTreeSet<String>) {
    let (mut reads, mut writes) = (BTreeSet::new(), BTreeSet::new());
    let note = |e: &Expr, reads: &mut BTreeSet<String>| {
        e.walk(&mut |x| {
            if let ExprKind::Index { array, .. } = &x.kind {
                reads.insert(array.clone());
            }
        });
    };
    b.walk(&mut |s| match s {
        Stmt::Assign(a) => {
            if let Some(v) = &a.value {
                note(v, &mut reads);
            }
            if let ExprKind::Index { array, indices } = &a.target.kind {
                writes.insert(array.clone());
                if a.op != AssignOp::Set {
                    reads.insert(array.clone());
                }
                for i in indices {
                    note(i, &mut reads);
                }
            }
        }
        other => {
            for e in own_exprs(other) {
                note(e, &mut reads);
            }
        }
    });
    (reads, writes)
}

/// Whether sibling loops in `body` form a producer-consumer chain that also
/// has a backward or repeated write.
fn conflicting_siblings(body: &Block) -> Option<String> {
    let loops: Vec<&ForLoop> = body
        .stmts
        .iter()
        .filter_map(|s| match s {
            Stmt::For(l) => Some(l),
            _ => None,
        })
        .collect();
    let sets: Vec<_> = loops.iter().map(|l| rw_sets(&l.body)).collect();
    let mut produced = None;
    let mut back = None;
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            if produced.is_none() {
                produced = sets[a].1.intersection(&sets[b].0).next().cloned();
            }
            if back.is_none() {
                back = sets[b].1.iter().find(|x| sets[a].0.contains(*x) || sets[a].1.contains(*x)).cloned();
            }
        }
    }
    match (produced, back) {
        (Some(p), Some(b)) => {
            Some(format!("sibling loops pass `{p}` from producer to consumer while `{b}` is written again downstream"))
        }
        _ => None,
    }
}

fn dpc(ast: &Ast, _: &DesignMetadata) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    let check = |pragmas: &[Pragma], body: &Block, what: String, out: &mut Vec<ErrorRecord>| {
        let Some(df) = pragmas.iter().find(|p| p.kind == PragmaKind::Dataflow) else { return };
        if pragmas.iter().any(|p| p.kind.tag() == PragmaTag::Pipeline) {
            out.push(ErrorRecord::new(
                "DPC",
                df.loc,
                format!("DATAFLOW and PIPELINE are both applied to {what}"),
                emit_pragma(df),
            ));
        } else if let Some(reason) = conflicting_siblings(body) {
            out.push(ErrorRecord::new("DPC", df.loc, format!("DATAFLOW on {what} cannot be honored: {reason}"), emit_pragma(df)));
        }
    };
    for f in ast.functions() {
        check(&f.pragmas, &f.body, format!("function `{}`", f.name), &mut out);
        f.body.walk(&mut |s| {
            if let Stmt::For(l) = s {
                check(&l.pragmas, &l.body, format!("loop {}", l.id), &mut out);
            }
        });
    }
    out
}

fn pipelined_descendant(b: &Block) -> Option<&ForLoop> {
    let mut found = None;
    b.walk(&mut |s| {
        if let Stmt::For(l) = s {
            if found.is_none() && l.has_pragma(PragmaTag::Pipeline) {
                found = Some(l);
            }
        }
    });
    found
}

fn mlp(ast: &Ast, _: &DesignMetadata) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    for l in ast.loops() {
        let Some(pipe) = l.pragmas.iter().find(|p| p.kind.tag() == PragmaTag::Pipeline) else { continue };
        if let Some(inner) = pipelined_descendant(&l.body) {
            out.push(ErrorRecord::new(
                "MLP",
                pipe.loc,
                format!("loop {} is pipelined and its nested loop {} is pipelined as well", l.id, inner.id),
                emit_pragma(pipe),
            ));
        }
    }
    out
}

fn puc(ast: &Ast, meta: &DesignMetadata) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    for l in ast.loops() {
        if !l.has_pragma(PragmaTag::Pipeline) {
            continue;
        }
        let trip = meta.loop_info(l.id).and_then(|i| i.trip_count);
        for p in &l.pragmas {
            let PragmaKind::Unroll { factor } = p.kind else { continue };
            let full = match factor {
                None => true,
                Some(f) => trip == Some(u64::from(f)),
            };
            if full {
                out.push(ErrorRecord::new(
                    "PUC",
                    p.loc,
                    format!("loop {} is both pipelined and fully unrolled", l.id),
                    emit_pragma(p),
                ));
            }
        }
    }
    out
}

fn calls<'a>(f: &'a Function, mut each: impl FnMut(&'a Stmt, &'a Expr, &'a str)) {
    each_stmt(&f.body, &mut Vec::new(), &mut |s, _| {
        all_subexprs(s, &mut |e| {
            if let ExprKind::Call { name, .. } = &e.kind {
                each(s, e, name);
            }
        });
    });
}

fn udm(ast: &Ast, _: &DesignMetadata) -> Vec<ErrorRecord> {
    let defined: BTreeSet<&str> = ast.functions().map(|f| f.name.as_str()).collect();
    let mut out = Vec::new();
    for f in ast.functions() {
        calls(f, |s, e, name| {
            if !defined.contains(name) && !INTRINSICS.contains(&name) && !ALLOCATORS.contains(&name) {
                out.push(ErrorRecord::new(
                    "UDM",
                    e.loc,
                    format!("call to `{name}`, which is neither defined in the design nor a supported intrinsic"),
                    stmt_head(s),
                ));
            }
        });
    }
    out
}

fn rec(ast: &Ast, _: &DesignMetadata) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    for f in ast.functions() {
        calls(f, |s, e, name| {
            if name == f.name {
                out.push(ErrorRecord::new(
                    "REC",
                    e.loc,
                    format!("function `{name}` invokes itself recursively; hardware has no runtime stack"),
                    stmt_head(s),
                ));
            }
        });
    }
    out
}
