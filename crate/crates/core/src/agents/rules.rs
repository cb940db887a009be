// SPDX-License-Identifier: Apache-2.0

//! Replies of the offline backend. Each role is answered by the same
//! analyses the pipeline uses, so the deterministic backend is a faithful
//! stand-in for a model that follows the prompt.

use super::{AgentRole, Context};
use crate::bugrag::{Cot, ErrorSlice};
use crate::diagnostics::{mnemonic_info, Category, ErrorRecord, UNKNOWN_MNEMONIC};
use crate::fixer::{self, canned, Suggestion};
use crate::frontend::*;
use crate::qor::{DeviceProfile, OpCostTable, ResourceCaps};
use serde_json::{json, Value};
use std::collections::BTreeSet;

pub(super) fn respond(role: AgentRole, ctx: &Context, variant: u32) -> Value {
    match role {
        AgentRole::Transformer => transformer(ctx),
        AgentRole::Optimizer => optimizer(ctx),
        AgentRole::Analyzer | AgentRole::EvaluatorGroup => analyzer(ctx, variant),
        AgentRole::Fixer => apply(ctx),
        AgentRole::Scorer => scorer(ctx),
        AgentRole::CotGenerator => cot(ctx),
        AgentRole::Inserter => inserter(ctx, variant),
        AgentRole::BugAnalyzer => bug_analyzer(ctx),
    }
}

fn code(ctx: &Context) -> Option<Ast> {
    parse_str(ctx.get("code")?).ok()
}

fn records(ctx: &Context) -> Vec<ErrorRecord> {
    ctx.get("errors").and_then(|e| serde_json::from_str(e).ok()).unwrap_or_default()
}

fn slice(ctx: &Context) -> Option<ErrorSlice> {
    ctx.get("slice").filter(|s| !s.is_empty()).and_then(|s| serde_json::from_str(s).ok())
}

fn reference(ctx: &Context) -> Option<Ast> {
    ctx.get("reference").and_then(|r| parse_str(r).ok())
}

fn transformer(ctx: &Context) -> Value {
    match code(ctx) {
        Some(ast) => json!({"code": emit_ast(&ast), "reasoning": "normalized to the supported HLS-C subset"}),
        None => json!({"code": ctx.get("code").unwrap_or_default(), "reasoning": "input does not parse; returned unchanged"}),
    }
}

fn optimizer(ctx: &Context) -> Value {
    let caps = ctx.get("caps").and_then(|c| ResourceCaps::parse(c).ok()).unwrap_or(ResourceCaps::FULL);
    let device = ctx.get("device").and_then(DeviceProfile::by_name).unwrap_or_default();
    let Some(ast) = code(ctx) else {
        return json!({"directives": [], "reasoning": "input does not parse"});
    };
    match crate::tuner::policy_plan(&ast, &caps, &device, &OpCostTable::default()) {
        Ok(plan) => json!({
            "directives": plan.directives,
            "reasoning": "innermost-first unrolling by the largest trip divisor that fits the caps, aligned cyclic partitions, pipeline on the innermost loop not fully unrolled",
        }),
        Err(e) => json!({"directives": [], "reasoning": e.to_string()}),
    }
}

fn analyzer(ctx: &Context, variant: u32) -> Value {
    let recs = records(ctx);
    let s = match code(ctx) {
        Some(ast) => canned::suggest(&ast, &recs, slice(ctx).as_ref(), variant, reference(ctx).as_ref()),
        None => Suggestion::empty("code does not parse"),
    };
    serde_json::to_value(s).expect("suggestion serializes")
}

fn apply(ctx: &Context) -> Value {
    let parsed: Option<Suggestion> = ctx.get("suggestion").and_then(|s| serde_json::from_str(s).ok());
    match (code(ctx), parsed) {
        (Some(ast), Some(s)) => match fixer::apply_suggestion(&ast, &s) {
            Ok(a) => json!({"code": emit_ast(&a.ast), "reasoning": a.log.join("; ")}),
            Err(e) => json!({"code": emit_ast(&ast), "reasoning": format!("edits not applied: {e}")}),
        },
        _ => json!({"code": ctx.get("code").unwrap_or_default(), "reasoning": "nothing to apply"}),
    }
}

fn scorer(ctx: &Context) -> Value {
    let recs = records(ctx);
    let sl = slice(ctx);
    let refr = reference(ctx);
    let cands: Vec<Value> = ctx.get("candidates").and_then(|c| serde_json::from_str(c).ok()).unwrap_or_default();
    let scores: Vec<Value> = match code(ctx) {
        Some(ast) => cands
            .iter()
            .map(|c| {
                let score = serde_json::from_value::<Suggestion>(c.clone())
                    .map(|s| fixer::score_suggestion(&ast, &recs, sl.as_ref(), &s, refr.as_ref()))
                    .unwrap_or_else(|_| fixer::Score::invalid());
                serde_json::to_value(score).expect("score serializes")
            })
            .collect(),
        None => cands.iter().map(|_| serde_json::to_value(fixer::Score::invalid()).unwrap()).collect(),
    };
    json!({"scores": scores, "reasoning": "weighted schema validity, slice consistency, predicted record reduction and edit minimality"})
}

fn cot(ctx: &Context) -> Value {
    let recs = records(ctx);
    let edits = ctx.get("edits").unwrap_or_default().to_string();
    let sl = slice(ctx);
    let record = sl.as_ref().and_then(|s| recs.iter().find(|r| r.mnemonic.eq_ignore_ascii_case(&s.mnemonic))).or(recs.first());
    let (loc, diag) = match (&sl, record) {
        (Some(s), Some(r)) => s.cot.render(r),
        (None, Some(r)) => (format!("Line {}: `{}`.", r.line, r.snippet), r.message.clone()),
        _ => ("No error reported.".into(), String::new()),
    };
    json!({"localization": loc, "diagnosis": diag, "suggestion": edits})
}

fn inserter(ctx: &Context, variant: u32) -> Value {
    let seed = ctx.get("seed").and_then(|s| s.parse::<u64>().ok()).unwrap_or(u64::from(variant));
    match (code(ctx), slice(ctx)) {
        (Some(ast), Some(s)) => match crate::voda::inject(&ast, &s, seed) {
            Ok((bug, note)) => json!({
                "code": emit_ast(&bug),
                "note": note,
                "reasoning": format!("inserted {} at {}", s.mnemonic, note.site),
            }),
            Err(e) => json!({"code": emit_ast(&ast), "note": {}, "reasoning": e.to_string()}),
        },
        _ => json!({"code": ctx.get("code").unwrap_or_default(), "note": {}, "reasoning": "missing code or slice"}),
    }
}

const STOP: [&str; 12] = ["a", "an", "the", "of", "to", "in", "on", "is", "and", "or", "has", "no"];

/// Three-letter code from the initials of the message's content words,
/// made distinct from `known`.
fn fresh_mnemonic(words: &[String], known: &BTreeSet<String>) -> String {
    let letters: Vec<char> = words.iter().filter_map(|w| w.chars().next()).map(|c| c.to_ascii_uppercase()).collect();
    let mut pool: Vec<char> = letters.into_iter().filter(char::is_ascii_alphabetic).collect();
    pool.extend('A'..='Z');
    for a in 0..pool.len() {
        for b in a + 1..pool.len() {
            for c in b + 1..pool.len() {
                let m: String = [pool[a], pool[b], pool[c]].iter().collect();
                if !known.contains(&m) && m != UNKNOWN_MNEMONIC {
                    return m;
                }
            }
        }
    }
    "XXX".into()
}

fn bug_analyzer(ctx: &Context) -> Value {
    let recs = records(ctx);
    let known: BTreeSet<String> = ctx.get("known").unwrap_or_default().split(',').map(|s| s.trim().to_string()).collect();
    let Some(first) = recs.first() else {
        return json!({"error": "no records"});
    };
    let info = mnemonic_info(&first.mnemonic).filter(|i| i.mnemonic != UNKNOWN_MNEMONIC);
    let words: Vec<String> = first
        .message
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| w.len() > 1 && !STOP.contains(&w.to_ascii_lowercase().as_str()))
        .map(str::to_string)
        .collect();
    let mnemonic = match info {
        Some(i) if !known.contains(i.mnemonic) => i.mnemonic.to_string(),
        _ => fresh_mnemonic(&words, &known),
    };
    let error_type = info
        .map_or_else(|| words.iter().take(3).map(|w| w.to_string()).collect::<Vec<_>>().join(" "), |i| i.error_type.to_string());
    let category = info.map_or(Category::SyntaxFunctional, |i| i.category);
    let plain = first.message.replace('`', "");
    let description = format!("{error_type}: {plain}");
    let code_text = ctx.get("code").unwrap_or_default().to_string();
    let fixed = code(ctx).map(|ast| emit_ast(&without_lines(&ast, &recs))).unwrap_or_default();
    let slice = ErrorSlice {
        category,
        error_type,
        mnemonic,
        description,
        cot: Cot {
            localization_template: "Find `{snippet}` at line {line}, where `{identifier}` is involved.".into(),
            diagnosis_template: "The construct is not synthesizable: {message}. Rewrite it without `{identifier}` in that form."
                .into(),
        },
        example_buggy: code_text,
        example_fixed: fixed,
    };
    serde_json::to_value(slice).expect("slice serializes")
}

/// Removes the statements holding records of the first record's mnemonic.
fn without_lines(ast: &Ast, recs: &[ErrorRecord]) -> Ast {
    let target = recs.first().map(|r| r.mnemonic.clone()).unwrap_or_default();
    let lines: BTreeSet<u32> = recs.iter().filter(|r| r.mnemonic == target).map(|r| r.line).collect();
    let mut out = ast.clone();
    for f in out.functions_mut() {
        drop_lines(&mut f.body, &lines);
    }
    out
}

fn drop_lines(b: &mut Block, lines: &BTreeSet<u32>) {
    b.stmts.retain(|s| matches!(s, Stmt::For(_) | Stmt::If(_) | Stmt::Block(_)) || !lines.contains(&s.loc().line));
    for s in &mut b.stmts {
        for c in s.child_blocks_mut() {
            drop_lines(c, lines);
        }
    }
}
