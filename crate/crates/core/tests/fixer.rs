// SPDX-License-Identifier: Apache-2.0

use hlsforge::agents::{AgentError, AgentRole, Backend, Context, DeterministicBackend};
use hlsforge::bugrag::Repository;
use hlsforge::diagnostics::verify;
use hlsforge::fixer::*;
use hlsforge::frontend::{emit_ast, parse_str, Ast, PragmaKind, PragmaSite};
use hlsforge::harness::Thresholds;
use hlsforge::qor::{baseline_estimate, DeviceProfile, OpCostTable};
use proptest::prelude::*;

const VADD_DAA: &str = include_str!("../src/harness/designs/vadd_daa.c");
const STAGE_DPC: &str = include_str!("../src/harness/designs/stage_dpc.c");
const FIR_PUC: &str = include_str!("../src/harness/designs/fir_puc.c");

const DEEP_MLP: &str = "void f(int a[4][4][4]) {
    for (int i = 0; i < 4; i++) {
        #pragma HLS PIPELINE II=1
        for (int j = 0; j < 4; j++) {
            #pragma HLS PIPELINE II=1
            for (int k = 0; k < 4; k++) {
                #pragma HLS PIPELINE II=1
                a[i][j][k] = i + j + k;
            }
        }
    }
}
";

const RECURSIVE: &str = "int sum(int n) {
    if (n <= 0) {
        return 0;
    }
    return n + sum(n - 1);
}
";

fn ast(text: &str) -> Ast {
    parse_str(text).unwrap()
}

fn config(design: &Ast) -> FixConfig {
    let base = baseline_estimate(design, &DeviceProfile::zcu106(), &OpCostTable::default());
    FixConfig::new(Thresholds::from_baseline(base.latency_cycles, &DeviceProfile::zcu106()))
}

fn slice(m: &str) -> hlsforge::bugrag::ErrorSlice {
    Repository::seeded().lookup(m).unwrap().clone()
}

fn pipelined(a: &Ast) -> Vec<bool> {
    a.loops().into_iter().map(|l| l.pragmas.iter().any(|p| matches!(p.kind, PragmaKind::Pipeline { .. }))).collect()
}

#[test]
fn dynamic_allocation_becomes_static_in_one_iteration() {
    let buggy = ast(VADD_DAA);
    let (fixed, trace) = fix(&buggy, &config(&buggy), &Repository::seeded(), &Agents::default()).unwrap();
    assert_eq!(trace.outcome, Outcome::Fixed);
    assert_eq!(trace.iterations.len(), 1);
    assert!(verify(&fixed).is_clean());
    let code = emit_ast(&fixed);
    assert!(code.contains("int buf[64];"), "{code}");
    assert!(!code.contains("new"));
}

#[test]
fn dataflow_conflict_is_resolved_by_removing_dataflow() {
    let buggy = ast(STAGE_DPC);
    let (fixed, trace) = fix(&buggy, &config(&buggy), &Repository::seeded(), &Agents::default()).unwrap();
    assert_eq!(trace.outcome, Outcome::Fixed);
    assert!(verify(&fixed).is_clean());
    assert!(!emit_ast(&fixed).contains("DATAFLOW"));
}

#[test]
fn uncatalogued_errors_exhaust_the_budget_with_a_full_trace() {
    let buggy = ast(RECURSIVE);
    assert!(verify(&buggy).has("REC"));
    let (_, trace) = fix(&buggy, &config(&buggy), &Repository::seeded(), &Agents::default()).unwrap();
    assert_eq!(trace.outcome, Outcome::Exhausted);
    assert_eq!(trace.iterations.len(), DEFAULT_BUDGET);
    assert!(trace.iterations.iter().any(|i| i.mode == Mode::Multifaceted));
    let json = trace.to_json();
    let back: RepairTrace = serde_json::from_str(&json).unwrap();
    assert_eq!(back.iterations.len(), DEFAULT_BUDGET);
}

#[test]
fn clean_input_needs_no_iterations() {
    let clean = ast(include_str!("../src/harness/designs/fir_puc.ref.c"));
    let (out, trace) = fix(&clean, &config(&clean), &Repository::seeded(), &Agents::default()).unwrap();
    assert_eq!(trace.outcome, Outcome::Fixed);
    assert!(trace.iterations.is_empty());
    assert_eq!(emit_ast(&out), emit_ast(&clean));
}

#[test]
fn puc_diagnosis_keeps_the_pipeline() {
    let design = ast(FIR_PUC);
    let records = verify(&design).records;
    let s = diagnose(&records, &design, Some(&slice("PUC")), &DeterministicBackend::new(), None).unwrap();
    let fixed = apply_suggestion(&design, &s).unwrap().ast;
    assert!(verify(&fixed).is_clean());
    assert_eq!(pipelined(&fixed), vec![true]);
}

#[test]
fn mlp_diagnosis_keeps_only_the_innermost_pipeline() {
    let design = ast(DEEP_MLP);
    let records = verify(&design).records;
    assert!(records.iter().all(|r| r.mnemonic == "MLP"));
    let s = diagnose(&records, &design, Some(&slice("MLP")), &DeterministicBackend::new(), None).unwrap();
    let fixed = apply_suggestion(&design, &s).unwrap().ast;
    assert!(!verify(&fixed).has("MLP"));
    assert_eq!(pipelined(&fixed), vec![false, false, true]);
}

#[test]
fn diagnosing_nothing_is_a_precondition_error() {
    let design = ast(FIR_PUC);
    let err = diagnose(&[], &design, None, &DeterministicBackend::new(), None).unwrap_err();
    assert!(matches!(err, FixError::Precondition(_)));
}

/// Returns the same reply to every prompt.
struct Fixed(serde_json::Value);

impl Backend for Fixed {
    fn label(&self) -> String {
        "fixed".into()
    }

    fn send(&self, _: AgentRole, _: &Context, _: &str) -> Result<String, AgentError> {
        Ok(self.0.to_string())
    }
}

fn suggestion_reply(edits: Vec<Edit>) -> serde_json::Value {
    serde_json::to_value(Suggestion { edits, ..Suggestion::empty("candidate") }).unwrap()
}

#[test]
fn the_reducing_candidate_wins() {
    let design = ast(FIR_PUC);
    let records = verify(&design).records;
    let site = PragmaSite::Loop(design.loops()[0].id);
    let remove_unroll = Edit::RemovePragma { site: site.clone(), pragma: PragmaKind::Unroll { factor: None } };
    let noop =
        Edit::ReplaceNode { node: NodeKind::Stmt, line: 2, col: 9, old: "int acc = 0;".into(), new: "int acc = 0;".into() };
    let evaluators: Vec<Box<dyn Backend>> = vec![
        Box::new(Fixed(suggestion_reply(vec![noop.clone()]))),
        Box::new(Fixed(suggestion_reply(vec![remove_unroll]))),
        Box::new(Fixed(suggestion_reply(vec![]))),
    ];
    let (best, suggestions, scores) =
        multifaceted_evaluate(&design, &records, Some(&slice("PUC")), &evaluators, &DeterministicBackend::new(), None).unwrap();
    assert_eq!(best, 1, "{scores:?}");
    assert_eq!(suggestions.len(), 3);
    assert!(scores[1].record_reduction > scores[0].record_reduction);
}

#[test]
fn a_single_valid_evaluator_is_chosen() {
    let design = ast(FIR_PUC);
    let records = verify(&design).records;
    let evaluators: Vec<Box<dyn Backend>> = vec![Box::new(DeterministicBackend::new())];
    let (best, s, _) =
        multifaceted_evaluate(&design, &records, Some(&slice("PUC")), &evaluators, &DeterministicBackend::new(), None).unwrap();
    assert_eq!(best, 0);
    assert!(!s[0].edits.is_empty());
}

#[test]
fn invalid_candidates_are_rejected() {
    let design = ast(FIR_PUC);
    let records = verify(&design).records;
    let bogus = serde_json::json!({"localization": [], "diagnosis": "x", "edits": [{"op": "teleport"}], "reasoning": ""});
    let missing = Edit::RewriteDecl { function: "nope".into(), name: "x".into(), line: None, decl: "int x;".into() };
    let evaluators: Vec<Box<dyn Backend>> = vec![
        Box::new(Fixed(bogus)),
        Box::new(Fixed(serde_json::json!({"nothing": 1}))),
        Box::new(Fixed(suggestion_reply(vec![missing]))),
    ];
    let err = multifaceted_evaluate(&design, &records, Some(&slice("PUC")), &evaluators, &DeterministicBackend::new(), None)
        .unwrap_err();
    assert!(matches!(err, FixError::AllCandidatesInvalid), "{err:?}");
}

#[test]
fn removing_a_pragma_removes_it() {
    let design = ast(FIR_PUC);
    let site = PragmaSite::Loop(design.loops()[0].id);
    let s = Suggestion {
        edits: vec![Edit::RemovePragma { site, pragma: PragmaKind::Pipeline { ii: Some(1) } }],
        ..Suggestion::empty("x")
    };
    let out = apply_suggestion(&design, &s).unwrap().ast;
    assert_eq!(pipelined(&out), vec![false]);
    assert!(emit_ast(&out).contains("UNROLL"));
}

#[test]
fn overlapping_edits_conflict() {
    let design = ast(FIR_PUC);
    let e = |new: &str| Edit::ReplaceNode { node: NodeKind::Stmt, line: 2, col: 9, old: "int acc = 0;".into(), new: new.into() };
    let s = Suggestion { edits: vec![e("int acc = 1;"), e("int acc = 2;")], ..Suggestion::empty("x") };
    let r = apply_suggestion(&design, &s);
    assert!(matches!(r, Err(EditError::EditConflict(_))), "{r:?}");
}

#[test]
fn declarations_can_be_rewritten_statically() {
    let design = ast(VADD_DAA);
    let s = Suggestion {
        edits: vec![Edit::RewriteDecl { function: "vadd".into(), name: "buf".into(), line: None, decl: "int buf[64]".into() }],
        ..Suggestion::empty("x")
    };
    let out = apply_suggestion(&design, &s).unwrap().ast;
    let text = emit_ast(&out);
    assert_eq!(emit_ast(&parse_str(&text).unwrap()), text);
    assert!(!verify(&out).has("DAA"));
}

#[test]
fn stale_edits_are_refused() {
    let design = ast(FIR_PUC);
    let s = Suggestion {
        edits: vec![Edit::ReplaceNode {
            node: NodeKind::Stmt,
            line: 2,
            col: 9,
            old: "int acc = 7;".into(),
            new: "int acc = 0;".into(),
        }],
        ..Suggestion::empty("x")
    };
    assert!(matches!(apply_suggestion(&design, &s), Err(EditError::MissingTarget(_))));
}

#[test]
fn every_shipped_design_is_repaired() {
    for case in hlsforge::harness::corpus::buggy_designs() {
        let buggy = hlsforge::frontend::parse(&case.buggy).unwrap();
        let reference = hlsforge::frontend::parse(&case.reference).unwrap();
        let cfg = config(&reference).with_reference(reference.clone());
        let (fixed, trace) = fix(&buggy, &cfg, &Repository::seeded(), &Agents::default()).unwrap();
        assert_eq!(trace.outcome, Outcome::Fixed, "{}", case.id);
        assert!(trace.iterations.len() <= DEFAULT_BUDGET);
        assert!(check(&fixed, Some(&reference)).is_clean(), "{}", case.id);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scores_are_weighted_means(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, d in 0.0f64..=1.0) {
        let s = Score::new(a, b, c, d);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s.value));
        prop_assert!(Score::new(a, b, 1.0, d).value >= Score::new(a, b, c, d).value);
    }

    #[test]
    fn traces_never_exceed_the_budget(budget in 1usize..6) {
        let buggy = ast(RECURSIVE);
        let cfg = config(&buggy).with_budget(budget);
        let (_, trace) = fix(&buggy, &cfg, &Repository::seeded(), &Agents::deterministic(2)).unwrap();
        prop_assert!(trace.iterations.len() <= budget);
    }
}
