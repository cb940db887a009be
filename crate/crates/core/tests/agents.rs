// SPDX-License-Identifier: Apache-2.0

use hlsforge::agents::*;
use hlsforge::diagnostics::{records_json, verify};
use hlsforge::fixer::{Edit, Suggestion};
use hlsforge::frontend::{emit_ast, parse_str, PragmaKind};
use proptest::prelude::*;
use std::sync::atomic::{AtomicU32, Ordering};

const FIR_PUC: &str = include_str!("../src/harness/designs/fir_puc.c");

fn analyzer_ctx(code: &str) -> Context {
    let ast = parse_str(code).unwrap();
    let report = verify(&ast);
    Context::new().with("code", code).with("errors", &records_json(&report.records)).with("slice", "")
}

#[test]
fn analyzer_removes_full_unroll_and_keeps_pipeline() {
    let repo = hlsforge::bugrag::Repository::seeded();
    let slice = serde_json::to_string(repo.lookup("PUC").unwrap()).unwrap();
    let ctx = analyzer_ctx(FIR_PUC).with("slice", &slice);
    let resp = complete(AgentRole::Analyzer, &ctx, &DeterministicBackend::new()).unwrap();
    let s: Suggestion = serde_json::from_value(resp.parsed).unwrap();
    assert!(!s.edits.is_empty());
    assert!(s.edits.iter().all(|e| matches!(e, Edit::RemovePragma { pragma: PragmaKind::Unroll { factor: None }, .. })));
}

#[test]
fn analyzer_without_a_slice_proposes_no_edits() {
    let resp = complete(AgentRole::Analyzer, &analyzer_ctx(FIR_PUC), &DeterministicBackend::new()).unwrap();
    let s: Suggestion = serde_json::from_value(resp.parsed).unwrap();
    assert!(s.edits.is_empty());
    assert!(s.diagnosis.contains("no knowledge slice"));
}

#[test]
fn prompt_embeds_records_verbatim() {
    let ctx = analyzer_ctx(FIR_PUC);
    let prompt = render_prompt(AgentRole::Analyzer, &ctx).unwrap();
    assert!(prompt.contains(ctx.get("errors").unwrap()));
    assert!(prompt.contains(ctx.get("code").unwrap()));
}

#[test]
fn missing_hole_is_reported() {
    let ctx = Context::new().with("code", FIR_PUC).with("slice", "");
    match render_prompt(AgentRole::Analyzer, &ctx) {
        Err(AgentError::MissingHole { hole, .. }) => assert_eq!(hole, "errors"),
        other => panic!("expected a missing hole, got {other:?}"),
    }
}

#[test]
fn inserter_prompt_embeds_the_slice_example() {
    let repo = hlsforge::bugrag::Repository::seeded();
    let slice = repo.lookup("DAA").unwrap();
    let ctx = Context::new().with("code", FIR_PUC).with("slice", &serde_json::to_string(slice).unwrap()).with("seed", "3");
    let prompt = render_prompt(AgentRole::Inserter, &ctx).unwrap();
    let embedded = serde_json::to_string(&slice.example_buggy).unwrap();
    assert!(prompt.contains(embedded.trim_matches('"')));
}

#[test]
fn every_role_answers_within_schema() {
    let code = FIR_PUC;
    let ast = parse_str(code).unwrap();
    let errors = records_json(&verify(&ast).records);
    let repo = hlsforge::bugrag::Repository::seeded();
    let slice = serde_json::to_string(repo.lookup("PUC").unwrap()).unwrap();
    let ctx = Context::new()
        .with("code", code)
        .with("errors", &errors)
        .with("slice", &slice)
        .with("caps", "dsp=0.6,ff=0.2,lut=0.2")
        .with("device", "zcu106")
        .with("suggestion", "{}")
        .with("candidates", "[]")
        .with("edits", "remove the unroll")
        .with("seed", "1")
        .with("known", "");
    for role in AgentRole::ALL {
        let resp = complete(role, &ctx, &DeterministicBackend::new()).unwrap_or_else(|e| panic!("{role}: {e}"));
        assert_eq!(resp.retries_used, 0, "{role}");
        validate(role, &resp.parsed).unwrap();
    }
}

#[test]
fn transformer_normalizes_code() {
    let ctx = Context::new().with("code", "void f(int a[4]){for(int i=0;i<4;i++){a[i]=0;}}");
    let resp = complete(AgentRole::Transformer, &ctx, &DeterministicBackend::new()).unwrap();
    let out = resp.parsed["code"].as_str().unwrap();
    assert_eq!(out, emit_ast(&parse_str(out).unwrap()));
}

/// Replies with garbage a fixed number of times, then delegates.
struct Flaky {
    bad: u32,
    seen: AtomicU32,
}

impl Backend for Flaky {
    fn label(&self) -> String {
        "flaky".into()
    }

    fn send(&self, role: AgentRole, ctx: &Context, prompt: &str) -> Result<String, AgentError> {
        if self.seen.fetch_add(1, Ordering::SeqCst) < self.bad {
            return Ok("not json at all".into());
        }
        DeterministicBackend::new().send(role, ctx, prompt)
    }
}

#[test]
fn malformed_replies_are_retried() {
    let b = Flaky { bad: 2, seen: AtomicU32::new(0) };
    let resp = complete(AgentRole::Analyzer, &analyzer_ctx(FIR_PUC), &b).unwrap();
    assert_eq!(resp.retries_used, 2);
}

#[test]
fn retries_are_bounded() {
    let b = Flaky { bad: 3, seen: AtomicU32::new(0) };
    match complete(AgentRole::Analyzer, &analyzer_ctx(FIR_PUC), &b) {
        Err(AgentError::SchemaViolation { retries, .. }) => assert_eq!(retries, MAX_RETRIES),
        other => panic!("expected a schema violation, got {other:?}"),
    }
    assert_eq!(b.seen.load(Ordering::SeqCst), MAX_RETRIES + 1);
}

#[test]
fn unreachable_endpoint_is_a_transport_failure() {
    let cfg = BackendConfig {
        kind: BackendKind::Http,
        endpoint: Some("http://127.0.0.1:9/v1/chat/completions".into()),
        model: "m".into(),
        timeout_secs: 2,
        credential_env: Some("HLSFORGE_TEST_UNSET_KEY".into()),
        ..BackendConfig::default()
    };
    let backend = cfg.build().unwrap();
    let err = complete(AgentRole::Transformer, &Context::new().with("code", FIR_PUC), backend.as_ref()).unwrap_err();
    assert!(matches!(err, AgentError::TransportFailure(_)), "{err:?}");
}

#[test]
fn http_config_is_checked() {
    let cfg = BackendConfig { kind: BackendKind::Http, ..BackendConfig::default() };
    assert!(matches!(cfg.build(), Err(AgentError::Config(_))));
    let cfg = BackendConfig { max_retries: MAX_RETRIES + 1, ..BackendConfig::default() };
    assert!(cfg.check().is_err());
}

#[test]
fn fenced_replies_parse() {
    let v = parse_reply("Sure:\n```json\n{\"code\": \"x\", \"reasoning\": \"y\"}\n```").unwrap();
    validate(AgentRole::Transformer, &v).unwrap();
    assert!(validate(AgentRole::Transformer, &serde_json::json!({"code": 1, "reasoning": "y"})).is_err());
}

#[test]
fn role_names_round_trip() {
    for r in AgentRole::ALL {
        assert_eq!(AgentRole::parse(r.as_str()), Some(r));
    }
}

proptest! {
    #[test]
    fn deterministic_replies_are_pure(variant in 0u32..4) {
        let ctx = analyzer_ctx(FIR_PUC);
        let b = DeterministicBackend::variant(variant);
        let a = b.send(AgentRole::Analyzer, &ctx, "").unwrap();
        let c = b.send(AgentRole::Analyzer, &ctx, "").unwrap();
        prop_assert_eq!(a, c);
    }
}
