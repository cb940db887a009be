// SPDX-License-Identifier: Apache-2.0

use hlsforge::diagnostics::*;
use hlsforge::frontend::*;
use hlsforge::harness::corpus::{buggy_designs, kernel, kernels};
use proptest::prelude::*;

fn ast(src: &str) -> Ast {
    parse_str(src).unwrap()
}

fn ints(d: &Datum) -> Vec<i64> {
    match d {
        Datum::Array(v) => v.iter().map(|n| n.as_f64() as i64).collect(),
        Datum::Scalar(n) => vec![n.as_f64() as i64],
    }
}

#[test]
fn dynamic_allocation_is_daa() {
    let r = verify(&ast("void f(int n, int out[4]) { int *p = new int[n]; out[0] = 0; }"));
    assert!(r.has("DAA"));
    assert_eq!(r.status, Status::Failed);
    let rec = r.records.iter().find(|x| x.mnemonic == "DAA").unwrap();
    assert_eq!(rec.category, Category::HlscIncompatible);
    assert_eq!(rec.line, 1);
}

#[test]
fn pipeline_with_full_unroll_is_puc() {
    let src = "void f(int a[8]) {\n for (int i = 0; i < 8; i++) {\n#pragma HLS PIPELINE II=1\n#pragma HLS UNROLL\n a[i] = i; } }";
    assert!(verify(&ast(src)).has("PUC"));
}

#[test]
fn partition_dim_beyond_rank_is_aid() {
    let src = "void f(int a[4][4]) {\n#pragma HLS ARRAY_PARTITION variable=a cyclic factor=2 dim=3\n for (int i = 0; i < 4; i++) { a[i][0] = 0; } }";
    let r = verify(&ast(src));
    assert!(r.has("AID"));
    assert_eq!(r.count("AID"), 1);
}

#[test]
fn unmodified_kernels_are_clean() {
    for unit in kernels(32) {
        let r = verify(&parse(&unit).unwrap());
        assert!(r.is_clean(), "{}: {:?}", unit.name, r.records);
    }
}

#[test]
fn every_buggy_design_reports_its_mnemonic_and_reference_is_clean() {
    for case in buggy_designs() {
        let buggy = parse(&case.buggy).unwrap();
        let reference = parse(&case.reference).unwrap();
        let r = verify_against(&buggy, &reference, DEFAULT_DIFF_RUNS, 7);
        assert!(r.has(&case.mnemonic), "{}: {:?}", case.id, r.records);
        let clean = verify_against(&reference, &reference, DEFAULT_DIFF_RUNS, 7);
        assert!(clean.is_clean(), "{}: {:?}", case.id, clean.records);
    }
}

#[test]
fn reports_are_sorted_and_deterministic() {
    for case in buggy_designs() {
        let a = parse(&case.buggy).unwrap();
        let r1 = verify(&a).to_json();
        let r2 = verify(&parse(&case.buggy).unwrap()).to_json();
        assert_eq!(r1, r2);
        let r = verify(&a);
        assert!(r.records.windows(2).all(|w| (w[0].line, &w[0].mnemonic) <= (w[1].line, &w[1].mnemonic)));
    }
}

#[test]
fn record_json_schema() {
    let r = verify(&ast("void f(int n) { int *p = new int[n]; }"));
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["status"], "failed");
    let rec = &v["records"][0];
    for key in ["mnemonic", "category", "line", "col", "message", "snippet", "severity"] {
        assert!(rec.get(key).is_some(), "{key}");
    }
    assert_eq!(rec["severity"], "synthesis_blocking");
}

#[test]
fn csim_copy_loop() {
    let a = ast("void f(int a[4]) { for (int i = 0; i < 4; i++) a[i] = i; }");
    let mut inputs = Inputs::new();
    inputs.insert("a".into(), Datum::Array(vec![Num::Int(9); 4]));
    let out = csim(&a, &inputs).unwrap();
    assert_eq!(ints(&out["a"]), vec![0, 1, 2, 3]);
}

#[test]
fn csim_gemm_identity() {
    let g = parse(&kernel("gemm", 2).unwrap()).unwrap();
    let mut inputs = Inputs::new();
    let ident = vec![Num::Int(1), Num::Int(0), Num::Int(0), Num::Int(1)];
    let other = vec![Num::Int(3), Num::Int(-5), Num::Int(7), Num::Int(2)];
    inputs.insert("alpha".into(), Datum::Scalar(Num::Int(1)));
    inputs.insert("beta".into(), Datum::Scalar(Num::Int(0)));
    inputs.insert("C".into(), Datum::Array(vec![Num::Int(11); 4]));
    inputs.insert("A".into(), Datum::Array(ident));
    inputs.insert("B".into(), Datum::Array(other.clone()));
    let out = csim(&g, &inputs).unwrap();
    assert_eq!(ints(&out["C"]), ints(&Datum::Array(other)));
}

#[test]
fn csim_traps_on_overflowing_index() {
    let a = ast("void f(int a[4], int b[4]) { for (int i = 0; i < 4; i++) {\n b[i] = a[i + 1]; } }");
    let mut inputs = Inputs::new();
    inputs.insert("a".into(), Datum::Array(vec![Num::Int(1); 4]));
    inputs.insert("b".into(), Datum::Array(vec![Num::Int(0); 4]));
    match csim(&a, &inputs) {
        Err(CsimError::Trap(t)) => {
            assert!(matches!(t.kind, TrapKind::OutOfBounds { index: 4, extent: 4, .. }));
            assert_eq!(t.loc.line, 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn csim_traps_on_division_by_zero_and_uninitialized_read() {
    let a = ast("int f(int x) { return 10 / x; }");
    let mut inputs = Inputs::new();
    inputs.insert("x".into(), Datum::Scalar(Num::Int(0)));
    assert!(matches!(csim(&a, &inputs), Err(CsimError::Trap(RuntimeTrap { kind: TrapKind::DivisionByZero, .. }))));
    let b = ast("int f(int x) { int y; return y + x; }");
    assert!(matches!(csim(&b, &inputs), Err(CsimError::Trap(RuntimeTrap { kind: TrapKind::UninitializedRead { .. }, .. }))));
}

#[test]
fn integer_arithmetic_wraps_at_declared_width() {
    let a = ast("int f(int x) { int y = x * 65536; return y * 65536; }");
    let mut inputs = Inputs::new();
    inputs.insert("x".into(), Datum::Scalar(Num::Int(3)));
    assert_eq!(csim(&a, &inputs).unwrap()["return"], Datum::Scalar(Num::Int(0)));
    let c = ast("char f(char x) { char y = x + 100; return y; }");
    inputs.insert("x".into(), Datum::Scalar(Num::Int(100)));
    assert_eq!(csim(&c, &inputs).unwrap()["return"], Datum::Scalar(Num::Int(-56)));
}

#[test]
fn differential_reflexive_and_detects_fin() {
    let atax = parse(&kernel("atax", 8).unwrap()).unwrap();
    for seed in 0..4 {
        assert!(differential_check(&atax, &atax, 8, seed).unwrap().passed);
    }
    let text = kernel("atax", 8).unwrap().text.replacen("A[i][j] * x[j]", "A[i][i] * x[j]", 1);
    let mutant = parse_str(&text).unwrap();
    assert_ne!(mutant, atax);
    let out = differential_check(&mutant, &atax, 8, 1).unwrap();
    assert!(!out.passed);
    assert!(out.witness.unwrap().mismatch.contains('['));
}

#[test]
fn reassociated_float_sums_pass_under_tolerance() {
    let a = ast("float f(float x[3]) { return (x[0] + x[1]) + x[2]; }");
    let b = ast("float f(float x[3]) { return x[0] + (x[1] + x[2]); }");
    assert!(differential_check(&a, &b, 32, 5).unwrap().passed);
}

#[test]
fn signature_mismatch_is_an_error() {
    let a = ast("void f(int a[4]) { a[0] = 1; }");
    let b = ast("void f(int a[8]) { a[0] = 1; }");
    assert!(differential_check(&a, &b, 4, 0).is_err());
}

#[test]
fn external_log_parsing() {
    let recs = parse_external_log("ERROR: [DAA] dynamic allocation (top.c:12)\n", LogDialect::Generic);
    assert_eq!(recs.len(), 1);
    assert_eq!((recs[0].mnemonic.as_str(), recs[0].line), ("DAA", 12));
    assert!(parse_external_log("", LogDialect::Generic).is_empty());
    let junk = parse_external_log("something odd happened", LogDialect::Generic);
    assert_eq!(junk.len(), 1);
    assert!(junk[0].is_unknown());
    assert_eq!(junk[0].snippet, "something odd happened");
}

proptest! {
    #[test]
    fn verification_is_deterministic(name in prop::sample::select(vec!["atax", "bicg", "gemm", "gesummv", "mvt"]), size in 2u64..40) {
        let a = parse(&kernel(name, size).unwrap()).unwrap();
        prop_assert_eq!(verify(&a).to_json(), verify(&a.clone()).to_json());
        prop_assert!(verify(&a).is_clean());
    }

    #[test]
    fn int_addition_matches_wrapping_i32(x in any::<i32>(), y in any::<i32>()) {
        let a = parse_str("int f(int x, int y) { return x + y; }").unwrap();
        let mut inputs = Inputs::new();
        inputs.insert("x".into(), Datum::Scalar(Num::Int(x as i64)));
        inputs.insert("y".into(), Datum::Scalar(Num::Int(y as i64)));
        prop_assert_eq!(&csim(&a, &inputs).unwrap()["return"], &Datum::Scalar(Num::Int(x.wrapping_add(y) as i64)));
    }
}
