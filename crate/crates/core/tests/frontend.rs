// SPDX-License-Identifier: Apache-2.0

use hlsforge::frontend::*;
use hlsforge::harness::corpus::{corpus, kernel};
use proptest::prelude::*;

fn meta_of(name: &str) -> DesignMetadata {
    let unit = kernel(name, 32).unwrap();
    extract_metadata(&parse(&unit).unwrap())
}

#[test]
fn minimal_kernel_has_one_loop_of_trip_four() {
    let ast = parse_str("void f(int a[4]){for(int i=0;i<4;i++) a[i]=i;}").unwrap();
    assert_eq!(ast.functions().count(), 1);
    let meta = extract_metadata(&ast);
    assert_eq!(meta.loops.len(), 1);
    assert_eq!(meta.loops[0].trip_count, Some(4));
    assert_eq!(meta.loops[0].index_var, "i");
}

#[test]
fn unclosed_paren_reports_its_position() {
    let err = parse_str("void f(){for(i=0;i<4;i++").unwrap_err();
    match err {
        ParseError::Syntax { loc, .. } => assert_eq!(loc.key(), (1, 13)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn kernel_loop_and_array_counts() {
    for (name, loops, arrays, sites) in
        [("atax", 4, 4, 20), ("bicg", 3, 5, 21), ("gemm", 4, 3, 17), ("gesummv", 2, 5, 19), ("mvt", 4, 5, 23)]
    {
        let m = meta_of(name);
        assert_eq!((m.loops.len(), m.arrays.len(), m.pragma_sites), (loops, arrays, sites), "{name}");
    }
}

#[test]
fn accumulation_into_scalar_is_carried() {
    let ast = parse_str("int f(int a[100]){int s = 0; for(int i=0;i<100;i++) s += a[i]; return s;}").unwrap();
    let m = extract_metadata(&ast);
    assert_eq!(m.loops[0].trip_count, Some(100));
    assert!(m.loops[0].carried_dependence);
    assert_eq!(m.loops[0].dependences[0].kind, DepKind::Accumulation(BinaryOp::Add));
}

#[test]
fn independent_copy_nest_has_no_carried_dependence() {
    let ast =
        parse_str("void f(int a[8][8], int b[8][8]){for(int i=0;i<8;i++){for(int j=0;j<8;j++){b[i][j]=a[i][j];}}}").unwrap();
    let m = extract_metadata(&ast);
    assert!(m.loops.iter().all(|l| !l.carried_dependence));
    assert_eq!(m.loops[1].depth, 1);
    assert_eq!(m.loops[1].parent, Some(LoopId(0)));
}

#[test]
fn recurrence_is_a_flow_dependence() {
    let ast = parse_str("void f(int a[16]){for(int i=1;i<16;i++){a[i]=a[i-1]+1;}}").unwrap();
    let m = extract_metadata(&ast);
    assert_eq!(m.loops[0].dependences, vec![CarriedDep { variable: "a".into(), kind: DepKind::Flow, distance: Some(1) }]);
}

#[test]
fn anti_dependence_is_not_carried_flow() {
    let ast = parse_str("void f(int a[16]){for(int i=0;i<15;i++){a[i]=a[i+1];}}").unwrap();
    assert!(!extract_metadata(&ast).loops[0].carried_dependence);
}

#[test]
fn every_corpus_source_round_trips() {
    for unit in corpus().all_sources() {
        let ast = parse(unit).unwrap_or_else(|e| panic!("{}: {e}", unit.name));
        let text = emit(&ast, &unit.name).text;
        let again = parse_str(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", unit.name));
        assert_eq!(ast, again, "{}", unit.name);
        assert_eq!(emit(&again, &unit.name).text, text);
    }
}

#[test]
fn empty_body_emits_braces() {
    let ast = parse_str("void f() {}").unwrap();
    let text = emit_ast(&ast);
    assert_eq!(text, "void f() { }\n");
    assert_eq!(parse_str(&text).unwrap(), ast);
}

#[test]
fn pragmas_are_emitted_in_canonical_order() {
    let src = "void f(int a[8]) {\n    for (int i = 0; i < 8; i++) {\n        #pragma HLS array_partition variable=a cyclic factor=2 dim=1\n        #pragma HLS unroll factor=2\n        #pragma HLS pipeline ii=1\n        a[i] = i;\n    }\n}\n";
    let out = emit_ast(&parse_str(src).unwrap());
    let golden = "void f(int a[8]) {\n    for (int i = 0; i < 8; i++) {\n        #pragma HLS PIPELINE II=1\n        #pragma HLS UNROLL factor=2\n        #pragma HLS ARRAY_PARTITION variable=a cyclic factor=2 dim=1\n        a[i] = i;\n    }\n}\n";
    assert_eq!(out, golden);
}

#[test]
fn attach_places_directive_inside_the_loop() {
    let ast = parse(&kernel("atax", 32).unwrap()).unwrap();
    let with = attach_pragma(&ast, &PragmaSite::Loop(LoopId(0)), Pragma::unroll(Some(4))).unwrap();
    let text = emit_ast(&with);
    let lines: Vec<&str> = text.lines().collect();
    let head = lines.iter().position(|l| l.trim_start().starts_with("for (")).unwrap();
    assert_eq!(lines[head + 1].trim(), "#pragma HLS UNROLL factor=4");
    let back = detach_pragma(&with, &PragmaSite::Loop(LoopId(0)), PragmaTag::Unroll).unwrap();
    assert_eq!(back.removed, 1);
    assert_eq!(back.ast, ast);
    let noop = detach_pragma(&ast, &PragmaSite::Loop(LoopId(0)), PragmaTag::Pipeline).unwrap();
    assert!(noop.is_noop());
    assert_eq!(noop.ast, ast);
    assert!(matches!(attach_pragma(&ast, &PragmaSite::Loop(LoopId(99)), Pragma::pipeline(None)), Err(SiteError::UnknownSite(_))));
}

#[test]
fn directive_before_a_loop_binds_to_that_loop() {
    let ast = parse_str("void f(int a[4]) { int x = 0;\n#pragma HLS PIPELINE II=2\nfor (int i = 0; i < 4; i++) { a[i] = x; } }")
        .unwrap();
    assert_eq!(ast.loops()[0].pipeline_ii(), Some(Some(2)));
}

#[test]
fn out_of_subset_syntax_is_unsupported() {
    for src in ["#include <x.h>\nvoid f(){}", "void f(){ while(1){} }", "struct s { int a; };", "void f(){ int x = (int) 2; }"] {
        assert!(matches!(parse_str(src), Err(ParseError::Unsupported { .. })), "{src}");
    }
}

#[test]
fn unroll_factor_below_two_is_rejected() {
    let r = parse_str("void f(int a[4]){for(int i=0;i<4;i++){\n#pragma HLS UNROLL factor=1\na[i]=0;}}");
    assert!(matches!(r, Err(ParseError::Syntax { .. })));
}

#[test]
fn attaching_pragmas_keeps_metadata_counts() {
    let ast = parse(&kernel("gemm", 32).unwrap()).unwrap();
    let before = extract_metadata(&ast);
    let mut cur = ast.clone();
    for l in ast.loops() {
        cur = attach_pragma(&cur, &PragmaSite::Loop(l.id), Pragma::pipeline(Some(1))).unwrap();
    }
    let after = extract_metadata(&cur);
    assert_eq!(before.loops.len(), after.loops.len());
    assert_eq!(before.arrays.len(), after.arrays.len());
}

fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (-50i64..50).prop_map(|v| v.to_string()),
        prop_oneof![Just("i"), Just("j"), Just("s")].prop_map(str::to_string),
        (0usize..8).prop_map(|k| format!("a[{k}]")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        (inner.clone(), prop_oneof![Just("+"), Just("-"), Just("*"), Just("/"), Just("<"), Just("&&")], inner.clone())
            .prop_map(|(l, op, r)| format!("({l} {op} {r})"))
            .boxed()
    })
}

proptest! {
    #[test]
    fn generated_programs_round_trip(exprs in proptest::collection::vec(arb_expr(), 1..5), trip in 1u64..40) {
        let body: String = exprs.iter().map(|e| format!("s = {e};\n")).collect();
        let src = format!("int f(int a[8]) {{ int s = 0; int j = 1;\nfor (int i = 0; i < {trip}; i++) {{\n{body}}}\nreturn s; }}");
        let ast = parse_str(&src).unwrap();
        let again = parse_str(&emit_ast(&ast)).unwrap();
        prop_assert_eq!(&ast, &again);
        let meta = extract_metadata(&ast);
        for l in &meta.loops {
            if let Some(p) = l.parent {
                prop_assert_eq!(l.depth, meta.loop_info(p).unwrap().depth + 1);
            }
        }
    }
}
