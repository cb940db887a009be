// SPDX-License-Identifier: Apache-2.0

use hlsforge::frontend::*;
use hlsforge::harness::corpus::{kernel, KERNEL_NAMES};
use hlsforge::qor::*;
use proptest::prelude::*;

fn dev() -> DeviceProfile {
    DeviceProfile::zcu106()
}

fn est(src: &str) -> QoRReport {
    estimate(&parse_str(src).unwrap(), &dev(), &OpCostTable::default())
}

fn sim(src: &str) -> (u64, ScheduleTrace) {
    simulate_schedule(&parse_str(src).unwrap(), &dev(), &OpCostTable::default()).unwrap()
}

fn copy_loop(pragmas: &str, parts: &str) -> String {
    format!(
        "void f(int a[100], int b[100]) {{\n{parts}    for (int i = 0; i < 100; i++) {{\n{pragmas}        b[i] = a[i];\n    }}\n}}\n"
    )
}

#[test]
fn pipelined_copy_loop_is_103_cycles() {
    let src = copy_loop("#pragma HLS PIPELINE II=1\n", "");
    assert_eq!(est(&src).latency_cycles, 103);
    assert_eq!(sim(&src).0, 103);
    assert_eq!(est(&src).loops[0].depth, 4);
}

#[test]
fn unrolled_partitioned_pipeline_is_28_cycles() {
    let parts = "#pragma HLS ARRAY_PARTITION variable=a cyclic factor=4 dim=1\n#pragma HLS ARRAY_PARTITION variable=b cyclic factor=4 dim=1\n";
    let src = copy_loop("#pragma HLS PIPELINE II=1\n#pragma HLS UNROLL factor=4\n", parts);
    assert_eq!(est(&src).latency_cycles, 28);
    assert_eq!(sim(&src).0, 28);
}

#[test]
fn unroll_without_partition_stalls_on_ports() {
    let src = copy_loop("#pragma HLS PIPELINE II=1\n#pragma HLS UNROLL factor=4\n", "");
    let r = est(&src);
    assert_eq!(r.loops[0].ii, Some(2));
    assert_eq!(r.latency_cycles, 52);
    let (lat, trace) = sim(&src);
    assert!((lat as f64 - 52.0).abs() / lat as f64 <= 0.10, "{lat}");
    assert!(trace.max_port_usage() <= 2);
}

#[test]
fn empty_body_costs_one_cycle_per_iteration() {
    let src = "void f() { for (int i = 0; i < 10; i++) { } }";
    assert_eq!(est(src).latency_cycles, 10);
    assert_eq!(sim(src).0, 10);
}

#[test]
fn dependent_chain_and_independent_ops() {
    let chain = "int f(int x) { int s = x; s = s + 1; s = s + 1; s = s + 1; return s; }";
    assert_eq!(est(chain).latency_cycles, 3);
    assert_eq!(sim(chain).0, 3);
    let (_, trace) = sim("int f(int x, int y) { int a = x + 1; int b = y + 1; return a; }");
    assert_eq!(trace.issued_at(0).count(), 2);
}

#[test]
fn tool_report_parsing() {
    let r = parse_tool_report("1702,252,7600,8400", ReportDialect::Csv, &dev()).unwrap();
    assert_eq!(r.latency_cycles, 1702);
    assert!((r.dsp_util * 100.0 - 14.6).abs() < 0.05);
    let g = parse_tool_report("latency,dsp,ff,lut\n470,186,3600,5600\n", ReportDialect::Csv, &dev()).unwrap();
    assert_eq!((g.latency_cycles, g.resources.dsp), (470, 186));
    assert!((g.dsp_util * 100.0 - 10.8).abs() < 0.05);
    assert!(matches!(parse_tool_report("", ReportDialect::Csv, &dev()), Err(QorError::MalformedReport(_))));
}

#[test]
fn kernel_baselines_are_positive_and_sim_agrees() {
    for name in KERNEL_NAMES {
        let a = parse(&kernel(name, 8).unwrap()).unwrap();
        let e = estimate(&a, &dev(), &OpCostTable::default());
        let (s, _) = simulate_schedule(&a, &dev(), &OpCostTable::default()).unwrap();
        assert!(e.latency_cycles > 0);
        let err = (e.latency_cycles as f64 - s as f64).abs() / s as f64;
        assert!(err <= 0.10, "{name}: est {} sim {s}", e.latency_cycles);
    }
}

#[test]
fn dsp_count_matches_unrolled_multiplies() {
    let src = "void f(int a[16], int b[16], int c[16]) {\n for (int i = 0; i < 16; i++) {\n#pragma HLS UNROLL factor=4\n c[i] = a[i] * b[i] * 3; } }";
    let r = est(src);
    // Two multiplies per iteration, four copies.
    assert_eq!(r.resources.dsp, 2 * 4 * OpCostTable::default().int_mul.dsp);
}

proptest! {
    #[test]
    fn pipelining_never_hurts(trip in 1u64..64) {
        let plain = format!("void f(int a[64], int b[64]) {{ for (int i = 0; i < {trip}; i++) {{ b[i] = a[i] * 3 + 1; }} }}");
        let piped = format!("void f(int a[64], int b[64]) {{ for (int i = 0; i < {trip}; i++) {{\n#pragma HLS PIPELINE II=1\n b[i] = a[i] * 3 + 1; }} }}");
        prop_assert!(est(&piped).latency_cycles <= est(&plain).latency_cycles);
    }
}

#[test]
fn estimate_tracks_the_scheduler_on_generated_nests() {
    let nests = generated_nests(40, 11);
    for n in &nests {
        let a = parse(&n.unit).unwrap();
        let e = estimate(&a, &dev(), &OpCostTable::default()).latency_cycles;
        let (s, trace) = simulate_schedule(&a, &dev(), &OpCostTable::default()).unwrap();
        let err = (e as f64 - s as f64).abs() / s as f64;
        println!("{} est {e} sim {s} err {err:.3}", n.unit.name);
        assert!(err <= 0.10, "{}\n{}", n.unit.text, err);
        if n.single_pipelined {
            assert_eq!(e, s, "{}", n.unit.text);
        }
        assert!(trace.max_port_usage() <= 2);
    }
}
