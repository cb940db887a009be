// SPDX-License-Identifier: Apache-2.0

use hlsforge::agents::DeterministicBackend;
use hlsforge::diagnostics::{differential_check, verify};
use hlsforge::frontend::{extract_metadata, parse_str, Ast, PartitionType, PragmaKind, PragmaSite};
use hlsforge::harness::pipeline::kernel_designs;
use hlsforge::qor::{estimate, DeviceProfile, OpCostTable, ResourceCaps};
use hlsforge::tuner::*;
use proptest::prelude::*;

const COPY: &str = "void copy(int a[100], int b[100]) {
    for (int i = 0; i < 100; i++) {
        b[i] = a[i];
    }
}
";

const DOT: &str = "int dot(int a[1024], int b[1024]) {
    int s = 0;
    for (int i = 0; i < 1024; i++) {
        s += a[i] * b[i];
    }
    return s;
}
";

const PREFIX: &str = "void prefix(int a[16]) {
    for (int i = 1; i < 16; i++) {
        a[i] = a[i - 1] + 1;
    }
}
";

const UNKNOWN: &str = "void fill(int a[64], int n) {
    for (int i = 0; i < n; i++) {
        a[i] = 0;
    }
}
";

fn ast(text: &str) -> Ast {
    parse_str(text).unwrap()
}

fn default_caps() -> ResourceCaps {
    ResourceCaps::parse("dsp=0.6,ff=0.2,lut=0.2").unwrap()
}

fn policy(text: &str) -> PragmaPlan {
    policy_plan(&ast(text), &default_caps(), &DeviceProfile::zcu106(), &OpCostTable::default()).unwrap()
}

fn kinds(p: &PragmaPlan) -> Vec<&PragmaKind> {
    p.directives.iter().map(|d| &d.pragma).collect()
}

fn class_of(text: &str) -> Parallelism {
    let classes = analyze_dependencies(&extract_metadata(&ast(text)));
    assert_eq!(classes.len(), 1);
    *classes.values().next().unwrap()
}

#[test]
fn loops_are_classified_by_their_dependences() {
    assert_eq!(class_of(COPY), Parallelism::Parallel);
    assert_eq!(class_of(DOT), Parallelism::Reduction);
    assert_eq!(class_of(PREFIX), Parallelism::Sequential);
}

/// Plan for COPY with `factor` on its only loop.
fn copy_plan(factor: u32) -> PragmaPlan {
    let design = ast(COPY);
    let meta = extract_metadata(&design);
    let classes = analyze_dependencies(&meta);
    let factors = classes.keys().map(|id| (*id, factor)).collect();
    build_plan(&design, &meta, &classes, &factors, &OpCostTable::default())
}

#[test]
fn ample_caps_take_the_largest_divisor() {
    let p = policy(COPY);
    assert_eq!(p.factors().into_values().collect::<Vec<_>>(), vec![100]);
    assert!(!kinds(&p).iter().any(|k| matches!(k, PragmaKind::Pipeline { .. })));
}

#[test]
fn a_parallel_loop_is_unrolled_partitioned_and_pipelined() {
    let design = ast(COPY);
    let device = DeviceProfile::zcu106();
    let lut = |f: u32| estimate(&copy_plan(f).apply(&design).unwrap(), &device, &OpCostTable::default()).resources.lut as f64;
    let cap = (lut(4) + lut(5)) / 2.0 / device.lut_total as f64;
    let caps = ResourceCaps { lut: cap, ..default_caps() };
    let p = policy_plan(&design, &caps, &device, &OpCostTable::default()).unwrap();
    let k = kinds(&p);
    assert!(k.contains(&&PragmaKind::Unroll { factor: Some(4) }), "{k:?}");
    assert!(k.iter().any(|x| matches!(x, PragmaKind::Pipeline { .. })));
    for array in ["a", "b"] {
        assert!(
            k.iter().any(|x| matches!(x,
            PragmaKind::ArrayPartition { variable, ptype: PartitionType::Cyclic, factor: Some(4), dim: 1 } if variable == array))
        );
    }
    assert!(legal(&p, &ast(COPY)));
}

#[test]
fn unknown_trip_counts_are_only_pipelined() {
    let p = policy(UNKNOWN);
    assert_eq!(kinds(&p), vec![&PragmaKind::Pipeline { ii: None }]);
}

#[test]
fn sequential_loops_are_only_pipelined() {
    let p = policy(PREFIX);
    assert!(kinds(&p).iter().all(|k| matches!(k, PragmaKind::Pipeline { .. })), "{:?}", kinds(&p));
    assert_eq!(p.directives.len(), 1);
}

#[test]
fn reductions_pipeline_at_the_accumulator_latency() {
    let p = policy(DOT);
    let ii = p.directives.iter().find_map(|d| match d.pragma {
        PragmaKind::Pipeline { ii } => Some(ii),
        _ => None,
    });
    assert_eq!(ii, Some(Some(OpCostTable::default().int_add.latency.max(1))));
}

#[test]
fn gesummv_is_tuned_within_the_caps() {
    let (_, design) = kernel_designs(32).into_iter().find(|(n, _)| n == "gesummv").unwrap();
    let spec = OptimizationSpec::new(default_caps());
    let device = DeviceProfile::zcu106();
    let (out, trace) = tune(&design, &spec, &device, &OpCostTable::default(), &DeterministicBackend::new(), None).unwrap();
    assert!(trace.iterations.len() <= DEFAULT_BUDGET);
    let q = estimate(&out, &device, &OpCostTable::default());
    assert!(q.within_caps(&spec.caps, &device));
    assert!(q.latency_cycles < trace.baseline.latency_cycles);
    assert!(trace.accepted.is_some());
}

#[test]
fn a_met_target_is_accepted_at_once() {
    let design = ast(COPY);
    let device = DeviceProfile::zcu106();
    let base = estimate(&design, &device, &OpCostTable::default());
    let spec = OptimizationSpec::new(default_caps()).with_target(base.latency_cycles);
    let (_, trace) = tune(&design, &spec, &device, &OpCostTable::default(), &DeterministicBackend::new(), None).unwrap();
    assert_eq!(trace.iterations.len(), 1);
    assert_eq!(trace.iterations[0].decision, Decision::Accept);
    assert_eq!(trace.outcome, TuneOutcome::MetTarget);
}

#[test]
fn degenerate_caps_are_infeasible() {
    let (_, design) = kernel_designs(32).into_iter().find(|(n, _)| n == "gemm").unwrap();
    let caps = ResourceCaps::parse("dsp=0.0001,ff=0.0001,lut=0.0001").unwrap();
    let r = tune(
        &design,
        &OptimizationSpec::new(caps),
        &DeviceProfile::zcu106(),
        &OpCostTable::default(),
        &DeterministicBackend::new(),
        None,
    );
    assert!(matches!(r, Err(TuneError::InfeasibleUnderCaps)), "{r:?}");
}

#[test]
fn refinement_halves_and_doubles() {
    assert_eq!(refine_factors(&[8, 4], &[32, 32], true, false).unwrap(), vec![4, 4]);
    assert_eq!(refine_factors(&[2, 4], &[32, 32], false, true).unwrap(), vec![4, 4]);
    assert!(matches!(refine_factors(&[1, 1], &[32, 32], true, false), Err(TuneError::NoRefinementPossible)));
    assert!(matches!(refine_factors(&[32, 32], &[32, 32], false, true), Err(TuneError::NoRefinementPossible)));
    assert!(refine_factors(&[2, 4], &[32, 32], false, false).is_err());
}

#[test]
fn every_kernel_plan_is_legal_and_preserves_semantics() {
    let device = DeviceProfile::zcu106();
    for (name, design) in kernel_designs(32) {
        let p =
            plan(&design, &OptimizationSpec::new(default_caps()), &device, &OpCostTable::default(), &DeterministicBackend::new())
                .unwrap();
        assert!(legal(&p, &design), "{name}");
        assert!(p.directives.iter().all(|d| !matches!(d.pragma, PragmaKind::Dataflow)), "{name}");
        let attached = p.apply(&design).unwrap();
        assert!(verify(&attached).is_clean(), "{name}");
        assert!(differential_check(&attached, &design, 2, 1).unwrap().passed, "{name}");
    }
}

#[test]
fn unrolls_are_aligned_with_partitions() {
    let meta_checked = |text: &str| {
        let p = policy(text);
        let factors: Vec<u32> = p.factors().into_values().collect();
        for f in factors {
            assert!(p
                .directives
                .iter()
                .any(|d| matches!(d.pragma, PragmaKind::ArrayPartition { factor: Some(g), .. } if g == f)));
        }
        assert!(p.directives.iter().all(|d| match &d.site {
            PragmaSite::Function(_) => matches!(d.pragma, PragmaKind::ArrayPartition { .. }),
            _ => true,
        }));
    };
    meta_checked(COPY);
    meta_checked(DOT);
}

#[test]
fn invalid_specs_are_refused() {
    let design = ast(COPY);
    let bad = OptimizationSpec::new(default_caps()).with_budget(0);
    let r = tune(&design, &bad, &DeviceProfile::zcu106(), &OpCostTable::default(), &DeterministicBackend::new(), None);
    assert!(matches!(r, Err(TuneError::Precondition(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn accepted_designs_respect_the_caps(dsp in 0.001f64..=1.0, ff in 0.001f64..=1.0, lut in 0.001f64..=1.0, k in 0usize..5, budget in 1usize..6) {
        let (_, design) = kernel_designs(16).swap_remove(k);
        let spec = OptimizationSpec::new(ResourceCaps { dsp, ff, lut }).with_budget(budget);
        let device = DeviceProfile::zcu106();
        match tune(&design, &spec, &device, &OpCostTable::default(), &DeterministicBackend::new(), None) {
            Ok((out, trace)) => {
                prop_assert!(trace.iterations.len() <= budget);
                prop_assert!(estimate(&out, &device, &OpCostTable::default()).within_caps(&spec.caps, &device));
                prop_assert!(verify(&out).is_clean());
            }
            Err(e) => prop_assert!(matches!(e, TuneError::InfeasibleUnderCaps), "{e}"),
        }
    }
}
