// SPDX-License-Identifier: Apache-2.0

use hlsforge::agents::DeterministicBackend;
use hlsforge::frontend::{extract_metadata, parse, parse_str};
use hlsforge::harness::corpus::{buggy_designs, corpus, kernel, CaseCategory, KERNEL_NAMES};
use hlsforge::harness::pipeline::kernel_designs;
use hlsforge::harness::*;
use hlsforge::qor::{DeviceProfile, OpCostTable, ResourceCaps, Resources};
use hlsforge::tuner::OptimizationSpec;
use proptest::prelude::*;

fn th() -> Thresholds {
    Thresholds::new(100, Resources { dsp: 10, ff: 10, lut: 10 }).unwrap()
}

fn case(id: usize, latency: u64, clean: bool) -> CaseResult {
    CaseResult {
        id: format!("case-{id:04}"),
        mnemonic: if id.is_multiple_of(2) { "OOB".into() } else { "PUC".into() },
        latency,
        resources: Resources { dsp: 1, ff: 1, lut: 1 },
        clean,
        thresholds: None,
    }
}

fn results(successes: usize, n: usize) -> Vec<CaseResult> {
    (0..n).map(|i| case(i, 50, i < successes)).collect()
}

#[test]
fn eight_of_ten_is_eighty_percent() {
    let s = pass_rate(&results(8, 10), &th()).unwrap();
    assert_eq!((s.n, s.successes), (10, 8));
    assert_eq!(s.pass_rate, "80.0");
    assert_eq!(s.failed, vec!["case-0008", "case-0009"]);
    assert_eq!(s.per_mnemonic["OOB"].n + s.per_mnemonic["PUC"].n, 10);
}

#[test]
fn the_latency_threshold_is_inclusive() {
    let t = th();
    assert!(case(0, t.l_t, true).succeeds(&t));
    assert!(!case(0, t.l_t + 1, true).succeeds(&t));
    assert!(!case(0, 1, false).succeeds(&t));
    let over = CaseResult { resources: Resources { dsp: 11, ff: 1, lut: 1 }, ..case(0, 1, true) };
    assert!(!over.succeeds(&t));
    let at = CaseResult { resources: t.r_t, ..case(0, t.l_t, true) };
    assert_eq!(pass_rate(&[at], &t).unwrap().pass_rate, "100.0");
}

#[test]
fn headline_rate_rounds_to_one_decimal() {
    let s = pass_rate(&results(506, 612), &th()).unwrap();
    assert_eq!(s.pass_rate, "82.7");
    assert_eq!(s.ratio(), num_rational::Ratio::new(50600, 612));
}

#[test]
fn empty_results_and_bad_thresholds_are_errors() {
    assert_eq!(pass_rate(&[], &th()).unwrap_err(), EvalError::EmptyResultSet);
    assert!(Thresholds::new(0, Resources { dsp: 1, ff: 1, lut: 1 }).is_err());
    assert!(Thresholds::new(1, Resources { dsp: 0, ff: 1, lut: 1 }).is_err());
}

#[test]
fn baseline_thresholds_scale_latency_exactly() {
    let d = DeviceProfile::zcu106();
    let t = Thresholds::from_baseline(1000, &d);
    assert_eq!(t.l_t, 1200);
    assert_eq!(Thresholds::from_baseline(7, &d).l_t, 8);
    assert_eq!(t.r_t, device_totals(&d));
}

#[test]
fn case_thresholds_override_the_shared_ones() {
    let own = Thresholds::new(10, Resources { dsp: 1, ff: 1, lut: 1 }).unwrap();
    let r = CaseResult { thresholds: Some(own), ..case(0, 50, true) };
    assert!(!r.succeeds(&th()));
    assert!(!r.succeeds(&Thresholds::permissive()));
}

#[test]
fn geometric_mean() {
    assert!((geomean(&[2.0, 8.0]) - 4.0).abs() < 1e-12);
    assert_eq!(geomean(&[]), 0.0);
}

#[test]
fn summaries_are_ordered_by_case_id() {
    let mut r = results(3, 5);
    r.reverse();
    let a = pass_rate(&r, &th()).unwrap();
    let b = pass_rate(&results(3, 5), &th()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert!(a.table().contains("total"));
}

#[test]
fn kernel_counts_match_the_reference_table() {
    let expected = [("atax", 4, 4), ("bicg", 3, 5), ("gemm", 4, 3), ("gesummv", 2, 5), ("mvt", 4, 5)];
    for (name, loops, arrays) in expected {
        let meta = extract_metadata(&parse(&kernel(name, 32).unwrap()).unwrap());
        assert_eq!((meta.loops.len(), meta.arrays.len()), (loops, arrays), "{name}");
    }
}

#[test]
fn the_corpus_is_complete_and_clean() {
    let c = corpus();
    assert_eq!(c.kernels.len(), KERNEL_NAMES.len());
    assert_eq!(c.cases.len(), 10);
    assert_eq!(c.all_sources().len(), 25);
    let mut ids: Vec<&str> = c.cases.iter().map(|t| t.id.as_str()).collect();
    ids.dedup();
    assert_eq!(ids.len(), 10);
    assert!(c.cases.iter().any(|t| t.category == CaseCategory::Manual));
    assert!(c.cases.iter().any(|t| t.category == CaseCategory::VitisStyle));
    for k in &c.kernels {
        assert!(hlsforge::diagnostics::verify(&parse(k).unwrap()).is_clean(), "{}", k.name);
    }
    for t in buggy_designs() {
        let buggy = parse(&t.buggy).unwrap();
        let reference = parse(&t.reference).unwrap();
        assert!(hlsforge::fixer::check(&buggy, Some(&reference)).has(&t.mnemonic), "{}", t.id);
        assert!(hlsforge::fixer::check(&reference, Some(&reference)).is_clean(), "{}", t.id);
    }
    assert!(kernel("lu", 32).is_none());
}

#[test]
fn kernel_size_is_configurable() {
    let small = kernel("gemm", 8).unwrap();
    assert!(small.text.contains("[8][8]"));
    assert!(!small.text.contains("32"));
}

#[test]
fn config_files_are_strict() {
    let c = Config::from_toml("seed = 7\ndevice = \"zcu106\"\n[agents.default]\nkind = \"deterministic\"\n").unwrap();
    assert_eq!(c.seed, 7);
    assert_eq!(c.budget, 5);
    assert!(Config::from_toml("sede = 7\n").is_err());
    assert!(Config::from_toml("[agents.roles.nobody]\nkind = \"deterministic\"\n").is_err());
    assert_eq!(Config::from_toml("").unwrap(), Config::default());
    let agents = Config::default().agents.fixer_agents().unwrap();
    assert_eq!(agents.evaluators.len(), hlsforge::fixer::DEFAULT_GROUP_SIZE as usize);
}

#[test]
fn a_loop_free_kernel_keeps_its_latency() {
    let design = parse_str("int add(int a, int b) {\n    return a + b;\n}\n").unwrap();
    let spec = OptimizationSpec::new(ResourceCaps::parse(&Config::default().caps).unwrap());
    let r = speedup_eval(
        &[("add".into(), design)],
        &spec,
        &DeviceProfile::zcu106(),
        &OpCostTable::default(),
        &DeterministicBackend::new(),
    )
    .unwrap();
    assert_eq!(r.rows[0].speedup, 1.0);
    assert_eq!(r.geomean, 1.0);
}

#[test]
fn every_kernel_speeds_up_under_default_caps() {
    let spec = OptimizationSpec::new(ResourceCaps::parse(&Config::default().caps).unwrap());
    let r =
        speedup_eval(&kernel_designs(32), &spec, &DeviceProfile::zcu106(), &OpCostTable::default(), &DeterministicBackend::new())
            .unwrap();
    assert_eq!(r.rows.len(), 5);
    assert!(r.rows.iter().all(|row| row.speedup > 1.0), "{}", r.table());
    let back: SpeedupReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back.rows.len(), 5);
    assert!(r.table().contains("geomean"));
}

proptest! {
    #[test]
    fn rate_is_exact(n in 1u64..2000, k in 0u64..2000) {
        let k = k % (n + 1);
        let text = percent_text(k, n);
        let shown: f64 = text.parse().unwrap();
        prop_assert!((shown - 100.0 * k as f64 / n as f64).abs() <= 0.05 + 1e-9);
        prop_assert_eq!(text.split('.').nth(1).unwrap().len(), 1);
    }
}
