// SPDX-License-Identifier: Apache-2.0

//! Exit gate: one PASS/FAIL line per criterion.

use hlsforge::agents::{BackendKind, DeterministicBackend};
use hlsforge::bugrag::Repository;
use hlsforge::diagnostics::{differential_check, verify, SEED_MNEMONICS};
use hlsforge::fixer::Agents;
use hlsforge::frontend::{emit, extract_metadata, parse, parse_str};
use hlsforge::harness::corpus::{corpus, kernel};
use hlsforge::harness::pipeline::{eval_pass_rate, kernel_dataset, kernel_designs, single_injection_cases};
use hlsforge::harness::{geomean, pass_rate, CaseResult, Config, Thresholds};
use hlsforge::qor::{estimate, generated_nests, simulate_schedule, DeviceProfile, OpCostTable, ResourceCaps, Resources};
use hlsforge::tuner::{tune, OptimizationSpec, DEFAULT_BUDGET, PRAGMA_MNEMONICS};
use hlsforge::voda::{assess_applicability, inject, label, revalidate, Corpus, MANIFEST_FILE, PREFERENCES_FILE, SAMPLES_FILE};
use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn device() -> DeviceProfile {
    DeviceProfile::zcu106()
}

fn round_trip() -> Verdict {
    let start = Instant::now();
    let sources = corpus();
    let mut failures = Vec::new();
    let all = sources.all_sources();
    for unit in &all {
        let ok = parse(unit).ok().is_some_and(|ast| {
            let text = emit(&ast, &unit.name).text;
            parse_str(&text).is_ok_and(|again| again == ast)
        });
        if !ok {
            failures.push(unit.name.clone());
        }
    }
    let t = start.elapsed();
    ensure(
        failures.is_empty() && t < Duration::from_secs(5),
        format!("{}/{} files in {t:.2?} {failures:?}", all.len() - failures.len(), all.len()),
    )
}

fn detector_matrix() -> Verdict {
    let repo = Repository::seeded();
    let designs = kernel_designs(32);
    let mut attempts = 0;
    let mut missed = Vec::new();
    for m in SEED_MNEMONICS {
        let slice = repo.lookup(m).map_err(|e| e.to_string())?;
        for (name, design) in &designs {
            if !assess_applicability(design, m).applicable {
                continue;
            }
            for seed in 0..2 {
                let (bug, _) = inject(design, slice, seed).map_err(|e| format!("{name}/{m}: {e}"))?;
                attempts += 1;
                if !label(&bug, design, m, seed).has(m) {
                    missed.push(format!("{name}/{m}/{seed}"));
                }
            }
        }
    }
    let false_positives: Vec<String> = designs.iter().filter(|(_, d)| !verify(d).is_clean()).map(|(n, _)| n.clone()).collect();
    ensure(
        missed.is_empty() && false_positives.is_empty() && attempts > 0,
        format!(
            "{}/{attempts} injections detected, {} false positives {missed:?}",
            attempts - missed.len(),
            false_positives.len()
        ),
    )
}

fn voda_gate(first: &Corpus) -> Verdict {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    first.write(a.path()).map_err(|e| e.to_string())?;
    let originals: BTreeMap<_, _> = kernel_designs(32).into_iter().collect();
    let report = revalidate(a.path(), &originals).map_err(|e| e.to_string())?;
    let again = kernel_dataset(32, 2, 42, &Repository::seeded(), &DeterministicBackend::new()).map_err(|e| e.to_string())?;
    again.write(b.path()).map_err(|e| e.to_string())?;
    let identical = [SAMPLES_FILE, PREFERENCES_FILE, MANIFEST_FILE]
        .iter()
        .all(|f| std::fs::read(a.path().join(f)).ok() == std::fs::read(b.path().join(f)).ok());
    ensure(
        report.is_ok() && identical && report.checked == first.samples.len(),
        format!("{} samples, {} violations, rerun identical: {identical}", report.checked, report.violations.len()),
    )
}

fn deterministic_repair(dataset: &Corpus) -> Verdict {
    let cases = single_injection_cases(dataset);
    let run =
        eval_pass_rate(&cases, DEFAULT_BUDGET, &device(), &OpCostTable::default(), &Repository::seeded(), &Agents::default())
            .map_err(|e| e.to_string())?;
    let s = &run.summary;
    let longest = run.runs.iter().map(|r| r.trace.iterations.len()).max().unwrap_or(0);
    let rate_ok = s.successes * 100 >= 95 * s.n;
    ensure(
        rate_ok && longest <= DEFAULT_BUDGET,
        format!("{}/{} = {}%, longest trace {longest}, failed {:?}", s.successes, s.n, s.pass_rate, s.failed),
    )
}

fn pass_rate_arithmetic() -> Verdict {
    let th = Thresholds::new(100, Resources { dsp: 10, ff: 10, lut: 10 }).map_err(|e| e.to_string())?;
    let results = |k: usize, n: usize| -> Vec<CaseResult> {
        (0..n)
            .map(|i| CaseResult {
                id: format!("{i:04}"),
                mnemonic: "OOB".into(),
                latency: if i < k { 100 } else { 101 },
                resources: Resources { dsp: 10, ff: 10, lut: 10 },
                clean: true,
                thresholds: None,
            })
            .collect()
    };
    let eight = pass_rate(&results(8, 10), &th).map_err(|e| e.to_string())?.pass_rate;
    let boundary = pass_rate(&results(1, 1), &th).map_err(|e| e.to_string())?.successes == 1;
    let headline = pass_rate(&results(506, 612), &th).map_err(|e| e.to_string())?.pass_rate;
    ensure(
        eight == "80.0" && boundary && headline == "82.7",
        format!("8/10 = {eight}%, boundary success: {boundary}, 506/612 = {headline}%"),
    )
}

fn cost_oracle() -> Verdict {
    let costs = OpCostTable::default();
    let nests = generated_nests(40, 11);
    let mut worst: f64 = 0.0;
    let mut inexact = 0;
    for n in &nests {
        let a = parse(&n.unit).map_err(|e| e.to_string())?;
        let e = estimate(&a, &device(), &costs).latency_cycles;
        let (s, _) = simulate_schedule(&a, &device(), &costs).map_err(|e| e.to_string())?;
        worst = worst.max((e as f64 - s as f64).abs() / s as f64);
        if n.single_pipelined && e != s {
            inexact += 1;
        }
    }
    let copy = |pragmas: &str, parts: &str| {
        format!("void f(int a[100], int b[100]) {{\n{parts}    for (int i = 0; i < 100; i++) {{\n{pragmas}        b[i] = a[i];\n    }}\n}}\n")
    };
    let parts = "#pragma HLS ARRAY_PARTITION variable=a cyclic factor=4 dim=1\n#pragma HLS ARRAY_PARTITION variable=b cyclic factor=4 dim=1\n";
    let mut worked = Vec::new();
    for (src, want) in [
        (copy("#pragma HLS PIPELINE II=1\n", ""), 103),
        (copy("#pragma HLS PIPELINE II=1\n#pragma HLS UNROLL factor=4\n", parts), 28),
    ] {
        let a = parse_str(&src).map_err(|e| e.to_string())?;
        let e = estimate(&a, &device(), &costs).latency_cycles;
        let (s, _) = simulate_schedule(&a, &device(), &costs).map_err(|e| e.to_string())?;
        worked.push((want, e, s));
    }
    let worked_ok = worked.iter().all(|(w, e, s)| w == e && w == s);
    ensure(
        nests.len() >= 20 && worst <= 0.10 && inexact == 0 && worked_ok,
        format!(
            "{} nests, worst error {:.1}%, {inexact} inexact pipelined, worked (want, est, sim) {worked:?}",
            nests.len(),
            worst * 100.0
        ),
    )
}

fn tuner_gate() -> Verdict {
    let caps = ResourceCaps::parse("dsp=0.6,ff=0.2,lut=0.2")?;
    let spec = OptimizationSpec::new(caps);
    let costs = OpCostTable::default();
    let mut speedups = Vec::new();
    let mut problems = Vec::new();
    for (name, design) in kernel_designs(32) {
        let (out, trace) =
            tune(&design, &spec, &device(), &costs, &DeterministicBackend::new(), None).map_err(|e| format!("{name}: {e}"))?;
        let q = estimate(&out, &device(), &costs);
        let r = verify(&out);
        if !q.within_caps(&spec.caps, &device()) {
            problems.push(format!("{name} over caps"));
        }
        if PRAGMA_MNEMONICS.iter().any(|m| r.has(m)) {
            problems.push(format!("{name} misuses pragmas"));
        }
        if !differential_check(&out, &design, 8, 42).is_ok_and(|c| c.passed) {
            problems.push(format!("{name} changes behavior"));
        }
        if trace.iterations.len() > DEFAULT_BUDGET {
            problems.push(format!("{name} took {} iterations", trace.iterations.len()));
        }
        speedups.push((name, trace.baseline.latency_cycles as f64 / q.latency_cycles.max(1) as f64));
    }
    let g = geomean(&speedups.iter().map(|(_, s)| *s).collect::<Vec<_>>());
    let shown: Vec<String> = speedups.iter().map(|(n, s)| format!("{n} {s:.2}x")).collect();
    ensure(problems.is_empty() && g >= 4.0, format!("geomean {g:.2}x ({}) {problems:?}", shown.join(", ")))
}

fn corpus_fidelity() -> Verdict {
    let expected = [("atax", 4, 4), ("bicg", 3, 5), ("gemm", 4, 3), ("gesummv", 2, 5), ("mvt", 4, 5)];
    let mut got = Vec::new();
    let mut ok = true;
    for (name, loops, arrays) in expected {
        let unit = kernel(name, 32).ok_or(format!("{name} missing"))?;
        let meta = extract_metadata(&parse(&unit).map_err(|e| e.to_string())?);
        ok &= meta.loops.len() == loops && meta.arrays.len() == arrays;
        got.push(format!("{name} {}/{}", meta.loops.len(), meta.arrays.len()));
    }
    ensure(ok, got.join(", "))
}

fn offline(elapsed: Duration) -> Verdict {
    let cfg = Config::default();
    let deterministic =
        cfg.agents.default.kind == BackendKind::Deterministic && cfg.agents.roles.is_empty() && cfg.agents.evaluators.is_empty();
    ensure(
        deterministic && elapsed < Duration::from_secs(300),
        format!("deterministic backends only: {deterministic}, gate wall time {elapsed:.1?}"),
    )
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut record = |n: u32, name: &str, v: Verdict| {
        let (tag, detail) = match &v {
            Ok(d) => ("PASS", d.clone()),
            Err(d) => ("FAIL", d.clone()),
        };
        let line = format!("criterion {n} {tag} {name}: {detail}");
        writeln!(std::io::stderr(), "{line}").ok();
        lines.push((v.is_ok(), line));
    };
    record(1, "round-trip", round_trip());
    record(2, "detector matrix", detector_matrix());
    let dataset = kernel_dataset(32, 2, 42, &Repository::seeded(), &DeterministicBackend::new());
    match &dataset {
        Ok(d) => {
            record(3, "dataset gate", voda_gate(d));
            record(4, "deterministic repair", deterministic_repair(d));
        }
        Err(e) => {
            record(3, "dataset gate", Err(e.to_string()));
            record(4, "deterministic repair", Err(e.to_string()));
        }
    }
    record(5, "pass-rate arithmetic", pass_rate_arithmetic());
    record(6, "cost-model oracle", cost_oracle());
    record(7, "tuner safety and speedup", tuner_gate());
    record(8, "corpus fidelity", corpus_fidelity());
    record(9, "offline", offline(start.elapsed()));
    let failed: Vec<&String> = lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}
