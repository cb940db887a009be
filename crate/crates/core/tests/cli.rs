// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const DESIGNS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/src/harness/designs");

const RECURSIVE: &str = "int sum(int n) {
    if (n <= 0) {
        return 0;
    }
    return n + sum(n - 1);
}
";

fn hlsforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlsforge")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn design(name: &str) -> String {
    format!("{DESIGNS}/{name}")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn kernel_file(dir: &Path, name: &str) -> PathBuf {
    let o = hlsforge(&["kernel", name]);
    assert_eq!(code(&o), 0);
    write(dir, &format!("{name}.c"), &stdout(&o))
}

#[test]
fn parse_reports_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let atax = kernel_file(dir.path(), "atax");
    let o = hlsforge(&["--format", "json", "parse", atax.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["metadata"]["loops"].as_array().unwrap().len(), 4);
    assert_eq!(v["metadata"]["arrays"].as_array().unwrap().len(), 4);
    let both = hlsforge(&["parse", atax.to_str().unwrap()]);
    assert!(stdout(&both).contains("loops: 4  arrays: 4"));
    assert!(stdout(&both).contains("\"metadata\""));
}

#[test]
fn verify_exit_codes_follow_the_records() {
    let clean = hlsforge(&["--format", "json", "verify", &design("vadd_daa.ref.c")]);
    assert_eq!(code(&clean), 0);
    let buggy = hlsforge(&["--format", "json", "verify", &design("vadd_daa.c")]);
    assert_eq!(code(&buggy), 1);
    assert!(stdout(&buggy).contains("\"DAA\""));
    let fin = hlsforge(&["--format", "table", "verify", &design("rowsum_fin.c"), "--reference", &design("rowsum_fin.ref.c")]);
    assert_eq!(code(&fin), 1);
    assert!(stdout(&fin).contains("FIN"));
}

#[test]
fn csim_reports_a_witness() {
    let o = hlsforge(&["--format", "json", "csim", &design("rowsum_fin.c"), "--reference", &design("rowsum_fin.ref.c")]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["passed"], false);
    assert!(v["witness"].is_object());
    let same = hlsforge(&[
        "--format",
        "table",
        "csim",
        &design("fir_puc.ref.c"),
        "--reference",
        &design("fir_puc.ref.c"),
        "--runs",
        "4",
    ]);
    assert_eq!(code(&same), 0);
    assert!(stdout(&same).contains("csim: pass over 4 runs"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&hlsforge(&["verify", "/nonexistent/design.c"])), 2);
    assert_eq!(code(&hlsforge(&["frobnicate"])), 2);
    assert_eq!(code(&hlsforge(&["--device", "nope", "verify", &design("fir_puc.c")])), 2);
    assert_eq!(code(&hlsforge(&["tune", &design("fir_puc.ref.c"), "--caps", "dsp=2"])), 2);
    assert_eq!(code(&hlsforge(&["kernel", "lu"])), 2);
    assert_eq!(code(&hlsforge(&["--backend", "http", "fix", &design("fir_puc.c")])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "sede = 1\n");
    assert_eq!(code(&hlsforge(&["--config", cfg.to_str().unwrap(), "bugrag", "list"])), 2);
}

#[test]
fn fix_repairs_and_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let out = dir.path().join("fixed.c");
    let o = hlsforge(&[
        "--format",
        "json",
        "fix",
        &design("vadd_daa.c"),
        "--reference",
        &design("vadd_daa.ref.c"),
        "--trace-out",
        trace.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["outcome"], "fixed");
    let t: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert!(t["iterations"].as_array().unwrap().len() <= 5);
    assert_eq!(code(&hlsforge(&["verify", out.to_str().unwrap()])), 0);
}

#[test]
fn unrepairable_designs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let rec = write(dir.path(), "rec.c", RECURSIVE);
    let o = hlsforge(&["--format", "json", "fix", rec.to_str().unwrap(), "--budget", "2"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["iterations"], 2);
}

#[test]
fn tune_respects_the_caps() {
    let dir = tempfile::tempdir().unwrap();
    let gemm = kernel_file(dir.path(), "gemm");
    let trace = dir.path().join("tune.json");
    let o = hlsforge(&["--format", "json", "tune", gemm.to_str().unwrap(), "--trace-out", trace.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["accepted"]["latency_cycles"].as_u64().unwrap() < v["baseline"]["latency_cycles"].as_u64().unwrap());
    assert!(trace.exists());
}

#[test]
fn inject_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let atax = kernel_file(dir.path(), "atax");
    let bug = dir.path().join("bug.c");
    let o = hlsforge(&[
        "--seed",
        "3",
        "--format",
        "json",
        "inject",
        atax.to_str().unwrap(),
        "--mnemonic",
        "OOB",
        "--out",
        bug.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["note"]["mnemonic"], "OOB");
    assert_eq!(code(&hlsforge(&["verify", bug.to_str().unwrap()])), 1);
    assert_eq!(code(&hlsforge(&["inject", atax.to_str().unwrap(), "--mnemonic", "ZZZ"])), 2);
}

#[test]
fn datasets_build_check_and_reproduce() {
    let dir = tempfile::tempdir().unwrap();
    let designs = dir.path().join("designs");
    std::fs::create_dir(&designs).unwrap();
    kernel_file(&designs, "atax");
    kernel_file(&designs, "gesummv");
    let build = |out: &Path| {
        hlsforge(&[
            "--format",
            "json",
            "dataset",
            "build",
            "--designs",
            designs.to_str().unwrap(),
            "--mnemonics",
            "OOB,PUC,UDT",
            "--per-pair",
            "1",
            "--out",
            out.to_str().unwrap(),
        ])
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&build(&a)), 0);
    assert_eq!(code(&build(&b)), 0);
    for f in ["samples.jsonl", "preferences.jsonl", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let check = hlsforge(&["--format", "json", "dataset", "check", a.to_str().unwrap(), "--designs", designs.to_str().unwrap()]);
    assert_eq!(code(&check), 0);
    assert!(json(&check)["checked"].as_u64().unwrap() > 0);
}

#[test]
fn bugrag_grows_and_persists() {
    let dir = tempfile::tempdir().unwrap();
    let list = hlsforge(&["--format", "table", "bugrag", "list"]);
    assert_eq!(code(&list), 0);
    assert!(stdout(&list).starts_with("version 1"));
    assert!(stdout(&list).contains("PUC"));

    let rec = write(dir.path(), "rec.c", RECURSIVE);
    let repo = dir.path().join("bugrag.json");
    let o = hlsforge(&["--bugrag", repo.to_str().unwrap(), "--format", "table", "bugrag", "expand", rec.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("REC"));
    let after = hlsforge(&["--bugrag", repo.to_str().unwrap(), "--format", "table", "bugrag", "list"]);
    assert!(stdout(&after).starts_with("version 2"));
    assert!(stdout(&after).contains("REC"));
}
