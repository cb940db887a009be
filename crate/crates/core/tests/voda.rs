// SPDX-License-Identifier: Apache-2.0

use hlsforge::agents::DeterministicBackend;
use hlsforge::bugrag::Repository;
use hlsforge::diagnostics::{differential_check, verify, SEED_MNEMONICS};
use hlsforge::frontend::{emit_ast, extract_metadata, parse_str, Ast, PragmaKind};
use hlsforge::harness::pipeline::{kernel_dataset, kernel_designs};
use hlsforge::voda::*;
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::sync::OnceLock;

fn kernel(name: &str) -> Ast {
    kernel_designs(32).into_iter().find(|(n, _)| n == name).unwrap().1
}

fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| kernel_dataset(32, 2, 42, &Repository::seeded(), &DeterministicBackend::new()).unwrap())
}

#[test]
fn applicability_is_structural() {
    assert!(assess_applicability(&kernel("atax"), "AID").applicable);
    let flat = parse_str("int f(int a, int b) {\n    return a + b;\n}\n").unwrap();
    let r = assess_applicability(&flat, "MLP");
    assert!(!r.applicable);
    assert_eq!(r.reason, "no nested loops");
    let unknown =
        parse_str("void f(int a[16], int n) {\n    for (int i = 0; i < n; i++) {\n        a[i] = 0;\n    }\n}\n").unwrap();
    assert!(!assess_applicability(&unknown, "PUC").applicable);
}

#[test]
fn injection_is_deterministic_and_labelled() {
    let repo = Repository::seeded();
    let atax = kernel("atax");
    for m in SEED_MNEMONICS {
        let slice = repo.lookup(m).unwrap();
        let Ok((a, note)) = inject(&atax, slice, 11) else { continue };
        let (b, _) = inject(&atax, slice, 11).unwrap();
        assert_eq!(emit_ast(&a), emit_ast(&b), "{m}");
        assert_eq!(note.mnemonic, m);
        assert_eq!(note.original_code, emit_ast(&atax));
        assert!(label(&a, &atax, m, 0).has(m), "{m} not reported after injection");
    }
}

#[test]
fn puc_adds_a_full_unroll_beside_the_pipeline() {
    let repo = Repository::seeded();
    let (bug, _) = inject(&kernel("gesummv"), repo.lookup("PUC").unwrap(), 3).unwrap();
    let conflicted = bug.loops().into_iter().any(|l| {
        let kinds: Vec<&PragmaKind> = l.pragmas.iter().map(|p| &p.kind).collect();
        kinds.iter().any(|k| matches!(k, PragmaKind::Pipeline { .. }))
            && kinds.iter().any(|k| matches!(k, PragmaKind::Unroll { factor: None }))
    });
    assert!(conflicted);
}

#[test]
fn daa_rewrites_a_local_array() {
    let repo = Repository::seeded();
    let atax = kernel("atax");
    let (bug, _) = inject(&atax, repo.lookup("DAA").unwrap(), 0).unwrap();
    assert!(emit_ast(&bug).contains("new int["));
    assert!(verify(&bug).has("DAA"));
    let err = inject(&kernel("gemm"), repo.lookup("DAA").unwrap(), 0).unwrap_err();
    assert!(matches!(err, VodaError::NoEligibleSite(_)));
}

#[test]
fn samples_are_gated() {
    let repo = Repository::seeded();
    let atax = kernel("atax");
    let s = build_sample("atax-OOB", "atax", &atax, "OOB", 7, &repo, &DeterministicBackend::new()).unwrap();
    assert!(s.input.errors.iter().any(|r| r.mnemonic == "OOB"));
    assert!(s.input.errors.iter().all(|r| r.mnemonic == "OOB"));
    assert!(!s.output.localization.is_empty() && !s.output.diagnosis.is_empty());

    let rej = build_sample("gemm-DAA", "gemm", &kernel("gemm"), "DAA", 7, &repo, &DeterministicBackend::new()).unwrap_err();
    assert!(rej.reason.starts_with(REASON_NOT_APPLICABLE), "{}", rej.reason);
}

#[test]
fn admitted_samples_satisfy_every_invariant() {
    let c = corpus();
    assert!(!c.samples.is_empty());
    let originals: BTreeMap<String, Ast> = kernel_designs(32).into_iter().collect();
    for s in &c.samples {
        let buggy = parse_str(&s.input.code).unwrap();
        let fixed = parse_str(&s.fixed).unwrap();
        let original = &originals[&s.design];
        assert!(label(&buggy, original, &s.mnemonic, 0).has(&s.mnemonic), "{}", s.id);
        assert!(verify(&fixed).is_clean(), "{}", s.id);
        assert!(differential_check(&fixed, original, 8, 3).unwrap().passed, "{}", s.id);
    }
}

#[test]
fn corpus_covers_most_mnemonics() {
    let m = &corpus().manifest;
    let covered = m.per_mnemonic.values().filter(|&&n| n > 0).count();
    assert!(covered >= 8, "{covered} mnemonics covered");
    assert!(corpus().samples.len() <= 100);
    let total: u64 = m.per_mnemonic.values().sum();
    assert_eq!(total as usize, m.samples.len());
    assert_eq!(m.per_design.values().sum::<u64>() as usize, m.samples.len());
    assert_eq!(m.rejected_count as usize, m.rejections.len());
    assert_eq!(m.samples.len() + m.rejections.len(), 5 * 10 * 2);
}

#[test]
fn written_corpus_revalidates_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus();
    c.write(dir.path()).unwrap();
    let originals: BTreeMap<String, Ast> = kernel_designs(32).into_iter().collect();
    let r = revalidate(dir.path(), &originals).unwrap();
    assert!(r.is_ok(), "{:?}", r.violations);
    assert_eq!(r.checked, c.samples.len());

    let again = kernel_dataset(32, 2, 42, &Repository::seeded(), &DeterministicBackend::new()).unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    again.write(dir2.path()).unwrap();
    for f in [SAMPLES_FILE, PREFERENCES_FILE, MANIFEST_FILE] {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), std::fs::read(dir2.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn tampered_corpus_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus();
    c.write(dir.path()).unwrap();
    let path = dir.path().join(SAMPLES_FILE);
    let text = std::fs::read_to_string(&path).unwrap();
    let first = &c.samples[0];
    let mut bad = first.clone();
    bad.input.code = bad.fixed.clone();
    let line = serde_json::to_string(first).unwrap();
    std::fs::write(&path, text.replacen(&line, &serde_json::to_string(&bad).unwrap(), 1)).unwrap();
    let r = revalidate(dir.path(), &BTreeMap::new()).unwrap();
    assert!(!r.is_ok());
}

#[test]
fn empty_inputs_give_empty_outputs() {
    let designs = kernel_designs(32);
    let c = build_corpus(&designs, &[], 2, 42, &Repository::seeded(), &DeterministicBackend::new()).unwrap();
    assert!(c.samples.is_empty());
    assert!(c.manifest.samples.is_empty());
    assert!(make_preference_pairs(&[]).is_empty());
    let err = build_corpus(&designs, &["OOB".into()], 0, 42, &Repository::seeded(), &DeterministicBackend::new());
    assert!(matches!(err, Err(VodaError::Precondition(_))));
}

#[test]
fn preference_pairs_share_the_final_edit() {
    let c = corpus();
    let pairs = make_preference_pairs(&c.samples[..1]);
    assert_eq!(pairs.len(), 1);
    let p = &pairs[0];
    assert!(p.chosen.ends_with(&p.rejected));
    assert!(p.chosen.len() > p.rejected.len());
    let line = serde_json::to_string(p).unwrap();
    let back: PreferencePair = serde_json::from_str(&line).unwrap();
    assert_eq!(&back, p);
    assert_eq!(serde_json::to_string(&back).unwrap(), line);
}

#[test]
fn injection_notes_invert_to_the_original() {
    let repo = Repository::seeded();
    let atax = kernel("atax");
    let (_, note) = inject(&atax, repo.lookup("UDT").unwrap(), 5).unwrap();
    assert_eq!(note.invert(), emit_ast(&atax));
    assert_eq!(extract_metadata(&parse_str(&note.invert()).unwrap()).loops.len(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn same_seed_same_bug(seed in any::<u64>(), i in 0usize..10, k in 0usize..5) {
        let repo = Repository::seeded();
        let (name, design) = &kernel_designs(32)[k];
        let slice = repo.lookup(SEED_MNEMONICS[i]).unwrap();
        match (inject(design, slice, seed), inject(design, slice, seed)) {
            (Ok((a, _)), Ok((b, _))) => prop_assert_eq!(emit_ast(&a), emit_ast(&b)),
            (Err(_), Err(_)) => prop_assert!(!assess_applicability(design, SEED_MNEMONICS[i]).applicable, "{}", name),
            _ => prop_assert!(false, "nondeterministic injection"),
        }
    }
}
