// SPDX-License-Identifier: Apache-2.0

use hlsforge::agents::DeterministicBackend;
use hlsforge::bugrag::*;
use hlsforge::diagnostics::{verify, Category, ErrorRecord, SEED_MNEMONICS};
use hlsforge::frontend::{parse_str, Loc, Origin, SourceUnit};
use proptest::prelude::*;

const RECURSIVE: &str = "int sum(int n) {
    if (n <= 0) {
        return 0;
    }
    return n + sum(n - 1);
}
";

fn unknown(message: &str) -> ErrorRecord {
    ErrorRecord::new("XYZ", Loc::new(1, 1), message, "x")
}

#[test]
fn seeded_repository_has_every_mnemonic() {
    let repo = Repository::seeded();
    assert_eq!(repo.len(), 10);
    assert_eq!(repo.version, 1);
    for m in SEED_MNEMONICS {
        assert_eq!(repo.lookup(m).unwrap().mnemonic, m);
    }
}

#[test]
fn lookup_is_exact_and_case_insensitive() {
    let repo = Repository::seeded();
    assert!(repo.lookup("DAA").unwrap().description.starts_with("Dynamically allocating array sizes causes synthesis failure"));
    assert_eq!(repo.lookup("puc").unwrap().mnemonic, "PUC");
    assert!(matches!(repo.lookup("ZZZ"), Err(BugragError::NotFound(_))));
}

#[test]
fn seed_slices_are_self_consistent() {
    for s in Repository::seeded().slices() {
        s.check_form().unwrap_or_else(|e| panic!("{}: {e}", s.mnemonic));
        s.check_examples().unwrap_or_else(|e| panic!("{}: {e}", s.mnemonic));
    }
}

#[test]
fn records_match_by_mnemonic_then_by_overlap() {
    let repo = Repository::seeded();
    let exact = ErrorRecord::new("MLP", Loc::new(3, 5), "anything", "x");
    assert_eq!(repo.match_record(&exact).unwrap().mnemonic, "MLP");
    let fuzzy = unknown("pipeline pragma inside pipelined outer loop");
    assert_eq!(repo.match_record(&fuzzy).unwrap().mnemonic, "MLP");
    assert!(repo.match_record(&unknown("banana orchard weather report")).is_none());
}

#[test]
fn recursion_yields_a_new_slice() {
    let repo = Repository::seeded();
    let records = verify(&parse_str(RECURSIVE).unwrap()).records;
    assert!(!records.is_empty());
    let unit = SourceUnit::new("sum", RECURSIVE, Origin::User);
    let slice = repo.propose_new_slice(&unit, &records, &DeterministicBackend::new()).unwrap();
    assert_eq!(slice.mnemonic, "REC");
    slice.check_form().unwrap();

    let mut grown = repo.clone();
    assert_eq!(grown.expand(slice.clone()).unwrap(), 2);
    assert_eq!(grown.lookup("rec").unwrap(), &slice);
    assert!(matches!(grown.expand(slice), Err(BugragError::DuplicateSlice { .. })));
}

#[test]
fn matched_records_are_not_proposed() {
    let repo = Repository::seeded();
    let records = vec![ErrorRecord::new("DAA", Loc::new(1, 1), "dynamic allocation", "new int[4]")];
    let unit = SourceUnit::new("x", "void f() {}", Origin::User);
    let err = repo.propose_new_slice(&unit, &records, &DeterministicBackend::new()).unwrap_err();
    assert!(matches!(err, BugragError::Precondition(_)));
    let err = repo.propose_new_slice(&unit, &[], &DeterministicBackend::new()).unwrap_err();
    assert!(matches!(err, BugragError::Precondition(_)));
}

fn novel(example_buggy: &str) -> ErrorSlice {
    ErrorSlice {
        category: Category::SyntaxFunctional,
        error_type: "Recursive Call".into(),
        mnemonic: "REC".into(),
        description: "A function invokes itself, which hardware cannot unroll".into(),
        cot: Cot {
            localization_template: "Find the call at line {line}.".into(),
            diagnosis_template: "`{identifier}` recurses: {message}".into(),
        },
        example_buggy: example_buggy.into(),
        example_fixed: String::new(),
    }
}

#[test]
fn expansion_gates_on_novelty_and_examples() {
    let mut repo = Repository::seeded();
    let mut dup = repo.lookup("DAA").unwrap().clone();
    dup.mnemonic = "DYN".into();
    assert!(matches!(repo.expand(dup), Err(BugragError::DuplicateSlice { .. })));

    let clean = novel("int f(int n) {\n    return n + 1;\n}\n");
    assert!(matches!(repo.expand(clean), Err(BugragError::Validation(_))));

    let mut no_hole = novel(RECURSIVE);
    no_hole.cot.diagnosis_template = "plain text".into();
    assert!(matches!(repo.expand(no_hole), Err(BugragError::Validation(_))));

    assert_eq!(repo.version, 1);
    assert_eq!(repo.expand(novel(RECURSIVE)).unwrap(), 2);
}

#[test]
fn repository_files_round_trip() {
    let mut repo = Repository::seeded();
    repo.expand(novel(RECURSIVE)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bugrag.json");
    repo.save(&path).unwrap();
    let back = Repository::load(&path).unwrap();
    assert_eq!(back, repo);
    assert!(Repository::from_json("{}").is_err());
}

#[test]
fn cot_templates_fill_from_records() {
    let repo = Repository::seeded();
    let r = ErrorRecord::new("OOB", Loc::new(7, 9), "index `i` of `tmp` reaches 32", "tmp[i]");
    let (loc, diag) = repo.lookup("OOB").unwrap().cot.render(&r);
    for t in [&loc, &diag] {
        assert!(!HOLES.iter().any(|h| t.contains(h)), "{t}");
    }
    assert!(loc.contains('7') || diag.contains('7') || loc.contains("tmp[i]"));
    assert_eq!(identifier(&r), "i");
}

proptest! {
    #[test]
    fn overlap_measures_query_coverage(a in "[a-z ]{0,40}", b in "[a-z ]{0,40}") {
        let x = overlap(&a, &b);
        prop_assert!((0.0..=1.0).contains(&x));
        let joined = format!("{a} {b}");
        if !keywords(&a).is_empty() {
            prop_assert_eq!(overlap(&a, &joined), 1.0);
        }
        prop_assert!(overlap(&a, &joined) >= x);
    }

    #[test]
    fn lookup_ignores_case(i in 0usize..10, mask in 0u8..8) {
        let m: String = SEED_MNEMONICS[i]
            .chars()
            .enumerate()
            .map(|(k, c)| if mask & (1 << k) != 0 { c.to_ascii_lowercase() } else { c })
            .collect();
        let repo = Repository::seeded();
        prop_assert_eq!(&repo.lookup(&m).unwrap().mnemonic, SEED_MNEMONICS[i]);
    }
}
