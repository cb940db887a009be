// SPDX-License-Identifier: Apache-2.0

//! Static error detection, C simulation by interpretation, differential
//! checking against a reference, and external log parsing.

mod detectors;
mod interp;
mod log;

pub use detectors::{detect, Detector, DETECTORS};
pub use interp::{
    csim, csim_with_limit, differential_check, random_inputs, CsimError, Datum, DiffOutcome, Inputs, Num, Outputs, RuntimeTrap,
    SignatureMismatch, TrapKind, Witness, DEFAULT_STEP_LIMIT,
};
pub use log::{parse_external_log, LogDialect};

use crate::frontend::{Ast, Loc};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    HlscIncompatible,
    PragmaMisuse,
    SyntaxFunctional,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::HlscIncompatible => "hlsc_incompatible",
            Category::PragmaMisuse => "pragma_misuse",
            Category::SyntaxFunctional => "syntax_functional",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    SynthesisBlocking,
    Functional,
}

/// Mnemonic given to log lines that match no known error pattern.
pub const UNKNOWN_MNEMONIC: &str = "UNK";

/// The ten cataloged mnemonics, in catalog order.
pub const SEED_MNEMONICS: [&str; 10] = ["DAA", "OOB", "PTR", "UDT", "AID", "DPC", "MLP", "PUC", "UDM", "FIN"];

/// Static facts about a mnemonic known to the detector registry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MnemonicInfo {
    pub mnemonic: &'static str,
    pub error_type: &'static str,
    pub category: Category,
    pub severity: Severity,
}

const REGISTRY: [MnemonicInfo; 11] = [
    info("DAA", "Dynamic Array Allocation", Category::HlscIncompatible, Severity::SynthesisBlocking),
    info("OOB", "Out-of-Bounds", Category::HlscIncompatible, Severity::Functional),
    info("PTR", "Pointer Access Error", Category::HlscIncompatible, Severity::SynthesisBlocking),
    info("UDT", "Unsupported Data Types", Category::HlscIncompatible, Severity::SynthesisBlocking),
    info("AID", "Array Partition Invalid Dim", Category::PragmaMisuse, Severity::SynthesisBlocking),
    info("DPC", "Dataflow-Pipeline Conflict", Category::PragmaMisuse, Severity::SynthesisBlocking),
    info("MLP", "Multi-Layer Pipeline", Category::PragmaMisuse, Severity::SynthesisBlocking),
    info("PUC", "Pipeline-Unroll Conflict", Category::PragmaMisuse, Severity::SynthesisBlocking),
    info("UDM", "Undefined Methods", Category::SyntaxFunctional, Severity::SynthesisBlocking),
    info("FIN", "Faulty Indexing", Category::SyntaxFunctional, Severity::Functional),
    // Extended detector beyond the catalog; it has no knowledge slice until
    // one is added to the repository.
    info("REC", "Recursive Function", Category::HlscIncompatible, Severity::SynthesisBlocking),
];

const fn info(mnemonic: &'static str, error_type: &'static str, category: Category, severity: Severity) -> MnemonicInfo {
    MnemonicInfo { mnemonic, error_type, category, severity }
}

pub fn mnemonic_info(mnemonic: &str) -> Option<MnemonicInfo> {
    REGISTRY.iter().copied().find(|i| i.mnemonic.eq_ignore_ascii_case(mnemonic))
}

/// One detected error instance. Serializes to the dataset record schema.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub mnemonic: String,
    pub category: Category,
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub snippet: String,
    pub severity: Severity,
}

impl ErrorRecord {
    /// Builds a record for a registered mnemonic.
    pub fn new(mnemonic: &str, loc: Loc, message: impl Into<String>, snippet: impl Into<String>) -> Self {
        let info = mnemonic_info(mnemonic);
        ErrorRecord {
            mnemonic: mnemonic.to_ascii_uppercase(),
            category: info.map_or(Category::SyntaxFunctional, |i| i.category),
            line: loc.line,
            col: loc.col,
            message: message.into(),
            snippet: snippet.into(),
            severity: info.map_or(Severity::SynthesisBlocking, |i| i.severity),
        }
    }

    pub fn loc(&self) -> Loc {
        Loc::new(self.line, self.col)
    }

    pub fn is_unknown(&self) -> bool {
        self.mnemonic == UNKNOWN_MNEMONIC
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Clean,
    Failed,
}

/// Functional check summary attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsimSummary {
    pub passed: bool,
    pub runs: usize,
    /// First mismatching output, when the check failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub status: Status,
    pub records: Vec<ErrorRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub csim: Option<CsimSummary>,
}

impl VerificationReport {
    pub fn from_records(mut records: Vec<ErrorRecord>, csim: Option<CsimSummary>) -> Self {
        sort_records(&mut records);
        let passed = csim.as_ref().is_none_or(|c| c.passed);
        let status = if records.is_empty() && passed { Status::Clean } else { Status::Failed };
        VerificationReport { status, records, csim }
    }

    pub fn is_clean(&self) -> bool {
        self.status == Status::Clean
    }

    pub fn has(&self, mnemonic: &str) -> bool {
        self.records.iter().any(|r| r.mnemonic.eq_ignore_ascii_case(mnemonic))
    }

    pub fn count(&self, mnemonic: &str) -> usize {
        self.records.iter().filter(|r| r.mnemonic.eq_ignore_ascii_case(mnemonic)).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Sorts by `(line, mnemonic)` and drops exact duplicates.
pub fn sort_records(records: &mut Vec<ErrorRecord>) {
    records.sort_by(|a, b| (a.line, &a.mnemonic, a.col, &a.message).cmp(&(b.line, &b.mnemonic, b.col, &b.message)));
    records.dedup();
}

/// Records as the JSON array embedded in dataset samples.
pub fn records_json(records: &[ErrorRecord]) -> String {
    serde_json::to_string(records).expect("records serialize")
}

/// Runs every static detector. Deterministic; never fails.
pub fn verify(design: &Ast) -> VerificationReport {
    VerificationReport::from_records(detect(design), None)
}

/// Default number of random input sets for functional checks.
pub const DEFAULT_DIFF_RUNS: usize = 16;

/// Static detection followed, when the design is statically clean, by a
/// differential check against `reference`. A functional mismatch that no
/// static record explains is reported as FIN.
pub fn verify_against(design: &Ast, reference: &Ast, runs: usize, seed: u64) -> VerificationReport {
    let records = detect(design);
    if !records.is_empty() {
        return VerificationReport::from_records(records, None);
    }
    let outcome = differential_check(design, reference, runs, seed);
    let (summary, fin) = match outcome {
        Ok(o) if o.passed => (CsimSummary { passed: true, runs: o.runs, mismatch: None }, None),
        Ok(o) => {
            let w = o.witness.expect("failing check has a witness");
            let rec = fin_record(design, &w.mismatch);
            (CsimSummary { passed: false, runs: o.runs, mismatch: Some(w.mismatch) }, Some(rec))
        }
        Err(e) => {
            let msg = e.to_string();
            let rec = fin_record(design, &msg);
            (CsimSummary { passed: false, runs: 0, mismatch: Some(msg) }, Some(rec))
        }
    };
    VerificationReport::from_records(fin.into_iter().collect(), Some(summary))
}

fn fin_record(design: &Ast, mismatch: &str) -> ErrorRecord {
    let (loc, snippet) = design
        .top()
        .map(|f| {
            let params: Vec<String> = f.params.iter().map(crate::frontend::emit_decl).collect();
            (f.loc, format!("{} {}({})", f.ret, f.name, params.join(", ")))
        })
        .unwrap_or_default();
    ErrorRecord::new(
        "FIN",
        loc,
        format!(
            "output differs from the reference implementation ({mismatch}); an index expression likely selects the wrong element"
        ),
        snippet,
    )
}
