// SPDX-License-Identifier: Apache-2.0

//! Verification-gated data augmentation: inject one error into a clean
//! design, admit the sample only if verification confirms it and the
//! ground-truth fix, and emit fine-tuning and preference datasets.

mod inject;

pub use inject::{inapplicable_reason, mutations, Fragment, Mutation};

use crate::agents::{complete, AgentError, AgentRole, Backend, Context};
use crate::bugrag::{ErrorSlice, Repository};
use crate::diagnostics::{
    differential_check, records_json, verify, verify_against, ErrorRecord, VerificationReport, DEFAULT_DIFF_RUNS,
};
use crate::frontend::{emit_ast, parse_str, Ast};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

pub const SAMPLES_FILE: &str = "samples.jsonl";
pub const PREFERENCES_FILE: &str = "preferences.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const REASON_NOT_APPLICABLE: &str = "not applicable";
pub const REASON_ABSENT: &str = "intended mnemonic absent";

#[derive(Debug, Error)]
pub enum VodaError {
    #[error("no eligible site for {0}")]
    NoEligibleSite(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Applicability {
    pub applicable: bool,
    pub reason: String,
}

/// Whether `design` has a structural site for `mnemonic`.
pub fn assess_applicability(design: &Ast, mnemonic: &str) -> Applicability {
    let n = mutations(design, mnemonic).len();
    if n == 0 {
        Applicability { applicable: false, reason: inapplicable_reason(mnemonic).to_string() }
    } else {
        Applicability { applicable: true, reason: format!("{n} eligible site(s)") }
    }
}

/// Site and original fragments of an injection; enough to undo it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionNote {
    pub mnemonic: String,
    pub site: String,
    pub fragments: Vec<Fragment>,
    /// Printed design before injection.
    pub original_code: String,
}

impl InjectionNote {
    /// Correction text that reverses the injection.
    pub fn correction(&self, line: Option<u32>) -> String {
        let steps: Vec<String> = self.fragments.iter().map(Fragment::correction).collect();
        let at = line.map_or_else(String::new, |l| format!("At line {l}, "));
        let mut text = format!("{at}{}.", steps.join(", then "));
        if at.is_empty() {
            if let Some(first) = text.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
        }
        text
    }

    /// Ground-truth fix: the design as it was before injection.
    pub fn invert(&self) -> String {
        self.original_code.clone()
    }
}

/// Applies the slice's mutation at a site chosen by `seed`.
pub fn inject(design: &Ast, slice: &ErrorSlice, seed: u64) -> Result<(Ast, InjectionNote), VodaError> {
    let mut candidates = mutations(design, &slice.mnemonic);
    if candidates.is_empty() {
        return Err(VodaError::NoEligibleSite(slice.mnemonic.clone()));
    }
    let pick = ChaCha8Rng::seed_from_u64(seed).gen_range(0..candidates.len());
    let m = candidates.swap_remove(pick);
    let note =
        InjectionNote { mnemonic: slice.mnemonic.clone(), site: m.site, fragments: m.fragments, original_code: emit_ast(design) };
    Ok((m.ast, note))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleInput {
    pub code: String,
    pub errors: Vec<ErrorRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotText {
    pub localization: String,
    pub diagnosis: String,
    pub suggestion: String,
}

impl CotText {
    /// Full chain-of-thought rendering; ends with the suggestion.
    pub fn render(&self) -> String {
        format!("Localization: {}\nDiagnosis: {}\nCorrection: {}", self.localization, self.diagnosis, self.suggestion)
    }
}

/// One admitted sample; serializes to one JSONL line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSample {
    pub id: String,
    pub design: String,
    pub mnemonic: String,
    pub input: SampleInput,
    pub output: CotText,
    pub fixed: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub design: String,
    pub mnemonic: String,
    pub reason: String,
}

/// Labels a possibly buggy design: static checks, plus simulation against
/// the reference for functional mnemonics.
pub fn label(buggy: &Ast, original: &Ast, mnemonic: &str, seed: u64) -> VerificationReport {
    if mnemonic == "FIN" {
        verify_against(buggy, original, DEFAULT_DIFF_RUNS, seed)
    } else {
        verify(buggy)
    }
}

/// Inject, verify, explain and gate one sample.
pub fn build_sample(
    id: &str,
    design_name: &str,
    design: &Ast,
    mnemonic: &str,
    seed: u64,
    repo: &Repository,
    cot_agent: &dyn Backend,
) -> Result<DatasetSample, Rejection> {
    let reject = |reason: String| Rejection { id: id.into(), design: design_name.into(), mnemonic: mnemonic.into(), reason };
    let slice = repo.lookup(mnemonic).map_err(|_| reject(format!("{REASON_NOT_APPLICABLE}: no knowledge slice")))?;
    if !verify(design).is_clean() {
        return Err(reject("design does not verify clean".into()));
    }
    let app = assess_applicability(design, mnemonic);
    if !app.applicable {
        return Err(reject(format!("{REASON_NOT_APPLICABLE}: {}", app.reason)));
    }
    let (buggy, note) = inject(design, slice, seed).map_err(|e| reject(format!("{REASON_NOT_APPLICABLE}: {e}")))?;
    let code = emit_ast(&buggy);
    let reparsed = parse_str(&code).map_err(|e| reject(format!("buggy code does not parse: {e}")))?;
    let report = label(&reparsed, design, mnemonic, seed);
    if !report.has(mnemonic) {
        return Err(reject(REASON_ABSENT.into()));
    }
    let first = report.records.iter().find(|r| r.mnemonic == mnemonic).map(|r| r.line);
    let cot = explain(&code, &report.records, slice, &note.correction(first), cot_agent)
        .map_err(|e| reject(format!("explanation failed: {e}")))?;
    let fixed = note.invert();
    gate_fixed(&fixed, design, seed).map_err(reject)?;
    Ok(DatasetSample {
        id: id.into(),
        design: design_name.into(),
        mnemonic: mnemonic.into(),
        input: SampleInput { code, errors: report.records },
        output: cot,
        fixed,
    })
}

/// The fixed code verifies clean and behaves like the original.
fn gate_fixed(fixed: &str, original: &Ast, seed: u64) -> Result<(), String> {
    let ast = parse_str(fixed).map_err(|e| format!("fixed code does not parse: {e}"))?;
    if !verify(&ast).is_clean() {
        return Err("fixed code does not verify clean".into());
    }
    match differential_check(&ast, original, DEFAULT_DIFF_RUNS, seed) {
        Ok(d) if d.passed => Ok(()),
        Ok(_) => Err("fixed code diverges from the original".into()),
        Err(e) => Err(format!("fixed code signature differs: {e}")),
    }
}

fn explain(
    code: &str,
    records: &[ErrorRecord],
    slice: &ErrorSlice,
    edits: &str,
    agent: &dyn Backend,
) -> Result<CotText, AgentError> {
    let ctx = Context::new()
        .with("code", code)
        .with("errors", &records_json(records))
        .with("slice", &serde_json::to_string(slice).expect("slice serializes"))
        .with("edits", edits);
    let r = complete(AgentRole::CotGenerator, &ctx, agent)?;
    let field = |k: &str| r.parsed[k].as_str().unwrap_or_default().to_string();
    Ok(CotText { localization: field("localization"), diagnosis: field("diagnosis"), suggestion: field("suggestion") })
}

/// Per-sample seed derived from the corpus seed and the sample coordinates.
pub fn sample_seed(seed: u64, design: &str, mnemonic: &str, k: usize) -> u64 {
    // FNV-1a over the coordinates, folded with the corpus seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in design.bytes().chain([0]).chain(mnemonic.bytes()).chain([0]).chain((k as u64).to_le_bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Byte offset of the sample's line in the samples file.
    pub offset: u64,
    pub length: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub per_pair: usize,
    pub samples: Vec<ManifestEntry>,
    pub per_mnemonic: BTreeMap<String, u64>,
    pub per_design: BTreeMap<String, u64>,
    pub rejected_count: u64,
    pub rejections: Vec<Rejection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
}

/// A built corpus held in memory.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub samples: Vec<DatasetSample>,
    pub manifest: CorpusManifest,
    /// Serialized samples file.
    pub samples_jsonl: String,
}

impl Corpus {
    pub fn preference_jsonl(&self) -> String {
        make_preference_pairs(&self.samples).iter().map(|p| serde_json::to_string(p).expect("pair serializes") + "\n").collect()
    }

    /// Writes the samples, preference pairs and manifest under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), VodaError> {
        let io = |e: std::io::Error| VodaError::IoFailure(e.to_string());
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join(SAMPLES_FILE), &self.samples_jsonl).map_err(io)?;
        std::fs::write(dir.join(PREFERENCES_FILE), self.preference_jsonl()).map_err(io)?;
        let manifest = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n";
        std::fs::write(dir.join(MANIFEST_FILE), manifest).map_err(io)
    }
}

/// Iterates designs × mnemonics × `per_pair` seeds in order.
pub fn build_corpus(
    designs: &[(String, Ast)],
    mnemonics: &[String],
    per_pair: usize,
    seed: u64,
    repo: &Repository,
    cot_agent: &dyn Backend,
) -> Result<Corpus, VodaError> {
    if per_pair == 0 {
        return Err(VodaError::Precondition("per_pair must be at least 1".into()));
    }
    let mut samples: Vec<DatasetSample> = Vec::new();
    let mut rejections = Vec::new();
    for (name, design) in designs {
        for m in mnemonics {
            for k in 0..per_pair {
                let id = format!("{name}-{m}-{k}");
                let s = sample_seed(seed, name, m, k);
                match build_sample(&id, name, design, m, s, repo, cot_agent) {
                    Ok(sample) => {
                        if let Some(dup) = samples.iter().find(|x| x.design == *name && x.input.code == sample.input.code) {
                            rejections.push(Rejection {
                                id,
                                design: name.clone(),
                                mnemonic: m.clone(),
                                reason: format!("duplicate of {}", dup.id),
                            });
                        } else {
                            samples.push(sample);
                        }
                    }
                    Err(r) => rejections.push(r),
                }
            }
        }
    }
    let mut jsonl = String::new();
    let mut entries = Vec::new();
    let mut per_mnemonic = BTreeMap::new();
    let mut per_design = BTreeMap::new();
    for s in &samples {
        let line = serde_json::to_string(s).expect("sample serializes");
        entries.push(ManifestEntry { id: s.id.clone(), offset: jsonl.len() as u64, length: line.len() as u64 });
        jsonl.push_str(&line);
        jsonl.push('\n');
        *per_mnemonic.entry(s.mnemonic.clone()).or_insert(0) += 1;
        *per_design.entry(s.design.clone()).or_insert(0) += 1;
    }
    let manifest = CorpusManifest {
        seed,
        per_pair,
        samples: entries,
        per_mnemonic,
        per_design,
        rejected_count: rejections.len() as u64,
        rejections,
    };
    Ok(Corpus { samples, manifest, samples_jsonl: jsonl })
}

/// Chosen: the full chain of thought. Rejected: the suggestion alone.
pub fn make_preference_pairs(samples: &[DatasetSample]) -> Vec<PreferencePair> {
    samples
        .iter()
        .map(|s| PreferencePair {
            prompt: format!("{}\nErrors:\n{}", s.input.code, records_json(&s.input.errors)),
            chosen: s.output.render(),
            rejected: s.output.suggestion.clone(),
        })
        .collect()
}

/// Result of re-checking an emitted corpus from its files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Revalidation {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl Revalidation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-reads a corpus directory and re-checks every sample invariant and
/// the manifest bookkeeping. `originals` maps design names to their clean
/// sources; the sample's fixed code stands in for a missing entry.
pub fn revalidate(dir: &Path, originals: &BTreeMap<String, Ast>) -> Result<Revalidation, VodaError> {
    let io = |e: std::io::Error| VodaError::IoFailure(e.to_string());
    let text = std::fs::read_to_string(dir.join(SAMPLES_FILE)).map_err(io)?;
    let manifest: CorpusManifest = serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(io)?)
        .map_err(|e| VodaError::IoFailure(e.to_string()))?;
    let mut out = Revalidation::default();
    let lines: Vec<&str> = text.lines().collect();
    if manifest.samples.len() != lines.len() {
        out.violations.push(format!("manifest lists {} samples, file has {}", manifest.samples.len(), lines.len()));
    }
    let sum = |m: &BTreeMap<String, u64>| m.values().sum::<u64>() as usize;
    if sum(&manifest.per_mnemonic) != lines.len() || sum(&manifest.per_design) != lines.len() {
        out.violations.push("manifest counts do not sum to the sample count".into());
    }
    for e in &manifest.samples {
        let slice = text.get(e.offset as usize..(e.offset + e.length) as usize);
        let ok = slice.and_then(|s| serde_json::from_str::<DatasetSample>(s).ok()).is_some_and(|s| s.id == e.id);
        if !ok {
            out.violations.push(format!("{}: manifest offset does not point at the sample", e.id));
        }
    }
    for line in lines {
        out.checked += 1;
        let s: DatasetSample = match serde_json::from_str(line) {
            Ok(s) => s,
            Err(e) => {
                out.violations.push(format!("unreadable sample line: {e}"));
                continue;
            }
        };
        let fixed = match parse_str(&s.fixed) {
            Ok(a) => a,
            Err(e) => {
                out.violations.push(format!("{}: fixed code does not parse: {e}", s.id));
                continue;
            }
        };
        let original = originals.get(&s.design).cloned().unwrap_or_else(|| fixed.clone());
        match parse_str(&s.input.code) {
            Ok(buggy) => {
                let report = label(&buggy, &original, &s.mnemonic, 0);
                if !report.has(&s.mnemonic) {
                    out.violations.push(format!("{}: buggy code does not report {}", s.id, s.mnemonic));
                }
            }
            Err(e) => out.violations.push(format!("{}: buggy code does not parse: {e}", s.id)),
        }
        if !s.input.errors.iter().any(|r| r.mnemonic == s.mnemonic) {
            out.violations.push(format!("{}: recorded errors lack {}", s.id, s.mnemonic));
        }
        if !verify(&fixed).is_clean() {
            out.violations.push(format!("{}: fixed code does not verify clean", s.id));
        }
        match differential_check(&fixed, &original, DEFAULT_DIFF_RUNS, 0) {
            Ok(d) if d.passed => {}
            _ => out.violations.push(format!("{}: fixed code diverges from the original", s.id)),
        }
    }
    Ok(out)
}
