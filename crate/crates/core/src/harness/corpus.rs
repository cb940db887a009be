// SPDX-License-Identifier: Apache-2.0

//! Embedded benchmark corpus: five linear-algebra kernels and ten buggy
//! designs paired with their references.

use crate::frontend::{Origin, SourceUnit};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub const DEFAULT_SIZE: u64 = 32;

pub const KERNEL_NAMES: [&str; 5] = ["atax", "bicg", "gemm", "gesummv", "mvt"];

const KERNEL_TEMPLATES: [(&str, &str); 5] = [
    ("atax", include_str!("kernels/atax.c")),
    ("bicg", include_str!("kernels/bicg.c")),
    ("gemm", include_str!("kernels/gemm.c")),
    ("gesummv", include_str!("kernels/gesummv.c")),
    ("mvt", include_str!("kernels/mvt.c")),
];

/// Kernel source with every `N` replaced by `size`.
pub fn kernel(name: &str, size: u64) -> Option<SourceUnit> {
    static SIZE_TOKEN: OnceLock<Regex> = OnceLock::new();
    let re = SIZE_TOKEN.get_or_init(|| Regex::new(r"\bN\b").unwrap());
    KERNEL_TEMPLATES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| SourceUnit::new(*n, re.replace_all(text, size.to_string().as_str()), Origin::Corpus))
}

pub fn kernels(size: u64) -> Vec<SourceUnit> {
    KERNEL_NAMES.iter().filter_map(|n| kernel(n, size)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseCategory {
    Kernel,
    VitisStyle,
    Manual,
}

/// One evaluation case: a buggy design and its known-good reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub design_name: String,
    pub category: CaseCategory,
    /// Mnemonic the case was built around.
    pub mnemonic: String,
    pub buggy: SourceUnit,
    pub reference: SourceUnit,
}

macro_rules! design {
    ($id:literal, $name:literal, $cat:expr, $mn:literal) => {
        ($id, $name, $cat, $mn, include_str!(concat!("designs/", $id, ".c")), include_str!(concat!("designs/", $id, ".ref.c")))
    };
}

const DESIGNS: [(&str, &str, CaseCategory, &str, &str, &str); 10] = [
    design!("vadd_daa", "vadd", CaseCategory::VitisStyle, "DAA"),
    design!("shift_oob", "shift", CaseCategory::Manual, "OOB"),
    design!("scale_ptr", "scale", CaseCategory::Manual, "PTR"),
    design!("dot_udt", "dot", CaseCategory::Manual, "UDT"),
    design!("blur_aid", "blur", CaseCategory::VitisStyle, "AID"),
    design!("stage_dpc", "stage", CaseCategory::VitisStyle, "DPC"),
    design!("matvec_mlp", "matvec", CaseCategory::VitisStyle, "MLP"),
    design!("fir_puc", "fir", CaseCategory::VitisStyle, "PUC"),
    design!("hist_udm", "hist", CaseCategory::Manual, "UDM"),
    design!("rowsum_fin", "rowsum", CaseCategory::Manual, "FIN"),
];

/// The ten shipped buggy designs, sorted by id.
pub fn buggy_designs() -> Vec<TestCase> {
    let mut out: Vec<TestCase> = DESIGNS
        .iter()
        .map(|(id, name, cat, mn, buggy, reference)| TestCase {
            id: id.to_string(),
            design_name: name.to_string(),
            category: *cat,
            mnemonic: mn.to_string(),
            buggy: SourceUnit::new(*id, *buggy, Origin::Corpus),
            reference: SourceUnit::new(format!("{id}.ref"), *reference, Origin::Corpus),
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

/// Every embedded source: kernels at `size` followed by the buggy designs and
/// their references.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub kernels: Vec<SourceUnit>,
    pub cases: Vec<TestCase>,
}

impl Corpus {
    pub fn all_sources(&self) -> Vec<&SourceUnit> {
        let mut v: Vec<&SourceUnit> = self.kernels.iter().collect();
        for c in &self.cases {
            v.push(&c.buggy);
            v.push(&c.reference);
        }
        v
    }
}

pub fn corpus() -> Corpus {
    corpus_with_size(DEFAULT_SIZE)
}

pub fn corpus_with_size(size: u64) -> Corpus {
    Corpus { kernels: kernels(size), cases: buggy_designs() }
}
