// SPDX-License-Identifier: Apache-2.0

//! Keyword extraction for fuzzy slice matching.

use std::collections::BTreeSet;

const STOPWORDS: [&str; 32] = [
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "has", "in", "into", "is", "it", "its", "of", "on", "or",
    "that", "the", "their", "this", "to", "was", "which", "with", "line", "same", "than", "then", "these",
];

/// Lower-cased, stemmed content words. Template holes are ignored.
pub fn keywords(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut in_hole = false;
    let mut word = String::new();
    let flush = |w: &mut String, out: &mut BTreeSet<String>| {
        if w.len() > 1 && !STOPWORDS.contains(&w.as_str()) && !w.chars().all(|c| c.is_ascii_digit()) {
            out.insert(stem(w));
        }
        w.clear();
    };
    for c in text.chars() {
        match c {
            '{' => {
                flush(&mut word, &mut out);
                in_hole = true;
            }
            '}' => in_hole = false,
            _ if in_hole => {}
            c if c.is_ascii_alphanumeric() => word.push(c.to_ascii_lowercase()),
            _ => flush(&mut word, &mut out),
        }
    }
    flush(&mut word, &mut out);
    out
}

/// Crude suffix stripping so that `pipelined`, `pipelines` and `pipeline`
/// share a key.
fn stem(w: &str) -> String {
    let mut s = w.to_string();
    for suffix in ["ing", "ed", "es", "s"] {
        if s.len() > suffix.len() + 3 && s.ends_with(suffix) {
            s.truncate(s.len() - suffix.len());
            break;
        }
    }
    if s.len() > 4 && s.ends_with('e') {
        s.pop();
    }
    s
}

/// Fraction of the query's keywords found in `knowledge`. Zero for an empty
/// query.
pub fn overlap(query: &str, knowledge: &str) -> f64 {
    let q = keywords(query);
    if q.is_empty() {
        return 0.0;
    }
    let k = keywords(knowledge);
    q.intersection(&k).count() as f64 / q.len() as f64
}
