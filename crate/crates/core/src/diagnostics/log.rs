// SPDX-License-Identifier: Apache-2.0

//! Parsing of error logs produced by external tools.

use super::{mnemonic_info, ErrorRecord, UNKNOWN_MNEMONIC};
use crate::frontend::Loc;
use regex::Regex;
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LogDialect {
    /// Lines of the form `ERROR: [MNEMONIC] message (file:line)`.
    #[default]
    Generic,
}

fn generic_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"ERROR: \[(\w+)\] (.*?) \((.+?):(\d+)\)").expect("valid regex"))
}

/// Converts a tool log into records. Matching lines with an unregistered
/// mnemonic, and non-empty lines that match nothing, become `UNK` records
/// carrying the raw text.
pub fn parse_external_log(text: &str, dialect: LogDialect) -> Vec<ErrorRecord> {
    let LogDialect::Generic = dialect;
    let mut out = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match generic_line().captures(line) {
            Some(c) if mnemonic_info(&c[1]).is_some() => {
                let lineno: u32 = c[4].parse().unwrap_or(0);
                out.push(ErrorRecord::new(&c[1], Loc::new(lineno, 0), &c[2], ""));
            }
            Some(c) => {
                let lineno: u32 = c[4].parse().unwrap_or(0);
                let mut r = ErrorRecord::new(UNKNOWN_MNEMONIC, Loc::new(lineno, 0), line, line);
                r.mnemonic = UNKNOWN_MNEMONIC.to_string();
                out.push(r);
            }
            None => out.push(ErrorRecord::new(UNKNOWN_MNEMONIC, Loc::new(0, 0), line, line)),
        }
    }
    out
}
