// SPDX-License-Identifier: Apache-2.0

//! Benchmark corpus, configuration and evaluation metrics.

pub mod config;
pub mod corpus;
mod eval;
pub mod pipeline;

pub use config::{AgentsConfig, Config};
pub use eval::{
    device_totals, geomean, pass_rate, percent_text, speedup_eval, CaseResult, EvalError, EvalSummary, MnemonicTally,
    SpeedupReport, SpeedupRow, Thresholds,
};
