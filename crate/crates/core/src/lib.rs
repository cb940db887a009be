// SPDX-License-Identifier: Apache-2.0

//! Verification-gated repair, bug dataset synthesis and directive tuning for
//! HLS-C designs.

pub mod agents;
pub mod bugrag;
pub mod diagnostics;
pub mod fixer;
pub mod frontend;
pub mod harness;
pub mod qor;
pub mod tuner;
pub mod voda;
