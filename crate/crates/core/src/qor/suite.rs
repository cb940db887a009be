// SPDX-License-Identifier: Apache-2.0

//! Seeded loop nests for checking the estimator against the scheduler.

use crate::frontend::{Origin, SourceUnit};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write;

/// One generated nest and whether it is a single perfectly pipelined loop.
#[derive(Clone, Debug)]
pub struct GeneratedNest {
    pub unit: SourceUnit,
    pub single_pipelined: bool,
}

const VARS: [&str; 3] = ["i", "j", "k"];

/// Generates `count` nests of depth 1 to 3 with trip counts up to 64 and
/// innermost unroll factors in {1, 2, 4, 8}, partitioned to match.
pub fn generated_nests(count: usize, seed: u64) -> Vec<GeneratedNest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|n| one(&mut rng, n)).collect()
}

fn one(rng: &mut ChaCha8Rng, n: usize) -> GeneratedNest {
    let depth = rng.gen_range(1..=3usize);
    let trips: Vec<u64> = (0..depth)
        .map(|d| {
            let choices: &[u64] = if depth == 1 {
                &[8, 16, 32, 64]
            } else if d + 1 == depth {
                &[8, 16, 32]
            } else {
                &[2, 4, 8]
            };
            *choices.choose(rng).unwrap()
        })
        .collect();
    let inner = trips[depth - 1];
    let factor =
        **[1u64, 2, 4, 8].iter().filter(|&&f| f < inner && inner.is_multiple_of(f)).collect::<Vec<_>>().choose(rng).unwrap();
    let pipelined = rng.gen_bool(0.7);
    let body = rng.gen_range(0..3);
    let iv = VARS[depth - 1];
    // Output indexed by every loop; inputs by the innermost loop.
    let out_dims: String = trips.iter().map(|t| format!("[{t}]")).collect();
    let out_idx: String = VARS[..depth].iter().map(|v| format!("[{v}]")).collect();
    let in_dim = format!("[{inner}]");
    let mut src = format!("void nest{n}(int out{out_dims}, int a{in_dim}, int b{in_dim}) {{\n");
    if factor > 1 {
        let _ = writeln!(src, "#pragma HLS ARRAY_PARTITION variable=a cyclic factor={factor} dim=1");
        let _ = writeln!(src, "#pragma HLS ARRAY_PARTITION variable=b cyclic factor={factor} dim=1");
        let _ = writeln!(src, "#pragma HLS ARRAY_PARTITION variable=out cyclic factor={factor} dim={depth}");
    }
    for (d, t) in trips.iter().enumerate() {
        let _ = writeln!(src, "for (int {v} = 0; {v} < {t}; {v}++) {{", v = VARS[d]);
    }
    if pipelined {
        src.push_str("#pragma HLS PIPELINE II=1\n");
    }
    if factor > 1 {
        let _ = writeln!(src, "#pragma HLS UNROLL factor={factor}");
    }
    let stmt = match body {
        0 => format!("out{out_idx} = a[{iv}] * 3 + 1;"),
        1 => format!("out{out_idx} = a[{iv}] + b[{iv}];"),
        _ => format!("out{out_idx} = a[{iv}] * b[{iv}] - {iv};"),
    };
    let _ = writeln!(src, "{stmt}");
    for _ in 0..depth {
        src.push_str("}\n");
    }
    src.push_str("}\n");
    GeneratedNest { unit: SourceUnit::new(format!("nest{n}"), src, Origin::Generated), single_pipelined: depth == 1 && pipelined }
}
