// SPDX-License-Identifier: Apache-2.0

//! The ten cataloged slices.

use super::{Cot, ErrorSlice};
use crate::diagnostics::Category;

struct Row {
    category: Category,
    error_type: &'static str,
    mnemonic: &'static str,
    description: &'static str,
    localization: &'static str,
    diagnosis: &'static str,
    buggy: &'static str,
    fixed: &'static str,
}

const ROWS: [Row; 10] = [
    Row {
        category: Category::HlscIncompatible,
        error_type: "Dynamic Array Allocation",
        mnemonic: "DAA",
        description: "Dynamically allocating array sizes causes synthesis failure (new/malloc)",
        localization: "Locate dynamic memory allocators: `{snippet}` at line {line} requests storage for `{identifier}` at run time.",
        diagnosis: "Convert dynamic arrays to fixed-size declarations so `{identifier}` maps to on-chip memory of known depth.",
        buggy: "void f(int a[16], int c[16]) {\n    int *buf = new int[16];\n    for (int i = 0; i < 16; i++) {\n        buf[i] = a[i];\n    }\n    for (int i = 0; i < 16; i++) {\n        c[i] = buf[i];\n    }\n}\n",
        fixed: "void f(int a[16], int c[16]) {\n    int buf[16];\n    for (int i = 0; i < 16; i++) {\n        buf[i] = a[i];\n    }\n    for (int i = 0; i < 16; i++) {\n        c[i] = buf[i];\n    }\n}\n",
    },
    Row {
        category: Category::HlscIncompatible,
        error_type: "Out-of-Bounds",
        mnemonic: "OOB",
        description: "Variable index exceeds array bounds triggers undefined RTL behavior",
        localization: "Check whether loop boundary and index misalign at line {line}: {message}.",
        diagnosis: "Replace unsafe loop/indexing patterns so every access to `{identifier}` stays inside its declared extent.",
        buggy: "void f(int a[16], int b[16]) {\n    for (int i = 0; i <= 16; i++) {\n        b[i] = a[i];\n    }\n}\n",
        fixed: "void f(int a[16], int b[16]) {\n    for (int i = 0; i < 16; i++) {\n        b[i] = a[i];\n    }\n}\n",
    },
    Row {
        category: Category::HlscIncompatible,
        error_type: "Pointer Access Error",
        mnemonic: "PTR",
        description: "Uninitialized pointer usage with undefined memory space mapping",
        localization: "Identify pointers that are dereferenced without a target and would cause segmentation faults in C simulation: `{identifier}` at line {line}.",
        diagnosis: "Replace with deterministic scalar logic: hold the value of `{identifier}` in a local variable instead of unmapped memory.",
        buggy: "void f(int k, int a[16], int b[16]) {\n    int *p;\n    *p = k;\n    for (int i = 0; i < 16; i++) {\n        b[i] = a[i] * *p;\n    }\n}\n",
        fixed: "void f(int k, int a[16], int b[16]) {\n    int p;\n    p = k;\n    for (int i = 0; i < 16; i++) {\n        b[i] = a[i] * p;\n    }\n}\n",
    },
    Row {
        category: Category::HlscIncompatible,
        error_type: "Unsupported Data Types",
        mnemonic: "UDT",
        description: "Unsupported type definitions violating HLS-compatible C++ subset",
        localization: "Identify unsupported type declarations reported in the error log: {message} (line {line}).",
        diagnosis: "Replace with HLS-compatible primitives of the same width for `{identifier}`.",
        buggy: "long f(int a[16]) {\n    long long s = 0;\n    for (int i = 0; i < 16; i++) {\n        s += a[i];\n    }\n    return s;\n}\n",
        fixed: "long f(int a[16]) {\n    long s = 0;\n    for (int i = 0; i < 16; i++) {\n        s += a[i];\n    }\n    return s;\n}\n",
    },
    Row {
        category: Category::PragmaMisuse,
        error_type: "Array Partition Invalid Dim",
        mnemonic: "AID",
        description: "Incorrect dimension specification in hardware array partitioning directives",
        localization: "Detect excessive dim parameters in `{snippet}` at line {line}: {message}.",
        diagnosis: "Align partitioning with access patterns: choose a dimension of `{identifier}` that the loops actually index.",
        buggy: "void f(int a[16], int b[16]) {\n    #pragma HLS ARRAY_PARTITION variable=a cyclic factor=2 dim=2\n    for (int i = 0; i < 16; i++) {\n        b[i] = a[i];\n    }\n}\n",
        fixed: "void f(int a[16], int b[16]) {\n    #pragma HLS ARRAY_PARTITION variable=a cyclic factor=2 dim=1\n    for (int i = 0; i < 16; i++) {\n        b[i] = a[i];\n    }\n}\n",
    },
    Row {
        category: Category::PragmaMisuse,
        error_type: "Dataflow-Pipeline Conflict",
        mnemonic: "DPC",
        description: "Incompatible optimization pragmas creating control flow contradictions",
        localization: "Detect mutually exclusive pragmas around `{snippet}` at line {line}: {message}.",
        diagnosis: "Isolate pragmas by hierarchy: {message}. Drop the DATAFLOW region so the pipelined loops keep a single schedule.",
        buggy: "void f(int a[16], int b[16]) {\n    for (int i = 0; i < 16; i++) {\n        #pragma HLS PIPELINE II=1\n        #pragma HLS DATAFLOW\n        b[i] = a[i] + 1;\n    }\n}\n",
        fixed: "void f(int a[16], int b[16]) {\n    for (int i = 0; i < 16; i++) {\n        #pragma HLS PIPELINE II=1\n        b[i] = a[i] + 1;\n    }\n}\n",
    },
    Row {
        category: Category::PragmaMisuse,
        error_type: "Multi-Layer Pipeline",
        mnemonic: "MLP",
        description: "Redundant pipeline across nested loop hierarchies force full unrolling",
        localization: "Detect redundant pipeline pragmas in the nest: {message} (line {line}).",
        diagnosis: "Restrict pipeline to critical inner loops and remove `{snippet}` from the outer levels.",
        buggy: "void f(int m[8][8], int o[8]) {\n    for (int i = 0; i < 8; i++) {\n        #pragma HLS PIPELINE II=1\n        o[i] = 0;\n        for (int j = 0; j < 8; j++) {\n            #pragma HLS PIPELINE II=1\n            o[i] += m[i][j];\n        }\n    }\n}\n",
        fixed: "void f(int m[8][8], int o[8]) {\n    for (int i = 0; i < 8; i++) {\n        o[i] = 0;\n        for (int j = 0; j < 8; j++) {\n            #pragma HLS PIPELINE II=1\n            o[i] += m[i][j];\n        }\n    }\n}\n",
    },
    Row {
        category: Category::PragmaMisuse,
        error_type: "Pipeline-Unroll Conflict",
        mnemonic: "PUC",
        description: "Concurrent pipeline and full unroll directives on same loop",
        localization: "Analyze conflict pragmas in nested loops: `{snippet}` at line {line} fully unrolls a pipelined loop.",
        diagnosis: "Remove mutually exclusive directives: keep the pipeline and drop `{snippet}`.",
        buggy: "int f(int a[8]) {\n    int s = 0;\n    for (int i = 0; i < 8; i++) {\n        #pragma HLS PIPELINE II=1\n        #pragma HLS UNROLL\n        s += a[i];\n    }\n    return s;\n}\n",
        fixed: "int f(int a[8]) {\n    int s = 0;\n    for (int i = 0; i < 8; i++) {\n        #pragma HLS PIPELINE II=1\n        s += a[i];\n    }\n    return s;\n}\n",
    },
    Row {
        category: Category::SyntaxFunctional,
        error_type: "Undefined Methods",
        mnemonic: "UDM",
        description: "Unsupported constructs declaration in C/C++ frontend compilation",
        localization: "Detect undeclared symbol references: `{identifier}` is called at line {line} in `{snippet}`.",
        diagnosis: "Declare or remove symbols: `{identifier}` has no definition the synthesis frontend can compile.",
        buggy: "void f(int a[16], int b[16]) {\n    for (int i = 0; i < 16; i++) {\n        log_value(i);\n        b[i] = a[i];\n    }\n}\n",
        fixed: "void f(int a[16], int b[16]) {\n    for (int i = 0; i < 16; i++) {\n        b[i] = a[i];\n    }\n}\n",
    },
    Row {
        category: Category::SyntaxFunctional,
        error_type: "Faulty Indexing",
        mnemonic: "FIN",
        description: "Logic mismatch caused by invalid array index in algorithm implementation",
        localization: "Examine array index expressions in `{snippet}` against the error log: {message}.",
        diagnosis: "Align array access with algorithmic intent: index each array by the loop variable that walks it (line {line}).",
        buggy: "void f(int a[16], int b[16]) {\n    for (int i = 0; i < 16; i++) {\n        b[i] = a[0] + i;\n    }\n}\n",
        fixed: "void f(int a[16], int b[16]) {\n    for (int i = 0; i < 16; i++) {\n        b[i] = a[i] + i;\n    }\n}\n",
    },
];

pub fn slices() -> Vec<ErrorSlice> {
    ROWS.iter()
        .map(|r| ErrorSlice {
            category: r.category,
            error_type: r.error_type.into(),
            mnemonic: r.mnemonic.into(),
            description: r.description.into(),
            cot: Cot { localization_template: r.localization.into(), diagnosis_template: r.diagnosis.into() },
            example_buggy: r.buggy.into(),
            example_fixed: r.fixed.into(),
        })
        .collect()
}
