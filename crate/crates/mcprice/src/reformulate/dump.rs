//! Deterministic text rendering of a compiled program.
//!
//! Format (one record per line, fields space-separated):
//!
//! ```text
//! conic-program v1
//! kind <label>
//! sense <maximize|minimize>
//! columns <n>
//! rows <m>
//! col <index> <name>            (every column, ascending)
//! row <index> <name>            (every row, ascending)
//! obj <col> <value>             (nonzero entries, ascending column)
//! A <row> <col> <value>         (entries in build order)
//! rhs <row> <value>             (nonzero entries, ascending row)
//! cone <kind> <offset> <dim>    (blocks in order)
//! ```
//!
//! Values print with Rust's shortest round-trip `f64` formatting, with
//! negative zero normalized to `0`, so equal programs always render to
//! byte-identical text.

use crate::conic::{ConeKind, ConicProgram, Sense};
use std::fmt::Write;

fn fmt_value(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

fn kind_label(kind: ConeKind) -> &'static str {
    match kind {
        ConeKind::Zero => "zero",
        ConeKind::Nonnegative => "nonneg",
        ConeKind::Exponential => "exp",
        ConeKind::DualExponential => "dual-exp",
    }
}

/// Renders `prog` under the heading `label` (the program kind).
pub fn dump_program(prog: &ConicProgram, label: &str) -> String {
    let mut out = String::new();
    out.push_str("conic-program v1\n");
    writeln!(out, "kind {label}").unwrap();
    let sense = match prog.sense() {
        Sense::Maximize => "maximize",
        Sense::Minimize => "minimize",
    };
    writeln!(out, "sense {sense}").unwrap();
    writeln!(out, "columns {}", prog.n_cols()).unwrap();
    writeln!(out, "rows {}", prog.n_rows()).unwrap();
    for (idx, name) in prog.col_names().iter().enumerate() {
        writeln!(out, "col {idx} {name}").unwrap();
    }
    for (idx, name) in prog.row_names().iter().enumerate() {
        writeln!(out, "row {idx} {name}").unwrap();
    }
    for (col, &c) in prog.objective().iter().enumerate() {
        if c != 0.0 {
            writeln!(out, "obj {col} {}", fmt_value(c)).unwrap();
        }
    }
    for &(row, col, value) in prog.triplets() {
        writeln!(out, "A {row} {col} {}", fmt_value(value)).unwrap();
    }
    for (row, &b) in prog.rhs().iter().enumerate() {
        if b != 0.0 {
            writeln!(out, "rhs {row} {}", fmt_value(b)).unwrap();
        }
    }
    for block in prog.blocks() {
        writeln!(out, "cone {} {} {}", kind_label(block.kind), block.offset, block.dim).unwrap();
    }
    out
}
