//! Plain-text report rendering. Output is a pure function of the report
//! struct so repeated runs stay byte-identical (wall time aside).

use mcprice::report::{SolutionReport, VerifyReport};
use std::fmt::Write;

/// Fixed-width float formatting: plain decimal for ordinary magnitudes,
/// scientific for the tiny residual-style values.
fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() < 1e-4 || v.abs() >= 1e9 {
        format!("{v:.6e}")
    } else {
        format!("{v:.9}")
    }
}

fn set(indices: &[usize]) -> String {
    let inner = indices
        .iter()
        .map(|j| j.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{inner}}}")
}

pub fn solution_text(r: &SolutionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "status       {}", r.status);
    let _ = writeln!(out, "mode         {}", r.mode);
    let _ = writeln!(out, "objective    {}", num(r.objective));
    let _ = writeln!(out, "duality gap  {}", num(r.duality_gap));
    for (j, x) in r.prices.iter().enumerate() {
        let _ = writeln!(
            out,
            "product {j}    price {}  intensity {}",
            num(*x),
            num(r.intensities[j])
        );
    }
    for entry in &r.mixture {
        let _ = writeln!(
            out,
            "mixture      weight {}  offer {}",
            num(entry.weight),
            set(&entry.assortment)
        );
    }
    for seg in &r.schedule {
        let _ = writeln!(
            out,
            "schedule     [{}, {})  offer {}",
            num(seg.start),
            num(seg.end),
            set(&seg.assortment)
        );
    }
    for (i, line) in r.resources.iter().enumerate() {
        let cap = match line.capacity {
            Some(c) => num(c),
            None => "unbounded".into(),
        };
        let _ = writeln!(
            out,
            "resource {i}   usage {}  capacity {cap}",
            num(line.usage)
        );
    }
    let _ = writeln!(out, "iterations   {}", r.iterations);
    let _ = writeln!(out, "wall time    {} ms", r.wall_time_ms);
    let _ = writeln!(out, "digest       {}", r.instance_digest);
    out
}

pub fn verify_text(r: &VerifyReport) -> String {
    let mut out = String::new();
    for c in &r.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "check {:<14} {verdict}  trials {}  worst margin {}",
            c.name,
            c.trials,
            num(c.worst_margin)
        );
        if !c.detail.is_empty() {
            let _ = writeln!(out, "  {}", c.detail);
        }
        if let Some(path) = &c.counterexample_path {
            let _ = writeln!(out, "  counterexample written to {path}");
        }
    }
    let _ = writeln!(out, "overall      {}", if r.passed { "PASS" } else { "FAIL" });
    let _ = writeln!(out, "digest       {}", r.instance_digest);
    out
}
