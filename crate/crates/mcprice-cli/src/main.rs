//! `mcprice` - solve and verify price/assortment instances from the
//! command line.
//!
//! Exit codes:
//! * 0 - success (solve completed, or every verify check passed)
//! * 2 - unreadable file, malformed JSON, wrong schema version, or a
//!   verify check refused because the instance exceeds its size cap
//! * 3 - instance validation failed (violations listed on stderr)
//! * 4 - solver stopped before reaching the requested tolerance
//! * 5 - recovered decision failed an internal consistency bound
//! * 6 - a verify check found a counterexample (dump path on stderr)

mod args;
mod instance_file;
mod render;

use args::{CheckArg, Cli, Command, OutArg, SolveArgs, VerifyArgs};
use clap::Parser;
use instance_file::InstanceFile;
use mcprice::model::{validate_instance, validate_resources, McInstance, ResourceModel};
use mcprice::oracle::{
    check_fixed_price_case, check_integrality, check_pricing_only_case, check_sandwich,
    verify_constant_price_dominance, CheckOutcome, OracleSettings,
};
use mcprice::pipeline::{self, PipelineError};
use mcprice::report::{SolutionReport, VerifyReport};
use mcprice::reformulate::dump_program;
use mcprice::SolverSettings;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::time::Instant;

const EXIT_PARSE: i32 = 2;
const EXIT_VALIDATION: i32 = 3;
const EXIT_SOLVER: i32 = 4;
const EXIT_DRIFT: i32 = 5;
const EXIT_CHECK_FAILED: i32 = 6;

/// How many perturbed instances the integrality check solves.
const INTEGRALITY_TRIALS: usize = 100;

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(a) => run_solve(&a),
        Command::Verify(a) => run_verify(&a),
    };
    std::process::exit(code);
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    format!("sha256:{hex}")
}

struct Loaded {
    inst: McInstance,
    rm: ResourceModel,
    digest: String,
    horizon: f64,
}

/// Read, parse, and validate an instance file, or produce the exit code.
fn load(path: &Path) -> Result<Loaded, i32> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(EXIT_PARSE);
        }
    };
    let digest = sha256_hex(&bytes);
    let file = match InstanceFile::parse(&bytes) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(EXIT_PARSE);
        }
    };
    let (raw_inst, raw_res) = file.to_unchecked();
    let mut violations = Vec::new();
    let inst = match validate_instance(&raw_inst) {
        Ok(i) => Some(i),
        Err(report) => {
            violations.extend(report.violations);
            None
        }
    };
    let rm = match validate_resources(&raw_res) {
        Ok(r) => Some(r),
        Err(report) => {
            violations.extend(report.violations);
            None
        }
    };
    if !violations.is_empty() {
        eprintln!("error: instance failed validation:");
        for v in &violations {
            eprintln!("  - {v}");
        }
        return Err(EXIT_VALIDATION);
    }
    Ok(Loaded {
        inst: inst.unwrap(),
        rm: rm.unwrap(),
        digest,
        horizon: file.horizon,
    })
}

fn run_solve(a: &SolveArgs) -> i32 {
    let Loaded {
        inst,
        rm,
        digest,
        horizon,
    } = match load(&a.instance) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let mode = a.mode.to_mode();
    if a.dump_program {
        return match pipeline::compile(&inst, &rm, mode) {
            Ok((prog, vm)) => {
                print!("{}", dump_program(&prog, vm.kind().label()));
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_VALIDATION
            }
        };
    }
    let settings = SolverSettings {
        tolerance: a.tol,
        max_iters: a.max_iters as usize,
        seed: a.seed,
        ..SolverSettings::default()
    };
    let start = Instant::now();
    let result = match pipeline::run(&inst, &rm, mode, &settings) {
        Ok(r) => r,
        Err(e @ PipelineError::Solver { .. }) => {
            eprintln!("error: {e}");
            return EXIT_SOLVER;
        }
        Err(e @ PipelineError::Recovery(_)) => {
            eprintln!("error: {e}");
            return EXIT_DRIFT;
        }
        Err(e @ PipelineError::FixedPriceBounds { .. }) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let wall = start.elapsed().as_millis() as u64;
    let mut report = SolutionReport::from_pipeline(&result, &rm, digest, wall);
    // Schedule segments are computed on a unit interval; stretch them to
    // the instance's planning horizon. The objective stays a rate.
    for seg in &mut report.schedule {
        seg.start *= horizon;
        seg.end *= horizon;
    }
    emit(a.out, &report, render::solution_text(&report))
}

fn run_verify(a: &VerifyArgs) -> i32 {
    let Loaded {
        inst, rm, digest, ..
    } = match load(&a.instance) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let checks = a
        .checks
        .clone()
        .unwrap_or_else(|| CheckArg::ALL.to_vec());
    // Refuse oversized instances up front: every selected check must be
    // runnable or nothing runs at all.
    for c in &checks {
        let cap = c.max_products();
        if inst.n() > cap {
            eprintln!(
                "error: check {} is capped at {} products; this instance has {}. \
                 Enumeration beyond the cap is intractable, refusing to start.",
                c.name(),
                cap,
                inst.n()
            );
            return EXIT_PARSE;
        }
    }
    let settings = OracleSettings {
        price_step: a.grid_step,
        seed: a.seed,
        ..OracleSettings::default()
    };

    let mut outcomes: Vec<CheckOutcome> = Vec::new();
    for c in &checks {
        match c {
            CheckArg::Integrality => {
                outcomes.push(check_integrality(&inst, INTEGRALITY_TRIALS, &settings));
            }
            CheckArg::Dominance => {
                outcomes.push(verify_constant_price_dominance(&inst, &rm, &settings));
            }
            CheckArg::SpecialCases => {
                outcomes.push(check_fixed_price_case(&inst, &rm, &settings));
                outcomes.push(check_pricing_only_case(&inst, &rm, &settings));
            }
            CheckArg::Sandwich => {
                outcomes.push(check_sandwich(&inst, &rm, &settings));
            }
        }
    }

    let paths: Vec<Option<String>> = outcomes
        .iter()
        .map(|o| match (&o.counterexample, o.passed) {
            (Some(dump), false) => write_counterexample(&digest, &o.name, dump),
            _ => None,
        })
        .collect();
    let report = VerifyReport::from_outcomes(&outcomes, &paths, digest);
    let code = if report.passed { 0 } else { EXIT_CHECK_FAILED };
    if !report.passed {
        for line in report.checks.iter().filter(|c| !c.passed) {
            match &line.counterexample_path {
                Some(p) => eprintln!(
                    "error: check {} failed; counterexample written to {p}",
                    line.name
                ),
                None => eprintln!("error: check {} failed", line.name),
            }
        }
    }
    let printed = emit(a.out, &report, render::verify_text(&report));
    if printed != 0 {
        return printed;
    }
    code
}

/// Counterexample dumps go to the temp directory, keyed by instance
/// digest and check name so reruns overwrite rather than accumulate.
fn write_counterexample(digest: &str, check: &str, dump: &str) -> Option<String> {
    let short = digest.trim_start_matches("sha256:").get(..12)?;
    let path = std::env::temp_dir().join(format!("mcprice-{short}-{check}.txt"));
    match std::fs::write(&path, dump) {
        Ok(()) => Some(path.display().to_string()),
        Err(e) => {
            eprintln!("warning: could not write counterexample dump: {e}");
            None
        }
    }
}

fn emit<T: serde::Serialize>(out: OutArg, report: &T, text: String) -> i32 {
    match out {
        OutArg::Json => match serde_json::to_string_pretty(report) {
            Ok(s) => {
                println!("{s}");
                0
            }
            Err(e) => {
                eprintln!("error: cannot serialize report: {e}");
                EXIT_PARSE
            }
        },
        OutArg::Text => {
            print!("{text}");
            0
        }
    }
}
