//! Command-line surface. Every flag can also be set through an
//! `MCPRICE_*` environment variable; explicit flags win.

use clap::{Parser, Subcommand, ValueEnum};
use mcprice::pipeline::SolveMode;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "mcprice",
    about = "Joint price and assortment optimization for Markov chain demand",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance file and print a solution report.
    Solve(SolveArgs),
    /// Re-check a solved instance against independent oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Parser)]
pub struct SolveArgs {
    /// Instance file (versioned JSON).
    pub instance: PathBuf,

    /// Which program to compile and solve.
    #[arg(long, value_enum, default_value_t = ModeArg::Network, env = "MCPRICE_MODE")]
    pub mode: ModeArg,

    /// Solver convergence tolerance.
    #[arg(long, default_value_t = 1e-8, env = "MCPRICE_TOL")]
    pub tol: f64,

    /// Solver iteration budget.
    #[arg(long, default_value_t = 200_000, env = "MCPRICE_MAX_ITERS")]
    pub max_iters: u64,

    /// Seed for tie-breaking and diagnostics.
    #[arg(long, default_value_t = 0, env = "MCPRICE_SEED")]
    pub seed: u64,

    /// Report format.
    #[arg(long, value_enum, default_value_t = OutArg::Json, env = "MCPRICE_OUT")]
    pub out: OutArg,

    /// Print the compiled conic program instead of solving it.
    #[arg(long, default_value_t = false)]
    pub dump_program: bool,
}

#[derive(Debug, Parser)]
pub struct VerifyArgs {
    /// Instance file (versioned JSON).
    pub instance: PathBuf,

    /// Comma-separated subset of checks to run. Defaults to all of:
    /// integrality, dominance, special-cases, sandwich.
    #[arg(long, value_delimiter = ',', env = "MCPRICE_CHECKS")]
    pub checks: Option<Vec<CheckArg>>,

    /// Grid step for enumeration oracles. Defaults to a size-based choice.
    #[arg(long, env = "MCPRICE_GRID_STEP")]
    pub grid_step: Option<f64>,

    /// Seed for instance perturbation and schedule sampling.
    #[arg(long, default_value_t = 0, env = "MCPRICE_SEED")]
    pub seed: u64,

    /// Report format.
    #[arg(long, value_enum, default_value_t = OutArg::Json, env = "MCPRICE_OUT")]
    pub out: OutArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Resource-constrained rate optimization with mixture recovery.
    Network,
    /// Per-arrival optimization, resources tracked but not enforced.
    Static,
    /// Prices only; every product stays on offer.
    PricingOnly,
    /// Assortment only; prices are pinned by equal bounds.
    FixedPrice,
}

impl ModeArg {
    pub fn to_mode(self) -> SolveMode {
        match self {
            ModeArg::Network => SolveMode::Network,
            ModeArg::Static => SolveMode::Static,
            ModeArg::PricingOnly => SolveMode::PricingOnly,
            ModeArg::FixedPrice => SolveMode::FixedPrice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutArg {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    /// Unconstrained solutions must land on a 0/1 assortment.
    Integrality,
    /// Sampled feasible schedules must not beat the reported optimum.
    Dominance,
    /// Fixed-price and pricing-only modes match direct enumeration.
    SpecialCases,
    /// The solved objective is sandwiched by a grid enumeration bound.
    Sandwich,
}

impl CheckArg {
    pub fn name(self) -> &'static str {
        match self {
            CheckArg::Integrality => "integrality",
            CheckArg::Dominance => "dominance",
            CheckArg::SpecialCases => "special-cases",
            CheckArg::Sandwich => "sandwich",
        }
    }

    pub const ALL: [CheckArg; 4] = [
        CheckArg::Integrality,
        CheckArg::Dominance,
        CheckArg::SpecialCases,
        CheckArg::Sandwich,
    ];

    /// Largest product count each check accepts. Enumeration cost grows
    /// exponentially (assortments) or geometrically (price grids), so
    /// anything bigger is refused instead of silently running for hours.
    pub fn max_products(self) -> usize {
        match self {
            CheckArg::Integrality => 12,
            CheckArg::Dominance => 4,
            CheckArg::SpecialCases => 4,
            CheckArg::Sandwich => 3,
        }
    }
}
