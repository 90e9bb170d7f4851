//! Independent brute-force verification of the conic pipeline.
//!
//! Everything here certifies pipeline outputs without touching the
//! exponential-cone path: profits are evaluated directly through the
//! balance equations, optima are found by exhaustive price grids with
//! multi-start refinement (plus a linear program over mixture weights when
//! resources bind), and choice probabilities are replayed by Monte Carlo
//! simulation of the underlying chain.

mod checks;
mod generate;
mod grid;
mod simulate;

pub use checks::{
    check_fixed_price_case, check_integrality, check_pricing_only_case, check_sandwich,
    two_price_schedule_value, verify_constant_price_dominance, CheckOutcome, ScheduleSample,
};
pub use generate::{perturb_instance, random_instance, random_resources};
pub use grid::{enumerate_assortment_optimum, price_lipschitz_bound, OracleOptimum};
pub use simulate::simulate_choice_frequencies;

use crate::exec::Parallelism;

/// Knobs for the oracle suite. Defaults keep every check at desk scale.
#[derive(Clone, Debug)]
pub struct OracleSettings {
    /// Price grid step; `None` picks a per-size default
    /// ([`OracleSettings::grid_step_for`]).
    pub price_step: Option<f64>,
    /// Largest product count for which `2^n` assortments are enumerated.
    pub assortment_cap: usize,
    /// Monte Carlo sample count for choice-frequency checks.
    pub mc_samples: u64,
    /// Number of random schedules sampled per dominance check.
    pub schedule_samples: usize,
    /// Seed for every randomized component; same seed, same verdicts.
    pub seed: u64,
    /// Execution mode for trial fan-out.
    pub parallelism: Parallelism,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            price_step: None,
            assortment_cap: 12,
            mc_samples: 1_000_000,
            schedule_samples: 500,
            seed: 0,
            parallelism: Parallelism::default(),
        }
    }
}

impl OracleSettings {
    /// Grid step used for `n` products: fine grids are affordable only in
    /// very low dimension. With resources every grid point costs a linear
    /// program, so those grids are coarser.
    pub fn grid_step_for(&self, n: usize, with_resources: bool) -> f64 {
        if let Some(h) = self.price_step {
            return h;
        }
        match (with_resources, n) {
            (false, 0..=2) => 1e-3,
            (false, _) => 1e-2,
            (true, 0..=2) => 0.05,
            (true, _) => 0.1,
        }
    }
}
