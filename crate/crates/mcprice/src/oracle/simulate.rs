//! Monte Carlo replay of the purchase chain.
//!
//! Samples customers through the literal process: arrive at a product by
//! `theta`, buy an offered product with probability `Q_j(x_j)`, otherwise
//! transition by the `rho` row or leave. Sampling is chunked with one
//! seeded generator per chunk, so results are byte-identical across
//! sequential and parallel execution.

use crate::exec::{map_range, Parallelism};
use crate::model::{Assortment, McInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Samples per independently seeded chunk.
const CHUNK: u64 = 65_536;
/// Hop guard; validated instances terminate almost surely long before.
const MAX_HOPS: usize = 10_000;

/// Fraction of customers that end up purchasing each product.
///
/// Deterministic in `(seed, samples)` and independent of the parallelism
/// mode: chunk `c` always runs on its own generator seeded from
/// `seed + c * golden_ratio`.
pub fn simulate_choice_frequencies(
    inst: &McInstance,
    assortment: &Assortment,
    x: &[f64],
    samples: u64,
    seed: u64,
    mode: Parallelism,
) -> Vec<f64> {
    let n = inst.n();
    let buy_prob: Vec<f64> = (0..n)
        .map(|j| {
            if assortment.contains(j) {
                inst.demand(j, x[j])
            } else {
                0.0
            }
        })
        .collect();
    let theta_cdf = cumulative(inst.theta());
    let rho_cdf: Vec<Vec<f64>> = (0..n).map(|i| cumulative(inst.rho_row(i))).collect();

    let chunks = samples.div_ceil(CHUNK) as usize;
    let counts = map_range(mode, chunks, |c| {
        let lo = c as u64 * CHUNK;
        let size = CHUNK.min(samples - lo);
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.wrapping_add((c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let mut count = vec![0u64; n];
        for _ in 0..size {
            if let Some(j) = sample_purchase(&mut rng, &theta_cdf, &rho_cdf, &buy_prob) {
                count[j] += 1;
            }
        }
        count
    });
    let mut total = vec![0u64; n];
    for c in counts {
        for j in 0..n {
            total[j] += c[j];
        }
    }
    total.into_iter().map(|c| c as f64 / samples as f64).collect()
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    row.iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect()
}

/// One customer: returns the purchased product, or `None` on exit.
fn sample_purchase(
    rng: &mut ChaCha8Rng,
    theta_cdf: &[f64],
    rho_cdf: &[Vec<f64>],
    buy_prob: &[f64],
) -> Option<usize> {
    let mut j = match pick(rng, theta_cdf) {
        Some(j) => j,
        // theta sums to 1; a draw beyond the cdf is a fp edge, treat as exit.
        None => return None,
    };
    for _ in 0..MAX_HOPS {
        if buy_prob[j] > 0.0 && rng.gen_range(0.0..1.0f64) < buy_prob[j] {
            return Some(j);
        }
        match pick(rng, &rho_cdf[j]) {
            Some(next) => j = next,
            None => return None,
        }
    }
    None
}

/// Index of the first cdf entry above a fresh uniform draw, `None` when
/// the draw lands in the remaining exit mass.
fn pick(rng: &mut ChaCha8Rng, cdf: &[f64]) -> Option<usize> {
    let u = rng.gen_range(0.0..1.0f64);
    cdf.iter().position(|&c| u < c)
}
