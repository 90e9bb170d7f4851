//! Exhaustive price-grid optimization, independent of the conic path.
//!
//! Without resources the optimum is attained by a plain assortment, so we
//! enumerate all `2^n` assortments and grid-search prices inside each,
//! refining the best grid point (and 20 random multi-starts) by
//! coordinate ascent. With resources the optimum may need a mixture of
//! assortments: for every grid price vector the best mixture weights are
//! a linear program over the weight simplex, solved exactly by
//! enumerating its basic feasible points.

use crate::exec::{fold_range, Parallelism};
use crate::model::{
    choice_probabilities, expected_profit, solve_balance, Assortment, McInstance, ResourceModel,
};
use crate::oracle::OracleSettings;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Refinement multi-starts per assortment.
const MULTI_STARTS: usize = 20;
/// Evaluation budget per coordinate-ascent start.
const ASCENT_EVAL_BUDGET: usize = 20_000;
/// Step below which coordinate ascent stops.
const ASCENT_MIN_STEP: f64 = 1e-9;
/// Hard cap on grid points per assortment, a guard against misuse far
/// beyond the supported `n <= 3` full-grid scale.
const GRID_POINT_CAP: usize = 200_000_000;

/// Best objective found by exhaustive search, with its witness.
#[derive(Clone, Debug)]
pub struct OracleOptimum {
    /// Profit per unit time (scaled by the arrival rate).
    pub objective: f64,
    /// Witness prices (products outside every assortment sit at their
    /// lower bound).
    pub prices: Vec<f64>,
    /// Witness mixture; a single unit-weight assortment without resources.
    pub mixture: Vec<(Assortment, f64)>,
    /// True when refinement moved more than one grid cell, a hint that
    /// the grid undersamples the profit landscape.
    pub grid_too_coarse: bool,
}

/// A bound `L` on the gradient norm of the mixture profit in prices, so
/// the continuous optimum exceeds the best grid value by at most
/// `L * h` for grid step `h`.
///
/// Visit rates are maximized when nothing is sold, so `v <= v0`, the
/// balance solution with zero offer intensities. A sale at `j` perturbs
/// the flow by at most `beta_j Q_j(x_lower_j) v0_j` through the resolvent
/// mass `w_j = 1' (I - rho')^{-1} rho_j`, and margins are bounded by the
/// price box. Summing the per-coordinate bounds is safe for any
/// assortment or mixture because intensities only damp the flow.
pub fn price_lipschitz_bound(inst: &McInstance, lambda_bar: f64) -> f64 {
    let n = inst.n();
    let any_x = inst.x_lower().to_vec();
    let v0 = solve_balance(inst, &Assortment::empty(), &any_x);
    let lu = DMatrix::from_fn(n, n, |i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        base - inst.rho(j, i)
    })
    .lu();
    let margin_cap: Vec<f64> = (0..n)
        .map(|j| {
            f64::max(
                (inst.x_upper()[j] - inst.psi()[j]).abs(),
                (inst.x_lower()[j] - inst.psi()[j]).abs(),
            )
        })
        .collect();
    let margin_max = margin_cap.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut total = 0.0;
    for j in 0..n {
        let rho_j = DVector::from_fn(n, |i, _| inst.rho(j, i));
        let w_j = lu
            .solve(&rho_j)
            .expect("I - rho' is nonsingular for validated instances")
            .sum();
        let q_cap = inst.demand(j, inst.x_lower()[j]).min(1.0);
        total += q_cap * v0[j] * (1.0 + inst.beta()[j] * (margin_max * w_j + margin_cap[j]));
    }
    lambda_bar * total
}

/// Axis grids: point `i` of product `j` is `x_lower + i * h`, clamped so
/// the final point is exactly `x_upper` (endpoints inclusive).
struct Grid {
    h: f64,
    steps: Vec<usize>,
}

impl Grid {
    fn new(inst: &McInstance, free: &[usize], h: f64) -> Grid {
        let steps = free
            .iter()
            .map(|&j| {
                let width = inst.x_upper()[j] - inst.x_lower()[j];
                (width / h).ceil() as usize + 1
            })
            .collect();
        Grid { h, steps }
    }

    fn len(&self) -> usize {
        self.steps.iter().product::<usize>().max(1)
    }

    /// Decodes a flat index into prices, writing only the free products.
    fn decode(&self, inst: &McInstance, free: &[usize], mut flat: usize, x: &mut [f64]) {
        for (k, &j) in free.iter().enumerate() {
            let idx = flat % self.steps[k];
            flat /= self.steps[k];
            x[j] = (inst.x_lower()[j] + idx as f64 * self.h).min(inst.x_upper()[j]);
        }
    }
}

/// Max combiner on (value, flat index): ties break to the lowest index so
/// parallel and sequential folds agree exactly.
fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Hill climbing with shrinking steps from `x0`, over the `free`
/// coordinates, inside the price box. Returns the best value and point.
fn coordinate_ascent<F>(
    inst: &McInstance,
    free: &[usize],
    x0: Vec<f64>,
    step0: f64,
    eval: &F,
) -> (f64, Vec<f64>)
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = x0;
    let mut best = eval(&x);
    let mut step = step0;
    let mut evals = 0usize;
    while step > ASCENT_MIN_STEP && evals < ASCENT_EVAL_BUDGET {
        let mut improved = false;
        for &j in free {
            for dir in [1.0, -1.0] {
                let probe = (x[j] + dir * step).clamp(inst.x_lower()[j], inst.x_upper()[j]);
                if probe == x[j] {
                    continue;
                }
                let old = x[j];
                x[j] = probe;
                let value = eval(&x);
                evals += 1;
                if value > best {
                    best = value;
                    improved = true;
                } else {
                    x[j] = old;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, x)
}

/// Grid search plus multi-start refinement of `eval` over the `free`
/// price coordinates. Returns (value, prices, moved-more-than-one-cell).
pub(crate) fn optimize_prices<F>(
    inst: &McInstance,
    free: &[usize],
    h: f64,
    seed: u64,
    mode: Parallelism,
    eval: &F,
) -> (f64, Vec<f64>, bool)
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    let base: Vec<f64> = inst.x_lower().to_vec();
    if free.is_empty() {
        return (eval(&base), base, false);
    }
    let grid = Grid::new(inst, free, h);
    assert!(
        grid.len() <= GRID_POINT_CAP,
        "price grid of {} points exceeds the supported oracle scale",
        grid.len()
    );
    let (grid_best, grid_flat) = fold_range(
        mode,
        grid.len(),
        (f64::NEG_INFINITY, usize::MAX),
        |flat| {
            let mut x = base.clone();
            grid.decode(inst, free, flat, &mut x);
            (eval(&x), flat)
        },
        better,
    );
    let mut start = base.clone();
    grid.decode(inst, free, grid_flat, &mut start);

    let mut starts = vec![start.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MULTI_STARTS {
        let mut x = base.clone();
        for &j in free {
            x[j] = rng.gen_range(inst.x_lower()[j]..=inst.x_upper()[j]);
        }
        starts.push(x);
    }
    let refined = crate::exec::map_range(mode, starts.len(), |s| {
        coordinate_ascent(inst, free, starts[s].clone(), h, eval)
    });
    let mut best = (grid_best, start.clone());
    for (value, x) in refined {
        if value > best.0 {
            best = (value, x);
        }
    }
    let moved = free
        .iter()
        .any(|&j| (best.1[j] - start[j]).abs() > h * (1.0 + 1e-9));
    (best.0, best.1, moved)
}

/// Visits every `k`-element index subset of `0..total` in lexicographic
/// order.
fn for_each_k_subset(total: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > total {
        return;
    }
    if k == 0 {
        f(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + total - k {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Best mixture weights over all assortments at fixed prices: a linear
/// program in `2^n` weights on the simplex, cut by the bounded capacity
/// rows. Solved exactly by basis enumeration: an optimal vertex supports
/// at most `1 + #bounded` assortments (one per tight constraint), so all
/// candidate supports are solved as square systems and the best feasible
/// one wins. First-order solves were tried here first and crawl when a
/// grid price lands exactly where a capacity switches between binding and
/// slack. Returns (objective, weights by assortment mask).
pub(crate) fn mixture_lp(inst: &McInstance, rm: &ResourceModel, x: &[f64]) -> (f64, Vec<f64>) {
    let n = inst.n();
    assert!(
        n <= 6,
        "mixture weight enumeration works on 2^n assortments; {n} products is past desk scale"
    );
    let masks = 1usize << n;
    let lb = rm.lambda_bar();
    let bounded = rm.bounded_resources();
    let mut profit = vec![0.0; masks];
    let mut usage = vec![vec![0.0; masks]; bounded.len()];
    for mask in 0..masks {
        let a = Assortment::from_mask(mask as u64, n);
        let probs = choice_probabilities(inst, &a, x);
        profit[mask] = lb
            * (0..n)
                .map(|j| probs[j] * (x[j] - inst.psi()[j]))
                .sum::<f64>();
        for (k, &r) in bounded.iter().enumerate() {
            usage[k][mask] = lb * (0..n).map(|j| rm.phi(r, j) * probs[j]).sum::<f64>();
        }
    }
    let caps: Vec<f64> = bounded.iter().map(|&r| rm.capacity(r).unwrap()).collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    // Tight sets are subsets of the bounded rows; their count is tiny.
    for tight_mask in 0u32..(1 << caps.len()) {
        let tight: Vec<usize> = (0..caps.len())
            .filter(|k| tight_mask >> k & 1 == 1)
            .collect();
        let dim = tight.len() + 1;
        if dim > masks {
            continue;
        }
        for_each_k_subset(masks, dim, |support| {
            let system = DMatrix::from_fn(dim, dim, |r, c| {
                if r == 0 {
                    1.0
                } else {
                    usage[tight[r - 1]][support[c]]
                }
            });
            let rhs = DVector::from_fn(dim, |r, _| if r == 0 { 1.0 } else { caps[tight[r - 1]] });
            let Some(w) = system.lu().solve(&rhs) else {
                return;
            };
            if w.iter().any(|&wi| wi < -1e-10) {
                return;
            }
            for (k, &cap) in caps.iter().enumerate() {
                if tight.contains(&k) {
                    continue;
                }
                let used: f64 = support
                    .iter()
                    .zip(w.iter())
                    .map(|(&m, &wi)| usage[k][m] * wi)
                    .sum();
                if used > cap + 1e-9 * cap.abs().max(1.0) {
                    return;
                }
            }
            let value: f64 = support
                .iter()
                .zip(w.iter())
                .map(|(&m, &wi)| profit[m] * wi)
                .sum();
            // Strict improvement keeps the lexicographically first witness.
            if best.as_ref().is_none_or(|(v, _)| value > *v) {
                let mut weights = vec![0.0; masks];
                for (&m, &wi) in support.iter().zip(w.iter()) {
                    weights[m] = wi.max(0.0);
                }
                best = Some((value, weights));
            }
        });
    }
    // The empty assortment uses nothing, so its unit-weight vertex is
    // always feasible and `best` is always populated.
    best.expect("weight polytope has a feasible vertex")
}

/// Exhaustive optimum over assortments (or mixtures, with resources) and
/// gridded prices. Shares only the balance equations with the pipeline;
/// neither the conic solver nor the exponential-cone reformulation is
/// ever consulted.
pub fn enumerate_assortment_optimum(
    inst: &McInstance,
    rm: &ResourceModel,
    s: &OracleSettings,
) -> OracleOptimum {
    let n = inst.n();
    assert!(
        n <= s.assortment_cap,
        "oracle enumeration capped at {} products",
        s.assortment_cap
    );
    let with_resources = !rm.bounded_resources().is_empty();
    let h = s.grid_step_for(n, with_resources);

    if !with_resources {
        let mut best: Option<(f64, Vec<f64>, Assortment, bool)> = None;
        for mask in 0..(1usize << n) {
            let a = Assortment::from_mask(mask as u64, n);
            let free: Vec<usize> = a.iter().copied().collect();
            let eval = |x: &[f64]| expected_profit(inst, rm, &a, x);
            let (value, prices, moved) =
                optimize_prices(inst, &free, h, s.seed ^ mask as u64, s.parallelism, &eval);
            let replace = match &best {
                None => true,
                Some((v, ..)) => value > *v,
            };
            if replace {
                best = Some((value, prices, a, moved));
            }
        }
        let (objective, prices, assortment, moved) = best.unwrap();
        return OracleOptimum {
            objective,
            prices,
            mixture: vec![(assortment, 1.0)],
            grid_too_coarse: moved,
        };
    }

    let free: Vec<usize> = (0..n).collect();
    let eval = |x: &[f64]| mixture_lp(inst, rm, x).0;
    let (objective, prices, moved) =
        optimize_prices(inst, &free, h, s.seed, s.parallelism, &eval);
    let (_, weights) = mixture_lp(inst, rm, &prices);
    let mixture: Vec<(Assortment, f64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 1e-9)
        .map(|(m, &w)| (Assortment::from_mask(m as u64, n), w))
        .collect();
    OracleOptimum {
        objective,
        prices,
        mixture,
        grid_too_coarse: moved,
    }
}
