//! Balance equations: expected visit rates per product and the quantities
//! derived from them (choice probabilities, profit, resource usage).
//!
//! With offer intensities `a` in `[0,1]^J` and prices `x`, the visit rates
//! `v` solve
//!
//! ```text
//! v_j = theta_j + sum_i (1 - a_i * Q_i(x_i)) * rho_ij * v_i
//! ```
//!
//! i.e. `(I - B') v = theta` where `B = rho` with row `i` damped by the
//! purchase probability `a_i * Q_i(x_i)` and `'` is the transpose. The
//! validated spectral bound on `rho` makes `I - B'` nonsingular, so the
//! dense LU solve below always succeeds.

use super::{Assortment, McInstance, ResourceModel};
use nalgebra::{DMatrix, DVector};

/// Dense solves stay exact and fast up to this size; beyond it the balance
/// system is solved by damped fixed-point iteration instead.
const DENSE_LIMIT: usize = 512;

/// Visit rates for fractional offer intensities `a` (the time-average
/// relaxation). `a[j]` must lie in `[0, 1]`; prices `x` are only read for
/// products with `a[j] > 0`.
pub fn intensity_balance(inst: &McInstance, a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = inst.n();
    assert_eq!(a.len(), n);
    assert_eq!(x.len(), n);
    let damp: Vec<f64> = (0..n).map(|i| 1.0 - a[i] * inst.demand(i, x[i])).collect();
    if n <= DENSE_LIMIT {
        // M[j,i] = delta_ji - damp_i * rho_ij
        let m = DMatrix::from_fn(n, n, |j, i| {
            let d = if i == j { 1.0 } else { 0.0 };
            d - damp[i] * inst.rho(i, j)
        });
        let rhs = DVector::from_column_slice(inst.theta());
        let lu = m.lu();
        let v = lu.solve(&rhs).expect("balance system is nonsingular for validated instances");
        v.iter().copied().collect()
    } else {
        balance_fixed_point(inst, a, x, 1e-14, 2_000_000)
    }
}

/// Visit rates when exactly the products in `assortment` are offered.
pub fn solve_balance(inst: &McInstance, assortment: &Assortment, x: &[f64]) -> Vec<f64> {
    intensity_balance(inst, &assortment.indicator(inst.n()), x)
}

/// Fixed-point iteration `v <- theta + B' v`, used as an independent
/// cross-check of the dense solve and as the large-instance fallback.
/// Stops when the sweep changes no component by more than `tol`.
pub fn balance_fixed_point(
    inst: &McInstance,
    a: &[f64],
    x: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Vec<f64> {
    let n = inst.n();
    let damp: Vec<f64> = (0..n).map(|i| 1.0 - a[i] * inst.demand(i, x[i])).collect();
    let mut v = inst.theta().to_vec();
    let mut next = vec![0.0; n];
    for _ in 0..max_sweeps {
        for j in 0..n {
            let mut acc = inst.theta()[j];
            for i in 0..n {
                acc += damp[i] * inst.rho(i, j) * v[i];
            }
            next[j] = acc;
        }
        let delta = v
            .iter()
            .zip(&next)
            .map(|(old, new)| (old - new).abs())
            .fold(0.0f64, f64::max);
        std::mem::swap(&mut v, &mut next);
        if delta <= tol {
            break;
        }
    }
    v
}

/// Max-norm residual of the intensity balance equations at `(v, x, a)`.
pub fn intensity_balance_residual(inst: &McInstance, v: &[f64], x: &[f64], a: &[f64]) -> f64 {
    let n = inst.n();
    let mut worst = 0.0f64;
    for j in 0..n {
        let mut acc = inst.theta()[j];
        for i in 0..n {
            acc += (1.0 - a[i] * inst.demand(i, x[i])) * inst.rho(i, j) * v[i];
        }
        worst = worst.max((v[j] - acc).abs());
    }
    worst
}

/// Max-norm residual of the balance equations for a plain assortment.
pub fn balance_residual(inst: &McInstance, assortment: &Assortment, x: &[f64], v: &[f64]) -> f64 {
    intensity_balance_residual(inst, v, x, &assortment.indicator(inst.n()))
}

/// Purchase probabilities `P_j = 1(j in A) * Q_j(x_j) * v_j` per arriving
/// customer.
pub fn choice_probabilities(inst: &McInstance, assortment: &Assortment, x: &[f64]) -> Vec<f64> {
    let v = solve_balance(inst, assortment, x);
    (0..inst.n())
        .map(|j| if assortment.contains(j) { inst.demand(j, x[j]) * v[j] } else { 0.0 })
        .collect()
}

/// Expected profit per unit time when offering `assortment` at prices `x`:
/// `lambda_bar * sum_j (x_j - psi_j) * P_j`.
pub fn expected_profit(
    inst: &McInstance,
    resources: &ResourceModel,
    assortment: &Assortment,
    x: &[f64],
) -> f64 {
    let p = choice_probabilities(inst, assortment, x);
    let per_arrival: f64 = (0..inst.n()).map(|j| (x[j] - inst.psi()[j]) * p[j]).sum();
    resources.lambda_bar() * per_arrival
}

/// Resource consumption per unit time, one entry per resource:
/// `lambda_bar * sum_j phi_rj * P_j`.
pub fn resource_usage(
    inst: &McInstance,
    resources: &ResourceModel,
    assortment: &Assortment,
    x: &[f64],
) -> Vec<f64> {
    let p = choice_probabilities(inst, assortment, x);
    usage_of_probabilities(resources, &p)
}

/// Profit per unit time of a fractional decision `(v, x, a)`:
/// `lambda_bar * sum_j (x_j - psi_j) * a_j * Q_j(x_j) * v_j`.
pub fn intensity_profit(
    inst: &McInstance,
    lambda_bar: f64,
    v: &[f64],
    x: &[f64],
    a: &[f64],
) -> f64 {
    let per_arrival: f64 = (0..inst.n())
        .map(|j| (x[j] - inst.psi()[j]) * a[j] * inst.demand(j, x[j]) * v[j])
        .sum();
    lambda_bar * per_arrival
}

/// Resource consumption per unit time of a fractional decision.
pub fn intensity_resource_usage(
    inst: &McInstance,
    resources: &ResourceModel,
    v: &[f64],
    x: &[f64],
    a: &[f64],
) -> Vec<f64> {
    let p: Vec<f64> = (0..inst.n()).map(|j| a[j] * inst.demand(j, x[j]) * v[j]).collect();
    usage_of_probabilities(resources, &p)
}

fn usage_of_probabilities(resources: &ResourceModel, p: &[f64]) -> Vec<f64> {
    (0..resources.n_resources())
        .map(|r| {
            let row = resources.phi_row(r);
            resources.lambda_bar() * row.iter().zip(p).map(|(phi, pj)| phi * pj).sum::<f64>()
        })
        .collect()
}
