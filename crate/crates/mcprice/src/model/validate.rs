//! Structural validation. Every rule is checked and all violations are
//! collected, so a report names everything wrong with the data at once.

use super::{McInstance, ResourceModel, UncheckedInstance, UncheckedResources};
use thiserror::Error;

/// Deviation of `sum(theta)` from 1 accepted and silently renormalized.
pub const THETA_SUM_TOL: f64 = 1e-9;
/// Slack allowed on transition row sums before rejection.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Slack allowed on `alpha_j - beta_j * x_lower_j <= 0`.
pub const DEMAND_BOUND_TOL: f64 = 1e-12;
/// Spectral radius of `rho` must certify below `1 - SPECTRAL_MARGIN`.
pub const SPECTRAL_MARGIN: f64 = 1e-9;

/// One broken rule, with enough context to locate the offending entry.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Violation {
    #[error("no products: instance must have n >= 1")]
    NoProducts,
    #[error("dimension mismatch: {field} has length {got}, expected {expected}")]
    DimensionMismatch { field: &'static str, expected: usize, got: usize },
    #[error("nonfinite entry: {field}[{index}] = {value}")]
    NonFinite { field: &'static str, index: usize, value: f64 },
    #[error("negative entry: {field}[{index}] = {value}")]
    NegativeEntry { field: &'static str, index: usize, value: f64 },
    #[error("theta normalization: sum(theta) = {sum} deviates from 1 by more than {THETA_SUM_TOL:e}")]
    ThetaNormalization { sum: f64 },
    #[error("rho row sum: row {row} sums to {sum}, above 1 + {ROW_SUM_TOL:e}")]
    RhoRowSum { row: usize, sum: f64 },
    #[error("neumann divergence: spectral radius estimate {estimate} of rho is not below 1 - {SPECTRAL_MARGIN:e}")]
    NeumannDivergence { estimate: f64 },
    #[error("beta positivity: beta[{index}] = {value} must be > 0")]
    BetaNonPositive { index: usize, value: f64 },
    #[error("price bounds: x_lower[{index}] = {lower} exceeds x_upper[{index}] = {upper}")]
    PriceBoundsInverted { index: usize, lower: f64, upper: f64 },
    #[error("demand bound: alpha[{index}] - beta[{index}] * x_lower[{index}] = {excess} must be <= 0, so Q stays <= 1 on the price box")]
    DemandAboveOne { index: usize, excess: f64 },
    #[error("lambda_bar positivity: lambda_bar = {value} must be > 0")]
    LambdaBarNonPositive { value: f64 },
}

/// All violations found in one pass over the data.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("validation failed with {} violation(s):{}", .violations.len(), .violations.iter().map(|v| format!("\n  - {v}")).collect::<String>())]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

/// Checks every structural rule of the choice model and returns a usable
/// instance, with `theta` renormalized to sum exactly to 1.
pub fn validate_instance(raw: &UncheckedInstance) -> Result<McInstance, ValidationReport> {
    let mut violations = Vec::new();
    let n = raw.n;
    if n == 0 {
        violations.push(Violation::NoProducts);
        return Err(ValidationReport { violations });
    }

    check_len(&mut violations, "theta", raw.theta.len(), n);
    check_len(&mut violations, "rho", raw.rho.len(), n * n);
    check_len(&mut violations, "alpha", raw.alpha.len(), n);
    check_len(&mut violations, "beta", raw.beta.len(), n);
    check_len(&mut violations, "psi", raw.psi.len(), n);
    check_len(&mut violations, "x_lower", raw.x_lower.len(), n);
    check_len(&mut violations, "x_upper", raw.x_upper.len(), n);
    if !violations.is_empty() {
        return Err(ValidationReport { violations });
    }

    check_finite(&mut violations, "theta", &raw.theta);
    check_finite(&mut violations, "rho", &raw.rho);
    check_finite(&mut violations, "alpha", &raw.alpha);
    check_finite(&mut violations, "beta", &raw.beta);
    check_finite(&mut violations, "psi", &raw.psi);
    check_finite(&mut violations, "x_lower", &raw.x_lower);
    check_finite(&mut violations, "x_upper", &raw.x_upper);
    if !violations.is_empty() {
        return Err(ValidationReport { violations });
    }

    check_nonnegative(&mut violations, "theta", &raw.theta);
    check_nonnegative(&mut violations, "rho", &raw.rho);

    let theta_sum: f64 = raw.theta.iter().sum();
    if (theta_sum - 1.0).abs() > THETA_SUM_TOL {
        violations.push(Violation::ThetaNormalization { sum: theta_sum });
    }

    for i in 0..n {
        let row_sum: f64 = raw.rho[i * n..(i + 1) * n].iter().sum();
        if row_sum > 1.0 + ROW_SUM_TOL {
            violations.push(Violation::RhoRowSum { row: i, sum: row_sum });
        }
    }

    if let Err(estimate) = certify_substochastic(n, &raw.rho) {
        violations.push(Violation::NeumannDivergence { estimate });
    }

    for j in 0..n {
        if raw.beta[j] <= 0.0 {
            violations.push(Violation::BetaNonPositive { index: j, value: raw.beta[j] });
        }
        if raw.x_lower[j] > raw.x_upper[j] {
            violations.push(Violation::PriceBoundsInverted {
                index: j,
                lower: raw.x_lower[j],
                upper: raw.x_upper[j],
            });
        }
        if raw.beta[j] > 0.0 {
            let excess = raw.alpha[j] - raw.beta[j] * raw.x_lower[j];
            if excess > DEMAND_BOUND_TOL {
                violations.push(Violation::DemandAboveOne { index: j, excess });
            }
        }
    }

    if !violations.is_empty() {
        return Err(ValidationReport { violations });
    }

    let mut theta = raw.theta.clone();
    for t in &mut theta {
        *t /= theta_sum;
    }
    Ok(McInstance {
        n,
        theta,
        rho: raw.rho.clone(),
        alpha: raw.alpha.clone(),
        beta: raw.beta.clone(),
        psi: raw.psi.clone(),
        x_lower: raw.x_lower.clone(),
        x_upper: raw.x_upper.clone(),
    })
}

/// Checks the resource data against the product count of the instance.
pub fn validate_resources(raw: &UncheckedResources) -> Result<ResourceModel, ValidationReport> {
    let mut violations = Vec::new();
    let r = raw.n_resources;
    let n = raw.n_products;

    check_len(&mut violations, "phi", raw.phi.len(), r * n);
    check_len(&mut violations, "capacity", raw.capacity.len(), r);
    if !violations.is_empty() {
        return Err(ValidationReport { violations });
    }

    check_finite(&mut violations, "phi", &raw.phi);
    check_nonnegative(&mut violations, "phi", &raw.phi);
    for (idx, cap) in raw.capacity.iter().enumerate() {
        if let Some(c) = cap {
            if !c.is_finite() {
                violations.push(Violation::NonFinite { field: "capacity", index: idx, value: *c });
            } else if *c < 0.0 {
                violations.push(Violation::NegativeEntry {
                    field: "capacity",
                    index: idx,
                    value: *c,
                });
            }
        }
    }
    if !raw.lambda_bar.is_finite() || raw.lambda_bar <= 0.0 {
        violations.push(Violation::LambdaBarNonPositive { value: raw.lambda_bar });
    }

    if !violations.is_empty() {
        return Err(ValidationReport { violations });
    }
    Ok(ResourceModel {
        n_resources: r,
        n_products: n,
        phi: raw.phi.clone(),
        capacity: raw.capacity.clone(),
        lambda_bar: raw.lambda_bar,
    })
}

fn check_len(
    violations: &mut Vec<Violation>,
    field: &'static str,
    got: usize,
    expected: usize,
) {
    if got != expected {
        violations.push(Violation::DimensionMismatch { field, expected, got });
    }
}

fn check_finite(violations: &mut Vec<Violation>, field: &'static str, values: &[f64]) {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            violations.push(Violation::NonFinite { field, index, value });
        }
    }
}

fn check_nonnegative(violations: &mut Vec<Violation>, field: &'static str, values: &[f64]) {
    for (index, &value) in values.iter().enumerate() {
        if value < 0.0 {
            violations.push(Violation::NegativeEntry { field, index, value });
        }
    }
}

/// Certifies that the spectral radius of `rho` is below `1 - SPECTRAL_MARGIN`,
/// so the Neumann series of the balance equations converges.
///
/// Fast path: if every row sum is already below the threshold the radius is
/// too. Otherwise a power iteration of `10 * n` normalized steps estimates
/// the radius as the geometric mean growth rate; `Err` carries the estimate
/// when it is not certifiably below the threshold.
fn certify_substochastic(n: usize, rho: &[f64]) -> Result<(), f64> {
    let threshold = 1.0 - SPECTRAL_MARGIN;
    let max_row_sum = (0..n)
        .map(|i| rho[i * n..(i + 1) * n].iter().sum::<f64>())
        .fold(0.0f64, f64::max);
    if max_row_sum <= threshold {
        return Ok(());
    }

    let steps = (10 * n).max(10);
    let mut w = vec![1.0 / (n as f64).sqrt(); n];
    let mut log_growth = 0.0f64;
    for _ in 0..steps {
        // w <- rho^T w; the radius of rho^T equals the radius of rho.
        let mut next = vec![0.0; n];
        for i in 0..n {
            let wi = w[i];
            if wi != 0.0 {
                for j in 0..n {
                    next[j] += rho[i * n + j] * wi;
                }
            }
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(());
        }
        log_growth += norm.ln();
        for x in &mut next {
            *x /= norm;
        }
        w = next;
    }
    let estimate = (log_growth / steps as f64).exp();
    if estimate < threshold {
        Ok(())
    } else {
        Err(estimate)
    }
}
