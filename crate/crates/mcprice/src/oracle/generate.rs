//! Random instance and resource generators for property runs.
//!
//! Every draw is valid by construction: theta is a normalized positive
//! vector, each rho row is scaled to a sum strictly below one, and alpha
//! is anchored at `beta * x_lower` minus nonnegative noise so the demand
//! bound `Q_j(x_lower_j) <= 1` always holds.

use crate::conic::{solve, SolverSettings};
use crate::model::{
    validate_instance, validate_resources, McInstance, ResourceModel, UncheckedInstance,
    UncheckedResources,
};
use crate::recovery::recover_decision;
use crate::reformulate::build_network_program;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Positive weights summing to one (unit-rate exponential draws,
/// normalized).
pub(crate) fn simplex_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n)
        .map(|_| -(rng.gen_range(1e-12..1.0f64)).ln())
        .collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|g| g / total).collect()
}

/// Draws a validated instance with `n` products.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize) -> McInstance {
    let theta = simplex_point(rng, n);
    let mut rho = vec![0.0; n * n];
    for i in 0..n {
        if n > 1 {
            let row_sum = rng.gen_range(0.0..0.9);
            let weights = simplex_point(rng, n - 1);
            let mut w = weights.into_iter();
            for j in 0..n {
                if j != i {
                    rho[i * n + j] = row_sum * w.next().unwrap();
                }
            }
        }
    }
    let noise = Normal::new(0.0f64, 0.3).unwrap();
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut psi = vec![0.0; n];
    let mut x_lower = vec![0.0; n];
    let mut x_upper = vec![0.0; n];
    for j in 0..n {
        beta[j] = rng.gen_range(0.5..2.0);
        x_lower[j] = rng.gen_range(0.5..1.5);
        x_upper[j] = x_lower[j] + rng.gen_range(0.5..1.5);
        alpha[j] = beta[j] * x_lower[j] - noise.sample(rng).abs();
        psi[j] = (x_lower[j] - rng.gen_range(0.1..0.6)).max(0.0);
    }
    validate_instance(&UncheckedInstance {
        n,
        theta,
        rho,
        alpha,
        beta,
        psi,
        x_lower,
        x_upper,
    })
    .expect("generated instances are valid by construction")
}

/// Nudges every parameter of `inst` while preserving validity.
pub fn perturb_instance<R: Rng>(rng: &mut R, inst: &McInstance) -> McInstance {
    let n = inst.n();
    let mut theta: Vec<f64> = (0..n)
        .map(|j| inst.theta()[j] * rng.gen_range(0.5..1.5))
        .collect();
    let total: f64 = theta.iter().sum();
    for t in &mut theta {
        *t /= total;
    }
    let mut rho = vec![0.0; n * n];
    for i in 0..n {
        let scale = rng.gen_range(0.5..1.0);
        for j in 0..n {
            rho[i * n + j] = inst.rho(i, j) * scale;
        }
    }
    let noise = Normal::new(0.0f64, 0.3).unwrap();
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut psi = vec![0.0; n];
    let mut x_lower = vec![0.0; n];
    let mut x_upper = vec![0.0; n];
    for j in 0..n {
        beta[j] = inst.beta()[j] * rng.gen_range(0.8..1.25);
        x_lower[j] = inst.x_lower()[j] * rng.gen_range(0.9..1.1);
        let width = (inst.x_upper()[j] - inst.x_lower()[j]) * rng.gen_range(0.8..1.2);
        x_upper[j] = x_lower[j] + width.max(0.1);
        alpha[j] = beta[j] * x_lower[j] - noise.sample(rng).abs();
        psi[j] = (x_lower[j] - rng.gen_range(0.1..0.6)).max(0.0);
    }
    validate_instance(&UncheckedInstance {
        n,
        theta,
        rho,
        alpha,
        beta,
        psi,
        x_lower,
        x_upper,
    })
    .expect("perturbed instances are valid by construction")
}

/// Draws a resource model whose capacities are a random fraction of the
/// unconstrained optimum's usage, so they usually bind.
pub fn random_resources<R: Rng>(
    rng: &mut R,
    inst: &McInstance,
    n_resources: usize,
) -> ResourceModel {
    let n = inst.n();
    let lambda_bar = rng.gen_range(0.5..2.0);
    let phi: Vec<f64> = (0..n_resources * n)
        .map(|_| rng.gen_range(0.2..1.0))
        .collect();
    let unconstrained = validate_resources(&UncheckedResources {
        n_resources,
        n_products: n,
        phi: phi.clone(),
        capacity: vec![None; n_resources],
        lambda_bar,
    })
    .unwrap();

    let (prog, vm) = build_network_program(inst, &unconstrained);
    let sol = solve(&prog, &SolverSettings::default());
    let dec = recover_decision(&sol, &vm, inst).expect("unconstrained solve is recoverable");
    let capacity: Vec<Option<f64>> = (0..n_resources)
        .map(|r| {
            let usage: f64 = (0..n)
                .map(|j| {
                    lambda_bar
                        * unconstrained.phi(r, j)
                        * dec.intensities[j]
                        * inst.demand(j, dec.prices[j])
                        * dec.visit_rates[j]
                })
                .sum();
            Some((usage * rng.gen_range(0.2..0.8)).max(1e-3))
        })
        .collect();
    validate_resources(&UncheckedResources {
        n_resources,
        n_products: n,
        phi,
        capacity,
        lambda_bar,
    })
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_instances_are_valid_across_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=6 {
            for _ in 0..20 {
                let inst = random_instance(&mut rng, n);
                assert_eq!(inst.n(), n);
                for j in 0..n {
                    assert!(inst.demand(j, inst.x_lower()[j]) <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn perturbation_preserves_validity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let base = random_instance(&mut rng, 3);
        for _ in 0..50 {
            let inst = perturb_instance(&mut rng, &base);
            assert_eq!(inst.n(), 3);
        }
    }

    #[test]
    fn generated_capacities_are_positive_and_usually_bind() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inst = random_instance(&mut rng, 2);
        let rm = random_resources(&mut rng, &inst, 2);
        for r in 0..2 {
            let cap = rm.capacity(r).unwrap();
            assert!(cap > 0.0);
        }
        assert_eq!(rm.bounded_resources(), vec![0, 1]);
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let a = random_instance(&mut ChaCha8Rng::seed_from_u64(42), 3);
        let b = random_instance(&mut ChaCha8Rng::seed_from_u64(42), 3);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
