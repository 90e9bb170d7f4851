//! Market data and the balance equations of the Markov chain choice model.
//!
//! An instance holds, per product `j`: arrival probability `theta_j`,
//! transition row `rho_j.` (probability of moving from `j` to each other
//! product after not buying), demand parameters `alpha_j`, `beta_j` of
//! `Q_j(x) = exp(alpha_j - beta_j x)`, unit cost `psi_j`, and a price box
//! `[x_lower_j, x_upper_j]`.
//!
//! Instances are built by [`validate_instance`], which checks every
//! structural rule once; all downstream code trusts a [`McInstance`].

mod balance;
mod validate;

pub use validate::{validate_instance, validate_resources, ValidationReport, Violation};

use serde::{Deserialize, Serialize};

/// Raw, unchecked market data. Field-for-field what a caller supplies;
/// [`validate_instance`] turns it into a usable [`McInstance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncheckedInstance {
    /// Number of products `J`.
    pub n: usize,
    /// Arrival probabilities, length `J`, nonnegative, summing to 1.
    pub theta: Vec<f64>,
    /// Transition matrix, row-major `J * J`; `rho[i * J + j]` is the
    /// probability of moving from `i` to `j` after not purchasing at `i`.
    pub rho: Vec<f64>,
    /// Demand intercepts, length `J`.
    pub alpha: Vec<f64>,
    /// Demand slopes, length `J`, strictly positive.
    pub beta: Vec<f64>,
    /// Unit costs, length `J`.
    pub psi: Vec<f64>,
    /// Lower price bounds, length `J`.
    pub x_lower: Vec<f64>,
    /// Upper price bounds, length `J`.
    pub x_upper: Vec<f64>,
}

/// A validated market. Construction only via [`validate_instance`];
/// `theta` is stored renormalized to sum exactly to 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McInstance {
    n: usize,
    theta: Vec<f64>,
    rho: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    psi: Vec<f64>,
    x_lower: Vec<f64>,
    x_upper: Vec<f64>,
}

impl McInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn x_lower(&self) -> &[f64] {
        &self.x_lower
    }

    pub fn x_upper(&self) -> &[f64] {
        &self.x_upper
    }

    /// Transition probability from product `i` to product `j`.
    pub fn rho(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.n + j]
    }

    /// Row `i` of the transition matrix (transitions out of `i`).
    pub fn rho_row(&self, i: usize) -> &[f64] {
        &self.rho[i * self.n..(i + 1) * self.n]
    }

    /// Purchase probability `Q_j(x) = exp(alpha_j - beta_j x)` at price `x`.
    pub fn demand(&self, j: usize, x: f64) -> f64 {
        (self.alpha[j] - self.beta[j] * x).exp()
    }

    /// The price that exactly attains demand `q` for product `j`,
    /// `x = (alpha_j - ln q) / beta_j`.
    pub fn inverse_demand(&self, j: usize, q: f64) -> f64 {
        (self.alpha[j] - q.ln()) / self.beta[j]
    }
}

/// Resource side of a network revenue management market: consumption
/// rates, capacities per unit time, and the arrival rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResourceModel {
    n_resources: usize,
    n_products: usize,
    phi: Vec<f64>,
    capacity: Vec<Option<f64>>,
    lambda_bar: f64,
}

/// Raw resource data for [`validate_resources`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncheckedResources {
    pub n_resources: usize,
    pub n_products: usize,
    /// Consumption rates, row-major `R * J`; `phi[r * J + j]` units of
    /// resource `r` per sale of product `j`.
    pub phi: Vec<f64>,
    /// Capacity per unit time for each resource; `None` means the resource
    /// is tracked but unconstrained.
    pub capacity: Vec<Option<f64>>,
    /// Customer arrival rate, strictly positive.
    pub lambda_bar: f64,
}

impl ResourceModel {
    /// A market with no resources and unit arrival rate.
    pub fn unconstrained(n_products: usize) -> Self {
        ResourceModel {
            n_resources: 0,
            n_products,
            phi: Vec::new(),
            capacity: Vec::new(),
            lambda_bar: 1.0,
        }
    }

    /// Same resources with a different arrival rate. Panics if `lambda_bar`
    /// is not strictly positive and finite.
    pub fn with_lambda_bar(mut self, lambda_bar: f64) -> Self {
        assert!(lambda_bar.is_finite() && lambda_bar > 0.0);
        self.lambda_bar = lambda_bar;
        self
    }

    pub fn n_resources(&self) -> usize {
        self.n_resources
    }

    pub fn n_products(&self) -> usize {
        self.n_products
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    /// Consumption of resource `r` per sale of product `j`.
    pub fn phi(&self, r: usize, j: usize) -> f64 {
        self.phi[r * self.n_products + j]
    }

    pub fn phi_row(&self, r: usize) -> &[f64] {
        &self.phi[r * self.n_products..(r + 1) * self.n_products]
    }

    /// Capacity of resource `r`; `None` is unconstrained.
    pub fn capacity(&self, r: usize) -> Option<f64> {
        self.capacity[r]
    }

    /// Indices of resources that actually constrain the market.
    pub fn bounded_resources(&self) -> Vec<usize> {
        (0..self.n_resources).filter(|&r| self.capacity[r].is_some()).collect()
    }
}

/// An offer set: a sorted, duplicate-free subset of product indices
/// `0..J`. Ordering and hashing follow the sorted contents, so equal sets
/// compare equal regardless of construction order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assortment(Vec<usize>);

impl Assortment {
    pub fn new(mut items: Vec<usize>) -> Self {
        items.sort_unstable();
        items.dedup();
        Assortment(items)
    }

    pub fn empty() -> Self {
        Assortment(Vec::new())
    }

    /// All products `0..n`.
    pub fn full(n: usize) -> Self {
        Assortment((0..n).collect())
    }

    /// Bit `j` of `mask` set means product `j` is offered.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        assert!(n <= 64);
        Assortment((0..n).filter(|&j| mask >> j & 1 == 1).collect())
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// 0/1 membership vector of length `n`.
    pub fn indicator(&self, n: usize) -> Vec<f64> {
        let mut ind = vec![0.0; n];
        for &j in &self.0 {
            ind[j] = 1.0;
        }
        ind
    }

    /// True if every member of `self` is a member of `other`.
    pub fn is_subset_of(&self, other: &Assortment) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }
}

impl std::fmt::Display for Assortment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

pub use balance::{
    balance_fixed_point, balance_residual, choice_probabilities, expected_profit,
    intensity_balance, intensity_balance_residual, intensity_profit, intensity_resource_usage,
    resource_usage, solve_balance,
};
