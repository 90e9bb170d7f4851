//! Compilation of a market into exponential-cone programs.
//!
//! All primal variants share the variable stack `v[j], d[j], u[j]`:
//! `v_j` is the visit rate, `d_j = a_j * Q_j(x_j) * v_j` the sales rate,
//! and `u_j = x_j * d_j` the revenue rate of product `j`. The change of
//! variables turns the balance equations linear and the demand curve into
//! one exponential-cone membership per product:
//!
//! ```text
//! maximize   scale * sum_j (u_j - psi_j * d_j)
//! subject to v_j = theta_j + sum_i rho_ij * (v_i - d_i)          (balance)
//!            lambda_bar * sum_j phi_rj * d_j <= capacity_r       (resources)
//!            x_lower_j * d_j <= u_j <= x_upper_j * d_j           (box)
//!            (v_j, d_j, beta_j * u_j - alpha_j * d_j) in K_exp   (demand)
//! ```
//!
//! * [`build_static_program`] - no resource rows, `scale = 1` (profit per
//!   arrival).
//! * [`build_network_program`] - resource rows for every bounded capacity,
//!   `scale = lambda_bar` (profit per unit time).
//! * [`build_pricing_only_program`] - network rows plus one extra cone per
//!   product, `(d_j, v_j, (alpha_j - beta_j * x_upper_j) * v_j) in K_exp`,
//!   which forces `d_j >= Q_j(x_upper_j) * v_j`: every product is fully
//!   offered and only prices move.
//! * [`build_static_dual_program`] - the explicit dual of the static
//!   program over `eta[j]`, `pi[j][1..3]`, `nu_upper[j]`, `nu_lower[j]`;
//!   its optimum equals the static optimum and
//!   [`strictly_feasible_dual_point`] exhibits an interior point of it.
//!
//! Row order is pinned for dump stability: balance, resources, box (upper
//! then lower per product), then cone blocks by product index (primary
//! demand cones before the pricing-only full-offer cones).

mod dump;

pub use dump::dump_program;

use crate::conic::{ConeKind, ConicProgram, ProgramBuilder, Sense};
use crate::model::{intensity_balance, McInstance, ResourceModel};
use nalgebra::{DMatrix, DVector};

/// Which compiled program a [`VariableMap`] describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProgramKind {
    /// Static pricing and assortment, profit per arrival.
    Static,
    /// Resource-constrained network relaxation, profit per unit time.
    Network,
    /// Network with every product forced on offer.
    PricingOnly,
    /// Explicit dual of the static program.
    StaticDual,
}

impl ProgramKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProgramKind::Static => "static",
            ProgramKind::Network => "network",
            ProgramKind::PricingOnly => "pricing-only",
            ProgramKind::StaticDual => "static-dual",
        }
    }

    fn is_primal(&self) -> bool {
        !matches!(self, ProgramKind::StaticDual)
    }
}

/// Column/row layout of a compiled program, plus the objective scale the
/// builder applied. Recovery uses it to address solver vectors by meaning
/// instead of raw index.
#[derive(Clone, Debug, PartialEq)]
pub struct VariableMap {
    kind: ProgramKind,
    n_products: usize,
    n_resource_rows: usize,
    /// Objective scale: `lambda_bar` for network kinds, 1 otherwise.
    lambda_bar: f64,
}

impl VariableMap {
    pub fn kind(&self) -> ProgramKind {
        self.kind
    }

    pub fn n_products(&self) -> usize {
        self.n_products
    }

    /// Scale between program objective and per-arrival profit.
    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    pub fn v_col(&self, j: usize) -> usize {
        assert!(self.kind.is_primal() && j < self.n_products);
        j
    }

    pub fn d_col(&self, j: usize) -> usize {
        assert!(self.kind.is_primal() && j < self.n_products);
        self.n_products + j
    }

    pub fn u_col(&self, j: usize) -> usize {
        assert!(self.kind.is_primal() && j < self.n_products);
        2 * self.n_products + j
    }

    pub fn eta_col(&self, j: usize) -> usize {
        assert!(self.kind == ProgramKind::StaticDual && j < self.n_products);
        j
    }

    /// `k` is 1-based: the cone coordinate `pi[j][k]`, `k in {1,2,3}`.
    pub fn pi_col(&self, j: usize, k: usize) -> usize {
        assert!(self.kind == ProgramKind::StaticDual && j < self.n_products);
        assert!((1..=3).contains(&k));
        self.n_products + 3 * j + (k - 1)
    }

    pub fn nu_upper_col(&self, j: usize) -> usize {
        assert!(self.kind == ProgramKind::StaticDual && j < self.n_products);
        4 * self.n_products + j
    }

    pub fn nu_lower_col(&self, j: usize) -> usize {
        assert!(self.kind == ProgramKind::StaticDual && j < self.n_products);
        5 * self.n_products + j
    }

    /// Row of the balance equality for product `j` (primal kinds).
    pub fn balance_row(&self, j: usize) -> usize {
        assert!(self.kind.is_primal() && j < self.n_products);
        j
    }

    /// Row of the `r`-th *bounded* resource constraint (primal kinds).
    pub fn resource_row(&self, r: usize) -> usize {
        assert!(self.kind.is_primal() && r < self.n_resource_rows);
        self.n_products + r
    }

    pub fn upper_box_row(&self, j: usize) -> usize {
        assert!(self.kind.is_primal() && j < self.n_products);
        self.n_products + self.n_resource_rows + 2 * j
    }

    pub fn lower_box_row(&self, j: usize) -> usize {
        self.upper_box_row(j) + 1
    }

    /// First row of the demand cone of product `j` (primal kinds).
    pub fn cone_row(&self, j: usize) -> usize {
        assert!(self.kind.is_primal() && j < self.n_products);
        3 * self.n_products + self.n_resource_rows + 3 * j
    }
}

/// Static program: prices and offer intensities, profit per arrival.
pub fn build_static_program(inst: &McInstance) -> (ConicProgram, VariableMap) {
    build_primal(inst, None, ProgramKind::Static)
}

/// Network program: static program plus resource rows, scaled by the
/// arrival rate.
pub fn build_network_program(
    inst: &McInstance,
    resources: &ResourceModel,
) -> (ConicProgram, VariableMap) {
    build_primal(inst, Some(resources), ProgramKind::Network)
}

/// Pricing-only program: network program plus the full-offer cones.
pub fn build_pricing_only_program(
    inst: &McInstance,
    resources: &ResourceModel,
) -> (ConicProgram, VariableMap) {
    build_primal(inst, Some(resources), ProgramKind::PricingOnly)
}

fn build_primal(
    inst: &McInstance,
    resources: Option<&ResourceModel>,
    kind: ProgramKind,
) -> (ConicProgram, VariableMap) {
    let n = inst.n();
    let lambda_bar = resources.map_or(1.0, |rm| rm.lambda_bar());
    let scale = match kind {
        ProgramKind::Static => 1.0,
        _ => lambda_bar,
    };
    let bounded = resources.map_or(Vec::new(), |rm| rm.bounded_resources());

    let mut b = ProgramBuilder::new(Sense::Maximize);
    let v: Vec<usize> = (0..n).map(|j| b.add_col(format!("v[{j}]"))).collect();
    let d: Vec<usize> = (0..n).map(|j| b.add_col(format!("d[{j}]"))).collect();
    let u: Vec<usize> = (0..n).map(|j| b.add_col(format!("u[{j}]"))).collect();
    for j in 0..n {
        b.set_objective(u[j], scale);
        b.set_objective(d[j], -scale * inst.psi()[j]);
    }

    b.begin_block(ConeKind::Zero);
    for j in 0..n {
        let mut coeffs = Vec::with_capacity(2 * n);
        for i in 0..n {
            let base = if i == j { 1.0 } else { 0.0 };
            coeffs.push((v[i], base - inst.rho(i, j)));
        }
        for i in 0..n {
            coeffs.push((d[i], inst.rho(i, j)));
        }
        b.add_row(format!("balance[{j}]"), &coeffs, inst.theta()[j]);
    }

    if !bounded.is_empty() {
        let rm = resources.unwrap();
        b.begin_block(ConeKind::Nonnegative);
        for &r in &bounded {
            let coeffs: Vec<(usize, f64)> =
                (0..n).map(|j| (d[j], lambda_bar * rm.phi(r, j))).collect();
            b.add_row(format!("resource[{r}]"), &coeffs, rm.capacity(r).unwrap());
        }
    }

    b.begin_block(ConeKind::Nonnegative);
    for j in 0..n {
        b.add_row(
            format!("upper[{j}]"),
            &[(u[j], 1.0), (d[j], -inst.x_upper()[j])],
            0.0,
        );
        b.add_row(
            format!("lower[{j}]"),
            &[(d[j], inst.x_lower()[j]), (u[j], -1.0)],
            0.0,
        );
    }

    for j in 0..n {
        b.begin_block(ConeKind::Exponential);
        b.add_row(format!("cone[{j}][1]"), &[(v[j], -1.0)], 0.0);
        b.add_row(format!("cone[{j}][2]"), &[(d[j], -1.0)], 0.0);
        b.add_row(
            format!("cone[{j}][3]"),
            &[(d[j], inst.alpha()[j]), (u[j], -inst.beta()[j])],
            0.0,
        );
    }

    if kind == ProgramKind::PricingOnly {
        for j in 0..n {
            let edge = inst.alpha()[j] - inst.beta()[j] * inst.x_upper()[j];
            b.begin_block(ConeKind::Exponential);
            b.add_row(format!("full_offer[{j}][1]"), &[(d[j], -1.0)], 0.0);
            b.add_row(format!("full_offer[{j}][2]"), &[(v[j], -1.0)], 0.0);
            b.add_row(format!("full_offer[{j}][3]"), &[(v[j], -edge)], 0.0);
        }
    }

    let vm = VariableMap {
        kind,
        n_products: n,
        n_resource_rows: bounded.len(),
        lambda_bar: scale,
    };
    (b.finish(), vm)
}

/// Explicit dual of the static program:
///
/// ```text
/// minimize   sum_j theta_j * eta_j
/// subject to pi[j][1] - eta_j + sum_i rho_ji * eta_i = 0
///            pi[j][2] - alpha_j * pi[j][3] - sum_i rho_ji * eta_i
///                + x_upper_j * nu_upper_j - x_lower_j * nu_lower_j = psi_j
///            beta_j * pi[j][3] - nu_upper_j + nu_lower_j = -1
///            nu >= 0,  pi[j] in K*_exp
/// ```
pub fn build_static_dual_program(inst: &McInstance) -> (ConicProgram, VariableMap) {
    let n = inst.n();
    let mut b = ProgramBuilder::new(Sense::Minimize);
    let eta: Vec<usize> = (0..n).map(|j| b.add_col(format!("eta[{j}]"))).collect();
    let mut pi = Vec::with_capacity(n);
    for j in 0..n {
        pi.push([
            b.add_col(format!("pi[{j}][1]")),
            b.add_col(format!("pi[{j}][2]")),
            b.add_col(format!("pi[{j}][3]")),
        ]);
    }
    let nu_up: Vec<usize> = (0..n).map(|j| b.add_col(format!("nu_upper[{j}]"))).collect();
    let nu_lo: Vec<usize> = (0..n).map(|j| b.add_col(format!("nu_lower[{j}]"))).collect();
    for j in 0..n {
        b.set_objective(eta[j], inst.theta()[j]);
    }

    b.begin_block(ConeKind::Zero);
    for j in 0..n {
        let mut coeffs = vec![(pi[j][0], 1.0)];
        for i in 0..n {
            let base = if i == j { -1.0 } else { 0.0 };
            coeffs.push((eta[i], base + inst.rho(j, i)));
        }
        b.add_row(format!("dual_v[{j}]"), &coeffs, 0.0);
    }
    for j in 0..n {
        let mut coeffs = vec![
            (pi[j][1], 1.0),
            (pi[j][2], -inst.alpha()[j]),
            (nu_up[j], inst.x_upper()[j]),
            (nu_lo[j], -inst.x_lower()[j]),
        ];
        for i in 0..n {
            coeffs.push((eta[i], -inst.rho(j, i)));
        }
        b.add_row(format!("dual_d[{j}]"), &coeffs, inst.psi()[j]);
    }
    for j in 0..n {
        b.add_row(
            format!("dual_u[{j}]"),
            &[(pi[j][2], inst.beta()[j]), (nu_up[j], -1.0), (nu_lo[j], 1.0)],
            -1.0,
        );
    }

    b.begin_block(ConeKind::Nonnegative);
    for j in 0..n {
        b.add_row(format!("nu_upper_pos[{j}]"), &[(nu_up[j], -1.0)], 0.0);
        b.add_row(format!("nu_lower_pos[{j}]"), &[(nu_lo[j], -1.0)], 0.0);
    }

    for j in 0..n {
        b.begin_block(ConeKind::DualExponential);
        b.add_row(format!("dual_cone[{j}][1]"), &[(pi[j][0], -1.0)], 0.0);
        b.add_row(format!("dual_cone[{j}][2]"), &[(pi[j][1], -1.0)], 0.0);
        b.add_row(format!("dual_cone[{j}][3]"), &[(pi[j][2], -1.0)], 0.0);
    }

    let vm = VariableMap {
        kind: ProgramKind::StaticDual,
        n_products: n,
        n_resource_rows: 0,
        lambda_bar: 1.0,
    };
    (b.finish(), vm)
}

/// A strictly feasible point of the static dual program.
#[derive(Clone, Debug, PartialEq)]
pub struct DualFeasiblePoint {
    pub eta: Vec<f64>,
    /// Cone variables `pi[j] = (pi1, pi2, pi3)`, each interior to `K*_exp`.
    pub pi: Vec<[f64; 3]>,
    pub nu_upper: Vec<f64>,
    pub nu_lower: Vec<f64>,
}

impl DualFeasiblePoint {
    /// Stacks the point in the column layout of the static dual program.
    pub fn to_vector(&self, vm: &VariableMap) -> Vec<f64> {
        let n = vm.n_products();
        let mut x = vec![0.0; 6 * n];
        for j in 0..n {
            x[vm.eta_col(j)] = self.eta[j];
            for k in 1..=3 {
                x[vm.pi_col(j, k)] = self.pi[j][k - 1];
            }
            x[vm.nu_upper_col(j)] = self.nu_upper[j];
            x[vm.nu_lower_col(j)] = self.nu_lower[j];
        }
        x
    }

    /// Interior margin of each cone variable:
    /// `pi1 + pi3 * exp(pi2 / pi3 - 1)`, positive strictly inside `K*_exp`.
    pub fn interior_margins(&self) -> Vec<f64> {
        self.pi
            .iter()
            .map(|p| p[0] + p[2] * (p[1] / p[2] - 1.0).exp())
            .collect()
    }
}

/// Constructs a strictly feasible point of the static dual:
///
/// ```text
/// pi[j][3] = -1 / beta_j
/// pi[j][1] = 1 + (1 / beta_j) * exp(alpha_j - beta_j * psi_j - 1)
/// eta      = (I - rho)^{-1} pi[.][1]      (componentwise >= pi[.][1] > 1)
/// pi[j][2] = psi_j - alpha_j / beta_j + sum_i rho_ji * eta_i
/// nu       = 0
/// ```
///
/// The equalities hold by construction and each cone margin
/// `pi1 + pi3 * exp(pi2/pi3 - 1)` is at least 1 because the `eta` term only
/// deepens the exponent.
pub fn strictly_feasible_dual_point(inst: &McInstance) -> DualFeasiblePoint {
    let n = inst.n();
    let pi3: Vec<f64> = (0..n).map(|j| -1.0 / inst.beta()[j]).collect();
    let pi1: Vec<f64> = (0..n)
        .map(|j| {
            1.0 + (inst.alpha()[j] - inst.beta()[j] * inst.psi()[j] - 1.0).exp()
                / inst.beta()[j]
        })
        .collect();
    // eta = (I - rho)^{-1} pi1, with (rho eta)_j = sum_i rho_ji eta_i.
    let m = DMatrix::from_fn(n, n, |j, i| {
        let base = if i == j { 1.0 } else { 0.0 };
        base - inst.rho(j, i)
    });
    let eta_v = m
        .lu()
        .solve(&DVector::from_column_slice(&pi1))
        .expect("I - rho is nonsingular for validated instances");
    let eta: Vec<f64> = eta_v.iter().copied().collect();
    let pi2: Vec<f64> = (0..n)
        .map(|j| {
            let flow: f64 = (0..n).map(|i| inst.rho(j, i) * eta[i]).sum();
            inst.psi()[j] - inst.alpha()[j] / inst.beta()[j] + flow
        })
        .collect();
    DualFeasiblePoint {
        eta,
        pi: (0..n).map(|j| [pi1[j], pi2[j], pi3[j]]).collect(),
        nu_upper: vec![0.0; n],
        nu_lower: vec![0.0; n],
    }
}

/// Maps a feasible decision `(v, x, a)` of the market into the primal
/// variable stack via `d_j = a_j Q_j(x_j) v_j`, `u_j = x_j d_j`.
pub fn decision_to_primal_point(
    inst: &McInstance,
    vm: &VariableMap,
    v: &[f64],
    x: &[f64],
    a: &[f64],
) -> Vec<f64> {
    let n = inst.n();
    let mut point = vec![0.0; 3 * n];
    for j in 0..n {
        let dj = a[j] * inst.demand(j, x[j]) * v[j];
        point[vm.v_col(j)] = v[j];
        point[vm.d_col(j)] = dj;
        point[vm.u_col(j)] = x[j] * dj;
    }
    point
}

/// Convenience used in tests: the primal point of the balanced decision
/// with intensities `a` at prices `x`.
pub fn balanced_primal_point(
    inst: &McInstance,
    vm: &VariableMap,
    x: &[f64],
    a: &[f64],
) -> Vec<f64> {
    let v = intensity_balance(inst, a, x);
    decision_to_primal_point(inst, vm, &v, x, a)
}
