//! Recovery of market decisions from conic solutions.
//!
//! The conic stack `(v, d, u)` encodes prices and offer intensities as
//! `x_j = u_j / d_j` and `a_j = d_j / (Q_j(x_j) v_j)`. [`recover_decision`]
//! undoes the change of variables and cross-checks the decision's profit
//! against the conic objective. [`dimension_reduction`] then rewrites a
//! fractional-intensity decision as a mixture of at most `n + 1` plain
//! assortments with the same sales rates, and [`mixture_to_schedule`]
//! lays the mixture out as a time-shared offer schedule.

use crate::conic::{PrimalDualSolution, SolveStatus};
use crate::model::{
    choice_probabilities, intensity_balance, intensity_profit, solve_balance, Assortment,
    McInstance, ResourceModel,
};
use crate::reformulate::VariableMap;
use serde::Serialize;
use thiserror::Error;

/// Sales rates below `ZERO_SALES_FLOOR * max(1, ||d||_inf)` are treated as
/// zero: the product is unoffered and its price pinned to the lower bound.
const ZERO_SALES_FLOOR: f64 = 1e-8;
/// Allowed distance between `u_j / d_j` and its clamp into the price box,
/// relative to `1 + x_upper_j`.
const PRICE_DRIFT_TOL: f64 = 1e-6;
/// Allowed relative mismatch between the decision's profit and the conic
/// objective at the solver point.
const OBJECTIVE_MATCH_TOL: f64 = 1e-6;
/// Mixture weight at which the remaining mass is assigned in one piece.
const MIX_STOP: f64 = 1e-12;
/// A step fraction above `1 + MIX_OVERSHOOT` means the iteration lost
/// feasibility and cannot continue.
const MIX_OVERSHOOT: f64 = 1e-6;
/// Residual intensity mass below this leaves the mixture support.
const SUPPORT_EPS: f64 = 1e-9;
/// Recovered intensities this close to 0 or 1 are snapped to the exact
/// endpoint. First-order solutions land near-integral, never integral;
/// without the snap an unconstrained solve would decompose into a real
/// assortment plus a spurious near-zero slice of the empty one.
const INTENSITY_SNAP: f64 = 1e-6;

/// Failure modes of decision recovery and dimension reduction.
#[derive(Debug, Error, PartialEq)]
pub enum RecoveryError {
    #[error("cannot recover a decision from a {status:?} solution")]
    NotOptimal { status: SolveStatus },
    #[error("price ratio of product {product} drifts {drift:.3e} outside its box")]
    DriftExceeded { product: usize, drift: f64 },
    #[error("decision profit {decision:.9} disagrees with conic objective {conic:.9}")]
    ObjectiveMismatch { decision: f64, conic: f64 },
    #[error("mixture extraction stalled at step {step}")]
    NonConvergence { step: usize },
}

/// A static decision: one price vector and one offer-intensity vector,
/// with the visit rates and objective they induce.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticDecision {
    /// Price of each product, inside its box.
    pub prices: Vec<f64>,
    /// Offer intensity of each product in `[0, 1]`.
    pub intensities: Vec<f64>,
    /// Visit rates balanced under the decision.
    pub visit_rates: Vec<f64>,
    /// Profit at the objective scale of the originating program
    /// (per arrival for static, per unit time for network kinds).
    pub objective: f64,
}

impl StaticDecision {
    /// Products offered with intensity above `tol`.
    pub fn support(&self, tol: f64) -> Assortment {
        Assortment::new(
            self.intensities
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > tol)
                .map(|(j, _)| j)
                .collect(),
        )
    }

    /// True when every intensity is within `tol` of 0 or 1.
    pub fn is_integral(&self, tol: f64) -> bool {
        self.intensities
            .iter()
            .all(|&a| a <= tol || a >= 1.0 - tol)
    }
}

/// Undoes the conic change of variables at a solved program.
///
/// The returned decision is rebalanced exactly: visit rates come from the
/// balance solve at `(x, a)`, not from the solver's `v` block, and the
/// objective is the decision's own profit. A relative drift of `u_j / d_j`
/// out of the price box or a profit mismatch beyond tolerance is an error,
/// since both signal an unconverged or misread solution.
pub fn recover_decision(
    sol: &PrimalDualSolution,
    vm: &VariableMap,
    inst: &McInstance,
) -> Result<StaticDecision, RecoveryError> {
    if sol.status != SolveStatus::Optimal {
        return Err(RecoveryError::NotOptimal { status: sol.status });
    }
    let n = inst.n();
    let d_scale = (0..n)
        .map(|j| sol.primal[vm.d_col(j)].abs())
        .fold(1.0f64, f64::max);
    let floor = ZERO_SALES_FLOOR * d_scale;

    let mut prices = vec![0.0; n];
    let mut intensities = vec![0.0; n];
    let mut conic_obj = 0.0;
    for j in 0..n {
        let d = sol.primal[vm.d_col(j)];
        let u = sol.primal[vm.u_col(j)];
        let v = sol.primal[vm.v_col(j)];
        conic_obj += vm.lambda_bar() * (u - inst.psi()[j] * d);
        // Q_j(x) v_j >= Q_j(x_upper) theta_j > 0, so when even that floor
        // keeps the intensity below the snap threshold the product sells
        // nothing, the ratio u / d is pure noise, and the price is a
        // convention rather than a drift signal.
        let q_v_floor =
            inst.demand(j, inst.x_upper()[j]) * v.max(inst.theta()[j]).max(f64::MIN_POSITIVE);
        if d <= floor || d <= INTENSITY_SNAP * q_v_floor {
            prices[j] = inst.x_lower()[j];
            continue;
        }
        let raw = u / d;
        let clamped = raw.clamp(inst.x_lower()[j], inst.x_upper()[j]);
        let drift = (raw - clamped).abs();
        if drift > PRICE_DRIFT_TOL * (1.0 + inst.x_upper()[j]) {
            return Err(RecoveryError::DriftExceeded { product: j, drift });
        }
        prices[j] = clamped;
        let q_v = inst.demand(j, clamped) * v.max(f64::MIN_POSITIVE);
        let a = (d / q_v).clamp(0.0, 1.0);
        intensities[j] = if a < INTENSITY_SNAP {
            0.0
        } else if a > 1.0 - INTENSITY_SNAP {
            1.0
        } else {
            a
        };
    }

    let visit_rates = intensity_balance(inst, &intensities, &prices);
    let objective = intensity_profit(inst, vm.lambda_bar(), &visit_rates, &prices, &intensities);
    let gap = (objective - conic_obj).abs();
    if gap > OBJECTIVE_MATCH_TOL * f64::max(1.0, objective.abs()) {
        return Err(RecoveryError::ObjectiveMismatch {
            decision: objective,
            conic: conic_obj,
        });
    }
    Ok(StaticDecision {
        prices,
        intensities,
        visit_rates,
        objective,
    })
}

/// A convex combination of assortments offered at common prices. Weights
/// are positive and sum to one; the mixture reproduces the sales rates of
/// the fractional decision it was extracted from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssortmentMixture {
    pub prices: Vec<f64>,
    pub assortments: Vec<Assortment>,
    pub weights: Vec<f64>,
}

impl AssortmentMixture {
    /// Mixture profit at arrival rate `lambda_bar`.
    pub fn expected_profit(&self, inst: &McInstance, lambda_bar: f64) -> f64 {
        let mut total = 0.0;
        for (a, &w) in self.assortments.iter().zip(&self.weights) {
            let probs = choice_probabilities(inst, a, &self.prices);
            let per_arrival: f64 = (0..inst.n())
                .map(|j| probs[j] * (self.prices[j] - inst.psi()[j]))
                .sum();
            total += w * lambda_bar * per_arrival;
        }
        total
    }

    /// Mixture sales rate of each product per arrival.
    pub fn sales_rates(&self, inst: &McInstance) -> Vec<f64> {
        let mut rates = vec![0.0; inst.n()];
        for (a, &w) in self.assortments.iter().zip(&self.weights) {
            let probs = choice_probabilities(inst, a, &self.prices);
            for j in 0..inst.n() {
                rates[j] += w * probs[j];
            }
        }
        rates
    }

    /// Mixture usage of each resource per unit time.
    pub fn expected_usage(&self, inst: &McInstance, resources: &ResourceModel) -> Vec<f64> {
        let sales = self.sales_rates(inst);
        (0..resources.n_resources())
            .map(|r| {
                resources.lambda_bar()
                    * (0..inst.n()).map(|j| resources.phi(r, j) * sales[j]).sum::<f64>()
            })
            .collect()
    }
}

/// Rewrites a fractional-intensity decision as an assortment mixture.
///
/// Greedy peeling on the residual purchase mass `m_j = a_j v_j`: offer the
/// support of `m`, remove the largest feasible multiple of that
/// assortment's balanced visit rates, and repeat on the renormalized
/// residual. Each step zeroes at least the limiting product, so at most
/// `n + 1` assortments appear (the empty assortment absorbs any residual
/// with no purchase mass left).
pub fn dimension_reduction(
    inst: &McInstance,
    decision: &StaticDecision,
) -> Result<AssortmentMixture, RecoveryError> {
    let n = inst.n();
    let x = &decision.prices;
    let mut m: Vec<f64> = (0..n)
        .map(|j| decision.intensities[j] * decision.visit_rates[j])
        .collect();
    let mut assortments = Vec::new();
    let mut weights = Vec::new();
    let mut remaining = 1.0f64;

    for step in 0..=n {
        let support: Vec<usize> = (0..n).filter(|&j| m[j] > SUPPORT_EPS).collect();
        if support.is_empty() {
            assortments.push(Assortment::empty());
            weights.push(remaining);
            remaining = 0.0;
            break;
        }
        let assortment = Assortment::new(support.clone());
        let v_a = solve_balance(inst, &assortment, x);
        let (j_min, y) = support
            .iter()
            .map(|&j| (j, m[j] / v_a[j]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("support is nonempty");
        if y >= 1.0 - MIX_STOP {
            // The residual is exactly this assortment's balanced flow.
            assortments.push(assortment);
            weights.push(remaining);
            remaining = 0.0;
            break;
        }
        if y > 1.0 + MIX_OVERSHOOT || y < 0.0 {
            return Err(RecoveryError::NonConvergence { step });
        }
        assortments.push(assortment);
        weights.push(remaining * y);
        remaining *= 1.0 - y;
        for &j in &support {
            m[j] = (m[j] - y * v_a[j]) / (1.0 - y);
        }
        // The limiting product leaves the support exactly.
        m[j_min] = 0.0;
    }
    if remaining > MIX_STOP {
        return Err(RecoveryError::NonConvergence { step: n + 1 });
    }
    Ok(AssortmentMixture {
        prices: x.clone(),
        assortments,
        weights,
    })
}

/// One segment of a time-shared offer schedule; `start` and `end` are
/// fractions of the planning horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleEntry {
    pub assortment: Assortment,
    pub start: f64,
    pub end: f64,
}

/// An assortment mixture laid out on a unit horizon: offer each assortment
/// for a contiguous time slice proportional to its weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OfferSchedule {
    pub prices: Vec<f64>,
    pub entries: Vec<ScheduleEntry>,
}

impl OfferSchedule {
    /// Scales the fractional segments to a concrete horizon length.
    pub fn segments(&self, horizon: f64) -> Vec<(f64, f64, &Assortment)> {
        self.entries
            .iter()
            .map(|e| (e.start * horizon, e.end * horizon, &e.assortment))
            .collect()
    }
}

/// Lays a mixture out as consecutive time slices. Zero-weight entries are
/// dropped; the last slice is pinned to end exactly at 1.
pub fn mixture_to_schedule(mixture: &AssortmentMixture) -> OfferSchedule {
    let mut entries = Vec::new();
    let mut clock = 0.0;
    for (a, &w) in mixture.assortments.iter().zip(&mixture.weights) {
        if w <= 0.0 {
            continue;
        }
        entries.push(ScheduleEntry {
            assortment: a.clone(),
            start: clock,
            end: clock + w,
        });
        clock += w;
    }
    if let Some(last) = entries.last_mut() {
        last.end = 1.0;
    }
    OfferSchedule {
        prices: mixture.prices.clone(),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_instance, UncheckedInstance};
    use crate::reformulate::{balanced_primal_point, build_static_program};

    fn two_products() -> McInstance {
        validate_instance(&UncheckedInstance {
            n: 2,
            theta: vec![0.6, 0.4],
            rho: vec![0.0, 0.3, 0.2, 0.0],
            alpha: vec![0.0, -0.1],
            beta: vec![1.0, 0.8],
            psi: vec![0.5, 0.2],
            x_lower: vec![0.5, 0.25],
            x_upper: vec![4.0, 5.0],
        })
        .unwrap()
    }

    fn decision_from(inst: &McInstance, x: Vec<f64>, a: Vec<f64>) -> StaticDecision {
        let v = intensity_balance(inst, &a, &x);
        let objective = intensity_profit(inst, 1.0, &v, &x, &a);
        StaticDecision {
            prices: x,
            intensities: a,
            visit_rates: v,
            objective,
        }
    }

    fn synthetic_solution(point: Vec<f64>) -> PrimalDualSolution {
        PrimalDualSolution {
            status: SolveStatus::Optimal,
            primal: point,
            dual: Vec::new(),
            slack: Vec::new(),
            primal_residual: 0.0,
            dual_residual: 0.0,
            duality_gap: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn recover_round_trips_a_balanced_point() {
        let inst = two_products();
        let (_, vm) = build_static_program(&inst);
        let x = vec![1.4, 2.0];
        let a = vec![0.7, 1.0];
        let sol = synthetic_solution(balanced_primal_point(&inst, &vm, &x, &a));
        let dec = recover_decision(&sol, &vm, &inst).unwrap();
        for j in 0..2 {
            assert!((dec.prices[j] - x[j]).abs() < 1e-10);
            assert!((dec.intensities[j] - a[j]).abs() < 1e-10);
        }
        let expect = intensity_profit(&inst, 1.0, &dec.visit_rates, &x, &a);
        assert!((dec.objective - expect).abs() < 1e-12);
    }

    #[test]
    fn recover_zero_sales_pins_lower_bound() {
        let inst = two_products();
        let (_, vm) = build_static_program(&inst);
        let sol = synthetic_solution(balanced_primal_point(
            &inst,
            &vm,
            &vec![1.0, 3.0],
            &vec![0.0, 1.0],
        ));
        let dec = recover_decision(&sol, &vm, &inst).unwrap();
        assert_eq!(dec.prices[0], inst.x_lower()[0]);
        assert_eq!(dec.intensities[0], 0.0);
        assert!(dec.intensities[1] > 0.99);
    }

    #[test]
    fn recover_rejects_non_optimal_status() {
        let inst = two_products();
        let (_, vm) = build_static_program(&inst);
        let mut sol = synthetic_solution(vec![0.0; 6]);
        sol.status = SolveStatus::IterLimit;
        assert_eq!(
            recover_decision(&sol, &vm, &inst),
            Err(RecoveryError::NotOptimal {
                status: SolveStatus::IterLimit
            })
        );
    }

    #[test]
    fn recover_rejects_price_drift() {
        let inst = two_products();
        let (_, vm) = build_static_program(&inst);
        let mut point = balanced_primal_point(&inst, &vm, &vec![1.0, 2.0], &vec![1.0, 1.0]);
        // Push u far above the price box: u/d = 9 > x_upper = 4.
        point[vm.u_col(0)] = 9.0 * point[vm.d_col(0)];
        let err = recover_decision(&synthetic_solution(point), &vm, &inst).unwrap_err();
        assert!(matches!(err, RecoveryError::DriftExceeded { product: 0, .. }));
    }

    #[test]
    fn mixture_replicates_fractional_sales_rates() {
        let inst = two_products();
        let dec = decision_from(&inst, vec![1.3, 1.9], vec![0.55, 0.85]);
        let mix = dimension_reduction(&inst, &dec).unwrap();
        assert!(mix.assortments.len() <= 3);
        let total: f64 = mix.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(mix.weights.iter().all(|&w| w >= 0.0));
        let rates = mix.sales_rates(&inst);
        for j in 0..2 {
            let target = dec.intensities[j]
                * inst.demand(j, dec.prices[j])
                * dec.visit_rates[j];
            assert!(
                (rates[j] - target).abs() < 1e-9,
                "product {j}: mixture {} vs decision {target}",
                rates[j]
            );
        }
        let profit = mix.expected_profit(&inst, 1.0);
        assert!((profit - dec.objective).abs() < 1e-9);
    }

    #[test]
    fn integral_decision_yields_single_assortment() {
        let inst = two_products();
        let dec = decision_from(&inst, vec![1.0, 2.0], vec![1.0, 1.0]);
        let mix = dimension_reduction(&inst, &dec).unwrap();
        assert_eq!(mix.assortments.len(), 1);
        assert_eq!(mix.assortments[0], Assortment::full(2));
        assert!((mix.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_intensities_yield_empty_assortment() {
        let inst = two_products();
        let dec = decision_from(&inst, vec![1.0, 2.0], vec![0.0, 0.0]);
        let mix = dimension_reduction(&inst, &dec).unwrap();
        assert_eq!(mix.assortments, vec![Assortment::empty()]);
        assert_eq!(mix.weights, vec![1.0]);
    }

    #[test]
    fn schedule_slices_are_contiguous_and_cover_the_horizon() {
        let inst = two_products();
        let dec = decision_from(&inst, vec![1.3, 1.9], vec![0.55, 0.85]);
        let mix = dimension_reduction(&inst, &dec).unwrap();
        let schedule = mixture_to_schedule(&mix);
        let mut clock = 0.0;
        for e in &schedule.entries {
            assert!((e.start - clock).abs() < 1e-12);
            assert!(e.end > e.start);
            clock = e.end;
        }
        assert_eq!(clock, 1.0);
        let segs = schedule.segments(10.0);
        assert_eq!(segs.last().unwrap().1, 10.0);
    }
}
