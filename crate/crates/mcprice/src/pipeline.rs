//! The production path: compile, solve, recover, decompose.
//!
//! [`run`] chains the stages end to end for one of four modes and returns
//! everything a report needs. Modes differ only in which program is
//! compiled; the recovery chain is identical:
//!
//! * `Network` - resource rows enforced, objective per unit time.
//! * `Static` - resource rows dropped (capacities ignored), objective
//!   still scaled by the arrival rate so it matches a resource-free
//!   network run exactly.
//! * `PricingOnly` - every product forced on offer, prices free.
//! * `FixedPrice` - network compile for instances whose price boxes are
//!   collapsed (`x_lower == x_upper`); only the assortment is optimized.

use crate::conic::{solve, PrimalDualSolution, SolveStatus, SolverSettings};
use crate::model::{intensity_resource_usage, McInstance, ResourceModel};
use crate::recovery::{
    dimension_reduction, mixture_to_schedule, recover_decision, AssortmentMixture, OfferSchedule,
    RecoveryError, StaticDecision,
};
use crate::reformulate::{
    build_network_program, build_pricing_only_program, ProgramKind, VariableMap,
};
use thiserror::Error;

/// Which program the pipeline compiles and how the result is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    Network,
    Static,
    PricingOnly,
    FixedPrice,
}

impl SolveMode {
    pub fn label(&self) -> &'static str {
        match self {
            SolveMode::Network => "network",
            SolveMode::Static => "static",
            SolveMode::PricingOnly => "pricing-only",
            SolveMode::FixedPrice => "fixed-price",
        }
    }
}

/// Everything produced by one pipeline run.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub mode: SolveMode,
    pub kind: ProgramKind,
    pub decision: StaticDecision,
    pub mixture: AssortmentMixture,
    pub schedule: OfferSchedule,
    /// Profit per unit time (equals `decision.objective`).
    pub objective: f64,
    pub duality_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// Usage of every resource of the passed model, per unit time,
    /// reported (not enforced) even in static mode.
    pub resource_usage: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("solver stopped with status {status:?}")]
    Solver { status: SolveStatus },
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error("fixed-price mode requires x_lower == x_upper, but product {product} has a non-degenerate box")]
    FixedPriceBounds { product: usize },
}

/// Compiles the program a given mode would solve, without solving it.
pub fn compile(
    inst: &McInstance,
    resources: &ResourceModel,
    mode: SolveMode,
) -> Result<(crate::ConicProgram, VariableMap), PipelineError> {
    Ok(match mode {
        SolveMode::Network => build_network_program(inst, resources),
        SolveMode::Static => {
            let unconstrained = ResourceModel::unconstrained(inst.n())
                .with_lambda_bar(resources.lambda_bar());
            build_network_program(inst, &unconstrained)
        }
        SolveMode::PricingOnly => build_pricing_only_program(inst, resources),
        SolveMode::FixedPrice => {
            for j in 0..inst.n() {
                if inst.x_lower()[j] != inst.x_upper()[j] {
                    return Err(PipelineError::FixedPriceBounds { product: j });
                }
            }
            build_network_program(inst, resources)
        }
    })
}

/// Runs validate-free inputs through compile, solve, recover, reduce.
pub fn run(
    inst: &McInstance,
    resources: &ResourceModel,
    mode: SolveMode,
    solver: &SolverSettings,
) -> Result<PipelineResult, PipelineError> {
    let (prog, vm) = compile(inst, resources, mode)?;
    let sol: PrimalDualSolution = solve(&prog, solver);
    if sol.status != SolveStatus::Optimal {
        return Err(PipelineError::Solver { status: sol.status });
    }
    let decision = recover_decision(&sol, &vm, inst)?;
    let mixture = dimension_reduction(inst, &decision)?;
    let schedule = mixture_to_schedule(&mixture);
    let resource_usage = intensity_resource_usage(
        inst,
        resources,
        &decision.visit_rates,
        &decision.prices,
        &decision.intensities,
    );
    Ok(PipelineResult {
        mode,
        kind: vm.kind(),
        objective: decision.objective,
        duality_gap: sol.duality_gap,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        iterations: sol.iterations,
        decision,
        mixture,
        schedule,
        resource_usage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        validate_instance, validate_resources, UncheckedInstance, UncheckedResources,
    };

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

    #[test]
    fn static_mode_matches_resource_free_network_mode() {
        let inst = two_products();
        let rm = validate_resources(&UncheckedResources {
            n_resources: 1,
            n_products: 2,
            phi: vec![1.0, 1.0],
            capacity: vec![None],
            lambda_bar: 1.7,
        })
        .unwrap();
        let solver = SolverSettings::default();
        let network = run(&inst, &rm, SolveMode::Network, &solver).unwrap();
        let fixed = run(&inst, &rm, SolveMode::Static, &solver).unwrap();
        // No capacity is bounded, so the two compiles are identical.
        assert_eq!(network.objective, fixed.objective);
        assert_eq!(network.decision.prices, fixed.decision.prices);
    }

    #[test]
    fn fixed_price_mode_requires_collapsed_boxes() {
        let inst = two_products();
        let rm = ResourceModel::unconstrained(2);
        let err = run(&inst, &rm, SolveMode::FixedPrice, &SolverSettings::default())
            .unwrap_err();
        assert_eq!(err, PipelineError::FixedPriceBounds { product: 0 });
    }

    #[test]
    fn fixed_price_mode_returns_the_pinned_prices() {
        let inst = validate_instance(&UncheckedInstance {
            n: 2,
            theta: vec![0.6, 0.4],
            rho: vec![0.0, 0.3, 0.2, 0.0],
            alpha: vec![0.0, -0.1],
            beta: vec![1.0, 0.8],
            psi: vec![0.5, 0.2],
            x_lower: vec![1.5, 2.0],
            x_upper: vec![1.5, 2.0],
        })
        .unwrap();
        let rm = ResourceModel::unconstrained(2);
        let out = run(&inst, &rm, SolveMode::FixedPrice, &SolverSettings::default()).unwrap();
        assert_eq!(out.decision.prices, vec![1.5, 2.0]);
    }

    #[test]
    fn iteration_budget_surfaces_as_solver_error() {
        let inst = two_products();
        let rm = ResourceModel::unconstrained(2);
        let starved = SolverSettings {
            max_iters: 3,
            ..SolverSettings::default()
        };
        let err = run(&inst, &rm, SolveMode::Network, &starved).unwrap_err();
        assert_eq!(
            err,
            PipelineError::Solver {
                status: SolveStatus::IterLimit
            }
        );
    }
}
