//! End-to-end solves: compile, solve, recover, cross-check duality.

use mcprice::model::{
    expected_profit, intensity_profit, validate_instance, validate_resources, UncheckedInstance,
    UncheckedResources,
};
use mcprice::recovery::{dimension_reduction, mixture_to_schedule, recover_decision};
use mcprice::reformulate::{
    build_network_program, build_pricing_only_program, build_static_dual_program,
    build_static_program, strictly_feasible_dual_point,
};
use mcprice::{McInstance, ResourceModel, SolveStatus, SolverSettings};

fn solve_tight(prog: &mcprice::ConicProgram) -> mcprice::PrimalDualSolution {
    let settings = SolverSettings {
        tolerance: 1e-9,
        ..SolverSettings::default()
    };
    mcprice::conic::solve(prog, &settings)
}

fn single_product() -> McInstance {
    validate_instance(&UncheckedInstance {
        n: 1,
        theta: vec![1.0],
        rho: vec![0.0],
        alpha: vec![0.0],
        beta: vec![1.0],
        psi: vec![0.0],
        x_lower: vec![0.0],
        x_upper: vec![10.0],
    })
    .unwrap()
}

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
fn single_product_static_optimum_is_inverse_e() {
    // For theta = 1, rho = 0, alpha = 0, beta = 1, psi = 0 the profit is
    // x e^{-x} / (1 + a(e^{-x} - 1) ... ) reduced by balance to the
    // textbook maximum e^{-1} at x = 1, a = 1.
    let inst = single_product();
    let (prog, vm) = build_static_program(&inst);
    let sol = solve_tight(&prog);
    assert_eq!(sol.status, SolveStatus::Optimal, "residuals {sol:?}");
    let opt = prog.objective_value(&sol.primal);
    assert!(
        (opt - (-1.0f64).exp()).abs() < 1e-7,
        "objective {opt} vs e^-1, iterations {}",
        sol.iterations
    );
    let dec = recover_decision(&sol, &vm, &inst).unwrap();
    assert!((dec.prices[0] - 1.0).abs() < 1e-3, "price {}", dec.prices[0]);
    assert!(dec.intensities[0] > 1.0 - 1e-4);
    assert!((dec.objective - (-1.0f64).exp()).abs() < 1e-7);
}

#[test]
fn static_primal_and_explicit_dual_agree() {
    let inst = two_products();
    let (primal, _) = build_static_program(&inst);
    let (dual, dvm) = build_static_dual_program(&inst);
    let psol = solve_tight(&primal);
    let dsol = solve_tight(&dual);
    assert_eq!(psol.status, SolveStatus::Optimal);
    assert_eq!(dsol.status, SolveStatus::Optimal);
    let p = primal.objective_value(&psol.primal);
    let d = dual.objective_value(&dsol.primal);
    assert!((p - d).abs() <= 1e-6 * (1.0 + p.abs()), "primal {p} dual {d}");

    // The primal solver's dual vector is itself a feasible point of the
    // explicit dual with matching objective.
    let n = inst.n();
    let mut stacked = vec![0.0; 6 * n];
    for j in 0..n {
        stacked[dvm.eta_col(j)] = psol.dual[j];
        for k in 1..=3 {
            stacked[dvm.pi_col(j, k)] = psol.dual[3 * n + 3 * j + (k - 1)];
        }
        stacked[dvm.nu_upper_col(j)] = psol.dual[n + 2 * j];
        stacked[dvm.nu_lower_col(j)] = psol.dual[n + 2 * j + 1];
    }
    let viol = dual.max_violation(&stacked);
    assert!(viol <= 1e-6, "extracted dual violates the explicit dual by {viol}");
    let extracted_obj = dual.objective_value(&stacked);
    assert!((extracted_obj - p).abs() <= 1e-6 * (1.0 + p.abs()));
}

#[test]
fn interior_dual_point_upper_bounds_the_primal() {
    let inst = two_products();
    let (primal, _) = build_static_program(&inst);
    let (dual, dvm) = build_static_dual_program(&inst);
    let psol = solve_tight(&primal);
    let p = primal.objective_value(&psol.primal);
    let point = strictly_feasible_dual_point(&inst).to_vector(&dvm);
    // Weak duality: any dual-feasible point bounds the primal optimum.
    assert!(dual.objective_value(&point) >= p - 1e-7);
}

#[test]
fn network_solve_respects_binding_capacity() {
    let inst = two_products();
    let resources = validate_resources(&UncheckedResources {
        n_resources: 1,
        n_products: 2,
        phi: vec![1.0, 1.0],
        capacity: vec![Some(0.15)],
        lambda_bar: 1.2,
    })
    .unwrap();
    let (prog, vm) = build_network_program(&inst, &resources);
    let sol = solve_tight(&prog);
    assert_eq!(sol.status, SolveStatus::Optimal);
    let dec = recover_decision(&sol, &vm, &inst).unwrap();
    // Usage of the binding resource stays within capacity (tolerance for
    // the conic residual).
    let usage: f64 = (0..2)
        .map(|j| {
            1.2 * dec.intensities[j]
                * inst.demand(j, dec.prices[j])
                * dec.visit_rates[j]
        })
        .sum();
    assert!(usage <= 0.15 + 1e-6, "usage {usage}");

    // The mixture over assortments replays the same objective and usage.
    let mix = dimension_reduction(&inst, &dec).unwrap();
    let mix_profit = mix.expected_profit(&inst, 1.2);
    assert!((mix_profit - dec.objective).abs() <= 1e-6 * (1.0 + dec.objective.abs()));
    let mix_usage = mix.expected_usage(&inst, &resources)[0];
    assert!(mix_usage <= 0.15 + 1e-6);
    let schedule = mixture_to_schedule(&mix);
    assert!(!schedule.entries.is_empty());

    // Capacity binds: the unconstrained optimum uses more than 0.15.
    let (unc, uvm) = build_network_program(
        &inst,
        &ResourceModel::unconstrained(2).with_lambda_bar(1.2),
    );
    let usol = solve_tight(&unc);
    let udec = recover_decision(&usol, &uvm, &inst).unwrap();
    let uusage: f64 = (0..2)
        .map(|j| {
            1.2 * udec.intensities[j]
                * inst.demand(j, udec.prices[j])
                * udec.visit_rates[j]
        })
        .sum();
    assert!(uusage > 0.15 + 1e-3, "capacity would not bind: {uusage}");
    assert!(udec.objective > dec.objective);
}

#[test]
fn pricing_only_offers_everything() {
    let inst = two_products();
    let resources = ResourceModel::unconstrained(2).with_lambda_bar(1.0);
    let (prog, vm) = build_pricing_only_program(&inst, &resources);
    let sol = solve_tight(&prog);
    assert_eq!(sol.status, SolveStatus::Optimal);
    let dec = recover_decision(&sol, &vm, &inst).unwrap();
    for j in 0..2 {
        assert!(
            dec.intensities[j] >= 1.0 - 1e-5,
            "product {j} intensity {}",
            dec.intensities[j]
        );
    }
    // Forcing the full assortment cannot beat free assortment choice.
    let (free, fvm) = build_static_program(&inst);
    let fsol = solve_tight(&free);
    let fdec = recover_decision(&fsol, &fvm, &inst).unwrap();
    assert!(fdec.objective >= dec.objective - 1e-7);

    // And the recovered full-offer decision price matches a direct
    // profit comparison at a = 1 against nearby prices.
    let probe = |x: &[f64]| {
        expected_profit(
            &inst,
            &resources,
            &mcprice::Assortment::full(2),
            x,
        )
    };
    let base = probe(&dec.prices);
    for j in 0..2 {
        for delta in [-1e-3, 1e-3] {
            let mut x = dec.prices.clone();
            x[j] = (x[j] + delta).clamp(inst.x_lower()[j], inst.x_upper()[j]);
            assert!(probe(&x) <= base + 1e-7, "not a local max in coordinate {j}");
        }
    }
}

#[test]
fn fractional_static_solution_decomposes_exactly() {
    // A tight joint capacity forces fractional intensities in the network
    // program; dimension reduction must reproduce the sales rates.
    let inst = two_products();
    let resources = validate_resources(&UncheckedResources {
        n_resources: 1,
        n_products: 2,
        phi: vec![1.0, 0.4],
        capacity: vec![Some(0.08)],
        lambda_bar: 1.0,
    })
    .unwrap();
    let (prog, vm) = build_network_program(&inst, &resources);
    let sol = solve_tight(&prog);
    assert_eq!(sol.status, SolveStatus::Optimal);
    let dec = recover_decision(&sol, &vm, &inst).unwrap();
    let mix = dimension_reduction(&inst, &dec).unwrap();
    assert!(mix.assortments.len() <= 3);
    let rates = mix.sales_rates(&inst);
    for j in 0..2 {
        let target =
            dec.intensities[j] * inst.demand(j, dec.prices[j]) * dec.visit_rates[j];
        assert!((rates[j] - target).abs() < 1e-7);
    }
    let replay = intensity_profit(
        &inst,
        1.0,
        &dec.visit_rates,
        &dec.prices,
        &dec.intensities,
    );
    assert!((replay - dec.objective).abs() < 1e-9);
}
