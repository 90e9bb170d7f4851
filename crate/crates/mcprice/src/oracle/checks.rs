//! Verification suites comparing the pipeline against independent math.
//!
//! Each check returns a [`CheckOutcome`] with its worst observed margin
//! (positive means slack, negative means the property failed) and a
//! debug dump of the first counterexample, so a failing run is
//! reproducible from the report alone.

use crate::conic::SolverSettings;
use crate::exec::map_range;
use crate::model::{
    expected_profit, resource_usage, validate_instance, Assortment, McInstance, ResourceModel,
    UncheckedInstance,
};
use crate::oracle::generate::{perturb_instance, simplex_point};
use crate::oracle::grid::{mixture_lp, optimize_prices, price_lipschitz_bound};
use crate::oracle::{enumerate_assortment_optimum, OracleSettings};
use crate::pipeline::{run, SolveMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Intensities this close to 0 or 1 count as integral.
const INTEGRALITY_TOL: f64 = 1e-6;
/// Slack allowed over the pipeline optimum before a sampled schedule
/// counts as a dominance violation.
const DOMINANCE_TOL: f64 = 1e-6;
/// Absolute floor added to every grid-resolution bound.
const GRID_SLACK: f64 = 1e-4;
/// Agreement required of the fixed-price special case.
const FIXED_PRICE_TOL: f64 = 1e-6;

/// Result of one verification suite.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub trials: usize,
    /// Most adverse margin seen; nonnegative iff the check passed.
    pub worst_margin: f64,
    pub detail: String,
    /// Debug dump of the first failing instance, if any.
    pub counterexample: Option<String>,
}

impl CheckOutcome {
    fn pass(name: &str, trials: usize, worst_margin: f64, detail: String) -> CheckOutcome {
        CheckOutcome {
            name: name.into(),
            passed: true,
            trials,
            worst_margin,
            detail,
            counterexample: None,
        }
    }

    fn fail(
        name: &str,
        trials: usize,
        worst_margin: f64,
        detail: String,
        witness: String,
    ) -> CheckOutcome {
        CheckOutcome {
            name: name.into(),
            passed: false,
            trials,
            worst_margin,
            detail,
            counterexample: Some(witness),
        }
    }
}

fn solver() -> SolverSettings {
    SolverSettings {
        tolerance: 1e-9,
        ..SolverSettings::default()
    }
}

/// Without resources, every recovered intensity must be integral. Runs
/// the static pipeline on `trials` perturbations of `base`.
pub fn check_integrality(
    base: &McInstance,
    trials: usize,
    s: &OracleSettings,
) -> CheckOutcome {
    let name = "integrality";
    let outcomes = map_range(s.parallelism, trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(t as u64));
        let inst = perturb_instance(&mut rng, base);
        let rm = ResourceModel::unconstrained(inst.n());
        match run(&inst, &rm, SolveMode::Static, &solver()) {
            Ok(out) => {
                let deviation = out
                    .decision
                    .intensities
                    .iter()
                    .map(|&a| a.min(1.0 - a))
                    .fold(0.0f64, f64::max);
                (deviation, inst)
            }
            Err(e) => (f64::INFINITY, {
                let _ = e;
                inst
            }),
        }
    });
    let mut worst = 0.0f64;
    let mut witness = None;
    for (deviation, inst) in outcomes {
        if deviation > worst {
            worst = deviation;
            if deviation > INTEGRALITY_TOL {
                witness.get_or_insert_with(|| format!("{inst:?}"));
            }
        }
    }
    let margin = INTEGRALITY_TOL - worst;
    let detail = format!("largest distance of any intensity from {{0,1}}: {worst:.3e}");
    match witness {
        None => CheckOutcome::pass(name, trials, margin, detail),
        Some(w) => CheckOutcome::fail(name, trials, margin, detail, w),
    }
}

/// Two-sided sandwich: the pipeline optimum and the exhaustive grid
/// optimum differ by at most the grid resolution bound `L h + 1e-4`.
pub fn check_sandwich(
    inst: &McInstance,
    rm: &ResourceModel,
    s: &OracleSettings,
) -> CheckOutcome {
    let name = "sandwich";
    let pipe = match run(inst, rm, SolveMode::Network, &solver()) {
        Ok(out) => out.objective,
        Err(e) => {
            return CheckOutcome::fail(
                name,
                1,
                f64::NEG_INFINITY,
                format!("pipeline failed: {e}"),
                format!("{inst:?}"),
            )
        }
    };
    let oracle = enumerate_assortment_optimum(inst, rm, s);
    let h = s.grid_step_for(inst.n(), !rm.bounded_resources().is_empty());
    let bound = price_lipschitz_bound(inst, rm.lambda_bar()) * h + GRID_SLACK;
    let diff = (pipe - oracle.objective).abs();
    let margin = bound - diff;
    let detail = format!(
        "pipeline {pipe:.9}, oracle {:.9}, |diff| {diff:.3e}, bound {bound:.3e}",
        oracle.objective
    );
    if margin >= 0.0 {
        CheckOutcome::pass(name, 1, margin, detail)
    } else {
        CheckOutcome::fail(name, 1, margin, detail, format!("{inst:?}"))
    }
}

/// One sampled piecewise-constant schedule: segments of (assortment,
/// prices) with simplex durations.
#[derive(Clone, Debug)]
pub struct ScheduleSample {
    pub fractions: Vec<f64>,
    pub assortments: Vec<Assortment>,
    pub prices: Vec<Vec<f64>>,
}

impl ScheduleSample {
    /// Time-average profit per unit time.
    pub fn value(&self, inst: &McInstance, rm: &ResourceModel) -> f64 {
        self.fractions
            .iter()
            .zip(&self.assortments)
            .zip(&self.prices)
            .map(|((&f, a), x)| f * expected_profit(inst, rm, a, x))
            .sum()
    }

    /// Time-average usage of every resource.
    pub fn usage(&self, inst: &McInstance, rm: &ResourceModel) -> Vec<f64> {
        let mut total = vec![0.0; rm.n_resources()];
        for ((&f, a), x) in self.fractions.iter().zip(&self.assortments).zip(&self.prices) {
            for (r, u) in resource_usage(inst, rm, a, x).iter().enumerate() {
                total[r] += f * u;
            }
        }
        total
    }

    fn feasible(&self, inst: &McInstance, rm: &ResourceModel) -> bool {
        let usage = self.usage(inst, rm);
        rm.bounded_resources()
            .iter()
            .all(|&r| usage[r] <= rm.capacity(r).unwrap() + 1e-12)
    }
}

fn sample_schedule<R: Rng>(rng: &mut R, inst: &McInstance, segments: usize) -> ScheduleSample {
    let n = inst.n();
    let fractions = simplex_point(rng, segments);
    let assortments = (0..segments)
        .map(|_| Assortment::from_mask(rng.gen_range(0..(1u64 << n)), n))
        .collect();
    let prices = (0..segments)
        .map(|_| {
            (0..n)
                .map(|j| rng.gen_range(inst.x_lower()[j]..=inst.x_upper()[j]))
                .collect()
        })
        .collect();
    ScheduleSample {
        fractions,
        assortments,
        prices,
    }
}

/// Time-varying prices cannot beat the constant-price optimum: samples
/// feasible two- and three-segment schedules and confirms none exceeds
/// the pipeline optimum beyond tolerance. The pipeline's own schedule is
/// replayed first and must match its reported objective almost exactly.
pub fn verify_constant_price_dominance(
    inst: &McInstance,
    rm: &ResourceModel,
    s: &OracleSettings,
) -> CheckOutcome {
    let name = "dominance";
    let out = match run(inst, rm, SolveMode::Network, &solver()) {
        Ok(out) => out,
        Err(e) => {
            return CheckOutcome::fail(
                name,
                0,
                f64::NEG_INFINITY,
                format!("pipeline failed: {e}"),
                format!("{inst:?}"),
            )
        }
    };
    let opt = out.objective;

    // Self-replay: the mixture is itself a feasible schedule.
    let own = ScheduleSample {
        fractions: out.mixture.weights.clone(),
        assortments: out.mixture.assortments.clone(),
        prices: vec![out.decision.prices.clone(); out.mixture.weights.len()],
    };
    let own_value = own.value(inst, rm);
    if (own_value - opt).abs() > 1e-8 * (1.0 + opt.abs()) {
        return CheckOutcome::fail(
            name,
            0,
            opt - own_value,
            format!("self-replay {own_value:.12} vs optimum {opt:.12}"),
            format!("{inst:?}"),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5eed_d011);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let mut worst = f64::INFINITY;
    let mut witness = None;
    while accepted < s.schedule_samples && attempts < 50 * s.schedule_samples.max(1) {
        attempts += 1;
        let segments = 2 + (attempts % 2);
        let sched = sample_schedule(&mut rng, inst, segments);
        if !sched.feasible(inst, rm) {
            continue;
        }
        accepted += 1;
        let margin = opt + DOMINANCE_TOL - sched.value(inst, rm);
        if margin < worst {
            worst = margin;
            if margin < 0.0 && witness.is_none() {
                witness = Some(format!("{sched:?} on {inst:?}"));
            }
        }
    }
    let detail = format!(
        "{accepted} feasible schedules (of {attempts} draws), self-replay gap {:.2e}, slack {worst:.3e}",
        (own_value - opt).abs()
    );
    match witness {
        None if accepted > 0 => CheckOutcome::pass(name, accepted, worst, detail),
        None => CheckOutcome::fail(
            name,
            0,
            f64::NEG_INFINITY,
            "no feasible schedule sampled".into(),
            format!("{inst:?}"),
        ),
        Some(w) => CheckOutcome::fail(name, accepted, worst, detail, w),
    }
}

/// Best value of a two-price schedule offering everything: time is split
/// between price vectors `x_a` and `x_b` to maximize profit subject to
/// the time-averaged resource constraints. Returns `None` when no split
/// is feasible. A one-dimensional linear program solved at its vertices.
pub fn two_price_schedule_value(
    inst: &McInstance,
    rm: &ResourceModel,
    x_a: &[f64],
    x_b: &[f64],
) -> Option<f64> {
    let full = Assortment::full(inst.n());
    let p_a = expected_profit(inst, rm, &full, x_a);
    let p_b = expected_profit(inst, rm, &full, x_b);
    let u_a = resource_usage(inst, rm, &full, x_a);
    let u_b = resource_usage(inst, rm, &full, x_b);
    let feasible = |t: f64| {
        rm.bounded_resources().iter().all(|&r| {
            t * u_a[r] + (1.0 - t) * u_b[r] <= rm.capacity(r).unwrap() + 1e-12
        })
    };
    let mut candidates = vec![0.0, 1.0];
    for &r in &rm.bounded_resources() {
        let denom = u_a[r] - u_b[r];
        if denom.abs() > 1e-15 {
            let t = (rm.capacity(r).unwrap() - u_b[r]) / denom;
            if (0.0..=1.0).contains(&t) {
                candidates.push(t);
            }
        }
    }
    candidates
        .into_iter()
        .filter(|&t| feasible(t))
        .map(|t| t * p_a + (1.0 - t) * p_b)
        .max_by(f64::total_cmp)
}

/// Collapses the price box to its midpoint and confirms the fixed-price
/// pipeline returns those exact prices with an optimum matching direct
/// assortment enumeration (a mixture linear program when resources bind).
pub fn check_fixed_price_case(
    inst: &McInstance,
    rm: &ResourceModel,
    s: &OracleSettings,
) -> CheckOutcome {
    let name = "fixed-price";
    let n = inst.n();
    assert!(n <= s.assortment_cap, "enumeration capped at {}", s.assortment_cap);
    let target: Vec<f64> = (0..n)
        .map(|j| 0.5 * (inst.x_lower()[j] + inst.x_upper()[j]))
        .collect();
    let pinned = validate_instance(&UncheckedInstance {
        n,
        theta: inst.theta().to_vec(),
        rho: (0..n * n).map(|k| inst.rho(k / n, k % n)).collect(),
        alpha: inst.alpha().to_vec(),
        beta: inst.beta().to_vec(),
        psi: inst.psi().to_vec(),
        x_lower: target.clone(),
        x_upper: target.clone(),
    })
    .expect("collapsing the box preserves validity");
    let out = match run(&pinned, rm, SolveMode::FixedPrice, &solver()) {
        Ok(out) => out,
        Err(e) => {
            return CheckOutcome::fail(
                name,
                1,
                f64::NEG_INFINITY,
                format!("pipeline failed: {e}"),
                format!("{pinned:?}"),
            )
        }
    };
    if out.decision.prices != target {
        return CheckOutcome::fail(
            name,
            1,
            f64::NEG_INFINITY,
            format!("prices {:?} differ from pinned {target:?}", out.decision.prices),
            format!("{pinned:?}"),
        );
    }
    let oracle = if rm.bounded_resources().is_empty() {
        (0..(1usize << n))
            .map(|mask| {
                expected_profit(&pinned, rm, &Assortment::from_mask(mask as u64, n), &target)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        mixture_lp(&pinned, rm, &target).0
    };
    let diff = (out.objective - oracle).abs();
    let margin = FIXED_PRICE_TOL - diff;
    let detail = format!(
        "pipeline {:.9}, enumeration {oracle:.9}, |diff| {diff:.3e}",
        out.objective
    );
    if margin >= 0.0 {
        CheckOutcome::pass(name, 1 << n, margin, detail)
    } else {
        CheckOutcome::fail(name, 1 << n, margin, detail, format!("{pinned:?}"))
    }
}

/// Pricing-only mode must offer every visited product fully and match a
/// full-assortment price search within the grid-resolution bound.
pub fn check_pricing_only_case(
    inst: &McInstance,
    rm: &ResourceModel,
    s: &OracleSettings,
) -> CheckOutcome {
    let name = "pricing-only";
    let n = inst.n();
    let out = match run(inst, rm, SolveMode::PricingOnly, &solver()) {
        Ok(out) => out,
        Err(e) => {
            return CheckOutcome::fail(
                name,
                1,
                f64::NEG_INFINITY,
                format!("pipeline failed: {e}"),
                format!("{inst:?}"),
            )
        }
    };
    let off = (0..n)
        .filter(|&j| out.decision.visit_rates[j] > 1e-9)
        .map(|j| 1.0 - out.decision.intensities[j])
        .fold(0.0f64, f64::max);
    if off > 1e-5 {
        return CheckOutcome::fail(
            name,
            1,
            -off,
            format!("visited product offered at intensity 1 - {off:.3e}"),
            format!("{inst:?}"),
        );
    }

    let full = Assortment::full(n);
    let bounded = rm.bounded_resources();
    let eval = |x: &[f64]| {
        if !bounded.is_empty() {
            let usage = resource_usage(inst, rm, &full, x);
            let ok = bounded
                .iter()
                .all(|&r| usage[r] <= rm.capacity(r).unwrap() + 1e-12);
            if !ok {
                return f64::NEG_INFINITY;
            }
        }
        expected_profit(inst, rm, &full, x)
    };
    let free: Vec<usize> = (0..n).collect();
    let h = s.grid_step_for(n, !bounded.is_empty());
    let (oracle, _, _) = optimize_prices(inst, &free, h, s.seed, s.parallelism, &eval);
    let bound = price_lipschitz_bound(inst, rm.lambda_bar()) * h + GRID_SLACK;
    let diff = (out.objective - oracle).abs();
    let margin = bound - diff;
    let detail = format!(
        "pipeline {:.9}, grid {oracle:.9}, |diff| {diff:.3e}, bound {bound:.3e}",
        out.objective
    );
    if margin >= 0.0 {
        CheckOutcome::pass(name, 1, margin, detail)
    } else {
        CheckOutcome::fail(name, 1, margin, detail, format!("{inst:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_resources, UncheckedResources};

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

    fn remark_fixture() -> (McInstance, ResourceModel) {
        let inst = validate_instance(&UncheckedInstance {
            n: 1,
            theta: vec![1.0],
            rho: vec![0.0],
            alpha: vec![1.0],
            beta: vec![1.0],
            psi: vec![0.0],
            x_lower: vec![1.0],
            x_upper: vec![3.0],
        })
        .unwrap();
        let rm = validate_resources(&UncheckedResources {
            n_resources: 1,
            n_products: 1,
            phi: vec![1.0],
            capacity: vec![Some(0.5)],
            lambda_bar: 1.0,
        })
        .unwrap();
        (inst, rm)
    }

    fn quick_settings() -> OracleSettings {
        OracleSettings {
            price_step: Some(0.02),
            schedule_samples: 60,
            ..OracleSettings::default()
        }
    }

    #[test]
    fn integrality_holds_on_perturbations() {
        let outcome = check_integrality(&two_products(), 10, &quick_settings());
        assert!(outcome.passed, "{}", outcome.detail);
    }

    #[test]
    fn sandwich_holds_without_resources() {
        let rm = ResourceModel::unconstrained(2);
        let outcome = check_sandwich(&two_products(), &rm, &quick_settings());
        assert!(outcome.passed, "{}", outcome.detail);
    }

    #[test]
    fn dominance_holds_on_the_capacity_fixture() {
        let (inst, rm) = remark_fixture();
        let outcome = verify_constant_price_dominance(&inst, &rm, &quick_settings());
        assert!(outcome.passed, "{}", outcome.detail);
    }

    #[test]
    fn two_price_schedule_stays_below_the_optimum() {
        // Two prices around the constrained optimum x = 1 + ln 2: the best
        // time split is strictly worse than the single-price optimum.
        let (inst, rm) = remark_fixture();
        let value = two_price_schedule_value(&inst, &rm, &[1.2], &[2.5]).unwrap();
        let t = (0.5 - (-1.5f64).exp()) / ((-0.2f64).exp() - (-1.5f64).exp());
        let expect = 1.2 * t * (-0.2f64).exp() + 2.5 * (1.0 - t) * (-1.5f64).exp();
        assert!((value - expect).abs() < 1e-12);
        let single = 0.5 * (1.0 + 2.0f64.ln());
        assert!(value < single);
        // And the constrained single price lies between the two samples.
        let x_star = 1.0 + 2.0f64.ln();
        assert!((1.2..=2.5).contains(&x_star));
    }

    #[test]
    fn fixed_price_matches_enumeration() {
        let rm = ResourceModel::unconstrained(2);
        let outcome = check_fixed_price_case(&two_products(), &rm, &quick_settings());
        assert!(outcome.passed, "{}", outcome.detail);
    }

    #[test]
    fn pricing_only_matches_full_assortment_grid() {
        let rm = ResourceModel::unconstrained(2);
        let outcome = check_pricing_only_case(&two_products(), &rm, &quick_settings());
        assert!(outcome.passed, "{}", outcome.detail);
    }
}
