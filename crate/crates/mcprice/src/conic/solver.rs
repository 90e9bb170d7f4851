//! First-order conic solver: operator splitting on the homogeneous
//! self-dual embedding.
//!
//! The program `min c'x  s.t.  Ax + s = b, s in K` (a maximize sense is
//! negated on entry) and its dual are embedded in the skew system
//! `v = Q u` with `u = (x, y, tau)`, `v = (r, s, kappa)`,
//!
//! ```text
//!     [ 0   A'  c ]
//! Q = [-A   0   b ]
//!     [-c' -b'  0 ]
//! ```
//!
//! seeking `u in C = R^n x K* x R+`, `v in C* = {0}^n x K x R+`,
//! `<u, v> = 0`. Douglas-Rachford splitting alternates the linear solve
//! `(I + Q)^{-1}` (LU-factored once; `I + Q` is nonsingular because `Q` is
//! skew) with the cone projection onto `C`, plus over-relaxation. The
//! iteration is carried in its fixed-point variable `t` (the pre-projection
//! point, `u = proj_C(t)`, `v = u - t`): one pass is
//!
//! ```text
//! F(t) = t + alpha * ((I + Q)^{-1} (2 proj_C(t) - t) - proj_C(t))
//! ```
//!
//! Safeguarded Anderson acceleration extrapolates `t` from recent residual
//! differences; a candidate is kept only if it does not increase the
//! fixed-point residual (plain relaxed splitting never does), so the
//! safeguard evaluation doubles as the next iteration and costs nothing
//! extra on acceptance.
//!
//! Convergence is always judged on the *unscaled* problem: every
//! `CHECK_INTERVAL` iterations the candidate `(x, y, s) = (u_x, u_y, v_s) /
//! tau` is unscaled and its primal residual, dual residual, and duality gap
//! are compared against `tolerance`. Diverging rays (`tau -> 0`) yield
//! infeasibility or unboundedness certificates. Everything is
//! deterministic: fixed initialization, fixed pivoting, no randomness.
//!
//! Ruiz equilibration conditions `A`; rows of exponential blocks share one
//! uniform factor (the geometric mean) because the exponential cone is
//! invariant only under uniform positive scaling, while `Zero`/`Nonnegative`
//! rows scale per row.

use super::cones;
use super::program::{ConeKind, ConicProgram, Sense};
use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;

/// Solver configuration. `seed` is reserved for randomized restarts and
/// unused by the current deterministic method; it is kept so callers can
/// pin it in reports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// Termination tolerance on normalized residuals and duality gap.
    pub tolerance: f64,
    /// Iteration budget.
    pub max_iters: usize,
    /// Apply Ruiz equilibration before solving.
    pub scaling: bool,
    /// Reserved; see type docs.
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tolerance: 1e-8, max_iters: 200_000, scaling: true, seed: 0 }
    }
}

/// Outcome classification of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Residuals and gap below tolerance; `primal`/`dual` are the optimum.
    Optimal,
    /// Primal infeasible; `dual` holds the certificate `y` with
    /// `A'y ~ 0, b'y = -1, y in K*`.
    Infeasible,
    /// Primal unbounded (dual infeasible); `primal` holds the improving ray
    /// `x` with `Ax + s ~ 0, s in K, c'x = -1` in the minimize sense.
    Unbounded,
    /// Budget exhausted; best candidate and its residuals are reported.
    IterLimit,
}

/// Solution (or certificate) of a conic solve.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDualSolution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    /// Recovered slack `s`, same cone layout as the rows.
    pub slack: Vec<f64>,
    /// `||Ax + s - b|| / (1 + ||b||)` at the reported point.
    pub primal_residual: f64,
    /// `||A'y + c|| / (1 + ||c||)` at the reported point (minimize sense).
    pub dual_residual: f64,
    /// `|c'x + b'y| / (1 + |c'x| + |b'y|)` (minimize sense); infinite for
    /// certificate statuses.
    pub duality_gap: f64,
    pub iterations: usize,
}

const CHECK_INTERVAL: usize = 25;
const OVER_RELAXATION: f64 = 1.5;
const RUIZ_PASSES: usize = 15;
/// A ray direction is only considered once its objective drift passes this.
const RAY_FLOOR: f64 = 1e-12;
/// Secant pairs kept for Anderson acceleration.
const ACCEL_MEMORY: usize = 10;
/// Relative Tikhonov regularization of the acceleration least squares.
const ACCEL_REG: f64 = 1e-10;

/// Solves the program. Statuses encode every outcome; this never panics on
/// well-formed programs.
pub fn solve(prog: &ConicProgram, settings: &SolverSettings) -> PrimalDualSolution {
    Worker::new(prog, settings).run()
}

struct Worker<'a> {
    prog: &'a ConicProgram,
    settings: &'a SolverSettings,
    n: usize,
    m: usize,
    /// Minimize-sense objective (user objective negated for Maximize).
    c: Vec<f64>,
    b: Vec<f64>,
    /// Row scaling, rhs scale, column scaling, objective scale.
    d: Vec<f64>,
    e: Vec<f64>,
    gamma_b: f64,
    gamma_c: f64,
    /// Scaled triplets, rhs, objective.
    at: Vec<(usize, usize, f64)>,
    bt: Vec<f64>,
    ct: Vec<f64>,
}

struct Candidate {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    primal_residual: f64,
    dual_residual: f64,
    gap: f64,
}

impl<'a> Worker<'a> {
    fn new(prog: &'a ConicProgram, settings: &'a SolverSettings) -> Self {
        let n = prog.n_cols();
        let m = prog.n_rows();
        assert!(n >= 1 && m >= 1);
        let sign = match prog.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let c: Vec<f64> = prog.objective().iter().map(|v| sign * v).collect();
        let b = prog.rhs().to_vec();

        let (d, e) = if settings.scaling {
            equilibrate(prog)
        } else {
            (vec![1.0; m], vec![1.0; n])
        };
        let at: Vec<(usize, usize, f64)> =
            prog.triplets().iter().map(|&(r, cl, v)| (r, cl, v * d[r] * e[cl])).collect();
        let mut bt: Vec<f64> = b.iter().zip(&d).map(|(bi, di)| bi * di).collect();
        let mut ct: Vec<f64> = c.iter().zip(&e).map(|(ci, ei)| ci * ei).collect();
        let (gamma_b, gamma_c) = if settings.scaling {
            (norm2(&bt).max(1e-6), norm2(&ct).max(1e-6))
        } else {
            (1.0, 1.0)
        };
        for v in &mut bt {
            *v /= gamma_b;
        }
        for v in &mut ct {
            *v /= gamma_c;
        }

        Worker { prog, settings, n, m, c, b, d, e, gamma_b, gamma_c, at, bt, ct }
    }

    fn run(&mut self) -> PrimalDualSolution {
        let (n, m) = (self.n, self.m);
        let nn = n + m + 1;

        let mut iq = DMatrix::<f64>::identity(nn, nn);
        for &(r, cl, v) in &self.at {
            iq[(cl, n + r)] += v; //  A' block
            iq[(n + r, cl)] -= v; // -A  block
        }
        for j in 0..n {
            iq[(j, nn - 1)] += self.ct[j];
            iq[(nn - 1, j)] -= self.ct[j];
        }
        for i in 0..m {
            iq[(n + i, nn - 1)] += self.bt[i];
            iq[(nn - 1, n + i)] -= self.bt[i];
        }
        let lu = iq.lu();
        let mut buf = DVector::<f64>::zeros(nn);

        // Seed matching the classical start (u, v) = (e_nn, e_nn):
        // t_1 = alpha * ((I + Q)^{-1} (2 e_nn) - e_nn).
        buf[nn - 1] = 2.0;
        assert!(lu.solve_mut(&mut buf), "I + Q is nonsingular");
        let mut t = vec![0.0; nn];
        for k in 0..nn {
            t[k] = OVER_RELAXATION * buf[k];
        }
        t[nn - 1] -= OVER_RELAXATION;
        let mut p = vec![0.0; nn];
        self.project_onto_c(&t, &mut p);
        let mut g = vec![0.0; nn];
        let mut res = self.residual(&lu, &t, &p, &mut g, &mut buf);

        let mut accel = Accelerator::new(nn);
        let mut v = vec![0.0; nn];
        let mut t_next = vec![0.0; nn];
        let mut p_next = vec![0.0; nn];
        let mut g_next = vec![0.0; nn];

        let max_iters = self.settings.max_iters;
        let mut iter = 1;
        loop {
            // The final iterate never exits as Optimal: a tie between
            // convergence and the budget resolves to IterLimit.
            if iter % CHECK_INTERVAL == 0 && iter < max_iters {
                for k in 0..nn {
                    v[k] = p[k] - t[k];
                }
                let tau = p[nn - 1];
                if tau > 1e-9 {
                    let cand = self.candidate(&p, &v, tau);
                    let tol = self.settings.tolerance;
                    if cand.primal_residual <= tol
                        && cand.dual_residual <= tol
                        && cand.gap <= tol
                    {
                        return self.finish(SolveStatus::Optimal, cand, iter);
                    }
                }
                if let Some(sol) = self.try_certificates(&p, &v, iter) {
                    return sol;
                }
            }
            if iter == max_iters || !res.is_finite() {
                break;
            }

            // Plain pass F(t) = t + g, then an accelerated candidate when
            // history exists. The candidate is evaluated in place of the
            // next iterate and kept only if its residual does not grow.
            let mut advanced = false;
            if accel.extrapolate(&t, &g, &mut t_next) {
                self.project_onto_c(&t_next, &mut p_next);
                let cand_res = self.residual(&lu, &t_next, &p_next, &mut g_next, &mut buf);
                if cand_res <= res {
                    advanced = true;
                } else {
                    accel.clear();
                }
            }
            if !advanced {
                for k in 0..nn {
                    t_next[k] = t[k] + g[k];
                }
                self.project_onto_c(&t_next, &mut p_next);
                self.residual(&lu, &t_next, &p_next, &mut g_next, &mut buf);
            }
            accel.push(&t, &t_next, &g, &g_next);
            std::mem::swap(&mut t, &mut t_next);
            std::mem::swap(&mut p, &mut p_next);
            std::mem::swap(&mut g, &mut g_next);
            res = norm2(&g);
            iter += 1;
        }

        let tau = p[nn - 1];
        let cand = if tau > 1e-9 && tau.is_finite() {
            for k in 0..nn {
                v[k] = p[k] - t[k];
            }
            self.candidate(&p, &v, tau)
        } else {
            Candidate {
                x: vec![0.0; n],
                y: vec![0.0; m],
                s: vec![0.0; m],
                primal_residual: f64::INFINITY,
                dual_residual: f64::INFINITY,
                gap: f64::INFINITY,
            }
        };
        self.finish(SolveStatus::IterLimit, cand, max_iters)
    }

    /// Evaluates the fixed-point residual `g = F(t) - t` at `t` with
    /// `p = proj_C(t)` already computed; returns `||g||`.
    fn residual(
        &self,
        lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        t: &[f64],
        p: &[f64],
        g: &mut [f64],
        buf: &mut DVector<f64>,
    ) -> f64 {
        let nn = t.len();
        for k in 0..nn {
            buf[k] = 2.0 * p[k] - t[k];
        }
        assert!(lu.solve_mut(buf), "I + Q is nonsingular");
        for k in 0..nn {
            g[k] = OVER_RELAXATION * (buf[k] - p[k]);
        }
        norm2(g)
    }

    /// Projection onto `C = R^n x K* x R+` (free x, dual cones for y,
    /// nonnegative tau).
    fn project_onto_c(&self, t: &[f64], out: &mut [f64]) {
        let n = self.n;
        out[..n].copy_from_slice(&t[..n]);
        for block in self.prog.blocks() {
            let lo = n + block.offset;
            let hi = lo + block.dim;
            match block.kind {
                ConeKind::Zero => out[lo..hi].copy_from_slice(&t[lo..hi]),
                ConeKind::Nonnegative => {
                    for k in lo..hi {
                        out[k] = t[k].max(0.0);
                    }
                }
                ConeKind::Exponential => {
                    let q = cones::project_dual_exp_cone(&[t[lo], t[lo + 1], t[lo + 2]]);
                    out[lo..hi].copy_from_slice(&q);
                }
                ConeKind::DualExponential => {
                    let q = cones::project_exp_cone(&[t[lo], t[lo + 1], t[lo + 2]]);
                    out[lo..hi].copy_from_slice(&q);
                }
            }
        }
        let last = t.len() - 1;
        out[last] = t[last].max(0.0);
    }

    /// Unscales the iterate at `tau > 0` and evaluates residuals against
    /// the original data.
    fn candidate(&self, u: &[f64], v: &[f64], tau: f64) -> Candidate {
        let (n, m) = (self.n, self.m);
        let x: Vec<f64> =
            (0..n).map(|j| self.gamma_b * self.e[j] * u[j] / tau).collect();
        let y: Vec<f64> =
            (0..m).map(|i| self.gamma_c * self.d[i] * u[n + i] / tau).collect();
        let s: Vec<f64> =
            (0..m).map(|i| self.gamma_b / self.d[i] * v[n + i] / tau).collect();

        // Unscaled residuals from the original triplets.
        let mut pr = vec![0.0; m];
        for i in 0..m {
            pr[i] = s[i] - self.b[i];
        }
        let mut dr = self.c.clone();
        for &(r, cl, val) in self.prog.triplets() {
            pr[r] += val * x[cl];
            dr[cl] += val * y[r];
        }
        let pobj: f64 = self.c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
        let dobj: f64 = -self.b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum::<f64>();
        Candidate {
            primal_residual: norm2(&pr) / (1.0 + norm2(&self.b)),
            dual_residual: norm2(&dr) / (1.0 + norm2(&self.c)),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            x,
            y,
            s,
        }
    }

    /// Checks the current iterate for infeasibility/unboundedness rays.
    fn try_certificates(
        &self,
        u: &[f64],
        v: &[f64],
        iter: usize,
    ) -> Option<PrimalDualSolution> {
        let (n, m) = (self.n, self.m);
        let tol = self.settings.tolerance;

        // Primal infeasibility: y with b'y < 0, A'y ~ 0, y in K*.
        let yd: Vec<f64> = (0..m).map(|i| self.gamma_c * self.d[i] * u[n + i]).collect();
        let by: f64 = self.b.iter().zip(&yd).map(|(bi, yi)| bi * yi).sum();
        if by < -RAY_FLOOR {
            let yc: Vec<f64> = yd.iter().map(|yi| -yi / by).collect();
            let mut aty = vec![0.0; n];
            for &(r, cl, val) in self.prog.triplets() {
                aty[cl] += val * yc[r];
            }
            if norm2(&aty) <= tol {
                return Some(PrimalDualSolution {
                    status: SolveStatus::Infeasible,
                    primal: vec![0.0; n],
                    dual: yc,
                    slack: vec![0.0; m],
                    primal_residual: f64::INFINITY,
                    dual_residual: norm2(&aty),
                    duality_gap: f64::INFINITY,
                    iterations: iter,
                });
            }
        }

        // Unboundedness: x, s with c'x < 0, Ax + s ~ 0, s in K.
        let xd: Vec<f64> = (0..n).map(|j| self.gamma_b * self.e[j] * u[j]).collect();
        let cx: f64 = self.c.iter().zip(&xd).map(|(ci, xi)| ci * xi).sum();
        if cx < -RAY_FLOOR {
            let sd: Vec<f64> =
                (0..m).map(|i| self.gamma_b / self.d[i] * v[n + i]).collect();
            let xc: Vec<f64> = xd.iter().map(|xi| -xi / cx).collect();
            let sc: Vec<f64> = sd.iter().map(|si| -si / cx).collect();
            let mut ax_s = sc.clone();
            for &(r, cl, val) in self.prog.triplets() {
                ax_s[r] += val * xc[cl];
            }
            if norm2(&ax_s) <= tol {
                return Some(PrimalDualSolution {
                    status: SolveStatus::Unbounded,
                    primal: xc,
                    dual: vec![0.0; m],
                    slack: sc,
                    primal_residual: norm2(&ax_s),
                    dual_residual: f64::INFINITY,
                    duality_gap: f64::INFINITY,
                    iterations: iter,
                });
            }
        }
        None
    }

    fn finish(&self, status: SolveStatus, cand: Candidate, iter: usize) -> PrimalDualSolution {
        PrimalDualSolution {
            status,
            primal: cand.x,
            dual: cand.y,
            slack: cand.s,
            primal_residual: cand.primal_residual,
            dual_residual: cand.dual_residual,
            duality_gap: cand.gap,
            iterations: iter,
        }
    }
}

/// Anderson (type-II) extrapolation state over the fixed-point iterates.
struct Accelerator {
    nn: usize,
    /// Secant pairs `(delta t, delta g)`, oldest first.
    pairs: VecDeque<(Vec<f64>, Vec<f64>)>,
}

impl Accelerator {
    fn new(nn: usize) -> Self {
        Accelerator { nn, pairs: VecDeque::new() }
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn push(&mut self, t: &[f64], t_next: &[f64], g: &[f64], g_next: &[f64]) {
        let dt: Vec<f64> = (0..self.nn).map(|k| t_next[k] - t[k]).collect();
        let dg: Vec<f64> = (0..self.nn).map(|k| g_next[k] - g[k]).collect();
        if self.pairs.len() == ACCEL_MEMORY {
            self.pairs.pop_front();
        }
        self.pairs.push_back((dt, dg));
    }

    /// Writes the candidate `t + g - (S + Y) gamma` into `out`, with `gamma`
    /// the regularized minimizer of `||g - Y gamma||` over the stored
    /// residual differences `Y`. Returns false (leaving `out` untouched)
    /// without history or when the least squares degenerates.
    fn extrapolate(&self, t: &[f64], g: &[f64], out: &mut [f64]) -> bool {
        let mlen = self.pairs.len();
        if mlen == 0 {
            return false;
        }
        let mut gram = DMatrix::<f64>::zeros(mlen, mlen);
        let mut rhs = DVector::<f64>::zeros(mlen);
        for (i, (_, yi)) in self.pairs.iter().enumerate() {
            for (j, (_, yj)) in self.pairs.iter().enumerate().skip(i) {
                let dot: f64 = yi.iter().zip(yj).map(|(a, b)| a * b).sum();
                gram[(i, j)] = dot;
                gram[(j, i)] = dot;
            }
            rhs[i] = yi.iter().zip(g).map(|(a, b)| a * b).sum();
        }
        let reg = ACCEL_REG * gram.trace().max(f64::MIN_POSITIVE) / mlen as f64;
        for i in 0..mlen {
            gram[(i, i)] += reg;
        }
        let gamma = match gram.lu().solve(&rhs) {
            Some(sol) => sol,
            None => return false,
        };
        if !gamma.iter().all(|x| x.is_finite()) {
            return false;
        }
        for k in 0..self.nn {
            out[k] = t[k] + g[k];
        }
        for (j, (sj, yj)) in self.pairs.iter().enumerate() {
            let gj = gamma[j];
            for k in 0..self.nn {
                out[k] -= gj * (sj[k] + yj[k]);
            }
        }
        true
    }
}

/// Ruiz equilibration of `A` with block-uniform treatment of exponential
/// rows. Returns the diagonal row and column scalings `(d, e)`.
fn equilibrate(prog: &ConicProgram) -> (Vec<f64>, Vec<f64>) {
    let m = prog.n_rows();
    let n = prog.n_cols();
    let mut d = vec![1.0; m];
    let mut e = vec![1.0; n];
    for _ in 0..RUIZ_PASSES {
        let mut row_max = vec![0.0f64; m];
        let mut col_max = vec![0.0f64; n];
        for &(r, c, v) in prog.triplets() {
            let av = (v * d[r] * e[c]).abs();
            row_max[r] = row_max[r].max(av);
            col_max[c] = col_max[c].max(av);
        }
        for block in prog.blocks() {
            if matches!(block.kind, ConeKind::Exponential | ConeKind::DualExponential) {
                let rows = &mut row_max[block.offset..block.offset + block.dim];
                let positive: Vec<f64> = rows.iter().copied().filter(|&x| x > 0.0).collect();
                if !positive.is_empty() {
                    let gm = (positive.iter().map(|x| x.ln()).sum::<f64>()
                        / positive.len() as f64)
                        .exp();
                    for r in rows.iter_mut() {
                        *r = gm;
                    }
                }
            }
        }
        for i in 0..m {
            if row_max[i] > 0.0 {
                d[i] = (d[i] / row_max[i].sqrt()).clamp(1e-4, 1e4);
            }
        }
        for j in 0..n {
            if col_max[j] > 0.0 {
                e[j] = (e[j] / col_max[j].sqrt()).clamp(1e-4, 1e4);
            }
        }
    }
    (d, e)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
