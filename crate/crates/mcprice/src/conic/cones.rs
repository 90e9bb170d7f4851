//! Exponential cone geometry: membership tests and Euclidean projection.
//!
//! Coordinates are ordered `(a1, a2, a3)` with
//!
//! ```text
//! K_exp  = { a1 > 0, a2 > 0, a3 <= a2 * ln(a1 / a2) }  u  { a2 = 0, a1 >= 0, a3 <= 0 }
//! K*_exp = { b1 > 0, b3 < 0,  b1 >= -b3 * exp(b2 / b3 - 1) }  u  { b3 = 0, b1 >= 0, b2 >= 0 }
//! ```
//!
//! (both already closed). Projection onto `K_exp` reduces to a univariate
//! root-find: writing the projection `q` of `p` with multiplier `mu > 0` and
//! `z = ln(q1 / q2)`, the stationarity system collapses to rational
//! expressions in `z`,
//!
//! ```text
//! D(z)  = z^2 - z + 1
//! q2(z) = (p2 + p3 * (z - 1)) / D(z)
//! mu(z) = (p3 - p2 * z) / D(z)
//! q1(z) = (p1 + sqrt(p1^2 + 4 * mu(z) * q2(z))) / 2
//! ```
//!
//! and the remaining condition `q1 = q2 * e^z` becomes
//! `G(z) = ln(q2) + z - ln(q1) = 0`, solved by safeguarded Newton with a
//! bisection fallback inside the interval where `mu > 0` and `q2 > 0`.
//! KKT conditions for projection onto a convex set are sufficient, so any
//! root is the projection; uniqueness of the projection makes the root
//! unique. Points whose projection is not on the curved boundary are
//! dispatched beforehand: members map to themselves, points in the polar
//! cone to the origin, and points with `p2 <= 0, p3 <= 0` onto the flat
//! piece `(max(p1, 0), 0, p3)`.

/// Iteration cap for the safeguarded Newton root-find.
const MAX_ROOT_ITERS: usize = 100;

/// Exact membership in the (closed) exponential cone.
fn exp_member_exact(p: &[f64; 3]) -> bool {
    let [a1, a2, a3] = *p;
    if a2 > 0.0 {
        // a2 * (ln a1 - ln a2) avoids overflow of the ratio a1 / a2.
        a1 > 0.0 && a3 <= a2 * (a1.ln() - a2.ln())
    } else if a2 == 0.0 {
        a1 >= 0.0 && a3 <= 0.0
    } else {
        false
    }
}

/// Exact membership in the (closed) dual exponential cone.
fn dual_member_exact(b: &[f64; 3]) -> bool {
    let [b1, b2, b3] = *b;
    if b3 < 0.0 {
        // log form of b1 >= -b3 * exp(b2 / b3 - 1); safe for extreme ratios.
        b1 > 0.0 && b1.ln() >= (-b3).ln() + b2 / b3 - 1.0
    } else if b3 == 0.0 {
        b1 >= 0.0 && b2 >= 0.0
    } else {
        false
    }
}

/// True iff `p` lies within Euclidean distance `tol` of `K_exp`.
/// `tol = 0` asks for exact (closed-set) membership.
pub fn exp_cone_contains(p: &[f64; 3], tol: f64) -> bool {
    exp_member_exact(p) || (tol > 0.0 && exp_cone_distance(p) <= tol)
}

/// True iff `p` lies within Euclidean distance `tol` of `K*_exp`.
pub fn dual_exp_cone_contains(p: &[f64; 3], tol: f64) -> bool {
    dual_member_exact(p) || (tol > 0.0 && dual_exp_cone_distance(p) <= tol)
}

/// Euclidean distance from `p` to `K_exp`.
pub fn exp_cone_distance(p: &[f64; 3]) -> f64 {
    let q = project_exp_cone(p);
    dist(p, &q)
}

/// Euclidean distance from `p` to `K*_exp`.
pub fn dual_exp_cone_distance(p: &[f64; 3]) -> f64 {
    let q = project_dual_exp_cone(p);
    dist(p, &q)
}

fn dist(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let d0 = p[0] - q[0];
    let d1 = p[1] - q[1];
    let d2 = p[2] - q[2];
    (d0 * d0 + d1 * d1 + d2 * d2).sqrt()
}

/// Euclidean projection onto `K_exp`.
pub fn project_exp_cone(p: &[f64; 3]) -> [f64; 3] {
    debug_assert!(p.iter().all(|x| x.is_finite()));
    if exp_member_exact(p) {
        return *p;
    }
    let neg = [-p[0], -p[1], -p[2]];
    if dual_member_exact(&neg) {
        // p is in the polar cone -K*_exp, whose normal cone at 0 covers p.
        return [0.0, 0.0, 0.0];
    }
    if p[1] <= 0.0 && p[2] <= 0.0 {
        // Projection onto the flat piece {a2 = 0}: the residual
        // (min(p1,0), p2, 0) lies in the polar cone and is orthogonal.
        return [p[0].max(0.0), 0.0, p[2]];
    }
    // Curved boundary. Projection commutes with positive scaling, so
    // normalize to unit max-norm for a well-scaled root-find.
    let scale = p.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let pn = [p[0] / scale, p[1] / scale, p[2] / scale];
    let q = project_curved(&pn);
    let qs = [q[0] * scale, q[1] * scale, q[2] * scale];
    if qs[0] > 0.0 && qs[1] > 0.0 {
        // Snap onto the boundary with the exact expression the membership
        // test evaluates, so reprojecting the result is an identity.
        [qs[0], qs[1], qs[1] * (qs[0].ln() - qs[1].ln())]
    } else {
        qs
    }
}

/// Euclidean projection onto `K*_exp`, via the Moreau identity
/// `proj_{K*}(p) = p + proj_K(-p)`.
pub fn project_dual_exp_cone(p: &[f64; 3]) -> [f64; 3] {
    let q = project_exp_cone(&[-p[0], -p[1], -p[2]]);
    [p[0] + q[0], p[1] + q[1], p[2] + q[2]]
}

/// State of the univariate residual `G` at a candidate `z`.
struct Curve {
    g: f64,
    dg: f64,
    q1: f64,
    q2: f64,
}

fn eval_curve(p: &[f64; 3], z: f64) -> Curve {
    let [p1, p2, p3] = *p;
    let d = z * z - z + 1.0;
    let dd = 2.0 * z - 1.0;
    let n2 = p2 + p3 * (z - 1.0);
    let nmu = p3 - p2 * z;
    let q2 = n2 / d;
    let mu = nmu / d;
    let q2p = (p3 * d - n2 * dd) / (d * d);
    let mup = (-p2 * d - nmu * dd) / (d * d);
    let m = mu * q2;
    let mp = mup * q2 + mu * q2p;
    let s = (p1 * p1 + 4.0 * m).sqrt();
    // (p1 + s) / 2 cancels badly for p1 < 0; use m-form there.
    let q1 = if p1 >= 0.0 { (p1 + s) / 2.0 } else { 2.0 * m / (s - p1) };
    let q1p = mp / s;
    let g = q2.ln() + z - q1.ln();
    let dg = q2p / q2 + 1.0 - q1p / q1;
    Curve { g, dg, q1, q2 }
}

/// Interval of `z` where the stationarity system has `mu > 0` and `q2 > 0`.
/// The dispatch in `project_exp_cone` guarantees `p2 > 0` or `p3 > 0` here.
fn valid_interval(p: &[f64; 3]) -> (f64, f64) {
    let [_p1, p2, p3] = *p;
    if p2 > 0.0 && p3 > 0.0 {
        (1.0 - p2 / p3, p3 / p2)
    } else if p2 > 0.0 {
        // p3 <= 0: mu > 0 forces z < p3 / p2 (which is 0 when p3 = 0).
        (f64::NEG_INFINITY, p3 / p2)
    } else {
        // p2 <= 0, p3 > 0.
        (1.0 - p2 / p3, f64::INFINITY)
    }
}

/// Closest of the analytic limit solutions at the ends of the validity
/// interval, for roots that hug an endpoint below float resolution of `z`.
/// At the `n2` root `z0` (the `q2 -> 0` end) the boundary relation
/// `q1 = q2 e^z` pins the true solution at `q2 = q1 e^{-z0}` with
/// `q1 -> p1` (or `mu0 e^{-z0}` when `p1 <= 0`); at the `mu` root
/// `z1 = p3 / p2` it keeps `q2 = p2` with `q1 = p2 e^{z1}`. Every
/// candidate is feasible to rounding, so picking the nearest one never
/// worsens the answer.
fn nearest_endpoint_limit(p: &[f64; 3]) -> [f64; 3] {
    let [p1, p2, p3] = *p;
    let mut cands: Vec<[f64; 3]> = vec![[p1.max(0.0), 0.0, 0.0]];
    if p3 > 0.0 {
        let z0 = 1.0 - p2 / p3;
        let e0 = (-z0).exp();
        if p1 > 0.0 {
            cands.push([p1, p1 * e0, p1 * e0 * z0]);
        } else {
            let mu0 = (p3 - p2 * z0) / (z0 * z0 - z0 + 1.0);
            cands.push([mu0 * e0, mu0 * e0 * e0, mu0 * e0 * e0 * z0]);
        }
    }
    if p2 > 0.0 {
        cands.push([p2 * (p3 / p2).exp(), p2, p3]);
    }
    let mut out = cands[0];
    let mut best = f64::INFINITY;
    for c in cands {
        if c.iter().all(|x| x.is_finite()) {
            let d = dist(p, &c);
            if d < best {
                best = d;
                out = c;
            }
        }
    }
    out
}

fn project_curved(p: &[f64; 3]) -> [f64; 3] {
    let (lo, hi) = valid_interval(p);
    // Clip both ends to |z| <= 710: past that, q1 = q2 e^z leaves double
    // range and the curve is indistinguishable from its flat limit.
    const Z_CAP: f64 = 710.0;
    let lo_c = lo.max(-Z_CAP);
    let hi_c = hi.min(Z_CAP);
    if lo_c >= hi_c {
        // The whole validity interval lies past the cap, so the root offset
        // from its endpoint is below 1e-300 and the projection equals the
        // endpoint limit exactly at double precision.
        return if lo >= Z_CAP {
            // z -> lo from above: q2 -> 0 and q3 = q2 z -> 0.
            [p[0].max(0.0), 0.0, 0.0]
        } else {
            // z -> hi = p3 / p2 from below: q1 underflows while
            // q2 -> p2 and q3 -> p3 (n2(hi) = p2 D(hi) identically).
            [0.0, p[1], p[2]]
        };
    }
    // Nudge off the endpoints where q2 or mu vanish. The nudges scale with
    // the endpoint magnitudes, not the span, so a root hugging one end of a
    // wide interval is still representable inside the probed range.
    let lo_e = lo_c + 1e-13 * (1.0 + lo_c.abs());
    let hi_e = hi_c - 1e-13 * (1.0 + hi_c.abs());
    if lo_e >= hi_e {
        return nearest_endpoint_limit(p);
    }
    let span = hi_e - lo_e;

    // Probe for a sign change of G across the interval.
    const PROBES: usize = 96;
    let mut prev_z = f64::NAN;
    let mut prev_g = f64::NAN;
    let mut bracket: Option<(f64, f64, f64, f64)> = None;
    let mut best = (f64::INFINITY, f64::NAN); // (|G|, z)
    for k in 0..=PROBES {
        let t = k as f64 / PROBES as f64;
        let z = lo_e + t * span;
        let c = eval_curve(p, z);
        if !c.g.is_finite() {
            continue;
        }
        if c.g.abs() < best.0 {
            best = (c.g.abs(), z);
        }
        if prev_g.is_finite() && (prev_g < 0.0) != (c.g < 0.0) {
            bracket = Some((prev_z, prev_g, z, c.g));
            break;
        }
        prev_z = z;
        prev_g = c.g;
    }

    let (mut z_lo, mut g_lo, mut z_hi, mut g_hi) = match bracket {
        Some(b) => b,
        None => {
            // Unique root without a detected sign change: either a tangency
            // or a root hugging an endpoint more tightly than the probe
            // nudge. Polish the best probe with plain Newton, then keep
            // whichever of the polished point and the analytic endpoint
            // limits lies closest to p; the limits are feasible, so this
            // can only improve the answer.
            let mut z = best.1;
            for _ in 0..MAX_ROOT_ITERS {
                let c = eval_curve(p, z);
                if !c.g.is_finite() || c.dg == 0.0 {
                    break;
                }
                let step = c.g / c.dg;
                z -= step;
                z = z.clamp(lo_e, hi_e);
                if step.abs() <= 1e-15 * (1.0 + z.abs()) {
                    break;
                }
            }
            let c = eval_curve(p, z);
            let polished = [c.q1, c.q2, c.q2 * z];
            let limit = nearest_endpoint_limit(p);
            // Prefer the limit on ties: in the collapse regime both
            // distances agree to rounding, but the polished point inflates
            // q1 to the resolution floor while the limit is asymptotically
            // exact.
            let d_lim = dist(p, &limit);
            return if polished.iter().all(|x| x.is_finite())
                && dist(p, &polished) < d_lim - 1e-12 * (1.0 + d_lim)
            {
                polished
            } else {
                limit
            };
        }
    };

    // Safeguarded Newton: steps stay inside the live bracket, otherwise
    // bisect. The bracket shrinks monotonically.
    let mut z = 0.5 * (z_lo + z_hi);
    for _ in 0..MAX_ROOT_ITERS {
        let c = eval_curve(p, z);
        if c.g.abs() <= 1e-14 || (z_hi - z_lo) <= f64::EPSILON * (1.0 + z.abs()) {
            return [c.q1, c.q2, c.q2 * z];
        }
        if (c.g < 0.0) == (g_lo < 0.0) {
            z_lo = z;
            g_lo = c.g;
        } else {
            z_hi = z;
            g_hi = c.g;
        }
        let newton = z - c.g / c.dg;
        z = if c.dg.is_finite() && newton > z_lo && newton < z_hi {
            newton
        } else {
            0.5 * (z_lo + z_hi)
        };
    }
    let _ = g_hi;
    let c = eval_curve(p, z);
    [c.q1, c.q2, c.q2 * z]
}
