//! Conditional a posteriori error estimation on one interval.
//!
//! Per interval `I_m` the estimator combines the residual of the
//! reconstruction, `eta_res`, the (here identically zero) projection
//! estimator and the inherited bound into `psi`, then looks for the growth
//! factor `delta`: the leftmost point where
//!
//! ```text
//! phi(delta) = exp( int_{I_m} L(s, delta psi + |Û(s)|, |Û(s)|) ds ) - delta
//! ```
//!
//! turns negative. When no such point exists the bound can no longer be
//! continued, which the adaptive drivers read as the onset of blow-up.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{euclid, l2_project, Interval, LocalPoly, QuadRule};
use crate::problem::Problem;

/// Extra Legendre degrees used to resolve `F(s, Û)` in the residual.
pub const RESIDUAL_EXTRA_DEGREE: usize = 4;

/// Per-interval estimator state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEstimate {
    pub eta_res: f64,
    /// Projection estimator inherited from the previous node (`eta_proj_{m-1}`).
    pub eta_proj: f64,
    pub psi: f64,
    pub delta: Option<f64>,
    /// `delta * psi` when `delta` exists.
    pub bound: Option<f64>,
    /// Product of all `delta_i` up to this interval, with `delta_0 = 1`.
    pub delta_hat: f64,
    pub effectivity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaSolverConfig {
    /// Accept a Newton iterate once `|phi| <= newton_tol`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Relative finite-difference step for `phi'`.
    pub fd_step: f64,
    /// Upper end of the fallback scan.
    pub delta_max: f64,
    pub scan_points: usize,
    /// Relative offset used to check that a root is a left crossing.
    pub verify_eps: f64,
}

impl Default for DeltaSolverConfig {
    fn default() -> Self {
        DeltaSolverConfig {
            newton_tol: 1e-10,
            max_newton: 50,
            fd_step: 1e-7,
            delta_max: 1e6,
            scan_points: 200,
            verify_eps: 1e-8,
        }
    }
}

/// Result of the search for `delta_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaOutcome {
    Found(f64),
    /// `phi > 0` everywhere on the scanned range; the smallest value seen is reported.
    NotFound { min_phi: f64, argmin: f64 },
}

impl DeltaOutcome {
    pub fn delta(&self) -> Option<f64> {
        match self {
            DeltaOutcome::Found(d) => Some(*d),
            DeltaOutcome::NotFound { .. } => None,
        }
    }
}

/// Number of quadrature points [`residual_estimator`] needs for a reconstruction of degree `deg`.
pub fn residual_quad_points(deg: usize) -> usize {
    deg + RESIDUAL_EXTRA_DEGREE + 6
}

/// The residual `R(t) = Û(t0) - Û(t) + int_{t0}^{t} F(s, Û) ds` as a polynomial.
pub fn residual(p: &Problem, u_hat: &LocalPoly, quad: &QuadRule) -> Result<LocalPoly> {
    let iv = *u_hat.interval();
    let d = p.dim();
    let rq = u_hat.degree() + RESIDUAL_EXTRA_DEGREE;
    let mut scratch = vec![0.0; d];
    let f_proj = l2_project(&iv, rq, d, quad, |t, out| {
        u_hat.eval_reference(iv.to_reference(t), &mut scratch);
        p.rhs(t, &scratch, out)
    })?;
    let integral = f_proj.antiderivative(&vec![0.0; d]);
    let left = u_hat.left_value();
    let mut coeffs = u_hat.coeffs().to_vec();
    for (c, l) in coeffs.iter_mut().zip(&left) {
        *c -= l;
    }
    let increment = LocalPoly::new(iv, d, coeffs)?;
    integral.sub(&increment)
}

/// `eta_res = sup_t |R(t)|`, with the sup sampled as in [`LocalPoly::linf_norm`].
pub fn residual_estimator(p: &Problem, u_hat: &LocalPoly, quad: &QuadRule) -> Result<f64> {
    Ok(residual(p, u_hat, quad)?.linf_norm())
}

/// `|v - π v|` for the identity projector: always zero here.
pub fn projection_estimator(_u_right_minus: &[f64]) -> f64 {
    0.0
}

/// `|v - P v|` for a caller-supplied projector `P`.
pub fn projection_estimator_with(v: &[f64], proj: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let pv = proj(v);
    let diff: Vec<f64> = v.iter().zip(&pv).map(|(a, b)| a - b).collect();
    euclid(&diff)
}

/// The recursive estimator `psi_m`.
pub fn psi_update(prev: Option<&StepEstimate>, eta_proj_prev: f64, eta_res: f64) -> Result<f64> {
    match prev {
        None => Ok(eta_proj_prev + eta_res),
        Some(prev) => match prev.delta {
            Some(delta) => Ok(delta * prev.psi + eta_proj_prev + eta_res),
            None => Err(Error::State(
                "previous interval has no growth factor; the bound cannot be continued".into(),
            )),
        },
    }
}

/// `phi_m` with the reconstruction norms cached at the quadrature nodes.
#[derive(Debug, Clone)]
pub struct Phi<'a> {
    problem: &'a Problem,
    times: Vec<f64>,
    norms: Vec<f64>,
    weights: Vec<f64>,
    psi: f64,
}

impl<'a> Phi<'a> {
    pub fn new(problem: &'a Problem, iv: &Interval, u_hat: &LocalPoly, psi: f64, quad: &QuadRule) -> Self {
        let half = 0.5 * iv.len();
        let mut buf = vec![0.0; u_hat.dim()];
        let mut times = Vec::with_capacity(quad.len());
        let mut norms = Vec::with_capacity(quad.len());
        for &x in quad.nodes() {
            times.push(iv.from_reference(x));
            u_hat.eval_reference(x, &mut buf);
            norms.push(euclid(&buf));
        }
        let weights = quad.weights().iter().map(|w| w * half).collect();
        Phi { problem, times, norms, weights, psi }
    }

    /// The integral of the envelope at `delta`, or `+inf` on overflow.
    pub fn exponent(&self, delta: f64) -> f64 {
        let mut acc = 0.0;
        for ((&t, &n), &w) in self.times.iter().zip(&self.norms).zip(&self.weights) {
            match self.problem.lip(t, delta * self.psi + n, n) {
                Ok(l) => acc += w * l,
                Err(_) => return f64::INFINITY,
            }
        }
        acc
    }

    /// `phi(delta)`; `+inf` stands for an overflowed evaluation.
    pub fn eval(&self, delta: f64) -> f64 {
        let e = self.exponent(delta);
        if e.is_finite() {
            e.exp() - delta
        } else {
            f64::INFINITY
        }
    }
}

/// Evaluates `phi_m(delta)`; returns `+inf` if the envelope or the exponential overflows.
pub fn phi(p: &Problem, iv: &Interval, u_hat: &LocalPoly, psi: f64, delta: f64, quad: &QuadRule) -> f64 {
    Phi::new(p, iv, u_hat, psi, quad).eval(delta)
}

/// Finds `delta_m = inf { delta > 1 : phi(delta) < 0 }`.
pub fn solve_delta(
    p: &Problem,
    iv: &Interval,
    u_hat: &LocalPoly,
    psi: f64,
    prev_delta: Option<f64>,
    cfg: &DeltaSolverConfig,
    quad: &QuadRule,
) -> DeltaOutcome {
    solve_delta_with(&Phi::new(p, iv, u_hat, psi, quad), prev_delta, cfg)
}

/// [`solve_delta`] on a prepared [`Phi`].
///
/// Newton with a forward-difference derivative is tried first, starting just
/// above one or at the previous interval's `delta`. A Newton root is kept only
/// if `phi` changes sign from positive to negative across it; otherwise a
/// geometric scan of `[1, delta_max]` brackets the first sign change and
/// bisection finishes. The returned value always satisfies `phi <= newton_tol`.
pub fn solve_delta_with(phi: &Phi<'_>, prev_delta: Option<f64>, cfg: &DeltaSolverConfig) -> DeltaOutcome {
    let at_one = phi.eval(1.0);
    debug_assert!(at_one >= 0.0 || at_one.is_nan(), "phi(1) = {at_one} must be nonnegative");
    if at_one <= cfg.newton_tol && phi.eval(1.0 + cfg.verify_eps) < 0.0 {
        return DeltaOutcome::Found(1.0);
    }

    let is_left_crossing = |x: f64| {
        phi.eval(x * (1.0 + cfg.verify_eps)) < 0.0 && {
            let below = x * (1.0 - cfg.verify_eps);
            below < 1.0 || phi.eval(below) > 0.0
        }
    };

    let mut negative_seen: Option<f64> = None;
    let mut x = prev_delta.unwrap_or(1.0 + 1e-6).max(1.0);
    for _ in 0..cfg.max_newton {
        let f = phi.eval(x);
        if !f.is_finite() {
            break;
        }
        if f < 0.0 {
            negative_seen = Some(negative_seen.map_or(x, |n: f64| n.min(x)));
        }
        if f.abs() <= cfg.newton_tol {
            if is_left_crossing(x) {
                return DeltaOutcome::Found(x);
            }
            break;
        }
        let h = cfg.fd_step * x;
        let slope = (phi.eval(x + h) - f) / h;
        if !(slope.is_finite() && slope < 0.0) {
            break;
        }
        x = (x - f / slope).max(1.0);
    }

    // Geometric scan for the first negative value.
    let n = cfg.scan_points.max(2);
    let log_max = cfg.delta_max.ln();
    let mut prev = 1.0;
    let mut min_phi = at_one;
    let mut argmin = 1.0;
    let mut bracket = None;
    for i in 1..n {
        let g = (log_max * i as f64 / (n - 1) as f64).exp();
        if let Some(neg) = negative_seen {
            if neg < g && neg > prev {
                bracket = Some((prev, neg));
                break;
            }
        }
        let f = phi.eval(g);
        if f < min_phi {
            min_phi = f;
            argmin = g;
        }
        if f < 0.0 {
            bracket = Some((prev, g));
            break;
        }
        prev = g;
    }

    match bracket {
        Some((lo, hi)) => DeltaOutcome::Found(bisect(phi, lo, hi, cfg.newton_tol)),
        None => {
            debug!("no growth factor: min phi = {min_phi:e} at delta = {argmin:e}");
            DeltaOutcome::NotFound { min_phi, argmin }
        }
    }
}

/// Bisection on `phi(lo) >= 0 > phi(hi)`, returning the negative side.
fn bisect(phi: &Phi<'_>, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let f_hi = phi.eval(hi);
        if f_hi.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if phi.eval(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Bound on the reconstruction error: `delta * psi`.
pub fn error_bound(delta: f64, psi: f64) -> f64 {
    delta * psi
}

/// Bound on the error of `U` itself: `delta * psi + |U - Û|_inf`.
pub fn full_error_bound(delta: f64, psi: f64, u: &LocalPoly, u_hat: &LocalPoly) -> Result<f64> {
    Ok(error_bound(delta, psi) + u.sub(u_hat)?.linf_norm())
}

/// Sampled `sup_t |u(t) - Û(t)|` on the reconstruction's interval.
pub fn reconstruction_error(p: &Problem, u_hat: &LocalPoly) -> Result<f64> {
    if !p.has_exact() {
        return Err(Error::invalid("reconstruction error needs an exact solution"));
    }
    let iv = u_hat.interval();
    let d = p.dim();
    let mut approx = vec![0.0; d];
    let mut exact = vec![0.0; d];
    let mut diff = vec![0.0; d];
    let mut best = 0.0_f64;
    let points = crate::poly::chebyshev_points(8 * (u_hat.degree() + 2)).chain([-1.0, 1.0]);
    for x in points {
        let t = iv.from_reference(x);
        u_hat.eval_reference(x, &mut approx);
        p.exact_into(t, &mut exact);
        for ((o, a), e) in diff.iter_mut().zip(&approx).zip(&exact) {
            *o = e - a;
        }
        best = best.max(euclid(&diff));
    }
    Ok(best)
}

/// `bound / max_{k <= m} |ê_k|`; `+inf` when the denominator vanishes.
pub fn effectivity_ratio(bound: f64, max_recon_error: f64) -> f64 {
    if max_recon_error > 0.0 {
        bound / max_recon_error
    } else {
        f64::INFINITY
    }
}

/// Effectivity index of `bound` against the reconstructions of intervals `1..=m`.
pub fn effectivity(bound: f64, p: &Problem, reconstructions: &[LocalPoly]) -> Result<f64> {
    if !p.has_exact() {
        return Err(Error::invalid("effectivity needs an exact solution"));
    }
    let mut worst = 0.0_f64;
    for u_hat in reconstructions {
        worst = worst.max(reconstruction_error(p, u_hat)?);
    }
    Ok(effectivity_ratio(bound, worst))
}
