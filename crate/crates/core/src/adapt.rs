//! h- and hp-adaptive time marching towards blow-up.
//!
//! Both drivers follow the same loop. On each new interval the step length
//! and degree are inherited from the previous accepted interval. The candidate
//! is refined until a discrete solution exists and its residual estimator is
//! below the running tolerance; then the growth factor `delta_m` is sought.
//! If it exists the interval is accepted and the tolerance is multiplied by
//! `delta_m`; if it does not, the run stops and the end of the last accepted
//! interval is the blow-up estimate.
//!
//! Nonexistence of the discrete solution always halves the step. When the
//! residual is too large, the h driver halves the step while the hp driver
//! raises the degree if the current candidate looks smooth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    effectivity_ratio, projection_estimator, psi_update, reconstruction_error, residual_estimator,
    residual_quad_points, solve_delta_with, DeltaOutcome, DeltaSolverConfig, Phi, StepEstimate,
};
use crate::galerkin::{default_quad_points, reconstruct, step, PicardConfig, Scheme, StepInput, StepOutput};
use crate::poly::{cached_rule, Interval, LocalPoly, MAX_QUAD_POINTS};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    H,
    Hp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    pub scheme: Scheme,
    pub mode: Mode,
    /// Fixed degree in h mode, starting degree in hp mode.
    pub r_init: usize,
    pub r_max: usize,
    pub k_init: f64,
    pub tol_star: f64,
    pub theta_star: f64,
    pub k_min: f64,
    pub max_intervals: usize,
    pub picard: PicardConfig,
    pub delta: DeltaSolverConfig,
    /// Record reconstruction errors and effectivity indices when the exact solution is known.
    pub track_effectivity: bool,
}

impl AdaptConfig {
    pub fn new(scheme: Scheme, mode: Mode, r_init: usize, k_init: f64, tol_star: f64) -> Self {
        AdaptConfig {
            scheme,
            mode,
            r_init,
            r_max: 30,
            k_init,
            tol_star,
            theta_star: 0.85,
            k_min: 1e-14,
            max_intervals: 1_000_000,
            picard: PicardConfig::default(),
            delta: DeltaSolverConfig::default(),
            track_effectivity: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let min_r = match self.mode {
            Mode::H => self.scheme.min_degree(),
            Mode::Hp => 1,
        };
        if self.r_init < min_r {
            return Err(Error::invalid(format!(
                "{:?} mode with {:?} needs r >= {min_r}, got {}",
                self.mode, self.scheme, self.r_init
            )));
        }
        let r_top = match self.mode {
            Mode::H => self.r_init,
            Mode::Hp => self.r_max,
        };
        if self.mode == Mode::Hp && self.r_max < self.r_init {
            return Err(Error::invalid("r_max must be at least r_init"));
        }
        if residual_quad_points(r_top + 1) > MAX_QUAD_POINTS {
            return Err(Error::invalid(format!("degree {r_top} exceeds the supported quadrature")));
        }
        if !(self.k_init > 0.0 && self.k_init.is_finite()) {
            return Err(Error::invalid("k_init must be positive"));
        }
        if !(self.tol_star > 0.0 && self.tol_star.is_finite()) {
            return Err(Error::invalid("tol_star must be positive"));
        }
        if !(self.theta_star > 0.0 && self.theta_star < 1.0) {
            return Err(Error::invalid("theta_star must lie in (0, 1)"));
        }
        if self.k_min.is_nan() || self.k_min <= 0.0 {
            return Err(Error::invalid("k_min must be positive"));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The growth factor of the next candidate interval does not exist.
    DeltaNotFound,
    /// The step length dropped below `k_min` before a candidate could be accepted.
    KMinReached,
    MaxIntervals,
}

/// One refinement made while searching for an acceptable candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// Step halved because no discrete solution was found.
    Existence,
    /// Step halved for accuracy.
    H,
    /// Degree raised for accuracy.
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub theta: f64,
    pub smooth: bool,
}

/// Smoothness indicator applied to the `(r - 1)`-th derivative of `u`.
pub fn smoothness(u: &LocalPoly, r: usize, theta_star: f64) -> Result<SmoothnessReport> {
    if r < 1 {
        return Err(Error::invalid("smoothness indicator needs r >= 1"));
    }
    let mut w = u.clone();
    for _ in 0..r - 1 {
        w = w.derivative();
    }
    let scale = u.max_abs_coeff();
    if w.is_zero(1e-14 * scale) {
        return Ok(SmoothnessReport { theta: 1.0, smooth: true });
    }
    let k = u.interval().len();
    let n = w.norms();
    let denom = n.l2 / k.sqrt() + k.sqrt() * n.h1_semi / std::f64::consts::SQRT_2;
    let theta = (n.linf / denom).clamp(0.0, 1.0);
    Ok(SmoothnessReport { theta, smooth: theta >= theta_star })
}

/// An accepted interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub interval: Interval,
    pub r: usize,
    pub solution: LocalPoly,
    pub picard_iters: usize,
    pub reconstruction: LocalPoly,
    pub estimate: StepEstimate,
    /// Tolerance the residual estimator had to meet.
    pub tol: f64,
    /// Smoothness indicator of the accepted solution (hp mode only).
    pub theta: Option<f64>,
    /// Sampled reconstruction error against the exact solution.
    pub recon_error: Option<f64>,
    pub refinements: Vec<Refinement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scheme: Scheme,
    pub mode: Mode,
    pub dim: usize,
    pub intervals: Vec<IntervalRecord>,
    /// End of the last accepted interval: the blow-up time estimate.
    pub t_final: f64,
    pub termination: Termination,
    /// Tolerance in force on each accepted interval.
    pub tol_trace: Vec<f64>,
    /// Tolerance after the last accepted interval, `tol_star * delta_hat_M`.
    pub final_tol: f64,
    /// Candidate solves attempted, including discarded ones.
    pub attempts: usize,
    /// The failed search that ended a `DeltaNotFound` run.
    pub last_delta_search: Option<DeltaOutcome>,
}

impl RunResult {
    /// Number of accepted intervals.
    pub fn m(&self) -> usize {
        self.intervals.len()
    }

    pub fn dofs(&self) -> usize {
        dof_count(self)
    }

    pub fn delta_hat(&self) -> f64 {
        self.intervals.last().map_or(1.0, |r| r.estimate.delta_hat)
    }

    /// Smallest effectivity index over the run.
    pub fn best_effectivity(&self) -> Option<f64> {
        self.intervals
            .iter()
            .filter_map(|r| r.estimate.effectivity)
            .fold(None, |m, e| Some(m.map_or(e, |m: f64| m.min(e))))
    }
}

/// Total trial-space dimension over the accepted intervals.
pub fn dof_count(result: &RunResult) -> usize {
    result
        .intervals
        .iter()
        .map(|rec| result.scheme.local_dofs(rec.r) * result.dim)
        .sum()
}

/// Fixed-degree adaptive run.
pub fn h_adapt(p: &Problem, cfg: &AdaptConfig) -> Result<RunResult> {
    if cfg.mode != Mode::H {
        return Err(Error::invalid("h_adapt needs mode = h"));
    }
    drive(p, cfg)
}

/// Adaptive run choosing between step halving and degree increase.
pub fn hp_adapt(p: &Problem, cfg: &AdaptConfig) -> Result<RunResult> {
    if cfg.mode != Mode::Hp {
        return Err(Error::invalid("hp_adapt needs mode = hp"));
    }
    drive(p, cfg)
}

/// Dispatches on `cfg.mode`.
pub fn adapt(p: &Problem, cfg: &AdaptConfig) -> Result<RunResult> {
    drive(p, cfg)
}

struct Candidate {
    iv: Interval,
    out: StepOutput,
    u_hat: LocalPoly,
    eta_res: f64,
    theta: Option<f64>,
}

fn drive(p: &Problem, cfg: &AdaptConfig) -> Result<RunResult> {
    cfg.validate()?;
    let track = cfg.track_effectivity && p.has_exact();

    let mut intervals: Vec<IntervalRecord> = Vec::new();
    let mut tol_trace = Vec::new();
    let mut tol = cfg.tol_star;
    let mut k = cfg.k_init;
    let mut r = cfg.r_init;
    let mut t = 0.0;
    let mut u_left = p.u0().to_vec();
    let mut delta_hat = 1.0;
    let mut worst_recon = 0.0_f64;
    let mut attempts = 0;
    let mut last_delta_search = None;

    let termination = 'march: loop {
        if intervals.len() >= cfg.max_intervals {
            break Termination::MaxIntervals;
        }
        let mut refinements = Vec::new();
        let cand = loop {
            if k < cfg.k_min || t + k <= t {
                break 'march Termination::KMinReached;
            }
            let iv = Interval::new(t, t + k)?;
            attempts += 1;
            let input = StepInput { iv, r, u_left: u_left.clone(), scheme: cfg.scheme };
            let quad = cached_rule(default_quad_points(r));
            let out = match step(p, &input, &cfg.picard, quad) {
                Ok(out) => out,
                Err(Error::NoConvergence { .. }) => {
                    k *= 0.5;
                    refinements.push(Refinement::Existence);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let u_hat = match reconstruct(p, &input, &out.u, quad) {
                Ok(u_hat) => u_hat,
                Err(Error::NumericOverflow { .. }) => {
                    k *= 0.5;
                    refinements.push(Refinement::Existence);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let eta_res = match residual_estimator(p, &u_hat, cached_rule(residual_quad_points(u_hat.degree()))) {
                Ok(eta) => eta,
                Err(Error::NumericOverflow { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            let theta = match cfg.mode {
                Mode::H => None,
                Mode::Hp => Some(smoothness(&out.u, r, cfg.theta_star)?),
            };
            if eta_res <= tol {
                break Candidate { iv, out, u_hat, eta_res, theta: theta.map(|s| s.theta) };
            }
            match theta {
                Some(s) if s.smooth && r < cfg.r_max => {
                    r += 1;
                    refinements.push(Refinement::P);
                }
                _ => {
                    k *= 0.5;
                    refinements.push(Refinement::H);
                }
            }
        };

        let prev = intervals.last().map(|rec| &rec.estimate);
        let eta_proj = projection_estimator(&u_left);
        let psi = psi_update(prev, eta_proj, cand.eta_res)?;
        let phi = Phi::new(p, &cand.iv, &cand.u_hat, psi, cached_rule(default_quad_points(r)));
        let outcome = solve_delta_with(&phi, prev.and_then(|e| e.delta), &cfg.delta);
        let delta = match outcome {
            DeltaOutcome::Found(delta) => delta,
            DeltaOutcome::NotFound { .. } => {
                last_delta_search = Some(outcome);
                break Termination::DeltaNotFound;
            }
        };

        delta_hat *= delta;
        let bound = delta * psi;
        let (recon_error, effectivity) = if track {
            let err = reconstruction_error(p, &cand.u_hat)?;
            worst_recon = worst_recon.max(err);
            (Some(err), Some(effectivity_ratio(bound, worst_recon)))
        } else {
            (None, None)
        };
        let estimate = StepEstimate {
            eta_res: cand.eta_res,
            eta_proj,
            psi,
            delta: Some(delta),
            bound: Some(bound),
            delta_hat,
            effectivity,
        };
        tol_trace.push(tol);
        tol *= delta;
        t = cand.iv.end();
        u_left = cand.out.u.right_value();
        intervals.push(IntervalRecord {
            interval: cand.iv,
            r,
            solution: cand.out.u,
            picard_iters: cand.out.picard_iters,
            reconstruction: cand.u_hat,
            estimate,
            tol: tol_trace[tol_trace.len() - 1],
            theta: cand.theta,
            recon_error,
            refinements,
        });
    };

    Ok(RunResult {
        scheme: cfg.scheme,
        mode: cfg.mode,
        dim: p.dim(),
        intervals,
        t_final: t,
        termination,
        tol_trace,
        final_tol: tol,
        attempts,
        last_delta_search,
    })
}
