//! Single-interval hp-cG and hp-dG solvers and the reconstruction `Û`.
//!
//! Both schemes are solved by explicit Picard iteration on the integrated
//! strong form. Starting from the constant `u_left`, one sweep computes
//!
//! ```text
//! W(t) = u_left + int_{t0}^{t} Π[F(s, U)] ds
//! ```
//!
//! with `Π` the L² projection onto degree `r - 1` (cG) or `r` (dG). For cG,
//! `W` already has degree `r` and matches `u_left` at the left end. For dG,
//! `W` has degree `r + 1` and the next iterate is the degree-`r` polynomial
//! that agrees with `W` against all of `P^{r-1}` and at the right endpoint;
//! this is the solution of the dG weak form with the upwind jump term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, NoConvergence, Result};
use crate::poly::{l2_project, Interval, LocalPoly, QuadRule};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Cg,
    Dg,
}

impl Scheme {
    /// Smallest admissible local degree.
    pub fn min_degree(self) -> usize {
        match self {
            Scheme::Cg => 1,
            Scheme::Dg => 0,
        }
    }

    /// Trial-space dimension per solution component on one interval.
    pub fn local_dofs(self, r: usize) -> usize {
        match self {
            Scheme::Cg => r,
            Scheme::Dg => r + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInput {
    pub iv: Interval,
    pub r: usize,
    /// Incoming value `U(t_{m-1}^-)`, or `u0` on the first interval.
    pub u_left: Vec<f64>,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    /// Stop once the largest coefficient update is below
    /// `fp_tol * max(1, largest coefficient)`.
    pub fp_tol: f64,
    pub max_iters: usize,
    /// An iterate is declared divergent once its sup-norm exceeds
    /// `divergence_cap * max(1, |u_left|)`.
    pub divergence_cap: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            fp_tol: 1e-12,
            max_iters: 100,
            divergence_cap: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub u: LocalPoly,
    pub picard_iters: usize,
    pub converged: bool,
}

/// Quadrature size used for nonlinear integrands at degree `r`.
pub fn default_quad_points(r: usize) -> usize {
    r + 6
}

/// Solves the cG or dG equations on one interval.
///
/// Failure to converge is reported as [`Error::NoConvergence`]; the adaptive
/// drivers read it as "no discrete solution exists for this step length".
pub fn step(p: &Problem, input: &StepInput, cfg: &PicardConfig, quad: &QuadRule) -> Result<StepOutput> {
    let StepInput { iv, r, u_left, scheme } = input;
    let (r, scheme) = (*r, *scheme);
    let d = p.dim();
    if u_left.len() != d {
        return Err(Error::invalid(format!(
            "u_left has {} components, problem has {d}",
            u_left.len()
        )));
    }
    if r < scheme.min_degree() {
        return Err(Error::invalid(format!("{scheme:?} needs degree >= {}", scheme.min_degree())));
    }
    if quad.len() < r + 1 {
        return Err(Error::invalid(format!(
            "{}-point quadrature too weak for degree {r}",
            quad.len()
        )));
    }

    let proj_degree = match scheme {
        Scheme::Cg => r - 1,
        Scheme::Dg => r,
    };
    let cap = cfg.divergence_cap * crate::poly::euclid(u_left).max(1.0);
    let mut u = LocalPoly::constant(*iv, u_left).with_degree(r);
    let mut scratch = vec![0.0; d];

    for iter in 1..=cfg.max_iters {
        let g = match l2_project(iv, proj_degree, d, quad, |t, out| {
            u.eval_reference(iv.to_reference(t), &mut scratch);
            p.rhs(t, &scratch, out)
        }) {
            Ok(g) => g,
            Err(Error::NumericOverflow { .. }) => {
                return Err(Error::NoConvergence { reason: NoConvergence::Diverged, iters: iter })
            }
            Err(e) => return Err(e),
        };
        let w = g.antiderivative(u_left);
        let next = match scheme {
            Scheme::Cg => w,
            Scheme::Dg => fold_top_coefficient(&w),
        };

        if next.coeffs().iter().any(|c| !c.is_finite())
            || (next.coeff_abs_sum() > cap && next.linf_norm() > cap)
        {
            return Err(Error::NoConvergence { reason: NoConvergence::Diverged, iters: iter });
        }

        let change = next
            .coeffs()
            .iter()
            .zip(u.coeffs())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = next.max_abs_coeff().max(1.0);
        u = next;
        if change <= cfg.fp_tol * scale {
            return Ok(StepOutput { u, picard_iters: iter, converged: true });
        }
    }
    Err(Error::NoConvergence {
        reason: NoConvergence::MaxIters,
        iters: cfg.max_iters,
    })
}

/// Drops the `P_{r+1}` term of a degree `r + 1` polynomial while keeping its
/// right endpoint value: `c_{r+1} P_{r+1} -> c_{r+1} P_r`.
fn fold_top_coefficient(w: &LocalPoly) -> LocalPoly {
    let r1 = w.degree();
    debug_assert!(r1 >= 1);
    let d = w.dim();
    let mut c = w.coeffs()[..r1 * d].to_vec();
    for j in 0..d {
        c[(r1 - 1) * d + j] += w.coeff(r1)[j];
    }
    LocalPoly::new(*w.interval(), d, c).expect("nonempty coefficients")
}

/// The reconstruction `Û(t) = u_left + int_{t0}^{t} Π^r[F(s, U)] ds`, of degree `r + 1`.
pub fn reconstruct(p: &Problem, input: &StepInput, u: &LocalPoly, quad: &QuadRule) -> Result<LocalPoly> {
    let iv = &input.iv;
    let d = p.dim();
    let mut scratch = vec![0.0; d];
    let g = l2_project(iv, u.degree(), d, quad, |t, out| {
        u.eval_reference(iv.to_reference(t), &mut scratch);
        p.rhs(t, &scratch, out)
    })?;
    Ok(g.antiderivative(&input.u_left))
}
