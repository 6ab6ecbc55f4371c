//! Initial value problems `u' = F(t, u)`, `u(0) = u0`, with a local Lipschitz envelope.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::poly::{Interval, QuadRule};

/// Right-hand side `F(t, u)`, writing into `out`.
pub type RhsFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// Lipschitz envelope `L(t, a, b)` with `a, b >= 0` norms of the two arguments.
///
/// Must be nondecreasing in `a` and in `b`.
pub type LipFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// Exact solution `t -> u(t)`, writing into `out`.
pub type ExactFn = dyn Fn(f64, &mut [f64]) + Send + Sync;

/// An initial value problem together with the envelope needed by the estimator.
///
/// The supplied closures must be pure: the drivers call them many times and
/// rely on getting the same answer for the same input.
#[derive(Clone)]
pub struct Problem {
    name: String,
    u0: Vec<f64>,
    rhs: Arc<RhsFn>,
    lip: Arc<LipFn>,
    exact: Option<Arc<ExactFn>>,
    t_blowup: Option<f64>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("u0", &self.u0)
            .field("exact", &self.exact.is_some())
            .field("t_blowup", &self.t_blowup)
            .finish()
    }
}

impl Problem {
    pub fn new<F, L>(name: impl Into<String>, u0: Vec<f64>, rhs: F, lip: L) -> Result<Self>
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        L: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        if u0.is_empty() {
            return Err(Error::invalid("initial value must have at least one component"));
        }
        if u0.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("initial value must be finite"));
        }
        Ok(Problem {
            name: name.into(),
            u0,
            rhs: Arc::new(rhs),
            lip: Arc::new(lip),
            exact: None,
            t_blowup: None,
        })
    }

    pub fn with_exact<E>(mut self, exact: E) -> Self
    where
        E: Fn(f64, &mut [f64]) + Send + Sync + 'static,
    {
        self.exact = Some(Arc::new(exact));
        self
    }

    pub fn with_blowup_time(mut self, t: f64) -> Self {
        self.t_blowup = Some(t);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    pub fn u0(&self) -> &[f64] {
        &self.u0
    }

    pub fn t_blowup(&self) -> Option<f64> {
        self.t_blowup
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Evaluates `F(t, u)`; a non-finite result is reported as overflow.
    pub fn rhs(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        (self.rhs)(t, u, out);
        if out.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NumericOverflow { what: "right-hand side", t })
        }
    }

    /// Evaluates `L(t, a, b)`; a non-finite result is reported as overflow.
    pub fn lip(&self, t: f64, a: f64, b: f64) -> Result<f64> {
        let v = (self.lip)(t, a, b);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NumericOverflow { what: "Lipschitz envelope", t })
        }
    }

    /// Exact solution at `t`, if known.
    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|e| {
            let mut out = vec![0.0; self.dim()];
            e(t, &mut out);
            out
        })
    }

    pub(crate) fn exact_into(&self, t: f64, out: &mut [f64]) -> bool {
        match &self.exact {
            Some(e) => {
                e(t, out);
                true
            }
            None => false,
        }
    }
}

/// `u' = u^2`, blowing up at `1 / u0`.
pub fn power_square(u0: f64) -> Result<Problem> {
    if !(u0 > 0.0 && u0.is_finite()) {
        return Err(Error::invalid(format!(
            "power2 needs a positive finite initial value, got {u0}"
        )));
    }
    Ok(Problem::new(
        "power2",
        vec![u0],
        |_, u, out| out[0] = u[0] * u[0],
        |_, a, b| a + b,
    )?
    .with_exact(move |t, out| out[0] = u0 / (1.0 - u0 * t))
    .with_blowup_time(1.0 / u0))
}

/// `u' = e^u`, blowing up at `e^{-u0}`.
pub fn exponential(u0: f64) -> Result<Problem> {
    if !u0.is_finite() {
        return Err(Error::invalid(format!("exp needs a finite initial value, got {u0}")));
    }
    let e0 = u0.exp();
    Ok(Problem::new(
        "exp",
        vec![u0],
        |_, u, out| out[0] = u[0].exp(),
        |_, a, b| 0.5 * (a.exp() + b.exp()),
    )?
    // log(e^{u0} / (1 - e^{u0} t))
    .with_exact(move |t, out| out[0] = u0 - (-e0 * t).ln_1p())
    .with_blowup_time(1.0 / e0))
}

/// `u' = lambda u`: globally Lipschitz, no blow-up.
pub fn linear(lambda: f64, u0: Vec<f64>) -> Result<Problem> {
    if !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be finite, got {lambda}")));
    }
    let init = u0.clone();
    let l = lambda.abs();
    Ok(Problem::new(
        "linear",
        u0,
        move |_, u, out| {
            for (o, x) in out.iter_mut().zip(u) {
                *o = lambda * x;
            }
        },
        move |_, _, _| l,
    )?
    .with_exact(move |t, out| {
        let g = (lambda * t).exp();
        for (o, x) in out.iter_mut().zip(&init) {
            *o = x * g;
        }
    }))
}

/// Quadrature approximation of `int_iv L(s, a(s), b(s)) ds`.
pub fn lip_integral(
    p: &Problem,
    iv: &Interval,
    mut a_fn: impl FnMut(f64) -> f64,
    mut b_fn: impl FnMut(f64) -> f64,
    quad: &QuadRule,
) -> Result<f64> {
    let half = 0.5 * iv.len();
    let mut acc = 0.0;
    for (&x, &w) in quad.nodes().iter().zip(quad.weights()) {
        let t = iv.from_reference(x);
        acc += w * p.lip(t, a_fn(t), b_fn(t))?;
    }
    let v = acc * half;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericOverflow { what: "Lipschitz integral", t: iv.end() })
    }
}
