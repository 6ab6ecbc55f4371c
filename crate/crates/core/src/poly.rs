//! Vector-valued polynomials on a single time interval.
//!
//! A [`LocalPoly`] stores Legendre coefficients with respect to the affine map
//! from the reference interval `[-1, 1]` onto its [`Interval`]. Orthogonality of
//! the basis makes L² norms and L² projections cheap, and keeps high-degree
//! representations well conditioned.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported Gauss–Legendre rule.
pub const MAX_QUAD_POINTS: usize = 64;

/// A closed time interval `[start, end]` with `end > start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    start: f64,
    end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::invalid(format!(
                "interval endpoints must be finite, got ({start}, {end})"
            )));
        }
        if end <= start {
            return Err(Error::invalid(format!(
                "interval must have positive length, got ({start}, {end})"
            )));
        }
        Ok(Interval { start, end })
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.start
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.end
    }

    /// Step length `k = end - start`.
    #[inline]
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }

    /// Maps `x` in `[-1, 1]` to physical time.
    #[inline]
    pub fn from_reference(&self, x: f64) -> f64 {
        0.5 * (self.start + self.end) + 0.5 * self.len() * x
    }

    /// Maps physical time to the reference coordinate in `[-1, 1]`.
    #[inline]
    pub fn to_reference(&self, t: f64) -> f64 {
        if t == self.start {
            -1.0
        } else if t == self.end {
            1.0
        } else {
            (2.0 * t - self.start - self.end) / self.len()
        }
    }
}

/// A quadrature rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.len() - 1
    }

    /// Integrates a scalar function over `iv`.
    pub fn integrate(&self, iv: &Interval, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * iv.len();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(iv.from_reference(x)))
            .sum::<f64>()
            * half
    }
}

/// The `n`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<QuadRule> {
    if n == 0 || n > MAX_QUAD_POINTS {
        return Err(Error::invalid(format!(
            "Gauss-Legendre size must lie in 1..={MAX_QUAD_POINTS}, got {n}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess for the i-th largest root.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, p_prev) = legendre_pair(n, x);
            let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (p, p_prev) = legendre_pair(n, x);
        let dp = if x != 0.0 {
            n as f64 * (x * p - p_prev) / (x * x - 1.0)
        } else {
            // P_n'(0) = n P_{n-1}(0) for odd n.
            n as f64 * p_prev
        };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadRule { nodes, weights })
}

/// Shared Gauss–Legendre rule of size `n`, built once per process.
///
/// # Panics
/// If `n` is outside `1..=MAX_QUAD_POINTS`.
pub fn cached_rule(n: usize) -> &'static QuadRule {
    static RULES: OnceLock<Vec<QuadRule>> = OnceLock::new();
    assert!((1..=MAX_QUAD_POINTS).contains(&n), "no cached rule of size {n}");
    &RULES.get_or_init(|| {
        (1..=MAX_QUAD_POINTS)
            .map(|n| gauss_legendre(n).expect("size in range"))
            .collect()
    })[n - 1]
}

/// Returns `(P_n(x), P_{n-1}(x))`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * x * p - jf * p_prev) / (jf + 1.0);
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Fills `out[i] = P_i(x)` for `i < out.len()`.
pub fn legendre_values(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for i in 1..out.len().saturating_sub(1) {
        let fi = i as f64;
        out[i + 1] = ((2.0 * fi + 1.0) * x * out[i] - fi * out[i - 1]) / (fi + 1.0);
    }
}

/// L² norm, H¹ seminorm and sampled sup-norm of a [`LocalPoly`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub linf: f64,
}

/// A polynomial of degree `r` on an interval with values in `R^d`.
///
/// `coeffs` is row-major `(r + 1) x d`: row `i` holds the coefficient vector of
/// the mapped Legendre polynomial `P_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPoly {
    interval: Interval,
    degree: usize,
    dim: usize,
    coeffs: Vec<f64>,
}

impl LocalPoly {
    pub fn new(interval: Interval, dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("polynomial dimension must be positive"));
        }
        if coeffs.is_empty() || !coeffs.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "coefficient count {} is not a positive multiple of dim {dim}",
                coeffs.len()
            )));
        }
        let degree = coeffs.len() / dim - 1;
        Ok(LocalPoly {
            interval,
            degree,
            dim,
            coeffs,
        })
    }

    pub fn zero(interval: Interval, degree: usize, dim: usize) -> Self {
        LocalPoly {
            interval,
            degree,
            dim,
            coeffs: vec![0.0; (degree + 1) * dim],
        }
    }

    pub fn constant(interval: Interval, value: &[f64]) -> Self {
        LocalPoly {
            interval,
            degree: 0,
            dim: value.len(),
            coeffs: value.to_vec(),
        }
    }

    #[inline]
    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient vector of `P_i`.
    #[inline]
    pub fn coeff(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.abs() <= tol)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Upper bound for the sup-norm of every component (`|P_i| <= 1`).
    pub fn coeff_abs_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Evaluates at time `t`, which must lie in the closed interval.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        if !self.interval.contains(t) {
            return Err(Error::invalid(format!(
                "t = {t} outside [{}, {}]",
                self.interval.start, self.interval.end
            )));
        }
        let mut out = vec![0.0; self.dim];
        self.eval_reference(self.interval.to_reference(t), &mut out);
        Ok(out)
    }

    /// Evaluates at reference coordinate `x` (no range check).
    pub fn eval_reference(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        out.fill(0.0);
        let d = self.dim;
        let mut p_prev = 1.0;
        let mut p = x;
        for (i, row) in self.coeffs.chunks_exact(d).enumerate() {
            let pi = match i {
                0 => 1.0,
                1 => x,
                _ => {
                    let n = (i - 1) as f64;
                    let next = ((2.0 * n + 1.0) * x * p - n * p_prev) / (n + 1.0);
                    p_prev = p;
                    p = next;
                    next
                }
            };
            for (o, c) in out.iter_mut().zip(row) {
                *o += c * pi;
            }
        }
    }

    /// Value at the left endpoint.
    pub fn left_value(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_reference(-1.0, &mut out);
        out
    }

    /// Value at the right endpoint.
    pub fn right_value(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_reference(1.0, &mut out);
        out
    }

    /// Time derivative. The derivative of a constant is the degree-0 zero polynomial.
    pub fn derivative(&self) -> LocalPoly {
        let d = self.dim;
        if self.degree == 0 {
            return LocalPoly::zero(self.interval, 0, d);
        }
        let r = self.degree;
        let scale = 2.0 / self.interval.len();
        let mut out = vec![0.0; r * d];
        // P_n' = sum over j = n-1, n-3, ... of (2j + 1) P_j; accumulate the
        // odd/even tail sums from the top down.
        let mut tail = [vec![0.0; d], vec![0.0; d]];
        for j in (0..r).rev() {
            let src = &self.coeffs[(j + 1) * d..(j + 2) * d];
            let acc = &mut tail[(j + 1) % 2];
            for (a, s) in acc.iter_mut().zip(src) {
                *a += s;
            }
            let w = (2 * j + 1) as f64 * scale;
            for (o, a) in out[j * d..(j + 1) * d].iter_mut().zip(acc.iter()) {
                *o = w * a;
            }
        }
        LocalPoly {
            interval: self.interval,
            degree: r - 1,
            dim: d,
            coeffs: out,
        }
    }

    /// The degree `r + 1` polynomial `q` with `q' = self` and `q(start) = left_value`.
    pub fn antiderivative(&self, left_value: &[f64]) -> LocalPoly {
        let d = self.dim;
        assert_eq!(left_value.len(), d, "left value dimension mismatch");
        let r = self.degree;
        let half = 0.5 * self.interval.len();
        let mut out = vec![0.0; (r + 2) * d];
        for n in 0..=r {
            let c = &self.coeffs[n * d..(n + 1) * d];
            if n == 0 {
                for (o, ci) in out[d..2 * d].iter_mut().zip(c) {
                    *o += half * ci;
                }
            } else {
                let s = half / (2 * n + 1) as f64;
                for j in 0..d {
                    out[(n + 1) * d + j] += s * c[j];
                    out[(n - 1) * d + j] -= s * c[j];
                }
            }
        }
        // Fix the constant so that q(-1) = left_value, using P_i(-1) = (-1)^i.
        for j in 0..d {
            let mut at_left = 0.0;
            for i in 1..r + 2 {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                at_left += sign * out[i * d + j];
            }
            out[j] = left_value[j] - at_left;
        }
        LocalPoly {
            interval: self.interval,
            degree: r + 1,
            dim: d,
            coeffs: out,
        }
    }

    /// Pointwise difference `self - other` on the same interval, padded to the larger degree.
    pub fn sub(&self, other: &LocalPoly) -> Result<LocalPoly> {
        if self.dim != other.dim || self.interval != other.interval {
            return Err(Error::invalid(
                "polynomial difference needs a common interval and dimension",
            ));
        }
        let degree = self.degree.max(other.degree);
        let mut coeffs = vec![0.0; (degree + 1) * self.dim];
        for (o, c) in coeffs.iter_mut().zip(&self.coeffs) {
            *o += c;
        }
        for (o, c) in coeffs.iter_mut().zip(&other.coeffs) {
            *o -= c;
        }
        Ok(LocalPoly {
            interval: self.interval,
            degree,
            dim: self.dim,
            coeffs,
        })
    }

    /// Truncates or zero-pads to the given degree.
    pub fn with_degree(&self, degree: usize) -> LocalPoly {
        let mut coeffs = vec![0.0; (degree + 1) * self.dim];
        let n = coeffs.len().min(self.coeffs.len());
        coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        LocalPoly {
            interval: self.interval,
            degree,
            dim: self.dim,
            coeffs,
        }
    }

    /// Exact L² norm (Parseval on the scaled Legendre basis).
    pub fn l2_norm(&self) -> f64 {
        let k = self.interval.len();
        self.coeffs
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, row)| k / (2 * i + 1) as f64 * row.iter().map(|c| c * c).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Sup of the Euclidean norm, sampled at `8 (r + 2)` Chebyshev points plus endpoints.
    pub fn linf_norm(&self) -> f64 {
        self.sampled_linf(8 * (self.degree + 2))
    }

    /// Sup of the Euclidean norm sampled at `n` Chebyshev points plus both endpoints.
    ///
    /// Interior local maxima of the samples within 1% of the largest one are
    /// polished by golden-section search on their bracketing samples.
    pub fn sampled_linf(&self, n: usize) -> f64 {
        let mut buf = vec![0.0; self.dim];
        let mut norm_at = |x: f64| {
            self.eval_reference(x, &mut buf);
            euclid(&buf)
        };
        let xs: Vec<f64> = std::iter::once(-1.0)
            .chain(chebyshev_points(n))
            .chain(std::iter::once(1.0))
            .collect();
        let vals: Vec<f64> = xs.iter().map(|&x| norm_at(x)).collect();
        let mut best = vals.iter().copied().fold(0.0, f64::max);
        let cutoff = 0.99 * best;
        for i in 1..xs.len() - 1 {
            if vals[i] >= cutoff && vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
                best = best.max(golden_max(&mut norm_at, xs[i - 1], xs[i + 1]));
            }
        }
        best
    }

    pub fn norms(&self) -> Norms {
        Norms {
            l2: self.l2_norm(),
            h1_semi: self.derivative().l2_norm(),
            linf: self.linf_norm(),
        }
    }
}

/// Chebyshev–Gauss points `cos(pi (2j + 1) / 2n)`, ascending.
pub fn chebyshev_points(n: usize) -> impl Iterator<Item = f64> {
    (0..n).rev().map(move |j| (PI * (2 * j + 1) as f64 / (2 * n) as f64).cos())
}

fn golden_max(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

#[inline]
pub(crate) fn euclid(v: &[f64]) -> f64 {
    if v.len() == 1 {
        v[0].abs()
    } else {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Quadrature-discrete L² projection of `f` onto degree-`r` polynomials on `iv`.
///
/// `f(t, out)` writes the `dim`-vector value at `t`; any error it returns is
/// propagated unchanged.
pub fn l2_project<F>(iv: &Interval, r: usize, dim: usize, quad: &QuadRule, mut f: F) -> Result<LocalPoly>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    if quad.len() < r + 1 {
        return Err(Error::invalid(format!(
            "{}-point quadrature cannot project onto degree {r}",
            quad.len()
        )));
    }
    let mut coeffs = vec![0.0; (r + 1) * dim];
    let mut vals = vec![0.0; dim];
    let mut leg = vec![0.0; r + 1];
    for (&x, &w) in quad.nodes().iter().zip(quad.weights()) {
        f(iv.from_reference(x), &mut vals)?;
        legendre_values(x, &mut leg);
        for (i, &p) in leg.iter().enumerate() {
            let s = w * p;
            for (c, v) in coeffs[i * dim..(i + 1) * dim].iter_mut().zip(&vals) {
                *c += s * v;
            }
        }
    }
    for (i, row) in coeffs.chunks_exact_mut(dim).enumerate() {
        let s = (2 * i + 1) as f64 / 2.0;
        row.iter_mut().for_each(|c| *c *= s);
    }
    LocalPoly::new(*iv, dim, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn interval_rejects_bad_endpoints() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn small_rules() {
        let q1 = gauss_legendre(1).unwrap();
        assert_eq!(q1.nodes(), &[0.0]);
        assert_relative_eq!(q1.weights()[0], 2.0, epsilon = 1e-15);

        let q2 = gauss_legendre(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert_relative_eq!(q2.nodes()[0], -s, epsilon = 1e-15);
        assert_relative_eq!(q2.nodes()[1], s, epsilon = 1e-15);
        assert_relative_eq!(q2.weights()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(q2.weights()[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn five_points_integrate_x8() {
        let q = gauss_legendre(5).unwrap();
        let iv = Interval::new(-1.0, 1.0).unwrap();
        assert_relative_eq!(q.integrate(&iv, |x| x.powi(8)), 2.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn rule_size_is_checked() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(65).is_err());
        assert!(gauss_legendre(64).is_ok());
    }

    #[test]
    fn large_rules_are_sane() {
        for n in [20, 33, 50, 64] {
            let q = gauss_legendre(n).unwrap();
            assert!(q.nodes().windows(2).all(|w| w[0] < w[1]));
            let s: f64 = q.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} weight sum {s}");
        }
    }

    #[test]
    fn eval_examples() {
        let iv = Interval::new(3.0, 7.0).unwrap();
        let c = LocalPoly::constant(iv, &[2.5, -1.0]);
        assert_eq!(c.eval(5.1).unwrap(), vec![2.5, -1.0]);

        let p = LocalPoly::new(Interval::new(0.0, 2.0).unwrap(), 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(p.eval(2.0).unwrap(), vec![1.0]);
        assert_eq!(p.eval(0.0).unwrap(), vec![-1.0]);
        assert!(p.eval(2.5).is_err());
        assert!(p.eval(-1e-9).is_err());

        let q = gauss_legendre(6).unwrap();
        let sq = l2_project(&unit(), 2, 1, &q, |t, o| {
            o[0] = t * t;
            Ok(())
        })
        .unwrap();
        assert_relative_eq!(sq.eval(0.5).unwrap()[0], 0.25, epsilon = 1e-14);
    }

    #[test]
    fn derivative_examples() {
        let c = LocalPoly::constant(unit(), &[4.0]);
        let dc = c.derivative();
        assert_eq!(dc.degree(), 0);
        assert!(dc.is_zero(0.0));

        // t on (0,1) is (1 + P_1)/2.
        let t = LocalPoly::new(unit(), 1, vec![0.5, 0.5]).unwrap();
        let dt = t.derivative();
        assert_eq!(dt.degree(), 0);
        assert_relative_eq!(dt.coeff(0)[0], 1.0, epsilon = 1e-15);

        let iv = Interval::new(0.0, 2.0).unwrap();
        let q = gauss_legendre(8).unwrap();
        let cube = l2_project(&iv, 3, 1, &q, |t, o| {
            o[0] = t.powi(3);
            Ok(())
        })
        .unwrap();
        assert_relative_eq!(cube.derivative().eval(1.0).unwrap()[0], 3.0, epsilon = 1e-13);
    }

    #[test]
    fn antiderivative_examples() {
        let zero = LocalPoly::zero(unit(), 0, 1);
        let q = zero.antiderivative(&[3.0]);
        assert_relative_eq!(q.eval(0.7).unwrap()[0], 3.0);

        let one = LocalPoly::constant(unit(), &[1.0]);
        let q = one.antiderivative(&[0.0]);
        assert_relative_eq!(q.eval(1.0).unwrap()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(q.eval(0.3).unwrap()[0], 0.3, epsilon = 1e-15);

        let rule = gauss_legendre(4).unwrap();
        let two_t = l2_project(&unit(), 1, 1, &rule, |t, o| {
            o[0] = 2.0 * t;
            Ok(())
        })
        .unwrap();
        assert_relative_eq!(two_t.antiderivative(&[0.0]).eval(1.0).unwrap()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn projection_examples() {
        let q = gauss_legendre(5).unwrap();
        let c = l2_project(&unit(), 3, 2, &q, |_, o| {
            o.copy_from_slice(&[1.5, -2.0]);
            Ok(())
        })
        .unwrap();
        assert_relative_eq!(c.coeff(0)[0], 1.5, epsilon = 1e-15);
        assert_relative_eq!(c.coeff(0)[1], -2.0, epsilon = 1e-15);
        for i in 1..=3 {
            assert!(c.coeff(i).iter().all(|x| x.abs() < 1e-15));
        }

        let mean = l2_project(&unit(), 0, 1, &q, |t, o| {
            o[0] = t;
            Ok(())
        })
        .unwrap();
        assert_relative_eq!(mean.coeff(0)[0], 0.5, epsilon = 1e-15);

        let sym = Interval::new(-1.0, 1.0).unwrap();
        let p = l2_project(&sym, 1, 1, &q, |t, o| {
            o[0] = t * t;
            Ok(())
        })
        .unwrap();
        assert_relative_eq!(p.coeff(0)[0], 1.0 / 3.0, epsilon = 1e-15);
        assert!(p.coeff(1)[0].abs() < 1e-15);

        let weak = gauss_legendre(2).unwrap();
        assert!(l2_project(&unit(), 2, 1, &weak, |_, _| Ok(())).is_err());
    }

    #[test]
    fn norm_examples() {
        let c = LocalPoly::constant(unit(), &[-3.0]).norms();
        assert_relative_eq!(c.l2, 3.0, epsilon = 1e-15);
        assert_eq!(c.h1_semi, 0.0);
        assert_relative_eq!(c.linf, 3.0);

        let t = LocalPoly::new(unit(), 1, vec![0.5, 0.5]).unwrap().norms();
        assert_relative_eq!(t.l2, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(t.h1_semi, 1.0, epsilon = 1e-15);
        assert_relative_eq!(t.linf, 1.0, epsilon = 1e-15);

        let z = LocalPoly::zero(unit(), 4, 3).norms();
        assert_eq!((z.l2, z.h1_semi, z.linf), (0.0, 0.0, 0.0));
    }

    #[test]
    fn legendre_values_match_closed_forms() {
        let mut v = [0.0; 4];
        legendre_values(0.3, &mut v);
        assert_relative_eq!(v[2], 0.5 * (3.0 * 0.09 - 1.0), epsilon = 1e-15);
        assert_relative_eq!(v[3], 0.5 * (5.0 * 0.027 - 3.0 * 0.3), epsilon = 1e-15);
    }
}
