use hpblowup::estimator::{
    phi, psi_update, residual_estimator, residual_quad_points, solve_delta, DeltaOutcome, DeltaSolverConfig,
    StepEstimate,
};
use hpblowup::galerkin::{reconstruct, step, StepInput};
use hpblowup::poly::cached_rule;
use hpblowup::problem::{exponential, linear, power_square};
use hpblowup::{Interval, LocalPoly, PicardConfig, Problem, Scheme};
use proptest::prelude::*;

fn estimate(psi: f64, delta: f64) -> StepEstimate {
    StepEstimate {
        eta_res: 0.0,
        eta_proj: 0.0,
        psi,
        delta: Some(delta),
        bound: Some(delta * psi),
        delta_hat: delta,
        effectivity: None,
    }
}

/// Max over 2000 points of `|int_a^t F(Û) - (Û(t) - Û(a))|`, each integral by 64-point Gauss.
fn brute_force_residual(p: &Problem, uh: &LocalPoly) -> f64 {
    let iv = *uh.interval();
    let q = cached_rule(64);
    let ua = uh.left_value()[0];
    let n = 2000;
    (1..=n)
        .map(|j| {
            let t = if j == n { iv.end() } else { iv.start() + iv.len() * j as f64 / n as f64 };
            let sub = Interval::new(iv.start(), t).unwrap();
            let integral = q.integrate(&sub, |s| {
                let mut f = [0.0];
                p.rhs(s, &uh.eval(s).unwrap(), &mut f).unwrap();
                f[0]
            });
            (integral - (uh.eval(t).unwrap()[0] - ua)).abs()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn globally_lipschitz_growth_is_exponential(
        lambda in -5.0..5.0f64, k in 1e-4..1.0f64, psi in 0.0..2.0f64, u in -3.0..3.0f64
    ) {
        let p = linear(lambda, vec![1.0]).unwrap();
        let iv = Interval::new(0.0, k).unwrap();
        let uh = LocalPoly::constant(iv, &[u]);
        let d = solve_delta(&p, &iv, &uh, psi, None, &DeltaSolverConfig::default(), cached_rule(8));
        let expect = (lambda.abs() * k).exp();
        prop_assert!((d.delta().unwrap() - expect).abs() <= 1e-8 * expect, "{d:?} vs {expect}");
    }

    #[test]
    fn psi_never_decreases(psi in 0.0..1.0f64, delta in 1.0..50.0f64, eta in 0.0..1.0f64, proj in 0.0..1.0f64) {
        let prev = estimate(psi, delta);
        let next = psi_update(Some(&prev), proj, eta).unwrap();
        prop_assert!(next >= psi);
        prop_assert!((next - (delta * psi + proj + eta)).abs() <= 1e-15 * next.max(1.0));
    }

    #[test]
    fn delta_is_the_first_crossing(u in 0.0..20.0f64, psi in 0.0..5.0f64, k in 0.001..0.5f64) {
        let p = power_square(1.0).unwrap();
        let iv = Interval::new(0.0, k).unwrap();
        let uh = LocalPoly::constant(iv, &[u]);
        let q = cached_rule(8);
        prop_assert!(phi(&p, &iv, &uh, psi, 1.0, q) >= 0.0);
        match solve_delta(&p, &iv, &uh, psi, None, &DeltaSolverConfig::default(), q) {
            DeltaOutcome::Found(d) => {
                prop_assert!(d >= 1.0);
                prop_assert!(phi(&p, &iv, &uh, psi, d, q) <= 1e-9);
                for j in 0..200 {
                    let x = 1.0 + (d - 1.0) * (1.0 - 1e-6) * j as f64 / 199.0;
                    if x < d * (1.0 - 1e-6) {
                        prop_assert!(phi(&p, &iv, &uh, psi, x, q) > 0.0, "phi({x}) <= 0 left of {d}");
                    }
                }
            }
            DeltaOutcome::NotFound { min_phi, .. } => {
                // Grid check that phi really stays positive.
                for j in 0..2000 {
                    let x = 1.0 + 1e4 * (j as f64 / 1999.0).powi(3);
                    prop_assert!(phi(&p, &iv, &uh, psi, x, q) > 0.0);
                }
                prop_assert!(min_phi > 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_matches_brute_force(
        ul in 0.2..0.8f64, a in 0.0..0.3f64, k in 0.05..0.2f64, r in 1usize..4, cg in any::<bool>(), exp in any::<bool>()
    ) {
        let p = if exp { exponential(0.0).unwrap() } else { power_square(1.0).unwrap() };
        let scheme = if cg { Scheme::Cg } else { Scheme::Dg };
        let input = StepInput { iv: Interval::new(a, a + k).unwrap(), r, u_left: vec![ul], scheme };
        let q = cached_rule(r + 6);
        let u = step(&p, &input, &PicardConfig::default(), q).unwrap().u;
        let uh = reconstruct(&p, &input, &u, q).unwrap();
        let est = residual_estimator(&p, &uh, cached_rule(residual_quad_points(uh.degree()))).unwrap();
        let oracle = brute_force_residual(&p, &uh);
        prop_assert!((est - oracle).abs() <= 0.01 * oracle, "estimator {est:e} vs oracle {oracle:e}");
    }
}
