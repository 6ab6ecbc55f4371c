use hpblowup::problem::{exponential, linear, power_square};
use hpblowup::Problem;
use proptest::prelude::*;

fn envelope_holds(p: &Problem, u: f64, v: f64) -> Result<(), TestCaseError> {
    let (mut fu, mut fv) = ([0.0], [0.0]);
    p.rhs(0.0, &[u], &mut fu).unwrap();
    p.rhs(0.0, &[v], &mut fv).unwrap();
    let l = p.lip(0.0, u.abs(), v.abs()).unwrap();
    let lhs = (fu[0] - fv[0]).abs();
    let rhs = l * (u - v).abs();
    prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300, "{}: |F(u)-F(v)| = {lhs} > {rhs}", p.name());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn lipschitz_envelopes_bound_differences(u in -20.0..20.0f64, v in -20.0..20.0f64, lambda in -4.0..4.0f64) {
        envelope_holds(&power_square(1.0).unwrap(), u, v)?;
        envelope_holds(&exponential(1.0).unwrap(), u, v)?;
        envelope_holds(&linear(lambda, vec![1.0]).unwrap(), u, v)?;
    }
}

proptest! {
    #[test]
    fn exact_solutions_solve_the_ode(u0 in 0.2..3.0f64, frac in 0.0..0.9f64, lambda in -3.0..3.0f64) {
        let h = 1e-6;
        for p in [power_square(u0).unwrap(), exponential(u0).unwrap(), linear(lambda, vec![u0]).unwrap()] {
            let t = frac * p.t_blowup().unwrap_or(1.0);
            let fd = (p.exact(t + h).unwrap()[0] - p.exact(t - h).unwrap()[0]) / (2.0 * h);
            let mut f = [0.0];
            p.rhs(t, &p.exact(t).unwrap(), &mut f).unwrap();
            prop_assert!((fd - f[0]).abs() <= 1e-6 * f[0].abs().max(1.0), "{}: {fd} vs {}", p.name(), f[0]);
        }
    }

    #[test]
    fn solutions_blow_up_at_the_stated_time(u0 in 0.2..3.0f64, e in 2i32..8) {
        let eps = 10f64.powi(-e);
        let p = power_square(u0).unwrap();
        let v = p.exact(p.t_blowup().unwrap() - eps).unwrap()[0];
        // u0 / (1 - u0 (1/u0 - eps)) = 1 / eps
        prop_assert!((v * eps - 1.0).abs() <= 1e-6, "{v}");
        let q = exponential(u0).unwrap();
        let w = q.exact(q.t_blowup().unwrap() - eps).unwrap()[0];
        // u0 - ln(e^{u0} eps) = -ln eps
        prop_assert!((w + eps.ln()).abs() <= 1e-6, "{w}");
    }
}
