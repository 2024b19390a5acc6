//! Integrator and cycle checks against conserved quantities and the flow
//! itself.

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use torusforge::cycles::{
    find_limit_cycle, reference_circle_system, reference_section, CycleOptions,
};
use torusforge::odeint::{integrate_variational, rhs_fn, solve_final, IntegratorConfig};
use torusforge::vfields::{lift_to_3d, NumericField, NumericJacobian, PlanarField};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn zero_eps_lift_conserves_radius(x in 0.2f64..3.0, y in -3.0f64..3.0, z in -2.0f64..2.0) {
        let f = NumericField::new(&lift_to_3d(&reference_circle_system()), 0.0);
        let end = solve_final(&f, &[x, y, z], (0.0, 100.0), &IntegratorConfig::default()).unwrap();
        let r0 = x * x + y * y;
        let r1 = end[0] * end[0] + end[1] * end[1];
        prop_assert!((r1 - r0).abs() <= 1e-8 * r0.max(1.0));
        prop_assert_eq!(end[2], z);
    }

    /// `det M(t) = exp(int_0^t div f)` along any orbit.
    #[test]
    fn liouville(x in 1.2f64..2.8, y in -0.8f64..0.8, t in 0.5f64..4.0) {
        let planar = reference_circle_system();
        let sf = planar.as_spatial();
        let field = NumericField::new(&sf, 0.0);
        let jac = NumericJacobian::new(&sf, 0.0);
        let cfg = IntegratorConfig::default();
        let (_, m) = integrate_variational(&field, |p: &[f64], o: &mut [f64]| jac.eval_into(p, o), &[x, y], (0.0, t), &cfg).unwrap();
        let augmented = rhs_fn(3, |_, s: &[f64], d: &mut [f64]| {
            let mut f2 = [0.0; 2];
            field.eval_into(&s[..2], &mut f2);
            let mut j = [0.0; 4];
            jac.eval_into(&s[..2], &mut j);
            d[0] = f2[0];
            d[1] = f2[1];
            d[2] = j[0] + j[3];
        });
        let end = solve_final(&augmented, &[x, y, 0.0], (0.0, t), &cfg).unwrap();
        let want = end[2].exp();
        prop_assert!((m.determinant() - want).abs() <= 1e-7 * want);
    }
}

fn planar_rhs(f: &PlanarField, p: [f64; 2]) -> [f64; 2] {
    f.eval(p[0], p[1])
}

/// Derivative of uniformly spaced periodic samples via the trigonometric
/// interpolant, evaluated directly.
fn spectral_derivative(v: &[f64], period: f64) -> Vec<f64> {
    let n = v.len();
    let half = n / 2;
    let mut out = vec![0.0; n];
    for k in 1..half {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, x) in v.iter().enumerate() {
            let a = TAU * (k * j) as f64 / n as f64;
            re += x * a.cos();
            im -= x * a.sin();
        }
        let w = TAU * k as f64 / period;
        for (j, o) in out.iter_mut().enumerate() {
            let a = TAU * (k * j) as f64 / n as f64;
            // d/dt of 2 Re(c_k e^{i w t}) / n.
            *o += 2.0 * w * (-re * a.sin() - im * a.cos()) / n as f64;
        }
    }
    out
}

#[test]
fn cycle_samples_solve_the_ode() {
    let f = reference_circle_system();
    let c = find_limit_cycle(&f, [2.5, 0.0], &reference_section(), &CycleOptions::default()).unwrap();
    let u: Vec<f64> = c.samples.iter().map(|s| s.u).collect();
    let v: Vec<f64> = c.samples.iter().map(|s| s.v).collect();
    let (du, dv) = (spectral_derivative(&u, c.period), spectral_derivative(&v, c.period));
    let mut worst: f64 = 0.0;
    for i in 0..u.len() {
        let f0 = planar_rhs(&f, [u[i], v[i]]);
        worst = worst.max((du[i] - f0[0]).abs()).max((dv[i] - f0[1]).abs());
    }
    assert!(worst < 1e-6, "spectral residual {worst:e}");
}

#[test]
fn cycle_closes_and_matches_the_circle() {
    let f = reference_circle_system();
    let c = find_limit_cycle(&f, [2.7, 0.0], &reference_section(), &CycleOptions::default()).unwrap();
    let field = NumericField::new(&f.as_spatial(), 0.0);
    let end = solve_final(&field, &c.fixed_point, (0.0, c.period), &IntegratorConfig::default()).unwrap();
    assert!((end[0] - c.fixed_point[0]).hypot(end[1] - c.fixed_point[1]) < 1e-8);
    for s in &c.samples {
        assert!(((s.u - 2.0).hypot(s.v) - 1.0).abs() < 1e-8);
    }
    let det = c.monodromy[0][0] * c.monodromy[1][1] - c.monodromy[0][1] * c.monodromy[1][0];
    assert!((det / (-4.0 * PI).exp() - 1.0).abs() < 1e-4);
}
