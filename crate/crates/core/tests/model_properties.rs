use std::f64::consts::PI;

use oscillax::mesh::{build_mesh, element_gradients, lumped_integral, DomainSpec, ScalarField};
use oscillax::model::{
    antiderivative, integrate_f, make_example_nonlinearity, make_p_laplacian, make_regularized_power, Nonlinearity,
    PhiOperator, Site,
};
use proptest::prelude::*;

const LAMBDA: f64 = PI * PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lumped_integral_is_linear(a in -5.0..5.0f64, b in -5.0..5.0f64, seed in 0u64..1000) {
        let mesh = build_mesh(DomainSpec::UnitSquare, 6).unwrap();
        let n = mesh.node_count();
        let u: Vec<f64> = (0..n).map(|i| ((i as u64 * 31 + seed) % 17) as f64 / 17.0).collect();
        let v: Vec<f64> = (0..n).map(|i| ((i as u64 * 7 + seed * 3) % 13) as f64 / 13.0 - 0.5).collect();
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = lumped_integral(&mesh, &w).unwrap();
        let rhs = a * lumped_integral(&mesh, &u).unwrap() + b * lumped_integral(&mesh, &v).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn element_gradients_are_linear(a in -3.0..3.0f64, cells in 2usize..20) {
        let mesh = build_mesh(DomainSpec::Interval { a: 0.0, b: 1.0 }, cells).unwrap();
        let u = ScalarField::interpolate(&mesh, |p| (3.0 * p[0]).sin());
        let v = ScalarField::interpolate(&mesh, |p| p[0] * p[0]);
        let w = ScalarField::interpolate(&mesh, |p| a * (3.0 * p[0]).sin() + p[0] * p[0]);
        let (gu, gv, gw) = (
            element_gradients(&mesh, &u).unwrap(),
            element_gradients(&mesh, &v).unwrap(),
            element_gradients(&mesh, &w).unwrap(),
        );
        for k in 0..gw.len() {
            let expect = a * gu.grads[k][0] + gv.grads[k][0];
            prop_assert!((gw.grads[k][0] - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn example_amplitude_bound(phi in 1e-9..=1.0f64, t in 1e-12..=1.0f64) {
        let nl = make_example_nonlinearity(LAMBDA).unwrap();
        prop_assert!(nl.f(Site::from_phi1(phi), t).abs() <= LAMBDA);
    }

    #[test]
    fn example_branch_values(n in 0u32..5000, phi in 1e-6..=1.0f64) {
        let nl = make_example_nonlinearity(LAMBDA).unwrap();
        let beta = nl.beta(n);
        let value = nl.f(Site::from_phi1(phi), beta * phi);
        let expected = LAMBDA * beta.sqrt();
        prop_assert!((value - expected).abs() <= 1e-12 * expected);
        prop_assert!(nl.beta(n) < nl.gamma(n));
        prop_assert!(nl.beta(n + 1) < nl.beta(n) && nl.gamma(n + 1) < nl.gamma(n));
    }

    #[test]
    fn antiderivative_is_lipschitz(phi in 0.05..=1.0f64, u in 1e-4..0.05f64, frac in 0.0..1.0f64) {
        let nl = make_example_nonlinearity(LAMBDA).unwrap();
        let site = Site::from_phi1(phi);
        let delta = frac * u;
        let a = antiderivative(&nl, site, u, 1e-12).unwrap();
        let b = antiderivative(&nl, site, u + delta, 1e-12).unwrap();
        prop_assert!((b - a).abs() <= LAMBDA * delta + 1e-11);
    }

    #[test]
    fn p_laplacian_energy_density(p in 2.0..6.0f64, s in 1e-3..1e3f64) {
        let op = make_p_laplacian(p).unwrap();
        let expected = 2.0 / p * s.powf(p);
        prop_assert!((op.capital_phi(s * s) - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn regularized_power_increment_matches(p in 2.0..5.0f64, kappa in 0.0..=1.0f64, s in 0.0..10.0f64, ds in -0.5..0.5f64) {
        let op = make_regularized_power(p, kappa).unwrap();
        prop_assume!(s + ds >= 0.0);
        let direct = op.capital_phi(s + ds) - op.capital_phi(s);
        let inc = op.capital_phi_increment(s, ds);
        prop_assert!((inc - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
    }
}

#[test]
fn antiderivative_vanishes_at_zero() {
    let nl = make_example_nonlinearity(LAMBDA).unwrap();
    for phi in [0.01, 0.5, 1.0] {
        assert_eq!(antiderivative(&nl, Site::from_phi1(phi), 0.0, 1e-12).unwrap(), 0.0);
    }
}

#[test]
fn antiderivative_derivative_is_f() {
    let nl = make_example_nonlinearity(LAMBDA).unwrap();
    for phi in [0.1, 0.6, 1.0] {
        let site = Site::from_phi1(phi);
        for u in [2e-3, 1e-2, 0.05] {
            let h = 1e-4 * u;
            // both sides anchored at the same point, so the anchor error cancels
            let fd = (integrate_f(&nl, site, u, h, 1e-12).unwrap() - integrate_f(&nl, site, u, -h, 1e-12).unwrap())
                / (2.0 * h);
            let f = nl.f(site, u);
            assert!((fd - f).abs() <= 1e-6 * f.abs().max(1e-3), "phi={phi} u={u}");
        }
    }
}

#[test]
fn two_antiderivative_routes_agree() {
    let nl = make_example_nonlinearity(LAMBDA).unwrap();
    for (phi, n) in [(1.0, 0), (0.3, 2), (0.8, 5), (0.05, 9)] {
        let u = nl.beta(n) * phi;
        let walk = antiderivative(&nl, Site::from_phi1(phi), u, 1e-12).unwrap();
        let sub = nl.antiderivative_by_substitution(phi, u, 1e-13);
        assert!((walk - sub).abs() <= 1e-9, "phi={phi} n={n}: {walk} vs {sub}");
    }
}
