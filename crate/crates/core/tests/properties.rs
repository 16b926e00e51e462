use std::f64::consts::TAU;

use nalgebra::DMatrix;
use proptest::prelude::*;
use snowflake::bounds::{bound_from_test_function, compute_eigen, BoundSettings, EigenSettings};
use snowflake::conformal::{singular_points, ExtPoint, SlitParams, SnowflakeParams};
use snowflake::test_function::TestFunction;
use snowflake::transfer::{dominant_eigen, NonnegMatrix};
use snowflake::Complex64;

fn polar(r: f64, theta: f64) -> Complex64 {
    Complex64::from_polar(r, theta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn inverse_undoes_map(l in 0.5f64..120.0, s in 1.0f64..1.01, r in 1.001f64..20.0, theta in 0.0f64..TAU) {
        let p = SlitParams::new(l, s).unwrap();
        let z = polar(r, theta);
        let w = p.phi(z);
        let back = p.inverse_map(ExtPoint::Finite(w)).unwrap().finite().unwrap();
        prop_assert!((back - z).norm() < 1e-9 * z.norm(), "{z} -> {w} -> {back}");
    }

    #[test]
    fn map_keeps_exterior(l in 0.5f64..120.0, r in 1.0001f64..20.0, theta in 0.0f64..TAU) {
        let p = SlitParams::new(l, 1.002).unwrap();
        prop_assert!(p.phi(polar(r, theta)).norm() > 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn derivative_matches_finite_difference(l in 0.5f64..100.0, s in 1.0f64..1.01, r in 1.05f64..10.0, theta in 0.0f64..TAU) {
        let p = SlitParams::new(l, s).unwrap();
        let z = polar(r, theta);
        let h = 1e-5;
        let fd = (p.phi(z + h) - p.phi(z - h)) / (2.0 * h);
        let (_, d) = p.phi_and_derivative(z);
        prop_assert!((fd - d).norm() < 1e-6 * d.norm().max(1.0), "{fd} vs {d}");
    }

    #[test]
    fn closed_form_ratio(l in 0.5f64..100.0, r in 1.01f64..10.0, theta in 0.0f64..TAU) {
        let p = SlitParams::new(l, 1.0).unwrap();
        let z = polar(r, theta);
        let (f, d) = p.phi_and_derivative(z);
        let direct = (d / f).norm();
        let closed = p.log_derivative_ratio(z).unwrap();
        prop_assert!((direct - closed).abs() < 1e-9 * direct);
    }

    #[test]
    fn singular_points_on_circle(l in 0.01f64..1000.0) {
        let (z1, z2) = singular_points(l).unwrap();
        prop_assert!((z1.norm() - 1.0).abs() < 1e-14);
        prop_assert_eq!(z1, z2.conj());
    }
}

fn perron_oracle(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn power_iteration_matches_dense_solver(entries in prop::collection::vec(0.0f64..1.0, 1600)) {
        // strictly positive, so the Perron root is simple and dominant
        let a: Vec<Vec<f64>> = entries.chunks(40).map(|r| r.iter().map(|x| x + 0.01).collect()).collect();
        let m = NonnegMatrix::from_dense(&a).unwrap();
        let e = dominant_eigen(&m, 1e-14, 10_000).unwrap();
        let oracle = perron_oracle(&a);
        prop_assert!((e.lambda - oracle).abs() < 1e-10 * oracle, "{} vs {}", e.lambda, oracle);
    }

    #[test]
    fn bound_is_scale_invariant(scale in 1e-3f64..1e3) {
        let params = SnowflakeParams::new(1.0, 5, 7.0, 1.002).unwrap();
        let nu = TestFunction::interpolate(&[1.0, 3.0, 8.0], &[1.0, 0.8, 0.7]).unwrap();
        let settings = BoundSettings { n_points: 12, ..BoundSettings::default() };
        let a = bound_from_test_function(&params, &nu, 8.0, &settings).unwrap();
        let b = bound_from_test_function(&params, &nu.scaled(scale), 8.0, &settings).unwrap();
        prop_assert!((a.min_ratio - b.min_ratio).abs() < 1e-12 * a.min_ratio);
        prop_assert!((a.beta_lower - b.beta_lower).abs() < 1e-12);
        prop_assert_eq!(a.argmin_r, b.argmin_r);
    }
}

#[test]
fn identity_block_is_neutral() {
    let params = SnowflakeParams::new(1.0, 3, 0.0, 1.0).unwrap();
    let (_, e) = compute_eigen(&params, 200, 64, Some(10.0), &EigenSettings::default()).unwrap();
    assert!((e.lambda - 1.0).abs() < 1e-10);
    let nu = TestFunction::interpolate(&[1.0, 10.0], &[2.0, 2.0]).unwrap();
    let b = bound_from_test_function(&params, &nu, 10.0, &BoundSettings::default()).unwrap();
    for (r, ratio) in &b.per_point {
        assert!((ratio - 1.0).abs() < 1e-10, "r = {r}: {ratio}");
    }
}

#[test]
fn residual_decreases_after_burn_in() {
    // Perron pair of the discretized operator on a reference-table instance:
    // doubling the iteration budget does not move λ.
    let params = SnowflakeParams::new(1.0, 13, 73.0, 1.0).unwrap();
    let loose = EigenSettings { tol: 1e-8, ..EigenSettings::default() };
    let tight = EigenSettings { tol: 1e-12, ..EigenSettings::default() };
    let (_, a) = compute_eigen(&params, 300, 150, None, &loose).unwrap();
    let (_, b) = compute_eigen(&params, 300, 150, None, &tight).unwrap();
    assert!(b.iterations >= a.iterations);
    assert!(b.residual <= a.residual);
    assert!((a.lambda - b.lambda).abs() < 1e-6);
}
