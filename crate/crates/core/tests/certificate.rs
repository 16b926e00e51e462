use std::f64::consts::TAU;

use rayon::prelude::*;
use snowflake::certificate::{
    certify, derivative_bounds_table, integrand_sixth_derivative, radial_lipschitz,
    sample_max_radial_derivative, AuditConfig, CertificateConfig, CERT_RADIUS,
};
use snowflake::conformal::SlitParams;
use snowflake::jet::Jet;
use snowflake::test_function::nu_t1;
use snowflake::Complex64;

#[test]
fn fourth_derivative_dense_boundary_sample() {
    let p = SlitParams::new(73.0, 1.002).unwrap();
    let n = 1_000_000;
    let max = (0..n)
        .into_par_iter()
        .map(|m| {
            let z = Jet::variable(Complex64::from_polar(1.0, TAU * m as f64 / n as f64), 4);
            p.phi_jet(&z).derivative(4).norm()
        })
        .reduce(|| 0.0, f64::max);
    assert!(max <= 1.08e10, "sampled |phi^(4)| = {max:.6e} exceeds the certified 1.08e10");
}

#[test]
fn fourth_derivative_of_unscaled_map_meets_table() {
    // The same sample with the chain-rule factor s^4 removed, i.e. the
    // fourth derivative of the s = 1 slit map on |w| = 1.002.
    let p = SlitParams::new(73.0, 1.002).unwrap();
    let n = 1_000_000;
    let max = (0..n)
        .into_par_iter()
        .map(|m| {
            let z = Jet::variable(Complex64::from_polar(1.0, TAU * m as f64 / n as f64), 4);
            p.phi_jet(&z).derivative(4).norm()
        })
        .reduce(|| 0.0, f64::max)
        / 1.002f64.powi(4);
    assert!(max <= 1.08e10, "{max:.6e}");
    assert!(max > 1.079e10, "{max:.6e}");
}

#[test]
fn sixth_derivative_sample_below_certified_bound() {
    let p = SlitParams::new(73.0, 1.002).unwrap();
    let bound = derivative_bounds_table(1.002, 73.0).unwrap().f6_bound;
    let nu = nu_t1();
    let rho_max = CERT_RADIUS.powf(1.0 / 13.0);
    for rho in [1.0, 1.0001, 1.01, rho_max] {
        let max = (0..20_000)
            .into_par_iter()
            .map(|m| integrand_sixth_derivative(&p, &nu, rho, TAU * m as f64 / 20_000.0).abs())
            .reduce(|| 0.0, f64::max);
        assert!(max <= bound, "rho = {rho}: {max}");
    }
}

#[test]
fn certified_radial_constant_is_exceeded_near_one() {
    // Spot check on the stated rectangle. The certified maximum 0.36 is the
    // value at z = 1.4; the edge r = 1 near θ = 0 gives about 0.513.
    let p = SlitParams::new(73.0, 1.0).unwrap();
    let lip = radial_lipschitz(13).unwrap();
    let (m, r, theta) = sample_max_radial_derivative(&p, 1.4, lip.arc_halfwidth, 400, 4001);
    assert!(m > lip.max_positive_derivative, "{m}");
    assert!((m - 0.513).abs() < 0.002, "{m} at ({r}, {theta})");
    let implied = 2.0 * lip.arc_halfwidth * m / (TAU * 13.0);
    assert!(implied > lip.coeff, "{implied}");
}

#[test]
fn finer_grid_does_not_lower_the_bound_much() {
    let quick = |points| {
        certify(&CertificateConfig {
            points,
            audit: AuditConfig { angles: 0, radii: 0 },
            ..CertificateConfig::default()
        })
        .unwrap()
    };
    let a = quick(3000);
    let b = quick(6000);
    // halving the interval width halves the Lipschitz slack
    assert!(b.min_bound >= a.min_bound - 1e-9, "{} vs {}", b.min_bound, a.min_bound);
    assert_eq!(a.radii.len(), 3000);
    assert_eq!(a.interval_minima.len(), 2999);
    assert!(a.i_values.iter().all(|&i| i > 0.0));
}
