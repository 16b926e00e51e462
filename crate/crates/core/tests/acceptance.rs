//! One test per acceptance criterion; each prints a PASS/FAIL line with the
//! measured values before asserting.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snowflake::bounds::{bound_from_test_function, compute_eigen, fitted_bound, BoundSettings, EigenSettings};
use snowflake::certificate::{
    certify, euler_error_bound, radial_lipschitz, radial_quadratic, CertificateConfig, QuadratureScheme, Verdict,
};
use snowflake::conformal::{singular_points, ExtPoint, SlitParams, SnowflakeParams};
use snowflake::render::{export_svg, render_scene, trace_green_line, SceneConfig, SnowflakeRealization, TraceSettings};
use snowflake::test_function::{FitForm, TestFunction};
use snowflake::transfer::{dominant_eigen, NonnegMatrix};
use snowflake::Complex64;

fn report(id: u32, pass: bool, detail: &str) {
    println!("criterion {id}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

#[test]
fn criterion_1_critical_radius() {
    let start = Instant::now();
    let r = SlitParams::new(73.0, 1.002).unwrap().critical_radius(13, 1e-9).unwrap();
    let elapsed = start.elapsed();
    let pass = within(r, 76.1568, 0.001) && elapsed < Duration::from_secs(1);
    report(1, pass, &format!("R = {r:.6} (target 76.1568 ± 0.001) in {elapsed:.2?}"));
    assert!(pass);
}

fn log_k_lambda(t: f64, k: u32, l: f64, s: f64, n: usize, m: usize) -> f64 {
    let p = SnowflakeParams::new(t, k, l, s).unwrap();
    let (_, e) = compute_eigen(&p, n, m, None, &EigenSettings::default()).unwrap();
    e.log_k(k)
}

#[test]
fn criterion_2_discretized_eigenvalue() {
    let start = Instant::now();
    let a = log_k_lambda(1.0, 13, 73.0, 1.002, 1000, 500);
    let b = log_k_lambda(1.0, 13, 73.0, 1.0, 1000, 500);
    let elapsed = start.elapsed();
    let pass = within(a, 0.2321, 0.002) && within(b, 0.23492, 0.002) && elapsed < Duration::from_secs(30);
    report(
        2,
        pass,
        &format!("s=1.002: {a:.5} (target 0.2321 ± 0.002); s=1: {b:.5} (target 0.23492 ± 0.002); {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_table_rows() {
    let start = Instant::now();
    let rows = [
        (0.2, 5, 7.0, 0.0091, 0.001),
        (1.0, 13, 73.0, 0.2362, 0.005),
        (2.0, 4, 21.0, 0.9548, 0.005),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (t, k, l, target, tol) in rows {
        let v = log_k_lambda(t, k, l, 1.0, 2000, 1000);
        pass &= within(v, target, tol);
        detail.push(format!("t={t}: {v:.5} (target {target} ± {tol})"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    report(3, pass, &format!("{}; {elapsed:.2?}", detail.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_3_extended_negative_t() {
    let v = log_k_lambda(-0.6, 24, 21.0, 1.0, 3000, 2000);
    let pass = within(v, 0.0847, 0.002);
    report(3, pass, &format!("extended t=-0.6 at N=3000, M=2000: {v:.5} (target 0.0847 ± 0.002)"));
    assert!(pass);
}

#[test]
fn criterion_4_semi_rigorous_bound() {
    let start = Instant::now();
    let p = SnowflakeParams::new(1.0, 13, 73.0, 1.0).unwrap();
    let (tm, e) = compute_eigen(&p, 2000, 1000, None, &EigenSettings::default()).unwrap();
    let (_, b) = fitted_bound(&p, &tm, &e, FitForm::default(), &BoundSettings::default()).unwrap();
    let elapsed = start.elapsed();
    let pass = within(b.beta_lower, 0.2340, 0.003) && elapsed < Duration::from_secs(120);
    report(
        4,
        pass,
        &format!("beta(1) >= {:.5} (target 0.2340 ± 0.003), min ratio {:.5} at r = {:.3}; {elapsed:.2?}", b.beta_lower, b.min_ratio, b.argmin_r),
    );
    assert!(pass);
}

#[test]
fn criterion_5_certificate() {
    let start = Instant::now();
    let cert = certify(&CertificateConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let exceeded: Vec<String> = cert
        .audits
        .iter()
        .filter(|a| !a.consistent)
        .map(|a| format!("{} {:.4e} > {:.4e}", a.name, a.sampled, a.certified))
        .collect();
    let pass = cert.min_bound >= 1.8079 - 0.001
        && cert.beta_bound >= 0.2308 - 0.0002
        && cert.verdict == Verdict::Pass
        && elapsed < Duration::from_secs(600);
    report(
        5,
        pass,
        &format!(
            "min_bound {:.5} (target >= 1.8069), beta_bound {:.5} (target >= 0.2306), verdict {:?}, {} non-certifying intervals; sampled audits above certified constants: [{}]; {elapsed:.2?}",
            cert.min_bound,
            cert.beta_bound,
            cert.verdict,
            cert.failing_intervals.len(),
            exceeded.join("; ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_constant_audits() {
    let q = QuadratureScheme::new(10_000, 3).unwrap();
    let eps_ok = (q.epsilon - PI / 5000.0).abs() < 1e-15;
    let euler = euler_error_bound(&q, 1.65e21);
    let lip = radial_lipschitz(13).unwrap();
    let implied = lip.implied_coeff(13);
    let gamma6 = q.gamma_2n();
    let p = SlitParams::new(73.0, 1.0).unwrap();
    let (_, c) = radial_quadratic(1.0, &p);
    // the singular point as printed, rational in √74
    let s74 = 74f64.sqrt();
    let (x, y) = (-5033.0 / 5625.0, -292.0 * s74 / 5625.0);
    let printed = y * y / (x - 1.0);
    let pass = eps_ok
        && euler <= 0.0034
        && implied <= 0.0131
        && (gamma6 * 30240.0 - 1.0).abs() < 1e-14
        && (printed - -592.0 / 5625.0).abs() < 1e-12
        && (c - -592.0 / 5625.0).abs() < 1e-12;
    report(
        6,
        pass,
        &format!(
            "euler {euler:.6} <= 0.0034; 2*1.48*0.36/(2pi*13) = {implied:.6} <= 0.0131; gamma_6 = 1/{:.6}; y^2/(x-1) = {printed:.15} vs -592/5625",
            1.0 / gamma6
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let p = SlitParams::new(73.0, 1.002).unwrap();
    let mut roundtrip = 0.0f64;
    let mut fd = 0.0f64;
    for _ in 0..1000 {
        let z = Complex64::from_polar(rng.random_range(1.001..20.0), rng.random_range(0.0..TAU));
        let w = p.phi(z);
        let back = p.inverse_map(ExtPoint::Finite(w)).unwrap().finite().unwrap();
        roundtrip = roundtrip.max((back - z).norm() / z.norm());
        let h = 1e-5;
        let (_, d) = p.phi_and_derivative(z);
        let approx = (p.phi(z + h) - p.phi(z - h)) / (2.0 * h);
        fd = fd.max((approx - d).norm() / d.norm().max(1.0));
    }
    let (z1, _) = singular_points(73.0).unwrap();
    let circle = (z1.norm() - 1.0).abs();

    let mut oracle_err = 0.0f64;
    for _ in 0..10 {
        let a: Vec<Vec<f64>> = (0..40).map(|_| (0..40).map(|_| rng.random::<f64>() + 0.01).collect()).collect();
        let e = dominant_eigen(&NonnegMatrix::from_dense(&a).unwrap(), 1e-14, 10_000).unwrap();
        let m = DMatrix::from_fn(40, 40, |i, j| a[i][j]);
        let rho = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        oracle_err = oracle_err.max((e.lambda - rho).abs() / rho);
    }

    let id = SnowflakeParams::new(1.0, 3, 0.0, 1.0).unwrap();
    let (_, e) = compute_eigen(&id, 200, 64, Some(10.0), &EigenSettings::default()).unwrap();
    let flat = TestFunction::interpolate(&[1.0, 10.0], &[1.0, 1.0]).unwrap();
    let b = bound_from_test_function(&id, &flat, 10.0, &BoundSettings::default()).unwrap();
    let id_err = b.per_point.iter().map(|(_, q)| (q - 1.0).abs()).fold((e.lambda - 1.0).abs(), f64::max);

    let params = SnowflakeParams::new(1.0, 5, 7.0, 1.002).unwrap();
    let nu = TestFunction::interpolate(&[1.0, 3.0, 8.0], &[1.0, 0.8, 0.7]).unwrap();
    let settings = BoundSettings { n_points: 20, ..BoundSettings::default() };
    let x = bound_from_test_function(&params, &nu, 8.0, &settings).unwrap();
    let y = bound_from_test_function(&params, &nu.scaled(37.5), 8.0, &settings).unwrap();
    let scale_err = (x.min_ratio - y.min_ratio).abs().max((x.beta_lower - y.beta_lower).abs());

    let pass = roundtrip < 1e-9 && circle < 1e-14 && fd < 1e-6 && oracle_err < 1e-10 && id_err < 1e-10 && scale_err < 1e-12;
    report(
        7,
        pass,
        &format!(
            "roundtrip {roundtrip:.1e}; |z1|-1 {circle:.1e}; fd {fd:.1e}; oracle {oracle_err:.1e}; identity {id_err:.1e}; scaling {scale_err:.1e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_renderer() {
    let p = SnowflakeParams::new(1.0, 13, 73.0, 1.002).unwrap();
    let real = SnowflakeRealization::random(p, 3, 1).unwrap();
    let settings = TraceSettings::default();
    let cfg = SceneConfig::figure(13);
    let scene = render_scene(&real, &cfg).unwrap();
    let again = render_scene(&SnowflakeRealization::random(p, 3, 1).unwrap(), &cfg).unwrap();
    let mut closed_ok = true;
    let mut winding_ok = true;
    let mut worst_gap = 0.0f64;
    for c in scene.curves.iter().filter(|c| c.closed) {
        worst_gap = worst_gap.max(c.closure_gap());
        closed_ok &= c.closure_gap() < settings.tol && c.complete;
        winding_ok &= c.winding_number(Complex64::new(0.0, 0.0)) == 1;
    }
    let line = trace_green_line(&real, 1.2f64.powf(1.0 / 2197.0), &settings).unwrap();
    winding_ok &= line.winding_number(Complex64::new(0.0, 0.0)) == 1;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("figure.svg");
    export_svg(&scene, &path).unwrap();
    let xml_ok = roxmltree::Document::parse(&std::fs::read_to_string(&path).unwrap()).is_ok();
    let pass = closed_ok && winding_ok && scene == again && xml_ok;
    report(
        8,
        pass,
        &format!(
            "closure gap {worst_gap:.1e} < {}; winding 1: {winding_ok}; deterministic: {}; well-formed SVG: {xml_ok}",
            settings.tol,
            scene == again
        ),
    );
    assert!(pass);
}
