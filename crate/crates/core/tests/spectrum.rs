use snowflake::bounds::{compute_eigen, fitted_bound, sweep, BoundSettings, EigenSettings, SweepConfig};
use snowflake::conformal::SnowflakeParams;
use snowflake::test_function::{fit_test_function, nu_t1, FitForm};

#[test]
fn sweep_recovers_table_optimum() {
    let cfg = SweepConfig {
        t: 1.0,
        s: 1.0,
        ks: (8..=16).collect(),
        ls: vec![55.0, 67.0, 73.0, 80.0],
        n: 1000,
        m: 500,
        eigen: EigenSettings::default(),
        bound_best: None,
    };
    let records = sweep(&cfg);
    assert_eq!(records.len(), 36);
    assert!(records.iter().all(|r| r.error.is_none()));
    let best = &records[0];
    assert!(best.k.abs_diff(13) <= 1 && [67.0, 73.0, 80.0].contains(&best.l), "best ({}, {})", best.k, best.l);
    let lk = best.log_k_lambda.unwrap();
    assert!((lk - 0.2362).abs() < 0.005, "{lk}");
}

#[test]
fn fitted_test_function_matches_printed_one() {
    let p = SnowflakeParams::new(1.0, 13, 73.0, 1.002).unwrap();
    let (tm, e) = compute_eigen(&p, 1000, 500, None, &EigenSettings::default()).unwrap();
    let fit = fit_test_function(&e, &tm.grid, FitForm::default()).unwrap();
    let printed = nu_t1();
    let scale = printed.eval(1.0) / fit.eval(1.0);
    let worst = (0..=1000)
        .map(|i| 1.0 + 75.2 * i as f64 / 1000.0)
        .map(|r| (fit.eval(r) * scale / printed.eval(r) - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
}

#[test]
fn refinement_is_consistent() {
    let p = SnowflakeParams::new(1.0, 13, 73.0, 1.002).unwrap();
    let lk = |n, m| compute_eigen(&p, n, m, None, &EigenSettings::default()).unwrap().1.log_k(13);
    let (a, b) = (lk(500, 250), lk(1000, 500));
    assert!((a - b).abs() < 0.003, "{a} vs {b}");
}

#[test]
fn bound_does_not_exceed_eigenvalue_estimate() {
    let p = SnowflakeParams::new(1.0, 5, 7.0, 1.0).unwrap();
    let (tm, e) = compute_eigen(&p, 600, 300, None, &EigenSettings::default()).unwrap();
    let (_, b) = fitted_bound(&p, &tm, &e, FitForm::default(), &BoundSettings::default()).unwrap();
    assert!(b.beta_lower <= e.log_k(5) + 0.01, "{} vs {}", b.beta_lower, e.log_k(5));
    assert!(b.beta_lower > 0.0);
}
