//! Semi-rigorous lower bounds `β(t) ≥ min log(Pν/ν)/log k` and sweeps
//! over snowflake parameters.
//!
//! Nothing here carries a certified error term: quadrature is converged by
//! node doubling and the minimum is taken over a finite radial grid. The
//! certified pipeline for t = 1 lives in [`crate::certificate`].

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::SnowflakeParams;
use crate::error::{Error, Result};
use crate::quadrature::TrapezoidSettings;
use crate::test_function::{fit_test_function, FitForm, TestFunction};
use crate::transfer::{apply_operator, build_matrix, DiscretizationGrid, EigenPair, TransferMatrix};

/// Below this `t` the discretized eigenvalue is known to be unreliable.
pub const NEGATIVE_T_WARNING: f64 = -0.8;

/// Relative offset `(R−1)·δ` replacing `r = 1` when `s = 1`, where the
/// kernel is singular on the unit circle.
pub const S1_LEFT_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Bisection tolerance for the critical radius.
    pub radius_tol: f64,
}

impl Default for EigenSettings {
    fn default() -> Self {
        EigenSettings {
            tol: 1e-10,
            max_iter: 100_000,
            radius_tol: 1e-9,
        }
    }
}

/// Critical radius (unless overridden), `P_N`, and its Perron pair.
pub fn compute_eigen(
    params: &SnowflakeParams,
    n: usize,
    m: usize,
    radius: Option<f64>,
    settings: &EigenSettings,
) -> Result<(TransferMatrix, EigenPair)> {
    let radius = match radius {
        Some(r) => r,
        None => params.critical_radius(settings.radius_tol)?,
    };
    let grid = DiscretizationGrid::new(n, m, radius)?;
    let tm = build_matrix(params, &grid)?;
    let eig = tm.dominant_eigen(settings.tol, settings.max_iter)?;
    Ok((tm, eig))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSettings {
    pub n_points: usize,
    pub quad: TrapezoidSettings,
}

impl Default for BoundSettings {
    fn default() -> Self {
        BoundSettings {
            n_points: 400,
            quad: TrapezoidSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub params: SnowflakeParams,
    pub radius: f64,
    pub beta_lower: f64,
    pub min_ratio: f64,
    pub argmin_r: f64,
    pub per_point: Vec<(f64, f64)>,
    pub quad_tol: f64,
    /// Always true: no certified error term is attached to this bound.
    pub semi_rigorous: bool,
}

/// Evaluate `Pν(r)/ν(r)` on `n_points` equispaced radii of `[1, R]` and
/// return the minimum together with `log(min)/log k`.
pub fn bound_from_test_function(
    params: &SnowflakeParams,
    nu: &TestFunction,
    radius: f64,
    settings: &BoundSettings,
) -> Result<BoundResult> {
    if settings.n_points < 2 {
        return Err(Error::InvalidParameter("need at least two radii".into()));
    }
    if !(radius > 1.0) {
        return Err(Error::InvalidParameter(format!("outer radius {radius} must be > 1")));
    }
    let n = settings.n_points;
    let radii: Vec<f64> = (0..n)
        .map(|i| {
            let r = 1.0 + (radius - 1.0) * i as f64 / (n - 1) as f64;
            if i == 0 && params.slit.s == 1.0 {
                1.0 + (radius - 1.0) * S1_LEFT_OFFSET
            } else {
                r
            }
        })
        .collect();
    let per_point: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            let denom = nu.eval(r);
            if !(denom > 0.0) {
                return Err(Error::NonPositive(r));
            }
            let q = apply_operator(params, nu, r, &settings.quad)?;
            Ok((r, q.value / denom))
        })
        .collect::<Result<_>>()?;
    let (argmin_r, min_ratio) = per_point
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    Ok(BoundResult {
        params: *params,
        radius,
        beta_lower: min_ratio.ln() / params.kf().ln(),
        min_ratio,
        argmin_r,
        per_point,
        quad_tol: settings.quad.tol,
        semi_rigorous: true,
    })
}

/// Full semi-rigorous pipeline: eigenvector → fitted `ν` → bound.
pub fn fitted_bound(
    params: &SnowflakeParams,
    tm: &TransferMatrix,
    eig: &EigenPair,
    form: FitForm,
    settings: &BoundSettings,
) -> Result<(TestFunction, BoundResult)> {
    let nu = fit_test_function(eig, &tm.grid, form)?;
    let bound = bound_from_test_function(params, &nu, tm.grid.radius, settings)?;
    Ok((nu, bound))
}

/// One cell of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub t: f64,
    pub k: u32,
    pub l: f64,
    pub radius: Option<f64>,
    pub log_k_lambda: Option<f64>,
    pub beta_lower: Option<f64>,
    pub warning: Option<String>,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn status(&self) -> String {
        match (&self.error, &self.warning) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(w)) => format!("warning: {w}"),
            (None, None) => "ok".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub t: f64,
    pub s: f64,
    pub ks: Vec<u32>,
    pub ls: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub eigen: EigenSettings,
    /// Compute the fitted-test-function bound for the best cell.
    pub bound_best: Option<BoundSettings>,
}

pub fn reliability_warning(t: f64) -> Option<String> {
    (t <= NEGATIVE_T_WARNING)
        .then(|| format!("t = {t} <= {NEGATIVE_T_WARNING}: discretized eigenvalue unreliable"))
}

fn sweep_cell(cfg: &SweepConfig, k: u32, l: f64) -> SweepRecord {
    let mut rec = SweepRecord {
        t: cfg.t,
        k,
        l,
        radius: None,
        log_k_lambda: None,
        beta_lower: None,
        warning: reliability_warning(cfg.t),
        error: None,
    };
    let run = || -> Result<(f64, f64)> {
        let params = SnowflakeParams::new(cfg.t, k, l, cfg.s)?;
        let (tm, eig) = compute_eigen(&params, cfg.n, cfg.m, None, &cfg.eigen)?;
        Ok((tm.grid.radius, eig.log_k(k)))
    };
    match run() {
        Ok((radius, lk)) => {
            rec.radius = Some(radius);
            rec.log_k_lambda = Some(lk);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Evaluate every `(k, l)` cell; results are sorted by decreasing
/// `log_k λ` with failed cells last. Cell failures do not abort the sweep.
pub fn sweep(cfg: &SweepConfig) -> Vec<SweepRecord> {
    let cells: Vec<(u32, f64)> = cfg
        .ks
        .iter()
        .flat_map(|&k| cfg.ls.iter().map(move |&l| (k, l)))
        .collect();
    let mut records: Vec<SweepRecord> = cells
        .par_iter()
        .map(|&(k, l)| sweep_cell(cfg, k, l))
        .collect();
    records.sort_by(|a, b| {
        let key = |r: &SweepRecord| r.log_k_lambda.unwrap_or(f64::NEG_INFINITY);
        key(b)
            .total_cmp(&key(a))
            .then(a.k.cmp(&b.k))
            .then(a.l.total_cmp(&b.l))
    });
    if let (Some(settings), Some(best)) = (cfg.bound_best, records.first_mut()) {
        if best.error.is_none() {
            let run = || -> Result<f64> {
                let params = SnowflakeParams::new(cfg.t, best.k, best.l, cfg.s)?;
                let (tm, eig) = compute_eigen(&params, cfg.n, cfg.m, best.radius, &cfg.eigen)?;
                let (_, bound) = fitted_bound(&params, &tm, &eig, FitForm::default(), &settings)?;
                Ok(bound.beta_lower)
            };
            match run() {
                Ok(b) => best.beta_lower = Some(b),
                Err(e) => {
                    let w = format!("bound failed: {e}");
                    best.warning = Some(match best.warning.take() {
                        Some(old) => format!("{old}; {w}"),
                        None => w,
                    });
                }
            }
        }
    }
    records
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

/// CSV with columns `t,k,l,log_k_lambda,beta_lower,t2_over_4,status`.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "k", "l", "log_k_lambda", "beta_lower", "t2_over_4", "status"])?;
    for r in records {
        w.write_record([
            format!("{}", r.t),
            r.k.to_string(),
            format!("{}", r.l),
            opt(r.log_k_lambda),
            opt(r.beta_lower),
            format!("{}", r.t * r.t / 4.0),
            r.status(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_block_bound_is_zero() {
        let params = SnowflakeParams::new(1.0, 5, 0.0, 1.0).unwrap();
        let nu = TestFunction::interpolate(&[1.0, 10.0], &[1.0, 1.0]).unwrap();
        let b = bound_from_test_function(&params, &nu, 10.0, &BoundSettings::default()).unwrap();
        assert!((b.min_ratio - 1.0).abs() < 1e-12);
        assert!(b.beta_lower.abs() < 1e-12);
        assert!(b.semi_rigorous);
    }

    #[test]
    fn empty_sweep() {
        let cfg = SweepConfig {
            t: 1.0,
            s: 1.0,
            ks: vec![13],
            ls: vec![],
            n: 100,
            m: 50,
            eigen: EigenSettings::default(),
            bound_best: None,
        };
        assert!(sweep(&cfg).is_empty());
    }

    #[test]
    fn failed_cells_are_recorded() {
        let cfg = SweepConfig {
            t: 1.0,
            s: 1.0,
            ks: vec![4],
            ls: vec![0.0, 21.0],
            n: 200,
            m: 100,
            eigen: EigenSettings::default(),
            bound_best: None,
        };
        let out = sweep(&cfg);
        assert_eq!(out.len(), 2);
        assert!(out[0].error.is_none() && out[0].l == 21.0);
        assert!(out[1].error.as_deref().unwrap().contains("degenerate"));
        let mut buf = Vec::new();
        write_sweep_csv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,k,l,log_k_lambda,beta_lower,t2_over_4,status"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn negative_t_is_flagged() {
        assert!(reliability_warning(-1.0).is_some());
        assert!(reliability_warning(-0.8).is_some());
        assert!(reliability_warning(-0.6).is_none());
    }
}
