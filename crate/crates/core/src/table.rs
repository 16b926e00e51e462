//! Reference spectra of nearly optimal snowflakes (s = 1, N = 2000,
//! M = 1000) and their recomputation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{compute_eigen, fitted_bound, reliability_warning, BoundSettings, EigenSettings};
use crate::conformal::SnowflakeParams;
use crate::error::Result;
use crate::test_function::FitForm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub t: f64,
    pub k: u32,
    pub l: f64,
    pub log_k_lambda: f64,
    pub beta: Option<f64>,
    pub kraetzer: Option<f64>,
    pub t2_over_4: f64,
}

const fn row(t: f64, k: u32, l: f64, lk: f64, beta: Option<f64>, kr: Option<f64>, t2: f64) -> TableRow {
    TableRow {
        t,
        k,
        l,
        log_k_lambda: lk,
        beta,
        kraetzer: kr,
        t2_over_4: t2,
    }
}

pub const TABLE1: [TableRow; 20] = [
    row(-2.0, 34, 1.0, 1.262, None, None, 1.0),
    row(-1.8, 34, 1.0, 1.068, None, None, 0.81),
    row(-1.6, 34, 1.0, 0.8761, None, None, 0.64),
    row(-1.4, 34, 1.0, 0.6879, None, Some(0.476), 0.49),
    row(-1.2, 34, 1.0, 0.5059, None, Some(0.340), 0.36),
    row(-1.0, 34, 1.0, 0.3354, None, Some(0.231), 0.25),
    row(-0.8, 34, 1.0, 0.1865, None, Some(0.149), 0.16),
    row(-0.6, 24, 21.0, 0.0848, Some(0.0710), Some(0.085), 0.09),
    row(-0.4, 20, 25.0, 0.0377, Some(0.0352), Some(0.037), 0.04),
    row(-0.2, 31, 44.0, 0.0093, Some(0.0083), Some(0.0095), 0.01),
    row(0.2, 5, 7.0, 0.0091, Some(0.00897), Some(0.0094), 0.01),
    row(0.4, 11, 30.0, 0.0376, Some(0.03767), Some(0.037), 0.04),
    row(0.6, 14, 68.0, 0.0851, Some(0.08442), Some(0.086), 0.09),
    row(0.8, 12, 67.0, 0.1514, Some(0.1511), Some(0.154), 0.16),
    row(1.0, 13, 73.0, 0.2362, Some(0.2340), Some(0.242), 0.25),
    row(1.2, 10, 67.0, 0.3425, Some(0.3350), Some(0.346), 0.36),
    row(1.4, 8, 55.0, 0.4680, Some(0.4586), Some(0.476), 0.49),
    row(1.6, 6, 39.0, 0.6137, Some(0.6091), None, 0.64),
    row(1.8, 6, 39.0, 0.7790, Some(0.7713), None, 0.81),
    row(2.0, 4, 21.0, 0.9548, Some(0.9296), None, 1.0),
];

/// Rows whose `t` is within `1e-9` of one of `ts`, in table order.
pub fn select_rows(ts: &[f64]) -> Vec<TableRow> {
    TABLE1
        .iter()
        .filter(|r| ts.iter().any(|t| (t - r.t).abs() < 1e-9))
        .copied()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub row: TableRow,
    pub log_k_lambda: Option<f64>,
    pub beta_lower: Option<f64>,
    pub warning: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    pub n: usize,
    pub m: usize,
    pub s: f64,
    pub eigen: EigenSettings,
    /// Also compute the fitted-test-function bound for each row.
    pub bound: Option<BoundSettings>,
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            n: 2000,
            m: 1000,
            s: 1.0,
            eigen: EigenSettings::default(),
            bound: None,
        }
    }
}

fn run_row(row: &TableRow, cfg: &TableConfig) -> TableRecord {
    let mut rec = TableRecord {
        row: *row,
        log_k_lambda: None,
        beta_lower: None,
        warning: reliability_warning(row.t),
        error: None,
    };
    let params = match SnowflakeParams::new(row.t, row.k, row.l, cfg.s) {
        Ok(p) => p,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let (tm, eig) = match compute_eigen(&params, cfg.n, cfg.m, None, &cfg.eigen) {
        Ok(v) => v,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.log_k_lambda = Some(eig.log_k(row.k));
    if let Some(b) = &cfg.bound {
        match fitted_bound(&params, &tm, &eig, FitForm::default(), b) {
            Ok((_, bound)) => rec.beta_lower = Some(bound.beta_lower),
            Err(e) => {
                let w = format!("bound failed: {e}");
                rec.warning = Some(match rec.warning.take() {
                    Some(old) => format!("{old}; {w}"),
                    None => w,
                });
            }
        }
    }
    rec
}

/// Recompute the given rows; failures are recorded per row.
pub fn run_table(rows: &[TableRow], cfg: &TableConfig) -> Vec<TableRecord> {
    rows.par_iter().map(|r| run_row(r, cfg)).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

pub fn write_table_csv<W: Write>(records: &[TableRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "k",
        "l",
        "log_k_lambda",
        "printed_log_k_lambda",
        "beta_lower",
        "printed_beta",
        "kraetzer",
        "t2_over_4",
        "status",
    ])?;
    for r in records {
        let status = match (&r.error, &r.warning) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(w)) => format!("warning: {w}"),
            (None, None) => "ok".into(),
        };
        w.write_record([
            format!("{}", r.row.t),
            r.row.k.to_string(),
            format!("{}", r.row.l),
            r.log_k_lambda.map_or_else(String::new, |x| format!("{x:.6}")),
            format!("{}", r.row.log_k_lambda),
            r.beta_lower.map_or_else(String::new, |x| format!("{x:.6}")),
            opt(r.row.beta),
            opt(r.row.kraetzer),
            format!("{}", r.row.t2_over_4),
            status,
        ])?;
    }
    w.flush()?;
    Ok(())
}
