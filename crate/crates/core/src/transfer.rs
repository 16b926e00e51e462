//! Discretized transfer operator `P_N`, its Perron eigenpair, and the
//! continuous operator `Pν(r)` by quadrature.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::SnowflakeParams;
use crate::error::{Error, Result};
use crate::quadrature::{periodic_mean, QuadResult, TrapezoidSettings};
use crate::test_function::TestFunction;

/// Fraction of top-clamped samples above which `R` is suspected to be
/// below the true critical radius.
pub const TOP_CLAMP_WARN_FRACTION: f64 = 1e-3;

/// Radial grid `r_n = 1 + (R−1)n/N`, `n = 1..N`, and angles `θ_m = 2πm/M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationGrid {
    pub n: usize,
    pub m: usize,
    pub radius: f64,
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Outcome of assigning an image modulus to a radial bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bin {
    Inside(usize),
    ClampedBelow(usize),
    ClampedAbove(usize),
}

impl Bin {
    pub fn index(self) -> usize {
        match self {
            Bin::Inside(i) | Bin::ClampedBelow(i) | Bin::ClampedAbove(i) => i,
        }
    }
}

impl DiscretizationGrid {
    pub fn new(n: usize, m: usize, radius: f64) -> Result<Self> {
        if n < 2 || m < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid sizes N = {n}, M = {m} must be >= 2"
            )));
        }
        if !(radius.is_finite() && radius > 1.0) {
            return Err(Error::InvalidParameter(format!("outer radius {radius} must be > 1")));
        }
        let r = (1..=n)
            .map(|i| 1.0 + (radius - 1.0) * i as f64 / n as f64)
            .collect();
        let theta = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
        Ok(DiscretizationGrid {
            n,
            m,
            radius,
            r,
            theta,
        })
    }

    pub fn step(&self) -> f64 {
        (self.radius - 1.0) / self.n as f64
    }

    /// Zero-based index of the grid radius closest to `rho`. Exact ties go
    /// to the lower index.
    pub fn nearest(&self, rho: f64) -> Bin {
        let x = (rho - 1.0) / self.step();
        let j = (x - 0.5).ceil();
        if j < 1.0 {
            Bin::ClampedBelow(0)
        } else if j > self.n as f64 {
            Bin::ClampedAbove(self.n - 1)
        } else {
            Bin::Inside(j as usize - 1)
        }
    }
}

/// Entrywise nonnegative matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NonnegMatrix {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        NonnegMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut sparse = Vec::with_capacity(dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::InvalidParameter("matrix must be square".into()));
            }
            let mut entries = Vec::new();
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!("entry {v} is not >= 0")));
                }
                if v > 0.0 {
                    entries.push((j, v));
                }
            }
            sparse.push(entries);
        }
        Ok(Self::from_rows(sparse))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_rows((0..dim).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v).sum()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| {
                let mut row = vec![0.0; self.dim];
                for (j, v) in self.row(i) {
                    row[j] = v;
                }
                row
            })
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }
}

/// The discretized operator together with the inputs that produced it.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub params: SnowflakeParams,
    pub grid: DiscretizationGrid,
    pub matrix: NonnegMatrix,
    pub clamped_above: usize,
    pub clamped_below: usize,
}

impl TransferMatrix {
    pub fn top_clamp_fraction(&self) -> f64 {
        self.clamped_above as f64 / (self.grid.n * self.grid.m) as f64
    }

    pub fn dominant_eigen(&self, tol: f64, max_iter: usize) -> Result<EigenPair> {
        dominant_eigen(&self.matrix, tol, max_iter)
    }
}

/// Entries of one row with its bottom and top clamp counts.
type Row = (Vec<(usize, f64)>, usize, usize);

/// Assemble `P_N`: row `n` collects
/// `r_n^{1−t(k−1)/k} |φ'(ζ)|^t / (|φ(ζ)| M)` for `ζ = r_n^{1/k} e^{iθ_m}` into
/// the column whose radius is nearest `|φ(ζ)|`.
pub fn build_matrix(params: &SnowflakeParams, grid: &DiscretizationGrid) -> Result<TransferMatrix> {
    let inv_m = 1.0 / grid.m as f64;
    let rows: Vec<Row> = grid
        .r
        .par_iter()
        .map(|&r| {
            let factor = params.radial_factor(r);
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(grid.m);
            let (mut above, mut below) = (0, 0);
            for &theta in &grid.theta {
                let (modulus, kernel) = params.kernel(r, theta);
                let weight = factor * kernel * inv_m;
                if !weight.is_finite() || !modulus.is_finite() {
                    let z = num_complex::Complex64::from_polar(r.powf(1.0 / params.kf()), theta);
                    return Err(Error::SingularPoint { re: z.re, im: z.im });
                }
                let bin = grid.nearest(modulus);
                match bin {
                    Bin::ClampedAbove(_) => above += 1,
                    Bin::ClampedBelow(_) => below += 1,
                    Bin::Inside(_) => {}
                }
                entries.push((bin.index(), weight));
            }
            // stable: within a column the angular order is preserved
            entries.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::new();
            for (c, w) in entries {
                match merged.last_mut() {
                    Some((lc, lw)) if *lc == c => *lw += w,
                    _ => merged.push((c, w)),
                }
            }
            Ok((merged, above, below))
        })
        .collect::<Result<_>>()?;

    let clamped_above = rows.iter().map(|r| r.1).sum();
    let clamped_below = rows.iter().map(|r| r.2).sum();
    let matrix = NonnegMatrix::from_rows(rows.into_iter().map(|r| r.0).collect());
    let tm = TransferMatrix {
        params: *params,
        grid: grid.clone(),
        matrix,
        clamped_above,
        clamped_below,
    };
    if tm.top_clamp_fraction() > TOP_CLAMP_WARN_FRACTION {
        log::warn!(
            "{:.3}% of kernel samples clamp above R = {}: R is probably below the critical radius",
            100.0 * tm.top_clamp_fraction(),
            grid.radius
        );
    }
    Ok(tm)
}

/// Dominant eigenvalue and eigenvector of a nonnegative matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: f64,
    /// Nonnegative, maximum entry 1.
    pub vector: Vec<f64>,
    /// `‖P v − λ v‖∞ / λ`.
    pub residual: f64,
    pub iterations: usize,
}

impl EigenPair {
    pub fn log_k(&self, k: u32) -> f64 {
        self.lambda.ln() / f64::from(k).ln()
    }

    /// Two-column CSV `r,v` of the eigenvector against the grid radii.
    pub fn write_csv<W: Write>(&self, radii: &[f64], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "v"])?;
        for (r, v) in radii.iter().zip(&self.vector) {
            w.write_record([format!("{r:.17e}"), format!("{v:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Read back an `r,v` eigenvector file written by [`EigenPair::write_csv`].
pub fn read_eigenvector_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Io(format!("bad eigenvector row {rec:?}")))
        };
        radii.push(parse(0)?);
        values.push(parse(1)?);
    }
    Ok((radii, values))
}

/// Power iteration from the all-ones vector, normalizing by the maximum
/// entry every step. Stops when `‖Pv/λ − v‖∞ ≤ tol`.
pub fn dominant_eigen(m: &NonnegMatrix, tol: f64, max_iter: usize) -> Result<EigenPair> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        m.mul_vec(&v, &mut w);
        let lambda = w.iter().copied().fold(0.0, f64::max);
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Nilpotent);
        }
        residual = 0.0;
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi /= lambda;
            residual = f64::max(residual, (*wi - vi).abs());
        }
        if residual <= tol {
            return Ok(EigenPair {
                lambda,
                vector: v,
                residual,
                iterations: it,
            });
        }
        std::mem::swap(&mut v, &mut w);
    }
    Err(Error::EigenNotConverged {
        iterations: max_iter,
        residual,
    })
}

/// `Pν(r) = r^{1−(k−1)t/k} ∫ ν(|φ(ζ)|) |φ'(ζ)|^t / |φ(ζ)| dθ/2π`,
/// `ζ = r^{1/k} e^{iθ}`, by the doubling periodic trapezoid rule.
pub fn apply_operator(
    params: &SnowflakeParams,
    nu: &TestFunction,
    r: f64,
    quad: &TrapezoidSettings,
) -> Result<QuadResult> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("radius {r} must be >= 1")));
    }
    let integrand = |theta: f64| {
        let (modulus, kernel) = params.kernel(r, theta);
        nu.eval(modulus) * kernel
    };
    let factor = params.radial_factor(r);
    match periodic_mean(integrand, quad) {
        Ok(q) if q.value.is_finite() => Ok(QuadResult {
            value: factor * q.value,
            est_error: factor * q.est_error,
            nodes: q.nodes,
        }),
        Ok(q) => Err(Error::QuadratureNotConverged {
            r,
            doublings: 0,
            difference: q.value,
        }),
        Err(f) => Err(Error::QuadratureNotConverged {
            r,
            doublings: f.doublings,
            difference: f.difference,
        }),
    }
}

/// `β(t) ≥ log λ / log k`.
pub fn bound_from_lambda(lambda: f64, k: u32) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("eigenvalue {lambda} must be > 0")));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k} must be >= 2")));
    }
    Ok(lambda.ln() / f64::from(k).ln())
}

/// Metadata written next to an eigenvector file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSummary {
    pub t: f64,
    pub k: u32,
    pub l: f64,
    pub s: f64,
    pub n: usize,
    pub m: usize,
    pub radius: f64,
    pub lambda: f64,
    pub log_k_lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub clamped_above: usize,
    pub clamped_below: usize,
}

impl EigenSummary {
    pub fn new(tm: &TransferMatrix, eig: &EigenPair) -> Self {
        EigenSummary {
            t: tm.params.t,
            k: tm.params.k,
            l: tm.params.slit.l,
            s: tm.params.slit.s,
            n: tm.grid.n,
            m: tm.grid.m,
            radius: tm.grid.radius,
            lambda: eig.lambda,
            log_k_lambda: eig.log_k(tm.params.k),
            residual: eig.residual,
            iterations: eig.iterations,
            clamped_above: tm.clamped_above,
            clamped_below: tm.clamped_below,
        }
    }
}
