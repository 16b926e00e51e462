//! Periodic trapezoid quadrature with node doubling, and compensated sums.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Settings for the doubling trapezoid rule on a full period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidSettings {
    pub start_nodes: usize,
    /// Relative tolerance on successive doublings.
    pub tol: f64,
    pub max_doublings: usize,
}

impl Default for TrapezoidSettings {
    fn default() -> Self {
        TrapezoidSettings {
            start_nodes: 512,
            tol: 1e-7,
            max_doublings: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Last difference between successive doublings.
    pub est_error: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFailure {
    pub doublings: usize,
    pub difference: f64,
}

/// Mean of `f` over `[0, 2π)` on `n` equispaced nodes, shifted by `offset`
/// node spacings.
pub fn trapezoid_mean<F: Fn(f64) -> f64>(f: &F, n: usize, offset: f64) -> f64 {
    let h = TAU / n as f64;
    compensated_sum((0..n).map(|j| f((j as f64 + offset) * h))) / n as f64
}

/// Mean value `(1/2π)∫₀^{2π} f` by the trapezoid rule, doubling the nodes
/// until two successive values agree to the relative tolerance. Each
/// doubling only evaluates the new midpoints.
pub fn periodic_mean<F: Fn(f64) -> f64>(
    f: F,
    settings: &TrapezoidSettings,
) -> Result<QuadResult, QuadFailure> {
    let mut n = settings.start_nodes.max(1);
    let mut value = trapezoid_mean(&f, n, 0.0);
    let mut difference = f64::INFINITY;
    for _ in 0..settings.max_doublings {
        let mid = trapezoid_mean(&f, n, 0.5);
        let next = 0.5 * (value + mid);
        difference = (next - value).abs();
        value = next;
        n *= 2;
        if difference <= settings.tol * value.abs() {
            return Ok(QuadResult {
                value,
                est_error: difference,
                nodes: n,
            });
        }
    }
    Err(QuadFailure {
        doublings: settings.max_doublings,
        difference,
    })
}
