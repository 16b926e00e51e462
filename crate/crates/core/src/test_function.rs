//! Positive test functions `ν` on `[1, R]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::transfer::{DiscretizationGrid, EigenPair};

/// Number of samples used for the positivity and monotonicity scans.
pub const SCAN_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum TestFunction {
    /// Linear interpolation of `(r, value)` knots, constant outside.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// `num(x)/den(x)` with monomial coefficients in increasing degree.
    Rational {
        num: Vec<f64>,
        den: Vec<f64>,
        domain: (f64, f64),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Constant,
    Nondecreasing,
    Nonincreasing,
    /// Not monotone; carries a radius where the direction changes.
    Neither(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitForm {
    PiecewiseLinear,
    Rational { num_degree: usize, den_degree: usize },
}

impl Default for FitForm {
    fn default() -> Self {
        FitForm::Rational {
            num_degree: 5,
            den_degree: 1,
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl TestFunction {
    /// Interpolant through the given knots; radii must be strictly increasing.
    pub fn interpolate(radii: &[f64], values: &[f64]) -> Result<Self> {
        if radii.len() != values.len() || radii.is_empty() {
            return Err(Error::InvalidParameter(
                "knots need matching, nonempty radii and values".into(),
            ));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("knot radii must increase".into()));
        }
        Ok(TestFunction::PiecewiseLinear {
            knots: radii.iter().copied().zip(values.iter().copied()).collect(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::PiecewiseLinear { knots } => {
                let i = knots.partition_point(|&(r, _)| r <= x);
                if i == 0 {
                    knots[0].1
                } else if i == knots.len() {
                    knots[knots.len() - 1].1
                } else {
                    let (r0, v0) = knots[i - 1];
                    let (r1, v1) = knots[i];
                    v0 + (v1 - v0) * (x - r0) / (r1 - r0)
                }
            }
            TestFunction::Rational { num, den, .. } => horner(num, x) / horner(den, x),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            TestFunction::PiecewiseLinear { knots } => (knots[0].0, knots[knots.len() - 1].0),
            TestFunction::Rational { domain, .. } => *domain,
        }
    }

    /// Same shape on a different domain.
    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        if let TestFunction::Rational { domain, .. } = &mut self {
            *domain = (lo, hi);
        }
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            TestFunction::PiecewiseLinear { knots } => TestFunction::PiecewiseLinear {
                knots: knots.iter().map(|&(r, v)| (r, v * factor)).collect(),
            },
            TestFunction::Rational { num, den, domain } => TestFunction::Rational {
                num: num.iter().map(|c| c * factor).collect(),
                den: den.clone(),
                domain: *domain,
            },
        }
    }

    /// Taylor jet of a rational test function; `None` for the piecewise form.
    pub fn eval_jet(&self, x: &Jet) -> Option<Jet> {
        match self {
            TestFunction::Rational { num, den, .. } => {
                let poly = |coeffs: &[f64]| {
                    let order = x.order();
                    coeffs.iter().rev().fold(
                        Jet::constant(Complex64::new(0.0, 0.0), order),
                        |acc, &c| (&acc * x).add_scalar(Complex64::new(c, 0.0)),
                    )
                };
                Some(&poly(num) / &poly(den))
            }
            TestFunction::PiecewiseLinear { .. } => None,
        }
    }

    fn scan(&self, samples: usize) -> impl Iterator<Item = f64> {
        let (lo, hi) = self.domain();
        let n = samples.max(2);
        (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
    }

    /// Positivity on a dense scan of the domain (for the rational form the
    /// denominator is checked separately).
    pub fn check_positive(&self, samples: usize) -> Result<()> {
        for x in self.scan(samples) {
            if let TestFunction::Rational { den, .. } = self {
                if !(horner(den, x) > 0.0) {
                    return Err(Error::NonPositive(x));
                }
            }
            let v = self.eval(x);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositive(x));
            }
        }
        Ok(())
    }

    /// Monotonicity on a dense scan, ignoring steps below `1e-12` of the
    /// largest value (rounding noise of a fitted constant).
    pub fn monotonicity(&self, samples: usize) -> Monotonicity {
        self.monotonicity_within(samples, 1e-12)
    }

    /// Monotonicity on a dense scan; steps up to `rel_slack·max|ν|` count
    /// as flat. `rel_slack = 0` is exact.
    pub fn monotonicity_within(&self, samples: usize, rel_slack: f64) -> Monotonicity {
        let xs: Vec<f64> = self.scan(samples).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| self.eval(x)).collect();
        let slack = rel_slack * vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut up = false;
        let mut down = false;
        for (i, w) in vals.windows(2).enumerate() {
            if w[1] - w[0] > slack {
                if down {
                    return Monotonicity::Neither(xs[i]);
                }
                up = true;
            } else if w[0] - w[1] > slack {
                if up {
                    return Monotonicity::Neither(xs[i]);
                }
                down = true;
            }
        }
        match (up, down) {
            (false, false) => Monotonicity::Constant,
            (true, _) => Monotonicity::Nondecreasing,
            (_, true) => Monotonicity::Nonincreasing,
        }
    }
}

/// The rational test function used for the rigorous t = 1 bound
/// (k = 13, l = 73, s = 1.002) on `[1, 76.2]`.
pub fn nu_t1() -> TestFunction {
    TestFunction::Rational {
        num: vec![7.1479, 8.9280, -0.07765, 1.733e-3, -2.0598e-5, 9.5353e-8],
        den: vec![2.7154, 13.2845],
        domain: (1.0, 76.2),
    }
}

/// Turn a Perron eigenvector into a test function on `[1, grid.radius]`.
pub fn fit_test_function(
    eig: &EigenPair,
    grid: &DiscretizationGrid,
    form: FitForm,
) -> Result<TestFunction> {
    fit_values(&grid.r, &eig.vector, (1.0, grid.radius), form)
}

/// Fit `(radii, values)` on `domain`, then verify positivity and
/// monotonicity on a dense scan.
pub fn fit_values(
    radii: &[f64],
    values: &[f64],
    domain: (f64, f64),
    form: FitForm,
) -> Result<TestFunction> {
    if let Some(i) = values.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositive(radii.get(i).copied().unwrap_or(f64::NAN)));
    }
    let nu = match form {
        FitForm::PiecewiseLinear => TestFunction::interpolate(radii, values)?,
        FitForm::Rational {
            num_degree,
            den_degree,
        } => fit_rational(radii, values, domain, num_degree, den_degree)?,
    };
    let nu = nu.with_domain(domain.0, domain.1);
    nu.check_positive(SCAN_POINTS)?;
    if let Monotonicity::Neither(r) = nu.monotonicity(SCAN_POINTS) {
        return Err(Error::NonMonotone(r));
    }
    Ok(nu)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of `Σ a_j (αx + β)^j` in powers of `x`.
fn affine_substitute(a: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (j, &aj) in a.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate().take(j + 1) {
            *o += aj * binomial(j, i) * alpha.powi(i as i32) * beta.powi((j - i) as i32);
        }
    }
    out
}

/// Linearized least squares for `p(x) / (1 + Σ q_j x^j)` with relative
/// weights, solved in the scaled variable `(x − lo)/(hi − lo)`.
fn fit_rational(
    radii: &[f64],
    values: &[f64],
    domain: (f64, f64),
    num_degree: usize,
    den_degree: usize,
) -> Result<TestFunction> {
    let unknowns = num_degree + 1 + den_degree;
    if radii.len() < unknowns {
        return Err(Error::FitFailed(format!(
            "{} samples cannot determine {unknowns} coefficients",
            radii.len()
        )));
    }
    let (lo, hi) = domain;
    let width = hi - lo;
    let rows = radii.len();
    let mut a = DMatrix::<f64>::zeros(rows, unknowns);
    let mut b = DVector::<f64>::zeros(rows);
    for (i, (&r, &v)) in radii.iter().zip(values).enumerate() {
        let x = (r - lo) / width;
        let w = 1.0 / v;
        let mut p = 1.0;
        for j in 0..=num_degree {
            a[(i, j)] = w * p;
            p *= x;
        }
        let mut p = x;
        for j in 0..den_degree {
            a[(i, num_degree + 1 + j)] = -w * v * p;
            p *= x;
        }
        b[i] = 1.0;
    }
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::FitFailed(e.to_string()))?;
    let num_scaled: Vec<f64> = sol.iter().take(num_degree + 1).copied().collect();
    let mut den_scaled = vec![1.0];
    den_scaled.extend(sol.iter().skip(num_degree + 1).copied());

    let alpha = 1.0 / width;
    let beta = -lo / width;
    let mut num = affine_substitute(&num_scaled, alpha, beta);
    let mut den = affine_substitute(&den_scaled, alpha, beta);
    // normalize to den(lo) = 1
    let d0 = horner(&den, lo);
    if !(d0.abs() > 0.0) {
        return Err(Error::FitFailed("denominator vanishes at the left end".into()));
    }
    num.iter_mut().for_each(|c| *c /= d0);
    den.iter_mut().for_each(|c| *c /= d0);
    Ok(TestFunction::Rational { num, den, domain })
}
