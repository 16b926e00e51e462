//! Truncated Taylor series ("jets") with complex coefficients.
//!
//! A jet of order `n` stores `f(x₀), f'(x₀)/1!, …, f⁽ⁿ⁾(x₀)/n!`. Arithmetic
//! on jets propagates all derivatives through a closed-form expression,
//! which is how the certificate audits sample high derivatives of `φ` and
//! of the quadrature integrand.

use std::ops::{Add, Div, Mul, Sub};

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn constant(value: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = value;
        Jet { coeffs }
    }

    /// The identity jet `x₀ + h`.
    pub fn variable(x0: Complex64, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least one coefficient");
        Jet { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `j`-th derivative, `j! · c_j`.
    pub fn derivative(&self, j: usize) -> Complex64 {
        let fact: f64 = (1..=j).map(|i| i as f64).product();
        self.coeffs[j] * fact
    }

    pub fn scale(&self, a: Complex64) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|&c| c * a).collect(),
        }
    }

    pub fn add_scalar(&self, a: Complex64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += a;
        out
    }

    /// Coefficient-wise conjugate: the jet of `conj(f)` along a real variable.
    pub fn conj(&self) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn recip(&self) -> Jet {
        let n = self.coeffs.len();
        let a0 = self.coeffs[0];
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        out[0] = 1.0 / a0;
        for i in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=i {
                acc += self.coeffs[j] * out[i - j];
            }
            out[i] = -acc / a0;
        }
        Jet { coeffs: out }
    }

    /// Principal square root; requires a nonzero constant term.
    pub fn sqrt(&self) -> Jet {
        let n = self.coeffs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        out[0] = self.coeffs[0].sqrt();
        let two_b0 = 2.0 * out[0];
        for i in 1..n {
            let mut acc = self.coeffs[i];
            for j in 1..i {
                acc -= out[j] * out[i - j];
            }
            out[i] = acc / two_b0;
        }
        Jet { coeffs: out }
    }

    /// Compose with a real variable substitution `x₀ + h ↦ g(h)` where `g` is
    /// itself a jet with `g(0) = inner.value()`: evaluates the power series of
    /// `self` (centred at `inner.value()`) at `inner`.
    pub fn compose(&self, inner: &Jet) -> Jet {
        let n = inner.coeffs.len();
        let mut shift = inner.clone();
        shift.coeffs[0] = Complex64::new(0.0, 0.0);
        let mut out = Jet::constant(self.coeffs[0], n - 1);
        let mut power = Jet::constant(Complex64::new(1.0, 0.0), n - 1);
        for c in self.coeffs.iter().skip(1).take(n - 1) {
            power = &power * &shift;
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += c * p;
            }
        }
        out
    }
}

impl<'a> Add for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &'a Jet) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &'a Jet) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &'a Jet) -> Jet {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..=i {
                out[i] += self.coeffs[j] * rhs.coeffs[i - j];
            }
        }
        Jet { coeffs: out }
    }
}

impl<'a> Div for &'a Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &'a Jet) -> Jet {
        self * &rhs.recip()
    }
}
