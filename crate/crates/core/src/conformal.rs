//! The straight-slit building block.
//!
//! The block is `φ(z) = μ₂(√(μ₁(zs)² + c) / √(1 + c))` with
//! `μ₁(z) = (z−1)/(z+1)`, `μ₂ = μ₁⁻¹` and `c = l²/(4l+4)`. It maps the
//! exterior of the unit disc onto the exterior minus a radial slit of length
//! `l` starting at 1. For `s > 1` the two square-root singular points sit
//! strictly inside the unit circle, so all derivatives are bounded on the
//! closed exterior.
//!
//! All evaluations go through algebraically rearranged forms that avoid the
//! cancellation in `1 − q` near infinity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Distance below which a point is treated as one of the singular points.
const SINGULAR_EPS: f64 = 1e-9;
/// Slack for points on the unit circle whose modulus rounds below 1.
const CIRCLE_EPS: f64 = 1e-12;

/// A point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtPoint {
    Finite(Complex64),
    Infinity,
}

impl ExtPoint {
    pub fn new(re: f64, im: f64) -> Self {
        ExtPoint::Finite(Complex64::new(re, im))
    }

    pub fn finite(self) -> Option<Complex64> {
        match self {
            ExtPoint::Finite(z) => Some(z),
            ExtPoint::Infinity => None,
        }
    }
}

impl From<Complex64> for ExtPoint {
    fn from(z: Complex64) -> Self {
        ExtPoint::Finite(z)
    }
}

/// `μ₁(z) = (z−1)/(z+1)`: exterior disc onto the right half plane.
pub fn mobius_to_halfplane(z: ExtPoint) -> Result<ExtPoint> {
    match z {
        ExtPoint::Infinity => Ok(ExtPoint::new(1.0, 0.0)),
        ExtPoint::Finite(z) => {
            if z == Complex64::new(-1.0, 0.0) {
                return Err(Error::MobiusPole("z = -1"));
            }
            Ok(ExtPoint::Finite((z - 1.0) / (z + 1.0)))
        }
    }
}

/// `μ₂(w) = (1+w)/(1−w)`, the inverse of [`mobius_to_halfplane`].
pub fn mobius_to_disc(w: ExtPoint) -> Result<ExtPoint> {
    match w {
        ExtPoint::Infinity => Ok(ExtPoint::new(-1.0, 0.0)),
        ExtPoint::Finite(w) => {
            if w == Complex64::new(1.0, 0.0) {
                return Err(Error::MobiusPole("w = 1"));
            }
            Ok(ExtPoint::Finite((1.0 + w) / (1.0 - w)))
        }
    }
}

/// Which constant sits under the inner square root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InnerConstant {
    /// `l²/(4l+4)` in both places; the block fixes ∞.
    Consistent,
    /// `l²/(4k+4)` inside the root: the variant with `k` in place of `l`.
    /// Only for comparison runs: the block then no longer fixes ∞.
    Printed { k: u32 },
}

/// Geometry of one slit block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitParams {
    pub l: f64,
    pub s: f64,
    /// Normalizing constant `l²/(4l+4)`.
    pub c: f64,
    /// Constant under the inner square root (equal to `c` unless the printed
    /// variant is selected).
    pub inner_c: f64,
    pub variant: InnerConstant,
    /// Preimages of 1 for `s = 1`, `z1 = x + iy` with `y ≤ 0`, `z2 = conj(z1)`.
    pub z1: Complex64,
    pub z2: Complex64,
}

impl SlitParams {
    pub fn new(l: f64, s: f64) -> Result<Self> {
        Self::with_variant(l, s, InnerConstant::Consistent)
    }

    pub fn with_variant(l: f64, s: f64, variant: InnerConstant) -> Result<Self> {
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::InvalidParameter(format!("slit length l = {l} must be >= 0")));
        }
        if !(s.is_finite() && s >= 1.0) {
            return Err(Error::InvalidParameter(format!("scaling s = {s} must be >= 1")));
        }
        let c = l * l / (4.0 * l + 4.0);
        let inner_c = match variant {
            InnerConstant::Consistent => c,
            InnerConstant::Printed { k } => l * l / (4.0 * f64::from(k) + 4.0),
        };
        let (z1, z2) = singular_pair(inner_c);
        Ok(SlitParams {
            l,
            s,
            c,
            inner_c,
            variant,
            z1,
            z2,
        })
    }

    pub fn x(&self) -> f64 {
        self.z1.re
    }

    pub fn y(&self) -> f64 {
        self.z1.im
    }

    pub fn is_identity(&self) -> bool {
        self.l == 0.0 && self.s == 1.0
    }

    fn norm(&self) -> f64 {
        (1.0 + self.c).sqrt()
    }

    /// `φ(z)` without domain checks. Hot path.
    pub fn phi(&self, z: Complex64) -> Complex64 {
        let a = z * self.s;
        let ap1 = a + 1.0;
        let u = (a - 1.0) / ap1;
        let v = (u * u + self.inner_c).sqrt();
        let n = self.norm();
        let d = 4.0 * a / (ap1 * ap1) + (self.c - self.inner_c);
        let nv = n + v;
        nv * nv / d
    }

    /// `(φ(z), φ'(z))` without domain checks. `φ'` is infinite at the
    /// singular points.
    pub fn phi_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let a = z * self.s;
        let ap1 = a + 1.0;
        let ap1_sq = ap1 * ap1;
        let u = (a - 1.0) / ap1;
        let v = (u * u + self.inner_c).sqrt();
        let n = self.norm();
        let d = 4.0 * a / ap1_sq + (self.c - self.inner_c);
        let nv2 = (n + v) * (n + v);
        let value = nv2 / d;
        let deriv = 4.0 * n * self.s * u * nv2 / (d * d * v * ap1_sq);
        (value, deriv)
    }

    /// Taylor jet of `φ(Z)` for a jet argument `Z`. Used for higher
    /// derivatives in the certificate audits.
    pub fn phi_jet(&self, z: &Jet) -> Jet {
        let a = z.scale(Complex64::new(self.s, 0.0));
        let ap1 = a.add_scalar(Complex64::new(1.0, 0.0));
        let u = &a.add_scalar(Complex64::new(-1.0, 0.0)) / &ap1;
        let v = (&u * &u).add_scalar(Complex64::new(self.inner_c, 0.0)).sqrt();
        let nv = v.add_scalar(Complex64::new(self.norm(), 0.0));
        let d = (&a.scale(Complex64::new(4.0, 0.0)) / &(&ap1 * &ap1))
            .add_scalar(Complex64::new(self.c - self.inner_c, 0.0));
        &(&nv * &nv) / &d
    }

    fn near_singular(&self, z: Complex64) -> bool {
        self.s == 1.0
            && self.l > 0.0
            && ((z - self.z1).norm() < SINGULAR_EPS || (z - self.z2).norm() < SINGULAR_EPS)
    }

    fn check_domain(&self, z: Complex64) -> Result<()> {
        if !(z.re.is_finite() && z.im.is_finite()) || z.norm() < 1.0 - CIRCLE_EPS {
            return Err(Error::OutsideDomain { re: z.re, im: z.im });
        }
        Ok(())
    }

    /// Checked evaluation of the slit map on the closed exterior disc.
    pub fn slit_map(&self, z: ExtPoint) -> Result<MapValue> {
        let z = match z {
            ExtPoint::Infinity => {
                let value = match self.variant {
                    InnerConstant::Consistent => ExtPoint::Infinity,
                    InnerConstant::Printed { .. } => {
                        let q = (1.0 + self.inner_c).sqrt() / self.norm();
                        mobius_to_disc(ExtPoint::new(q, 0.0))?
                    }
                };
                return Ok(MapValue {
                    value,
                    singular: false,
                });
            }
            ExtPoint::Finite(z) => z,
        };
        self.check_domain(z)?;
        if self.near_singular(z) {
            return Ok(MapValue {
                value: ExtPoint::new(1.0, 0.0),
                singular: true,
            });
        }
        Ok(MapValue {
            value: ExtPoint::Finite(self.phi(z)),
            singular: false,
        })
    }

    /// Checked `φ'(z)`; errors at the singular points when `s = 1`.
    pub fn slit_map_derivative(&self, z: ExtPoint) -> Result<Complex64> {
        let z = match z {
            ExtPoint::Infinity => return Ok(Complex64::new(self.s * (1.0 + self.c), 0.0)),
            ExtPoint::Finite(z) => z,
        };
        self.check_domain(z)?;
        if self.near_singular(z) {
            return Err(Error::SingularPoint { re: z.re, im: z.im });
        }
        let (_, d) = self.phi_and_derivative(z);
        if !(d.re.is_finite() && d.im.is_finite()) {
            return Err(Error::SingularPoint { re: z.re, im: z.im });
        }
        Ok(d)
    }

    /// Closed form of `|φ'(z)/φ(z)|` for `s = 1`:
    /// `|z−1| / (|z|·√(|z−z1||z−z2|))`.
    pub fn log_derivative_ratio(&self, z: Complex64) -> Result<f64> {
        if self.s != 1.0 {
            return Err(Error::InvalidParameter(
                "closed form of |phi'/phi| requires s = 1".into(),
            ));
        }
        self.check_domain(z)?;
        let denom = z.norm() * ((z - self.z1).norm() * (z - self.z2).norm()).sqrt();
        if denom == 0.0 {
            return Err(Error::SingularPoint { re: z.re, im: z.im });
        }
        Ok((z - 1.0).norm() / denom)
    }

    /// `ψ = φ⁻¹` on the image of the exterior disc.
    pub fn inverse_map(&self, w: ExtPoint) -> Result<ExtPoint> {
        let w = match w {
            ExtPoint::Infinity => {
                return match self.variant {
                    InnerConstant::Consistent => Ok(ExtPoint::Infinity),
                    InnerConstant::Printed { .. } => Err(Error::OutsideDomain {
                        re: f64::INFINITY,
                        im: 0.0,
                    }),
                }
            }
            ExtPoint::Finite(w) => w,
        };
        self.check_domain(w)?;
        let x = self.inverse_radicand(w);
        if x.im.abs() <= 1e-14 * x.norm() && x.re <= 0.0 && self.l > 0.0 {
            return Err(Error::OnSlit { re: w.re, im: w.im });
        }
        Ok(ExtPoint::Finite(self.psi_from_radicand(w, x)))
    }

    /// `(1+c)μ₁(w)² − c_inner`, the quantity under the square root of ψ.
    fn inverse_radicand(&self, w: Complex64) -> Complex64 {
        let m = (w - 1.0) / (w + 1.0);
        (1.0 + self.c) * m * m - self.inner_c
    }

    fn psi_from_radicand(&self, w: Complex64, x: Complex64) -> Complex64 {
        let u = x.sqrt();
        // 1 − X = (1+c)(1−m²) + c_inner − c, with 1 − m² = 4w/(w+1)²
        let wp1 = w + 1.0;
        let one_minus_x = (1.0 + self.c) * 4.0 * w / (wp1 * wp1) + (self.inner_c - self.c);
        let up1 = 1.0 + u;
        up1 * up1 / one_minus_x / self.s
    }

    /// `|ψ(x)|` for real `x > 1`. On the slit both preimages lie on
    /// `|z| = 1/s`.
    pub fn inverse_modulus_real(&self, x: f64) -> f64 {
        let w = Complex64::new(x, 0.0);
        let r = self.inverse_radicand(w);
        if r.re <= 0.0 {
            return 1.0 / self.s;
        }
        self.psi_from_radicand(w, Complex64::new(r.re, 0.0)).norm()
    }

    /// Radius `R > 1` solving `|ψ(R)|^k = R`, by bisection to within `tol`.
    /// The returned value is the upper end of the final bracket.
    pub fn critical_radius(&self, k: u32, tol: f64) -> Result<f64> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("k = {k} must be >= 2")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {tol} must be > 0")));
        }
        if self.l == 0.0 {
            return Err(Error::DegenerateBlock(
                "no critical radius > 1 exists".into(),
            ));
        }
        let kf = f64::from(k);
        let residual = |x: f64| self.inverse_modulus_real(x).powf(kf) - x;
        let mut lo = 1.0;
        let mut hi = 2.0;
        while residual(hi) <= 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::BracketNotFound(hi));
            }
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if residual(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `max_θ |φ(R^{1/k} e^{iθ})|`; at most `R` when `R` is admissible.
    pub fn max_image_modulus(&self, k: u32, radius: f64, samples: usize) -> f64 {
        let rho = radius.powf(1.0 / f64::from(k));
        (0..samples)
            .map(|m| {
                let th = std::f64::consts::TAU * m as f64 / samples as f64;
                self.phi(Complex64::from_polar(rho, th)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Result of a checked slit-map evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapValue {
    pub value: ExtPoint,
    /// Set when the point is a singular point: the value is finite but the
    /// derivative blows up there.
    pub singular: bool,
}

/// Solutions of `μ₁(z)² = −c`, i.e. `z = μ₂(∓i√c)`.
fn singular_pair(c: f64) -> (Complex64, Complex64) {
    let x = (1.0 - c) / (1.0 + c);
    let y = -2.0 * c.sqrt() / (1.0 + c);
    (Complex64::new(x, y), Complex64::new(x, -y))
}

/// The two singular preimages of 1 for slit length `l` (with `s = 1`).
pub fn singular_points(l: f64) -> Result<(Complex64, Complex64)> {
    if l == 0.0 {
        return Err(Error::DegenerateBlock(
            "singular points coincide at z = 1".into(),
        ));
    }
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidParameter(format!("slit length l = {l} must be > 0")));
    }
    Ok(singular_pair(l * l / (4.0 * l + 4.0)))
}

/// A snowflake experiment: building block, branching `k` and exponent `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnowflakeParams {
    pub slit: SlitParams,
    pub k: u32,
    pub t: f64,
}

impl SnowflakeParams {
    pub fn new(t: f64, k: u32, l: f64, s: f64) -> Result<Self> {
        Self::from_slit(t, k, SlitParams::new(l, s)?)
    }

    pub fn from_slit(t: f64, k: u32, slit: SlitParams) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("k = {k} must be >= 2")));
        }
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!("t = {t} must be finite")));
        }
        Ok(SnowflakeParams { slit, k, t })
    }

    pub fn kf(&self) -> f64 {
        f64::from(self.k)
    }

    pub fn critical_radius(&self, tol: f64) -> Result<f64> {
        self.slit.critical_radius(self.k, tol)
    }

    /// Radial prefactor `r^{1 − t(k−1)/k}` of the transfer operator.
    pub fn radial_factor(&self, r: f64) -> f64 {
        r.powf(1.0 - self.t * (self.kf() - 1.0) / self.kf())
    }

    /// Kernel at angle `θ` and radius `r`: `(|φ|, |φ'|^t / |φ|)` evaluated
    /// at `r^{1/k} e^{iθ}`.
    pub fn kernel(&self, r: f64, theta: f64) -> (f64, f64) {
        let z = Complex64::from_polar(r.powf(1.0 / self.kf()), theta);
        let (f, d) = self.slit.phi_and_derivative(z);
        let modulus = f.norm();
        (modulus, d.norm().powf(self.t) / modulus)
    }
}
