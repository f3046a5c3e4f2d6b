//! The bump that generates every kernel, and the C¹ cutoff used by `R^eps`.

use std::f64::consts::PI;

use crate::quadrature::GaussRule;
use crate::{Error, Point, Result, Vec3};

pub const DEFAULT_SUPPORT_RADIUS: f64 = 0.9;

/// Order of the symmetric radial rule that fixes the normalization constant.
const MASS_RULE_ORDER: usize = 160;

/// `ψ(x) = c exp(-1 / (1 - |x/r|²))` for `|x| < r`, zero elsewhere, with `c` chosen so
/// that `∫ψ = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mollifier {
    support_radius: f64,
    norm_const: f64,
}

/// `∫_{R³} exp(-1/(1-|x/r|²)) dx`, computed as half of a Gauss-Legendre integral of the
/// even integrand `4π ρ² b(ρ)` over `[-r, r]`.
fn unnormalized_mass(r: f64) -> f64 {
    let rule = GaussRule::legendre(MASS_RULE_ORDER).expect("fixed order");
    let half = rule.integrate(-r, r, |rho| {
        let q = (rho / r).powi(2);
        if q < 1.0 {
            rho * rho * (-1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    });
    2.0 * PI * half
}

impl Default for Mollifier {
    fn default() -> Self {
        Self::new(DEFAULT_SUPPORT_RADIUS).expect("default radius is admissible")
    }
}

impl Mollifier {
    /// Unit-mass bump supported in `B(0, r)`, `0 < r < 1`.
    pub fn new(support_radius: f64) -> Result<Self> {
        if !(support_radius > 0.0 && support_radius < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mollifier support radius must lie in (0, 1), got {support_radius}"
            )));
        }
        Ok(Self { support_radius, norm_const: 1.0 / unnormalized_mass(support_radius) })
    }

    /// Bump with an explicit constant; the mass is then `c / c_unit`.
    pub fn with_constant(support_radius: f64, norm_const: f64) -> Result<Self> {
        let m = Self::new(support_radius)?;
        Ok(Self { norm_const, ..m })
    }

    /// Same support, constant multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { norm_const: self.norm_const * factor, ..*self }
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// `sup ψ = ψ(0) = c / e`.
    pub fn sup_norm(&self) -> f64 {
        self.norm_const * (-1.0f64).exp()
    }

    #[inline]
    pub fn value(&self, x: &Point) -> f64 {
        let q = x.norm_squared() / (self.support_radius * self.support_radius);
        if q < 1.0 {
            self.norm_const * (-1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    }

    #[inline]
    pub fn gradient(&self, x: &Point) -> Vec3 {
        self.value_and_gradient(x).1
    }

    /// `ψ(x)` and `∇ψ(x) = -2 ψ(x) x / (r² (1 - q)²)`, `q = |x/r|²`.
    #[inline]
    pub fn value_and_gradient(&self, x: &Point) -> (f64, Vec3) {
        let r2 = self.support_radius * self.support_radius;
        let q = x.norm_squared() / r2;
        if q < 1.0 {
            let s = 1.0 - q;
            let v = self.norm_const * (-1.0 / s).exp();
            (v, x * (-2.0 * v / (r2 * s * s)))
        } else {
            (0.0, Vec3::zeros())
        }
    }
}

/// The cubic smoothstep cutoff: `0` on `[0, 1]`, `3t² - 2t³` with `t = s - 1` on
/// `(1, 2)`, `1` beyond. Monotone, `C¹`, `sup |η'| = 3/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SmoothCutoff;

impl SmoothCutoff {
    pub fn value(&self, s: f64) -> Result<f64> {
        check_nonnegative(s)?;
        Ok(eta_unchecked(s))
    }

    pub fn derivative(&self, s: f64) -> Result<f64> {
        check_nonnegative(s)?;
        Ok(eta_prime_unchecked(s))
    }
}

fn check_nonnegative(s: f64) -> Result<()> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::InvalidArgument(format!("cutoff argument must be >= 0, got {s}")));
    }
    Ok(())
}

pub fn eta(s: f64) -> Result<f64> {
    SmoothCutoff.value(s)
}

pub fn eta_prime(s: f64) -> Result<f64> {
    SmoothCutoff.derivative(s)
}

#[inline]
pub(crate) fn eta_unchecked(s: f64) -> f64 {
    if s <= 1.0 {
        0.0
    } else if s >= 2.0 {
        1.0
    } else {
        let t = s - 1.0;
        t * t * (3.0 - 2.0 * t)
    }
}

#[inline]
pub(crate) fn eta_prime_unchecked(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        0.0
    } else {
        let t = s - 1.0;
        6.0 * t * (1.0 - t)
    }
}
