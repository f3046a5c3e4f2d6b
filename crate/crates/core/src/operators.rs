//! The curl inverse `R`, its smooth truncation `R^eps`, the Bogovskii operator `B`,
//! and the analytic Jacobian of `Rg`.
//!
//! With `d = x - y` every kernel vanishes unless the half-line `{x + t d : t >= 0}`
//! meets the mollifier support, so in polar coordinates `y = x + ρ u` centred at `x`
//! only directions `u` inside a cap around `x/|x|` contribute. With
//! [`QuadratureConfig::cap_adapted`] set, the direction rule is laid out on that cap.

use rayon::prelude::*;

use crate::fields::{ScalarField, VectorField};
use crate::geometry::{Shape, StarDomain};
use crate::kernels::{KernelEvaluator, KernelForm};
use crate::quadrature::{
    integrate_sphere_surface, integrate_sphere_surface_from, BallIntegrator, Coverage, DirectionCap,
    Pair, QuadratureConfig, SphereSize,
};
use crate::smoothing::{eta_unchecked, Mollifier};
use crate::{Error, Mat3, Point, Result, Vec3};

/// Closest approach to `∂Ω` allowed for the analytic gradient.
pub const GRADIENT_BOUNDARY_GUARD: f64 = 1e-6;

/// Directions `u` for which some kernel at `(x, x + ρu)` can be non-zero. Inside the
/// mollifier support the whole sphere is kept, split at the plane `u·x = 0` where the
/// kernels switch on as `|x|` approaches `r_psi`.
pub fn kernel_support_cap(x: &Point, r_psi: f64) -> DirectionCap {
    let norm = x.norm();
    let axis = if norm > 0.0 { x / norm } else { Vec3::z() };
    if norm <= r_psi {
        return DirectionCap { axis, cos_half_angle: -1.0, split_equator: true };
    }
    DirectionCap { axis, cos_half_angle: (1.0 - (r_psi / norm).powi(2)).sqrt(), split_equator: false }
}

/// Axis-aligned lattice; node `(i, j, k)` sits at `origin + (i h_x, j h_y, k h_z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub spacing: [f64; 3],
    pub counts: [usize; 3],
}

impl GridSpec {
    /// `n` nodes per axis spanning the cube `[-half, half]³`.
    pub fn cube(half: f64, n: usize) -> Result<Self> {
        if n < 2 || !(half > 0.0) {
            return Err(Error::InvalidArgument(format!("cube grid needs n >= 2 and half > 0 (n = {n}, half = {half})")));
        }
        let h = 2.0 * half / (n - 1) as f64;
        Ok(Self { origin: Point::repeat(-half), spacing: [h; 3], counts: [n; 3] })
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts.contains(&0) {
            return Err(Error::InvalidArgument(format!("grid counts must be positive, got {:?}", self.counts)));
        }
        if self.spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) || !self.origin.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid origin and spacing must be finite, spacing positive (origin = {:?}, spacing = {:?})",
                self.origin, self.spacing
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node of flat index `idx`; `x` varies fastest.
    pub fn point(&self, idx: usize) -> Point {
        let [nx, ny, _] = self.counts;
        let (i, j, k) = (idx % nx, (idx / nx) % ny, idx / (nx * ny));
        self.origin + Vec3::new(i as f64 * self.spacing[0], j as f64 * self.spacing[1], k as f64 * self.spacing[2])
    }
}

/// Samples of `Rg` on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSampleGrid {
    pub spec: GridSpec,
    pub values: Vec<Vec3>,
    pub inside: Vec<bool>,
}

impl FieldSampleGrid {
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.spec.len()).map(|i| self.spec.point(i))
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Curl and divergence inverses on a fixed domain and quadrature budget.
#[derive(Clone, Debug)]
pub struct CurlInverseOp {
    domain: StarDomain,
    quad: QuadratureConfig,
    kernels: KernelEvaluator,
    ball: BallIntegrator,
}

impl CurlInverseOp {
    pub fn new(domain: StarDomain, mollifier: Mollifier, quad: QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        let radius = quad.r_factor * domain.circumradius();
        let ball = BallIntegrator::new(domain.clone(), radius, quad.n_rho, quad.sphere)?;
        let kernels = KernelEvaluator::new(mollifier, quad.n_alpha)?.with_inner_rule(quad.inner_rule);
        Ok(Self { kernels, domain, quad, ball })
    }

    pub fn domain(&self) -> &StarDomain {
        &self.domain
    }

    pub fn mollifier(&self) -> &Mollifier {
        self.kernels.mollifier()
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn kernels(&self) -> &KernelEvaluator {
        &self.kernels
    }

    /// Radius of the integration ball `B_R`.
    pub fn radius(&self) -> f64 {
        self.ball.radius()
    }

    /// Same operator with a different budget.
    pub fn with_quadrature(&self, quad: QuadratureConfig) -> Result<Self> {
        Self::new(self.domain.clone(), *self.mollifier(), quad)
    }

    fn cap(&self, x: &Point) -> DirectionCap {
        if self.quad.cap_adapted {
            kernel_support_cap(x, self.mollifier().support_radius())
        } else {
            DirectionCap::full_sphere()
        }
    }

    /// `(Rg)(x) = ∫_Ω g(y) × N(x, y) dy`, zero for `x` outside the domain.
    pub fn curl_inverse(&self, g: &VectorField, x: &Point) -> Result<Vec3> {
        if !self.domain.contains(x) {
            return Ok(Vec3::zeros());
        }
        self.curl_inverse_raw(g, x)
    }

    /// The quadrature without the exterior short-circuit; exterior values are then
    /// zero only through the kernel support.
    pub fn curl_inverse_raw(&self, g: &VectorField, x: &Point) -> Result<Vec3> {
        self.ball.integrate_in_cap(x, &self.cap(x), Coverage::InsideOnly, &[], |node| {
            let n = self.kernels.curl_kernel(x, &node.y).unwrap_or_else(|_| Vec3::zeros());
            g.eval(&node.y).cross(&n)
        })
    }

    /// `Rg` through one of the equivalent kernel parameterisations.
    pub fn curl_inverse_with_form(&self, g: &VectorField, x: &Point, form: KernelForm) -> Result<Vec3> {
        if !self.domain.contains(x) {
            return Ok(Vec3::zeros());
        }
        self.ball.integrate_in_cap(x, &self.cap(x), Coverage::InsideOnly, &[], |node| {
            let n = self.kernels.curl_kernel_form(x, &node.y, form).unwrap_or_else(|_| Vec3::zeros());
            g.eval(&node.y).cross(&n)
        })
    }

    /// `(R^eps g)(x)`: the kernel multiplied by `η(|x - y| / eps)`.
    pub fn curl_inverse_eps(&self, g: &VectorField, x: &Point, eps: f64) -> Result<Vec3> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        if !self.domain.contains(x) {
            return Ok(Vec3::zeros());
        }
        self.ball.integrate_in_cap(x, &self.cap(x), Coverage::InsideOnly, &[eps, 2.0 * eps], |node| {
            let cut = eta_unchecked(node.rho / eps);
            if cut == 0.0 {
                return Vec3::zeros();
            }
            let n = self.kernels.curl_kernel(x, &node.y).unwrap_or_else(|_| Vec3::zeros());
            g.eval(&node.y).cross(&n) * cut
        })
    }

    /// `(BF)(x) = ∫_Ω F(y) Ñ(x, y) dy`. Logs a warning when `F` is visibly not mean-zero.
    pub fn bogovskii(&self, f: &ScalarField, x: &Point) -> Result<Vec3> {
        self.check_mean_zero(f)?;
        self.bogovskii_unchecked(f, x)
    }

    fn bogovskii_unchecked(&self, f: &ScalarField, x: &Point) -> Result<Vec3> {
        if !self.domain.contains(x) {
            return Ok(Vec3::zeros());
        }
        self.ball.integrate_in_cap(x, &self.cap(x), Coverage::InsideOnly, &[], |node| {
            self.kernels.bogovskii_kernel(x, &node.y).unwrap_or_else(|_| Vec3::zeros()) * f.eval(&node.y)
        })
    }

    /// `(∫_Ω F, |Ω|, max |F|)` over the quadrature nodes, integrating from the origin.
    pub fn domain_moments(&self, f: &ScalarField) -> Result<(f64, f64, f64)> {
        let origin = Point::zeros();
        let mut sup: f64 = 0.0;
        let Pair(integral, volume) = self.ball.integrate(&origin, Coverage::InsideOnly, |node| {
            let v = f.eval(&node.y);
            sup = sup.max(v.abs());
            Pair(v, 1.0)
        })?;
        Ok((integral, volume, sup))
    }

    /// `|Ω|⁻¹ ∫_Ω F`.
    pub fn mean_over_domain(&self, f: &ScalarField) -> Result<f64> {
        let (integral, volume, _) = self.domain_moments(f)?;
        Ok(integral / volume)
    }

    /// Returns `∫_Ω F` and warns when it exceeds `1e-6 ‖F‖_∞ |Ω|`.
    pub fn check_mean_zero(&self, f: &ScalarField) -> Result<f64> {
        let (integral, volume, sup) = self.domain_moments(f)?;
        if integral.abs() > 1e-6 * sup * volume {
            log::warn!(
                "Bogovskii datum `{}` is not mean-zero: integral {integral:e} over volume {volume:.6}",
                f.name()
            );
        }
        Ok(integral)
    }

    fn check_gradient_point(&self, x: &Point) -> Result<()> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain(x.x, x.y, x.z));
        }
        let dist = self.domain.distance_to_boundary(x);
        if dist < GRADIENT_BOUNDARY_GUARD {
            return Err(Error::NearBoundary(dist));
        }
        Ok(())
    }

    /// Jacobian of `Rg` with entry `(k, m) = ∂_m (Rg)^k`, from the difference integral,
    /// the auxiliary volume term and the surface term on `∂B_R`.
    pub fn grad_curl_inverse(&self, g: &VectorField, x: &Point) -> Result<Mat3> {
        self.check_gradient_point(x)?;
        let gx = g.eval(x);
        let cap = self.cap(x);
        // column m accumulates Δg × ∂_m N + g(x) × aux_m
        let volume = self.ball.integrate_in_cap(x, &cap, Coverage::Everything, &[], |node| {
            let k = match self.kernels.evaluate(x, &node.y) {
                Ok(k) => k,
                Err(_) => return Mat3::zeros(),
            };
            let gy = if node.inside { g.eval(&node.y) } else { Vec3::zeros() };
            let dg = gy - gx;
            let mut out = Mat3::zeros();
            for m in 0..3 {
                let col = dg.cross(&k.grad_n.column(m).into_owned()) + gx.cross(&k.aux.column(m).into_owned());
                out.set_column(m, &col);
            }
            out
        })?;
        let surface = self.surface_term(x, &cap)?;
        let mut v = volume;
        for m in 0..3 {
            let s = surface.column(m).into_owned();
            let col = v.column(m) - gx.cross(&s);
            v.set_column(m, &col);
        }
        Ok(v)
    }

    /// `∫_{∂B_R} N(x, y) ν(y)ᵀ dσ`; column `m` carries `ν_m`.
    fn surface_term(&self, x: &Point, cap: &DirectionCap) -> Result<Mat3> {
        integrate_sphere_surface_from(x, self.radius(), self.quad.surface, cap, |y, nu| {
            self.kernels.curl_kernel(x, y).unwrap_or_else(|_| Vec3::zeros()) * nu.transpose()
        })
    }

    /// Same surface integral with the origin-centred rule, independent of `x`'s cap.
    pub fn surface_term_global(&self, x: &Point) -> Result<Mat3> {
        integrate_sphere_surface(self.radius(), self.quad.surface, |y, nu| {
            self.kernels.curl_kernel(x, y).unwrap_or_else(|_| Vec3::zeros()) * nu.transpose()
        })
    }

    /// `curl Rg` contracted from the analytic Jacobian.
    pub fn curl_of_curl_inverse(&self, g: &VectorField, x: &Point) -> Result<Vec3> {
        Ok(curl_from_jacobian(&self.grad_curl_inverse(g, x)?))
    }

    /// `curl Rg - g - B[div g]` at `x`.
    pub fn residual_identity(&self, g: &VectorField, x: &Point) -> Result<Vec3> {
        let div = g.divergence().ok_or_else(|| Error::MissingDivergence(g.name().to_string()))?;
        let curl = self.curl_of_curl_inverse(g, x)?;
        let b = self.bogovskii_unchecked(&div, x)?;
        Ok(curl - g.eval(x) - b)
    }

    /// `B_∂[φ](x) = ∫_{∂Ω} φ(y) Ñ(x, y) dσ_y`; only for balls centred at the origin.
    pub fn boundary_bogovskii(&self, phi: impl Fn(&Point, &Vec3) -> f64, x: &Point) -> Result<Vec3> {
        let Shape::Ball { radius } = self.domain.shape() else {
            return Err(Error::InvalidArgument("boundary layer term is implemented for balls only".into()));
        };
        if !self.domain.contains(x) {
            return Ok(Vec3::zeros());
        }
        integrate_sphere_surface(*radius, self.quad.surface, |y, nu| {
            self.kernels.bogovskii_kernel(x, y).unwrap_or_else(|_| Vec3::zeros()) * phi(y, nu)
        })
    }

    /// `curl Rg - g + B[div g] - B_∂[g·ν]`, the identity for data that are not tangential
    /// on `∂Ω` (ball domains only).
    pub fn residual_with_boundary_flux(&self, g: &VectorField, x: &Point) -> Result<Vec3> {
        let div = g.divergence().ok_or_else(|| Error::MissingDivergence(g.name().to_string()))?;
        let curl = self.curl_of_curl_inverse(g, x)?;
        let b = self.bogovskii_unchecked(&div, x)?;
        let flux = self.boundary_bogovskii(|y, nu| g.eval(y).dot(nu), x)?;
        Ok(curl - g.eval(x) + b - flux)
    }

    /// `Rg` on every node of a lattice; the result does not depend on `threads`
    /// (0 selects rayon's default).
    pub fn eval_grid(&self, g: &VectorField, spec: &GridSpec, threads: usize) -> Result<FieldSampleGrid> {
        spec.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
        let results: Vec<Result<(Vec3, bool)>> = pool.install(|| {
            (0..spec.len())
                .into_par_iter()
                .map(|idx| {
                    let x = spec.point(idx);
                    let inside = self.domain.contains(&x);
                    let v = if inside { self.curl_inverse_raw(g, &x)? } else { Vec3::zeros() };
                    Ok((v, inside))
                })
                .collect()
        });
        let mut values = Vec::with_capacity(spec.len());
        let mut inside = Vec::with_capacity(spec.len());
        for r in results {
            let (v, i) = r?;
            values.push(v);
            inside.push(i);
        }
        Ok(FieldSampleGrid { spec: *spec, values, inside })
    }

    /// Direction rule size actually used for volume integrals.
    pub fn sphere_size(&self) -> SphereSize {
        self.quad.sphere
    }
}

/// `(curl v)^i = ε_ilm ∂_l v^m` for a Jacobian with entry `(k, m) = ∂_m v^k`.
pub fn curl_from_jacobian(j: &Mat3) -> Vec3 {
    Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
}
