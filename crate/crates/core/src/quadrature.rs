//! Deterministic quadrature: Gauss-Legendre intervals, product sphere rules, and the
//! polar volume integrator used for every weakly singular integral over `B_R`.
//!
//! Volume integrals are written as
//!
//! ```text
//! ∫_{B_R} f(y) dy = Σ_q w_q ∫_0^{ρ_max(u_q)} f(x + ρ u_q) ρ² dρ
//! ```
//!
//! with rays centred at the evaluation point `x`. The `ρ²` Jacobian cancels the
//! `|x - y|^-2` growth of the kernels, so every per-ray integrand is bounded. Each
//! ray is split where it crosses the domain boundary, because fields are extended by
//! zero and Gauss-Legendre across a jump loses all of its order.

use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroUsize;
use std::ops::{AddAssign, Mul};
use std::str::FromStr;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{Matrix3, Vector3};

use crate::geometry::StarDomain;
use crate::kernels::InnerRule;
use crate::{Error, Point, Result, Vec3};

/// Values that can be accumulated by a quadrature sum.
pub trait Accumulate: Copy + AddAssign + Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Accumulate for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Accumulate for Vector3<f64> {
    fn zero() -> Self {
        Vector3::zeros()
    }
}

impl Accumulate for Matrix3<f64> {
    fn zero() -> Self {
        Matrix3::zeros()
    }
}

impl<A: Accumulate, B: Accumulate> Accumulate for Pair<A, B> {
    fn zero() -> Self {
        Pair(A::zero(), B::zero())
    }
}

/// Two accumulators summed side by side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair<A, B>(pub A, pub B);

impl<A: AddAssign, B: AddAssign> AddAssign for Pair<A, B> {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
        self.1 += rhs.1;
    }
}

impl<A: Mul<f64, Output = A>, B: Mul<f64, Output = B>> Mul<f64> for Pair<A, B> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Pair(self.0 * rhs, self.1 * rhs)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn legendre(n: usize) -> Result<Self> {
        let degree = NonZeroUsize::new(n)
            .ok_or_else(|| Error::InvalidArgument("Gauss-Legendre order must be >= 1".into()))?;
        let rule = GaussLegendre::new(degree);
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, w * half))
    }

    pub fn integrate<T: Accumulate>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> T) -> T {
        let mut acc = T::zero();
        for (t, w) in self.mapped(a, b) {
            acc += f(t) * w;
        }
        acc
    }
}

/// `∫_a^b f` with an `n`-node Gauss-Legendre rule.
pub fn integrate_interval(f: impl FnMut(f64) -> f64, a: f64, b: f64, n: usize) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("interval [{a}, {b}] is empty")));
    }
    Ok(GaussRule::legendre(n)?.integrate(a, b, f))
}

/// Shape of a product sphere rule: Gauss-Legendre in `cos θ` times the trapezoid rule
/// in `φ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SphereSize {
    pub n_polar: usize,
    pub n_azimuth: usize,
}

impl SphereSize {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar < 2 || n_azimuth < 4 {
            return Err(Error::InvalidArgument(format!(
                "sphere rule needs n_polar >= 2 and n_azimuth >= 4, got {n_polar}x{n_azimuth}"
            )));
        }
        Ok(Self { n_polar, n_azimuth })
    }

    /// Picks a product shape for a requested node count.
    ///
    /// An exact factorisation `p x a` with `p <= a <= 2.5 p` is used when one exists
    /// (largest `p` wins, so 266 gives 14x19). Otherwise the count is rounded to
    /// `p = round(sqrt(count / 2))`, `a = ceil(count / p)`.
    pub fn from_count(count: usize) -> Result<Self> {
        if count < 8 {
            return Err(Error::InvalidArgument(format!("sphere node count {count} is below 8")));
        }
        let mut best = None;
        let mut p = 2;
        while p * p <= count {
            if count.is_multiple_of(p) {
                let a = count / p;
                if a as f64 <= 2.5 * p as f64 && a >= 4 {
                    best = Some((p, a));
                }
            }
            p += 1;
        }
        let (p, a) = best.unwrap_or_else(|| {
            let p = ((count as f64 / 2.0).sqrt().round() as usize).max(2);
            (p, count.div_ceil(p).max(4))
        });
        Self::new(p, a)
    }

    pub fn count(&self) -> usize {
        self.n_polar * self.n_azimuth
    }

    /// Both factors doubled in resolution (used by refinement oracles).
    pub fn refined(&self) -> Self {
        Self { n_polar: 2 * self.n_polar, n_azimuth: 2 * self.n_azimuth }
    }
}

impl fmt::Display for SphereSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_polar, self.n_azimuth)
    }
}

impl FromStr for SphereSize {
    type Err = Error;

    /// Accepts either a node count (`266`) or an explicit shape (`14x19`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((p, a)) = s.split_once(['x', 'X']) {
            let p = p.trim().parse().map_err(|_| Error::Parse(format!("bad sphere size `{s}`")))?;
            let a = a.trim().parse().map_err(|_| Error::Parse(format!("bad sphere size `{s}`")))?;
            Self::new(p, a)
        } else {
            let n = s.parse().map_err(|_| Error::Parse(format!("bad sphere size `{s}`")))?;
            Self::from_count(n)
        }
    }
}

/// Product quadrature on the unit sphere, polar axis `e3`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereRule {
    size: SphereSize,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
}

impl SphereRule {
    /// Gauss-Legendre in `cos θ` (ascending) times a uniform trapezoid in `φ`; nodes
    /// are ordered polar-major. Exact for azimuthal modes below `n_azimuth` and for
    /// polynomials in `cos θ` of degree below `2 n_polar`.
    pub fn product(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        let size = SphereSize::new(n_polar, n_azimuth)?;
        let polar = GaussRule::legendre(n_polar)?;
        let dphi = 2.0 * PI / n_azimuth as f64;
        let mut nodes = Vec::with_capacity(size.count());
        let mut weights = Vec::with_capacity(size.count());
        for (&c, &w) in polar.nodes().iter().zip(polar.weights()) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_azimuth {
                let phi = j as f64 * dphi;
                nodes.push(Vec3::new(s * phi.cos(), s * phi.sin(), c));
                weights.push(w * dphi);
            }
        }
        Ok(Self { size, nodes, weights })
    }

    pub fn with_size(size: SphereSize) -> Result<Self> {
        Self::product(size.n_polar, size.n_azimuth)
    }

    pub fn size(&self) -> SphereSize {
        self.size
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<T: Accumulate>(&self, mut f: impl FnMut(&Vec3) -> T) -> T {
        let mut acc = T::zero();
        for (u, &w) in self.nodes.iter().zip(&self.weights) {
            acc += f(u) * w;
        }
        acc
    }
}

/// A spherical cap of directions `{u : u·axis >= cos_half_angle}`. With
/// `cos_half_angle = -1` it is the whole sphere in a frame whose pole is `axis`.
/// When `split_equator` is set and the cap reaches below the equator, the polar rule
/// is applied separately on `u·axis <= 0` and `u·axis >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionCap {
    pub axis: Vec3,
    pub cos_half_angle: f64,
    pub split_equator: bool,
}

impl DirectionCap {
    pub fn full_sphere() -> Self {
        Self { axis: Vec3::z(), cos_half_angle: -1.0, split_equator: false }
    }
}

/// Orthonormal frame `(e1, e2, axis)` for a unit axis.
fn frame_for(axis: &Vec3) -> (Vec3, Vec3) {
    let reference = if axis.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
    let e1 = (reference - axis * axis.dot(&reference)).normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}

/// Product rule restricted to a cap: Gauss-Legendre in `cos θ` over
/// `[cos_half_angle, 1]`, trapezoid in `φ`, rotated so the pole is the cap axis.
/// Returns (direction, weight) pairs in a fixed order.
pub(crate) fn cap_directions(size: SphereSize, cap: &DirectionCap) -> Result<Vec<(Vec3, f64)>> {
    let polar = GaussRule::legendre(size.n_polar)?;
    let axis = cap.axis.normalize();
    let (e1, e2) = frame_for(&axis);
    let lo = cap.cos_half_angle.clamp(-1.0, 1.0);
    let panels: &[(f64, f64)] = if cap.split_equator && lo < 0.0 { &[(lo, 0.0), (0.0, 1.0)] } else { &[(lo, 1.0)] };
    let dphi = 2.0 * PI / size.n_azimuth as f64;
    let mut out = Vec::with_capacity(size.count() * panels.len());
    for (c, w) in panels.iter().flat_map(|&(a, b)| polar.mapped(a, b)) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for j in 0..size.n_azimuth {
            let phi = j as f64 * dphi;
            let u = e1 * (s * phi.cos()) + e2 * (s * phi.sin()) + axis * c;
            out.push((u, w * dphi));
        }
    }
    Ok(out)
}

/// Orders and node counts for every quadrature in the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss-Legendre order of the inner line integral of each kernel.
    pub n_alpha: usize,
    /// Gauss-Legendre nodes per radial sub-segment.
    pub n_rho: usize,
    /// Direction rule for volume integrals.
    pub sphere: SphereSize,
    /// Rule for surface integrals over `∂B_R`.
    pub surface: SphereSize,
    /// `R = r_factor * circumradius(Ω)`.
    pub r_factor: f64,
    /// Restrict direction rules to the kernel support cap (see
    /// [`crate::operators::kernel_support_cap`]).
    pub cap_adapted: bool,
    /// Node placement of the inner line integral.
    pub inner_rule: InnerRule,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            n_alpha: 16,
            n_rho: 32,
            sphere: SphereSize { n_polar: 14, n_azimuth: 19 },
            surface: SphereSize { n_polar: 17, n_azimuth: 35 },
            r_factor: 1.05,
            cap_adapted: true,
            inner_rule: InnerRule::Mixed,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_alpha < 2 || self.n_rho < 2 {
            return Err(Error::InvalidArgument(format!(
                "quadrature orders must be >= 2 (n_alpha = {}, n_rho = {})",
                self.n_alpha, self.n_rho
            )));
        }
        SphereSize::new(self.sphere.n_polar, self.sphere.n_azimuth)?;
        SphereSize::new(self.surface.n_polar, self.surface.n_azimuth)?;
        if !(self.r_factor > 1.0) || !self.r_factor.is_finite() {
            return Err(Error::InvalidArgument(format!("R_factor must exceed 1, got {}", self.r_factor)));
        }
        Ok(())
    }

    /// Doubles the radial order and both sphere rule resolutions.
    pub fn refined(&self) -> Self {
        Self {
            n_rho: 2 * self.n_rho,
            sphere: self.sphere.refined(),
            surface: self.surface.refined(),
            ..*self
        }
    }
}

/// A quadrature node on a ray from the evaluation point.
#[derive(Clone, Copy, Debug)]
pub struct RayNode {
    pub y: Point,
    pub rho: f64,
    pub direction: Vec3,
    /// Whether the sub-segment holding this node lies inside the domain.
    pub inside: bool,
}

/// Which radial sub-segments to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    /// Only pieces inside the domain (integrands that vanish outside it).
    InsideOnly,
    /// The whole ray up to `∂B_R`.
    Everything,
}

/// Polar-coordinate integrator over `B_R` centred at the evaluation point.
#[derive(Clone, Debug)]
pub struct BallIntegrator {
    domain: StarDomain,
    radius: f64,
    radial: GaussRule,
    sphere: SphereSize,
}

impl BallIntegrator {
    pub fn new(domain: StarDomain, radius: f64, n_rho: usize, sphere: SphereSize) -> Result<Self> {
        if !(radius > domain.circumradius()) {
            return Err(Error::InvalidArgument(format!(
                "B_R radius {radius} must exceed the domain circumradius {}",
                domain.circumradius()
            )));
        }
        Ok(Self { domain, radius, radial: GaussRule::legendre(n_rho)?, sphere })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn domain(&self) -> &StarDomain {
        &self.domain
    }

    /// Distance from `x` to `∂B_R` along `u`.
    pub fn exit_distance(&self, x: &Point, u: &Vec3) -> f64 {
        let b = x.dot(u);
        -b + (b * b + self.radius * self.radius - x.norm_squared()).max(0.0).sqrt()
    }

    /// `∫_{B_R} f(y) dy` over the whole sphere of directions.
    pub fn integrate<T: Accumulate>(
        &self,
        x: &Point,
        coverage: Coverage,
        f: impl FnMut(&RayNode) -> T,
    ) -> Result<T> {
        self.integrate_in_cap(x, &DirectionCap::full_sphere(), coverage, &[], f)
    }

    /// Same as [`integrate`](Self::integrate) but only over directions in `cap`, with
    /// extra radial break points (e.g. the kinks of a cutoff). The integrand must
    /// vanish for directions outside the cap.
    pub fn integrate_in_cap<T: Accumulate>(
        &self,
        x: &Point,
        cap: &DirectionCap,
        coverage: Coverage,
        extra_breaks: &[f64],
        mut f: impl FnMut(&RayNode) -> T,
    ) -> Result<T> {
        if !(x.norm() < self.radius) {
            return Err(Error::OutsideBall);
        }
        let mut total = T::zero();
        let mut breaks: Vec<f64> = Vec::with_capacity(8);
        for (u, w) in cap_directions(self.sphere, cap)? {
            let rho_max = self.exit_distance(x, &u);
            if rho_max <= 0.0 {
                continue;
            }
            let segments = self.domain.ray_segments(x, &u, rho_max)?;
            breaks.clear();
            breaks.push(0.0);
            breaks.push(rho_max);
            for &(a, b) in segments.segments() {
                breaks.push(a);
                breaks.push(b);
            }
            breaks.extend(extra_breaks.iter().copied().filter(|&r| r > 0.0 && r < rho_max));
            breaks.sort_by(f64::total_cmp);
            breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * rho_max);

            let mut ray_sum = T::zero();
            for piece in breaks.windows(2) {
                let (a, b) = (piece[0], piece[1]);
                if b - a <= 0.0 {
                    continue;
                }
                let inside = segments.covers(0.5 * (a + b));
                if coverage == Coverage::InsideOnly && !inside {
                    continue;
                }
                for (rho, wr) in self.radial.mapped(a, b) {
                    let node = RayNode { y: x + u * rho, rho, direction: u, inside };
                    ray_sum += f(&node) * (wr * rho * rho);
                }
            }
            total += ray_sum * w;
        }
        Ok(total)
    }
}

/// `∫_{∂B_R} f(y, ν(y)) dσ` with the origin-centred product rule; `ν = y / R`.
pub fn integrate_sphere_surface<T: Accumulate>(
    radius: f64,
    size: SphereSize,
    mut f: impl FnMut(&Point, &Vec3) -> T,
) -> Result<T> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("sphere radius must be positive, got {radius}")));
    }
    let rule = SphereRule::with_size(size)?;
    Ok(rule.integrate(|u| f(&(u * radius), u)) * (radius * radius))
}

/// `∫_{∂B_R} f dσ` parameterised by directions seen from an interior point `x`:
/// `y = x + ρ_max(u) u`, `dσ = ρ_max² / (u·ν) du`. Only directions in `cap` are used,
/// so the integrand must vanish on the part of the sphere not seen through the cap.
pub fn integrate_sphere_surface_from<T: Accumulate>(
    x: &Point,
    radius: f64,
    size: SphereSize,
    cap: &DirectionCap,
    mut f: impl FnMut(&Point, &Vec3) -> T,
) -> Result<T> {
    if !(x.norm() < radius) {
        return Err(Error::OutsideBall);
    }
    let mut total = T::zero();
    for (u, w) in cap_directions(size, cap)? {
        let b = x.dot(&u);
        let rho = -b + (b * b + radius * radius - x.norm_squared()).max(0.0).sqrt();
        let y = x + u * rho;
        let normal = y / radius;
        let jac = rho * rho / u.dot(&normal);
        total += f(&y, &normal) * (w * jac);
    }
    Ok(total)
}
