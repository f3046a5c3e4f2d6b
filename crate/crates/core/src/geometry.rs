//! Bounded domains star-shaped with respect to the closed unit ball.
//!
//! Every shape is described relative to the origin. Membership is strict: boundary
//! points are outside. [`StarDomain::ray_segments`] reports where a ray runs through the
//! domain, which is what the polar volume integrator needs to split its radial
//! integrals at the jumps of zero-extended fields.

use std::fmt;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::quadrature::{GaussRule, SphereRule, SphereSize};
use crate::{Error, Point, Result, Vec3};

const UNIT_TOLERANCE: f64 = 1e-12;
const RADIAL_MARCH_STEPS: usize = 512;
const RADIAL_BISECTION_TOL: f64 = 1e-10;

/// Tabulated boundary distance `r(u)` on the nodes of a product sphere rule.
///
/// Values are interpolated bilinearly in `(cos θ, φ)`; beyond the outermost polar
/// rings the pole value (mean of the nearest ring) is used.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable {
    size: SphereSize,
    cos_theta: Vec<f64>,
    values: Vec<f64>,
    south: f64,
    north: f64,
}

impl RadialTable {
    pub fn new(size: SphereSize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size.count() {
            return Err(Error::InvalidArgument(format!(
                "radial table for a {size} rule needs {} values, got {}",
                size.count(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!("radial table value {bad} is not positive")));
        }
        let cos_theta = GaussRule::legendre(size.n_polar)?.nodes().to_vec();
        let na = size.n_azimuth;
        let south = values[..na].iter().sum::<f64>() / na as f64;
        let north = values[values.len() - na..].iter().sum::<f64>() / na as f64;
        Ok(Self { size, cos_theta, values, south, north })
    }

    /// Samples `r` at the nodes of a product rule.
    pub fn from_fn(size: SphereSize, r: impl Fn(&Vec3) -> f64) -> Result<Self> {
        let rule = SphereRule::with_size(size)?;
        Self::new(size, rule.nodes().iter().map(r).collect())
    }

    /// Reads a table from CSV with columns `i_polar,i_azimuth,r`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse_usize = |k: usize| -> Result<usize> {
                record
                    .get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad radial table row {:?}", record)))
            };
            let r: f64 = record
                .get(2)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad radial table row {:?}", record)))?;
            rows.push((parse_usize(0)?, parse_usize(1)?, r));
        }
        let n_polar = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
        let n_azimuth = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
        let size = SphereSize::new(n_polar, n_azimuth)?;
        let mut values = vec![f64::NAN; size.count()];
        for (i, j, r) in rows {
            values[i * n_azimuth + j] = r;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Parse("radial table is missing nodes".into()));
        }
        Self::new(size, values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["i_polar", "i_azimuth", "r"])?;
        for i in 0..self.size.n_polar {
            for j in 0..self.size.n_azimuth {
                w.write_record(&[i.to_string(), j.to_string(), self.values[i * self.size.n_azimuth + j].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn size(&self) -> SphereSize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn ring_value(&self, i: usize, phi: f64) -> f64 {
        let na = self.size.n_azimuth;
        let t = phi / (2.0 * std::f64::consts::PI) * na as f64;
        let j0 = (t.floor() as usize) % na;
        let j1 = (j0 + 1) % na;
        let s = t - t.floor();
        let row = &self.values[i * na..(i + 1) * na];
        row[j0] * (1.0 - s) + row[j1] * s
    }

    /// Interpolated boundary distance in direction `u` (unit).
    pub fn eval(&self, u: &Vec3) -> f64 {
        let c = u.z.clamp(-1.0, 1.0);
        let mut phi = u.y.atan2(u.x);
        if phi < 0.0 {
            phi += 2.0 * std::f64::consts::PI;
        }
        let nodes = &self.cos_theta;
        let last = nodes.len() - 1;
        if c <= nodes[0] {
            let s = (c + 1.0) / (nodes[0] + 1.0);
            return self.south * (1.0 - s) + self.ring_value(0, phi) * s;
        }
        if c >= nodes[last] {
            let s = (c - nodes[last]) / (1.0 - nodes[last]);
            return self.ring_value(last, phi) * (1.0 - s) + self.north * s;
        }
        let i = nodes.partition_point(|&n| n <= c) - 1;
        let s = (c - nodes[i]) / (nodes[i + 1] - nodes[i]);
        self.ring_value(i, phi) * (1.0 - s) + self.ring_value(i + 1, phi) * s
    }

    fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(self.south.max(self.north), f64::max)
    }

    fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(self.south.min(self.north), f64::min)
    }

    fn boundary_points(&self) -> Vec<Point> {
        let rule = SphereRule::with_size(self.size).expect("table size was validated");
        let mut pts: Vec<Point> = rule.nodes().iter().zip(&self.values).map(|(u, r)| u * *r).collect();
        pts.push(Vec3::new(0.0, 0.0, -self.south));
        pts.push(Vec3::new(0.0, 0.0, self.north));
        pts
    }
}

/// Geometric description of the domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Ball { radius: f64 },
    Ellipsoid { semi_axes: [f64; 3] },
    Box { half_extents: [f64; 3] },
    Radial(RadialTable),
}

/// A bounded open set containing the closed unit ball, star-shaped with respect to it.
#[derive(Clone, Debug, PartialEq)]
pub struct StarDomain {
    shape: Shape,
    circumradius: f64,
    diameter: f64,
}

/// Occupancy intervals of `{x + ρu : 0 <= ρ <= ρ_max}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RaySegments {
    origin: Point,
    direction: Vec3,
    rho_max: f64,
    segments: Vec<(f64, f64)>,
}

impl RaySegments {
    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn direction(&self) -> &Vec3 {
        &self.direction
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    /// Disjoint, sorted `[ρ_in, ρ_out]` intervals inside `[0, ρ_max]`.
    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn covers(&self, rho: f64) -> bool {
        self.segments.iter().any(|&(a, b)| a < rho && rho < b)
    }
}

/// Outcome of [`StarDomain::validate_star_shape`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StarShapeReport {
    pub samples: usize,
    pub violations: usize,
    /// `(b, z, t)` triples: `b + t (z - b)` left the domain.
    pub witnesses: Vec<(Point, Point, f64)>,
}

const MAX_WITNESSES: usize = 32;

fn check_unit(u: &Vec3) -> Result<()> {
    let n = u.norm();
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NonUnitDirection(n));
    }
    Ok(())
}

/// Roots of `a ρ² + 2 b ρ + c = 0`, ascending; `None` when there is no real pair.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let disc = b * b - a * c;
    if disc <= 0.0 || a <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let q = -(b + b.signum() * sq);
    let (r1, r2) = if q != 0.0 { (q / a, c / q) } else { (-sq / a, sq / a) };
    Some((r1.min(r2), r1.max(r2)))
}

fn clip(lo: f64, hi: f64, rho_max: f64) -> Vec<(f64, f64)> {
    let (a, b) = (lo.max(0.0), hi.min(rho_max));
    if b > a {
        vec![(a, b)]
    } else {
        Vec::new()
    }
}

/// Uniformly distributed direction on the unit sphere.
pub fn random_unit_vector(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n2 = v.norm_squared();
        if n2 > 1e-6 && n2 <= 1.0 {
            return v / n2.sqrt();
        }
    }
}

pub(crate) fn random_in_ball(rng: &mut impl Rng, radius: f64) -> Point {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if v.norm_squared() <= 1.0 {
            return v * radius;
        }
    }
}

impl StarDomain {
    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius > 1.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius must exceed 1, got {radius}")));
        }
        Ok(Self { shape: Shape::Ball { radius }, circumradius: radius, diameter: 2.0 * radius })
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Result<Self> {
        let axes = [a, b, c];
        if axes.iter().any(|&s| !(s > 1.0 && s.is_finite())) {
            return Err(Error::InvalidArgument(format!("ellipsoid semi-axes must exceed 1, got {axes:?}")));
        }
        let rmax = a.max(b).max(c);
        Ok(Self { shape: Shape::Ellipsoid { semi_axes: axes }, circumradius: rmax, diameter: 2.0 * rmax })
    }

    pub fn cuboid(h1: f64, h2: f64, h3: f64) -> Result<Self> {
        let h = [h1, h2, h3];
        if h.iter().any(|&s| !(s > 1.0 && s.is_finite())) {
            return Err(Error::InvalidArgument(format!("box half-extents must exceed 1, got {h:?}")));
        }
        let r = Vec3::from(h).norm();
        Ok(Self { shape: Shape::Box { half_extents: h }, circumradius: r, diameter: 2.0 * r })
    }

    pub fn radial(table: RadialTable) -> Result<Self> {
        if !(table.min_value() > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "radial shape must enclose the unit ball (min r = {})",
                table.min_value()
            )));
        }
        let circumradius = table.max_value();
        let pts = table.boundary_points();
        let mut diameter: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                diameter = diameter.max((p - q).norm());
            }
        }
        Ok(Self { shape: Shape::Radial(table), circumradius, diameter })
    }

    /// Parses `ball:R0=2`, `ellipsoid:a=2,b=2.5,c=3`, `box:h=1.5,1.5,1.5`, or
    /// `radial:file=<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad domain spec `{spec}`"));
        let (kind, rest) = spec.trim().split_once(':').ok_or_else(bad)?;
        let num = |s: &str| -> Result<f64> { s.trim().parse::<f64>().map_err(|_| bad()) };
        match kind.trim() {
            "ball" => {
                let (k, v) = rest.split_once('=').ok_or_else(bad)?;
                if !matches!(k.trim(), "R0" | "r0" | "R") {
                    return Err(bad());
                }
                Self::ball(num(v)?)
            }
            "ellipsoid" => {
                let mut axes = [None; 3];
                for part in rest.split(',') {
                    let (k, v) = part.split_once('=').ok_or_else(bad)?;
                    let slot = match k.trim() {
                        "a" => 0,
                        "b" => 1,
                        "c" => 2,
                        _ => return Err(bad()),
                    };
                    axes[slot] = Some(num(v)?);
                }
                match axes {
                    [Some(a), Some(b), Some(c)] => Self::ellipsoid(a, b, c),
                    _ => Err(bad()),
                }
            }
            "box" => {
                let (k, v) = rest.split_once('=').ok_or_else(bad)?;
                if k.trim() != "h" {
                    return Err(bad());
                }
                let h: Vec<f64> = v.split(',').map(num).collect::<Result<_>>()?;
                match h.as_slice() {
                    [a] => Self::cuboid(*a, *a, *a),
                    [a, b, c] => Self::cuboid(*a, *b, *c),
                    _ => Err(bad()),
                }
            }
            "radial" => {
                let (k, v) = rest.split_once('=').ok_or_else(bad)?;
                if k.trim() != "file" {
                    return Err(bad());
                }
                Self::radial(RadialTable::from_csv(Path::new(v.trim()))?)
            }
            _ => Err(bad()),
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// `sup |z|` over the closure of the domain.
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Distance from the origin to the boundary along the unit direction `u`.
    pub fn boundary_distance(&self, u: &Vec3) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => *radius,
            Shape::Ellipsoid { semi_axes: [a, b, c] } => {
                1.0 / ((u.x / a).powi(2) + (u.y / b).powi(2) + (u.z / c).powi(2)).sqrt()
            }
            Shape::Box { half_extents } => (0..3)
                .filter(|&i| u[i] != 0.0)
                .map(|i| half_extents[i] / u[i].abs())
                .fold(f64::INFINITY, f64::min),
            Shape::Radial(table) => table.eval(u),
        }
    }

    /// Strict membership; boundary points are outside.
    pub fn contains(&self, x: &Point) -> bool {
        match &self.shape {
            Shape::Ball { radius } => x.norm_squared() < radius * radius,
            Shape::Ellipsoid { semi_axes: [a, b, c] } => {
                (x.x / a).powi(2) + (x.y / b).powi(2) + (x.z / c).powi(2) < 1.0
            }
            Shape::Box { half_extents } => (0..3).all(|i| x[i].abs() < half_extents[i]),
            Shape::Radial(table) => {
                let r = x.norm();
                r == 0.0 || r < table.eval(&(x / r))
            }
        }
    }

    /// Where `{x + ρu : 0 <= ρ <= ρ_max}` lies in the domain. Closed form for the
    /// analytic shapes; bracketing plus bisection (tolerance `1e-10` in ρ) for radial
    /// tables.
    pub fn ray_segments(&self, x: &Point, u: &Vec3, rho_max: f64) -> Result<RaySegments> {
        check_unit(u)?;
        if !(rho_max > 0.0) {
            return Err(Error::InvalidArgument(format!("rho_max must be positive, got {rho_max}")));
        }
        let segments = match &self.shape {
            Shape::Ball { radius } => match quadratic_roots(1.0, x.dot(u), x.norm_squared() - radius * radius) {
                Some((lo, hi)) => clip(lo, hi, rho_max),
                None => Vec::new(),
            },
            Shape::Ellipsoid { semi_axes } => {
                let s = Vec3::from(*semi_axes);
                let xs = x.component_div(&s);
                let us = u.component_div(&s);
                match quadratic_roots(us.norm_squared(), xs.dot(&us), xs.norm_squared() - 1.0) {
                    Some((lo, hi)) => clip(lo, hi, rho_max),
                    None => Vec::new(),
                }
            }
            Shape::Box { half_extents } => {
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                let mut empty = false;
                for i in 0..3 {
                    let h = half_extents[i];
                    if u[i] == 0.0 {
                        if x[i].abs() >= h {
                            empty = true;
                        }
                    } else {
                        let t1 = (-h - x[i]) / u[i];
                        let t2 = (h - x[i]) / u[i];
                        lo = lo.max(t1.min(t2));
                        hi = hi.min(t1.max(t2));
                    }
                }
                if empty || hi <= lo {
                    Vec::new()
                } else {
                    clip(lo, hi, rho_max)
                }
            }
            Shape::Radial(_) => self.march_radial(x, u, rho_max),
        };
        Ok(RaySegments { origin: *x, direction: *u, rho_max, segments })
    }

    fn march_radial(&self, x: &Point, u: &Vec3, rho_max: f64) -> Vec<(f64, f64)> {
        let inside = |rho: f64| self.contains(&(x + u * rho));
        let refine = |mut a: f64, mut b: f64, a_inside: bool| {
            while b - a > RADIAL_BISECTION_TOL {
                let m = 0.5 * (a + b);
                if inside(m) == a_inside {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let step = rho_max / RADIAL_MARCH_STEPS as f64;
        let mut segments = Vec::new();
        let mut state = inside(0.0);
        let mut start = if state { Some(0.0) } else { None };
        let mut prev = 0.0;
        for k in 1..=RADIAL_MARCH_STEPS {
            let rho = if k == RADIAL_MARCH_STEPS { rho_max } else { k as f64 * step };
            let now = inside(rho);
            if now != state {
                let crossing = refine(prev, rho, state);
                if now {
                    start = Some(crossing);
                } else if let Some(s) = start.take() {
                    segments.push((s, crossing));
                }
                state = now;
            }
            prev = rho;
        }
        if let Some(s) = start {
            segments.push((s, rho_max));
        }
        segments.retain(|(a, b)| b > a);
        segments
    }

    /// Distance to the boundary: exact for balls and boxes, otherwise the smallest
    /// exit distance over a 26x52 direction rule (an upper bound).
    pub fn distance_to_boundary(&self, x: &Point) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match &self.shape {
            Shape::Ball { radius } => radius - x.norm(),
            Shape::Box { half_extents } => (0..3).map(|i| half_extents[i] - x[i].abs()).fold(f64::INFINITY, f64::min),
            _ => {
                let rule = SphereRule::product(26, 52).expect("fixed rule");
                let reach = 2.0 * self.diameter;
                rule.nodes()
                    .iter()
                    .filter_map(|u| {
                        self.ray_segments(x, u, reach)
                            .ok()
                            .and_then(|s| s.segments().first().map(|seg| seg.1))
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Boundary point in direction `u` from the origin.
    pub fn boundary_point(&self, u: &Vec3) -> Point {
        u * self.boundary_distance(u)
    }

    /// Uniform sample from the domain by rejection in the circumball.
    pub fn sample_interior(&self, rng: &mut impl Rng) -> Result<Point> {
        for _ in 0..1_000_000 {
            let z = random_in_ball(rng, self.circumradius);
            if self.contains(&z) {
                return Ok(z);
            }
        }
        Err(Error::DegenerateDomain("rejection sampling failed after 10^6 attempts".into()))
    }

    /// Sampling check of star-shapedness with respect to the closed unit ball.
    ///
    /// Draws `b` uniformly in the unit ball and `z` uniformly in the domain and tests 16
    /// equispaced points of `[b, z]`; the endpoints are accepted. Passing is necessary,
    /// not sufficient.
    pub fn validate_star_shape(&self, n_samples: usize, seed: u64) -> Result<StarShapeReport> {
        if n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = StarShapeReport { samples: n_samples, ..Default::default() };
        for _ in 0..n_samples {
            let b = random_in_ball(&mut rng, 1.0);
            let z = self.sample_interior(&mut rng)?;
            let witness = (1..15).map(|k| k as f64 / 15.0).find(|&t| !self.contains(&(b + (z - b) * t)));
            if let Some(t) = witness {
                report.violations += 1;
                if report.witnesses.len() < MAX_WITNESSES {
                    report.witnesses.push((b, z, t));
                }
            }
        }
        Ok(report)
    }
}

impl fmt::Display for StarDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Ball { radius } => write!(f, "ball:R0={radius}"),
            Shape::Ellipsoid { semi_axes: [a, b, c] } => write!(f, "ellipsoid:a={a},b={b},c={c}"),
            Shape::Box { half_extents: [a, b, c] } => write!(f, "box:h={a},{b},{c}"),
            Shape::Radial(t) => write!(f, "radial:<{} table>", t.size()),
        }
    }
}

/// A shape placed at `center` in world coordinates: `Ω = center + shape`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacedDomain {
    pub shape: Shape,
    pub center: Point,
}

impl PlacedDomain {
    pub fn contains(&self, x: &Point) -> bool {
        shape_contains(&self.shape, &(x - self.center))
    }
}

fn shape_contains(shape: &Shape, z: &Point) -> bool {
    // the unit-ball condition is irrelevant for membership, so build the domain loosely
    let probe = StarDomain { shape: shape.clone(), circumradius: f64::INFINITY, diameter: f64::INFINITY };
    probe.contains(z)
}

fn scale_shape(shape: &Shape, s: f64) -> Shape {
    match shape {
        Shape::Ball { radius } => Shape::Ball { radius: radius * s },
        Shape::Ellipsoid { semi_axes } => Shape::Ellipsoid { semi_axes: semi_axes.map(|a| a * s) },
        Shape::Box { half_extents } => Shape::Box { half_extents: half_extents.map(|h| h * s) },
        Shape::Radial(t) => Shape::Radial(RadialTable {
            values: t.values.iter().map(|v| v * s).collect(),
            south: t.south * s,
            north: t.north * s,
            ..t.clone()
        }),
    }
}

/// The affine change of variables `x ↦ (x - c) / r`.
///
/// Fields transform as `g̃(x̃) = r g(c + r x̃)` and potentials as
/// `v(x) = ṽ((x - c) / r)`, so `curl ṽ = g̃` in normalized coordinates gives
/// `curl v = g` in world coordinates, and zero boundary values are preserved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalization {
    pub center: Point,
    pub radius: f64,
}

impl Normalization {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("normalization radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn to_unit(&self, x: &Point) -> Point {
        (x - self.center) / self.radius
    }

    pub fn from_unit(&self, x: &Point) -> Point {
        self.center + x * self.radius
    }

    /// `g̃(x̃) = r g(c + r x̃)`.
    pub fn pull_back_field(&self, g: &Vec3) -> Vec3 {
        g * self.radius
    }
}

/// Carries a domain star-shaped with respect to `B̄(c, r)` onto one star-shaped with
/// respect to `B̄(0, 1)`.
///
/// When the world shape is not centred at `c` the image is resampled as a radial
/// table (32x64) by casting rays from the new origin. The image is rejected unless
/// it encloses the closed unit ball along a 26x52 direction rule and passes a
/// 2000-sample star-shape check.
pub fn normalize_domain(c: &Point, r: f64, world: &PlacedDomain) -> Result<(Normalization, StarDomain)> {
    let map = Normalization::new(*c, r)?;
    let offset = (world.center - c) / r;
    let scaled = scale_shape(&world.shape, 1.0 / r);
    let image = if offset.norm() == 0.0 {
        match scaled {
            Shape::Ball { radius } => StarDomain::ball(radius),
            Shape::Ellipsoid { semi_axes: [a, b, cc] } => StarDomain::ellipsoid(a, b, cc),
            Shape::Box { half_extents: [a, b, cc] } => StarDomain::cuboid(a, b, cc),
            Shape::Radial(t) => StarDomain::radial(t),
        }
    } else {
        let loose = StarDomain { shape: scaled, circumradius: f64::INFINITY, diameter: f64::INFINITY };
        let start = -offset;
        if !loose.contains(&start) {
            return Err(Error::DegenerateDomain("normalized domain does not contain the origin".into()));
        }
        let reach = 4.0 * (offset.norm() + 1.0)
            + match &loose.shape {
                Shape::Ball { radius } => 2.0 * radius,
                Shape::Ellipsoid { semi_axes } => 2.0 * semi_axes.iter().copied().fold(0.0, f64::max),
                Shape::Box { half_extents } => 2.0 * Vec3::from(*half_extents).norm(),
                Shape::Radial(t) => 2.0 * t.max_value(),
            };
        let table = RadialTable::from_fn(SphereSize::new(32, 64)?, |u| {
            loose
                .ray_segments(&start, u, reach)
                .ok()
                .and_then(|s| s.segments().first().map(|seg| seg.1))
                .unwrap_or(0.0)
        })?;
        StarDomain::radial(table)
    }
    .map_err(|e| Error::DegenerateDomain(format!("normalized domain is not admissible: {e}")))?;

    let rule = SphereRule::product(26, 52)?;
    if let Some(u) = rule.nodes().iter().find(|u| !(image.boundary_distance(u) > 1.0)) {
        return Err(Error::DegenerateDomain(format!(
            "normalized domain does not enclose the unit ball (boundary distance {} along {u:?})",
            image.boundary_distance(u)
        )));
    }
    let report = image.validate_star_shape(2000, 0)?;
    if report.violations > 0 {
        return Err(Error::DegenerateDomain(format!(
            "normalized domain failed the star-shape check ({} violations)",
            report.violations
        )));
    }
    Ok((map, image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn contains_examples() {
        let ball = StarDomain::ball(2.0).unwrap();
        assert!(ball.contains(&Point::zeros()));
        assert!(!ball.contains(&Point::new(2.0, 0.0, 0.0)));
        let cube = StarDomain::cuboid(1.5, 1.5, 1.5).unwrap();
        assert!(cube.contains(&Point::new(1.4, 1.4, 1.4)));
        assert!(!cube.contains(&Point::new(1.5, 0.0, 0.0)));
    }

    #[test]
    fn ray_segment_examples() {
        let ball = StarDomain::ball(2.0).unwrap();
        let s = ball.ray_segments(&Point::zeros(), &Vec3::x(), 5.0).unwrap();
        assert_eq!(s.segments().len(), 1);
        assert_abs_diff_eq!(s.segments()[0].0, 0.0);
        assert_abs_diff_eq!(s.segments()[0].1, 2.0, epsilon = 1e-15);

        let s = ball.ray_segments(&Point::new(3.0, 0.0, 0.0), &(-Vec3::x()), 10.0).unwrap();
        assert_abs_diff_eq!(s.segments()[0].0, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.segments()[0].1, 5.0, epsilon = 1e-14);

        let ell = StarDomain::ellipsoid(2.0, 3.0, 4.0).unwrap();
        let s = ell.ray_segments(&Point::zeros(), &Vec3::z(), 10.0).unwrap();
        assert_abs_diff_eq!(s.segments()[0].1, 4.0, epsilon = 1e-14);

        assert!(matches!(
            ball.ray_segments(&Point::zeros(), &Vec3::new(1.0, 1.0, 0.0), 1.0),
            Err(Error::NonUnitDirection(_))
        ));
    }

    #[test]
    fn sizes_are_exact() {
        let ball = StarDomain::ball(2.5).unwrap();
        assert_eq!(ball.diameter(), 5.0);
        let ell = StarDomain::ellipsoid(2.0, 2.5, 3.0).unwrap();
        assert_eq!(ell.circumradius(), 3.0);
        assert!(ell.diameter() <= 2.0 * ell.circumradius());
    }

    #[test]
    fn constructors_reject_small_shapes() {
        assert!(StarDomain::ball(1.0).is_err());
        assert!(StarDomain::ellipsoid(2.0, 0.9, 3.0).is_err());
        assert!(StarDomain::cuboid(1.5, 1.5, 1.0).is_err());
    }

    #[test]
    fn parse_specs() {
        assert_eq!(StarDomain::parse("ball:R0=2").unwrap(), StarDomain::ball(2.0).unwrap());
        assert_eq!(
            StarDomain::parse("ellipsoid:a=2,b=2.5,c=3").unwrap(),
            StarDomain::ellipsoid(2.0, 2.5, 3.0).unwrap()
        );
        assert_eq!(StarDomain::parse("box:h=1.5,1.5,1.5").unwrap(), StarDomain::cuboid(1.5, 1.5, 1.5).unwrap());
        assert!(StarDomain::parse("torus:R=2").is_err());
        assert!(StarDomain::parse("ball:R0=abc").is_err());
    }

    #[test]
    fn radial_table_csv_round_trip() {
        let size = SphereSize::new(6, 10).unwrap();
        let table = RadialTable::from_fn(size, |u| 1.5 + 0.2 * u.z).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        table.write_csv(&path).unwrap();
        let back = RadialTable::from_csv(&path).unwrap();
        assert_eq!(back.size(), size);
        for (a, b) in table.values().iter().zip(back.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let domain = StarDomain::parse(&format!("radial:file={}", path.display())).unwrap();
        assert!(domain.contains(&Point::new(0.0, 0.0, 1.6)));
        assert!(!domain.contains(&Point::new(0.0, 0.0, -1.4)));
    }

    #[test]
    fn radial_sphere_matches_ball_segments() {
        let table = RadialTable::from_fn(SphereSize::new(8, 16).unwrap(), |_| 2.0).unwrap();
        let domain = StarDomain::radial(table).unwrap();
        let s = domain.ray_segments(&Point::new(3.0, 0.0, 0.0), &(-Vec3::x()), 10.0).unwrap();
        assert_eq!(s.segments().len(), 1);
        assert_abs_diff_eq!(s.segments()[0].0, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.segments()[0].1, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn star_shape_validation_on_convex_shapes() {
        for d in [StarDomain::ball(2.0).unwrap(), StarDomain::cuboid(1.5, 1.5, 1.5).unwrap()] {
            let r = d.validate_star_shape(1000, 7).unwrap();
            assert_eq!(r.violations, 0, "{d}");
        }
        assert!(StarDomain::ball(2.0).unwrap().validate_star_shape(0, 1).is_err());
    }

    #[test]
    fn normalization_examples() {
        let world = PlacedDomain { shape: Shape::Ball { radius: 4.0 }, center: Point::new(1.0, 0.0, 0.0) };
        let (map, image) = normalize_domain(&Point::new(1.0, 0.0, 0.0), 2.0, &world).unwrap();
        assert_eq!(image, StarDomain::ball(2.0).unwrap());
        let x = Point::new(0.3, -1.7, 2.2);
        let back = map.from_unit(&map.to_unit(&x));
        assert_abs_diff_eq!((back - x).norm(), 0.0, epsilon = 1e-14);

        let identity = Normalization::new(Point::zeros(), 1.0).unwrap();
        assert_eq!(identity.to_unit(&x), x);
        assert!(Normalization::new(Point::zeros(), 0.0).is_err());
        assert!(normalize_domain(&Point::zeros(), -1.0, &world).is_err());
    }

    #[test]
    fn normalization_with_offset_resamples() {
        // ball of radius 5 centred at (0.5, 0, 0), normalized about the origin with r = 2
        let world = PlacedDomain { shape: Shape::Ball { radius: 5.0 }, center: Point::new(0.5, 0.0, 0.0) };
        let (_, image) = normalize_domain(&Point::zeros(), 2.0, &world).unwrap();
        // exact boundary distance along +x is (5 + 0.5) / 2
        let d = image.boundary_distance(&Vec3::x());
        assert!((d - 2.75).abs() < 0.02, "{d}");
        assert!(image.contains(&Point::new(2.7, 0.0, 0.0)));
        assert!(!image.contains(&Point::new(-2.3, 0.0, 0.0)));
    }

    proptest::proptest! {
        #[test]
        fn segments_from_the_unit_ball_stay_inside(
            u in proptest::array::uniform3(-1.0f64..1.0),
            v in proptest::array::uniform3(-1.0f64..1.0),
            s in 0.0f64..1.0,
            t in 0.0f64..1.0,
        ) {
            let domain = StarDomain::ellipsoid(2.0, 2.5, 3.0).unwrap();
            let (u, v) = (Vec3::from(u), Vec3::from(v));
            proptest::prop_assume!(u.norm() > 1e-3 && v.norm() > 1e-3);
            let x = domain.boundary_point(&v.normalize()) * (0.999 * s.sqrt());
            let z = u.normalize() * t;
            proptest::prop_assert!(domain.contains(&x));
            proptest::prop_assert!(domain.contains(&(0.5 * (x + z))));
        }
    }
}
