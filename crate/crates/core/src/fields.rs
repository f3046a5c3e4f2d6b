//! Analytic test fields and the sampled modulus-of-continuity diagnostics.

use std::fmt;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{random_unit_vector, StarDomain};
use crate::{Error, Point, Result, Vec3};

type VecFn = Arc<dyn Fn(&Point) -> Vec3 + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Declared regularity class of a field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Smoothness {
    Smooth,
    Hoelder(f64),
    Dini,
    NonDini,
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Smooth => write!(f, "smooth"),
            Smoothness::Hoelder(a) => write!(f, "hoelder({a})"),
            Smoothness::Dini => write!(f, "dini"),
            Smoothness::NonDini => write!(f, "non-dini"),
        }
    }
}

#[derive(Clone)]
pub struct ScalarField {
    name: String,
    f: ScalarFn,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("name", &self.name).finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        (self.f)(x)
    }

    /// `F - c`.
    pub fn shifted(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self::new(format!("{} - {c}", self.name), move |x| f(x) - c)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        let f = self.f.clone();
        Self::new(format!("{lambda} * {}", self.name), move |x| lambda * f(x))
    }
}

#[derive(Clone)]
pub struct VectorField {
    name: String,
    smoothness: Smoothness,
    f: VecFn,
    div: Option<ScalarFn>,
    curl: Option<VecFn>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .field("div", &self.div.is_some())
            .field("curl", &self.curl.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn new(
        name: impl Into<String>,
        smoothness: Smoothness,
        f: impl Fn(&Point) -> Vec3 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), smoothness, f: Arc::new(f), div: None, curl: None }
    }

    pub fn with_div(mut self, div: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.div = Some(Arc::new(div));
        self
    }

    pub fn with_curl(mut self, curl: impl Fn(&Point) -> Vec3 + Send + Sync + 'static) -> Self {
        self.curl = Some(Arc::new(curl));
        self
    }

    pub fn zero() -> Self {
        Self::new("zero", Smoothness::Smooth, |_| Vec3::zeros()).with_div(|_| 0.0).with_curl(|_| Vec3::zeros())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> Vec3 {
        (self.f)(x)
    }

    pub fn has_div(&self) -> bool {
        self.div.is_some()
    }

    pub fn div_at(&self, x: &Point) -> Option<f64> {
        self.div.as_ref().map(|d| d(x))
    }

    pub fn curl_at(&self, x: &Point) -> Option<Vec3> {
        self.curl.as_ref().map(|c| c(x))
    }

    /// The analytic divergence as a scalar field.
    pub fn divergence(&self) -> Option<ScalarField> {
        let d = self.div.clone()?;
        Some(ScalarField { name: format!("div {}", self.name), f: d })
    }

    /// `a g1 + b g2`; analytic derivatives are kept when both operands carry them.
    pub fn linear_combination(a: f64, g1: &VectorField, b: f64, g2: &VectorField) -> Self {
        let (f1, f2) = (g1.f.clone(), g2.f.clone());
        let div = match (&g1.div, &g2.div) {
            (Some(d1), Some(d2)) => {
                let (d1, d2) = (d1.clone(), d2.clone());
                Some(Arc::new(move |x: &Point| a * d1(x) + b * d2(x)) as ScalarFn)
            }
            _ => None,
        };
        let curl = match (&g1.curl, &g2.curl) {
            (Some(c1), Some(c2)) => {
                let (c1, c2) = (c1.clone(), c2.clone());
                Some(Arc::new(move |x: &Point| c1(x) * a + c2(x) * b) as VecFn)
            }
            _ => None,
        };
        let smoothness = match (g1.smoothness, g2.smoothness) {
            (Smoothness::Smooth, s) | (s, Smoothness::Smooth) => s,
            (s, _) => s,
        };
        Self {
            name: format!("{a} * {} + {b} * {}", g1.name, g2.name),
            smoothness,
            f: Arc::new(move |x| f1(x) * a + f2(x) * b),
            div,
            curl,
        }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = Self::linear_combination(lambda, self, 0.0, &Self::zero());
        out.name = format!("{lambda} * {}", self.name);
        out.smoothness = self.smoothness;
        out
    }

    /// Maximum of `|g|_max` (largest component) over `n` seeded interior samples.
    pub fn sup_norm_on(&self, domain: &StarDomain, n: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sup: f64 = 0.0;
        for _ in 0..n {
            let x = domain.sample_interior(&mut rng)?;
            sup = sup.max(self.eval(&x).amax());
        }
        Ok(sup)
    }
}

/// `|t|^{1/2}`.
fn sqrt_abs(t: f64) -> f64 {
    t.abs().sqrt()
}

/// `1 / (1 - log|t|)` for `0 < |t| <= 1`, `0` at the origin, `1` beyond.
pub fn log_modulus(t: f64) -> f64 {
    let a = t.abs();
    if a == 0.0 {
        0.0
    } else if a >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 - a.ln())
    }
}

/// Names accepted by [`registry_get`].
pub const REGISTRY_NAMES: [&str; 8] = ["zero", "constant", "rigid", "abc", "trig", "hoelder", "nonsol", "nondini"];

/// Built-in field by spec string, e.g. `abc` or `constant:1,0,0`.
pub fn registry_get(spec: &str) -> Result<VectorField> {
    let spec = spec.trim();
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (spec, None),
    };
    if args.is_some() && name != "constant" {
        return Err(Error::Parse(format!("field `{name}` takes no parameters")));
    }
    let field = match name {
        "zero" => VectorField::zero(),
        "constant" => {
            let c = match args {
                None => Vec3::x(),
                Some(a) => {
                    let parts: Vec<f64> = a
                        .split(',')
                        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("constant field component `{s}`: {e}"))))
                        .collect::<Result<_>>()?;
                    if parts.len() != 3 {
                        return Err(Error::Parse(format!("constant field needs 3 components, got {}", parts.len())));
                    }
                    Vec3::new(parts[0], parts[1], parts[2])
                }
            };
            VectorField::new(format!("constant:{},{},{}", c.x, c.y, c.z), Smoothness::Smooth, move |_| c)
                .with_div(|_| 0.0)
                .with_curl(|_| Vec3::zeros())
        }
        "rigid" => VectorField::new("rigid", Smoothness::Smooth, |x| Vec3::new(-x.y, x.x, 0.0))
            .with_div(|_| 0.0)
            .with_curl(|_| Vec3::new(0.0, 0.0, 2.0)),
        "abc" => {
            let abc = |x: &Point| Vec3::new(x.z.sin() + x.y.cos(), x.x.sin() + x.z.cos(), x.y.sin() + x.x.cos());
            VectorField::new("abc", Smoothness::Smooth, abc).with_div(|_| 0.0).with_curl(abc)
        }
        "trig" => VectorField::new("trig", Smoothness::Smooth, |x| Vec3::new(x.z.sin(), x.x.sin(), x.y.sin()))
            .with_div(|_| 0.0)
            .with_curl(|x| Vec3::new(x.y.cos(), x.z.cos(), x.x.cos())),
        "hoelder" => VectorField::new("hoelder", Smoothness::Hoelder(0.5), |x| {
            Vec3::new(sqrt_abs(x.y), sqrt_abs(x.z), sqrt_abs(x.x))
        })
        .with_div(|_| 0.0),
        "nonsol" => VectorField::new("nonsol", Smoothness::Smooth, |x| Vec3::new(x.x.sin(), 0.0, 0.0))
            .with_div(|x| x.x.cos())
            .with_curl(|_| Vec3::zeros()),
        "nondini" => VectorField::new("nondini", Smoothness::NonDini, |x| {
            Vec3::new(log_modulus(x.y), log_modulus(x.z), log_modulus(x.x))
        })
        .with_div(|_| 0.0),
        other => return Err(Error::UnknownField(other.to_string())),
    };
    Ok(field)
}

/// Options of the sampled modulus estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulusOptions {
    /// Random pairs per bin before refinement.
    pub n_pairs: usize,
    pub n_bins: usize,
    pub rho_min: f64,
    /// Largest bin radius; `None` uses the domain diameter.
    pub rho_max: Option<f64>,
    /// Best pairs per bin handed to the hill climb.
    pub n_refine: usize,
    /// Perturbations tried per refined pair.
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for ModulusOptions {
    fn default() -> Self {
        Self { n_pairs: 1000, n_bins: 40, rho_min: 1e-7, rho_max: None, n_refine: 4, refine_steps: 400, seed: 0 }
    }
}

/// Estimated modulus of continuity on log-spaced radii.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulusTable {
    pub radii: Vec<f64>,
    /// Running maximum of the per-bin estimates.
    pub omega: Vec<f64>,
    /// Per-bin estimates before the isotonic correction.
    pub raw: Vec<f64>,
    pub diameter: f64,
}

#[derive(Clone, Copy, Debug)]
struct Pair {
    x: Point,
    y: Point,
    value: f64,
}

/// `sup |f(x) - f(y)|` over sampled pairs with `|x - y| ∈ (ρ/√2, ρ]`, for log-spaced
/// `ρ`. Each bin starts from random pairs and then hill-climbs the best ones by random
/// translations, rotations and stretches on log-uniform scales; the result is a lower
/// bound of the true modulus.
pub fn modulus_of_continuity(
    f: &(dyn Fn(&Point) -> Vec3 + Sync),
    domain: &StarDomain,
    opts: &ModulusOptions,
) -> Result<ModulusTable> {
    if opts.n_pairs < 1000 {
        return Err(Error::InvalidArgument(format!("modulus estimator needs >= 1000 pairs, got {}", opts.n_pairs)));
    }
    let diameter = domain.diameter();
    let rho_max = opts.rho_max.unwrap_or(diameter);
    if opts.n_bins < 2 || !(opts.rho_min > 0.0 && rho_max > opts.rho_min) {
        return Err(Error::InvalidArgument(format!(
            "bad modulus bins: n = {}, range [{}, {rho_max}]",
            opts.n_bins, opts.rho_min
        )));
    }
    let (llo, lhi) = (opts.rho_min.ln(), rho_max.ln());
    let radii: Vec<f64> =
        (0..opts.n_bins).map(|b| (llo + (lhi - llo) * b as f64 / (opts.n_bins - 1) as f64).exp()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut raw = Vec::with_capacity(radii.len());
    for &rho in &radii {
        raw.push(bin_estimate(f, domain, rho, diameter, opts, &mut rng)?);
    }
    let mut omega = raw.clone();
    for b in 1..omega.len() {
        omega[b] = omega[b].max(omega[b - 1]);
    }
    Ok(ModulusTable { radii, omega, raw, diameter })
}

fn bin_estimate(
    f: &(dyn Fn(&Point) -> Vec3 + Sync),
    domain: &StarDomain,
    rho: f64,
    diameter: f64,
    opts: &ModulusOptions,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let lo = rho / std::f64::consts::SQRT_2;
    let diff = |x: &Point, y: &Point| (f(x) - f(y)).norm();
    let mut pairs: Vec<Pair> = Vec::with_capacity(opts.n_pairs);
    let mut attempts = 0usize;
    while pairs.len() < opts.n_pairs {
        attempts += 1;
        if attempts > 100 * opts.n_pairs {
            break;
        }
        let x = domain.sample_interior(rng)?;
        let y = x + random_unit_vector(rng) * rng.random_range(lo..=rho);
        if domain.contains(&y) {
            pairs.push(Pair { x, y, value: diff(&x, &y) });
        }
    }
    if pairs.is_empty() {
        return Ok(0.0);
    }
    pairs.sort_by(|a, b| b.value.total_cmp(&a.value));
    let (s_lo, s_hi) = ((rho / 10.0).ln(), diameter.max(rho).ln());
    let mut best: f64 = pairs[0].value;
    for start in pairs.iter().take(opts.n_refine) {
        let mut cur = *start;
        for _ in 0..opts.refine_steps {
            let scale = rng.random_range(s_lo..=s_hi).exp();
            let mid = (cur.x + cur.y) * 0.5 + random_unit_vector(rng) * scale;
            let axis = match rng.random_range(0..3) {
                0 => cur.y - cur.x,
                _ => (cur.y - cur.x).normalize() + random_unit_vector(rng) * (scale / diameter).min(1.0),
            };
            let len = if rng.random_bool(0.5) { (cur.y - cur.x).norm() } else { rng.random_range(lo..=rho) };
            let half = axis.normalize() * (0.5 * len);
            let (x, y) = (mid - half, mid + half);
            if !(domain.contains(&x) && domain.contains(&y)) {
                continue;
            }
            let value = diff(&x, &y);
            if value > cur.value {
                cur = Pair { x, y, value };
            }
        }
        best = best.max(cur.value);
    }
    Ok(best)
}

impl ModulusTable {
    /// `ω̂(ρ)` by log-log interpolation, constant beyond the table.
    pub fn eval(&self, rho: f64) -> f64 {
        let n = self.radii.len();
        if rho <= self.radii[0] {
            return self.omega[0];
        }
        if rho >= self.radii[n - 1] {
            return self.omega[n - 1];
        }
        let b = self.radii.partition_point(|&r| r <= rho).min(n - 1);
        let (r0, r1) = (self.radii[b - 1], self.radii[b]);
        let (w0, w1) = (self.omega[b - 1], self.omega[b]);
        let t = (rho / r0).ln() / (r1 / r0).ln();
        if w0 > 0.0 && w1 > 0.0 {
            (w0.ln() + t * (w1 / w0).ln()).exp()
        } else {
            w0 + t * (w1 - w0)
        }
    }

    /// Least-squares slope of `log ω̂` against `log ρ` over bins in `[lo, hi]` with
    /// positive estimates.
    pub fn loglog_slope(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .radii
            .iter()
            .zip(&self.omega)
            .filter(|(r, w)| **r >= lo && **r <= hi && **w > 0.0)
            .map(|(r, w)| (r.ln(), w.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
        let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
        Some(sxy / sxx)
    }
}

/// Truncated Dini integrals for a decreasing sequence of lower limits.
#[derive(Clone, Debug, PartialEq)]
pub struct DiniReport {
    pub rho_min: Vec<f64>,
    /// `∫_{ρ_min}^{diam} ω̂(ρ)/ρ dρ` for each lower limit.
    pub values: Vec<f64>,
    /// Growth between consecutive lower limits.
    pub increments: Vec<f64>,
    pub diverging: bool,
}

impl DiniReport {
    pub fn value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Panels per unit of `log ρ` in the midpoint rule.
const DINI_PANELS_PER_LOG: f64 = 20.0;

/// Midpoint rule in `log ρ` on `[ρ_min, diam]` for each `ρ_min`; the integral is
/// flagged diverging when every increment exceeds half of the one before it.
pub fn dini_integral(table: &ModulusTable, rho_mins: &[f64]) -> Result<DiniReport> {
    if table.radii.is_empty() {
        return Err(Error::InvalidArgument("empty modulus table".into()));
    }
    if rho_mins.is_empty() || rho_mins.windows(2).any(|w| !(w[1] < w[0])) || rho_mins.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument(format!("lower limits must be positive and decreasing: {rho_mins:?}")));
    }
    let top = table.diameter.ln();
    let mut values = Vec::with_capacity(rho_mins.len());
    for &r in rho_mins {
        let span = top - r.ln();
        if span <= 0.0 {
            values.push(0.0);
            continue;
        }
        let n = (span * DINI_PANELS_PER_LOG).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let s: f64 = (0..n).map(|k| table.eval((r.ln() + (k as f64 + 0.5) * h).exp())).sum();
        values.push(s * h);
    }
    let increments: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let diverging =
        increments.len() >= 2 && increments.windows(2).all(|w| w[0] > 0.0 && w[1] > 0.5 * w[0]);
    Ok(DiniReport { rho_min: rho_mins.to_vec(), values, increments, diverging })
}

/// `1e-2, 1e-3, …, 1e-6`.
pub fn default_dini_limits() -> Vec<f64> {
    (2..=6).map(|k| 10f64.powi(-k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fd_div(g: &VectorField, x: &Point, h: f64) -> f64 {
        (0..3).map(|i| {
            let e = Vec3::ith(i, h);
            (g.eval(&(x + e))[i] - g.eval(&(x - e))[i]) / (2.0 * h)
        })
        .sum()
    }

    fn fd_curl(g: &VectorField, x: &Point, h: f64) -> Vec3 {
        let d = |i: usize, l: usize| {
            let e = Vec3::ith(l, h);
            (g.eval(&(x + e))[i] - g.eval(&(x - e))[i]) / (2.0 * h)
        };
        Vec3::new(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1))
    }

    fn away_from_planes(rng: &mut ChaCha8Rng, domain: &StarDomain) -> Point {
        loop {
            let x = domain.sample_interior(rng).unwrap();
            if x.iter().all(|c| c.abs() > 1e-3) {
                return x;
            }
        }
    }

    #[test]
    fn registry_parses_and_rejects() {
        assert_eq!(registry_get("constant:1,2,3").unwrap().eval(&Point::zeros()), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(registry_get("constant").unwrap().eval(&Point::zeros()), Vec3::x());
        assert!(matches!(registry_get("vortex"), Err(Error::UnknownField(_))));
        assert!(registry_get("constant:1,2").is_err());
        assert!(registry_get("rigid:1").is_err());
        for name in REGISTRY_NAMES {
            assert!(registry_get(name).unwrap().has_div(), "{name}");
        }
    }

    #[test]
    fn solenoidal_fields_pass_fd_divergence() {
        let domain = StarDomain::ball(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for name in ["constant", "rigid", "abc", "trig", "hoelder", "nondini"] {
            let g = registry_get(name).unwrap();
            for _ in 0..100 {
                let x = away_from_planes(&mut rng, &domain);
                assert_eq!(g.div_at(&x), Some(0.0));
                assert!(fd_div(&g, &x, 1e-5).abs() <= 1e-6, "{name} at {x:?}");
            }
        }
        let rigid = registry_get("rigid").unwrap();
        for _ in 0..10 {
            let x = domain.sample_interior(&mut rng).unwrap();
            assert!(fd_div(&rigid, &x, 1e-3).abs() <= 1e-10);
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let domain = StarDomain::ball(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in ["abc", "trig", "rigid", "nonsol"] {
            let g = registry_get(name).unwrap();
            for _ in 0..20 {
                let x = domain.sample_interior(&mut rng).unwrap();
                let c = g.curl_at(&x).unwrap();
                assert!((fd_curl(&g, &x, 1e-4) - c).amax() <= 1e-6, "{name}");
                assert!((fd_div(&g, &x, 1e-4) - g.div_at(&x).unwrap()).abs() <= 1e-6, "{name}");
            }
        }
        let abc = registry_get("abc").unwrap();
        let x = Point::new(0.3, -0.7, 1.1);
        assert_eq!(abc.curl_at(&x).unwrap(), abc.eval(&x));
    }

    #[test]
    fn linear_combination_keeps_metadata() {
        let g = VectorField::linear_combination(2.0, &registry_get("rigid").unwrap(), -1.0, &registry_get("nonsol").unwrap());
        let x = Point::new(0.2, 0.4, -0.1);
        assert_abs_diff_eq!((g.eval(&x) - Vec3::new(-0.8 - 0.2f64.sin(), 0.4, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.div_at(&x).unwrap(), -(0.2f64.cos()), epsilon = 1e-15);
        let h = VectorField::linear_combination(1.0, &registry_get("hoelder").unwrap(), 1.0, &registry_get("trig").unwrap());
        assert!(h.curl_at(&x).is_none());
        assert_eq!(h.smoothness(), Smoothness::Hoelder(0.5));
    }

    #[test]
    fn log_modulus_profile() {
        assert_eq!(log_modulus(0.0), 0.0);
        assert_eq!(log_modulus(1.0), 1.0);
        assert_eq!(log_modulus(-3.0), 1.0);
        assert_abs_diff_eq!(log_modulus(-(-1.0f64).exp()), 0.5, epsilon = 1e-15);
    }

    fn quick() -> ModulusOptions {
        ModulusOptions { n_bins: 13, rho_min: 1e-4, rho_max: Some(1.0), ..ModulusOptions::default() }
    }

    #[test]
    fn modulus_of_constant_is_zero() {
        let domain = StarDomain::ball(2.0).unwrap();
        let t = modulus_of_continuity(&|_| Vec3::new(1.0, 2.0, 3.0), &domain, &quick()).unwrap();
        assert!(t.omega.iter().all(|&w| w == 0.0));
        let d = dini_integral(&t, &default_dini_limits()).unwrap();
        assert_eq!(d.value(), 0.0);
        assert!(!d.diverging);
    }

    #[test]
    fn modulus_of_linear_function() {
        let domain = StarDomain::ball(2.0).unwrap();
        let grad = Vec3::new(0.6, 0.0, 0.8);
        let t = modulus_of_continuity(&move |x| Vec3::new(grad.dot(x), 0.0, 0.0), &domain, &quick()).unwrap();
        for (r, w) in t.radii.iter().zip(&t.omega) {
            assert!(*w >= 0.9 * r && *w <= r * (1.0 + 1e-12), "rho = {r}, omega = {w}");
        }
    }

    #[test]
    fn modulus_of_square_root() {
        let domain = StarDomain::ball(2.0).unwrap();
        let t = modulus_of_continuity(&|x| Vec3::new(x.x.abs().sqrt(), 0.0, 0.0), &domain, &quick()).unwrap();
        for (r, w) in t.radii.iter().zip(&t.omega) {
            let ratio = w / r.sqrt();
            assert!((0.7..=1.3).contains(&ratio), "rho = {r}, ratio = {ratio}");
        }
        assert!(t.omega.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn modulus_scales_with_field() {
        let domain = StarDomain::ball(2.0).unwrap();
        let g = registry_get("trig").unwrap();
        let g2 = g.scaled(2.0);
        let a = modulus_of_continuity(&|x| g.eval(x), &domain, &quick()).unwrap();
        let b = modulus_of_continuity(&|x| g2.eval(x), &domain, &quick()).unwrap();
        for (wa, wb) in a.omega.iter().zip(&b.omega) {
            assert_eq!(2.0 * wa, *wb);
        }
    }

    #[test]
    fn dini_rejects_bad_limits() {
        let t = ModulusTable { radii: vec![0.1, 1.0], omega: vec![0.1, 1.0], raw: vec![0.1, 1.0], diameter: 4.0 };
        assert!(dini_integral(&t, &[1e-3, 1e-2]).is_err());
        assert!(dini_integral(&t, &[]).is_err());
        // ω̂(ρ) = ρ on [0.1, 1], so the integral from 0.1 to 1 is 0.9 plus the flat tail ln 4
        let d = dini_integral(&t, &[0.1]).unwrap();
        assert_abs_diff_eq!(d.value(), 0.9 + 4f64.ln(), epsilon = 1e-3);
    }
}
