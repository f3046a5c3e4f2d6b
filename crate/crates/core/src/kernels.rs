//! Line-integral kernels of the curl and divergence inverses.
//!
//! With `d = x - y`,
//!
//! ```text
//! N_i(x, y)          = d_i ∫_1^∞ ψ(y + αd) α(α-1) dα
//! Ñ_i(x, y)          = d_i ∫_1^∞ ψ(y + αd) α²     dα
//! ∂_{x_m} N_i(x, y)  = δ_im ∫_1^∞ ψ(y + αd) α(α-1) dα + d_i ∫_1^∞ ∂_mψ(y + αd) α²(α-1) dα
//! aux_{i,m}(x, y)    = d_i ∫_1^∞ ∂_mψ(y + αd) α(α-1) dα
//! ```
//!
//! The integrands vanish unless `y + αd` lies in the support ball `B(0, r_ψ)`, which
//! for a straight line is a single interval of `α` found by solving a quadratic.
//! Gauss-Legendre is applied on that interval only.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{random_unit_vector, StarDomain};
use crate::quadrature::{GaussRule, Pair};
use crate::smoothing::Mollifier;
use crate::{Error, Mat3, Point, Result, Vec3};

/// Smallest `|x - y|` the kernels accept.
pub const SINGULAR_GUARD: f64 = 1e-14;

/// Effective support `[lo, hi]` (with `1 <= lo < hi`) of the `α`-integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl AlphaInterval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Solves `|d|² α² + 2 (y·d) α + |y|² - r² < 0` on `α >= 1`. `None` when the half-line
/// `{y + α d : α >= 1}` misses `B(0, r)`.
pub fn alpha_support(x: &Point, y: &Point, r_psi: f64) -> Result<Option<AlphaInterval>> {
    Ok(alpha_chord(x, y, r_psi)?.map(|c| AlphaInterval { lo: c.lo, hi: c.hi }))
}

fn alpha_chord(x: &Point, y: &Point, r_psi: f64) -> Result<Option<Chord>> {
    let d = x - y;
    let a = d.norm_squared();
    if a.sqrt() < SINGULAR_GUARD {
        return Err(Error::SingularPoint(a.sqrt()));
    }
    Ok(line_ball_chord(a, y.dot(&d), y.norm_squared() - r_psi * r_psi, 1.0, r_psi * r_psi))
}

/// The part `[lo, hi]` with `lo >= t_min` of the chord `{t : a t² + 2 b t + c < 0}` of
/// the line `p + t v` (`a = |v|²`, `b = p·v`, `c = |p|² - r²`) through `B(0, r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Chord {
    lo: f64,
    hi: f64,
    center: f64,
    half: f64,
    /// `1 - |p + t v|²/r²` at the chord midpoint, in `(0, 1]`.
    depth: f64,
}

fn line_ball_chord(a: f64, b: f64, c: f64, t_min: f64, r2: f64) -> Option<Chord> {
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let q = -(b + b.signum() * sq);
    let (r1, r2_) = if q != 0.0 { (q / a, c / q) } else { (-sq / a, sq / a) };
    let (t_lo, t_hi) = (r1.min(r2_), r1.max(r2_));
    let lo = t_lo.max(t_min);
    (t_hi > lo).then(|| Chord {
        lo,
        hi: t_hi,
        center: 0.5 * (t_lo + t_hi),
        half: 0.5 * (t_hi - t_lo),
        depth: (disc / (a * r2)).min(1.0),
    })
}

/// How the inner line integral places its Gauss-Legendre nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum InnerRule {
    /// Nodes affinely mapped onto the support interval.
    Plain,
    /// Nodes placed in `s` with `t = tanh(σ s)` along the chord, `σ` chosen from the
    /// chord depth so the truncated tails are below `exp(-TANH_TAIL)`. The bump's flat
    /// ends are compressed and its shoulders resolved.
    Tanh,
    /// `Plain` for `N` and `Ñ`, `Tanh` for `∂_x N` and the auxiliary kernels. The
    /// plain error varies slowly with `x`, which finite differences of `Rg` and `BF`
    /// need; the derivative integrands carry `∇ψ` and need the tanh nodes.
    #[default]
    Mixed,
}

impl InnerRule {
    pub const ALL: [InnerRule; 3] = [InnerRule::Plain, InnerRule::Tanh, InnerRule::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            InnerRule::Plain => "plain",
            InnerRule::Tanh => "tanh",
            InnerRule::Mixed => "mixed",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        InnerRule::ALL
            .into_iter()
            .find(|r| r.name() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown inner rule `{name}` (plain, tanh, mixed)")))
    }

    fn for_values(self) -> Self {
        if self == InnerRule::Mixed { InnerRule::Plain } else { self }
    }

    fn for_derivatives(self) -> Self {
        if self == InnerRule::Mixed { InnerRule::Tanh } else { self }
    }
}

/// Exponent of the tail cut by the tanh substitution.
const TANH_TAIL: f64 = 30.0;

/// `max(s, -1 - w)` smoothed by a softplus of sharpness `k`; never below `s`, so the
/// rule never starts before `α = 1`, and smooth in `s` so the nodes move smoothly with
/// the evaluation point.
fn smooth_floor(s: f64) -> f64 {
    const W: f64 = 0.25;
    const K: f64 = 16.0;
    let floor = -1.0 - W;
    let z = K * (s - floor);
    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    floor + softplus / K
}

/// Parameterisations of the curl kernel's line integral. All three describe the same
/// function of `(x, y)`; `Xi` and `Radial` are the substitutions `ξ = α|d|` and
/// `r = ξ - |d|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelForm {
    /// `d_i ∫_1^∞ ψ(y + αd) α(α-1) dα`
    Alpha,
    /// `d_i/|d|³ ∫_{|d|}^∞ ψ(y + ξ e) ξ(ξ - |d|) dξ`, `e = d/|d|`
    Xi,
    /// `d_i/|d|³ ∫_0^∞ ψ(x + r e) r(r + |d|) dr`
    Radial,
}

impl KernelForm {
    pub const ALL: [KernelForm; 3] = [KernelForm::Alpha, KernelForm::Xi, KernelForm::Radial];

    pub fn name(&self) -> &'static str {
        match self {
            KernelForm::Alpha => "alpha",
            KernelForm::Xi => "xi",
            KernelForm::Radial => "r",
        }
    }
}

/// Every kernel value at one pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelEvaluation {
    pub n: Vec3,
    pub n_tilde: Vec3,
    /// Entry `(i, m)` is `∂_{x_m} N_i`.
    pub grad_n: Mat3,
    /// Column `m` is the auxiliary kernel generated by `∂_mψ`.
    pub aux: Mat3,
}

impl KernelEvaluation {
    fn zero() -> Self {
        Self { n: Vec3::zeros(), n_tilde: Vec3::zeros(), grad_n: Mat3::zeros(), aux: Mat3::zeros() }
    }
}

/// Evaluates kernels with a fixed Gauss-Legendre order for the inner integral.
#[derive(Clone, Debug)]
pub struct KernelEvaluator {
    mollifier: Mollifier,
    rule: GaussRule,
    inner: InnerRule,
}

impl KernelEvaluator {
    pub fn new(mollifier: Mollifier, n_alpha: usize) -> Result<Self> {
        if n_alpha < 2 {
            return Err(Error::InvalidArgument(format!("n_alpha must be >= 2, got {n_alpha}")));
        }
        Ok(Self { mollifier, rule: GaussRule::legendre(n_alpha)?, inner: InnerRule::default() })
    }

    pub fn with_inner_rule(mut self, inner: InnerRule) -> Self {
        self.inner = inner;
        self
    }

    pub fn inner_rule(&self) -> InnerRule {
        self.inner
    }

    /// Calls `f(t, w)` for every node of the inner rule on `chord`.
    #[inline]
    fn for_each_node(&self, inner: InnerRule, chord: &Chord, mut f: impl FnMut(f64, f64)) {
        let sigma = if inner == InnerRule::Tanh && TANH_TAIL * chord.depth > 1.0 {
            (TANH_TAIL * chord.depth).sqrt().acosh()
        } else {
            0.0
        };
        let t0 = (chord.lo - chord.center) / chord.half;
        let s_raw = if t0 <= -1.0 { f64::NEG_INFINITY } else { t0.atanh() / sigma };
        let s0 = smooth_floor(s_raw);
        if sigma == 0.0 || !(s0 < 1.0) {
            for (t, w) in self.rule.mapped(chord.lo, chord.hi) {
                f(t, w);
            }
            return;
        }
        for (s, w) in self.rule.mapped(s0, 1.0) {
            let th = (sigma * s).tanh();
            f(chord.center + chord.half * th, w * chord.half * sigma * (1.0 - th * th));
        }
    }

    fn integrate<T: crate::quadrature::Accumulate>(
        &self,
        inner: InnerRule,
        chord: &Chord,
        mut g: impl FnMut(f64) -> T,
    ) -> T {
        let mut acc = T::zero();
        self.for_each_node(inner, chord, |t, w| acc += g(t) * w);
        acc
    }

    fn integrate_value<T: crate::quadrature::Accumulate>(&self, chord: &Chord, g: impl FnMut(f64) -> T) -> T {
        self.integrate(self.inner.for_values(), chord, g)
    }

    fn integrate_derivative<T: crate::quadrature::Accumulate>(&self, chord: &Chord, g: impl FnMut(f64) -> T) -> T {
        self.integrate(self.inner.for_derivatives(), chord, g)
    }

    fn chord(&self, x: &Point, y: &Point) -> Result<Option<Chord>> {
        alpha_chord(x, y, self.mollifier.support_radius())
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn n_alpha(&self) -> usize {
        self.rule.len()
    }

    pub fn support(&self, x: &Point, y: &Point) -> Result<Option<AlphaInterval>> {
        alpha_support(x, y, self.mollifier.support_radius())
    }

    /// `N(x, y)`.
    pub fn curl_kernel(&self, x: &Point, y: &Point) -> Result<Vec3> {
        let Some(iv) = self.chord(x, y)? else {
            return Ok(Vec3::zeros());
        };
        let d = x - y;
        let s = self.integrate_value(&iv, |a| self.mollifier.value(&(y + d * a)) * a * (a - 1.0));
        Ok(d * s)
    }

    /// `Ñ(x, y)`, the Bogovskii kernel.
    pub fn bogovskii_kernel(&self, x: &Point, y: &Point) -> Result<Vec3> {
        let Some(iv) = self.chord(x, y)? else {
            return Ok(Vec3::zeros());
        };
        let d = x - y;
        let s = self.integrate_value(&iv, |a| self.mollifier.value(&(y + d * a)) * a * a);
        Ok(d * s)
    }

    /// `N(x, y)` through one of the equivalent parameterisations; each form solves for
    /// its own support interval.
    pub fn curl_kernel_form(&self, x: &Point, y: &Point, form: KernelForm) -> Result<Vec3> {
        let d = x - y;
        let dist = d.norm();
        if dist < SINGULAR_GUARD {
            return Err(Error::SingularPoint(dist));
        }
        let r2 = self.mollifier.support_radius().powi(2);
        let e = d / dist;
        let psi = &self.mollifier;
        let s = match form {
            KernelForm::Alpha => return self.curl_kernel(x, y),
            KernelForm::Xi => match line_ball_chord(1.0, y.dot(&e), y.norm_squared() - r2, dist, r2) {
                None => return Ok(Vec3::zeros()),
                Some(iv) => self.integrate_value(&iv, |xi| psi.value(&(y + e * xi)) * xi * (xi - dist)),
            },
            KernelForm::Radial => match line_ball_chord(1.0, x.dot(&e), x.norm_squared() - r2, 0.0, r2) {
                None => return Ok(Vec3::zeros()),
                Some(iv) => self.integrate_value(&iv, |t| psi.value(&(x + e * t)) * t * (t + dist)),
            },
        };
        Ok(d * (s / (dist * dist * dist)))
    }

    /// Matrix with entry `(i, m) = ∂_{x_m} N_i(x, y)`.
    pub fn curl_kernel_gradient(&self, x: &Point, y: &Point) -> Result<Mat3> {
        let Some(iv) = self.chord(x, y)? else {
            return Ok(Mat3::zeros());
        };
        let d = x - y;
        let Pair(scalar, vector) = self.integrate_derivative(&iv, |a| {
            let (v, g) = self.mollifier.value_and_gradient(&(y + d * a));
            Pair(v * a * (a - 1.0), g * (a * a * (a - 1.0)))
        });
        Ok(Mat3::identity() * scalar + d * vector.transpose())
    }

    /// `aux_m(x, y) = d ∫ ∂_mψ(y + αd) α(α-1) dα`.
    pub fn aux_kernel(&self, x: &Point, y: &Point, m: usize) -> Result<Vec3> {
        if m > 2 {
            return Err(Error::InvalidArgument(format!("axis index {m} out of range")));
        }
        Ok(self.aux_kernels(x, y)?.column(m).into_owned())
    }

    /// All three auxiliary kernels; column `m` is `aux_m`.
    pub fn aux_kernels(&self, x: &Point, y: &Point) -> Result<Mat3> {
        let Some(iv) = self.chord(x, y)? else {
            return Ok(Mat3::zeros());
        };
        let d = x - y;
        let v = self.integrate_derivative(&iv, |a| self.mollifier.gradient(&(y + d * a)) * (a * (a - 1.0)));
        Ok(d * v.transpose())
    }

    /// Everything at once, sharing the `ψ` and `∇ψ` evaluations when values and
    /// derivatives use the same inner rule.
    pub fn evaluate(&self, x: &Point, y: &Point) -> Result<KernelEvaluation> {
        let Some(iv) = self.chord(x, y)? else {
            return Ok(KernelEvaluation::zero());
        };
        let d = x - y;
        let (mut s_n, mut s_t) = (0.0, 0.0);
        let (mut v_grad, mut v_aux) = (Vec3::zeros(), Vec3::zeros());
        self.for_each_node(self.inner.for_derivatives(), &iv, |a, w| {
            let (v, g) = self.mollifier.value_and_gradient(&(y + d * a));
            let am1 = a * (a - 1.0);
            s_n += w * v * am1;
            s_t += w * v * a * a;
            v_grad += g * (w * a * am1);
            v_aux += g * (w * am1);
        });
        let grad_n = Mat3::identity() * s_n + d * v_grad.transpose();
        if self.inner.for_values() != self.inner.for_derivatives() {
            let Pair(n, t) = self.integrate_value(&iv, |a| {
                let v = self.mollifier.value(&(y + d * a));
                Pair(v * a * (a - 1.0), v * a * a)
            });
            (s_n, s_t) = (n, t);
        }
        Ok(KernelEvaluation { n: d * s_n, n_tilde: d * s_t, grad_n, aux: d * v_aux.transpose() })
    }
}

/// Result of an empirical kernel-growth scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelBoundReport {
    /// `max |K(x, y)| |x - y|^p` over the sample.
    pub constant: f64,
    pub worst_x: Point,
    pub worst_y: Point,
    pub pairs: usize,
}

/// Which kernel a growth scan looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthKind {
    /// `|N| |x-y|²`
    Curl,
    /// `|∇_x N| |x-y|³` (Frobenius norm)
    Gradient,
}

/// Samples `x` uniformly in the domain and `y = x + ρ u` with `u` uniform and `ρ`
/// log-uniform in `[rho_lo, rho_hi]`, recording `max |K| ρ^p`.
pub fn kernel_growth_scan(
    domain: &StarDomain,
    kernels: &KernelEvaluator,
    kind: GrowthKind,
    n_pairs: usize,
    (rho_lo, rho_hi): (f64, f64),
    seed: u64,
) -> Result<KernelBoundReport> {
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("n_pairs must be >= 1".into()));
    }
    if !(rho_lo > 0.0 && rho_hi > rho_lo) {
        return Err(Error::InvalidArgument(format!("bad distance range [{rho_lo}, {rho_hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (llo, lhi) = (rho_lo.ln(), rho_hi.ln());
    let mut report = KernelBoundReport { constant: 0.0, worst_x: Point::zeros(), worst_y: Point::zeros(), pairs: n_pairs };
    for _ in 0..n_pairs {
        let x = domain.sample_interior(&mut rng)?;
        let u = random_unit_vector(&mut rng);
        let rho = rng.random_range(llo..lhi).exp();
        let y = x + u * rho;
        let value = match kind {
            GrowthKind::Curl => kernels.curl_kernel(&x, &y)?.norm() * rho * rho,
            GrowthKind::Gradient => kernels.curl_kernel_gradient(&x, &y)?.norm() * rho * rho * rho,
        };
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite kernel value at x = {x:?}, y = {y:?}")));
        }
        if value > report.constant {
            report.constant = value;
            report.worst_x = x;
            report.worst_y = y;
        }
    }
    Ok(report)
}

/// `C_emp = max |N(x,y)| |x-y|²` with `|x - y|` log-uniform in `[1e-4, diam Ω]`.
pub fn kernel_bound_check(
    domain: &StarDomain,
    kernels: &KernelEvaluator,
    n_pairs: usize,
    seed: u64,
) -> Result<KernelBoundReport> {
    kernel_growth_scan(domain, kernels, GrowthKind::Curl, n_pairs, (1e-4, domain.diameter()), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn kernels(n: usize) -> KernelEvaluator {
        KernelEvaluator::new(Mollifier::default(), n).unwrap()
    }

    /// Dense trapezoid rule on `[lo, hi]`; the integrand is flat at both ends.
    fn trapezoid(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut s = 0.5 * (f(lo) + f(hi));
        for k in 1..n {
            s += f(lo + k as f64 * h);
        }
        s * h
    }

    #[test]
    fn alpha_support_examples() {
        let x = Point::new(0.5, 0.0, 0.0);
        let y = Point::new(-0.5, 0.0, 0.0);
        let iv = alpha_support(&x, &y, 0.9).unwrap().unwrap();
        // α² - α + (0.25 - 0.81) < 0  →  roots (1 ± √3.24)/2 = -0.4, 1.4
        assert_abs_diff_eq!(iv.lo, 1.0);
        assert_abs_diff_eq!(iv.hi, 1.4, epsilon = 1e-14);
        assert!((y + (x - y) * iv.midpoint()).norm() < 0.9);

        let empty = alpha_support(&Point::new(0.0, 0.0, 1.5), &Point::new(0.0, 0.0, 1.2), 0.9).unwrap();
        assert!(empty.is_none());

        assert!(matches!(alpha_support(&x, &x, 0.9), Err(Error::SingularPoint(_))));
    }

    #[test]
    fn interval_endpoints_sit_on_support_boundary() {
        let m = Mollifier::default();
        let pairs = [
            (Point::new(0.3, 0.2, -0.1), Point::new(1.4, -0.3, 0.2)),
            (Point::new(0.5, 0.0, 0.0), Point::new(-0.5, 0.0, 0.0)),
            (Point::new(1.2, 0.4, 0.0), Point::new(1.9, 0.6, 0.1)),
        ];
        for (x, y) in pairs {
            if let Some(iv) = alpha_support(&x, &y, 0.9).unwrap() {
                let d = x - y;
                if iv.lo > 1.0 {
                    assert!(m.value(&(y + d * iv.lo)) <= 1e-14);
                }
                assert!(m.value(&(y + d * iv.hi)) <= 1e-14);
            }
        }
    }

    #[test]
    fn curl_kernel_vanishes_for_exterior_x() {
        // y in ball(2), x outside: the half-line beyond x cannot meet the support
        let k = kernels(16);
        let n = k.curl_kernel(&Point::new(3.0, 0.0, 0.0), &Point::new(0.5, 0.0, 0.0)).unwrap();
        assert_eq!(n, Vec3::zeros());
        let n = k.curl_kernel(&Point::new(0.0, 0.0, 1.5), &Point::new(0.0, 0.0, 1.2)).unwrap();
        assert_eq!(n, Vec3::zeros());
    }

    #[test]
    fn curl_kernel_matches_dense_trapezoid() {
        let m = Mollifier::default();
        let x = Point::new(0.5, 0.0, 0.0);
        let y = Point::zeros();
        let iv = alpha_support(&x, &y, 0.9).unwrap().unwrap();
        let d = x - y;
        let oracle_n = trapezoid(iv.lo, iv.hi, 100_000, |a| m.value(&(y + d * a)) * a * (a - 1.0)) * d;
        let oracle_t = trapezoid(iv.lo, iv.hi, 100_000, |a| m.value(&(y + d * a)) * a * a) * d;
        // 16 nodes resolve the bump to ~1e-5; 64 nodes reach the oracle's precision
        let n16 = kernels(16).curl_kernel(&x, &y).unwrap();
        assert_relative_eq!(n16.x, oracle_n.x, max_relative = 1e-4);
        let n64 = kernels(64).curl_kernel(&x, &y).unwrap();
        assert_relative_eq!(n64.x, oracle_n.x, max_relative = 1e-10);
        let t64 = kernels(64).bogovskii_kernel(&x, &y).unwrap();
        assert_relative_eq!(t64.x, oracle_t.x, max_relative = 1e-10);
        let xi64 = kernels(64).curl_kernel_form(&x, &y, KernelForm::Xi).unwrap();
        assert_relative_eq!(xi64.x, oracle_n.x, max_relative = 1e-10);
        assert_eq!(n64.y, 0.0);
    }

    #[test]
    fn bogovskii_kernel_sign_follows_offset() {
        let k = kernels(16);
        let x = Point::new(0.4, -0.3, 0.2);
        let y = Point::new(1.1, 0.5, -0.6);
        let t = k.bogovskii_kernel(&x, &y).unwrap();
        assert!(t.norm() > 0.0);
        let d = x - y;
        for i in 0..3 {
            assert_eq!(t[i].signum(), d[i].signum());
        }
        assert_eq!(k.bogovskii_kernel(&Point::new(0.0, 0.0, 1.5), &Point::new(0.0, 0.0, 1.2)).unwrap(), Vec3::zeros());
    }

    #[test]
    fn forms_agree() {
        let k = kernels(16);
        let x = Point::new(0.5, 0.2, 0.0);
        let y = Point::new(-0.1, 0.0, 0.1);
        let a = k.curl_kernel_form(&x, &y, KernelForm::Alpha).unwrap();
        for form in [KernelForm::Xi, KernelForm::Radial] {
            let b = k.curl_kernel_form(&x, &y, form).unwrap();
            assert!((a - b).norm() <= 1e-9 * a.norm(), "{form:?}");
        }
        let far = (Point::new(0.0, 0.0, 1.5), Point::new(0.0, 0.0, 1.2));
        for form in KernelForm::ALL {
            assert_eq!(k.curl_kernel_form(&far.0, &far.1, form).unwrap(), Vec3::zeros());
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let k = kernels(48);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let domain = StarDomain::ball(2.0).unwrap();
        let mut checked = 0;
        while checked < 100 {
            let x = domain.sample_interior(&mut rng).unwrap();
            let y = x + random_unit_vector(&mut rng) * rng.random_range(0.3..2.0);
            let g = k.curl_kernel_gradient(&x, &y).unwrap();
            let h = 1e-5;
            for m in 0..3 {
                let e = Vec3::ith(m, h);
                let fd = (k.curl_kernel(&(x + e), &y).unwrap() - k.curl_kernel(&(x - e), &y).unwrap()) / (2.0 * h);
                for i in 0..3 {
                    assert!((g[(i, m)] - fd[i]).abs() < 1e-6, "pair {x:?} {y:?}: {} vs {}", g[(i, m)], fd[i]);
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn derivative_swap_identity() {
        // ∂_{x_m} N_i + ∂_{y_m} N_i = aux_{i,m}, with ∂_y taken by central differences
        let k = kernels(32);
        let x = Point::new(0.4, 0.3, -0.2);
        let y = Point::new(1.3, 0.2, 0.5);
        let g = k.curl_kernel_gradient(&x, &y).unwrap();
        let aux = k.aux_kernels(&x, &y).unwrap();
        let h = 1e-5;
        for m in 0..3 {
            let e = Vec3::ith(m, h);
            let dy = (k.curl_kernel(&x, &(y + e)).unwrap() - k.curl_kernel(&x, &(y - e)).unwrap()) / (2.0 * h);
            for i in 0..3 {
                assert_abs_diff_eq!(g[(i, m)] + dy[i], aux[(i, m)], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn evaluate_matches_individual_kernels() {
        let k = kernels(16);
        let x = Point::new(0.2, -0.4, 0.1);
        let y = Point::new(0.9, 0.3, 0.6);
        let all = k.evaluate(&x, &y).unwrap();
        assert_abs_diff_eq!((all.n - k.curl_kernel(&x, &y).unwrap()).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((all.n_tilde - k.bogovskii_kernel(&x, &y).unwrap()).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((all.grad_n - k.curl_kernel_gradient(&x, &y).unwrap()).norm(), 0.0, epsilon = 1e-13);
        for m in 0..3 {
            assert_abs_diff_eq!((all.aux.column(m) - k.aux_kernel(&x, &y, m).unwrap()).norm(), 0.0, epsilon = 1e-13);
        }
        assert!(k.aux_kernel(&x, &y, 3).is_err());
        let far = k.evaluate(&Point::new(0.0, 0.0, 1.5), &Point::new(0.0, 0.0, 1.2)).unwrap();
        assert_eq!(far, KernelEvaluation::zero());
    }

    #[test]
    fn kernels_scale_linearly_with_psi() {
        let base = kernels(16);
        let scaled = KernelEvaluator::new(Mollifier::default().scaled(3.0), 16).unwrap();
        let x = Point::new(0.1, 0.2, 0.3);
        let y = Point::new(1.0, -0.5, 0.4);
        let a = base.evaluate(&x, &y).unwrap();
        let b = scaled.evaluate(&x, &y).unwrap();
        assert_relative_eq!(b.n * 1.0, a.n * 3.0, max_relative = 1e-14);
        assert_relative_eq!(b.grad_n, a.grad_n * 3.0, max_relative = 1e-14);
        assert_relative_eq!(b.aux, a.aux * 3.0, max_relative = 1e-14);
    }

    #[test]
    fn bound_scan_examples() {
        let domain = StarDomain::ball(2.0).unwrap();
        let k = kernels(16);
        let a = kernel_bound_check(&domain, &k, 2000, 3).unwrap();
        assert!(a.constant.is_finite() && a.constant > 0.0);
        let doubled = KernelEvaluator::new(Mollifier::default().scaled(2.0), 16).unwrap();
        let b = kernel_bound_check(&domain, &doubled, 2000, 3).unwrap();
        assert_relative_eq!(b.constant, 2.0 * a.constant, max_relative = 1e-13);
        assert!(kernel_bound_check(&domain, &k, 0, 3).is_err());
    }

    proptest::proptest! {
        #[test]
        fn support_interval_lies_in_the_ball(
            x in proptest::array::uniform3(-2.0f64..2.0),
            y in proptest::array::uniform3(-2.0f64..2.0),
        ) {
            let (x, y) = (Point::from(x), Point::from(y));
            proptest::prop_assume!((x - y).norm() > 1e-6);
            if let Some(iv) = alpha_support(&x, &y, 0.9).unwrap() {
                proptest::prop_assert!(iv.lo >= 1.0 && iv.hi > iv.lo);
                let d = x - y;
                proptest::prop_assert!((y + d * iv.midpoint()).norm() < 0.9);
                proptest::prop_assert!(Mollifier::default().value(&(y + d * iv.hi)) < 1e-14);
                if iv.lo > 1.0 {
                    proptest::prop_assert!(Mollifier::default().value(&(y + d * iv.lo)) < 1e-14);
                }
            }
        }
    }
}
