//! Finite-difference oracles and the study drivers behind the acceptance suite.

use std::fmt;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::fields::{ScalarField, VectorField};
use crate::geometry::{random_unit_vector, StarDomain};
use crate::kernels::KernelForm;
use crate::operators::{curl_from_jacobian, CurlInverseOp};
use crate::{Error, Mat3, Point, Result, Vec3};

/// Central-difference Jacobian, entry `(k, m) = ∂_m v^k`.
pub fn fd_jacobian(v: impl Fn(&Point) -> Result<Vec3>, x: &Point, h: f64) -> Result<Mat3> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let mut j = Mat3::zeros();
    for m in 0..3 {
        let e = Vec3::ith(m, h);
        let col = (v(&(x + e))? - v(&(x - e))?) / (2.0 * h);
        j.set_column(m, &col);
    }
    Ok(j)
}

pub fn fd_curl(v: impl Fn(&Point) -> Result<Vec3>, x: &Point, h: f64) -> Result<Vec3> {
    Ok(curl_from_jacobian(&fd_jacobian(v, x, h)?))
}

pub fn fd_div(v: impl Fn(&Point) -> Result<Vec3>, x: &Point, h: f64) -> Result<f64> {
    Ok(fd_jacobian(v, x, h)?.trace())
}

/// One compared value.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub test: String,
    pub point: Point,
    pub component: String,
    pub value: f64,
    pub reference: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub pass: bool,
}

/// Rows of a check plus their aggregate verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    /// Absolute tolerance applied to every row.
    pub tolerance: f64,
    pub rows: Vec<CheckRow>,
    pub points: usize,
    /// Free-form verdicts that are not row comparisons (e.g. a fraction threshold).
    pub extra_failures: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self { name: name.into(), tolerance, rows: Vec::new(), points: 0, extra_failures: Vec::new() }
    }

    pub fn push(&mut self, test: &str, point: &Point, component: impl Into<String>, value: f64, reference: f64) {
        self.push_with_tolerance(test, point, component, value, reference, self.tolerance);
    }

    pub fn push_with_tolerance(
        &mut self,
        test: &str,
        point: &Point,
        component: impl Into<String>,
        value: f64,
        reference: f64,
        tolerance: f64,
    ) {
        let abs_err = (value - reference).abs();
        let rel_err = if reference != 0.0 { abs_err / reference.abs() } else { abs_err };
        self.rows.push(CheckRow {
            test: test.to_string(),
            point: *point,
            component: component.into(),
            value,
            reference,
            abs_err,
            rel_err,
            pass: abs_err <= tolerance,
        });
    }

    pub fn push_vec(&mut self, test: &str, point: &Point, value: &Vec3, reference: &Vec3) {
        for (i, c) in ["x", "y", "z"].iter().enumerate() {
            self.push(test, point, *c, value[i], reference[i]);
        }
    }

    pub fn fail(&mut self, reason: impl Into<String>) {
        self.extra_failures.push(reason.into());
    }

    pub fn max_abs_err(&self) -> f64 {
        self.rows.iter().map(|r| r.abs_err).fold(0.0, f64::max)
    }

    pub fn max_rel_err(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_err).fold(0.0, f64::max)
    }

    /// Largest absolute error among rows whose test name is `test`.
    pub fn max_abs_err_of(&self, test: &str) -> f64 {
        self.rows.iter().filter(|r| r.test == test).map(|r| r.abs_err).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&CheckRow> {
        self.rows.iter().max_by(|a, b| a.abs_err.total_cmp(&b.abs_err))
    }

    pub fn pass(&self) -> bool {
        self.extra_failures.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.points += other.points;
        self.rows.extend(other.rows);
        self.extra_failures.extend(other.extra_failures);
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} points={} max_abs={:.3e} max_rel={:.3e} tol={:.1e}",
            self.name,
            if self.pass() { "PASS" } else { "FAIL" },
            self.points,
            self.max_abs_err(),
            self.max_rel_err(),
            self.tolerance
        )?;
        for reason in &self.extra_failures {
            write!(f, " [{reason}]")?;
        }
        Ok(())
    }
}

/// Seeded interior points with `dist(x, ∂Ω) > margin` and, when `plane_gap > 0`, every
/// coordinate at least `plane_gap` away from zero.
pub fn interior_points(domain: &StarDomain, n: usize, margin: f64, plane_gap: f64, seed: u64) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1_000_000 {
            return Err(Error::DegenerateDomain(format!("cannot place {n} points with margin {margin}")));
        }
        let x = domain.sample_interior(&mut rng)?;
        if domain.distance_to_boundary(&x) > margin && x.iter().all(|c| c.abs() >= plane_gap) {
            out.push(x);
        }
    }
    Ok(out)
}

/// `curl Rg` against `g` along both routes: central differences of `Rg` (step `h`)
/// and the contraction of the analytic Jacobian. Rows are tagged `fd` and `analytic`.
pub fn curl_check(op: &CurlInverseOp, g: &VectorField, points: &[Point], h: f64, tol: f64) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("curl-check[{}]", g.name()), tol);
    for x in points {
        check_margin(op, x, h.max(1e-3))?;
        let gx = g.eval(x);
        let fd = fd_curl(|y| op.curl_inverse(g, y), x, h)?;
        let analytic = op.curl_of_curl_inverse(g, x)?;
        report.push_vec("fd", x, &fd, &gx);
        report.push_vec("analytic", x, &analytic, &gx);
        report.points += 1;
    }
    Ok(report)
}

fn check_margin(op: &CurlInverseOp, x: &Point, margin: f64) -> Result<()> {
    let dist = op.domain().distance_to_boundary(x);
    if !op.domain().contains(x) || dist <= margin {
        return Err(Error::NearBoundary(dist));
    }
    Ok(())
}

/// Analytic Jacobian of `Rg` against central differences with step `h`.
pub fn grad_check(op: &CurlInverseOp, g: &VectorField, points: &[Point], h: f64, tol: f64) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("grad-check[{}]", g.name()), tol);
    for x in points {
        check_margin(op, x, h.max(1e-3))?;
        let fd = fd_jacobian(|y| op.curl_inverse(g, y), x, h)?;
        let analytic = op.grad_curl_inverse(g, x)?;
        for k in 0..3 {
            for m in 0..3 {
                report.push("jacobian", x, format!("{k}{m}"), analytic[(k, m)], fd[(k, m)]);
            }
        }
        report.push("trace", x, "div", analytic.trace(), fd.trace());
        report.points += 1;
    }
    Ok(report)
}

/// `div BF` by central differences against `F`, with tolerance `tol · max(|F(x)|, scale)`.
pub fn div_check(
    op: &CurlInverseOp,
    f: &ScalarField,
    points: &[Point],
    h: f64,
    tol: f64,
    scale: f64,
) -> Result<CheckReport> {
    op.check_mean_zero(f)?;
    let mut report = CheckReport::new(format!("div-check[{}]", f.name()), tol);
    for x in points {
        check_margin(op, x, h.max(1e-3))?;
        let fx = f.eval(x);
        let div = fd_div(|y| op.bogovskii(f, y), x, h)?;
        report.push_with_tolerance("div", x, "div", div, fx, tol * fx.abs().max(scale));
        report.points += 1;
    }
    Ok(report)
}

/// `curl Rg - g - B[div g]` at each point, componentwise against zero.
pub fn residual_check(op: &CurlInverseOp, g: &VectorField, points: &[Point], tol: f64) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("residual-identity[{}]", g.name()), tol);
    for x in points {
        let r = op.residual_identity(g, x)?;
        report.push_vec("residual", x, &r, &Vec3::zeros());
        report.points += 1;
    }
    Ok(report)
}

/// Options of [`boundary_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryOptions {
    pub n_points: usize,
    pub n_exterior: usize,
    /// Inward offsets as fractions of the diameter, outermost first.
    pub offsets: [f64; 2],
    /// Required fraction of samples with `|Rg|` smaller at the inner offset.
    pub min_fraction: f64,
    /// `|Rg| <= tol · ‖g‖_∞` at the innermost offset.
    pub tol: f64,
    pub seed: u64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self { n_points: 100, n_exterior: 200, offsets: [1e-2, 1e-3], min_fraction: 0.95, tol: 1e-2, seed: 0 }
    }
}

/// Boundary behaviour of `Rg`: exactly zero at exterior points, and smaller at the
/// offset `offsets[1]·diam` inside `∂Ω` than at `offsets[0]·diam`. Offsets are taken
/// along the ray to the origin, which stays inside a domain star-shaped about it.
pub fn boundary_check(op: &CurlInverseOp, g: &VectorField, opts: &BoundaryOptions) -> Result<CheckReport> {
    let domain = op.domain();
    let diam = domain.diameter();
    let g_sup = g.sup_norm_on(domain, 2000, opts.seed)?.max(f64::MIN_POSITIVE);
    let mut report = CheckReport::new(format!("boundary-check[{}]", g.name()), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    for _ in 0..opts.n_exterior {
        let u = random_unit_vector(&mut rng);
        let b = domain.boundary_point(&u);
        let t = rng.random_range((1e-3f64).ln()..(op.radius() / b.norm() - 1.0).max(2e-3).ln()).exp();
        let x = b * (1.0 + t);
        let v = op.curl_inverse(g, &x)?;
        let raw = op.curl_inverse_raw(g, &x).unwrap_or_else(|_| Vec3::zeros());
        report.push_with_tolerance("exterior", &x, "norm", v.norm(), 0.0, 0.0);
        report.push_with_tolerance("exterior-raw", &x, "norm", raw.norm(), 0.0, 0.0);
    }

    let mut decreased = 0usize;
    for _ in 0..opts.n_points {
        let u = random_unit_vector(&mut rng);
        let b = domain.boundary_point(&u);
        let r = b.norm();
        let outer = b * (1.0 - opts.offsets[0] * diam / r);
        let inner = b * (1.0 - opts.offsets[1] * diam / r);
        let vo = op.curl_inverse(g, &outer)?.norm();
        let vi = op.curl_inverse(g, &inner)?.norm();
        if vi < vo || (vi == 0.0 && vo == 0.0) {
            decreased += 1;
        }
        report.push_with_tolerance("offset-outer", &outer, "norm", vo, 0.0, f64::INFINITY);
        report.push_with_tolerance("offset-inner", &inner, "norm", vi, 0.0, opts.tol * g_sup);
        report.points += 1;
    }
    let fraction = decreased as f64 / opts.n_points.max(1) as f64;
    if fraction < opts.min_fraction {
        report.fail(format!("|Rg| decreased toward the boundary at {:.1}% of samples", 100.0 * fraction));
    }
    Ok(report)
}

/// Table of `|R^eps g - Rg|` for a list of cutoffs.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsStudy {
    pub point: Point,
    pub reference: Vec3,
    pub eps: Vec<f64>,
    pub errors: Vec<f64>,
}

impl EpsStudy {
    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    /// Strict decrease and a final error at most a quarter of the first.
    pub fn pass(&self) -> bool {
        match (self.errors.first(), self.errors.last()) {
            (Some(first), Some(last)) => self.strictly_decreasing() && *last <= first / 4.0,
            _ => false,
        }
    }
}

pub fn eps_study(op: &CurlInverseOp, g: &VectorField, x: &Point, eps: &[f64]) -> Result<EpsStudy> {
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(format!("eps list must be decreasing: {eps:?}")));
    }
    let reference = op.curl_inverse(g, x)?;
    let errors = eps
        .iter()
        .map(|&e| Ok((op.curl_inverse_eps(g, x, e)? - reference).norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(EpsStudy { point: *x, reference, eps: eps.to_vec(), errors })
}

/// Pairwise relative agreement of `Rg` computed with each kernel form.
pub fn forms_check(op: &CurlInverseOp, g: &VectorField, points: &[Point], tol: f64) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("forms-check[{}]", g.name()), tol);
    for x in points {
        let values: Vec<Vec3> =
            KernelForm::ALL.iter().map(|&f| op.curl_inverse_with_form(g, x, f)).collect::<Result<_>>()?;
        let scale = values[0].norm();
        for a in 0..values.len() {
            for b in a + 1..values.len() {
                let diff = (values[a] - values[b]).norm();
                let rel = if scale > 0.0 { diff / scale } else { diff };
                report.push(
                    &format!("{}-{}", KernelForm::ALL[a].name(), KernelForm::ALL[b].name()),
                    x,
                    "rel",
                    rel,
                    0.0,
                );
            }
        }
        report.points += 1;
    }
    Ok(report)
}
