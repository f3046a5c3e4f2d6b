//! One driver per subcommand. Each writes its files under `out_dir`, prints a one-line
//! summary and returns the process exit code.

use std::fs;
use std::path::{Path, PathBuf};

use vecpot::export::{write_grid_csv, write_grid_vtk, write_report_csv};
use vecpot::fields::{dini_integral, default_dini_limits, modulus_of_continuity, registry_get, ModulusOptions};
use vecpot::verify::{self, BoundaryOptions, CheckReport};
use vecpot::{CurlInverseOp, Error, GridSpec, Point, Result, ScalarField, Smoothness};

use crate::config::RunConfig;
use crate::Command;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;

pub fn run(command: Command, cfg: &RunConfig) -> u8 {
    match dispatch(command, cfg) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("vecpot: {e}");
            match e {
                Error::Io(_) | Error::Csv(_) => EXIT_IO,
                _ => EXIT_CONFIG,
            }
        }
    }
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<bool> {
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("effective.ini"), cfg.to_ini())?;
    match command {
        Command::Solve => solve(cfg),
        Command::CurlCheck => curl_check(cfg),
        Command::GradCheck => grad_check(cfg),
        Command::EpsStudy => eps_study(cfg),
        Command::EquivCheck => equiv_check(cfg),
        Command::BoundaryCheck => boundary_check(cfg),
        Command::DivSolve => div_solve(cfg),
        Command::Dini => dini(cfg),
        Command::ValidateDomain => validate_domain(cfg),
    }
}

fn operator(cfg: &RunConfig) -> Result<CurlInverseOp> {
    CurlInverseOp::new(cfg.domain()?, cfg.mollifier()?, cfg.quad)
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn fd_step(cfg: &RunConfig, op: &CurlInverseOp) -> f64 {
    cfg.h.unwrap_or(1e-3 * op.domain().diameter())
}

fn points(cfg: &RunConfig, op: &CurlInverseOp) -> Result<Vec<Point>> {
    verify::interior_points(op.domain(), cfg.points, cfg.margin, cfg.plane_gap, cfg.seed)
}

fn finish(report: &CheckReport, path: &Path) -> Result<bool> {
    write_report_csv(&[report], path)?;
    println!("{report}");
    Ok(report.pass())
}

fn grid_spec(cfg: &RunConfig, op: &CurlInverseOp) -> Result<GridSpec> {
    let half = cfg.grid_half.unwrap_or(1.1 * op.domain().circumradius());
    let spacing = cfg.grid_counts.map(|n| if n > 1 { 2.0 * half / (n - 1) as f64 } else { 0.0 });
    let spec = GridSpec { origin: Point::repeat(-half), spacing, counts: cfg.grid_counts };
    spec.validate()?;
    Ok(spec)
}

fn solve(cfg: &RunConfig) -> Result<bool> {
    let op = operator(cfg)?;
    let g = registry_get(&cfg.field)?;
    let grid = op.eval_grid(&g, &grid_spec(cfg, &op)?, cfg.threads)?;
    write_grid_csv(&grid, &out(cfg, "solve.csv"))?;
    write_grid_vtk(&grid, &out(cfg, "solve.vtk"))?;
    println!(
        "solve[{}]: {} nodes, {} inside, max |Rg| = {:.6e}",
        g.name(),
        grid.values.len(),
        grid.inside.iter().filter(|i| **i).count(),
        grid.max_norm()
    );
    Ok(true)
}

fn curl_check(cfg: &RunConfig) -> Result<bool> {
    let op = operator(cfg)?;
    let g = registry_get(&cfg.field)?;
    let tol = match cfg.tol {
        Some(t) => t,
        None => 1e-3 * (1.0 + g.sup_norm_on(op.domain(), 2000, cfg.seed)?),
    };
    let report = verify::curl_check(&op, &g, &points(cfg, &op)?, fd_step(cfg, &op), tol)?;
    finish(&report, &out(cfg, "curl_check.csv"))
}

fn grad_check(cfg: &RunConfig) -> Result<bool> {
    let op = operator(cfg)?;
    let g = registry_get(&cfg.field)?;
    let report = verify::grad_check(&op, &g, &points(cfg, &op)?, fd_step(cfg, &op), cfg.tol.unwrap_or(1e-3))?;
    finish(&report, &out(cfg, "grad_check.csv"))
}

fn eps_study(cfg: &RunConfig) -> Result<bool> {
    let op = operator(cfg)?;
    let g = registry_get(&cfg.field)?;
    let study = verify::eps_study(&op, &g, &cfg.eps_point(), &cfg.eps)?;
    let mut w = csv::Writer::from_path(out(cfg, "eps_study.csv"))?;
    w.write_record(["eps", "error"])?;
    for (e, err) in study.eps.iter().zip(&study.errors) {
        w.write_record([format!("{e:?}"), format!("{err:?}")])?;
    }
    w.flush()?;
    let errs: Vec<String> = study.errors.iter().map(|e| format!("{e:.3e}")).collect();
    println!(
        "eps-study[{}]: {} errors=[{}] strictly_decreasing={}",
        g.name(),
        if study.pass() { "PASS" } else { "FAIL" },
        errs.join(", "),
        study.strictly_decreasing()
    );
    Ok(study.pass())
}

fn equiv_check(cfg: &RunConfig) -> Result<bool> {
    let op = operator(cfg)?;
    let g = registry_get(&cfg.field)?;
    let report = verify::forms_check(&op, &g, &points(cfg, &op)?, cfg.tol.unwrap_or(1e-6))?;
    finish(&report, &out(cfg, "equiv_check.csv"))
}

fn boundary_check(cfg: &RunConfig) -> Result<bool> {
    let op = operator(cfg)?;
    let g = registry_get(&cfg.field)?;
    let opts = BoundaryOptions {
        n_points: cfg.boundary_points,
        n_exterior: cfg.boundary_exterior,
        tol: cfg.boundary_tol,
        seed: cfg.seed,
        ..BoundaryOptions::default()
    };
    let report = verify::boundary_check(&op, &g, &opts)?;
    finish(&report, &out(cfg, "boundary_check.csv"))
}

/// Scalar data for `div-solve`; `cos` is shifted to mean zero over the domain.
fn scalar_datum(name: &str, op: &CurlInverseOp) -> Result<ScalarField> {
    match name {
        "y1" => Ok(ScalarField::new("y1", |y| y.x)),
        "cos" => {
            let f = ScalarField::new("cos y1", |y| y.x.cos());
            let mean = op.mean_over_domain(&f)?;
            Ok(f.shifted(mean))
        }
        "zero" => Ok(ScalarField::zero()),
        other => Err(Error::Parse(format!("unknown scalar datum `{other}` (y1, cos, zero)"))),
    }
}

fn div_solve(cfg: &RunConfig) -> Result<bool> {
    let op = operator(cfg)?;
    let f = scalar_datum(&cfg.div_f, &op)?;
    let pts = points(cfg, &op)?;
    let mut scale = 0.0f64;
    for p in &pts {
        scale = scale.max(f.eval(p).abs());
    }
    let report = verify::div_check(&op, &f, &pts, fd_step(cfg, &op), cfg.tol.unwrap_or(1e-3), scale.max(1e-300))?;
    let mut w = csv::Writer::from_path(out(cfg, "div_solve_field.csv"))?;
    w.write_record(["x", "y", "z", "ux", "uy", "uz", "F"])?;
    for p in &pts {
        let u = op.bogovskii(&f, p)?;
        w.write_record([p.x, p.y, p.z, u.x, u.y, u.z, f.eval(p)].map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    finish(&report, &out(cfg, "div_solve.csv"))
}

fn dini(cfg: &RunConfig) -> Result<bool> {
    let domain = cfg.domain()?;
    let g = registry_get(&cfg.field)?;
    let opts = ModulusOptions {
        n_pairs: cfg.dini_pairs,
        n_bins: cfg.dini_bins,
        rho_min: cfg.dini_rho_min,
        seed: cfg.seed,
        ..ModulusOptions::default()
    };
    let table = modulus_of_continuity(&|x| g.eval(x), &domain, &opts)?;
    let report = dini_integral(&table, &default_dini_limits())?;
    let mut w = csv::Writer::from_path(out(cfg, "dini_modulus.csv"))?;
    w.write_record(["rho", "omega", "omega_raw"])?;
    for ((r, o), raw) in table.radii.iter().zip(&table.omega).zip(&table.raw) {
        w.write_record([format!("{r:?}"), format!("{o:?}"), format!("{raw:?}")])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out(cfg, "dini_integral.csv"))?;
    w.write_record(["rho_min", "integral"])?;
    for (r, v) in report.rho_min.iter().zip(&report.values) {
        w.write_record([format!("{r:?}"), format!("{v:?}")])?;
    }
    w.flush()?;
    let slope = table.loglog_slope(cfg.dini_rho_min.max(1e-6), 1e-2);
    let expected_divergence = g.smoothness() == Smoothness::NonDini;
    let pass = report.diverging == expected_divergence;
    println!(
        "dini[{}]: {} diverging: {} integral({:.0e}) = {:.6e} slope = {}",
        g.name(),
        if pass { "PASS" } else { "FAIL" },
        report.diverging,
        report.rho_min.last().copied().unwrap_or(f64::NAN),
        report.value(),
        slope.map_or_else(|| "n/a".into(), |s| format!("{s:.3}"))
    );
    Ok(pass)
}

fn validate_domain(cfg: &RunConfig) -> Result<bool> {
    let domain = cfg.domain()?;
    let report = domain.validate_star_shape(cfg.validate_samples, cfg.seed)?;
    let mut w = csv::Writer::from_path(out(cfg, "validate_domain.csv"))?;
    w.write_record(["bx", "by", "bz", "zx", "zy", "zz", "t"])?;
    for (b, z, t) in &report.witnesses {
        w.write_record([b.x, b.y, b.z, z.x, z.y, z.z, *t].map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    println!(
        "validate-domain[{}]: {} {} violations in {} samples",
        cfg.domain,
        if report.violations == 0 { "PASS" } else { "FAIL" },
        report.violations,
        report.samples
    );
    Ok(report.violations == 0)
}
