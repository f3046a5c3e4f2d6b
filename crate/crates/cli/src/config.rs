//! Run configuration: defaults, INI files and `key=value` overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;
use vecpot::kernels::InnerRule;
use vecpot::{Error, Mollifier, Point, QuadratureConfig, Result, SphereSize, StarDomain};

/// Everything a command needs; serialises to the INI layout it is read from.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub domain: String,
    pub field: String,
    pub seed: u64,
    pub threads: usize,
    pub out_dir: PathBuf,
    pub support_radius: f64,
    pub quad: QuadratureConfig,
    pub grid_counts: [usize; 3],
    /// Half-width of the sampling cube; `None` uses `1.1 ·` circumradius.
    pub grid_half: Option<f64>,
    pub points: usize,
    pub margin: f64,
    pub plane_gap: f64,
    /// Finite-difference step; `None` uses `1e-3 · diam`.
    pub h: Option<f64>,
    /// Check tolerance; `None` uses the command's default.
    pub tol: Option<f64>,
    pub eps: Vec<f64>,
    pub eps_point: [f64; 3],
    pub div_f: String,
    pub boundary_points: usize,
    pub boundary_exterior: usize,
    pub boundary_tol: f64,
    pub dini_pairs: usize,
    pub dini_bins: usize,
    pub dini_rho_min: f64,
    pub validate_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: "ball:R0=2".into(),
            field: "rigid".into(),
            seed: 0,
            threads: 0,
            out_dir: PathBuf::from("."),
            support_radius: vecpot::smoothing::DEFAULT_SUPPORT_RADIUS,
            quad: QuadratureConfig::default(),
            grid_counts: [9, 9, 9],
            grid_half: None,
            points: 20,
            margin: 0.1,
            plane_gap: 0.0,
            h: None,
            tol: None,
            eps: vec![0.4, 0.2, 0.1, 0.05],
            eps_point: [0.3, 0.0, 0.0],
            div_f: "y1".into(),
            boundary_points: 100,
            boundary_exterior: 200,
            boundary_tol: 1e-2,
            dini_pairs: 1000,
            dini_bins: 40,
            dini_rho_min: 1e-7,
            validate_samples: 1000,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Parse(format!("bad value `{value}` for `{key}`"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

fn auto(key: &str, value: &str) -> Result<Option<f64>> {
    if value.trim() == "auto" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| num(key, v)).collect()
}

fn triple<T: std::str::FromStr + Copy>(key: &str, value: &str) -> Result<[T; 3]> {
    let v: Vec<T> = list(key, value)?;
    match v.as_slice() {
        [a] => Ok([*a; 3]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(bad(key, value)),
    }
}

fn show_auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".into(), |v| format!("{v:?}"))
}

fn show_list<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Keys in dump order; the part before the first dot is the INI section.
    pub const KEYS: [&'static str; 30] = [
        "domain",
        "field",
        "seed",
        "threads",
        "out_dir",
        "psi.support_radius",
        "quad.n_alpha",
        "quad.n_rho",
        "quad.sphere_nodes",
        "quad.n_surface",
        "quad.R_factor",
        "quad.inner_rule",
        "grid.counts",
        "grid.half",
        "check.points",
        "check.margin",
        "check.plane_gap",
        "check.h",
        "check.tol",
        "eps.values",
        "eps.point",
        "div.f",
        "boundary.points",
        "boundary.exterior",
        "boundary.tol",
        "dini.pairs",
        "dini.bins",
        "dini.rho_min",
        "validate.samples",
        "quad.cap_adapted",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "domain" => self.domain = v.to_string(),
            "field" => self.field = v.to_string(),
            "seed" => self.seed = num(key, v)?,
            "threads" => self.threads = num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "psi.support_radius" => self.support_radius = num(key, v)?,
            "quad.n_alpha" => self.quad.n_alpha = num(key, v)?,
            "quad.n_rho" => self.quad.n_rho = num(key, v)?,
            "quad.sphere_nodes" => self.quad.sphere = v.parse::<SphereSize>()?,
            "quad.n_surface" => self.quad.surface = v.parse::<SphereSize>()?,
            "quad.R_factor" => self.quad.r_factor = num(key, v)?,
            "quad.inner_rule" => self.quad.inner_rule = InnerRule::parse(v)?,
            "quad.cap_adapted" => self.quad.cap_adapted = num(key, v)?,
            "grid.counts" => self.grid_counts = triple(key, v)?,
            "grid.half" => self.grid_half = auto(key, v)?,
            "check.points" => self.points = num(key, v)?,
            "check.margin" => self.margin = num(key, v)?,
            "check.plane_gap" => self.plane_gap = num(key, v)?,
            "check.h" => self.h = auto(key, v)?,
            "check.tol" => self.tol = auto(key, v)?,
            "eps.values" => self.eps = list(key, v)?,
            "eps.point" => self.eps_point = triple(key, v)?,
            "div.f" => self.div_f = v.to_string(),
            "boundary.points" => self.boundary_points = num(key, v)?,
            "boundary.exterior" => self.boundary_exterior = num(key, v)?,
            "boundary.tol" => self.boundary_tol = num(key, v)?,
            "dini.pairs" => self.dini_pairs = num(key, v)?,
            "dini.bins" => self.dini_bins = num(key, v)?,
            "dini.rho_min" => self.dini_rho_min = num(key, v)?,
            "validate.samples" => self.validate_samples = num(key, v)?,
            _ => return Err(Error::Parse(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "domain" => self.domain.clone(),
            "field" => self.field.clone(),
            "seed" => self.seed.to_string(),
            "threads" => self.threads.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "psi.support_radius" => format!("{:?}", self.support_radius),
            "quad.n_alpha" => self.quad.n_alpha.to_string(),
            "quad.n_rho" => self.quad.n_rho.to_string(),
            "quad.sphere_nodes" => self.quad.sphere.to_string(),
            "quad.n_surface" => self.quad.surface.to_string(),
            "quad.R_factor" => format!("{:?}", self.quad.r_factor),
            "quad.inner_rule" => self.quad.inner_rule.name().to_string(),
            "quad.cap_adapted" => self.quad.cap_adapted.to_string(),
            "grid.counts" => show_list(&self.grid_counts),
            "grid.half" => show_auto(self.grid_half),
            "check.points" => self.points.to_string(),
            "check.margin" => format!("{:?}", self.margin),
            "check.plane_gap" => format!("{:?}", self.plane_gap),
            "check.h" => show_auto(self.h),
            "check.tol" => show_auto(self.tol),
            "eps.values" => show_list(&self.eps),
            "eps.point" => show_list(&self.eps_point),
            "div.f" => self.div_f.clone(),
            "boundary.points" => self.boundary_points.to_string(),
            "boundary.exterior" => self.boundary_exterior.to_string(),
            "boundary.tol" => format!("{:?}", self.boundary_tol),
            "dini.pairs" => self.dini_pairs.to_string(),
            "dini.bins" => self.dini_bins.to_string(),
            "dini.rho_min" => format!("{:?}", self.dini_rho_min),
            "validate.samples" => self.validate_samples.to_string(),
            _ => return None,
        })
    }

    /// Applies every key of an INI file; top-level keys have no section.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let ini = Ini::load_from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        for (section, props) in ini.iter() {
            for (k, v) in props.iter() {
                let key = match section {
                    Some(s) => format!("{s}.{k}"),
                    None => k.to_string(),
                };
                self.set(&key, v)?;
            }
        }
        Ok(())
    }

    /// INI text that [`RunConfig::load_file`] reads back to the same configuration.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        let mut keys: Vec<&str> = Self::KEYS.to_vec();
        keys.sort_by_key(|k| Self::section_rank(k));
        for key in keys {
            let (sec, name) = key.split_once('.').unwrap_or(("", key));
            if sec != section {
                let _ = writeln!(out, "\n[{sec}]");
                section = sec;
            }
            let _ = writeln!(out, "{name} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    fn section_rank(key: &str) -> usize {
        const ORDER: [&str; 10] = ["", "psi", "quad", "grid", "check", "eps", "div", "boundary", "dini", "validate"];
        let sec = key.split_once('.').map_or("", |(s, _)| s);
        ORDER.iter().position(|s| *s == sec).unwrap_or(ORDER.len())
    }

    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        self.mollifier()?;
        if self.points == 0 || self.grid_counts.contains(&0) {
            return Err(Error::InvalidArgument("point and grid counts must be positive".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<StarDomain> {
        StarDomain::parse(&self.domain)
    }

    pub fn mollifier(&self) -> Result<Mollifier> {
        Mollifier::new(self.support_radius)
    }

    pub fn eps_point(&self) -> Point {
        Point::from(self.eps_point)
    }
}
