//! `vecpot`: vector potentials, Bogovskii fields and their verification from the shell.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "vecpot", version, about = "Explicit right inverse of the curl on star-shaped domains")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct GlobalArgs {
    /// INI file applied before the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Domain spec, e.g. `ball:R0=2` or `ellipsoid:a=2,b=2.5,c=3`.
    #[arg(long, global = true)]
    domain: Option<String>,
    /// Registry field, e.g. `rigid` or `constant:0,0,1`.
    #[arg(long, global = true)]
    field: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for grid evaluation (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long = "out-dir", global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long = "quad.n_alpha", global = true)]
    n_alpha: Option<String>,
    #[arg(long = "quad.n_rho", global = true)]
    n_rho: Option<String>,
    /// Node count (`266`) or shape (`14x19`).
    #[arg(long = "quad.sphere_nodes", global = true)]
    sphere_nodes: Option<String>,
    #[arg(long = "quad.n_surface", global = true)]
    n_surface: Option<String>,
    #[arg(long = "quad.R_factor", global = true)]
    r_factor: Option<String>,
    /// `plain`, `tanh` or `mixed`.
    #[arg(long = "quad.inner_rule", global = true)]
    inner_rule: Option<String>,
    /// Any configuration key, e.g. `--set check.tol=1e-4`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Evaluate Rg on a grid and write CSV and VTK files.
    Solve,
    /// curl Rg against g by finite differences and by the analytic Jacobian.
    CurlCheck,
    /// Analytic Jacobian of Rg against finite differences.
    GradCheck,
    /// Convergence of the truncated operator as eps decreases.
    EpsStudy,
    /// Agreement of the three kernel parameterisations.
    EquivCheck,
    /// Exterior zeros and decay towards the boundary.
    BoundaryCheck,
    /// Bogovskii field of a mean-zero datum and its divergence.
    DivSolve,
    /// Modulus of continuity and truncated Dini integrals of the field.
    Dini,
    /// Sampled star-shapedness test.
    ValidateDomain,
}

impl GlobalArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("domain", self.domain.clone());
        push("field", self.field.clone());
        push("seed", self.seed.map(|s| s.to_string()));
        push("threads", self.threads.map(|t| t.to_string()));
        push("out_dir", self.out_dir.as_ref().map(|p| p.display().to_string()));
        push("quad.n_alpha", self.n_alpha.clone());
        push("quad.n_rho", self.n_rho.clone());
        push("quad.sphere_nodes", self.sphere_nodes.clone());
        push("quad.n_surface", self.n_surface.clone());
        push("quad.R_factor", self.r_factor.clone());
        push("quad.inner_rule", self.inner_rule.clone());
        out
    }

    fn resolve(&self) -> vecpot::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.load_file(path)?;
        }
        for (k, v) in self.overrides() {
            cfg.set(&k, &v)?;
        }
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| vecpot::Error::Parse(format!("`--set {item}` is not KEY=VALUE")))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match cli.global.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("vecpot: {e}");
            return ExitCode::from(commands::EXIT_CONFIG);
        }
    };
    ExitCode::from(commands::run(cli.command, &cfg))
}
