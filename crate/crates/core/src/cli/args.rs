use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::regularizer::FilterKind;
use crate::solver::{Initializer, RecoveryConfig, Reference, XMethod};

#[derive(Parser, Debug)]
#[command(name = "hodw", version, about = "Compressive sensing of color images with higher-order dictionaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate structurally random measurements of an 8-bit RGB image.
    Sense(SenseArgs),
    /// Recover an image from a measurement file.
    Recover(RecoverArgs),
    /// Run images x subrates x designs and tabulate PSNR.
    Benchmark(BenchmarkArgs),
    /// Per-iteration diagnostics against a ground-truth image.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug)]
pub struct SenseArgs {
    /// PNG or binary PPM image.
    pub image: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub subrate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record wall-clock time in the manifest.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct RecoverArgs {
    /// Measurement file written by `hodw sense`.
    pub measurements: PathBuf,
    /// Output image (.png or .ppm).
    #[arg(short, long)]
    pub out: PathBuf,
    /// Original image, for PSNR reporting and the oracle design.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Trace CSV; defaults to the output path with a .csv extension.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Use the oracle MMSE weights (needs --truth).
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Directory of PNG/PPM images.
    pub images: PathBuf,
    /// Result table, one row per run.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Delta-PSNR sheet; defaults to `<out>_delta.csv`.
    #[arg(long)]
    pub delta: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4")]
    pub subrates: Vec<f64>,
    /// Any of 1, 2, inf, oracle.
    #[arg(long, value_delimiter = ',', default_value = "1,2,inf")]
    pub designs: Vec<FilterKind>,
    /// Center-crop side; 0 keeps full images.
    #[arg(long, default_value_t = 64)]
    pub crop: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    pub measurements: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Diagnostics CSV; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaStar {
    Auto,
    Value(f64),
}

fn parse_sigma(s: &str) -> Result<SigmaStar> {
    if s.trim() == "auto" {
        return Ok(SigmaStar::Auto);
    }
    match s.trim().parse::<f64>() {
        Ok(v) if v >= 0.0 => Ok(SigmaStar::Value(v)),
        _ => Err(Error::param(format!("sigma* '{s}', expected auto or a non-negative number"))),
    }
}

fn parse_q(s: &str) -> Result<FilterKind> {
    match s.parse()? {
        FilterKind::Oracle => Err(Error::param("use --oracle for the oracle design")),
        k => Ok(k),
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        t => Err(Error::param(format!("'{t}' is not a boolean"))),
    }
}

/// Solver settings. Every field is optional so that flags can be layered
/// over a config file over the defaults.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct SolverFlags {
    /// Weight design exponent: 1, 2 or inf.
    #[arg(long, value_parser = parse_q)]
    pub q: Option<FilterKind>,
    /// Threshold, or `auto` for the tuned value at the subrate.
    #[arg(long = "sigma-star", value_parser = parse_sigma)]
    pub sigma_star: Option<SigmaStar>,
    /// Split Bregman penalty (0.0025).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Patch side (8).
    #[arg(long)]
    pub patch: Option<usize>,
    /// Patches per group (60).
    #[arg(long)]
    pub group: Option<usize>,
    /// Reference patch spacing (4).
    #[arg(long)]
    pub stride: Option<usize>,
    /// Search window side, odd (41).
    #[arg(long)]
    pub window: Option<usize>,
    /// Dictionary relearns (outer loops).
    #[arg(long)]
    pub iters: Option<usize>,
    /// Update and filter steps per dictionary (1).
    #[arg(long)]
    pub inner: Option<usize>,
    /// Iteration cap of the x-update (200).
    #[arg(long = "gd-iters")]
    pub gd_iters: Option<usize>,
    /// Early stop threshold of the x-update (1e-6).
    #[arg(long = "gd-tol")]
    pub gd_tol: Option<f64>,
    /// Gradient descent step; default 1/(N/M + mu).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Start each x-update from the previous x (true) or from zero.
    #[arg(long = "warm-inner", value_parser = parse_bool)]
    pub warm_inner: Option<bool>,
    /// x-update method: cg or gd.
    #[arg(long = "x-solver")]
    pub x_solver: Option<XMethod>,
    /// Dictionary reference image: estimate or residual.
    #[arg(long)]
    pub reference: Option<Reference>,
    /// `backproj`, `smooth` or `file:PATH`.
    #[arg(long)]
    pub init: Option<Initializer>,
}

impl SolverFlags {
    /// Parses `key = value` lines; `#` starts a comment. Keys use the flag
    /// names with `-` or `_`.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut f = SolverFlags::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::param(format!("config line {}: expected key = value", n + 1)))?;
            let value = value.trim().trim_matches('"');
            let ctx = |e: Error| Error::param(format!("config line {}: {e}", n + 1));
            let num = |v: &str| v.parse::<f64>().map_err(|_| ctx(Error::param(format!("'{v}' is not a number"))));
            let int = |v: &str| v.parse::<usize>().map_err(|_| ctx(Error::param(format!("'{v}' is not an integer"))));
            match key.trim().replace('-', "_").as_str() {
                "q" => f.q = Some(parse_q(value).map_err(ctx)?),
                "sigma_star" => f.sigma_star = Some(parse_sigma(value).map_err(ctx)?),
                "mu" => f.mu = Some(num(value)?),
                "patch" => f.patch = Some(int(value)?),
                "group" => f.group = Some(int(value)?),
                "stride" => f.stride = Some(int(value)?),
                "window" => f.window = Some(int(value)?),
                "iters" => f.iters = Some(int(value)?),
                "inner" => f.inner = Some(int(value)?),
                "gd_iters" => f.gd_iters = Some(int(value)?),
                "gd_tol" => f.gd_tol = Some(num(value)?),
                "eta" => f.eta = Some(num(value)?),
                "warm_inner" => f.warm_inner = Some(parse_bool(value).map_err(ctx)?),
                "x_solver" => f.x_solver = Some(value.parse().map_err(ctx)?),
                "reference" => f.reference = Some(value.parse().map_err(ctx)?),
                "init" => f.init = Some(value.parse().map_err(ctx)?),
                other => return Err(Error::param(format!("config line {}: unknown key '{other}'", n + 1))),
            }
        }
        Ok(f)
    }

    /// `self` wins over `base` field by field.
    pub fn over(self, base: SolverFlags) -> SolverFlags {
        SolverFlags {
            q: self.q.or(base.q),
            sigma_star: self.sigma_star.or(base.sigma_star),
            mu: self.mu.or(base.mu),
            patch: self.patch.or(base.patch),
            group: self.group.or(base.group),
            stride: self.stride.or(base.stride),
            window: self.window.or(base.window),
            iters: self.iters.or(base.iters),
            inner: self.inner.or(base.inner),
            gd_iters: self.gd_iters.or(base.gd_iters),
            gd_tol: self.gd_tol.or(base.gd_tol),
            eta: self.eta.or(base.eta),
            warm_inner: self.warm_inner.or(base.warm_inner),
            x_solver: self.x_solver.or(base.x_solver),
            reference: self.reference.or(base.reference),
            init: self.init.or(base.init),
        }
    }

    pub fn apply(&self, mut cfg: RecoveryConfig) -> RecoveryConfig {
        if let Some(q) = self.q {
            cfg.filter = q;
        }
        match self.sigma_star {
            Some(SigmaStar::Auto) => cfg.sigma_star = None,
            Some(SigmaStar::Value(v)) => cfg.sigma_star = Some(v),
            None => {}
        }
        cfg.mu = self.mu.unwrap_or(cfg.mu);
        cfg.patch = self.patch.unwrap_or(cfg.patch);
        cfg.group_size = self.group.unwrap_or(cfg.group_size);
        cfg.stride = self.stride.unwrap_or(cfg.stride);
        cfg.window = self.window.unwrap_or(cfg.window);
        cfg.outer_loops = self.iters.or(cfg.outer_loops);
        cfg.inner_loops = self.inner.unwrap_or(cfg.inner_loops);
        cfg.gd_iters = self.gd_iters.unwrap_or(cfg.gd_iters);
        cfg.gd_tol = self.gd_tol.unwrap_or(cfg.gd_tol);
        cfg.gd_eta = self.eta.or(cfg.gd_eta);
        cfg.gd_warm_inner = self.warm_inner.unwrap_or(cfg.gd_warm_inner);
        cfg.x_method = self.x_solver.unwrap_or(cfg.x_method);
        cfg.reference = self.reference.unwrap_or(cfg.reference);
        if let Some(init) = &self.init {
            cfg.initializer = init.clone();
        }
        cfg
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(flags: &SolverFlags, config: Option<&PathBuf>) -> Result<RecoveryConfig> {
    let file = match config {
        Some(path) => SolverFlags::parse_config(&std::fs::read_to_string(path)?)?,
        None => SolverFlags::default(),
    };
    let cfg = flags.clone().over(file).apply(RecoveryConfig::default());
    cfg.validate()?;
    Ok(cfg)
}
