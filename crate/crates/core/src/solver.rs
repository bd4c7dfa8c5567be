//! Split Bregman recovery: gradient-descent x-update, analysis and
//! filtering of the group cores, Bregman variable update.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hodict::{analyze, learn_dictionary, synthesize, GroupingParams, HigherOrderDictionary, SparseRep};
use crate::image::ColorImage;
use crate::metrics::{fmt_db, lln_diagnostic, psnr};
use crate::regularizer::{apply_design, estimate_error_std, sigma_star_default, FilterKind, WeightDesign};
use crate::sensing::{MeasurementSet, SensingOperator};

/// Starting point `x^(0)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Initializer {
    /// `Phi^T y`.
    BackProjection,
    /// A previously recovered image on disk (warm start).
    File(PathBuf),
    /// Gradient-regularized least squares, see [`smooth_start`].
    Smooth,
}

impl fmt::Display for Initializer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Initializer::BackProjection => f.pad("backproj"),
            Initializer::File(p) => write!(f, "file:{}", p.display()),
            Initializer::Smooth => f.pad("smooth"),
        }
    }
}

impl FromStr for Initializer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "backproj" => Ok(Initializer::BackProjection),
            "smooth" => Ok(Initializer::Smooth),
            t => match t.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Initializer::File(PathBuf::from(p))),
                _ => Err(Error::param(format!("initializer '{t}', expected backproj, smooth or file:PATH"))),
            },
        }
    }
}

impl From<Initializer> for String {
    fn from(i: Initializer) -> String {
        i.to_string()
    }
}

impl TryFrom<String> for Initializer {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Image the dictionary is relearned from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// The current clean estimate `alpha . D`, relearned before each outer loop.
    Estimate,
    /// `x - b` right after the x-update; its cores are then `r` itself.
    Residual,
}

impl FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "estimate" => Ok(Reference::Estimate),
            "residual" => Ok(Reference::Residual),
            t => Err(Error::param(format!("reference '{t}', expected estimate or residual"))),
        }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reference::Estimate => "estimate",
            Reference::Residual => "residual",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    pub mu: f64,
    pub patch: usize,
    pub group_size: usize,
    pub stride: usize,
    pub window: usize,
    /// Dictionary relearn count; `None` picks 60 total iterations for a
    /// warm start and 200 otherwise.
    pub outer_loops: Option<usize>,
    pub inner_loops: usize,
    pub x_method: XMethod,
    /// Iteration cap of the x-update.
    pub gd_iters: usize,
    /// Early stop threshold of the x-update, see [`XUpdate::tol`].
    pub gd_tol: f64,
    /// `None` resolves to `1 / (N/M + mu)`.
    pub gd_eta: Option<f64>,
    pub gd_warm_inner: bool,
    pub filter: FilterKind,
    /// `None` resolves to the tuned value for the subrate.
    pub sigma_star: Option<f64>,
    pub seed: u64,
    pub initializer: Initializer,
    pub reference: Reference,
    /// Record wall-clock time in the trace. Off by default so that traces are
    /// reproducible byte for byte.
    pub timing: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        let g = GroupingParams::default();
        Self {
            mu: 0.0025,
            patch: g.patch,
            group_size: g.group_size,
            stride: g.stride,
            window: g.window,
            outer_loops: None,
            inner_loops: 1,
            x_method: XMethod::Conjugate,
            gd_iters: 200,
            gd_tol: 1e-6,
            gd_eta: None,
            gd_warm_inner: true,
            filter: FilterKind::Hard,
            sigma_star: None,
            seed: 0,
            initializer: Initializer::BackProjection,
            reference: Reference::Estimate,
            timing: false,
        }
    }
}

impl RecoveryConfig {
    pub fn grouping(&self) -> GroupingParams {
        GroupingParams {
            patch: self.patch,
            group_size: self.group_size,
            stride: self.stride,
            window: self.window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu = {} must be positive", self.mu));
        }
        if self.patch < 2 {
            return bad(format!("patch = {} must be at least 2", self.patch));
        }
        if self.group_size == 0 || self.stride == 0 || self.inner_loops == 0 || self.gd_iters == 0 {
            return bad("group size, stride, inner loops and gd iterations must be positive".into());
        }
        if self.window % 2 == 0 {
            return bad(format!("window = {} must be odd", self.window));
        }
        if self.outer_loops == Some(0) {
            return bad("outer loops must be positive".into());
        }
        if let Some(eta) = self.gd_eta {
            let limit = 2.0 / (1.0 + self.mu);
            if !(eta > 0.0 && eta < limit) {
                return bad(format!("eta = {eta} outside (0, {limit})"));
            }
        }
        if let Some(s) = self.sigma_star {
            if !(s >= 0.0) {
                return bad(format!("sigma* = {s} must be non-negative"));
            }
        }
        if !(self.gd_tol >= 0.0) {
            return bad(format!("gd tolerance {}", self.gd_tol));
        }
        Ok(())
    }

    pub fn resolved_outer_loops(&self) -> usize {
        self.outer_loops.unwrap_or_else(|| {
            let total: usize = match self.initializer {
                Initializer::BackProjection => 200,
                Initializer::File(_) | Initializer::Smooth => 60,
            };
            total.div_ceil(self.inner_loops.max(1))
        })
    }

    pub fn resolved_eta(&self, op: &SensingOperator) -> f64 {
        self.gd_eta.unwrap_or(1.0 / (op.gain() + self.mu))
    }

    /// Threshold for the practical filters; `None` for the oracle.
    pub fn resolved_sigma_star(&self, subrate: f64) -> Result<Option<f64>> {
        match (self.filter, self.sigma_star) {
            (FilterKind::Oracle, _) => Ok(None),
            (_, Some(s)) => Ok(Some(s)),
            (kind, None) => sigma_star_default(kind, subrate).map(Some),
        }
    }

    fn x_solver(&self, op: &SensingOperator) -> XUpdate {
        XUpdate {
            method: self.x_method,
            mu: self.mu,
            eta: self.resolved_eta(op),
            iters: self.gd_iters,
            tol: self.gd_tol,
        }
    }
}

/// Iterative method for the x-subproblem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XMethod {
    /// Fixed-step gradient descent, `x <- x - eta d`.
    Gradient,
    /// Conjugate gradient on the normal equations.
    Conjugate,
}

impl FromStr for XMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gd" | "gradient" => Ok(XMethod::Gradient),
            "cg" | "conjugate" => Ok(XMethod::Conjugate),
            t => Err(Error::param(format!("x-solver '{t}', expected gd or cg"))),
        }
    }
}

impl fmt::Display for XMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            XMethod::Gradient => "gd",
            XMethod::Conjugate => "cg",
        })
    }
}

/// Solver for `(Phi^T Phi + mu I) x = Phi^T y + mu v`, the minimizer of
/// `|y - Phi x|^2 / 2 + mu |x - v|^2 / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XUpdate {
    pub method: XMethod,
    pub mu: f64,
    /// Step size, used by gradient descent only.
    pub eta: f64,
    pub iters: usize,
    /// Gradient descent stops once `eta |d| <= tol |x|`; conjugate gradient
    /// once the residual is below `tol` relative to the right-hand side.
    pub tol: f64,
}

const GUARD_SPAN: usize = 5;
const GUARD_GROWTH: f64 = 10.0;

/// `(Phi^T Phi + mu I) x`
fn normal_apply(op: &SensingOperator, mu: f64, x: &ColorImage) -> Result<ColorImage> {
    let mut out = op.adjoint(&op.sense(x)?)?;
    for (o, &v) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *o += mu * v;
    }
    Ok(out)
}

fn axpy(y: &mut ColorImage, a: f64, x: &ColorImage) {
    for (yv, &xv) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yv += a * xv;
    }
}

impl XUpdate {
    /// Minimizes with `v = target + b`, starting from `start`.
    pub fn solve(
        &self,
        y: &MeasurementSet,
        op: &SensingOperator,
        target: &ColorImage,
        b: &ColorImage,
        start: ColorImage,
    ) -> Result<ColorImage> {
        target.check_dims(b)?;
        target.check_dims(&start)?;
        let mut rhs = op.adjoint(y)?;
        target.check_dims(&rhs)?;
        for ((r, &t), &bv) in rhs.as_mut_slice().iter_mut().zip(target.as_slice()).zip(b.as_slice()) {
            *r += self.mu * (t + bv);
        }
        match self.method {
            XMethod::Gradient => self.gradient(op, &rhs, start),
            XMethod::Conjugate => self.conjugate(op, &rhs, start),
        }
    }

    fn gradient(&self, op: &SensingOperator, rhs: &ColorImage, mut x: ColorImage) -> Result<ColorImage> {
        let mut norms: Vec<f64> = Vec::with_capacity(self.iters);
        for step in 0..self.iters {
            let mut d = normal_apply(op, self.mu, &x)?;
            axpy(&mut d, -1.0, rhs);
            let dn = d.norm_sq().sqrt();
            if !dn.is_finite() || (step >= GUARD_SPAN && dn > GUARD_GROWTH * norms[step - GUARD_SPAN]) {
                return Err(Error::Divergence { step, norm: dn });
            }
            norms.push(dn);
            let xn = x.norm_sq().sqrt();
            axpy(&mut x, -self.eta, &d);
            if self.eta * dn <= self.tol * xn {
                break;
            }
        }
        Ok(x)
    }

    fn conjugate(&self, op: &SensingOperator, rhs: &ColorImage, mut x: ColorImage) -> Result<ColorImage> {
        let stop = self.tol * rhs.norm_sq().sqrt();
        let mut r = rhs.sub(&normal_apply(op, self.mu, &x)?);
        let mut p = r.clone();
        let mut rr = r.norm_sq();
        for step in 0..self.iters {
            if rr.sqrt() <= stop {
                break;
            }
            let ap = normal_apply(op, self.mu, &p)?;
            let pap = p.dot(&ap);
            if !(pap > 0.0 && pap.is_finite()) {
                return Err(Error::Divergence { step, norm: rr.sqrt() });
            }
            let a = rr / pap;
            axpy(&mut x, a, &p);
            axpy(&mut r, -a, &ap);
            let next = r.norm_sq();
            let beta = next / rr;
            rr = next;
            for (pv, &rv) in p.as_mut_slice().iter_mut().zip(r.as_slice()) {
                *pv = rv + beta * *pv;
            }
        }
        Ok(x)
    }
}

/// Default `lambda` of [`smooth_start`], relative to the operator gain.
pub const SMOOTH_WEIGHT: f64 = 0.01;

/// `x * L` per channel, with `L` the 4-neighbour graph Laplacian (free boundary).
fn laplacian(x: &ColorImage) -> ColorImage {
    let (h, w) = x.dims();
    ColorImage::from_fn(h, w, |i, j, c| {
        let v = x.get(i, j, c);
        let mut acc = 0.0;
        let mut edge = |ii: usize, jj: usize| acc += v - x.get(ii, jj, c);
        if i > 0 {
            edge(i - 1, j);
        }
        if i + 1 < h {
            edge(i + 1, j);
        }
        if j > 0 {
            edge(i, j - 1);
        }
        if j + 1 < w {
            edge(i, j + 1);
        }
        acc
    })
}

/// Cheap warm start: minimizes `||y - Phi x||^2 + lambda * gain * ||grad x||^2`
/// by conjugate gradients. Knows nothing about the dictionary or the filters,
/// so every weight design starts from the same place.
pub fn smooth_start(y: &MeasurementSet, op: &SensingOperator, lambda: f64) -> Result<ColorImage> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!("smoothing weight {lambda}")));
    }
    let weight = lambda * op.gain();
    let apply = |x: &ColorImage| -> Result<ColorImage> {
        let mut out = op.adjoint(&op.sense(x)?)?;
        axpy(&mut out, weight, &laplacian(x));
        Ok(out)
    };
    let rhs = op.adjoint(y)?;
    let stop = 1e-8 * rhs.norm_sq().sqrt();
    let mut x = ColorImage::zeros(op.height(), op.width());
    let mut r = rhs;
    let mut p = r.clone();
    let mut rr = r.norm_sq();
    for step in 0..2000 {
        if rr.sqrt() <= stop {
            break;
        }
        let ap = apply(&p)?;
        let pap = p.dot(&ap);
        if !(pap > 0.0 && pap.is_finite()) {
            return Err(Error::Divergence { step, norm: rr.sqrt() });
        }
        let a = rr / pap;
        axpy(&mut x, a, &p);
        axpy(&mut r, -a, &ap);
        let next = r.norm_sq();
        let beta = next / rr;
        rr = next;
        for (pv, &rv) in p.as_mut_slice().iter_mut().zip(r.as_slice()) {
            *pv = rv + beta * *pv;
        }
    }
    Ok(x)
}

/// One x-update: zero start unless `warm` is given.
pub fn x_update(
    y: &MeasurementSet,
    op: &SensingOperator,
    target: &ColorImage,
    b: &ColorImage,
    warm: Option<&ColorImage>,
    solver: &XUpdate,
) -> Result<ColorImage> {
    let start = match warm {
        Some(x) => x.clone(),
        None => ColorImage::zeros(target.height(), target.width()),
    };
    solver.solve(y, op, target, b, start)
}

/// Per-iteration record. Optional fields are blank in CSV output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// `|y - Phi x|^2` after the x-update.
    pub data_fidelity: f64,
    /// PSNR of the clipped estimate `alpha . D`.
    pub psnr: Option<f64>,
    /// Oracle error level.
    pub sigma_t: Option<f64>,
    pub wall_ms: Option<f64>,
    pub lln_lhs: Option<f64>,
    pub lln_rhs: Option<f64>,
    pub residual_mean: Option<f64>,
    pub residual_std: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_db).unwrap_or_default()
}

impl Trace {
    pub const CSV_HEADER: &'static str = "iteration,data_fidelity,psnr,sigma_t,wall_ms";
    pub const DIAGNOSTICS_HEADER: &'static str =
        "iteration,data_fidelity,psnr,sigma_t,wall_ms,lln_lhs,lln_rhs,lln_ratio,residual_mean,residual_std";

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_psnr(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.psnr)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iteration,
                r.data_fidelity,
                opt(r.psnr),
                opt(r.sigma_t),
                opt(r.wall_ms)
            ));
        }
        s
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut s = String::from(Self::DIAGNOSTICS_HEADER);
        s.push('\n');
        for r in &self.rows {
            let ratio = match (r.lln_lhs, r.lln_rhs) {
                (Some(l), Some(h)) if h > 0.0 => Some(l / h),
                _ => None,
            };
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.iteration,
                r.data_fidelity,
                opt(r.psnr),
                opt(r.sigma_t),
                opt(r.wall_ms),
                opt(r.lln_lhs),
                opt(r.lln_rhs),
                opt(ratio),
                opt(r.residual_mean),
                opt(r.residual_std)
            ));
        }
        s
    }
}

/// Iteration variables.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: ColorImage,
    pub b: ColorImage,
    pub dict: Option<HigherOrderDictionary>,
    pub alpha: Option<SparseRep>,
    /// `alpha . D`, kept as an image so it survives a relearn.
    pub estimate: ColorImage,
    pub iteration: usize,
    pub trace: Trace,
}

#[derive(Clone, Debug)]
pub struct Recovery {
    /// Final estimate clipped to `[0, 255]`.
    pub image: ColorImage,
    pub trace: Trace,
    pub initial_psnr: Option<f64>,
    pub sigma_star: Option<f64>,
    pub eta: f64,
    pub state: SolverState,
}

/// Runs the recovery. With `cfg.filter == Oracle` the ground truth is
/// required; otherwise it is only used for the trace.
pub fn recover(
    y: &MeasurementSet,
    op: &SensingOperator,
    cfg: &RecoveryConfig,
    truth: Option<&ColorImage>,
) -> Result<Recovery> {
    if cfg.filter == FilterKind::Oracle && truth.is_none() {
        return Err(Error::param("the oracle design needs the original image"));
    }
    run(y, op, cfg, truth)
}

/// Recovery with the oracle MMSE weights computed from `original`.
pub fn recover_oracle(
    y: &MeasurementSet,
    op: &SensingOperator,
    cfg: &RecoveryConfig,
    original: &ColorImage,
) -> Result<Recovery> {
    let cfg = RecoveryConfig {
        filter: FilterKind::Oracle,
        ..cfg.clone()
    };
    run(y, op, &cfg, Some(original))
}

fn initial_image(op: &SensingOperator, y: &MeasurementSet, init: &Initializer) -> Result<ColorImage> {
    let x0 = match init {
        Initializer::BackProjection => op.back_project(y)?,
        Initializer::File(path) => ColorImage::load(path)?,
        Initializer::Smooth => smooth_start(y, op, SMOOTH_WEIGHT)?,
    };
    if x0.dims() != (op.height(), op.width()) {
        return Err(Error::shape(format!(
            "initial image is {}x{}, measurements are {}x{}",
            x0.height(),
            x0.width(),
            op.height(),
            op.width()
        )));
    }
    Ok(x0)
}

fn check_finite(iteration: usize, what: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::NonFinite {
            iteration,
            what: what.into(),
        })
    }
}

fn run(
    y: &MeasurementSet,
    op: &SensingOperator,
    cfg: &RecoveryConfig,
    truth: Option<&ColorImage>,
) -> Result<Recovery> {
    cfg.validate()?;
    if y.y.iter().any(|c| c.len() != op.m()) {
        return Err(Error::shape("measurements do not match the operator"));
    }
    if let Some(t) = truth {
        if t.dims() != (op.height(), op.width()) {
            return Err(Error::shape("ground truth size differs from the measurements"));
        }
    }
    let started = Instant::now();
    let params = cfg.grouping();
    let gd = cfg.x_solver(op);
    let sigma_star = cfg.resolved_sigma_star(op.subrate())?;
    let oracle = cfg.filter == FilterKind::Oracle;

    let x0 = initial_image(op, y, &cfg.initializer)?;
    let initial_psnr = truth.map(|t| psnr(&x0.clipped(), t)).transpose()?;
    let (h, w) = x0.dims();
    let mut st = SolverState {
        b: ColorImage::zeros(h, w),
        estimate: x0.clone(),
        x: x0,
        dict: None,
        alpha: None,
        iteration: 0,
        trace: Trace::default(),
    };

    for _ in 0..cfg.resolved_outer_loops() {
        let mut truth_cores: Option<SparseRep> = None;
        if cfg.reference == Reference::Estimate {
            let (d, _) = learn_dictionary(&st.estimate, &params)?;
            st.dict = Some(d);
        }
        for inner in 0..cfg.inner_loops {
            let t = st.iteration + 1;
            let warm = cfg.gd_warm_inner.then_some(&st.x);
            let x = x_update(y, op, &st.estimate, &st.b, warm, &gd)?;
            check_finite(t, "x", x.is_finite())?;
            let v = x.sub(&st.b);
            let r = if cfg.reference == Reference::Residual && inner == 0 {
                let (d, cores) = learn_dictionary(&v, &params)?;
                st.dict = Some(d);
                truth_cores = None;
                cores
            } else {
                analyze(&v, st.dict.as_ref().expect("dictionary learned"))?
            };
            let dict = st.dict.as_ref().expect("dictionary learned");
            if truth_cores.is_none() {
                if let Some(tr) = truth {
                    truth_cores = Some(analyze(tr, dict)?);
                }
            }

            let mut row = TraceRow {
                iteration: t,
                data_fidelity: y.sub(&op.sense(&x)?).norm_sq(),
                psnr: None,
                sigma_t: None,
                wall_ms: None,
                lln_lhs: None,
                lln_rhs: None,
                residual_mean: None,
                residual_std: None,
            };
            if let Some(a0) = &truth_cores {
                let (lhs, rhs) = lln_diagnostic(&x, a0, dict, &st.b)?;
                let (mean, std) = estimate_error_std(&r, a0)?;
                row.lln_lhs = Some(lhs);
                row.lln_rhs = Some(rhs);
                row.residual_mean = Some(mean);
                row.residual_std = Some(std);
            }

            let alpha = if oracle {
                let a0 = truth_cores.as_ref().expect("oracle needs truth");
                let sigma_t = row.residual_std.expect("computed with truth");
                row.sigma_t = Some(sigma_t);
                apply_design(&WeightDesign::Oracle { truth: a0, sigma_t }, &r)?
            } else {
                let design = WeightDesign::practical(cfg.filter, sigma_star.expect("practical design"))?;
                apply_design(&design, &r)?
            };
            check_finite(t, "alpha", alpha.is_finite())?;
            let estimate = synthesize(&alpha, dict)?;
            // b <- b - (x - alpha . D)
            let b = st.b.sub(&x.sub(&estimate));
            check_finite(t, "b", b.is_finite())?;

            if let Some(tr) = truth {
                row.psnr = Some(psnr(&estimate.clipped(), tr)?);
            }
            if cfg.timing {
                row.wall_ms = Some(started.elapsed().as_secs_f64() * 1e3);
            }
            st.x = x;
            st.b = b;
            st.alpha = Some(alpha);
            st.estimate = estimate;
            st.iteration = t;
            st.trace.rows.push(row);
        }
    }

    Ok(Recovery {
        image: st.estimate.clipped(),
        trace: st.trace.clone(),
        initial_psnr,
        sigma_star,
        eta: gd.eta,
        state: st,
    })
}
