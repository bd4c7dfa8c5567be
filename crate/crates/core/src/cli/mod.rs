//! Command-line front end: `hodw sense|recover|benchmark|diagnose`.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 corrupt input,
//! 4 numerical failure.

mod args;
mod manifest;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use rayon::prelude::*;

pub use args::{resolve_config, BenchmarkArgs, Cli, Command, DiagnoseArgs, RecoverArgs, SenseArgs, SigmaStar, SolverFlags};
pub use manifest::RunManifest;

use crate::error::{Error, Result};
use crate::image::ColorImage;
use crate::metrics::{fmt_db, psnr};
use crate::regularizer::FilterKind;
use crate::sensing::{read_measurements, write_measurements, MeasurementSet, SensingOperator};
use crate::solver::{recover, Recovery, RecoveryConfig, Trace};

pub const THREADS_ENV: &str = "HODW_THREADS";

/// Caps the global worker pool from `HODW_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::param(format!("{THREADS_ENV}={raw} is not a positive integer")))?;
    // a pool built earlier in the process wins; that is fine for tests
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match configure_threads().and_then(|_| dispatch(&cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hodw: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Sense(a) => cmd_sense(a).map(|_| ()),
        Command::Recover(a) => {
            let rec = cmd_recover(a)?;
            if let Some(p) = rec.trace.final_psnr() {
                println!("PSNR {} dB", fmt_db(p));
            }
            Ok(())
        }
        Command::Benchmark(a) => cmd_benchmark(a).map(|_| ()),
        Command::Diagnose(a) => cmd_diagnose(a).map(|_| ()),
    }
}

fn load_image(path: &Path) -> Result<ColorImage> {
    ColorImage::load(path)
}

fn load_measurements(path: &Path) -> Result<(SensingOperator, MeasurementSet)> {
    read_measurements(BufReader::new(File::open(path)?))
}

fn elapsed_ms(timing: bool, t: Instant) -> Option<f64> {
    timing.then(|| t.elapsed().as_secs_f64() * 1e3)
}

pub fn cmd_sense(a: &SenseArgs) -> Result<RunManifest> {
    let t = Instant::now();
    let x = load_image(&a.image)?;
    let op = SensingOperator::build(x.height(), x.width(), a.subrate, a.seed)?;
    let y = op.sense(&x)?;
    let mut out = BufWriter::new(File::create(&a.out)?);
    write_measurements(&mut out, &op, &y)?;
    out.flush()?;

    let mut m = RunManifest::new("sense", a.seed);
    m.inputs.insert("image".into(), a.image.clone());
    m.outputs.insert("measurements".into(), a.out.clone());
    m.subrate = Some(a.subrate);
    m.resolved.insert("m".into(), op.m() as f64);
    m.resolved.insert("n_pad".into(), op.n_pad() as f64);
    m.wall_clock_ms = elapsed_ms(a.timing, t);
    m.write(&RunManifest::sidecar_path(&a.out))?;
    Ok(m)
}

fn recovery_manifest(command: &str, op: &SensingOperator, cfg: &RecoveryConfig, rec: &Recovery) -> RunManifest {
    let mut m = RunManifest::new(command, op.seed());
    m.subrate = Some(op.subrate());
    m.config = Some(cfg.clone());
    m.resolved.insert("eta".into(), rec.eta);
    m.resolved.insert("outer_loops".into(), cfg.resolved_outer_loops() as f64);
    if let Some(s) = rec.sigma_star {
        m.resolved.insert("sigma_star".into(), s);
    }
    if let Some(p) = rec.trace.final_psnr().filter(|p| p.is_finite()) {
        m.resolved.insert("psnr".into(), p);
    }
    m
}

fn solver_config(flags: &SolverFlags, config: Option<&PathBuf>, oracle: bool, timing: bool) -> Result<RecoveryConfig> {
    let mut cfg = resolve_config(flags, config)?;
    if oracle {
        cfg.filter = FilterKind::Oracle;
    }
    cfg.timing = timing;
    Ok(cfg)
}

pub fn cmd_recover(a: &RecoverArgs) -> Result<Recovery> {
    let t = Instant::now();
    let mut cfg = solver_config(&a.solver, a.config.as_ref(), a.oracle, a.timing)?;
    if a.oracle && a.truth.is_none() {
        return Err(Error::param("--oracle needs --truth"));
    }
    let (op, y) = load_measurements(&a.measurements)?;
    cfg.seed = op.seed();
    let truth = a.truth.as_deref().map(load_image).transpose()?;
    let rec = recover(&y, &op, &cfg, truth.as_ref())?;

    rec.image.save(&a.out)?;
    let trace_path = a.trace.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    std::fs::write(&trace_path, rec.trace.to_csv())?;

    let mut m = recovery_manifest("recover", &op, &cfg, &rec);
    m.inputs.insert("measurements".into(), a.measurements.clone());
    if let Some(tr) = &a.truth {
        m.inputs.insert("truth".into(), tr.clone());
    }
    m.outputs.insert("image".into(), a.out.clone());
    m.outputs.insert("trace".into(), trace_path);
    m.wall_clock_ms = elapsed_ms(a.timing, t);
    m.write(&RunManifest::sidecar_path(&a.out))?;
    Ok(rec)
}

pub fn cmd_diagnose(a: &DiagnoseArgs) -> Result<Trace> {
    let mut cfg = solver_config(&a.solver, a.config.as_ref(), a.oracle, a.timing)?;
    let (op, y) = load_measurements(&a.measurements)?;
    cfg.seed = op.seed();
    let truth = load_image(&a.truth)?;
    let rec = recover(&y, &op, &cfg, Some(&truth))?;
    let csv = rec.trace.diagnostics_csv();
    match &a.out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(rec.trace)
}

/// One benchmark run.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRow {
    pub image: String,
    pub subrate: f64,
    pub design: FilterKind,
    pub sigma_star: Option<f64>,
    pub psnr: f64,
    pub seconds: Option<f64>,
}

impl BenchmarkRow {
    pub const CSV_HEADER: &'static str = "image,subrate,design,sigma_star,psnr,seconds";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.image,
            self.subrate,
            self.design,
            self.sigma_star.map(|s| s.to_string()).unwrap_or_default(),
            fmt_db(self.psnr),
            self.seconds.map(|s| s.to_string()).unwrap_or_default()
        )
    }
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::param(format!("no PNG/PPM images in {}", dir.display())));
    }
    Ok(files)
}

/// Mean PSNR gap of the reference design over each other design, per
/// subrate, with a trailing average column.
pub fn delta_sheet(rows: &[BenchmarkRow], subrates: &[f64], designs: &[FilterKind]) -> String {
    let reference = if designs.contains(&FilterKind::Hard) {
        FilterKind::Hard
    } else {
        designs[0]
    };
    let mean_psnr = |d: FilterKind, s: f64| {
        let v: Vec<f64> = rows.iter().filter(|r| r.design == d && r.subrate == s).map(|r| r.psnr).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    let mut out = format!("design (reference {reference})");
    for s in subrates {
        out.push_str(&format!(",{s}"));
    }
    out.push_str(",average\n");
    for &d in designs.iter().filter(|&&d| d != reference) {
        let deltas: Vec<f64> = subrates.iter().map(|&s| mean_psnr(reference, s) - mean_psnr(d, s)).collect();
        out.push_str(&d.to_string());
        for v in &deltas {
            out.push_str(&format!(",{v:.2}"));
        }
        let avg = deltas.iter().sum::<f64>() / deltas.len().max(1) as f64;
        out.push_str(&format!(",{avg:.2}\n"));
    }
    out
}

pub fn cmd_benchmark(a: &BenchmarkArgs) -> Result<Vec<BenchmarkRow>> {
    if a.subrates.is_empty() || a.designs.is_empty() {
        return Err(Error::param("need at least one subrate and one design"));
    }
    let base = solver_config(&a.solver, a.config.as_ref(), false, false)?;
    let images = list_images(&a.images)?;
    let mut jobs = Vec::new();
    for path in &images {
        let full = load_image(path)?;
        let side = if a.crop == 0 { usize::MAX } else { a.crop };
        let img = full.center_crop(side.min(full.height()).min(full.width()))?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for &subrate in &a.subrates {
            let op = SensingOperator::build(img.height(), img.width(), subrate, a.seed)?;
            let y = op.sense(&img)?;
            for &design in &a.designs {
                jobs.push((name.clone(), img.clone(), op.clone(), y.clone(), subrate, design));
            }
        }
    }

    let rows = jobs
        .par_iter()
        .map(|(name, img, op, y, subrate, design)| {
            let t = Instant::now();
            let cfg = RecoveryConfig {
                filter: *design,
                seed: a.seed,
                ..base.clone()
            };
            let rec = recover(y, op, &cfg, Some(img))?;
            Ok(BenchmarkRow {
                image: name.clone(),
                subrate: *subrate,
                design: *design,
                sigma_star: rec.sigma_star,
                psnr: psnr(&rec.image, img)?,
                seconds: a.timing.then(|| t.elapsed().as_secs_f64()),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from(BenchmarkRow::CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    std::fs::write(&a.out, csv)?;
    let delta_path = a.delta.clone().unwrap_or_else(|| {
        let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        a.out.with_file_name(format!("{stem}_delta.csv"))
    });
    std::fs::write(delta_path, delta_sheet(&rows, &a.subrates, &a.designs))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(design: FilterKind, subrate: f64, psnr: f64) -> BenchmarkRow {
        BenchmarkRow {
            image: "a".into(),
            subrate,
            design,
            sigma_star: None,
            psnr,
            seconds: None,
        }
    }

    #[test]
    fn delta_layout() {
        let rows = vec![
            row(FilterKind::Hard, 0.1, 30.0),
            row(FilterKind::Soft, 0.1, 29.0),
            row(FilterKind::Hard, 0.2, 32.0),
            row(FilterKind::Soft, 0.2, 31.5),
        ];
        let sheet = delta_sheet(&rows, &[0.1, 0.2], &[FilterKind::Soft, FilterKind::Hard]);
        assert_eq!(sheet, "design (reference q=inf),0.1,0.2,average\nq=1,1.00,0.50,0.75\n");
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_from(["hodw", "frobnicate"]), 2);
        assert_eq!(run_from(["hodw", "recover", "m.bin", "-o", "x.png", "--q", "3"]), 2);
        assert_eq!(run_from(["hodw", "--version"]), 0);
    }
}
