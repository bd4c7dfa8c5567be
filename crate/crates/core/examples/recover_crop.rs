//! End-to-end recovery of a 48x48 crop from 30% measurements with a smooth
//! warm start.
//!
//! cargo run --release --example recover_crop -- [q] [iterations]

use std::path::PathBuf;

use hodw::{psnr, recover, ColorImage, FilterKind, Initializer, RecoveryConfig, SensingOperator};

fn main() -> hodw::Result<()> {
    let mut args = std::env::args().skip(1);
    let filter: FilterKind = args.next().as_deref().unwrap_or("inf").parse()?;
    let iters: usize = args.next().map_or(Ok(20), |s| s.parse()).expect("iterations");

    let truth = ColorImage::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/astronaut.png"))?.center_crop(48)?;
    let op = SensingOperator::build(48, 48, 0.3, 1)?;
    let y = op.sense(&truth)?;
    let cfg = RecoveryConfig {
        filter,
        outer_loops: Some(iters),
        initializer: Initializer::Smooth,
        ..Default::default()
    };
    let rec = recover(&y, &op, &cfg, Some(&truth))?;

    println!("design {filter}, sigma* {:.3}", rec.sigma_star.unwrap_or(f64::NAN));
    println!("warm start {:.2} dB", rec.initial_psnr.unwrap_or(f64::NAN));
    for row in rec.trace.rows.iter().filter(|r| r.iteration % 5 == 0 || r.iteration == 1) {
        println!("iter {:>3}  PSNR {:6.2} dB  fidelity {:.3e}", row.iteration, row.psnr.unwrap_or(f64::NAN), row.data_fidelity);
    }
    println!("final {:.2} dB", psnr(&rec.image, &truth)?);
    rec.image.save(&std::env::temp_dir().join("hodw_recover_crop.png"))?;
    Ok(())
}
