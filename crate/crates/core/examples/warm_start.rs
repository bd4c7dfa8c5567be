//! Back-projection versus the smooth least-squares warm start, before and
//! after a short run.

use std::path::PathBuf;

use hodw::solver::{smooth_start, SMOOTH_WEIGHT};
use hodw::{psnr, recover, ColorImage, Initializer, RecoveryConfig, SensingOperator};

fn main() -> hodw::Result<()> {
    let truth = ColorImage::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/chelsea.png"))?.center_crop(48)?;
    let op = SensingOperator::build(48, 48, 0.2, 2)?;
    let y = op.sense(&truth)?;

    for lambda in [0.001, SMOOTH_WEIGHT, 0.1] {
        let x0 = smooth_start(&y, &op, lambda)?;
        println!("smooth start, lambda {lambda}: {:.2} dB", psnr(&x0.clipped(), &truth)?);
    }

    for init in [Initializer::BackProjection, Initializer::Smooth] {
        let cfg = RecoveryConfig { outer_loops: Some(10), initializer: init.clone(), ..Default::default() };
        let rec = recover(&y, &op, &cfg, Some(&truth))?;
        println!(
            "{init:>8}: start {:.2} dB, after 10 iterations {:.2} dB",
            rec.initial_psnr.unwrap_or(f64::NAN),
            psnr(&rec.image, &truth)?
        );
    }
    Ok(())
}
