//! Per-iteration check that the image-domain error matches the
//! coefficient-domain error, plus the residual moments.

use std::path::PathBuf;

use hodw::{recover, ColorImage, Initializer, RecoveryConfig, SensingOperator};

fn main() -> hodw::Result<()> {
    let truth = ColorImage::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/coffee.png"))?.center_crop(48)?;
    let op = SensingOperator::build(48, 48, 0.3, 9)?;
    let y = op.sense(&truth)?;
    let cfg = RecoveryConfig { outer_loops: Some(12), initializer: Initializer::Smooth, ..Default::default() };
    let rec = recover(&y, &op, &cfg, Some(&truth))?;
    print!("{}", rec.trace.diagnostics_csv());
    Ok(())
}
