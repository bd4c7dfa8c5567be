//! How far the practical hard-threshold design sits from the oracle MMSE
//! filter, which knows the true coefficients.

use std::path::PathBuf;

use hodw::{psnr, recover, recover_oracle, ColorImage, FilterKind, Initializer, RecoveryConfig, SensingOperator};

fn main() -> hodw::Result<()> {
    let truth = ColorImage::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/rocket.png"))?.center_crop(48)?;
    let op = SensingOperator::build(48, 48, 0.2, 5)?;
    let y = op.sense(&truth)?;
    let cfg = RecoveryConfig {
        filter: FilterKind::Hard,
        outer_loops: Some(15),
        initializer: Initializer::Smooth,
        ..Default::default()
    };

    let hard = recover(&y, &op, &cfg, Some(&truth))?;
    let oracle = recover_oracle(&y, &op, &cfg, &truth)?;
    let (ph, po) = (psnr(&hard.image, &truth)?, psnr(&oracle.image, &truth)?);
    println!("q=inf  {ph:.2} dB");
    println!("oracle {po:.2} dB  (+{:.2})", po - ph);
    if let Some(last) = oracle.trace.rows.last() {
        println!("oracle noise level at the last iteration: {:.3}", last.sigma_t.unwrap_or(f64::NAN));
    }
    Ok(())
}
