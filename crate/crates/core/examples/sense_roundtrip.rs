//! Simulate measurements of a fixture image, store them, read them back and
//! compare the back-projection with the original.
//!
//! cargo run --release --example sense_roundtrip -- [image.png] [subrate]

use std::path::PathBuf;

use hodw::sensing::{read_measurements, write_measurements};
use hodw::{psnr, ColorImage, SensingOperator};

fn main() -> hodw::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/coffee.png"));
    let subrate: f64 = args.next().map_or(Ok(0.25), |s| s.parse()).expect("subrate");

    let x = ColorImage::load(&path)?;
    let op = SensingOperator::build(x.height(), x.width(), subrate, 42)?;
    let y = op.sense(&x)?;
    println!(
        "{}x{} image, padded length {}, {} measurements per channel (gain N/M = {:.3})",
        x.height(),
        x.width(),
        op.n_pad(),
        op.m(),
        op.gain()
    );

    let mut bytes = Vec::new();
    write_measurements(&mut bytes, &op, &y)?;
    let (op2, y2) = read_measurements(bytes.as_slice())?;
    assert_eq!(y2, y);
    println!("measurement file: {} bytes, reread ok (seed {})", bytes.len(), op2.seed());

    // <Phi x, y> == <x, Phi^T y>
    let back = op.back_project(&y)?;
    println!("<Phi x, y> = {:.6e}", y.norm_sq());
    println!("<x, Phi^T y> = {:.6e}", x.dot(&back));
    println!("back-projection PSNR {:.2} dB", psnr(&back.clipped(), &x)?);

    // full rate is an isometry only when h*w needs no padding
    let square = x.center_crop(64)?;
    let full = SensingOperator::build(64, 64, 1.0, 42)?;
    let again = full.adjoint(&full.sense(&square)?)?;
    let err = square.sub(&again).as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("64x64 crop, subrate 1 round trip, max error {err:.2e}");
    Ok(())
}
