//! Nonlocal grouping and the higher-order dictionary on a natural image.

use std::path::PathBuf;

use hodw::grouping::coverage;
use hodw::{analyze, learn_dictionary, synthesize, ColorImage, GroupingParams};

fn main() -> hodw::Result<()> {
    let x = ColorImage::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/chelsea.png"))?;
    let params = GroupingParams::default();
    let (dict, alpha) = learn_dictionary(&x, &params)?;

    let idx = dict.indices();
    let first = &idx[0];
    println!("{} groups of {} patches ({}x{})", dict.group_count(), first.len(), params.patch, params.patch);
    println!("group 0 reference {:?}, members {:?} ...", first.reference(), &first.members[..4]);

    let cover = coverage(&idx, x.height(), x.width(), params.patch);
    let (lo, hi) = (cover.iter().min().unwrap(), cover.iter().max().unwrap());
    println!("pixel coverage between {lo} and {hi}");

    let small = alpha.values().filter(|v| v.abs() < 1.0).count();
    println!(
        "{} coefficients, {:.1}% below 1 in magnitude",
        alpha.num_coefficients(),
        100.0 * small as f64 / alpha.num_coefficients() as f64
    );

    let back = synthesize(&analyze(&x, &dict)?, &dict)?;
    let err = back.sub(&x).as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("synthesize(analyze(x)) error {err:.2e}");
    Ok(())
}
