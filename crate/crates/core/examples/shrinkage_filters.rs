//! The filters induced by each weight design, side by side.

use hodw::regularizer::{filter_hard, filter_oracle, filter_soft, filter_wiener, sigma_star_default};
use hodw::FilterKind;

fn main() -> hodw::Result<()> {
    let s = 2.0;
    println!("sigma* = {s}; oracle uses alpha0 = r / 2 and sigma = {s}");
    println!("{:>6} {:>8} {:>8} {:>8} {:>8}", "r", "q=1", "q=2", "q=inf", "oracle");
    // `+ 0.0` folds negative zeros
    for k in -6..=6 {
        let r = k as f64;
        println!(
            "{r:>6.1} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            filter_soft(r, s) + 0.0,
            filter_wiener(r, s) + 0.0,
            filter_hard(r, s) + 0.0,
            filter_oracle(r, r / 2.0, s) + 0.0
        );
    }

    println!("\ndefault sigma* by subrate");
    for kind in FilterKind::PRACTICAL {
        let row: Vec<String> = [0.1, 0.2, 0.3, 0.4]
            .iter()
            .map(|&sr| sigma_star_default(kind, sr).map(|v| format!("{v:7.3}")))
            .collect::<hodw::Result<_>>()?;
        println!("{kind:>6}: {}", row.join(" "));
    }
    Ok(())
}
