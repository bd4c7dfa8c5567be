//! HOSVD of a patch-like 4-way tensor: smooth rows and columns, correlated
//! color, near-duplicate group members. The core concentrates the energy.

use hodw::{hosvd, Tensor4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hodw::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dims = [8, 8, 3, 12];
    let t = Tensor4::from_fn(dims, |[i, j, c, l]| {
        let base = 30.0 * ((i as f64) * 0.4).sin() + 20.0 * ((j as f64) * 0.3).cos();
        base * [1.0, 0.9, 0.7][c] + rng.gen_range(-2.0..2.0) + l as f64 * 0.1
    });
    let h = hosvd(&t);

    let rec = h.reconstruct()?;
    println!("reconstruction error  {:.2e}", rec.sub(&t).frobenius_norm() / t.frobenius_norm());
    for (k, f) in h.factors.iter().enumerate() {
        println!("factor {} is {}x{}, orthonormality error {:.2e}", k + 1, f.rows(), f.cols(), f.orthonormality_error());
    }

    let mut energy: Vec<f64> = h.core.as_slice().iter().map(|v| v * v).collect();
    energy.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = energy.iter().sum();
    for share in [0.9, 0.99, 0.999] {
        let mut acc = 0.0;
        let k = energy.iter().take_while(|&&e| {
            acc += e;
            acc - e < share * total
        });
        println!("{} of {} core entries hold {:.1}% of the energy", k.count(), energy.len(), 100.0 * share);
    }
    println!("|core| = {:.6}, |tensor| = {:.6}", h.core.frobenius_norm(), t.frobenius_norm());
    Ok(())
}
