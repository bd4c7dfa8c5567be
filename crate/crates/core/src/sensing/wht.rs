use crate::error::{Error, Result};

/// In-place unnormalized Walsh-Hadamard transform in natural (Sylvester)
/// order. Applying it twice multiplies the input by its length.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut half = 1;
    while half < n {
        for block in v.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
    Ok(())
}

pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn butterfly() {
        assert_eq!(fwht(&[3.0, 5.0]).unwrap(), vec![8.0, -2.0]);
        assert_eq!(fwht(&[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn sylvester_order() {
        // Row k of H_8 in natural order is (-1)^popcount(k & j).
        for k in 0..8 {
            let mut e = vec![0.0; 8];
            e[k] = 1.0;
            let col = fwht(&e).unwrap();
            for (j, v) in col.iter().enumerate() {
                let want = if (k & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(*v, want);
            }
        }
    }

    #[test]
    fn involution_up_to_length() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..16).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let back = fwht(&fwht(&v).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - 16.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(fwht(&[1.0; 6]), Err(Error::NotPowerOfTwo(6))));
    }
}
