//! Binary measurement container.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "HODWMEAS" | version u32 = 1 | h u32 | w u32 | seed u64 | subrate f64
//! | M u32 | N u32 | 3 x ( sign bits: ceil(N/8) bytes, LSB-first, 1 = +1
//!                      | rows: M x u32 | y: M x f64 )
//! ```
//!
//! The realized signs and rows are stored, so reading a file never depends
//! on the random generator that produced it.

use std::io::{Read, Write};

use super::{measurement_count, ChannelPattern, MeasurementSet, SensingOperator};
use crate::error::{Error, Result};
use crate::image::CHANNELS;

pub const MAGIC: &[u8; 8] = b"HODWMEAS";
pub const VERSION: u32 = 1;

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::param(format!("{what} = {v} does not fit in u32")))
}

pub fn write_measurements<W: Write>(
    mut out: W,
    op: &SensingOperator,
    y: &MeasurementSet,
) -> Result<()> {
    if y.y.iter().any(|v| v.len() != op.m()) {
        return Err(Error::shape("measurement lengths do not match the operator"));
    }
    let n = op.n_pad();
    let mut buf = Vec::with_capacity(48 + CHANNELS * (n / 8 + 1 + 12 * op.m()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&to_u32(op.height(), "h")?.to_le_bytes());
    buf.extend_from_slice(&to_u32(op.width(), "w")?.to_le_bytes());
    buf.extend_from_slice(&op.seed().to_le_bytes());
    buf.extend_from_slice(&op.subrate().to_le_bytes());
    buf.extend_from_slice(&to_u32(op.m(), "M")?.to_le_bytes());
    buf.extend_from_slice(&to_u32(n, "N")?.to_le_bytes());
    for c in 0..CHANNELS {
        let pat = op.channel(c);
        let mut bits = vec![0u8; n.div_ceil(8)];
        for (i, &s) in pat.signs.iter().enumerate() {
            if s > 0 {
                bits[i / 8] |= 1 << (i % 8);
            }
        }
        buf.extend_from_slice(&bits);
        for &r in &pat.rows {
            buf.extend_from_slice(&r.to_le_bytes());
        }
        for &v in &y.y[c] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses a measurement file back into its operator and measurements.
pub fn read_measurements<R: Read>(mut input: R) -> Result<(SensingOperator, MeasurementSet)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };

    if cur.take(8)? != MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Corrupt(format!("unsupported version {version}")));
    }
    let h = cur.u32()? as usize;
    let w = cur.u32()? as usize;
    let seed = cur.u64()?;
    let subrate = cur.f64()?;
    let m = cur.u32()? as usize;
    let n = cur.u32()? as usize;

    if h == 0 || w == 0 || !(subrate > 0.0 && subrate <= 1.0) {
        return Err(Error::Corrupt(format!("bad header: {h}x{w}, subrate {subrate}")));
    }
    if n != (h * w).next_power_of_two() || m == 0 || m != measurement_count(h, w, subrate) {
        return Err(Error::Corrupt(format!(
            "inconsistent sizes: M = {m}, N = {n} for {h}x{w} at subrate {subrate}"
        )));
    }

    let mut patterns = Vec::with_capacity(CHANNELS);
    let mut ys = Vec::with_capacity(CHANNELS);
    for _ in 0..CHANNELS {
        let bits = cur.take(n.div_ceil(8))?;
        let signs = (0..n)
            .map(|i| if bits[i / 8] >> (i % 8) & 1 == 1 { 1 } else { -1 })
            .collect();
        let rows = (0..m).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
        let y = (0..m).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Corrupt("non-finite measurement".into()));
        }
        patterns.push(ChannelPattern { signs, rows });
        ys.push(y);
    }
    if cur.pos != bytes.len() {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - cur.pos
        )));
    }

    let mut pit = patterns.into_iter();
    let op = SensingOperator::from_parts(h, w, subrate, seed, std::array::from_fn(|_| pit.next().unwrap()))
        .map_err(|e| Error::Corrupt(e.to_string()))?;
    let mut yit = ys.into_iter();
    let y = MeasurementSet {
        height: h,
        width: w,
        subrate,
        seed,
        y: std::array::from_fn(|_| yit.next().unwrap()),
    };
    Ok((op, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ColorImage;

    fn sample() -> (SensingOperator, MeasurementSet, Vec<u8>) {
        let op = SensingOperator::build(5, 7, 0.3, 11).unwrap();
        let x = ColorImage::from_fn(5, 7, |i, j, c| (i * 7 + j + 40 * c) as f64);
        let y = op.sense(&x).unwrap();
        let mut bytes = Vec::new();
        write_measurements(&mut bytes, &op, &y).unwrap();
        (op, y, bytes)
    }

    #[test]
    fn header_layout() {
        let (op, _, bytes) = sample();
        assert_eq!(&bytes[..8], b"HODWMEAS");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 7);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 11);
        assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), 0.3);
        assert_eq!(u32::from_le_bytes(bytes[36..40].try_into().unwrap()), 10);
        assert_eq!(u32::from_le_bytes(bytes[40..44].try_into().unwrap()), 64);
        // 8 sign bytes + 10 rows + 10 values per channel
        assert_eq!(bytes.len(), 44 + 3 * (8 + 40 + 80));
        let first = bytes[44];
        for i in 0..8 {
            let want = op.channel(0).signs[i] > 0;
            assert_eq!(first >> i & 1 == 1, want);
        }
    }

    #[test]
    fn round_trip() {
        let (op, y, bytes) = sample();
        let (op2, y2) = read_measurements(&bytes[..]).unwrap();
        assert_eq!(op, op2);
        assert_eq!(y, y2);
    }

    #[test]
    fn corruption_detected() {
        let (_, _, bytes) = sample();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_measurements(&bad[..]), Err(Error::Corrupt(_))));
        let mut bad = bytes.clone();
        bad[8] = 2;
        assert!(matches!(read_measurements(&bad[..]), Err(Error::Corrupt(_))));
        assert!(matches!(
            read_measurements(&bytes[..bytes.len() - 1]),
            Err(Error::Corrupt(_))
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(read_measurements(&long[..]), Err(Error::Corrupt(_))));
        // rows out of order in channel R
        let mut bad = bytes;
        let rows_at = 44 + 8;
        bad[rows_at..rows_at + 4].copy_from_slice(&63u32.to_le_bytes());
        assert!(matches!(read_measurements(&bad[..]), Err(Error::Corrupt(_))));
    }
}
