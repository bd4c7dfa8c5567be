//! Nonlocal patch groups: the anchor grid, SSD block matching, group
//! extraction and overlap-averaging aggregation.

use crate::error::{Error, Result};
use crate::image::{ColorImage, CHANNELS};
use crate::tensor::Tensor4;

/// Top-left pixel of a `p x p` patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchAnchor {
    pub row: usize,
    pub col: usize,
}

impl PatchAnchor {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Member anchors of one group, reference patch first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupIndex {
    pub ordinal: usize,
    pub members: Vec<PatchAnchor>,
    /// Set when the search pool held fewer than `L` patches and members
    /// were repeated cyclically.
    pub degenerate: bool,
}

impl GroupIndex {
    pub fn reference(&self) -> PatchAnchor {
        self.members[0]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn grid_positions(extent: usize, p: usize, stride: usize) -> Vec<usize> {
    let last = extent - p;
    let mut v: Vec<usize> = (0..=last).step_by(stride).collect();
    if *v.last().unwrap() != last {
        v.push(last);
    }
    v
}

/// Reference anchors every `stride` pixels, plus a clamped final row and
/// column so the grid covers the whole image. Row-major order.
pub fn anchor_grid(height: usize, width: usize, p: usize, stride: usize) -> Result<Vec<PatchAnchor>> {
    if p == 0 || p > height || p > width {
        return Err(Error::param(format!("patch {p} does not fit a {height}x{width} image")));
    }
    if stride == 0 {
        return Err(Error::param("stride must be at least 1"));
    }
    let rows = grid_positions(height, p, stride);
    let cols = grid_positions(width, p, stride);
    Ok(rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| PatchAnchor::new(r, c)))
        .collect())
}

fn check_anchor(img: &ColorImage, a: PatchAnchor, p: usize) -> Result<()> {
    if a.row + p > img.height() || a.col + p > img.width() {
        return Err(Error::AnchorOutOfRange {
            row: a.row,
            col: a.col,
            p,
        });
    }
    Ok(())
}

/// Sum of squared differences over the two `p x p x 3` patches.
fn patch_ssd(img: &ColorImage, a: PatchAnchor, b: PatchAnchor, p: usize) -> f64 {
    let w = img.width();
    let mut acc = 0.0;
    for c in 0..CHANNELS {
        let plane = img.channel(c);
        for i in 0..p {
            let ra = &plane[(a.row + i) * w + a.col..][..p];
            let rb = &plane[(b.row + i) * w + b.col..][..p];
            for (x, y) in ra.iter().zip(rb) {
                let d = x - y;
                acc += d * d;
            }
        }
    }
    acc
}

/// Finds the `group_size` patches most similar to the one at `anchor`.
///
/// Candidates are all top-left positions within `window / 2` pixels of the
/// anchor (clipped to the image) in row-major order. The reference is
/// always `members[0]`; the rest are ordered by SSD with ties broken by
/// candidate order.
pub fn block_match(
    img: &ColorImage,
    anchor: PatchAnchor,
    p: usize,
    window: usize,
    group_size: usize,
) -> Result<GroupIndex> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::param(format!("search window {window} must be odd")));
    }
    if group_size == 0 {
        return Err(Error::param("group size must be at least 1"));
    }
    check_anchor(img, anchor, p)?;
    let half = window / 2;
    let r0 = anchor.row.saturating_sub(half);
    let r1 = (anchor.row + half).min(img.height() - p);
    let c0 = anchor.col.saturating_sub(half);
    let c1 = (anchor.col + half).min(img.width() - p);

    let mut pool: Vec<(f64, PatchAnchor)> = Vec::with_capacity((r1 - r0 + 1) * (c1 - c0 + 1));
    for r in r0..=r1 {
        for c in c0..=c1 {
            let cand = PatchAnchor::new(r, c);
            if cand != anchor {
                pool.push((patch_ssd(img, anchor, cand, p), cand));
            }
        }
    }
    // Row-major anchors compare in candidate order, so (d, anchor) is a
    // strict total order.
    let by_key = |a: &(f64, PatchAnchor), b: &(f64, PatchAnchor)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let wanted = group_size - 1;
    if pool.len() > wanted {
        if wanted > 0 {
            pool.select_nth_unstable_by(wanted - 1, by_key);
        }
        pool.truncate(wanted);
    }
    pool.sort_unstable_by(by_key);

    let mut ranked = Vec::with_capacity(pool.len() + 1);
    ranked.push(anchor);
    ranked.extend(pool.into_iter().map(|(_, a)| a));
    let degenerate = ranked.len() < group_size;
    let members = ranked.iter().copied().cycle().take(group_size).collect();
    Ok(GroupIndex {
        ordinal: 0,
        members,
        degenerate,
    })
}

/// Stacks the member patches into a `p x p x 3 x L` tensor; pixel `(i, j)`
/// of channel `c` in member `l` lands at `(i, j, c, l)`.
pub fn extract_group(x: &ColorImage, idx: &GroupIndex, p: usize) -> Result<Tensor4> {
    let l = idx.len();
    let mut data = Vec::with_capacity(p * p * CHANNELS * l);
    let w = x.width();
    for &a in &idx.members {
        check_anchor(x, a, p)?;
        for c in 0..CHANNELS {
            let plane = x.channel(c);
            // mode 1 (patch row i) varies fastest, then mode 2 (column j)
            for j in 0..p {
                for i in 0..p {
                    data.push(plane[(a.row + i) * w + a.col + j]);
                }
            }
        }
    }
    Tensor4::from_vec([p, p, CHANNELS, l], data)
}

fn check_group_tensor(idx: &GroupIndex, t: &Tensor4) -> Result<usize> {
    let [p, q, c, l] = t.dims();
    if p != q || c != CHANNELS || l != idx.len() {
        return Err(Error::shape(format!(
            "group tensor {:?} does not match {} members",
            t.dims(),
            idx.len()
        )));
    }
    Ok(p)
}

/// Scatters group tensors back to the image and divides by how many patch
/// instances covered each pixel. Uncovered pixels take `fallback`.
pub fn aggregate<'a>(
    groups: impl IntoIterator<Item = (&'a GroupIndex, &'a Tensor4)>,
    height: usize,
    width: usize,
    fallback: &ColorImage,
) -> Result<ColorImage> {
    if fallback.dims() != (height, width) {
        return Err(Error::shape("fallback image dims"));
    }
    let mut num = ColorImage::zeros(height, width);
    let mut count = vec![0u32; height * width];
    for (idx, t) in groups {
        let p = check_group_tensor(idx, t)?;
        let data = t.as_slice();
        let mut k = 0;
        for &a in &idx.members {
            check_anchor(fallback, a, p)?;
            for c in 0..CHANNELS {
                let plane = num.channel_mut(c);
                for j in 0..p {
                    for i in 0..p {
                        plane[(a.row + i) * width + a.col + j] += data[k];
                        k += 1;
                    }
                }
            }
            for i in 0..p {
                for v in &mut count[(a.row + i) * width + a.col..][..p] {
                    *v += 1;
                }
            }
        }
    }
    let n = height * width;
    let out = num.as_mut_slice();
    let fb = fallback.as_slice();
    for c in 0..CHANNELS {
        for (pix, &cnt) in count.iter().enumerate() {
            let at = c * n + pix;
            out[at] = if cnt > 0 { out[at] / f64::from(cnt) } else { fb[at] };
        }
    }
    Ok(num)
}

/// Number of patch instances covering each pixel (row-major, one plane).
pub fn coverage(groups: &[GroupIndex], height: usize, width: usize, p: usize) -> Vec<u32> {
    let mut count = vec![0u32; height * width];
    for idx in groups {
        for &a in &idx.members {
            for i in 0..p {
                for v in &mut count[(a.row + i) * width + a.col..][..p] {
                    *v += 1;
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> ColorImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ColorImage::from_fn(h, w, |_, _, _| rng.gen_range(0.0..255.0))
    }

    #[test]
    fn grid_examples() {
        let g = anchor_grid(16, 16, 8, 4).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], PatchAnchor::new(0, 0));
        assert_eq!(g[8], PatchAnchor::new(8, 8));
        assert_eq!(anchor_grid(8, 8, 8, 4).unwrap(), vec![PatchAnchor::new(0, 0)]);
        assert_eq!(
            anchor_grid(10, 8, 8, 4).unwrap(),
            vec![PatchAnchor::new(0, 0), PatchAnchor::new(2, 0)]
        );
        assert!(anchor_grid(7, 16, 8, 4).is_err());
        assert!(anchor_grid(16, 16, 8, 0).is_err());
    }

    #[test]
    fn reference_first_and_constant_tie_break() {
        let img = ColorImage::filled(20, 20, 17.0);
        let anchor = PatchAnchor::new(4, 4);
        let g = block_match(&img, anchor, 8, 5, 6).unwrap();
        assert_eq!(g.reference(), anchor);
        // pool rows/cols 2..=6; row-major without the reference
        let want = [(4, 4), (2, 2), (2, 3), (2, 4), (2, 5), (2, 6)];
        let got: Vec<(usize, usize)> = g.members.iter().map(|a| (a.row, a.col)).collect();
        assert_eq!(got, want);
        assert!(!g.degenerate);
    }

    #[test]
    fn matches_brute_force_sort() {
        let img = random_image(32, 32, 4);
        for anchor in anchor_grid(32, 32, 8, 4).unwrap() {
            let g = block_match(&img, anchor, 8, 11, 10).unwrap();
            let mut pool = Vec::new();
            for r in anchor.row.saturating_sub(5)..=(anchor.row + 5).min(24) {
                for c in anchor.col.saturating_sub(5)..=(anchor.col + 5).min(24) {
                    let mut d = 0.0;
                    for ch in 0..3 {
                        for i in 0..8 {
                            for j in 0..8 {
                                let e = img.get(anchor.row + i, anchor.col + j, ch) - img.get(r + i, c + j, ch);
                                d += e * e;
                            }
                        }
                    }
                    pool.push((d, r, c));
                }
            }
            pool.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
            let want: Vec<PatchAnchor> = pool[..10].iter().map(|&(_, r, c)| PatchAnchor::new(r, c)).collect();
            assert_eq!(g.members, want);
        }
    }

    #[test]
    fn small_pool_repeats_cyclically() {
        let img = random_image(9, 9, 1);
        let g = block_match(&img, PatchAnchor::new(0, 0), 8, 41, 5).unwrap();
        assert!(g.degenerate);
        assert_eq!(g.members.len(), 5);
        assert_eq!(g.members[0], g.members[4]);
        assert_eq!(g.members[0], PatchAnchor::new(0, 0));
    }

    #[test]
    fn even_window_rejected() {
        let img = random_image(16, 16, 1);
        assert!(block_match(&img, PatchAnchor::new(0, 0), 8, 4, 3).is_err());
        assert!(block_match(&img, PatchAnchor::new(9, 0), 8, 5, 3).is_err());
    }

    #[test]
    fn extract_layout() {
        let img = ColorImage::from_fn(10, 10, |i, j, c| (100 * c + 10 * i + j) as f64);
        let idx = GroupIndex {
            ordinal: 0,
            members: vec![PatchAnchor::new(0, 0), PatchAnchor::new(2, 1)],
            degenerate: false,
        };
        let t = extract_group(&img, &idx, 4).unwrap();
        assert_eq!(t.dims(), [4, 4, 3, 2]);
        assert_eq!(t.get([3, 1, 2, 0]), 231.0);
        assert_eq!(t.get([0, 0, 0, 1]), 21.0);
        assert_eq!(t.get([1, 3, 1, 1]), 134.0);

        let flat = extract_group(&ColorImage::filled(10, 10, 3.5), &idx, 4).unwrap();
        assert!(flat.as_slice().iter().all(|&v| v == 3.5));
    }

    #[test]
    fn aggregate_averages_overlaps() {
        let a = GroupIndex {
            ordinal: 0,
            members: vec![PatchAnchor::new(0, 0)],
            degenerate: false,
        };
        let b = GroupIndex {
            ordinal: 1,
            members: vec![PatchAnchor::new(0, 1)],
            degenerate: false,
        };
        let ta = Tensor4::filled([2, 2, 3, 1], 2.0);
        let tb = Tensor4::filled([2, 2, 3, 1], 4.0);
        let fb = ColorImage::filled(3, 3, -1.0);
        let out = aggregate([(&a, &ta), (&b, &tb)], 3, 3, &fb).unwrap();
        assert_eq!(out.get(0, 0, 0), 2.0);
        assert_eq!(out.get(0, 1, 1), 3.0);
        assert_eq!(out.get(1, 2, 2), 4.0);
        assert_eq!(out.get(2, 2, 0), -1.0);
    }

    #[test]
    fn extract_aggregate_identity() {
        let img = random_image(24, 20, 9);
        let groups: Vec<GroupIndex> = anchor_grid(24, 20, 8, 4)
            .unwrap()
            .into_iter()
            .enumerate()
            .map(|(g, a)| {
                let mut idx = block_match(&img, a, 8, 9, 6).unwrap();
                idx.ordinal = g;
                idx
            })
            .collect();
        let tensors: Vec<Tensor4> = groups.iter().map(|g| extract_group(&img, g, 8).unwrap()).collect();
        let out = aggregate(groups.iter().zip(&tensors), 24, 20, &ColorImage::zeros(24, 20)).unwrap();
        let err = out.sub(&img).as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-12);
        assert!(coverage(&groups, 24, 20, 8).iter().all(|&c| c >= 1));
    }
}
