//! Per-group higher-order dictionaries learned by HOSVD, and the analysis /
//! synthesis maps between an image and its group core tensors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grouping::{aggregate, anchor_grid, block_match, extract_group, GroupIndex};
use crate::image::{ColorImage, CHANNELS};
use crate::tensor::{hosvd, reconstruct, DenseMatrix, Tensor4};

/// Patch geometry and search settings shared by learning and the solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupingParams {
    pub patch: usize,
    pub group_size: usize,
    pub stride: usize,
    pub window: usize,
}

impl Default for GroupingParams {
    fn default() -> Self {
        Self {
            patch: 8,
            group_size: 60,
            stride: 4,
            window: 41,
        }
    }
}

/// Sub-dictionaries of one group: row, column, color and member factors.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupDictionary {
    pub index: GroupIndex,
    pub factors: [DenseMatrix; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct HigherOrderDictionary {
    height: usize,
    width: usize,
    patch: usize,
    groups: Vec<GroupDictionary>,
}

impl HigherOrderDictionary {
    pub fn groups(&self) -> &[GroupDictionary] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn indices(&self) -> Vec<GroupIndex> {
        self.groups.iter().map(|g| g.index.clone()).collect()
    }

    fn check_image(&self, v: &ColorImage) -> Result<()> {
        if v.dims() != (self.height, self.width) {
            return Err(Error::shape(format!(
                "image {}x{} vs dictionary {}x{}",
                v.height(),
                v.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }

    fn check_rep(&self, a: &SparseRep) -> Result<()> {
        let ok = a.cores.len() == self.groups.len()
            && a.cores.iter().zip(&self.groups).all(|(t, g)| {
                t.dims() == [self.patch, self.patch, CHANNELS, g.index.len()]
            });
        if ok {
            Ok(())
        } else {
            Err(Error::shape("sparse representation does not match the dictionary"))
        }
    }
}

/// Core tensors, one per group, in group order.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRep {
    pub cores: Vec<Tensor4>,
}

impl SparseRep {
    pub fn num_coefficients(&self) -> usize {
        self.cores.iter().map(Tensor4::len).sum()
    }

    pub fn same_shape(&self, other: &SparseRep) -> bool {
        self.cores.len() == other.cores.len()
            && self.cores.iter().zip(&other.cores).all(|(a, b)| a.dims() == b.dims())
    }

    pub(crate) fn check_shape(&self, other: &SparseRep) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape("sparse representations differ in shape"))
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.cores.iter().flat_map(|t| t.as_slice().iter().copied())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> SparseRep {
        SparseRep {
            cores: self.cores.par_iter().map(|t| t.map(&f)).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> SparseRep {
        self.map(|v| v * k)
    }

    pub fn sub(&self, other: &SparseRep) -> SparseRep {
        SparseRep {
            cores: self.cores.iter().zip(&other.cores).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.cores.iter().all(Tensor4::is_finite)
    }
}

/// Groups `x_ref` around every grid anchor and takes the HOSVD of each
/// group. Returns the dictionary and the reference cores `alpha_ref`.
pub fn learn_dictionary(
    x_ref: &ColorImage,
    params: &GroupingParams,
) -> Result<(HigherOrderDictionary, SparseRep)> {
    let (h, w) = x_ref.dims();
    let p = params.patch;
    if p < 2 {
        return Err(Error::param("patch size must be at least 2"));
    }
    let anchors = anchor_grid(h, w, p, params.stride)?;
    let learned: Vec<(GroupDictionary, Tensor4)> = anchors
        .par_iter()
        .enumerate()
        .map(|(g, &anchor)| {
            let mut index = block_match(x_ref, anchor, p, params.window, params.group_size)?;
            index.ordinal = g;
            let group = extract_group(x_ref, &index, p)?;
            let dec = hosvd(&group);
            Ok((
                GroupDictionary {
                    index,
                    factors: dec.factors,
                },
                dec.core,
            ))
        })
        .collect::<Result<_>>()?;
    let (groups, cores) = learned.into_iter().unzip();
    Ok((
        HigherOrderDictionary {
            height: h,
            width: w,
            patch: p,
            groups,
        },
        SparseRep { cores },
    ))
}

/// Groupwise coefficients of `v`: each group is extracted with the indices
/// frozen at learning time and projected on its factors.
pub fn analyze(v: &ColorImage, dict: &HigherOrderDictionary) -> Result<SparseRep> {
    dict.check_image(v)?;
    let cores = dict
        .groups
        .par_iter()
        .map(|g| extract_group(v, &g.index, dict.patch)?.project(&g.factors))
        .collect::<Result<_>>()?;
    Ok(SparseRep { cores })
}

/// `alpha . D`: rebuilds every group and averages overlapping pixels.
pub fn synthesize(a: &SparseRep, dict: &HigherOrderDictionary) -> Result<ColorImage> {
    dict.check_rep(a)?;
    let groups: Vec<Tensor4> = a
        .cores
        .par_iter()
        .zip(&dict.groups)
        .map(|(core, g)| reconstruct(core, &g.factors))
        .collect::<Result<_>>()?;
    let fallback = ColorImage::zeros(dict.height, dict.width);
    aggregate(
        dict.groups.iter().map(|g| &g.index).zip(&groups),
        dict.height,
        dict.width,
        &fallback,
    )
}
