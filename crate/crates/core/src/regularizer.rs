//! Weight-tensor designs expressed as the per-coefficient filters they
//! induce on the analysis coefficients `r`.
//!
//! With weights `1 / (W^2 + mu') = (|r|^q - s^q)_+ / |r|^q` the weighted
//! update `alpha = r / (W^2 + mu')` collapses to soft thresholding (`q = 1`),
//! a Wiener-like shrinkage (`q = 2`) or hard thresholding (`q = inf`). The
//! oracle design uses the true coefficient and the current error level
//! instead. Neither `lambda` nor `mu'` survives into these closed forms.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hodict::SparseRep;
use crate::tensor::Tensor4;

/// Which filter the weight tensor induces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterKind {
    /// `q = 1`
    Soft,
    /// `q = 2`
    Wiener,
    /// `q = inf`
    Hard,
    /// MMSE gain from the true coefficients.
    Oracle,
}

impl FilterKind {
    pub const PRACTICAL: [FilterKind; 3] = [FilterKind::Soft, FilterKind::Wiener, FilterKind::Hard];

    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Soft => "q=1",
            FilterKind::Wiener => "q=2",
            FilterKind::Hard => "q=inf",
            FilterKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.label())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    /// Accepts `1`, `2`, `inf` (or `q=` prefixed forms) and `oracle`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().trim_start_matches("q=").to_ascii_lowercase().as_str() {
            "1" | "soft" => Ok(FilterKind::Soft),
            "2" | "wiener" => Ok(FilterKind::Wiener),
            "inf" | "infinity" | "hard" => Ok(FilterKind::Hard),
            "oracle" => Ok(FilterKind::Oracle),
            other => Err(Error::param(format!("unknown filter '{other}', expected 1, 2, inf or oracle"))),
        }
    }
}

const TABLE_SUBRATES: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

/// Tuned `sigma*` for each practical filter at subrates 0.1 .. 0.4, as
/// base-10 exponents.
fn exponents(kind: FilterKind) -> Option<[f64; 4]> {
    match kind {
        FilterKind::Soft => Some([0.8, 0.6, 0.4, 0.4]),
        FilterKind::Wiener => Some([1.2, 0.8, 0.6, 0.6]),
        FilterKind::Hard => Some([1.6, 1.2, 1.0, 1.0]),
        FilterKind::Oracle => None,
    }
}

/// Default `sigma*` at the nearest tabulated subrate (ties go to the lower one).
pub fn sigma_star_default(kind: FilterKind, subrate: f64) -> Result<f64> {
    let exps = exponents(kind).ok_or_else(|| Error::param("the oracle design has no sigma* default"))?;
    if !subrate.is_finite() {
        return Err(Error::param(format!("subrate {subrate}")));
    }
    let mut best = 0;
    for (i, &s) in TABLE_SUBRATES.iter().enumerate() {
        // strict comparison keeps the lower subrate on ties; the small slack
        // absorbs representation error in values like 0.25
        if (subrate - s).abs() < (subrate - TABLE_SUBRATES[best]).abs() - 1e-12 {
            best = i;
        }
    }
    Ok(10f64.powf(exps[best]))
}

#[inline]
pub fn filter_soft(r: f64, sigma_star: f64) -> f64 {
    let mag = (r.abs() - sigma_star).max(0.0);
    if r < 0.0 {
        -mag
    } else {
        mag
    }
}

#[inline]
pub fn filter_wiener(r: f64, sigma_star: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let r2 = r * r;
    r * (r2 - sigma_star * sigma_star).max(0.0) / r2
}

#[inline]
pub fn filter_hard(r: f64, sigma_star: f64) -> f64 {
    if r.abs() > sigma_star {
        r
    } else {
        0.0
    }
}

/// MMSE gain `a0^2 / (a0^2 + sigma^2)` applied to `r`; zero when `a0 = 0`.
#[inline]
pub fn filter_oracle(r: f64, alpha0: f64, sigma_t: f64) -> f64 {
    let a2 = alpha0 * alpha0;
    if a2 == 0.0 {
        return 0.0;
    }
    a2 / (a2 + sigma_t * sigma_t) * r
}

/// A concrete weight design, ready to filter a representation.
#[derive(Clone, Copy, Debug)]
pub enum WeightDesign<'a> {
    Soft { sigma_star: f64 },
    Wiener { sigma_star: f64 },
    Hard { sigma_star: f64 },
    Oracle { truth: &'a SparseRep, sigma_t: f64 },
}

impl WeightDesign<'_> {
    /// Practical design of `kind` with the given threshold.
    pub fn practical(kind: FilterKind, sigma_star: f64) -> Result<WeightDesign<'static>> {
        if !(sigma_star >= 0.0) {
            return Err(Error::param(format!("sigma* = {sigma_star} must be non-negative")));
        }
        match kind {
            FilterKind::Soft => Ok(WeightDesign::Soft { sigma_star }),
            FilterKind::Wiener => Ok(WeightDesign::Wiener { sigma_star }),
            FilterKind::Hard => Ok(WeightDesign::Hard { sigma_star }),
            FilterKind::Oracle => Err(Error::param("the oracle design needs true coefficients")),
        }
    }

    pub fn kind(&self) -> FilterKind {
        match self {
            WeightDesign::Soft { .. } => FilterKind::Soft,
            WeightDesign::Wiener { .. } => FilterKind::Wiener,
            WeightDesign::Hard { .. } => FilterKind::Hard,
            WeightDesign::Oracle { .. } => FilterKind::Oracle,
        }
    }
}

fn map_elementwise(r: &SparseRep, f: impl Fn(f64) -> f64 + Sync) -> SparseRep {
    r.map(f)
}

/// Filters every coefficient of every group according to `design`.
pub fn apply_design(design: &WeightDesign<'_>, r: &SparseRep) -> Result<SparseRep> {
    Ok(match *design {
        WeightDesign::Soft { sigma_star } => map_elementwise(r, |v| filter_soft(v, sigma_star)),
        WeightDesign::Wiener { sigma_star } => map_elementwise(r, |v| filter_wiener(v, sigma_star)),
        WeightDesign::Hard { sigma_star } => map_elementwise(r, |v| filter_hard(v, sigma_star)),
        WeightDesign::Oracle { truth, sigma_t } => {
            r.check_shape(truth)?;
            let cores = r
                .cores
                .par_iter()
                .zip(&truth.cores)
                .map(|(rc, tc)| {
                    let data = rc
                        .as_slice()
                        .iter()
                        .zip(tc.as_slice())
                        .map(|(&v, &a0)| filter_oracle(v, a0, sigma_t))
                        .collect();
                    Tensor4::from_vec(rc.dims(), data).expect("same dims")
                })
                .collect();
            SparseRep { cores }
        }
    })
}

/// Mean and (population) standard deviation of `r - alpha0` over all coefficients.
pub fn estimate_error_std(r: &SparseRep, alpha0: &SparseRep) -> Result<(f64, f64)> {
    r.check_shape(alpha0)?;
    let n = r.num_coefficients() as f64;
    if n == 0.0 {
        return Ok((0.0, 0.0));
    }
    let diffs = || r.values().zip(alpha0.values()).map(|(a, b)| a - b);
    let mean = diffs().sum::<f64>() / n;
    let var = diffs().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}
