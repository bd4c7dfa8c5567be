//! Compressive sensing recovery of color images with nonlocal higher-order
//! dictionaries and weighted sparsity regularization.
//!
//! The pipeline: an image is sensed with a structurally random
//! Walsh-Hadamard operator ([`sensing`]); recovery ([`solver`]) alternates a
//! data-consistency update with filtering of the HOSVD cores ([`tensor`],
//! [`hodict`]) of nonlocal patch groups ([`grouping`]), where the filter is
//! induced by the weight design ([`regularizer`]).
//!
//! ```no_run
//! use hodw::{recover, ColorImage, RecoveryConfig, SensingOperator};
//!
//! # fn main() -> hodw::Result<()> {
//! let truth = ColorImage::load("crop.png".as_ref())?;
//! let op = SensingOperator::build(truth.height(), truth.width(), 0.3, 7)?;
//! let y = op.sense(&truth)?;
//! let cfg = RecoveryConfig { outer_loops: Some(60), sigma_star: Some(10.0), ..Default::default() };
//! let out = recover(&y, &op, &cfg, Some(&truth))?;
//! println!("{:?} dB", out.trace.final_psnr());
//! # Ok(())
//! # }
//! ```

pub mod cli;
pub mod error;
pub mod grouping;
pub mod hodict;
pub mod image;
pub mod metrics;
pub mod regularizer;
pub mod sensing;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use hodict::{analyze, learn_dictionary, synthesize, GroupingParams, HigherOrderDictionary, SparseRep};
pub use image::ColorImage;
pub use metrics::{psnr, QualityReport};
pub use regularizer::{apply_design, FilterKind, WeightDesign};
pub use sensing::{MeasurementSet, SensingOperator};
pub use solver::{recover, recover_oracle, Initializer, Recovery, RecoveryConfig, Reference, Trace, XMethod};
pub use tensor::{hosvd, DenseMatrix, Hosvd, Tensor4};
