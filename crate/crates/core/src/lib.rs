//! Calibrationless parallel MRI reconstruction in k-space.
//!
//! The crate recovers unacquired multi-coil k-space samples by alternating
//! projections onto three sets: low-rank block-Hankel data matrices,
//! structurally consistent Hankel liftings, and the acquired data. On top of
//! that solver sits a partition scheme that splits an under-sampled target
//! contrast into blocks, pairs each block with fully sampled k-space from
//! other contrasts of the same anatomy, and reconstructs the hybrids
//! independently before stitching the target back together.

pub mod error;
pub mod fft;
pub mod hankel;
pub mod kspace;
pub mod masks;
pub mod metrics;
pub mod phantom;
pub mod pks;
pub mod raw;
pub mod sake;
pub mod viz;

pub use error::{Error, Result};
pub use kspace::{apply_mask, rss_combine, zero_filled_recon, ComplexImage, KSpaceVolume, SamplingMask};
