//! Region-of-interest compression for volumetric medical scans.
//!
//! A scan is decoded from NIfTI-1, cut into axial slices and normalized to
//! 8 bits. Each slice is split by a tumor mask into a fixed-size square ROI
//! patch and a background frame with the square zeroed out. The two frame
//! sequences are encoded as separate video streams: the ROI at a low CRF
//! (high quality), the background at a high CRF. A sidecar manifest records
//! where every square sits so the decoder can recompose the slices.
//!
//! Module map:
//!
//! - [`nifti`]: NIfTI-1 single-file parsing and writing, axial slicing.
//! - [`imaging`]: 8-bit slices, binary masks, normalization, PGM interchange.
//! - [`segment`]: baseline threshold segmenter and Dice/IoU/BCE metrics.
//! - [`roi`]: bounding boxes, square placement, carving and recomposition.
//! - [`stream`]: raw streams, YUV4MPEG2 and the bundle manifest.
//! - [`codec`]: external HEVC encoder wrapper and the internal lossless codec.
//! - [`metrics`] and [`report`]: PSNR, size figures and report rendering.
//! - [`phantom`]: seeded synthetic volumes with a spherical tumor.
//! - [`pipeline`]: the end-to-end compress / decompress / evaluate flows.
//! - [`cli`]: the `roicomp` command-line tool.

pub mod cli;
pub mod codec;
pub mod config;
pub mod error;
pub mod imaging;
pub mod metrics;
pub mod nifti;
pub mod phantom;
pub mod pipeline;
pub mod report;
pub mod roi;
pub mod segment;
pub mod stream;

pub use error::{Error, Result};
