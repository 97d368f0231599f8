//! Tooling for unified demosaicing across Single-, Quad- and Nona-Bayer sensors.
//!
//! The crate covers the whole desk-scale pipeline: CFA layouts and the
//! one-hot pattern embedding, mosaic-domain transforms (sampling, shuffle
//! remosaicing, packing, binning), Poisson-Gaussian noise calibration and
//! synthesis, classical demosaicers and dead-pixel interpolation, hard-patch
//! mining, image-quality metrics, and a small convolutional network trained
//! jointly on all three patterns.

pub mod cfa;
pub mod demosaic;
pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod micronet;
pub mod mining;
pub mod mosaic;
pub mod noise;
pub mod rng;

pub use cfa::{make_embedding, CfaKind, CfaLayout, ColorChannel, EmbeddedMosaic};
pub use error::{Error, Result};
pub use image::RgbImage;
pub use mosaic::{Mosaic, PackedMosaic};
