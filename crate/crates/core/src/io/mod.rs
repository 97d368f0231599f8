//! File formats: `CFKT` tensors, 16-bit PNG, dead-pixel bitmaps and the
//! pipeline configuration document.

mod config;
mod mask;
mod png;
mod tensor;

pub use config::{Paths, PipelineConfig, Seeds};
pub use mask::{mask_from_bytes, mask_to_bytes, read_mask, write_mask};
pub use png::{decode_png, encode_png, png_bytes, png_from_bytes, read_png, write_png};
pub use tensor::{DType, TensorData, TensorFile, TENSOR_MAGIC, TENSOR_VERSION};

use crate::cfa::{CfaKind, EmbeddedMosaic};
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::mosaic::{Mosaic, PackedMosaic};

fn values(t: &TensorFile) -> Vec<f64> {
    match t.data() {
        TensorData::U16(v) => v.iter().map(|&x| x as f64 / 65535.0).collect(),
        d => d.to_f64(),
    }
}

/// `[H, W]` f64 tensor.
pub fn mosaic_to_tensor(m: &Mosaic) -> TensorFile {
    TensorFile::new(vec![m.height(), m.width()], TensorData::F64(m.data().to_vec())).expect("mosaic shape")
}

/// Reads an `[H, W]` tensor as a mosaic of `kind`; u16 payloads are scaled
/// by 1/65535.
pub fn mosaic_from_tensor(t: &TensorFile, kind: CfaKind) -> Result<Mosaic> {
    match t.dims() {
        &[h, w] => Mosaic::new(kind.layout(), h, w, values(t)),
        d => Err(Error::dims(format!("mosaic tensor must be 2-D, got {d:?}"))),
    }
}

/// `[H, W, 3]` f64 tensor.
pub fn image_to_tensor(img: &RgbImage) -> TensorFile {
    TensorFile::new(vec![img.height(), img.width(), 3], TensorData::F64(img.data().to_vec())).expect("image shape")
}

pub fn image_from_tensor(t: &TensorFile) -> Result<RgbImage> {
    match t.dims() {
        &[h, w, 3] => RgbImage::new(h, w, values(t)),
        d => Err(Error::dims(format!("image tensor must be H x W x 3, got {d:?}"))),
    }
}

/// `[H/p, W/p, p^2]` f64 tensor.
pub fn packed_to_tensor(p: &PackedMosaic) -> TensorFile {
    TensorFile::new(vec![p.rows, p.cols, p.depth], TensorData::F64(p.data.clone())).expect("packed shape")
}

pub fn packed_from_tensor(t: &TensorFile, kind: CfaKind) -> Result<PackedMosaic> {
    match t.dims() {
        &[rows, cols, depth] => Ok(PackedMosaic { kind, rows, cols, depth, data: values(t) }),
        d => Err(Error::dims(format!("packed tensor must be 3-D, got {d:?}"))),
    }
}

/// `[H, W, 4]` f64 tensor.
pub fn embedding_to_tensor(e: &EmbeddedMosaic) -> TensorFile {
    TensorFile::new(vec![e.height, e.width, 4], TensorData::F64(e.data.clone())).expect("embedding shape")
}
