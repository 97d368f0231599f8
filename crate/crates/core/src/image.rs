//! Full-color images and the resampling helpers used around binning.

use crate::error::{Error, Result};

/// Three-channel linear image, row-major and channel-last, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::dims(format!(
                "expected {} values for a {height}x{width} RGB image, got {}",
                height * width * 3,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("RGB value {v} outside [0, 1]")));
        }
        Ok(RgbImage { height, width, data })
    }

    /// Builds an image by clamping arbitrary finite values into range.
    pub fn from_clamped(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::new(height, width, data)
    }

    pub fn constant(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::new(height, width, rgb.iter().copied().cycle().take(height * width * 3).collect())
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * 3);
        for r in 0..height {
            for c in 0..width {
                data.extend_from_slice(&f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * 3 + ch]
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn crop(&self, y: usize, x: usize, height: usize, width: usize) -> Result<Self> {
        if y + height > self.height || x + width > self.width {
            return Err(Error::dims(format!(
                "crop {height}x{width}@({y},{x}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width * 3);
        for r in y..y + height {
            let start = (r * self.width + x) * 3;
            data.extend_from_slice(&self.data[start..start + width * 3]);
        }
        Ok(RgbImage { height, width, data })
    }

    /// Multiplies every value by `alpha`, which must keep the image in range.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(self.height, self.width, self.data.iter().map(|v| v * alpha).collect())
    }

    pub fn same_dims(&self, other: &RgbImage) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Averages each non-overlapping 2x2 block, per channel.
pub fn downsample_avg(image: &RgbImage) -> Result<RgbImage> {
    let (h, w) = (image.height, image.width);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::dims(format!("2x2 averaging needs even dimensions, got {h}x{w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut data = vec![0.0; oh * ow * 3];
    for r in 0..oh {
        for c in 0..ow {
            for ch in 0..3 {
                let sum = image.get(2 * r, 2 * c, ch)
                    + image.get(2 * r, 2 * c + 1, ch)
                    + image.get(2 * r + 1, 2 * c, ch)
                    + image.get(2 * r + 1, 2 * c + 1, ch);
                data[(r * ow + c) * 3 + ch] = sum / 4.0;
            }
        }
    }
    RgbImage::new(oh, ow, data)
}

/// Separable Gaussian blur with clamp-to-edge borders, taps out to 3 sigma.
pub fn gaussian_blur(image: &RgbImage, sigma: f64) -> Result<RgbImage> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(format!("blur sigma must be finite and non-negative, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    if radius == 0 {
        return Ok(image.clone());
    }
    let mut kernel: Vec<f64> = (-radius..=radius).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);
    let (h, w) = (image.height as isize, image.width as isize);
    let clamp = |v: isize, n: isize| v.clamp(0, n - 1) as usize;
    let mut tmp = vec![0.0; image.data.len()];
    for r in 0..h {
        for c in 0..w {
            for ch in 0..3 {
                tmp[((r * w + c) * 3 + ch) as usize] = kernel
                    .iter()
                    .zip(-radius..)
                    .map(|(k, d)| k * image.get(r as usize, clamp(c + d, w), ch as usize))
                    .sum();
            }
        }
    }
    let mut out = vec![0.0; tmp.len()];
    for r in 0..h {
        for c in 0..w {
            for ch in 0..3 {
                out[((r * w + c) * 3 + ch) as usize] =
                    kernel.iter().zip(-radius..).map(|(k, d)| k * tmp[(clamp(r + d, h) * w as usize + c as usize) * 3 + ch as usize]).sum();
            }
        }
    }
    RgbImage::from_clamped(image.height, image.width, out)
}

/// Catmull-Rom cubic kernel (a = -0.5).
pub(crate) fn cubic_kernel(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Per-axis taps: for each output index, four (source index, weight) pairs.
fn cubic_taps(src_len: usize, factor: usize) -> Vec<[(usize, f64); 4]> {
    (0..src_len * factor)
        .map(|o| {
            // pixel-center alignment
            let s = (o as f64 + 0.5) / factor as f64 - 0.5;
            let base = s.floor();
            let mut taps = [(0usize, 0.0); 4];
            for (k, tap) in taps.iter_mut().enumerate() {
                let pos = base + k as f64 - 1.0;
                let idx = (pos.max(0.0) as usize).min(src_len - 1);
                *tap = (idx, cubic_kernel(s - pos));
            }
            taps
        })
        .collect()
}

/// Separable Catmull-Rom upsampling with clamp-to-edge borders.
///
/// Overshoot near sharp edges is clipped back into `[0, 1]`.
pub fn bicubic_upsample(image: &RgbImage, factor: usize) -> Result<RgbImage> {
    if !(2..=3).contains(&factor) {
        return Err(Error::invalid(format!("upsampling factor must be 2 or 3, got {factor}")));
    }
    let (h, w) = (image.height, image.width);
    let (oh, ow) = (h * factor, w * factor);
    let col_taps = cubic_taps(w, factor);
    let row_taps = cubic_taps(h, factor);

    // horizontal pass
    let mut tmp = vec![0.0; h * ow * 3];
    for r in 0..h {
        for (c, taps) in col_taps.iter().enumerate() {
            for ch in 0..3 {
                tmp[(r * ow + c) * 3 + ch] =
                    taps.iter().map(|&(sc, wt)| wt * image.get(r, sc, ch)).sum();
            }
        }
    }
    let mut out = vec![0.0; oh * ow * 3];
    for (r, taps) in row_taps.iter().enumerate() {
        for c in 0..ow {
            for ch in 0..3 {
                out[(r * ow + c) * 3 + ch] =
                    taps.iter().map(|&(sr, wt)| wt * tmp[(sr * ow + c) * 3 + ch]).sum();
            }
        }
    }
    RgbImage::from_clamped(oh, ow, out)
}
