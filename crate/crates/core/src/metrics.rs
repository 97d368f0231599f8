//! PSNR, SSIM and CIE76 Delta E, all evaluated after cropping a border.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::RgbImage;

/// Reported in place of +inf for a perfect reconstruction.
pub const PSNR_CAP: f64 = 99.0;
pub const DEFAULT_BORDER: usize = 2;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub delta_e: f64,
    pub crop_border: usize,
}

fn check_pair(a: &RgbImage, b: &RgbImage, border: usize) -> Result<(usize, usize)> {
    if !a.same_dims(b) {
        return Err(Error::dims(format!(
            "{}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    if a.height() <= 2 * border || a.width() <= 2 * border {
        return Err(Error::dims(format!(
            "a {border}-pixel border leaves nothing of a {}x{} image",
            a.height(),
            a.width()
        )));
    }
    Ok((a.height() - 2 * border, a.width() - 2 * border))
}

/// Mean squared error over the cropped region, all channels.
pub fn mse(a: &RgbImage, b: &RgbImage, border: usize) -> Result<f64> {
    let (h, w) = check_pair(a, b, border)?;
    let mut sum = 0.0;
    for r in border..border + h {
        for c in border..border + w {
            for ch in 0..3 {
                let d = a.get(r, c, ch) - b.get(r, c, ch);
                sum += d * d;
            }
        }
    }
    Ok(sum / (h * w * 3) as f64)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP)
    }
}

/// Peak-1.0 PSNR in dB, capped at [`PSNR_CAP`].
pub fn psnr(a: &RgbImage, b: &RgbImage, border: usize) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b, border)?))
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-(i as f64 - half).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let mut w = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for gy in &g {
        for gx in &g {
            w.push(gy * gx);
        }
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Structural similarity: 11x11 Gaussian window (sigma 1.5), valid positions
/// only, computed per channel and averaged.
pub fn ssim(a: &RgbImage, b: &RgbImage, border: usize) -> Result<f64> {
    let (h, w) = check_pair(a, b, border)?;
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::dims(format!("ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} after cropping")));
    }
    let win = gaussian_window();
    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let (nh, nw) = (h - SSIM_WINDOW + 1, w - SSIM_WINDOW + 1);
    let mut total = 0.0;
    for ch in 0..3 {
        let mut acc = 0.0;
        for r in 0..nh {
            for c in 0..nw {
                let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for dy in 0..SSIM_WINDOW {
                    for dx in 0..SSIM_WINDOW {
                        let wt = win[dy * SSIM_WINDOW + dx];
                        let x = a.get(border + r + dy, border + c + dx, ch);
                        let y = b.get(border + r + dy, border + c + dx, ch);
                        mx += wt * x;
                        my += wt * y;
                        sxx += wt * x * x;
                        syy += wt * y * y;
                        sxy += wt * x * y;
                    }
                }
                let vx = sxx - mx * mx;
                let vy = syy - my * my;
                let cov = sxy - mx * my;
                acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
        total += acc / (nh * nw) as f64;
    }
    Ok(total / 3.0)
}

/// Linear sRGB (D65) to XYZ.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

/// Reference white: the XYZ of linear RGB (1, 1, 1) under the matrix above.
fn white_point() -> [f64; 3] {
    [0, 1, 2].map(|i| RGB_TO_XYZ[i].iter().sum())
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Linear RGB to CIELAB under D65.
pub fn rgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let white = white_point();
    let xyz = [0, 1, 2].map(|i| (0..3).map(|k| RGB_TO_XYZ[i][k] * rgb[k]).sum::<f64>());
    let f = [0, 1, 2].map(|i| lab_f(xyz[i] / white[i]));
    [116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])]
}

/// Mean CIE76 color difference over the cropped region.
pub fn delta_e(a: &RgbImage, b: &RgbImage, border: usize) -> Result<f64> {
    let (h, w) = check_pair(a, b, border)?;
    let mut sum = 0.0;
    for r in border..border + h {
        for c in border..border + w {
            let la = rgb_to_lab(a.pixel(r, c));
            let lb = rgb_to_lab(b.pixel(r, c));
            sum += (0..3).map(|k| (la[k] - lb[k]).powi(2)).sum::<f64>().sqrt();
        }
    }
    Ok(sum / (h * w) as f64)
}

pub fn evaluate(a: &RgbImage, b: &RgbImage, border: usize) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr_db: psnr(a, b, border)?,
        ssim: ssim(a, b, border)?,
        delta_e: delta_e(a, b, border)?,
        crop_border: border,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_image(h: usize, w: usize, seed: u64) -> RgbImage {
        use rand::Rng;
        let mut rng = crate::rng::rng(seed);
        RgbImage::new(h, w, (0..h * w * 3).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn identities() {
        let a = noise_image(20, 20, 1);
        assert_eq!(psnr(&a, &a, 2).unwrap(), PSNR_CAP);
        assert!((ssim(&a, &a, 2).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(delta_e(&a, &a, 2).unwrap(), 0.0);
    }

    #[test]
    fn uniform_error_psnr() {
        let a = RgbImage::constant(8, 8, [0.5; 3]).unwrap();
        let b = RgbImage::constant(8, 8, [0.6; 3]).unwrap();
        assert!((psnr(&a, &b, 2).unwrap() - 20.0).abs() < 1e-6);
    }

    #[test]
    fn border_error_is_cropped() {
        let a = RgbImage::constant(10, 10, [0.5; 3]).unwrap();
        let b = RgbImage::from_fn(10, 10, |r, c| {
            if r < 2 || c < 2 || r >= 8 || c >= 8 { [0.0; 3] } else { [0.5; 3] }
        })
        .unwrap();
        assert_eq!(psnr(&a, &b, 2).unwrap(), PSNR_CAP);
        assert!(psnr(&a, &b, 1).unwrap() < PSNR_CAP);
    }

    #[test]
    fn psnr_decreases_with_noise_amplitude() {
        let a = RgbImage::constant(16, 16, [0.5; 3]).unwrap();
        let mut last = f64::INFINITY;
        for amp in [0.01, 0.02, 0.04] {
            let b = RgbImage::from_fn(16, 16, |r, c| {
                let s = if (r + c) % 2 == 0 { amp } else { -amp };
                [0.5 + s; 3]
            })
            .unwrap();
            let p = psnr(&a, &b, 2).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn degenerate_inputs() {
        let a = RgbImage::constant(4, 4, [0.5; 3]).unwrap();
        let b = RgbImage::constant(4, 6, [0.5; 3]).unwrap();
        assert!(psnr(&a, &b, 0).is_err());
        assert!(psnr(&a, &a, 2).is_err());
        assert!(ssim(&a, &a, 0).is_err());
    }

    #[test]
    fn lab_endpoints() {
        let black = rgb_to_lab([0.0; 3]);
        let white = rgb_to_lab([1.0; 3]);
        assert!(black.iter().all(|v| v.abs() < 1e-12));
        assert!((white[0] - 100.0).abs() < 1e-9);
        assert!(white[1].abs() < 1e-9 && white[2].abs() < 1e-9);
        let a = RgbImage::constant(6, 6, [0.0; 3]).unwrap();
        let b = RgbImage::constant(6, 6, [1.0; 3]).unwrap();
        assert!((delta_e(&a, &b, 2).unwrap() - 100.0).abs() < 1e-6);
    }

    #[test]
    fn inverted_binary_has_negative_ssim() {
        let a = RgbImage::from_fn(16, 16, |r, c| [((r / 2 + c / 3) % 2) as f64; 3]).unwrap();
        let b = RgbImage::from_fn(16, 16, |r, c| [1.0 - a.get(r, c, 0); 3]).unwrap();
        let s = ssim(&a, &b, 2).unwrap();
        assert!(s < 0.0, "{s}");
    }

    #[test]
    fn symmetric() {
        let a = noise_image(20, 20, 2);
        let b = noise_image(20, 20, 3);
        assert_eq!(psnr(&a, &b, 2).unwrap(), psnr(&b, &a, 2).unwrap());
        assert!((ssim(&a, &b, 2).unwrap() - ssim(&b, &a, 2).unwrap()).abs() < 1e-14);
        assert!((delta_e(&a, &b, 2).unwrap() - delta_e(&b, &a, 2).unwrap()).abs() < 1e-12);
        assert!(delta_e(&a, &b, 2).unwrap() > 0.0);
    }
}
