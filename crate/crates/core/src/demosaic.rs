//! Classical demosaicing baselines and dead-pixel handling.

use rand::seq::index;

use crate::cfa::{CfaKind, ColorChannel};
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::mosaic::Mosaic;
use crate::rng;

/// Boolean defect map, `true` = dead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeadPixelMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl DeadPixelMask {
    pub fn empty(height: usize, width: usize) -> Self {
        DeadPixelMask { height, width, bits: vec![false; height * width] }
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::dims(format!(
                "mask needs {} bits, got {}",
                height * width,
                bits.len()
            )));
        }
        Ok(DeadPixelMask { height, width, bits })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, dead: bool) {
        self.bits[row * self.width + col] = dead;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn rate(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.bits.len() as f64
        }
    }

    pub fn union(&self, other: &DeadPixelMask) -> Result<DeadPixelMask> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::dims("mask dimensions differ"));
        }
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        Ok(DeadPixelMask { height: self.height, width: self.width, bits })
    }
}

/// Picks exactly `round(rate * H * W)` dead pixels uniformly without replacement.
pub fn make_dead_mask(height: usize, width: usize, rate: f64, seed: u64) -> Result<DeadPixelMask> {
    if !(0.0..=0.05).contains(&rate) {
        return Err(Error::invalid(format!("dead-pixel rate {rate} outside [0, 0.05]")));
    }
    let n = height * width;
    Ok(random_mask(height, width, (rate * n as f64).round() as usize, &mut rng::rng(seed)))
}

pub(crate) fn random_mask(height: usize, width: usize, count: usize, rng: &mut rng::Rng) -> DeadPixelMask {
    let mut mask = DeadPixelMask::empty(height, width);
    for i in index::sample(rng, height * width, count.min(height * width)) {
        mask.bits[i] = true;
    }
    mask
}

/// Channel of every live pixel; `None` marks dead pixels.
pub fn channel_map(mosaic: &Mosaic) -> Vec<Option<ColorChannel>> {
    let (h, w) = (mosaic.height(), mosaic.width());
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            out.push((!mosaic.is_dead(r, c)).then(|| mosaic.layout().channel_at(r, c)));
        }
    }
    out
}

/// Normalized tent-kernel reconstruction for any sampling pattern.
///
/// A live pixel keeps its own channel. Every other channel value is the
/// average of same-channel live samples in a `(2r+1)^2` window weighted by
/// `(r+1-|dy|)(r+1-|dx|)`. Out-of-image taps are dropped and the weights
/// renormalized. If a window holds no donor the radius doubles until one is
/// found. With `r = 1` on a Single-Bayer grid this is exactly bilinear
/// demosaicing.
pub fn tent_reconstruct(
    values: &[f64],
    channels: &[Option<ColorChannel>],
    height: usize,
    width: usize,
    radius: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; height * width * 3];
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            for ch in ColorChannel::ALL {
                out[i * 3 + ch.index()] = if channels[i] == Some(ch) {
                    values[i]
                } else {
                    tent_estimate(values, channels, height, width, r, c, ch, radius)
                };
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn tent_estimate(
    values: &[f64],
    channels: &[Option<ColorChannel>],
    height: usize,
    width: usize,
    row: usize,
    col: usize,
    ch: ColorChannel,
    radius: usize,
) -> f64 {
    let mut rad = radius.max(1);
    loop {
        // deviations from the first donor, so constant neighbourhoods come back bit-exact
        let (mut num, mut den, mut anchor) = (0.0, 0.0, None);
        let r0 = row.saturating_sub(rad);
        let r1 = (row + rad).min(height - 1);
        let c0 = col.saturating_sub(rad);
        let c1 = (col + rad).min(width - 1);
        for rr in r0..=r1 {
            let wy = (rad + 1 - rr.abs_diff(row)) as f64;
            for cc in c0..=c1 {
                let j = rr * width + cc;
                if channels[j] == Some(ch) {
                    let wt = wy * (rad + 1 - cc.abs_diff(col)) as f64;
                    let a = *anchor.get_or_insert(values[j]);
                    num += wt * (values[j] - a);
                    den += wt;
                }
            }
        }
        if let Some(a) = anchor {
            return a + num / den;
        }
        if rad >= height.max(width) {
            return 0.0;
        }
        rad *= 2;
    }
}

/// Tent radius matched to a layout's same-color block side.
pub fn tent_radius(kind: CfaKind) -> usize {
    kind.block_side()
}

/// Layout-agnostic bilinear-style baseline (dead pixels excluded).
pub fn tent_demosaic(mosaic: &Mosaic) -> Result<RgbImage> {
    let (h, w) = (mosaic.height(), mosaic.width());
    let out = tent_reconstruct(mosaic.data(), &channel_map(mosaic), h, w, tent_radius(mosaic.kind()));
    RgbImage::from_clamped(h, w, out)
}

fn require_single(mosaic: &Mosaic, what: &str) -> Result<()> {
    if mosaic.kind() != CfaKind::Single {
        return Err(Error::UnsupportedLayout(format!(
            "{what} needs a single-bayer mosaic, got {}",
            mosaic.kind()
        )));
    }
    Ok(())
}

/// Standard Bayer bilinear interpolation.
pub fn bilinear_demosaic(mosaic: &Mosaic) -> Result<RgbImage> {
    require_single(mosaic, "bilinear demosaicing")?;
    tent_demosaic(mosaic)
}

/// Directional green interpolation followed by color-difference R/B fill.
pub fn edge_aware_demosaic(mosaic: &Mosaic) -> Result<RgbImage> {
    require_single(mosaic, "edge-aware demosaicing")?;
    let (h, w) = (mosaic.height(), mosaic.width());
    let chans = channel_map(mosaic);
    let v = mosaic.data();
    let green_at = |r: isize, c: isize| -> Option<f64> {
        if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
            return None;
        }
        let j = r as usize * w + c as usize;
        (chans[j] == Some(ColorChannel::G)).then(|| v[j])
    };

    let mut green = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if chans[i] == Some(ColorChannel::G) {
                green[i] = v[i];
                continue;
            }
            let (ri, ci) = (r as isize, c as isize);
            let taps = (green_at(ri, ci - 1), green_at(ri, ci + 1), green_at(ri - 1, ci), green_at(ri + 1, ci));
            green[i] = match taps {
                (Some(l), Some(rt), Some(u), Some(d)) => {
                    let dh = (l - rt).abs();
                    let dv = (u - d).abs();
                    if dh < dv {
                        (l + rt) / 2.0
                    } else if dv < dh {
                        (u + d) / 2.0
                    } else {
                        (l + rt + u + d) / 4.0
                    }
                }
                _ => tent_estimate(v, &chans, h, w, r, c, ColorChannel::G, 1),
            };
        }
    }

    // R - G and B - G at their own sites, then tent-interpolated.
    let diffs: Vec<f64> = (0..h * w)
        .map(|i| match chans[i] {
            Some(ColorChannel::R) | Some(ColorChannel::B) => v[i] - green[i],
            _ => 0.0,
        })
        .collect();
    let mut out = vec![0.0; h * w * 3];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            out[i * 3 + 1] = green[i];
            for ch in [ColorChannel::R, ColorChannel::B] {
                out[i * 3 + ch.index()] = if chans[i] == Some(ch) {
                    v[i]
                } else {
                    green[i] + tent_estimate(&diffs, &chans, h, w, r, c, ch, 1)
                };
            }
        }
    }
    RgbImage::from_clamped(h, w, out)
}

pub const DEAD_WINDOW: usize = 7;
pub const DEAD_SIGMA: f64 = 3.0;

/// Replaces each dead pixel by a Gaussian-weighted (7x7, sigma 3) average of
/// live same-channel pixels in its window. Live pixels are untouched.
pub fn interpolate_dead(mosaic: &Mosaic, mask: &DeadPixelMask) -> Result<Mosaic> {
    let (h, w) = (mosaic.height(), mosaic.width());
    let mask = match mosaic.dead() {
        Some(own) => own.union(mask)?,
        None => {
            if mask.height() != h || mask.width() != w {
                return Err(Error::dims("mask does not match mosaic"));
            }
            mask.clone()
        }
    };
    let half = (DEAD_WINDOW / 2) as isize;
    let layout = mosaic.layout();
    let mut data = mosaic.data().to_vec();
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            let ch = layout.channel_at(r, c);
            let (mut num, mut den, mut anchor) = (0.0, 0.0, None);
            for dy in -half..=half {
                for dx in -half..=half {
                    let (rr, cc) = (r as isize + dy, c as isize + dx);
                    if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                        continue;
                    }
                    let (rr, cc) = (rr as usize, cc as usize);
                    if mask.get(rr, cc) || layout.channel_at(rr, cc) != ch {
                        continue;
                    }
                    let wt = (-((dy * dy + dx * dx) as f64) / (2.0 * DEAD_SIGMA * DEAD_SIGMA)).exp();
                    let v = mosaic.get(rr, cc);
                    let a = *anchor.get_or_insert(v);
                    num += wt * (v - a);
                    den += wt;
                }
            }
            let Some(a) = anchor else {
                return Err(Error::NoDonor { row: r, col: c });
            };
            data[r * w + c] = a + num / den;
        }
    }
    mosaic.clone().without_dead().replace_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mosaic::sample_mosaic;

    fn single(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> Mosaic {
        let mut data = Vec::new();
        for r in 0..h {
            for c in 0..w {
                data.push(f(r, c));
            }
        }
        Mosaic::new(CfaKind::Single.layout(), h, w, data).unwrap()
    }

    #[test]
    fn constant_is_exact_everywhere() {
        let m = single(8, 10, |_, _| 0.37);
        for img in [bilinear_demosaic(&m).unwrap(), edge_aware_demosaic(&m).unwrap()] {
            assert!(img.data().iter().all(|&v| v == 0.37 || (v - 0.37).abs() < 1e-15));
        }
        for kind in [CfaKind::Quad, CfaKind::Nona] {
            let m = Mosaic::constant(kind.layout(), 12, 12, 0.61).unwrap();
            assert!(tent_demosaic(&m).unwrap().data().iter().all(|&v| (v - 0.61).abs() < 1e-15));
        }
    }

    #[test]
    fn rejects_non_single() {
        let m = Mosaic::constant(CfaKind::Quad.layout(), 4, 4, 0.1).unwrap();
        assert!(matches!(bilinear_demosaic(&m), Err(Error::UnsupportedLayout(_))));
        assert!(matches!(edge_aware_demosaic(&m), Err(Error::UnsupportedLayout(_))));
    }

    #[test]
    fn interior_stencils() {
        let m = single(8, 8, |r, c| ((r * 8 + c) as f64 * 0.37).fract());
        let img = bilinear_demosaic(&m).unwrap();
        // G at R site (2,2): 4-neighbour mean
        let g = (m.get(1, 2) + m.get(3, 2) + m.get(2, 1) + m.get(2, 3)) / 4.0;
        assert!((img.get(2, 2, 1) - g).abs() < 1e-15);
        // B at R site: diagonal mean
        let b = (m.get(1, 1) + m.get(1, 3) + m.get(3, 1) + m.get(3, 3)) / 4.0;
        assert!((img.get(2, 2, 2) - b).abs() < 1e-15);
        // R at G site on an R row: horizontal pair
        let r = (m.get(2, 2) + m.get(2, 4)) / 2.0;
        assert!((img.get(2, 3, 0) - r).abs() < 1e-15);
        // R at G site on a B row: vertical pair
        let r = (m.get(2, 2) + m.get(4, 2)) / 2.0;
        assert!((img.get(3, 2, 0) - r).abs() < 1e-15);
        // own channel passes through
        assert_eq!(img.get(3, 3, 2), m.get(3, 3));
        assert_eq!(img.get(2, 3, 1), m.get(2, 3));
    }

    #[test]
    fn edge_aware_follows_vertical_edge() {
        // Left half dark, right half bright: a vertical edge between cols 3 and 4.
        let img = RgbImage::from_fn(8, 8, |_, c| if c < 4 { [0.2; 3] } else { [0.8; 3] }).unwrap();
        let m = sample_mosaic(&img, &CfaKind::Single.layout()).unwrap();
        let out = edge_aware_demosaic(&m).unwrap();
        // R site (2,4) and B site (3,3) sit on the edge columns.
        assert_eq!(out.get(2, 4, 1), 0.8);
        assert_eq!(out.get(3, 3, 1), 0.2);
        // bilinear smears the same positions
        let bl = bilinear_demosaic(&m).unwrap();
        assert!((bl.get(2, 4, 1) - 0.8).abs() > 0.1);
        // no zipper: green is exact everywhere in the interior
        for r in 1..7 {
            for c in 1..7 {
                assert_eq!(out.get(r, c, 1), img.get(r, c, 1), "({r},{c})");
            }
        }
    }

    #[test]
    fn edge_aware_green_matches_bilinear_on_ties() {
        // Values depend on r + c only through a symmetric checker of G sites,
        // so horizontal and vertical differences always tie.
        let m = single(8, 8, |r, c| if (r + c) % 2 == 1 { 0.5 } else { 0.1 + 0.05 * ((r * c) % 5) as f64 });
        let ea = edge_aware_demosaic(&m).unwrap();
        let bl = bilinear_demosaic(&m).unwrap();
        for r in 1..7 {
            for c in 1..7 {
                assert!((ea.get(r, c, 1) - bl.get(r, c, 1)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dead_mask_rules() {
        assert_eq!(make_dead_mask(10, 10, 0.0, 1).unwrap().count(), 0);
        let m = make_dead_mask(100, 100, 0.01, 5).unwrap();
        assert_eq!(m.count(), 100);
        assert_eq!(m, make_dead_mask(100, 100, 0.01, 5).unwrap());
        assert_ne!(m, make_dead_mask(100, 100, 0.01, 6).unwrap());
        assert!(make_dead_mask(10, 10, 0.06, 1).is_err());
        assert!(make_dead_mask(10, 10, -0.01, 1).is_err());
    }

    #[test]
    fn interpolate_dead_constant_and_empty() {
        let m = single(12, 12, |_, _| 0.42);
        let mask = make_dead_mask(12, 12, 0.05, 3).unwrap();
        let out = interpolate_dead(&m, &mask).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.42).abs() < 1e-15));

        let ramp = single(12, 12, |r, c| (r + c) as f64 / 30.0);
        assert_eq!(interpolate_dead(&ramp, &DeadPixelMask::empty(12, 12)).unwrap(), ramp);
    }

    #[test]
    fn interpolate_dead_matches_double_loop() {
        let ramp = single(12, 12, |r, c| (3 * r + c) as f64 / 60.0);
        let mut mask = DeadPixelMask::empty(12, 12);
        mask.set(5, 6, true); // G site
        let out = interpolate_dead(&ramp, &mask).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for r in 2..=8usize {
            for c in 3..=9usize {
                if (r + c) % 2 == 1 && (r, c) != (5, 6) {
                    let d2 = (r as f64 - 5.0).powi(2) + (c as f64 - 6.0).powi(2);
                    let wt = (-d2 / 18.0).exp();
                    num += wt * ramp.get(r, c);
                    den += wt;
                }
            }
        }
        assert_eq!(out.get(5, 6), num / den);
        assert_eq!(out.get(5, 5), ramp.get(5, 5));
    }

    #[test]
    fn interpolate_dead_is_idempotent() {
        let m = single(12, 12, |r, c| ((r * 7 + c * 3) % 11) as f64 / 10.0);
        let mask = make_dead_mask(12, 12, 0.05, 11).unwrap();
        let once = interpolate_dead(&m, &mask).unwrap();
        let twice = interpolate_dead(&once, &mask).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn interpolate_dead_reports_missing_donor() {
        // every red pixel of a 2x2 mosaic dead -> no red donor
        let m = single(2, 2, |_, _| 0.5);
        let mut mask = DeadPixelMask::empty(2, 2);
        mask.set(0, 0, true);
        assert!(matches!(interpolate_dead(&m, &mask), Err(Error::NoDonor { row: 0, col: 0 })));
    }

    #[test]
    fn tent_skips_dead_and_expands() {
        let mut mask = DeadPixelMask::empty(6, 6);
        mask.set(2, 2, true);
        let m = single(6, 6, |_, _| 0.3).with_dead(mask).unwrap();
        let img = bilinear_demosaic(&m).unwrap();
        // the dead red site has no red donor at radius 1 and must expand
        assert!((img.get(2, 2, 0) - 0.3).abs() < 1e-15);
        assert!((img.get(2, 2, 1) - 0.3).abs() < 1e-15);
    }
}
