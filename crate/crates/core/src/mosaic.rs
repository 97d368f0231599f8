//! Mosaic-domain transforms: sampling, shuffle remosaicing, packing and binning.

use crate::cfa::{CfaKind, CfaLayout};
use crate::demosaic::DeadPixelMask;
use crate::error::{Error, Result};
use crate::image::RgbImage;

/// Single-channel sensor readout under a CFA layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Mosaic {
    layout: CfaLayout,
    height: usize,
    width: usize,
    data: Vec<f64>,
    dead: Option<DeadPixelMask>,
}

impl Mosaic {
    pub fn new(layout: CfaLayout, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        let p = layout.period();
        if !height.is_multiple_of(p) || !width.is_multiple_of(p) {
            return Err(Error::dims(format!(
                "{height}x{width} is not divisible by the {} period {p}",
                layout.kind()
            )));
        }
        if data.len() != height * width {
            return Err(Error::dims(format!(
                "expected {} mosaic values, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("mosaic value {v} outside [0, 1]")));
        }
        Ok(Mosaic { layout, height, width, data, dead: None })
    }

    pub fn constant(layout: CfaLayout, height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(layout, height, width, vec![value; height * width])
    }

    /// Attaches a dead-pixel mask; dead readings are forced to zero.
    pub fn with_dead(mut self, mask: DeadPixelMask) -> Result<Self> {
        if mask.height() != self.height || mask.width() != self.width {
            return Err(Error::dims(format!(
                "mask {}x{} does not match mosaic {}x{}",
                mask.height(),
                mask.width(),
                self.height,
                self.width
            )));
        }
        for (v, dead) in self.data.iter_mut().zip(mask.bits()) {
            if *dead {
                *v = 0.0;
            }
        }
        self.dead = Some(mask);
        Ok(self)
    }

    pub fn without_dead(mut self) -> Self {
        self.dead = None;
        self
    }

    #[inline]
    pub fn layout(&self) -> &CfaLayout {
        &self.layout
    }

    #[inline]
    pub fn kind(&self) -> CfaKind {
        self.layout.kind()
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

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn dead(&self) -> Option<&DeadPixelMask> {
        self.dead.as_ref()
    }

    #[inline]
    pub fn is_dead(&self, row: usize, col: usize) -> bool {
        self.dead.as_ref().is_some_and(|m| m.get(row, col))
    }

    /// Copy with each value multiplied by `alpha` (mask preserved).
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let mut out = Self::new(
            self.layout.clone(),
            self.height,
            self.width,
            self.data.iter().map(|v| v * alpha).collect(),
        )?;
        out.dead = self.dead.clone();
        Ok(out)
    }

    pub(crate) fn replace_data(&self, data: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.layout.clone(), self.height, self.width, data)?;
        out.dead = self.dead.clone();
        Ok(out)
    }
}

/// Samples one channel per pixel according to `layout`.
pub fn sample_mosaic(image: &RgbImage, layout: &CfaLayout) -> Result<Mosaic> {
    let (h, w) = (image.height(), image.width());
    let p = layout.period();
    if h % p != 0 || w % p != 0 {
        return Err(Error::dims(format!("{h}x{w} image is not divisible by period {p}")));
    }
    let mut data = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            data.push(image.get(r, c, layout.channel_at(r, c).index()));
        }
    }
    Mosaic::new(layout.clone(), h, w, data)
}

/// For a Quad/Nona tile, `perm[target] = source` within one `p x p` tile.
///
/// The k-th occurrence of a color in the source tile (row-major) moves to the
/// k-th occurrence of that color in the Single-Bayer tile.
pub fn shuffle_permutation(kind: CfaKind) -> Vec<usize> {
    let src = kind.layout();
    let dst = CfaKind::Single.layout();
    let p = kind.period();
    let mut perm = vec![0; p * p];
    for ch in crate::cfa::ColorChannel::ALL {
        let sources = (0..p * p).filter(|&k| src.channel_at(k / p, k % p) == ch);
        let targets = (0..p * p).filter(|&k| dst.channel_at(k / p, k % p) == ch);
        for (t, s) in targets.zip(sources) {
            perm[t] = s;
        }
    }
    perm
}

/// Rearranges Quad or Nona tiles into Single-Bayer order without changing values.
pub fn shuffle_remosaic(mosaic: &Mosaic) -> Result<Mosaic> {
    let kind = mosaic.kind();
    if kind == CfaKind::Single {
        return Err(Error::UnsupportedLayout("shuffle remosaic needs a quad or nona mosaic".into()));
    }
    let p = kind.period();
    let perm = shuffle_permutation(kind);
    let (h, w) = (mosaic.height, mosaic.width);
    let mut data = vec![0.0; h * w];
    let mut dead = mosaic.dead.as_ref().map(|_| DeadPixelMask::empty(h, w));
    for tr in (0..h).step_by(p) {
        for tc in (0..w).step_by(p) {
            for (t, &s) in perm.iter().enumerate() {
                let (dr, dc) = (tr + t / p, tc + t % p);
                let (sr, sc) = (tr + s / p, tc + s % p);
                data[dr * w + dc] = mosaic.get(sr, sc);
                if let Some(d) = dead.as_mut() {
                    d.set(dr, dc, mosaic.is_dead(sr, sc));
                }
            }
        }
    }
    let out = Mosaic::new(CfaKind::Single.layout(), h, w, data)?;
    match dead {
        Some(d) => out.with_dead(d),
        None => Ok(out),
    }
}

/// Tiles reshaped into depth: `(H/p) x (W/p) x p^2`, slot `r * p + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedMosaic {
    pub kind: CfaKind,
    pub rows: usize,
    pub cols: usize,
    pub depth: usize,
    pub data: Vec<f64>,
}

/// Packs mosaic values; a dead mask, if any, is not carried over.
pub fn pack(mosaic: &Mosaic) -> PackedMosaic {
    let p = mosaic.layout.period();
    let (rows, cols) = (mosaic.height / p, mosaic.width / p);
    let depth = p * p;
    let mut data = vec![0.0; rows * cols * depth];
    for r in 0..mosaic.height {
        for c in 0..mosaic.width {
            let slot = (r % p) * p + c % p;
            data[((r / p) * cols + c / p) * depth + slot] = mosaic.get(r, c);
        }
    }
    PackedMosaic { kind: mosaic.kind(), rows, cols, depth, data }
}

pub fn unpack(packed: &PackedMosaic) -> Result<Mosaic> {
    let p = packed.kind.period();
    if packed.depth != p * p {
        return Err(Error::dims(format!(
            "{} packing needs depth {}, got {}",
            packed.kind,
            p * p,
            packed.depth
        )));
    }
    if packed.data.len() != packed.rows * packed.cols * packed.depth {
        return Err(Error::dims("packed tensor length does not match its shape"));
    }
    let (h, w) = (packed.rows * p, packed.cols * p);
    let mut data = vec![0.0; h * w];
    for (i, v) in packed.data.iter().enumerate() {
        let slot = i % packed.depth;
        let cell = i / packed.depth;
        let (br, bc) = (cell / packed.cols, cell % packed.cols);
        data[(br * p + slot / p) * w + bc * p + slot % p] = *v;
    }
    Mosaic::new(packed.kind.layout(), h, w, data)
}

/// Collapses each same-color block to its mean, giving a Single-Bayer mosaic
/// at `1/s` resolution. Dead pixels are left out of the mean; an all-dead
/// block becomes a dead output pixel.
pub fn bin(mosaic: &Mosaic) -> Result<Mosaic> {
    let kind = mosaic.kind();
    if kind == CfaKind::Single {
        return Err(Error::UnsupportedLayout("binning needs a quad or nona mosaic".into()));
    }
    let s = kind.block_side();
    let (oh, ow) = (mosaic.height / s, mosaic.width / s);
    let mut data = vec![0.0; oh * ow];
    let mut dead = DeadPixelMask::empty(oh, ow);
    for br in 0..oh {
        for bc in 0..ow {
            let mut sum = 0.0;
            let mut n = 0usize;
            for r in br * s..(br + 1) * s {
                for c in bc * s..(bc + 1) * s {
                    if !mosaic.is_dead(r, c) {
                        sum += mosaic.get(r, c);
                        n += 1;
                    }
                }
            }
            if n == 0 {
                dead.set(br, bc, true);
            } else {
                data[br * ow + bc] = sum / n as f64;
            }
        }
    }
    let out = Mosaic::new(CfaKind::Single.layout(), oh, ow, data)?;
    if dead.count() > 0 {
        out.with_dead(dead)
    } else {
        Ok(out)
    }
}
