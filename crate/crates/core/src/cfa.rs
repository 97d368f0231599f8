//! Color filter array layouts and the per-pixel one-hot pattern embedding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mosaic::Mosaic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColorChannel {
    R,
    G,
    B,
}

impl ColorChannel {
    pub const ALL: [ColorChannel; 3] = [ColorChannel::R, ColorChannel::G, ColorChannel::B];

    /// Position of the channel in RGB order, also the one-hot slot.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            ColorChannel::R => 0,
            ColorChannel::G => 1,
            ColorChannel::B => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// The three supported same-color block sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CfaKind {
    Single,
    Quad,
    Nona,
}

impl CfaKind {
    pub const ALL: [CfaKind; 3] = [CfaKind::Single, CfaKind::Quad, CfaKind::Nona];

    /// Side of a same-color block (1, 2 or 3).
    pub fn block_side(self) -> usize {
        match self {
            CfaKind::Single => 1,
            CfaKind::Quad => 2,
            CfaKind::Nona => 3,
        }
    }

    pub fn period(self) -> usize {
        2 * self.block_side()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CfaKind::Single => "single",
            CfaKind::Quad => "quad",
            CfaKind::Nona => "nona",
        }
    }

    pub fn layout(self) -> CfaLayout {
        CfaLayout::new(self)
    }
}

impl fmt::Display for CfaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CfaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(CfaKind::Single),
            "quad" => Ok(CfaKind::Quad),
            "nona" => Ok(CfaKind::Nona),
            other => Err(Error::invalid(format!("unknown cfa kind `{other}`"))),
        }
    }
}

/// A periodic RGGB-macro tile. Phase is fixed: pixel (0, 0) is always red.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CfaLayout {
    kind: CfaKind,
    tile: Vec<ColorChannel>,
}

impl CfaLayout {
    pub fn new(kind: CfaKind) -> Self {
        let s = kind.block_side();
        let p = kind.period();
        let tile = (0..p * p)
            .map(|k| {
                let (r, c) = (k / p, k % p);
                match (r < s, c < s) {
                    (true, true) => ColorChannel::R,
                    (false, false) => ColorChannel::B,
                    _ => ColorChannel::G,
                }
            })
            .collect();
        CfaLayout { kind, tile }
    }

    #[inline]
    pub fn kind(&self) -> CfaKind {
        self.kind
    }

    #[inline]
    pub fn period(&self) -> usize {
        self.kind.period()
    }

    /// Row-major `period x period` tile.
    pub fn tile(&self) -> &[ColorChannel] {
        &self.tile
    }

    #[inline]
    pub fn channel_at(&self, row: usize, col: usize) -> ColorChannel {
        let p = self.period();
        self.tile[(row % p) * p + col % p]
    }

    /// Per-channel counts over one tile, in RGB order.
    pub fn tile_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for ch in &self.tile {
            counts[ch.index()] += 1;
        }
        counts
    }
}

/// Convenience wrapper for [`CfaLayout::new`].
pub fn layout_for(kind: CfaKind) -> CfaLayout {
    CfaLayout::new(kind)
}

/// Four-channel network input: intensity followed by the one-hot filter code.
///
/// Masked-out pixels carry zero intensity and an all-zero code.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedMosaic {
    pub height: usize,
    pub width: usize,
    pub kind: CfaKind,
    /// `height * width * 4`, row-major, channel-last.
    pub data: Vec<f64>,
}

impl EmbeddedMosaic {
    #[inline]
    pub fn at(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * 4 + ch]
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.data.chunks_exact(4).map(|px| px[0]).collect()
    }

    /// Filter channel of each pixel, `None` where the code is all-zero.
    pub fn channel_map(&self) -> Vec<Option<ColorChannel>> {
        self.data
            .chunks_exact(4)
            .map(|px| {
                (1..4)
                    .find(|&k| px[k] != 0.0)
                    .and_then(|k| ColorChannel::from_index(k - 1))
            })
            .collect()
    }
}

pub fn make_embedding(mosaic: &Mosaic) -> Result<EmbeddedMosaic> {
    let p = mosaic.layout().period();
    let (h, w) = (mosaic.height(), mosaic.width());
    if h % p != 0 || w % p != 0 {
        return Err(Error::dims(format!(
            "{h}x{w} mosaic is not divisible by the {} period {p}",
            mosaic.layout().kind()
        )));
    }
    let mut data = vec![0.0; h * w * 4];
    for row in 0..h {
        for col in 0..w {
            if mosaic.is_dead(row, col) {
                continue;
            }
            let base = (row * w + col) * 4;
            data[base] = mosaic.get(row, col);
            data[base + 1 + mosaic.layout().channel_at(row, col).index()] = 1.0;
        }
    }
    Ok(EmbeddedMosaic { height: h, width: w, kind: mosaic.layout().kind(), data })
}
