//! Dead-pixel bitmaps: `H`, `W` as u32 LE, then one bit per pixel in
//! row-major order, least significant bit first, last byte zero-padded.

use std::fs;
use std::path::Path;

use crate::demosaic::DeadPixelMask;
use crate::error::{Error, Result};

pub fn mask_to_bytes(mask: &DeadPixelMask) -> Vec<u8> {
    let bits = mask.bits();
    let mut out = Vec::with_capacity(8 + bits.len().div_ceil(8));
    out.extend_from_slice(&(mask.height() as u32).to_le_bytes());
    out.extend_from_slice(&(mask.width() as u32).to_le_bytes());
    for chunk in bits.chunks(8) {
        out.push(chunk.iter().enumerate().fold(0u8, |b, (i, &d)| b | (u8::from(d) << i)));
    }
    out
}

pub fn mask_from_bytes(bytes: &[u8]) -> Result<DeadPixelMask> {
    if bytes.len() < 8 {
        return Err(Error::Format("dead-pixel mask shorter than its header".into()));
    }
    let h = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n = h.checked_mul(w).ok_or_else(|| Error::Format("mask size overflows".into()))?;
    let payload = &bytes[8..];
    if payload.len() != n.div_ceil(8) {
        return Err(Error::Format(format!("{h}x{w} mask needs {} payload bytes, got {}", n.div_ceil(8), payload.len())));
    }
    let bits = (0..n).map(|i| payload[i / 8] >> (i % 8) & 1 == 1).collect();
    DeadPixelMask::from_bits(h, w, bits)
}

pub fn write_mask(mask: &DeadPixelMask, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mask_to_bytes(mask))?;
    Ok(())
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<DeadPixelMask> {
    mask_from_bytes(&fs::read(path)?)
}
