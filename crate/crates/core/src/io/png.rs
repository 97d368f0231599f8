use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Write};
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use crate::error::{Error, Result};
use crate::image::RgbImage;

fn fmt_err(e: impl std::fmt::Display) -> Error {
    Error::Format(format!("png: {e}"))
}

/// Encodes as 16-bit RGB; each value is rounded to the nearest of 65536 levels.
pub fn encode_png<W: Write>(image: &RgbImage, out: W) -> Result<()> {
    let mut enc = png::Encoder::new(out, image.width() as u32, image.height() as u32);
    enc.set_color(ColorType::Rgb);
    enc.set_depth(BitDepth::Sixteen);
    let mut writer = enc.write_header().map_err(fmt_err)?;
    let bytes: Vec<u8> = image
        .data()
        .iter()
        .flat_map(|&v| ((v * 65535.0).round() as u16).to_be_bytes())
        .collect();
    writer.write_image_data(&bytes).map_err(fmt_err)?;
    writer.finish().map_err(fmt_err)
}

/// Decodes 8- or 16-bit gray, gray+alpha, RGB, RGBA or palette images.
/// Alpha is dropped and gray is replicated into all three channels.
pub fn decode_png<R: std::io::BufRead + std::io::Seek>(input: R) -> Result<RgbImage> {
    let mut dec = png::Decoder::new(input);
    dec.set_transformations(Transformations::EXPAND);
    let mut reader = dec.read_info().map_err(fmt_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| fmt_err("image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(fmt_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let spp = info.color_type.samples();
    let samples: Vec<f64> = match info.bit_depth {
        BitDepth::Sixteen => buf[..info.buffer_size()]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect(),
        BitDepth::Eight => buf[..info.buffer_size()].iter().map(|&b| b as f64 / 255.0).collect(),
        d => return Err(fmt_err(format!("unsupported bit depth {d:?}"))),
    };
    let line = samples.len() / h.max(1);
    let mut data = Vec::with_capacity(h * w * 3);
    for y in 0..h {
        for x in 0..w {
            let px = &samples[y * line + x * spp..][..spp];
            match info.color_type {
                ColorType::Grayscale | ColorType::GrayscaleAlpha => data.extend([px[0]; 3]),
                ColorType::Rgb | ColorType::Rgba => data.extend(&px[..3]),
                ColorType::Indexed => return Err(fmt_err("palette was not expanded")),
            }
        }
    }
    RgbImage::new(h, w, data)
}

pub fn write_png(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    encode_png(image, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    decode_png(BufReader::new(File::open(path)?))
}

pub fn png_bytes(image: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    encode_png(image, &mut out)?;
    Ok(out)
}

pub fn png_from_bytes(bytes: &[u8]) -> Result<RgbImage> {
    decode_png(Cursor::new(bytes))
}
