//! 8-bit PNG in and out, normalized to [0,1]. Gray and RGB are first-class;
//! alpha channels are accepted on read and dropped.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Reads an 8-bit gray or RGB PNG (alpha dropped) into [0,1] floats.
pub fn read_png(path: &Path) -> Result<Image> {
    let decoder = png::Decoder::new(BufReader::new(File::open(path)?));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::PngDecode(e.to_string()))?;
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::PngDecode(e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth(match info.bit_depth {
            png::BitDepth::One => 1,
            png::BitDepth::Two => 2,
            png::BitDepth::Four => 4,
            png::BitDepth::Eight => 8,
            png::BitDepth::Sixteen => 16,
        }));
    }
    let (in_ch, out_ch) = match info.color_type {
        png::ColorType::Grayscale => (1usize, 1usize),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(Error::PngDecode("indexed PNG not supported".into()))
        }
    };
    let w = info.width as usize;
    let h = info.height as usize;
    let pixels = &buf[..info.buffer_size()];
    let mut data = Vec::with_capacity(w * h * out_ch);
    for px in pixels.chunks_exact(in_ch) {
        for &b in &px[..out_ch] {
            data.push(b as f32 / 255.0);
        }
    }
    Image::from_vec(w, h, out_ch, data)
}

/// Writes a 1-channel (gray) or 3-channel (RGB) [0,1] image as 8-bit PNG with
/// round-to-nearest.
pub fn write_png(img: &Image, path: &Path) -> Result<()> {
    let color = match img.channels() {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        n => {
            return Err(Error::InvalidParameter(format!(
                "PNG writer supports 1 or 3 channels, got {n}"
            )))
        }
    };
    let file = File::create(path)?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        img.width() as u32,
        img.height() as u32,
    );
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::PngEncode(e.to_string()))?;
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    writer
        .write_image_data(&bytes)
        .map_err(|e| Error::PngEncode(e.to_string()))?;
    Ok(())
}

/// Min-max normalizes a single-channel image and writes it as an 8-bit gray
/// PNG preview. A constant image maps to mid-gray.
pub fn write_png_gray_normalized(img: &Image, path: &Path) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::InvalidParameter(
            "normalized gray preview needs a single-channel image".into(),
        ));
    }
    let (lo, hi) = img.min_max();
    let span = hi - lo;
    let normalized = if span > 0.0 {
        img.map(|v| (v - lo) / span)
    } else {
        img.map(|_| 0.5)
    };
    write_png(&normalized, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn png_round_trip_of_quantized_rgb() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img = Image::from_fn(7, 5, 3, |_, _, _| {
            (rng.random_range(0u32..=255) as f32) / 255.0
        });
        let path = tmp("rt.png");
        write_png(&img, &path).unwrap();
        assert_eq!(read_png(&path).unwrap(), img);
    }

    #[test]
    fn png_round_trip_of_quantized_gray() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let img = Image::from_fn(4, 6, 1, |_, _, _| {
            (rng.random_range(0u32..=255) as f32) / 255.0
        });
        let path = tmp("gray.png");
        write_png(&img, &path).unwrap();
        assert_eq!(read_png(&path).unwrap(), img);
    }

    #[test]
    fn normalized_preview_spans_full_range() {
        let img = Image::from_vec(2, 1, 1, vec![10.0, 30.0]).unwrap();
        let path = tmp("norm.png");
        write_png_gray_normalized(&img, &path).unwrap();
        let back = read_png(&path).unwrap();
        assert_eq!(back.at(0, 0), 0.0);
        assert_eq!(back.at(1, 0), 1.0);
    }
}
