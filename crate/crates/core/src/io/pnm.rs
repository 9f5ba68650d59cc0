//! Binary netpbm: P6 PPM (8-bit color, normalized to [0,1]) and P5 PGM with
//! maxval 65535 (16-bit big-endian samples carried as raw float values, the
//! convention of depth-map benchmarks).

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Reads tokens, skipping whitespace and `#` comment lines.
fn next_token(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::MalformedHeader("unexpected end of header".into()));
    }
    Ok(start)
}

fn parse_usize(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let start = next_token(bytes, pos)?;
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::MalformedHeader(format!("bad {what}")))
}

fn parse_pnm_header(bytes: &[u8], magic: &str) -> Result<(usize, usize, usize, usize)> {
    let mut pos = 0usize;
    let start = next_token(bytes, &mut pos)?;
    let tag = std::str::from_utf8(&bytes[start..pos])
        .map_err(|_| Error::MalformedHeader("non-ASCII magic".into()))?;
    if tag != magic {
        return Err(Error::MalformedHeader(format!(
            "expected {magic}, got {tag:?}"
        )));
    }
    let width = parse_usize(bytes, &mut pos, "width")?;
    let height = parse_usize(bytes, &mut pos, "height")?;
    let maxval = parse_usize(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero dimension".into()));
    }
    // single whitespace byte before the binary payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::MalformedHeader("missing payload separator".into()));
    }
    pos += 1;
    Ok((width, height, maxval, pos))
}

/// Binary P6 PPM -> 3-channel image normalized to [0,1]. Only maxval 255 is
/// supported.
pub fn read_ppm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    let (w, h, maxval, start) = parse_pnm_header(&bytes, "P6")?;
    if maxval != 255 {
        return Err(Error::UnsupportedBitDepth(maxval as u32));
    }
    let expected = w * h * 3;
    let payload = &bytes[start..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            got: payload.len(),
        });
    }
    let data = payload[..expected]
        .iter()
        .map(|&b| b as f32 / 255.0)
        .collect();
    Image::from_vec(w, h, 3, data)
}

/// Writes a 3-channel [0,1] image as binary P6 with round-to-nearest.
pub fn write_ppm(img: &Image, path: &Path) -> Result<()> {
    if img.channels() != 3 {
        return Err(Error::InvalidParameter(format!(
            "PPM needs 3 channels, got {}",
            img.channels()
        )));
    }
    let mut out = Vec::with_capacity(32 + img.data().len());
    write!(out, "P6\n{} {}\n255\n", img.width(), img.height())?;
    for &v in img.data() {
        out.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
    }
    fs::write(path, out)?;
    Ok(())
}

/// 16-bit binary P5 PGM (maxval 65535, big-endian samples) -> raw float
/// values, no normalization.
pub fn read_pgm16(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    let (w, h, maxval, start) = parse_pnm_header(&bytes, "P5")?;
    if maxval != 65535 {
        return Err(Error::UnsupportedBitDepth(maxval as u32));
    }
    let expected = w * h * 2;
    let payload = &bytes[start..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            got: payload.len(),
        });
    }
    let data = payload[..expected]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f32)
        .collect();
    Image::from_vec(w, h, 1, data)
}

/// Writes raw float values as 16-bit P5 with round-to-nearest, clamped to
/// [0, 65535].
pub fn write_pgm16(img: &Image, path: &Path) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::InvalidParameter(format!(
            "PGM needs 1 channel, got {}",
            img.channels()
        )));
    }
    let mut out = Vec::with_capacity(32 + img.data().len() * 2);
    write!(out, "P5\n{} {}\n65535\n", img.width(), img.height())?;
    for &v in img.data() {
        let q = v.round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}
