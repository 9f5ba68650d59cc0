//! Extension-based format dispatch between the pipelines and the readers and
//! writers. Grayscale data travels as PFM (exact floats, with an optional
//! validity mask for unknown pixels), 16-bit PGM (raw integer depth units) or
//! gray PNG; color as PNG or PPM. Gray PNG output is min-max normalized,
//! since disparities rarely fit [0, 1].

use std::path::Path;

use dts_core::io;
use dts_core::Image;

use crate::CliError;

fn extension(path: &Path) -> Result<String, CliError> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| {
            CliError::Usage(format!(
                "cannot infer format of {} (no extension)",
                path.display()
            ))
        })
}

/// Reads a single-channel image, plus a validity mask when the source format
/// can mark unknown pixels (PFM with non-finite samples).
pub fn read_gray(path: &Path) -> Result<(Image, Option<Image>), CliError> {
    match extension(path)?.as_str() {
        "pfm" => {
            let pfm = io::read_pfm(path)?;
            if pfm.image.channels() != 1 {
                return Err(CliError::Numeric(format!(
                    "{} is a color PFM where a single-channel map was expected",
                    path.display()
                )));
            }
            let mask = pfm.has_unknown().then_some(pfm.valid_mask);
            Ok((pfm.image, mask))
        }
        "pgm" => Ok((io::read_pgm16(path)?, None)),
        "png" => {
            let img = io::read_png(path)?;
            if img.channels() != 1 {
                return Err(CliError::Numeric(format!(
                    "{} is a color PNG where a grayscale one was expected",
                    path.display()
                )));
            }
            Ok((img, None))
        }
        other => Err(CliError::Usage(format!(
            "unsupported grayscale format .{other} (use .pfm, .pgm or .png)"
        ))),
    }
}

pub fn write_gray(img: &Image, path: &Path) -> Result<(), CliError> {
    match extension(path)?.as_str() {
        "pfm" => io::write_pfm(img, path)?,
        "pgm" => io::write_pgm16(img, path)?,
        "png" => io::write_png_gray_normalized(img, path)?,
        other => {
            return Err(CliError::Usage(format!(
                "unsupported grayscale output format .{other} (use .pfm, .pgm or .png)"
            )))
        }
    }
    Ok(())
}

pub fn read_color(path: &Path) -> Result<Image, CliError> {
    let img = match extension(path)?.as_str() {
        "png" => io::read_png(path)?,
        "ppm" => io::read_ppm(path)?,
        "pfm" => io::read_pfm(path)?.image,
        other => {
            return Err(CliError::Usage(format!(
                "unsupported color format .{other} (use .png, .ppm or .pfm)"
            )))
        }
    };
    Ok(img)
}

pub fn write_color(img: &Image, path: &Path) -> Result<(), CliError> {
    match extension(path)?.as_str() {
        "png" => io::write_png(img, path)?,
        "ppm" => io::write_ppm(img, path)?,
        "pfm" => io::write_pfm(img, path)?,
        other => {
            return Err(CliError::Usage(format!(
                "unsupported color output format .{other} (use .png, .ppm or .pfm)"
            )))
        }
    }
    Ok(())
}
