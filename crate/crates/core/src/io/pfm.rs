//! PFM: ASCII header ("Pf" grayscale / "PF" color), binary f32 payload stored
//! bottom-to-top, endianness encoded in the sign of the scale token (negative
//! means little-endian). The format Middlebury uses to ship disparity maps.
//!
//! Infinite values mark unknown disparity there; the reader zeroes them in the
//! image and reports them through a validity mask so downstream code can give
//! those pixels zero confidence instead of propagating Inf.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfmKind {
    Grayscale,
    Color,
}

#[derive(Debug, Clone, Copy)]
pub struct PfmHeader {
    pub kind: PfmKind,
    pub width: usize,
    pub height: usize,
    /// Sign encodes endianness (negative = little); magnitude is carried
    /// through but not applied to samples.
    pub scale: f32,
}

/// A decoded PFM: the (finite) image and a validity mask, 1 where the stored
/// value was finite and 0 where it was Inf/NaN.
pub struct Pfm {
    pub header: PfmHeader,
    pub image: Image,
    pub valid_mask: Image,
}

impl Pfm {
    /// True if any pixel was non-finite in the file.
    pub fn has_unknown(&self) -> bool {
        self.valid_mask.data().contains(&0.0)
    }
}

fn parse_header(bytes: &[u8]) -> Result<(PfmHeader, usize)> {
    let mut pos = 0usize;
    let mut token = |what: &str| -> Result<&str> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&bytes[start..pos])
            .map_err(|_| Error::MalformedHeader(format!("non-ASCII {what}")))
    };

    let kind = match token("type tag")? {
        "Pf" => PfmKind::Grayscale,
        "PF" => PfmKind::Color,
        other => {
            return Err(Error::MalformedHeader(format!(
                "expected Pf or PF, got {other:?}"
            )))
        }
    };
    let width: usize = token("width")?
        .parse()
        .map_err(|_| Error::MalformedHeader("bad width".into()))?;
    let height: usize = token("height")?
        .parse()
        .map_err(|_| Error::MalformedHeader("bad height".into()))?;
    let scale: f32 = token("scale")?
        .parse()
        .map_err(|_| Error::MalformedHeader("bad scale".into()))?;
    if scale == 0.0 {
        return Err(Error::ZeroScale);
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero dimension".into()));
    }
    // exactly one whitespace byte separates the scale token from the payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::MalformedHeader("missing payload separator".into()));
    }
    pos += 1;
    Ok((
        PfmHeader {
            kind,
            width,
            height,
            scale,
        },
        pos,
    ))
}

/// Decodes a PFM byte buffer.
pub fn read_pfm_bytes(bytes: &[u8]) -> Result<Pfm> {
    let (header, payload_start) = parse_header(bytes)?;
    let channels = match header.kind {
        PfmKind::Grayscale => 1,
        PfmKind::Color => 3,
    };
    let count = header.width * header.height * channels;
    let payload = &bytes[payload_start..];
    if payload.len() < count * 4 {
        return Err(Error::TruncatedPayload {
            expected: count * 4,
            got: payload.len(),
        });
    }
    let little_endian = header.scale < 0.0;

    let mut data = vec![0.0f32; count];
    let mut mask = vec![1.0f32; header.width * header.height];
    for file_row in 0..header.height {
        // rows are stored bottom-to-top
        let y = header.height - 1 - file_row;
        for x in 0..header.width {
            for ch in 0..channels {
                let src = (file_row * header.width + x) * channels + ch;
                let b: [u8; 4] = payload[src * 4..src * 4 + 4].try_into().unwrap();
                let v = if little_endian {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                };
                let dst = (y * header.width + x) * channels + ch;
                if v.is_finite() {
                    data[dst] = v;
                } else {
                    data[dst] = 0.0;
                    mask[y * header.width + x] = 0.0;
                }
            }
        }
    }

    Ok(Pfm {
        header,
        image: Image::from_vec(header.width, header.height, channels, data)?,
        valid_mask: Image::from_vec(header.width, header.height, 1, mask)?,
    })
}

/// Reads a PFM file from disk.
pub fn read_pfm(path: &Path) -> Result<Pfm> {
    read_pfm_bytes(&fs::read(path)?)
}

/// Writes a 1- or 3-channel image as little-endian PFM with scale -1.0.
pub fn write_pfm(img: &Image, path: &Path) -> Result<()> {
    let tag = match img.channels() {
        1 => "Pf",
        3 => "PF",
        n => {
            return Err(Error::InvalidParameter(format!(
                "PFM supports 1 or 3 channels, got {n}"
            )))
        }
    };
    let mut out = Vec::with_capacity(32 + img.data().len() * 4);
    write!(out, "{tag}\n{} {}\n-1.0\n", img.width(), img.height())?;
    let channels = img.channels();
    for file_row in 0..img.height() {
        let y = img.height() - 1 - file_row;
        for x in 0..img.width() {
            for ch in 0..channels {
                out.extend_from_slice(&img.get(x, y, ch).to_le_bytes());
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        // keep the dir alive by leaking: simpler than threading the guard
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let img = Image::from_fn(5, 4, 1, |_, _, _| rng.random_range(-40.0..40.0f32));
        let path = tmp("rt.pfm");
        write_pfm(&img, &path).unwrap();
        let back = read_pfm(&path).unwrap();
        assert_eq!(back.image, img);
        assert!(!back.has_unknown());

        let color = Image::from_fn(3, 6, 3, |_, _, _| rng.random::<f32>());
        let path = tmp("rt_color.pfm");
        write_pfm(&color, &path).unwrap();
        assert_eq!(read_pfm(&path).unwrap().image, color);
    }

    #[test]
    fn minimal_grayscale_header_parses() {
        let mut bytes = b"Pf\n3 2\n-1.0\n".to_vec();
        bytes.extend_from_slice(&[0u8; 24]);
        let pfm = read_pfm_bytes(&bytes).unwrap();
        assert_eq!(pfm.header.kind, PfmKind::Grayscale);
        assert_eq!(pfm.image.width(), 3);
        assert_eq!(pfm.image.height(), 2);
        assert_eq!(pfm.image.channels(), 1);
    }

    #[test]
    fn big_endian_payload_is_honored() {
        let mut bytes = b"Pf\n1 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&2.5f32.to_be_bytes());
        let pfm = read_pfm_bytes(&bytes).unwrap();
        assert_eq!(pfm.image.at(0, 0), 2.5);
    }

    #[test]
    fn truncated_payload_errors() {
        let mut bytes = b"Pf\n3 2\n-1.0\n".to_vec();
        bytes.extend_from_slice(&[0u8; 23]);
        assert!(matches!(
            read_pfm_bytes(&bytes),
            Err(Error::TruncatedPayload { expected: 24, .. })
        ));
    }

    #[test]
    fn malformed_headers_error_distinctly() {
        assert!(matches!(
            read_pfm_bytes(b"P6\n1 1\n-1.0\n"),
            Err(Error::MalformedHeader(_))
        ));
        let mut zero_scale = b"Pf\n1 1\n0.0\n".to_vec();
        zero_scale.extend_from_slice(&[0u8; 4]);
        assert!(matches!(read_pfm_bytes(&zero_scale), Err(Error::ZeroScale)));
    }

    #[test]
    fn infinite_samples_become_masked_zeros() {
        let mut bytes = b"Pf\n2 1\n-1.0\n".to_vec();
        bytes.extend_from_slice(&f32::INFINITY.to_le_bytes());
        bytes.extend_from_slice(&7.0f32.to_le_bytes());
        let pfm = read_pfm_bytes(&bytes).unwrap();
        assert_eq!(pfm.image.at(0, 0), 0.0);
        assert_eq!(pfm.image.at(1, 0), 7.0);
        assert_eq!(pfm.valid_mask.at(0, 0), 0.0);
        assert_eq!(pfm.valid_mask.at(1, 0), 1.0);
        assert!(pfm.has_unknown());
    }

    proptest::proptest! {
        #[test]
        fn round_trip_is_bit_exact_for_any_finite_data(
            w in 1usize..8, h in 1usize..8,
            seed in proptest::prelude::any::<u64>(),
            scale in 1u32..1000,
        ) {
            // exercise a wide magnitude range, including subnormals
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = Image::from_fn(w, h, 1, |_, _, _| {
                let v = (rng.random::<f32>() - 0.5) * scale as f32;
                if rng.random::<f32>() < 0.1 { v * 1e-40 } else { v }
            });
            let path = tmp("prop.pfm");
            write_pfm(&img, &path).unwrap();
            let back = read_pfm(&path).unwrap();
            proptest::prop_assert_eq!(back.image.data(), img.data());
        }
    }

    #[test]
    fn rows_are_stored_bottom_up() {
        // 1x2 image, value 1 on top row (y=0), 2 on bottom row (y=1):
        // the file stores the bottom row first
        let img = Image::from_vec(1, 2, 1, vec![1.0, 2.0]).unwrap();
        let path = tmp("rows.pfm");
        write_pfm(&img, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let payload = &bytes[bytes.len() - 8..];
        assert_eq!(f32::from_le_bytes(payload[0..4].try_into().unwrap()), 2.0);
        assert_eq!(f32::from_le_bytes(payload[4..8].try_into().unwrap()), 1.0);
    }
}
