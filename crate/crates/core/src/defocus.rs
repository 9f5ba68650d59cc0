//! Synthetic shallow depth-of-field from a color image and a disparity map.
//!
//! Disparity is quantized into layers; each layer is blurred with a disc
//! kernel sized by its blur radius and the layers are over-composited back to
//! front in premultiplied alpha. In-focus content keeps its crisp edges,
//! out-of-focus content spreads into smooth bokeh.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;

/// Thin-lens style rendering parameters.
#[derive(Debug, Clone, Copy)]
pub struct DefocusParams {
    /// Disparity kept in focus.
    pub focal_disparity: f32,
    /// Blur radius in pixels per unit of disparity offset from focus.
    pub aperture: f32,
    /// Number of disparity quantization layers.
    pub layers: usize,
}

impl DefocusParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.aperture.is_finite() && self.aperture >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "aperture must be finite and >= 0, got {}",
                self.aperture
            )));
        }
        if !self.focal_disparity.is_finite() {
            return Err(Error::InvalidParameter(
                "focal disparity must be finite".into(),
            ));
        }
        if self.layers < 2 {
            return Err(Error::InvalidParameter(format!(
                "at least 2 layers required, got {}",
                self.layers
            )));
        }
        Ok(())
    }
}

/// Per-pixel blur radius: `aperture * |d - focal_disparity|` pixels.
pub fn blur_radius_map(disparity: &Image, params: &DefocusParams) -> Image {
    let focal = params.focal_disparity;
    let aperture = params.aperture;
    disparity.map(|d| aperture * (d - focal).abs())
}

struct BlurredLayer {
    /// Premultiplied color, `channels` interleaved.
    rgb: Vec<f32>,
    alpha: Vec<f32>,
}

/// Renders the depth-of-field image. Returns the un-premultiplied color.
pub fn render_defocus(color: &Image, disparity: &Image, params: &DefocusParams) -> Result<Image> {
    let (image, _alpha) = render_defocus_with_coverage(color, disparity, params)?;
    Ok(image)
}

/// Like [`render_defocus`], also returning the composited coverage (alpha)
/// before normalization; away from layer boundaries it is within 1e-3 of 1.
pub fn render_defocus_with_coverage(
    color: &Image,
    disparity: &Image,
    params: &DefocusParams,
) -> Result<(Image, Image)> {
    params.validate()?;
    if disparity.channels() != 1 || !disparity.same_dims(color) {
        return Err(Error::DimensionMismatch(
            "disparity must be a single-channel image matching the color image".into(),
        ));
    }
    let w = color.width();
    let h = color.height();
    let ch = color.channels();
    let n = w * h;

    let radius = blur_radius_map(disparity, params);
    let (dmin, dmax) = disparity.min_max();
    let span = dmax - dmin;
    let layer_count = params.layers;

    // Assign each pixel to a disparity bin; degenerate span puts everything
    // into the first bin.
    let layer_of: Vec<usize> = disparity
        .data()
        .iter()
        .map(|&d| {
            if span <= 0.0 {
                0
            } else {
                (((d - dmin) / span * layer_count as f32) as usize).min(layer_count - 1)
            }
        })
        .collect();

    let mut members = vec![0usize; layer_count];
    let mut radius_sum = vec![0.0f64; layer_count];
    for i in 0..n {
        members[layer_of[i]] += 1;
        radius_sum[layer_of[i]] += radius.data()[i] as f64;
    }

    let occupied: Vec<usize> = (0..layer_count).filter(|&l| members[l] > 0).collect();

    // Blur layers independently; compositing below is ordered far to near.
    let blurred: Vec<(usize, BlurredLayer)> = occupied
        .par_iter()
        .map(|&l| {
            let mean_radius = (radius_sum[l] / members[l] as f64) as f32;
            let mut rgb = vec![0.0f32; n * ch];
            let mut alpha = vec![0.0f32; n];
            for i in 0..n {
                if layer_of[i] == l {
                    alpha[i] = 1.0;
                    rgb[i * ch..(i + 1) * ch].copy_from_slice(&color.data()[i * ch..(i + 1) * ch]);
                }
            }
            let layer = disc_blur(&rgb, &alpha, w, h, ch, mean_radius);
            (l, layer)
        })
        .collect();

    // Over-composite: layer 0 holds the smallest disparities (farthest), so
    // ascending order stacks near content on top.
    let mut acc_rgb = vec![0.0f32; n * ch];
    let mut acc_a = vec![0.0f32; n];
    for (_, layer) in blurred.iter() {
        for i in 0..n {
            let a = layer.alpha[i];
            let keep = 1.0 - a;
            for c in 0..ch {
                acc_rgb[i * ch + c] = layer.rgb[i * ch + c] + keep * acc_rgb[i * ch + c];
            }
            acc_a[i] = a + keep * acc_a[i];
        }
    }

    // Un-premultiply; alpha holes fall back to the pixel's own layer, then to
    // the input color.
    let blurred_of = |l: usize| blurred.iter().find(|(bl, _)| *bl == l).map(|(_, b)| b);
    let mut out = Image::new(w, h, ch);
    for i in 0..n {
        let dst = i * ch..(i + 1) * ch;
        if acc_a[i] > 1e-3 {
            for c in 0..ch {
                out.data_mut()[i * ch + c] = acc_rgb[i * ch + c] / acc_a[i];
            }
        } else if let Some(own) = blurred_of(layer_of[i]) {
            if own.alpha[i] > 1e-3 {
                for c in 0..ch {
                    out.data_mut()[i * ch + c] = own.rgb[i * ch + c] / own.alpha[i];
                }
            } else {
                out.data_mut()[dst.clone()].copy_from_slice(&color.data()[dst.clone()]);
            }
        } else {
            out.data_mut()[dst.clone()].copy_from_slice(&color.data()[dst.clone()]);
        }
    }

    let alpha_img = Image::from_vec(w, h, 1, acc_a.iter().map(|&a| a.min(1.0)).collect())?;
    Ok((out, alpha_img))
}

/// Normalized disc convolution of a premultiplied layer. The kernel contains
/// every offset whose pixel center lies inside the radius; radius < 1
/// degenerates to the identity. Normalization uses the in-image kernel count,
/// so a layer that fully covers a neighborhood keeps coverage exactly 1 there,
/// image borders included.
fn disc_blur(
    rgb: &[f32],
    alpha: &[f32],
    w: usize,
    h: usize,
    ch: usize,
    radius: f32,
) -> BlurredLayer {
    let r = radius.max(0.0) as f64;
    let reach = r.floor() as isize;
    if reach == 0 {
        return BlurredLayer {
            rgb: rgb.to_vec(),
            alpha: alpha.to_vec(),
        };
    }

    // half-width of the disc at each dy
    let mut half_widths = Vec::with_capacity((2 * reach + 1) as usize);
    for dy in -reach..=reach {
        let hw = ((r * r - (dy * dy) as f64).sqrt().floor()) as isize;
        half_widths.push(hw);
    }

    // prefix sums per row for each channel and for alpha
    let cols = w + 1;
    let mut prefix = vec![0.0f64; h * cols * (ch + 1)];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            for c in 0..ch {
                let p = (y * cols + x) * (ch + 1) + c;
                prefix[p + ch + 1] = prefix[p] + rgb[i * ch + c] as f64;
            }
            let p = (y * cols + x) * (ch + 1) + ch;
            prefix[p + ch + 1] = prefix[p] + alpha[i] as f64;
        }
    }
    let row_sum = |y: usize, a: usize, b: usize, c: usize| -> f64 {
        prefix[(y * cols + b) * (ch + 1) + c] - prefix[(y * cols + a) * (ch + 1) + c]
    };

    let mut out_rgb = vec![0.0f32; w * h * ch];
    let mut out_a = vec![0.0f32; w * h];
    out_a
        .par_chunks_mut(w)
        .zip(out_rgb.par_chunks_mut(w * ch))
        .enumerate()
        .for_each(|(y, (arow, rgbrow))| {
            for x in 0..w {
                let mut acc = vec![0.0f64; ch + 1];
                let mut count = 0usize;
                for (k, dy) in (-reach..=reach).enumerate() {
                    let yy = y as isize + dy;
                    if yy < 0 || yy >= h as isize {
                        continue;
                    }
                    let hw = half_widths[k];
                    // inclusive pixel range [x-hw, x+hw], clipped to the image
                    let a = (x as isize - hw).max(0) as usize;
                    let b = ((x as isize + hw + 1).min(w as isize)) as usize;
                    count += b - a;
                    for (c, s) in acc.iter_mut().enumerate() {
                        *s += row_sum(yy as usize, a, b, c);
                    }
                }
                let norm = 1.0 / count as f64;
                for c in 0..ch {
                    rgbrow[x * ch + c] = (acc[c] * norm) as f32;
                }
                arow[x] = (acc[ch] * norm) as f32;
            }
        });

    BlurredLayer {
        rgb: out_rgb,
        alpha: out_a,
    }
}
