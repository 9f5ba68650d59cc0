//! Dense multi-channel float raster with sampling, derivative and resampling
//! primitives.
//!
//! `Image` is the carrier for everything in this crate: guide colors,
//! disparities, confidences and targets are all row-major, channel-interleaved
//! `f32` buffers. Operations are pure functions; an image is never mutated
//! after construction, so values can be shared freely across threads.

use crate::error::{Error, Result};

/// Row-major, channel-interleaved `f32` raster.
///
/// Index of `(x, y, ch)` is `(y * width + x) * channels + ch`. Color images
/// used as domain-transform guides are expected to be normalized to `[0, 1]`
/// per channel (the file readers in [`crate::io`] produce that normalization).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    /// Zero-filled image. Panics if any dimension is zero; dimensions are a
    /// programming decision, not input data.
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        assert!(
            width >= 1 && height >= 1 && channels >= 1,
            "image dimensions must be at least 1"
        );
        Image {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    /// Constant-valued image.
    pub fn constant(width: usize, height: usize, channels: usize, value: f32) -> Self {
        let mut img = Image::new(width, height, channels);
        img.data.fill(value);
        img
    }

    /// Builds an image from an existing buffer, validating length and
    /// finiteness. This is the boundary where untrusted data (file readers,
    /// callers) enters the crate.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if width < 1 || height < 1 || channels < 1 {
            return Err(Error::EmptyImage);
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::BadBufferLength {
                expected,
                got: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("image buffer"));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Fills an image by evaluating `f(x, y, ch)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut img = Image::new(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                for ch in 0..channels {
                    let v = f(x, y, ch);
                    img.data[(y * width + x) * channels + ch] = v;
                }
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of pixels (not samples): `width * height`.
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, ch: usize) -> usize {
        (y * self.width + x) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, ch: usize) -> f32 {
        debug_assert!(x < self.width && y < self.height && ch < self.channels);
        self.data[(y * self.width + x) * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ch: usize, v: f32) {
        debug_assert!(x < self.width && y < self.height && ch < self.channels);
        self.data[(y * self.width + x) * self.channels + ch] = v;
    }

    /// Value of a single-channel image at `(x, y)`.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        debug_assert_eq!(self.channels, 1);
        self.data[y * self.width + x]
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// (min, max) over all samples.
    pub fn min_max(&self) -> (f32, f32) {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// New image with every sample mapped through `f`.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Bilinear interpolation of the four nearest texels. Coordinates outside
    /// the image clamp to the border, so every finite `(x, y)` is valid.
    pub fn sample_bilinear(&self, x: f32, y: f32, ch: usize) -> Result<f32> {
        if ch >= self.channels {
            return Err(Error::ChannelOutOfRange {
                ch,
                channels: self.channels,
            });
        }
        Ok(self.bilinear_unchecked(x, y, ch))
    }

    /// Same as [`Image::sample_bilinear`] with the channel check hoisted out;
    /// callers validate the channel once before a hot loop.
    #[inline]
    pub(crate) fn bilinear_unchecked(&self, x: f32, y: f32, ch: usize) -> f32 {
        let (x0, x1, fx) = clamped_cell(x, self.width);
        let (y0, y1, fy) = clamped_cell(y, self.height);
        let v00 = self.get(x0, y0, ch);
        let v10 = self.get(x1, y0, ch);
        let v01 = self.get(x0, y1, ch);
        let v11 = self.get(x1, y1, ch);
        let top = v00 + fx * (v10 - v00);
        let bot = v01 + fx * (v11 - v01);
        top + fy * (bot - top)
    }

    /// Horizontal derivative of the clamp-extended bilinear surface.
    ///
    /// Inside cell `[k, k+1)` the surface is linear in x, so the derivative is
    /// the y-interpolated difference `img(k+1, .) - img(k, .)`. Outside
    /// `[0, width-1]` the clamped surface is flat and the derivative is zero;
    /// that keeps the value/derivative pair consistent for optimization, where
    /// a sample pinned to the border must stop producing gradient.
    pub fn sample_dx(&self, x: f32, y: f32, ch: usize) -> Result<f32> {
        if ch >= self.channels {
            return Err(Error::ChannelOutOfRange {
                ch,
                channels: self.channels,
            });
        }
        Ok(self.dx_unchecked(x, y, ch))
    }

    #[inline]
    pub(crate) fn dx_unchecked(&self, x: f32, y: f32, ch: usize) -> f32 {
        if x < 0.0 || x >= (self.width - 1) as f32 {
            return 0.0;
        }
        let k = x.floor() as usize;
        let (y0, y1, fy) = clamped_cell(y, self.height);
        let d0 = self.get(k + 1, y0, ch) - self.get(k, y0, ch);
        let d1 = self.get(k + 1, y1, ch) - self.get(k, y1, ch);
        d0 + fy * (d1 - d0)
    }

    /// Upsamples by an integer factor with the Catmull-Rom bicubic kernel
    /// (a = -0.5) and clamp-to-edge borders.
    ///
    /// The sample grid is aligned so that low-res sample `k` maps to high-res
    /// coordinate `k*factor + (factor-1)/2`, i.e. low-res samples sit at the
    /// centers of their high-res blocks.
    pub fn upsample_bicubic(&self, factor: usize) -> Result<Image> {
        if factor == 0 {
            return Err(Error::ZeroFactor);
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let ow = self.width * factor;
        let oh = self.height * factor;
        // Horizontal pass then vertical pass; the kernel is separable.
        let mut horiz = Image::new(ow, self.height, self.channels);
        for y in 0..self.height {
            for ox in 0..ow {
                let sx = (ox as f64 + 0.5) / factor as f64 - 0.5;
                let (taps, w) = catmull_rom_taps(sx, self.width);
                for ch in 0..self.channels {
                    let mut acc = 0.0f64;
                    for (t, &tap) in taps.iter().enumerate() {
                        acc += w[t] * self.get(tap, y, ch) as f64;
                    }
                    horiz.set(ox, y, ch, acc as f32);
                }
            }
        }
        let mut out = Image::new(ow, oh, self.channels);
        for oy in 0..oh {
            let sy = (oy as f64 + 0.5) / factor as f64 - 0.5;
            let (taps, w) = catmull_rom_taps(sy, self.height);
            for ox in 0..ow {
                for ch in 0..self.channels {
                    let mut acc = 0.0f64;
                    for (t, &tap) in taps.iter().enumerate() {
                        acc += w[t] * horiz.get(ox, tap, ch) as f64;
                    }
                    out.set(ox, oy, ch, acc as f32);
                }
            }
        }
        Ok(out)
    }

    /// Width/height swap: `(x, y, ch) -> (y, x, ch)`. An involution, bit-exact.
    /// Tiled and parallel over output row bands; this runs twice per solver
    /// iteration, so it matters.
    pub fn transposed(&self) -> Image {
        use rayon::prelude::*;

        let (w, h, ch) = (self.width, self.height, self.channels);
        let mut out = Image::new(h, w, ch);
        const TILE: usize = 64;
        let band = TILE * h * ch;
        out.data
            .par_chunks_mut(band)
            .enumerate()
            .for_each(|(bi, out_band)| {
                // output rows [x0, x1) correspond to input columns
                let x0 = bi * TILE;
                let x1 = (x0 + TILE).min(w);
                for y0 in (0..h).step_by(TILE) {
                    let y1 = (y0 + TILE).min(h);
                    for x in x0..x1 {
                        for y in y0..y1 {
                            for c in 0..ch {
                                out_band[((x - x0) * h + y) * ch + c] =
                                    self.data[(y * w + x) * ch + c];
                            }
                        }
                    }
                }
            });
        out
    }
}

/// Clamped interpolation cell for coordinate `c` on an axis of length `n`:
/// returns `(i0, i1, frac)` with both indices valid.
#[inline]
fn clamped_cell(c: f32, n: usize) -> (usize, usize, f32) {
    if c <= 0.0 {
        return (0, 0, 0.0);
    }
    let max = (n - 1) as f32;
    if c >= max {
        return (n - 1, n - 1, 0.0);
    }
    let i0 = c.floor() as usize;
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, c - i0 as f32)
}

/// Catmull-Rom (a = -0.5) taps and weights for continuous coordinate `s`,
/// clamped to the valid index range.
fn catmull_rom_taps(s: f64, n: usize) -> ([usize; 4], [f64; 4]) {
    let base = s.floor();
    let t = s - base;
    let k = base as isize;
    let t2 = t * t;
    let t3 = t2 * t;
    let w = [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ];
    let clamp = |i: isize| i.clamp(0, n as isize - 1) as usize;
    ([clamp(k - 1), clamp(k), clamp(k + 1), clamp(k + 2)], w)
}
