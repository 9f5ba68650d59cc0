//! Guided depth super-resolution.
//!
//! A low-resolution depth map is bicubically upsampled to the guide's
//! resolution and used as the target; confidence peaks at the positions where
//! a real low-res sample exists and decays between them, so the solver trusts
//! measured samples and lets the color guide shape everything in between.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::solver::{solve, ProblemInstance, SolverConfig};

/// Low-resolution depth plus a high-resolution color guide at `factor` times
/// the depth resolution.
pub struct SuperresInputs<'a> {
    pub low_depth: &'a Image,
    pub guide: &'a Image,
    pub factor: usize,
}

impl SuperresInputs<'_> {
    pub fn validate(&self) -> Result<()> {
        if self.factor == 0 {
            return Err(Error::ZeroFactor);
        }
        if self.low_depth.channels() != 1 {
            return Err(Error::DimensionMismatch(
                "low-resolution depth must be single-channel".into(),
            ));
        }
        if self.guide.width() != self.low_depth.width() * self.factor
            || self.guide.height() != self.low_depth.height() * self.factor
        {
            return Err(Error::DimensionMismatch(format!(
                "guide {}x{} is not {}x the {}x{} depth map",
                self.guide.width(),
                self.guide.height(),
                self.factor,
                self.low_depth.width(),
                self.low_depth.height()
            )));
        }
        Ok(())
    }
}

/// Gaussian bump value at continuous position `(x, y)` for the given factor.
///
/// Low-res sample centers sit at `k*factor + (factor-1)/2` on each axis (the
/// same alignment as bicubic upsampling); the bump is
/// `exp(-d^2 / (2 sigma_b^2))` with `d` the distance to the nearest center and
/// `sigma_b = factor/4`. It equals 1 exactly at the centers and is periodic
/// with period `factor`.
pub fn gaussian_bump_at(x: f32, y: f32, factor: usize) -> f32 {
    let f = factor as f32;
    let sigma_b = f / 4.0;
    let dx = nearest_center_distance(x, f);
    let dy = nearest_center_distance(y, f);
    let d2 = dx * dx + dy * dy;
    (-d2 / (2.0 * sigma_b * sigma_b)).exp()
}

#[inline]
fn nearest_center_distance(coord: f32, factor: f32) -> f32 {
    let offset = (factor - 1.0) / 2.0;
    let u = coord - offset;
    (u - factor * (u / factor).round()).abs()
}

/// Per-pixel confidence image for an upsampled grid: factor-periodic, maximal
/// where pixels are closest to a low-res sample center. For factor 1 every
/// pixel is a center and the confidence is identically 1.
pub fn gaussian_bump_confidence(factor: usize, width: usize, height: usize) -> Image {
    if factor <= 1 {
        return Image::constant(width.max(1), height.max(1), 1, 1.0);
    }
    Image::from_fn(width, height, 1, |x, y, _| {
        gaussian_bump_at(x as f32, y as f32, factor)
    })
}

/// Upsamples `low_depth` by `factor` under the color guide: bicubic target,
/// Gaussian-bump confidence, then the solver. Depth units pass through
/// unchanged.
pub fn superresolve(inputs: &SuperresInputs, cfg: &SolverConfig) -> Result<Image> {
    inputs.validate()?;
    let target = inputs.low_depth.upsample_bicubic(inputs.factor)?;
    let confidence = gaussian_bump_confidence(inputs.factor, target.width(), target.height());
    let problem = ProblemInstance {
        target: &target,
        confidence: &confidence,
        guide: inputs.guide,
        initial: &target,
        data_term: None,
    };
    solve(&problem, cfg)
}
