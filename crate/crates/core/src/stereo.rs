//! Disparity refinement against a rectified stereo pair.
//!
//! An externally computed disparity map is the target; the left image is both
//! the edge guide and the photometric reference. The refined map stays smooth
//! inside homogeneous regions, keeps crisp edges where the left image has
//! them, and is pulled toward left-right photometric consistency by a weighted
//! matching penalty.

use crate::dt::{confidence_from_variance, edge_aware_variance};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::solver::{solve, DataTermSpec, ProblemInstance, SolverConfig};

/// Inputs of one refinement: the rectified pair, the disparity target and the
/// photometric weight. Disparity follows the left-reference convention: pixel
/// `(x, y)` of the left image corresponds to `(x - z, y)` in the right image.
pub struct StereoInputs<'a> {
    pub left: &'a Image,
    pub right: &'a Image,
    pub target_disparity: &'a Image,
    /// Optional validity mask for the target (0 = unknown pixel). Unknown
    /// pixels get zero confidence so they are filled from their neighborhood.
    pub valid_mask: Option<&'a Image>,
    /// Photometric weight; 0 disables the matching term.
    pub gamma: f32,
    /// Output (and target) disparities are clamped into `[min, max]`.
    pub disparity_range: (f32, f32),
}

impl StereoInputs<'_> {
    pub fn validate(&self) -> Result<()> {
        if !self.left.same_dims(self.right) || self.left.channels() != self.right.channels() {
            return Err(Error::DimensionMismatch(format!(
                "left {}x{}x{} vs right {}x{}x{}",
                self.left.width(),
                self.left.height(),
                self.left.channels(),
                self.right.width(),
                self.right.height(),
                self.right.channels()
            )));
        }
        if self.target_disparity.channels() != 1 || !self.target_disparity.same_dims(self.left) {
            return Err(Error::DimensionMismatch(
                "target disparity must be a single-channel image matching the pair".into(),
            ));
        }
        if let Some(mask) = self.valid_mask {
            if mask.channels() != 1 || !mask.same_dims(self.left) {
                return Err(Error::DimensionMismatch(
                    "validity mask must be a single-channel image matching the pair".into(),
                ));
            }
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be finite and >= 0, got {}",
                self.gamma
            )));
        }
        let (lo, hi) = self.disparity_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "disparity range [{lo}, {hi}] is invalid"
            )));
        }
        Ok(())
    }
}

/// Photometric matching cost and its derivative with respect to disparity at
/// one pixel:
///
/// ```text
/// value = gamma/2 * sum_ch (I_L(x, y) - I_R(x - z, y))^2
/// d/dz  = gamma   * sum_ch (I_L - I_R(x - z)) * dI_R/dx (x - z, y)
/// ```
///
/// Sampling clamps at the image border, where the derivative drops to zero
/// because the clamped sample stops moving with `z`.
pub fn photometric_term(inputs: &StereoInputs, x: usize, y: usize, z: f32) -> (f32, f32) {
    let channels = inputs.left.channels();
    let xf = x as f32;
    let yf = y as f32;
    let mut value = 0.0f32;
    let mut deriv = 0.0f32;
    for ch in 0..channels {
        let l = inputs.left.get(x, y, ch);
        let r = inputs.right.bilinear_unchecked(xf - z, yf, ch);
        let slope = inputs.right.dx_unchecked(xf - z, yf, ch);
        let d = l - r;
        value += d * d;
        deriv += d * slope;
    }
    (0.5 * inputs.gamma * value, inputs.gamma * deriv)
}

/// Refines the target disparity map.
///
/// Confidence comes from the edge-aware variance of the target under the left
/// image (computed once, before solving); the photometric term is attached
/// with weight `gamma`; the output is clamped to the disparity range.
pub fn refine_disparity(inputs: &StereoInputs, cfg: &SolverConfig) -> Result<Image> {
    inputs.validate()?;
    cfg.validate()?;
    let (lo, hi) = inputs.disparity_range;

    let target = inputs.target_disparity.map(|d| d.clamp(lo, hi));
    let variance = edge_aware_variance(&target, inputs.left, cfg.dt)?;
    let mut confidence = confidence_from_variance(&variance, cfg.sigma_c)?;
    if let Some(mask) = inputs.valid_mask {
        for (c, &m) in confidence.data_mut().iter_mut().zip(mask.data()) {
            if m <= 0.0 {
                *c = 0.0;
            }
        }
    }

    let width = inputs.left.width();
    let data_term = if inputs.gamma > 0.0 {
        // Phi excludes gamma; gamma is the data-term weight.
        let left = inputs.left;
        let right = inputs.right;
        let channels = left.channels();
        Some(DataTermSpec::new(inputs.gamma, move |i, z| {
            let x = i % width;
            let y = i / width;
            let xf = x as f32;
            let yf = y as f32;
            let mut value = 0.0f32;
            let mut deriv = 0.0f32;
            for ch in 0..channels {
                let l = left.get(x, y, ch);
                let r = right.bilinear_unchecked(xf - z, yf, ch);
                let slope = right.dx_unchecked(xf - z, yf, ch);
                let d = l - r;
                value += d * d;
                deriv += d * slope;
            }
            (0.5 * value, deriv)
        }))
    } else {
        None
    };

    let problem = ProblemInstance {
        target: &target,
        confidence: &confidence,
        guide: inputs.left,
        initial: &target,
        data_term,
    };
    let solved = solve(&problem, cfg)?;
    Ok(solved.map(|d| d.clamp(lo, hi)))
}
