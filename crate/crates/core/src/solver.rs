//! Gradient-descent solver for the edge-aware objective
//!
//! ```text
//! F(z) = lambda/2 * sum_i (z_i - mean_i(z))^2        edge-aware smoothness
//!      + sum_i c_hat_i * rho(z_i - t_i)              target fidelity
//!      + sum_m lambda_m * Phi_m(z)                   optional data term
//! ```
//!
//! `mean(z)` is the domain-transform windowed mean of the current estimate
//! under a fixed guide image, and `c_hat_i = c_i / S_i` divides the input
//! confidence by the window support so that pixels backed by a large
//! neighborhood lean on the neighborhood rather than the target. Each descent
//! step treats the mean as a constant and recomputes it from the updated
//! estimate afterwards, which keeps the iteration linear in pixels.

use rayon::prelude::*;

use crate::dt::{DtParams, DtWarps, DEFAULT_RADIUS_SCALE};
use crate::error::{Error, Result};
use crate::image::Image;

/// Smooth robust penalty `sqrt(r^2 + epsilon^2)`, a differentiable |r|.
#[inline]
pub fn charbonnier(r: f32, epsilon: f32) -> f32 {
    (r * r + epsilon * epsilon).sqrt()
}

/// Derivative of [`charbonnier`]: `r / sqrt(r^2 + epsilon^2)`, in (-1, 1).
#[inline]
pub fn charbonnier_deriv(r: f32, epsilon: f32) -> f32 {
    r / (r * r + epsilon * epsilon).sqrt()
}

/// All scalars of the solve: weights, step size, iteration count and the
/// domain-transform scales.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Smoothness weight.
    pub lambda: f32,
    /// Gradient step multiplier.
    pub step: f32,
    /// Fixed iteration count; there is no early stopping.
    pub iterations: usize,
    /// Charbonnier constant.
    pub epsilon: f32,
    /// Robust loss on the target term; off means plain quadratic.
    pub use_charbonnier: bool,
    pub dt: DtParams,
    /// Scale turning edge-aware variance into confidence.
    pub sigma_c: f32,
}

impl SolverConfig {
    /// Defaults tuned for stereo refinement: lambda 0.99, step 0.99,
    /// 3000 iterations, Charbonnier with epsilon 0.001, sigma_x = sigma_y = 64,
    /// sigma_r = 0.25.
    pub fn stereo_defaults() -> Self {
        SolverConfig {
            lambda: 0.99,
            step: 0.99,
            iterations: 3000,
            epsilon: 0.001,
            use_charbonnier: true,
            dt: DtParams {
                sigma_x: 64.0,
                sigma_y: 64.0,
                sigma_r: 0.25,
            },
            sigma_c: 16.0,
        }
    }

    /// Defaults tuned for depth super-resolution at the given upsampling
    /// factor: 10 iterations, no robust loss, sigma_x = sigma_y = 20 * factor.
    pub fn superres_defaults(factor: usize) -> Self {
        SolverConfig {
            lambda: 0.99,
            step: 0.99,
            iterations: 10,
            epsilon: 0.001,
            use_charbonnier: false,
            dt: DtParams {
                sigma_x: 20.0 * factor as f32,
                sigma_y: 20.0 * factor as f32,
                sigma_r: 0.25,
            },
            sigma_c: 16.0,
        }
    }

    fn validate_scalars(&self) -> Result<()> {
        DtParams::new(self.dt.sigma_x, self.dt.sigma_y, self.dt.sigma_r)?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step must be finite and > 0, got {}",
                self.step
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be finite and > 0, got {}",
                self.epsilon
            )));
        }
        if !(self.sigma_c.is_finite() && self.sigma_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_c must be finite and > 0, got {}",
                self.sigma_c
            )));
        }
        Ok(())
    }

    fn check_stability(&self, max_effective_confidence: f32) -> Result<()> {
        let margin = self.step * (self.lambda + max_effective_confidence);
        if margin >= 2.0 {
            return Err(Error::UnstableStep(margin));
        }
        Ok(())
    }

    /// Checks positivity of the scales and the descent stability bound
    /// `step * (lambda + c) < 2` with the effective confidence `c` bounded by
    /// its worst case 1. The solver itself re-checks against the problem's
    /// actual maximal effective confidence, which admits larger steps when
    /// confidences are small (zero confidence tolerates any `step * lambda`
    /// below 2).
    pub fn validate(&self) -> Result<()> {
        self.validate_scalars()?;
        self.check_stability(1.0)
    }
}

/// Application-dependent per-pixel term: `evaluate(i, z_i)` returns the value
/// and derivative of `Phi` at pixel `i`, scaled into the objective by
/// `weight`.
pub struct DataTermSpec<'a> {
    pub weight: f32,
    eval: Box<dyn Fn(usize, f32) -> (f32, f32) + Sync + 'a>,
}

impl<'a> DataTermSpec<'a> {
    pub fn new(weight: f32, eval: impl Fn(usize, f32) -> (f32, f32) + Sync + 'a) -> Self {
        DataTermSpec {
            weight,
            eval: Box::new(eval),
        }
    }

    #[inline]
    pub fn evaluate(&self, pixel: usize, z: f32) -> (f32, f32) {
        (self.eval)(pixel, z)
    }
}

/// One optimization problem: what to refine, what to trust, and which image
/// defines the edges.
pub struct ProblemInstance<'a> {
    /// Externally supplied estimate being refined.
    pub target: &'a Image,
    /// Per-pixel trust in the target, in [0, 1].
    pub confidence: &'a Image,
    /// Color image defining the domain-transform warps; fixed during descent.
    pub guide: &'a Image,
    /// Starting estimate.
    pub initial: &'a Image,
    pub data_term: Option<DataTermSpec<'a>>,
}

impl ProblemInstance<'_> {
    pub fn validate(&self) -> Result<()> {
        for (name, img) in [
            ("target", self.target),
            ("confidence", self.confidence),
            ("initial", self.initial),
        ] {
            if img.channels() != 1 {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be single-channel"
                )));
            }
            if !img.same_dims(self.guide) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{} but guide is {}x{}",
                    img.width(),
                    img.height(),
                    self.guide.width(),
                    self.guide.height()
                )));
            }
        }
        if self
            .confidence
            .data()
            .iter()
            .any(|&c| !(0.0..=1.0).contains(&c))
        {
            return Err(Error::InvalidParameter(
                "confidence values must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Per-pixel descent direction, excluding the data term.
#[inline]
fn pixel_gradient(
    lambda: f32,
    z: f32,
    mean: f32,
    c_hat: f32,
    target: f32,
    epsilon: f32,
    use_charbonnier: bool,
) -> f32 {
    let r = z - target;
    let fidelity = if use_charbonnier {
        c_hat * charbonnier_deriv(r, epsilon)
    } else {
        c_hat * r
    };
    lambda * (z - mean) + fidelity
}

/// Runs `cfg.iterations` gradient steps and returns the final estimate.
pub fn solve(problem: &ProblemInstance, cfg: &SolverConfig) -> Result<Image> {
    solve_traced(problem, cfg, |_, _| {})
}

/// Like [`solve`], invoking `on_iter(k, z)` after iteration `k` (1-based).
/// Used for convergence traces and iteration-sweep benchmarks.
pub fn solve_traced(
    problem: &ProblemInstance,
    cfg: &SolverConfig,
    mut on_iter: impl FnMut(usize, &Image),
) -> Result<Image> {
    cfg.validate_scalars()?;
    problem.validate()?;

    let warps = DtWarps::new(problem.guide, cfg.dt, DEFAULT_RADIUS_SCALE)?;
    let c_hat = effective_confidence(problem.confidence, warps.support());
    let max_c_hat = c_hat.data().iter().fold(0.0f32, |m, &c| m.max(c));
    cfg.check_stability(max_c_hat)?;
    let mut z = problem.initial.clone();

    for k in 1..=cfg.iterations {
        let mean = warps.mean(&z)?;
        step_in_place(&mut z, &mean, &c_hat, problem, cfg);
        on_iter(k, &z);
    }
    Ok(z)
}

/// Support-weighted confidence `c_i / S_i`.
pub fn effective_confidence(confidence: &Image, support: &Image) -> Image {
    let mut out = confidence.clone();
    for (c, &s) in out.data_mut().iter_mut().zip(support.data()) {
        *c /= s;
    }
    out
}

fn step_in_place(
    z: &mut Image,
    mean: &Image,
    c_hat: &Image,
    problem: &ProblemInstance,
    cfg: &SolverConfig,
) {
    let lambda = cfg.lambda;
    let step = cfg.step;
    let epsilon = cfg.epsilon;
    let charb = cfg.use_charbonnier;
    let target = problem.target.data();
    let mean = mean.data();
    let c_hat = c_hat.data();
    let data_term = problem.data_term.as_ref();

    z.data_mut().par_iter_mut().enumerate().for_each(|(i, zi)| {
        let mut g = pixel_gradient(lambda, *zi, mean[i], c_hat[i], target[i], epsilon, charb);
        if let Some(dt) = data_term {
            let (_, dphi) = dt.evaluate(i, *zi);
            g += dt.weight * dphi;
        }
        *zi -= step * g;
    });
}

/// Diagnostic objective value at `z`, with the edge-aware mean recomputed at
/// the supplied `z` and then held fixed. Without the robust loss the target
/// term is the plain squared error `c_hat * (z - t)^2`.
pub fn objective(problem: &ProblemInstance, z: &Image, cfg: &SolverConfig) -> Result<f64> {
    let warps = DtWarps::new(problem.guide, cfg.dt, DEFAULT_RADIUS_SCALE)?;
    let mean = warps.mean(z)?;
    Ok(objective_frozen(problem, z, &mean, warps.support(), cfg))
}

/// Objective with an externally supplied (frozen) mean and support. This is
/// the function whose per-pixel derivative the descent step follows when the
/// robust loss is enabled.
pub fn objective_frozen(
    problem: &ProblemInstance,
    z: &Image,
    mean: &Image,
    support: &Image,
    cfg: &SolverConfig,
) -> f64 {
    let mut smooth = 0.0f64;
    let mut fidelity = 0.0f64;
    let mut data = 0.0f64;
    for i in 0..z.data().len() {
        let zi = z.data()[i] as f64;
        let d = zi - mean.data()[i] as f64;
        smooth += d * d;
        let c_hat = (problem.confidence.data()[i] / support.data()[i]) as f64;
        let r = zi - problem.target.data()[i] as f64;
        let rho = if cfg.use_charbonnier {
            (r * r + (cfg.epsilon as f64).powi(2)).sqrt()
        } else {
            r * r
        };
        fidelity += c_hat * rho;
        if let Some(dt) = &problem.data_term {
            let (phi, _) = dt.evaluate(i, z.data()[i]);
            data += dt.weight as f64 * phi as f64;
        }
    }
    0.5 * cfg.lambda as f64 * smooth + fidelity + data
}
