//! Edge-aware optimization of images built on the domain transform.
//!
//! The crate refines a per-pixel estimate (disparity, depth) against a target
//! map and a color guide by minimizing a smoothness + fidelity objective whose
//! smoothness term is an edge-aware windowed mean. The windowed mean runs in
//! time linear in the pixel count and independent of the window size, which is
//! what makes the iterative solver practical at full resolution.
//!
//! Modules:
//! - [`image`]: dense multi-channel float raster and sampling primitives.
//! - [`dt`]: per-scanline domain transform, windowed mean/support/variance.
//! - [`solver`]: the gradient-descent solver and its configuration.
//! - [`stereo`]: disparity refinement against a rectified stereo pair.
//! - [`superres`]: guided depth super-resolution.
//! - [`defocus`]: synthetic shallow depth-of-field rendering.
//! - [`oracle`]: dense pairwise reference solver for validation at tiny sizes.
//! - [`io`]: PFM/PNM/PNG/CSV readers and writers.
//! - [`bench`]: procedurally generated scenes and timing sweeps.
//! - [`verify`]: deterministic self-check report.

pub mod bench;
pub mod defocus;
pub mod dt;
pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod solver;
pub mod stereo;
pub mod superres;
pub mod verify;

pub use error::{Error, Result};
pub use image::Image;
