//! Dense pairwise reference solver for validation at tiny image sizes.
//!
//! The fast solver replaces an explicit pairwise smoothness term with the
//! local edge-aware mean. This module keeps the pairwise formulation alive as
//! a test-time oracle: explicit 0/1 window weights on images of at most a few
//! thousand pixels, solved to machine precision with Gauss-Seidel in f64, so
//! the fast path has something exact to be compared against.

use crate::dt::{box_window_ranges, DtParams, DtWarps, DEFAULT_RADIUS_SCALE};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::solver::{solve, ProblemInstance, SolverConfig};

/// Largest pixel count the oracle accepts.
pub const MAX_ORACLE_PIXELS: usize = 4096;

/// Explicit binary pairwise weights derived from the domain-transform
/// windows: `w_ij = 1` iff `j` lies in `i`'s horizontal window on `i`'s row
/// and in `i`'s vertical window on `i`'s column. The separable product
/// mirrors the fast path's pass structure, and each row sum equals the fast
/// path's support count exactly.
///
/// Because the horizontal window of `(x, y)` is measured along row `y`, pairs
/// on different rows may disagree about each other near the window edge; the
/// solve below therefore works with the symmetrized weights `w_ij + w_ji`,
/// which is what the pairwise quadratic actually differentiates to. On guides
/// where the warps agree (constant regions) the two coincide.
pub struct DenseWeights {
    width: usize,
    height: usize,
    lambda_bl: f64,
    /// Sorted neighbor lists of W, self included.
    neighbors: Vec<Vec<u32>>,
}

impl DenseWeights {
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn lambda_bl(&self) -> f64 {
        self.lambda_bl
    }

    /// Row sum of W at pixel `i` (the window support).
    pub fn row_sum(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    /// Symmetrized weights `b_ij = w_ij + w_ji` as sorted per-row lists.
    fn symmetrized(&self) -> Vec<Vec<(u32, f64)>> {
        let n = self.pixel_count();
        let mut sym: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (i, row) in self.neighbors.iter().enumerate() {
            for &j in row {
                sym[i].push((j, 1.0));
                sym[j as usize].push((i as u32, 1.0));
            }
        }
        for row in &mut sym {
            row.sort_unstable_by_key(|&(j, _)| j);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
            for &(j, w) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += w,
                    _ => merged.push((j, w)),
                }
            }
            *row = merged;
        }
        sym
    }
}

/// Builds the window weights of `guide` with the same warps and radii as the
/// fast path.
pub fn build_dense_weights(
    guide: &Image,
    params: DtParams,
    radius_scale: f32,
    lambda_bl: f64,
) -> Result<DenseWeights> {
    let n = guide.pixel_count();
    if n > MAX_ORACLE_PIXELS {
        return Err(Error::OracleTooLarge {
            max: MAX_ORACLE_PIXELS,
            got: n,
        });
    }
    let w = guide.width();
    let h = guide.height();
    let warps = DtWarps::new(guide, params, radius_scale)?;

    let x_ranges: Vec<Vec<(usize, usize)>> = (0..h)
        .map(|y| box_window_ranges(warps.row_warp(y), warps.radius_x()))
        .collect();
    let y_ranges: Vec<Vec<(usize, usize)>> = (0..w)
        .map(|x| box_window_ranges(warps.col_warp(x), warps.radius_y()))
        .collect();

    let mut neighbors = Vec::with_capacity(n);
    for y in 0..h {
        for x in 0..w {
            let (xlo, xhi) = x_ranges[y][x];
            let (ylo, yhi) = y_ranges[x][y];
            let mut row = Vec::with_capacity((xhi - xlo) * (yhi - ylo));
            for yj in ylo..yhi {
                for xj in xlo..xhi {
                    row.push((yj * w + xj) as u32);
                }
            }
            neighbors.push(row);
        }
    }

    Ok(DenseWeights {
        width: w,
        height: h,
        lambda_bl,
        neighbors,
    })
}

fn check_solve_inputs(weights: &DenseWeights, target: &Image, confidence: &Image) -> Result<()> {
    if target.width() != weights.width
        || target.height() != weights.height
        || target.channels() != 1
        || !confidence.same_dims(target)
        || confidence.channels() != 1
    {
        return Err(Error::DimensionMismatch(
            "oracle target/confidence must be single-channel images matching the weights".into(),
        ));
    }
    Ok(())
}

/// Solves the pairwise system to a residual max-norm of 1e-10 (or 1e5
/// Gauss-Seidel sweeps) in f64, returning the f64 solution vector so residual
/// checks are not polluted by f32 rounding. Errors when every confidence is
/// zero and the pairwise weight is positive: the system is then singular up
/// to constants and needs [`solve_dense_gauged`].
pub fn solve_dense_f64(
    weights: &DenseWeights,
    target: &Image,
    confidence: &Image,
) -> Result<Vec<f64>> {
    check_solve_inputs(weights, target, confidence)?;
    if weights.lambda_bl > 0.0 && confidence.data().iter().all(|&c| c == 0.0) {
        return Err(Error::SingularSystem);
    }
    Ok(gauss_seidel(weights, target, confidence, false))
}

/// [`solve_dense_f64`] rounded into an image.
pub fn solve_dense(weights: &DenseWeights, target: &Image, confidence: &Image) -> Result<Image> {
    let z = solve_dense_f64(weights, target, confidence)?;
    to_image(weights, &z)
}

/// Like [`solve_dense`] with the target-mean gauge: the solution mean is
/// pinned to the target mean, which makes the all-zero-confidence system
/// solvable.
pub fn solve_dense_gauged(
    weights: &DenseWeights,
    target: &Image,
    confidence: &Image,
) -> Result<Image> {
    check_solve_inputs(weights, target, confidence)?;
    let z = gauss_seidel(weights, target, confidence, true);
    to_image(weights, &z)
}

fn to_image(weights: &DenseWeights, z: &[f64]) -> Result<Image> {
    Image::from_vec(
        weights.width,
        weights.height,
        1,
        z.iter().map(|&v| v as f32).collect(),
    )
}

fn gauss_seidel(
    weights: &DenseWeights,
    target: &Image,
    confidence: &Image,
    target_mean_gauge: bool,
) -> Vec<f64> {
    let n = weights.pixel_count();
    let lambda = weights.lambda_bl;
    let sym = weights.symmetrized();
    let degree: Vec<f64> = sym
        .iter()
        .map(|row| row.iter().map(|&(_, w)| w).sum())
        .collect();
    let self_weight: Vec<f64> = sym
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .find(|&&(j, _)| j as usize == i)
                .map_or(0.0, |&(_, w)| w)
        })
        .collect();

    let t: Vec<f64> = target.data().iter().map(|&v| v as f64).collect();
    let c: Vec<f64> = confidence.data().iter().map(|&v| v as f64).collect();
    let mut z = t.clone();
    let t_mean = t.iter().sum::<f64>() / n as f64;

    let diag: Vec<f64> = (0..n)
        .map(|i| lambda * (degree[i] - self_weight[i]) + c[i])
        .collect();

    for _sweep in 0..100_000 {
        for i in 0..n {
            if diag[i] == 0.0 {
                continue;
            }
            let mut acc = c[i] * t[i];
            for &(j, w) in &sym[i] {
                if j as usize != i {
                    acc += lambda * w * z[j as usize];
                }
            }
            z[i] = acc / diag[i];
        }
        if target_mean_gauge {
            let shift = t_mean - z.iter().sum::<f64>() / n as f64;
            for v in z.iter_mut() {
                *v += shift;
            }
        }
        // residual of A z = C t in max norm
        let mut max_r = 0.0f64;
        for i in 0..n {
            let mut acc = c[i] * t[i];
            for &(j, w) in &sym[i] {
                if j as usize != i {
                    acc += lambda * w * z[j as usize];
                }
            }
            let r = (acc - diag[i] * z[i]).abs();
            max_r = max_r.max(r);
        }
        if max_r <= 1e-10 {
            break;
        }
    }

    z
}

/// Gradient of the pairwise objective at `z`, evaluated term by term in f64:
///
/// ```text
/// F(z) = lambda_bl/2 * sum_ij w_ij (z_i - z_j)^2 + sum_i c_i/2 (z_i - t_i)^2
/// grad_i = lambda_bl * sum_j (w_ij + w_ji)(z_i - z_j) + c_i (z_i - t_i)
/// ```
///
/// This walks the quadratic's terms directly, independent of the matrix
/// assembly inside the solver, and doubles as its residual check.
pub fn pairwise_gradient(
    weights: &DenseWeights,
    z: &[f64],
    target: &Image,
    confidence: &Image,
) -> Vec<f64> {
    let n = weights.pixel_count();
    assert_eq!(n, z.len());
    let lambda = weights.lambda_bl;
    let mut grad: Vec<f64> = (0..n)
        .map(|i| confidence.data()[i] as f64 * (z[i] - target.data()[i] as f64))
        .collect();
    for (i, row) in weights.neighbors.iter().enumerate() {
        for &j in row {
            let j = j as usize;
            if i == j {
                continue;
            }
            let d = z[i] - z[j];
            grad[i] += lambda * d;
            grad[j] -= lambda * d;
        }
    }
    grad
}

/// Difference report between the fast solver and the dense reference on the
/// same inputs, normalized by the value span of the reference solution.
#[derive(Debug, Clone, Copy)]
pub struct CompareReport {
    pub rms_diff: f64,
    pub max_diff: f64,
    /// Normalizer used: span of the dense solution, or 1 when degenerate.
    pub scale: f64,
}

/// Runs the fast solver (no data term, no robust loss) and the dense solver
/// on identical inputs, with the pairwise weight set to half the smoothness
/// weight — the correspondence under which the two gradients match form for
/// form. The report is a characterization, not an identity: the fast path's
/// two-pass mean and support reweighting only approximate the explicit
/// pairwise term, and the residual gap is what this measures.
pub fn compare_solvers(
    guide: &Image,
    target: &Image,
    confidence: &Image,
    params: DtParams,
    cfg: &SolverConfig,
) -> Result<CompareReport> {
    let mut fast_cfg = *cfg;
    fast_cfg.dt = params;
    fast_cfg.use_charbonnier = false;
    let problem = ProblemInstance {
        target,
        confidence,
        guide,
        initial: target,
        data_term: None,
    };
    let fast = solve(&problem, &fast_cfg)?;

    let weights =
        build_dense_weights(guide, params, DEFAULT_RADIUS_SCALE, cfg.lambda as f64 / 2.0)?;
    let dense = solve_dense(&weights, target, confidence)?;

    let (lo, hi) = dense.min_max();
    let span = (hi - lo) as f64;
    let scale = if span > 1e-12 { span } else { 1.0 };
    let mut sum_sq = 0.0f64;
    let mut max_abs = 0.0f64;
    for (a, b) in fast.data().iter().zip(dense.data()) {
        let d = (*a as f64 - *b as f64).abs();
        sum_sq += d * d;
        max_abs = max_abs.max(d);
    }
    let rms = (sum_sq / fast.data().len() as f64).sqrt();
    Ok(CompareReport {
        rms_diff: rms / scale,
        max_diff: max_abs / scale,
        scale,
    })
}
