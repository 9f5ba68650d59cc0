//! Procedurally generated scenes and timing sweeps.
//!
//! Everything here is deterministic given a seed and needs no external data,
//! so scaling behavior (time vs pixels, time vs window size, error vs
//! iterations) can be measured anywhere, CI included.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dt::DtParams;
use crate::image::Image;
use crate::io::CsvRecord;
use crate::metrics::mae;
use crate::solver::{solve, solve_traced, ProblemInstance, SolverConfig};

/// A piecewise-constant disparity scene with color edges aligned to the
/// disparity edges, plus a noisy target.
pub struct SyntheticScene {
    pub guide: Image,
    pub ground_truth: Image,
    pub target: Image,
}

/// Standard normal via Box-Muller.
fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Builds a scene of random rectangles over a base plane. Each rectangle gets
/// its own color and disparity, so every disparity edge coincides with a
/// color edge. Region colors come from the corners of the RGB cube: any two
/// regions are at least unit color distance apart, far enough that no
/// edge-aware window leaks across a disparity edge at the default scales.
/// The target is the ground truth plus N(0, noise_sigma) noise.
pub fn make_scene(width: usize, height: usize, noise_sigma: f64, seed: u64) -> SyntheticScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let palette: [[f32; 3]; 8] = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
        [0.0, 1.0, 1.0],
        [1.0, 1.0, 1.0],
    ];
    let mut color = vec![palette[0]];
    let mut disparity = vec![12.0f32];
    let rects = 6;
    let mut rect_list = Vec::new();
    for k in 0..rects {
        let rw = rng.random_range(width / 6..width / 2 + 1);
        let rh = rng.random_range(height / 6..height / 2 + 1);
        let x0 = rng.random_range(0..width.saturating_sub(rw).max(1));
        let y0 = rng.random_range(0..height.saturating_sub(rh).max(1));
        color.push(palette[(k + 1) % palette.len()]);
        disparity.push(rng.random_range(2.0..40.0));
        rect_list.push((x0, y0, rw, rh));
    }

    let region_of = |x: usize, y: usize| -> usize {
        let mut region = 0usize;
        for (k, &(x0, y0, rw, rh)) in rect_list.iter().enumerate() {
            if x >= x0 && x < x0 + rw && y >= y0 && y < y0 + rh {
                region = k + 1;
            }
        }
        region
    };

    let guide = Image::from_fn(width, height, 3, |x, y, ch| color[region_of(x, y)][ch]);
    let ground_truth = Image::from_fn(width, height, 1, |x, y, _| disparity[region_of(x, y)]);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut target = ground_truth.clone();
    for v in target.data_mut() {
        *v += (noise_sigma * gaussian(&mut noise_rng)) as f32;
    }
    SyntheticScene {
        guide,
        ground_truth,
        target,
    }
}

/// One measured sweep point.
#[derive(Debug, Clone, Copy)]
pub struct BenchPoint {
    pub setting: f64,
    pub megapixels: f64,
    pub seconds: f64,
    pub mae: Option<f64>,
}

fn bench_cfg(iterations: usize, sigma_x: f32, sigma_y: f32, sigma_r: f32) -> SolverConfig {
    SolverConfig {
        lambda: 0.99,
        step: 0.99,
        iterations,
        epsilon: 0.001,
        use_charbonnier: true,
        dt: DtParams {
            sigma_x,
            sigma_y,
            sigma_r,
        },
        sigma_c: 16.0,
    }
}

fn dims_for_megapixels(mp: f64) -> (usize, usize) {
    // 4:3 aspect
    let width = ((mp * 1.0e6 * 4.0 / 3.0).sqrt().round() as usize).max(8);
    let height = ((mp * 1.0e6 / width as f64).round() as usize).max(8);
    (width, height)
}

fn time_solve(scene: &SyntheticScene, cfg: &SolverConfig) -> f64 {
    let confidence = Image::constant(scene.guide.width(), scene.guide.height(), 1, 0.8);
    let problem = ProblemInstance {
        target: &scene.target,
        confidence: &confidence,
        guide: &scene.guide,
        initial: &scene.target,
        data_term: None,
    };
    let start = Instant::now();
    let z = solve(&problem, cfg).expect("bench solve");
    let dt = start.elapsed().as_secs_f64();
    std::hint::black_box(&z);
    dt
}

fn median_of_three(scene: &SyntheticScene, cfg: &SolverConfig) -> f64 {
    let mut times = [
        time_solve(scene, cfg),
        time_solve(scene, cfg),
        time_solve(scene, cfg),
    ];
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times[1]
}

/// Times the solve at fixed settings across image sizes.
pub fn pixels_sweep(megapixels: &[f64], iterations: usize, seed: u64) -> Vec<BenchPoint> {
    // warm up thread pool and allocator on the smallest size
    if let Some(&mp) = megapixels.first() {
        let (w, h) = dims_for_megapixels(mp);
        let scene = make_scene(w, h, 1.0, seed);
        let _ = time_solve(&scene, &bench_cfg(2, 16.0, 16.0, 0.25));
    }
    megapixels
        .iter()
        .map(|&mp| {
            let (w, h) = dims_for_megapixels(mp);
            let scene = make_scene(w, h, 1.0, seed);
            let secs = median_of_three(&scene, &bench_cfg(iterations, 16.0, 16.0, 0.25));
            BenchPoint {
                setting: mp,
                megapixels: (w * h) as f64 / 1.0e6,
                seconds: secs,
                mae: None,
            }
        })
        .collect()
}

/// Round-robin timing: every setting is measured once per round, so slow
/// machine drift (thermal, background load) spreads evenly across settings
/// instead of biasing whichever ran last. Per-setting median over rounds.
fn round_robin_times(scene: &SyntheticScene, cfgs: &[SolverConfig], rounds: usize) -> Vec<f64> {
    let mut times: Vec<Vec<f64>> = vec![Vec::with_capacity(rounds); cfgs.len()];
    for _ in 0..rounds {
        for (k, cfg) in cfgs.iter().enumerate() {
            times[k].push(time_solve(scene, cfg));
        }
    }
    times
        .into_iter()
        .map(|mut t| {
            t.sort_by(|a, b| a.partial_cmp(b).unwrap());
            t[t.len() / 2]
        })
        .collect()
}

/// Times the solve across spatial window scales at a fixed size. The window
/// machinery is O(pixels) regardless of the radius, so the curve is flat.
pub fn sigma_x_sweep(
    sigmas: &[f32],
    megapixels: f64,
    iterations: usize,
    seed: u64,
) -> Vec<BenchPoint> {
    let (w, h) = dims_for_megapixels(megapixels);
    let scene = make_scene(w, h, 1.0, seed);
    let _ = time_solve(
        &scene,
        &bench_cfg(2, sigmas.first().copied().unwrap_or(16.0), 16.0, 0.25),
    );
    let cfgs: Vec<SolverConfig> = sigmas
        .iter()
        .map(|&s| bench_cfg(iterations, s, s, 0.25))
        .collect();
    let times = round_robin_times(&scene, &cfgs, 3);
    sigmas
        .iter()
        .zip(times)
        .map(|(&s, secs)| BenchPoint {
            setting: s as f64,
            megapixels: (w * h) as f64 / 1.0e6,
            seconds: secs,
            mae: None,
        })
        .collect()
}

/// Times the solve across range scales at a fixed size.
pub fn sigma_r_sweep(
    sigma_rs: &[f32],
    megapixels: f64,
    iterations: usize,
    seed: u64,
) -> Vec<BenchPoint> {
    let (w, h) = dims_for_megapixels(megapixels);
    let scene = make_scene(w, h, 1.0, seed);
    let _ = time_solve(&scene, &bench_cfg(2, 64.0, 64.0, 0.25));
    let cfgs: Vec<SolverConfig> = sigma_rs
        .iter()
        .map(|&sr| bench_cfg(iterations, 64.0, 64.0, sr))
        .collect();
    let times = round_robin_times(&scene, &cfgs, 3);
    sigma_rs
        .iter()
        .zip(times)
        .map(|(&sr, secs)| BenchPoint {
            setting: sr as f64,
            megapixels: (w * h) as f64 / 1.0e6,
            seconds: secs,
            mae: None,
        })
        .collect()
}

/// Runs one long solve, recording cumulative time and MAE against the ground
/// truth at each checkpoint.
pub fn iteration_curve(
    checkpoints: &[usize],
    width: usize,
    height: usize,
    seed: u64,
) -> Vec<BenchPoint> {
    let scene = make_scene(width, height, 1.0, seed);
    let max_iter = checkpoints.iter().copied().max().unwrap_or(0);
    let mut cfg = bench_cfg(max_iter, 2.0, 2.0, 0.25);
    cfg.use_charbonnier = false;
    let confidence = Image::constant(width, height, 1, 1.0);
    let problem = ProblemInstance {
        target: &scene.target,
        confidence: &confidence,
        guide: &scene.guide,
        initial: &scene.target,
        data_term: None,
    };

    let mp = (width * height) as f64 / 1.0e6;
    let mut points = Vec::new();
    let start = Instant::now();
    let _ = solve_traced(&problem, &cfg, |k, z| {
        if checkpoints.contains(&k) {
            points.push(BenchPoint {
                setting: k as f64,
                megapixels: mp,
                seconds: start.elapsed().as_secs_f64(),
                mae: Some(mae(z, &scene.ground_truth)),
            });
        }
    })
    .expect("iteration sweep solve");
    points
}

/// Converts sweep points into CSV records; `setting_name` labels the swept
/// column.
pub fn to_records(points: &[BenchPoint], setting_name: &str) -> Vec<CsvRecord> {
    points
        .iter()
        .map(|p| {
            let mut record: CsvRecord = vec![
                (setting_name.to_string(), p.setting),
                ("megapixels".to_string(), p.megapixels),
                ("seconds".to_string(), p.seconds),
            ];
            if let Some(m) = p.mae {
                record.push(("mae".to_string(), m));
            }
            record
        })
        .collect()
}

/// Coefficient of determination of the least-squares line through
/// `(xs, ys)`.
pub fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    if sxx == 0.0 {
        return 0.0;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let fit = intercept + slope * x;
            (y - fit) * (y - fit)
        })
        .sum();
    1.0 - ss_res / syy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_is_deterministic_and_edge_aligned() {
        let a = make_scene(32, 24, 1.0, 5);
        let b = make_scene(32, 24, 1.0, 5);
        assert_eq!(a.guide, b.guide);
        assert_eq!(a.target, b.target);
        // disparity edges coincide with color edges
        for y in 0..24 {
            for x in 0..31 {
                let d_edge = a.ground_truth.get(x, y, 0) != a.ground_truth.get(x + 1, y, 0);
                let c_edge = (0..3).any(|c| a.guide.get(x, y, c) != a.guide.get(x + 1, y, c));
                if d_edge {
                    assert!(c_edge, "disparity edge without color edge at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn perfect_line_has_unit_r2() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        assert!((linear_fit_r2(&xs, &ys) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scattered_data_has_low_r2() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [0.0, 5.0, -3.0, 2.0];
        assert!(linear_fit_r2(&xs, &ys) < 0.5);
    }

    #[test]
    fn iteration_curve_reports_all_checkpoints() {
        let points = iteration_curve(&[2, 5, 10], 24, 18, 3);
        assert_eq!(points.len(), 3);
        assert!(points.iter().all(|p| p.mae.is_some()));
        assert!(points.windows(2).all(|w| w[0].seconds <= w[1].seconds));
    }

    #[test]
    fn records_carry_the_setting_column() {
        let points = [BenchPoint {
            setting: 0.25,
            megapixels: 0.25,
            seconds: 0.5,
            mae: None,
        }];
        let records = to_records(&points, "megapixels_requested");
        assert_eq!(records[0][0].0, "megapixels_requested");
        assert_eq!(records[0].len(), 3);
    }
}
