//! Deterministic self-check report: re-runs the independent oracles (brute
//! windowing, dense pairwise solves, fixed-point residuals) on seeded random
//! instances and reports measured values against their bounds.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dt::{
    box_count_row, box_mean_row, edge_aware_mean, warp_row, DtParams, DEFAULT_RADIUS_SCALE,
};
use crate::image::Image;
use crate::oracle::{build_dense_weights, compare_solvers, pairwise_gradient, solve_dense_f64};
use crate::solver::{solve, ProblemInstance, SolverConfig};

/// First-measured normalized RMS gap between the fast solver and the dense
/// pairwise reference on the fixed regression instance below (12x10, seed
/// [`COMPARE_GOLDEN_SEED`]). The regression bound is this value + 10%.
///
/// The gap is real, not noise: the fast path averages through two normalized
/// passes while the reference uses flat product windows, and on a busy random
/// guide the resulting equilibria differ by a few percent of the value span.
/// On constant guides the two coincide (see the degenerate checks).
pub const COMPARE_GOLDEN_RMS: f64 = 8.999207e-2;

/// Seed of the golden regression instance; fixed so the golden value stays
/// comparable across runs.
pub const COMPARE_GOLDEN_SEED: u64 = 0xD75;

/// One check: a measured value, its bound, and whether it passed.
#[derive(Debug, Clone)]
pub struct VerifyEntry {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl VerifyEntry {
    fn new(name: &'static str, value: f64, bound: f64) -> Self {
        VerifyEntry {
            name,
            value,
            bound,
            pass: value <= bound,
        }
    }
}

fn brute_mean(values: &[f32], t: &[f64], radius: f64) -> Vec<f32> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let mut sum = 0.0f64;
            let mut count = 0usize;
            for j in 0..n {
                if (t[j] - t[i]).abs() <= radius {
                    sum += values[j] as f64;
                    count += 1;
                }
            }
            (sum / count as f64) as f32
        })
        .collect()
}

fn brute_count(t: &[f64], radius: f64) -> Vec<u32> {
    (0..t.len())
        .map(|i| {
            (0..t.len())
                .filter(|&j| (t[j] - t[i]).abs() <= radius)
                .count() as u32
        })
        .collect()
}

fn random_guide(w: usize, h: usize, rng: &mut impl Rng) -> Image {
    Image::from_fn(w, h, 3, |_, _, _| rng.random::<f32>())
}

fn windowing_checks(rng: &mut ChaCha8Rng, entries: &mut Vec<VerifyEntry>) {
    let mut worst_mean = 0.0f64;
    let mut worst_count = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(2..=128);
        let row: Vec<f32> = (0..n * 3).map(|_| rng.random::<f32>()).collect();
        let warped = warp_row(
            &row,
            3,
            rng.random_range(1.0..8.0),
            rng.random_range(0.1..0.8),
        )
        .expect("finite row");
        let values: Vec<f32> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let radius = rng.random_range(0.0..25.0);
        let fast = box_mean_row(&values, None, &warped, radius);
        let brute = brute_mean(&values, warped.values(), radius);
        for (a, b) in fast.iter().zip(&brute) {
            worst_mean = worst_mean.max((*a as f64 - *b as f64).abs());
        }
        let fast_c = box_count_row(&warped, radius);
        let brute_c = brute_count(warped.values(), radius);
        for (a, b) in fast_c.iter().zip(&brute_c) {
            worst_count = worst_count.max((*a as f64 - *b as f64).abs());
        }
    }
    entries.push(VerifyEntry::new(
        "window-mean-vs-brute-force",
        worst_mean,
        1e-4,
    ));
    entries.push(VerifyEntry::new(
        "window-count-vs-brute-force",
        worst_count,
        0.0,
    ));
}

fn filter_reduction_check(rng: &mut ChaCha8Rng, entries: &mut Vec<VerifyEntry>) {
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let guide = random_guide(32, 24, rng);
        let values = Image::from_fn(32, 24, 1, |_, _, _| rng.random::<f32>());
        let zero_conf = Image::new(32, 24, 1);
        let lambda = rng.random_range(0.5..1.0);
        let cfg = SolverConfig {
            lambda,
            step: 1.0 / lambda,
            iterations: 1,
            epsilon: 0.001,
            use_charbonnier: false,
            dt: DtParams {
                sigma_x: rng.random_range(1.0..6.0),
                sigma_y: rng.random_range(1.0..6.0),
                sigma_r: rng.random_range(0.1..0.6),
            },
            sigma_c: 16.0,
        };
        let problem = ProblemInstance {
            target: &values,
            confidence: &zero_conf,
            guide: &guide,
            initial: &values,
            data_term: None,
        };
        let solved = solve(&problem, &cfg).expect("filter reduction solve");
        let (mean, _) =
            edge_aware_mean(&values, &guide, cfg.dt, DEFAULT_RADIUS_SCALE).expect("mean");
        for (a, b) in solved.data().iter().zip(mean.data()) {
            worst = worst.max((*a as f64 - *b as f64).abs());
        }
    }
    entries.push(VerifyEntry::new("filter-reduction-max-abs", worst, 1e-6));
}

fn fixed_point_check(rng: &mut ChaCha8Rng, entries: &mut Vec<VerifyEntry>) {
    let guide = random_guide(16, 12, rng);
    let target = Image::from_fn(16, 12, 1, |_, _, _| rng.random::<f32>());
    let confidence = Image::from_fn(16, 12, 1, |_, _, _| rng.random_range(0.3..1.0));
    let lambda = 0.9f32;
    let cfg = SolverConfig {
        lambda,
        step: 0.67,
        iterations: 2000,
        epsilon: 0.001,
        use_charbonnier: false,
        dt: DtParams {
            sigma_x: 1.8,
            sigma_y: 1.8,
            sigma_r: 0.35,
        },
        sigma_c: 16.0,
    };
    let problem = ProblemInstance {
        target: &target,
        confidence: &confidence,
        guide: &guide,
        initial: &target,
        data_term: None,
    };
    let z = solve(&problem, &cfg).expect("fixed point solve");
    let (mean, support) = edge_aware_mean(&z, &guide, cfg.dt, DEFAULT_RADIUS_SCALE).expect("mean");
    let mut residual = 0.0f64;
    let mut identity = 0.0f64;
    for i in 0..z.data().len() {
        let c_hat = (confidence.data()[i] / support.data()[i]) as f64;
        let zi = z.data()[i] as f64;
        let r =
            lambda as f64 * (zi - mean.data()[i] as f64) + c_hat * (zi - target.data()[i] as f64);
        residual = residual.max(r.abs());
        let fixed = (lambda as f64 * mean.data()[i] as f64 + c_hat * target.data()[i] as f64)
            / (lambda as f64 + c_hat);
        identity = identity.max((zi - fixed).abs());
    }
    entries.push(VerifyEntry::new(
        "solver-gradient-residual-inf-norm",
        residual,
        1e-3 * (lambda as f64 + 1.0),
    ));
    entries.push(VerifyEntry::new(
        "solver-fixed-point-identity",
        identity,
        1e-3,
    ));
}

fn dense_oracle_checks(rng: &mut ChaCha8Rng, entries: &mut Vec<VerifyEntry>) {
    // residual of the dense solve on a random instance
    let guide = random_guide(8, 8, rng);
    let target = Image::from_fn(8, 8, 1, |_, _, _| rng.random_range(0.0..4.0));
    let confidence = Image::from_fn(8, 8, 1, |_, _, _| rng.random_range(0.2..1.0));
    let params = DtParams {
        sigma_x: 1.5,
        sigma_y: 1.5,
        sigma_r: 0.4,
    };
    let weights = build_dense_weights(&guide, params, DEFAULT_RADIUS_SCALE, 0.45).expect("weights");
    let z = solve_dense_f64(&weights, &target, &confidence).expect("dense solve");
    let grad = pairwise_gradient(&weights, &z, &target, &confidence);
    let norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    entries.push(VerifyEntry::new(
        "dense-solve-gradient-inf-norm",
        norm,
        1e-8,
    ));

    // degenerate agreement: identity windows
    let tiny = DtParams {
        sigma_x: 0.4,
        sigma_y: 0.4,
        sigma_r: 0.25,
    };
    let conf1 = Image::constant(8, 8, 1, 1.0);
    let cfg = SolverConfig {
        lambda: 0.9,
        step: 0.6,
        iterations: 60,
        epsilon: 0.001,
        use_charbonnier: false,
        dt: tiny,
        sigma_c: 16.0,
    };
    let report = compare_solvers(&guide, &target, &conf1, tiny, &cfg).expect("compare identity");
    entries.push(VerifyEntry::new(
        "compare-identity-window-rms",
        report.rms_diff,
        0.0,
    ));

    // degenerate agreement: constant instance
    let cguide = Image::constant(8, 6, 3, 0.6);
    let ctarget = Image::constant(8, 6, 1, 2.5);
    let cconf = Image::constant(8, 6, 1, 1.0);
    let wide = DtParams {
        sigma_x: 16.0,
        sigma_y: 16.0,
        sigma_r: 0.25,
    };
    let report = compare_solvers(&cguide, &ctarget, &cconf, wide, &cfg).expect("compare constant");
    entries.push(VerifyEntry::new(
        "compare-constant-rms",
        report.rms_diff,
        0.0,
    ));
}

/// The fixed golden-regression comparison; independent of the user seed so
/// the frozen bound stays meaningful.
pub fn golden_compare_rms() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(COMPARE_GOLDEN_SEED);
    let guide = random_guide(12, 10, &mut rng);
    let target = Image::from_fn(12, 10, 1, |_, _, _| rng.random_range(0.0..4.0));
    let confidence = Image::from_fn(12, 10, 1, |_, _, _| rng.random_range(0.2..1.0));
    let params = DtParams {
        sigma_x: 2.0,
        sigma_y: 2.0,
        sigma_r: 0.4,
    };
    let cfg = SolverConfig {
        lambda: 0.9,
        step: 0.67,
        iterations: 1500,
        epsilon: 0.001,
        use_charbonnier: false,
        dt: params,
        sigma_c: 16.0,
    };
    let report = compare_solvers(&guide, &target, &confidence, params, &cfg)
        .expect("golden compare instance");
    report.rms_diff
}

/// Runs every check. All entries derive from `seed` except the golden
/// regression instance, which is pinned to its own seed.
pub fn run(seed: u64) -> Vec<VerifyEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    windowing_checks(&mut rng, &mut entries);
    filter_reduction_check(&mut rng, &mut entries);
    fixed_point_check(&mut rng, &mut entries);
    dense_oracle_checks(&mut rng, &mut entries);
    entries.push(VerifyEntry::new(
        "compare-random-golden-regression",
        golden_compare_rms(),
        COMPARE_GOLDEN_RMS * 1.1,
    ));
    entries
}

/// Fixed-format text report, one line per check.
pub fn render_report(entries: &[VerifyEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!(
            "{} {:<38} value={:.6e} bound={:.6e}\n",
            if e.pass { "PASS" } else { "FAIL" },
            e.name,
            e.value,
            e.bound
        ));
    }
    let passed = entries.iter().filter(|e| e.pass).count();
    out.push_str(&format!("{passed}/{} checks passed\n", entries.len()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_is_deterministic_for_a_seed() {
        let a = render_report(&run(7));
        let b = render_report(&run(7));
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_compare_entries_are_exactly_zero() {
        let entries = run(3);
        for e in &entries {
            if e.name.starts_with("compare-identity") || e.name.starts_with("compare-constant") {
                assert_eq!(e.value, 0.0);
                assert!(e.pass);
            }
        }
    }
}
