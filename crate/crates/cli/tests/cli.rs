//! End-to-end tests of the `dts` binary: exit codes, file round trips, and
//! the documented identity cases of each subcommand.

use std::path::{Path, PathBuf};
use std::process::Command;

use dts_core::image::Image;
use dts_core::io;

fn dts() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dts"))
}

struct Workdir {
    _guard: tempfile::TempDir,
    dir: PathBuf,
}

impl Workdir {
    fn new() -> Self {
        let guard = tempfile::tempdir().unwrap();
        let dir = guard.path().to_path_buf();
        Workdir { _guard: guard, dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn write_guide(path: &Path, w: usize, h: usize) {
    let img = Image::from_fn(w, h, 3, |x, y, ch| {
        ((x * 7 + y * 13 + ch * 29) % 256) as f32 / 255.0
    });
    io::write_png(&img, path).unwrap();
}

#[test]
fn missing_required_flag_exits_1() {
    let status = dts().arg("stereo").status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn unknown_subcommand_exits_1() {
    let status = dts().arg("frobnicate").status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn missing_guide_file_exits_2() {
    let wd = Workdir::new();
    let input = wd.path("input.pfm");
    io::write_pfm(&Image::constant(8, 8, 1, 1.0), &input).unwrap();
    let status = dts()
        .args(["filter", "--guide"])
        .arg(wd.path("missing.png"))
        .arg("--input")
        .arg(&input)
        .arg("--out")
        .arg(wd.path("out.pfm"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn invalid_sigma_exits_1_before_touching_files() {
    let wd = Workdir::new();
    let status = dts()
        .args(["filter", "--sigma-x=-3", "--guide"])
        .arg(wd.path("missing.png"))
        .arg("--input")
        .arg(wd.path("missing.pfm"))
        .arg("--out")
        .arg(wd.path("out.pfm"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn unstable_step_lambda_combination_exits_1() {
    let wd = Workdir::new();
    let status = dts()
        .args(["stereo", "--lambda", "1.6", "--step", "0.9", "--left"])
        .arg(wd.path("missing.png"))
        .arg("--right")
        .arg(wd.path("missing.png"))
        .arg("--target")
        .arg(wd.path("missing.pfm"))
        .arg("--out")
        .arg(wd.path("out.pfm"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn filter_keeps_constant_input_constant() {
    let wd = Workdir::new();
    let guide = wd.path("guide.png");
    write_guide(&guide, 24, 16);
    let input = wd.path("input.pfm");
    io::write_pfm(&Image::constant(24, 16, 1, 3.25), &input).unwrap();
    let out = wd.path("out.pfm");
    let status = dts()
        .arg("filter")
        .arg("--guide")
        .arg(&guide)
        .arg("--input")
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let filtered = io::read_pfm(&out).unwrap().image;
    for &v in filtered.data() {
        assert!((v - 3.25).abs() <= 1e-5);
    }
}

#[test]
fn filter_with_huge_sigma_r_is_a_plain_spatial_box_blur() {
    let wd = Workdir::new();
    let (w, h) = (32usize, 20usize);
    let guide = wd.path("guide.png");
    write_guide(&guide, w, h);
    let input_img = Image::from_fn(w, h, 1, |x, y, _| ((x * 31 + y * 17) % 97) as f32 / 97.0);
    let input = wd.path("input.pfm");
    io::write_pfm(&input_img, &input).unwrap();
    let out = wd.path("out.pfm");
    let status = dts()
        .args([
            "filter",
            "--sigma-x",
            "4",
            "--sigma-y",
            "4",
            "--sigma-r",
            "1e6",
        ])
        .arg("--guide")
        .arg(&guide)
        .arg("--input")
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let filtered = io::read_pfm(&out).unwrap().image;

    // reference: separable spatial box blur with the matched integer radius
    let radius = (1.732_050_8f64 * 4.0).floor() as isize;
    let box1d = |src: &Image, transpose: bool| -> Image {
        let img = if transpose {
            src.transposed()
        } else {
            src.clone()
        };
        let (iw, ih) = (img.width(), img.height());
        let mut out = Image::new(iw, ih, 1);
        for y in 0..ih {
            for x in 0..iw {
                let lo = (x as isize - radius).max(0) as usize;
                let hi = ((x as isize + radius) as usize).min(iw - 1);
                let sum: f64 = (lo..=hi).map(|i| img.get(i, y, 0) as f64).sum();
                out.set(x, y, 0, (sum / (hi - lo + 1) as f64) as f32);
            }
        }
        if transpose {
            out.transposed()
        } else {
            out
        }
    };
    let expect = box1d(&box1d(&input_img, false), true);
    for i in 0..filtered.data().len() {
        assert!(
            (filtered.data()[i] - expect.data()[i]).abs() <= 1e-3,
            "pixel {i}: {} vs {}",
            filtered.data()[i],
            expect.data()[i]
        );
    }
}

#[test]
fn stereo_identical_pair_with_zero_target_stays_near_zero() {
    let wd = Workdir::new();
    let img = wd.path("pair.png");
    write_guide(&img, 16, 12);
    let target = wd.path("target.pfm");
    io::write_pfm(&Image::new(16, 12, 1), &target).unwrap();
    let out = wd.path("out.pfm");
    let status = dts()
        .args([
            "stereo",
            "--iterations",
            "50",
            "--sigma-x",
            "4",
            "--sigma-y",
            "4",
        ])
        .arg("--left")
        .arg(&img)
        .arg("--right")
        .arg(&img)
        .arg("--target")
        .arg(&target)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let refined = io::read_pfm(&out).unwrap().image;
    for &v in refined.data() {
        assert!(v.abs() <= 1e-4, "drifted to {v}");
    }
}

#[test]
fn superres_factor_1_zero_iterations_is_identity() {
    let wd = Workdir::new();
    let depth_img = Image::from_fn(10, 8, 1, |x, y, _| (100 + x * 31 + y * 57) as f32);
    let depth = wd.path("depth.pgm");
    io::write_pgm16(&depth_img, &depth).unwrap();
    let guide = wd.path("guide.png");
    write_guide(&guide, 10, 8);
    let out = wd.path("out.pgm");
    let status = dts()
        .args(["superres", "--factor", "1", "--iterations", "0"])
        .arg("--low-depth")
        .arg(&depth)
        .arg("--guide")
        .arg(&guide)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(io::read_pgm16(&out).unwrap(), depth_img);
}

#[test]
fn defocus_zero_aperture_is_identity() {
    let wd = Workdir::new();
    let color = wd.path("color.png");
    write_guide(&color, 20, 14);
    let disparity = wd.path("disparity.pfm");
    io::write_pfm(
        &Image::from_fn(20, 14, 1, |x, _, _| (x % 11) as f32),
        &disparity,
    )
    .unwrap();
    let out = wd.path("out.png");
    let status = dts()
        .args(["defocus", "--focal", "5", "--aperture", "0"])
        .arg("--color")
        .arg(&color)
        .arg("--disparity")
        .arg(&disparity)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(io::read_png(&out).unwrap(), io::read_png(&color).unwrap());
}

#[test]
fn confidence_of_constant_input_is_one() {
    let wd = Workdir::new();
    let guide = wd.path("guide.png");
    write_guide(&guide, 12, 10);
    let input = wd.path("input.pfm");
    io::write_pfm(&Image::constant(12, 10, 1, 7.0), &input).unwrap();
    let out = wd.path("conf.pfm");
    let status = dts()
        .arg("confidence")
        .arg("--input")
        .arg(&input)
        .arg("--guide")
        .arg(&guide)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let conf = io::read_pfm(&out).unwrap().image;
    for &c in conf.data() {
        assert!((c - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn stereo_output_is_identical_across_thread_counts() {
    let wd = Workdir::new();
    let left = wd.path("left.png");
    write_guide(&left, 20, 14);
    let right = wd.path("right.png");
    write_guide(&right, 20, 14);
    let target = wd.path("target.pfm");
    io::write_pfm(
        &Image::from_fn(20, 14, 1, |x, y, _| ((x * 5 + y * 3) % 7) as f32),
        &target,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "2"] {
        let out = wd.path(&format!("out{threads}.pfm"));
        let status = dts()
            .args(["stereo", "--threads", threads, "--iterations", "40"])
            .args(["--sigma-x", "4", "--sigma-y", "4"])
            .arg("--left")
            .arg(&left)
            .arg("--right")
            .arg(&right)
            .arg("--target")
            .arg(&target)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(
        outputs[0], outputs[1],
        "results must not depend on threading"
    );
}

#[test]
fn verify_is_deterministic_and_passes() {
    let wd = Workdir::new();
    let a = wd.path("a.txt");
    let b = wd.path("b.txt");
    for path in [&a, &b] {
        let status = dts()
            .args(["verify", "--seed", "5", "--out"])
            .arg(path)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "verify report must be deterministic for a fixed seed"
    );
}

#[test]
fn bench_emits_a_csv_per_setting() {
    let wd = Workdir::new();
    let out = wd.path("bench.csv");
    let status = dts()
        .args([
            "bench",
            "--mode",
            "sigma-r",
            "--megapixels",
            "0.02",
            "--iterations",
            "2",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sigma_r,megapixels,seconds");
    assert_eq!(lines.len(), 1 + 6);
}
