//! `dts`: edge-aware solving of disparity and depth maps from the command
//! line. One binary, one subcommand per pipeline; every solver scalar is a
//! flag (and a `DTS_*` environment variable) with defaults tuned per task.
//!
//! Exit codes: 0 success, 1 usage/flag errors, 2 file and format errors,
//! 3 numeric errors (instability, invalid data).

mod paths;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dts_core::bench;
use dts_core::defocus::{render_defocus, DefocusParams};
use dts_core::dt::{
    confidence_from_variance, edge_aware_mean, edge_aware_variance, DtParams, DEFAULT_RADIUS_SCALE,
};
use dts_core::io::write_csv;
use dts_core::solver::SolverConfig;
use dts_core::stereo::{refine_disparity, StereoInputs};
use dts_core::superres::{superresolve, SuperresInputs};
use dts_core::verify;
use dts_core::Error as CoreError;

use paths::{read_color, read_gray, write_color, write_gray};

#[derive(Parser)]
#[command(
    name = "dts",
    version,
    about = "Edge-aware optimization of disparity and depth maps via the domain transform"
)]
struct Cli {
    /// Worker threads for the parallel scanline passes (default: all cores)
    #[arg(long, global = true, env = "DTS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One edge-aware mean pass over the input (the zero-confidence solver)
    Filter(FilterArgs),
    /// Refine a disparity map against a rectified stereo pair
    Stereo(StereoArgs),
    /// Upsample a low-resolution depth map under a color guide
    Superres(SuperresArgs),
    /// Render a shallow depth-of-field image from color + disparity
    Defocus(DefocusArgs),
    /// Edge-aware variance confidence of an estimate under a guide
    Confidence(ConfidenceArgs),
    /// Timing and convergence sweeps on synthetic scenes, emitted as CSV
    Bench(BenchArgs),
    /// Deterministic self-check report against the built-in oracles
    Verify(VerifyArgs),
}

#[derive(Args)]
struct DtFlags {
    /// Horizontal spatial scale in pixels (stereo default: 64)
    #[arg(long, env = "DTS_SIGMA_X", default_value_t = 64.0)]
    sigma_x: f32,
    /// Vertical spatial scale in pixels (stereo default: 64)
    #[arg(long, env = "DTS_SIGMA_Y", default_value_t = 64.0)]
    sigma_y: f32,
    /// Range scale in normalized color units (default: 0.25)
    #[arg(long, env = "DTS_SIGMA_R", default_value_t = 0.25)]
    sigma_r: f32,
}

impl DtFlags {
    fn params(&self) -> Result<DtParams, CliError> {
        DtParams::new(self.sigma_x, self.sigma_y, self.sigma_r).map_err(usage)
    }
}

#[derive(Args)]
struct SolverFlags {
    /// Smoothness weight (grid-searched default: 0.99)
    #[arg(long, env = "DTS_LAMBDA", default_value_t = 0.99)]
    lambda: f32,
    /// Gradient step multiplier (default: 0.99)
    #[arg(long, env = "DTS_STEP", default_value_t = 0.99)]
    step: f32,
    /// Charbonnier constant for the robust target loss (default: 0.001)
    #[arg(long, env = "DTS_EPSILON", default_value_t = 0.001)]
    epsilon: f32,
    /// Confidence scale for the edge-aware variance (artifact default: 16)
    #[arg(long, env = "DTS_SIGMA_C", default_value_t = 16.0)]
    sigma_c: f32,
}

#[derive(Args)]
struct FilterArgs {
    /// Color guide image (png/ppm)
    #[arg(long)]
    guide: PathBuf,
    /// Values to filter (pfm/pgm/png)
    #[arg(long)]
    input: PathBuf,
    /// Output (pfm/pgm/png)
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    dt: DtFlags,
    /// Box radius per unit sigma (default: sqrt(3))
    #[arg(long, default_value_t = DEFAULT_RADIUS_SCALE)]
    radius_scale: f32,
}

#[derive(Args)]
struct StereoArgs {
    /// Left (reference) image
    #[arg(long)]
    left: PathBuf,
    /// Right image
    #[arg(long)]
    right: PathBuf,
    /// Target disparity map from an external matcher (pfm/pgm/png)
    #[arg(long)]
    target: PathBuf,
    /// Output disparity map
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    dt: DtFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Gradient descent iterations (stereo default: 3000)
    #[arg(long, env = "DTS_ITERATIONS", default_value_t = 3000)]
    iterations: usize,
    /// Photometric weight (grid-searched default: 0.001)
    #[arg(long, env = "DTS_GAMMA", default_value_t = 0.001)]
    gamma: f32,
    /// Lower disparity clamp (default: target minimum)
    #[arg(long)]
    min_disparity: Option<f32>,
    /// Upper disparity clamp (default: target maximum)
    #[arg(long)]
    max_disparity: Option<f32>,
}

#[derive(Args)]
struct SuperresArgs {
    /// Low-resolution depth map (pgm/pfm)
    #[arg(long)]
    low_depth: PathBuf,
    /// High-resolution color guide at factor x the depth resolution
    #[arg(long)]
    guide: PathBuf,
    /// Integer upsampling factor
    #[arg(long)]
    factor: usize,
    /// Output depth map (pfm/pgm)
    #[arg(long)]
    out: PathBuf,
    /// Optional 8-bit min-max normalized preview PNG
    #[arg(long)]
    preview: Option<PathBuf>,
    /// Spatial scale; default 20 * factor pixels
    #[arg(long, env = "DTS_SIGMA_X")]
    sigma_x: Option<f32>,
    /// Spatial scale; default 20 * factor pixels
    #[arg(long, env = "DTS_SIGMA_Y")]
    sigma_y: Option<f32>,
    /// Range scale (default: 0.25)
    #[arg(long, env = "DTS_SIGMA_R", default_value_t = 0.25)]
    sigma_r: f32,
    #[command(flatten)]
    solver: SolverFlags,
    /// Gradient descent iterations (super-resolution default: 10)
    #[arg(long, env = "DTS_ITERATIONS", default_value_t = 10)]
    iterations: usize,
}

#[derive(Args)]
struct DefocusArgs {
    /// All-in-focus color image
    #[arg(long)]
    color: PathBuf,
    /// Disparity map (pfm/pgm/png)
    #[arg(long)]
    disparity: PathBuf,
    /// Disparity kept in focus
    #[arg(long)]
    focal: f32,
    /// Blur radius in pixels per disparity unit away from focus
    #[arg(long)]
    aperture: f32,
    /// Disparity quantization layers (default: 32)
    #[arg(long, default_value_t = 32)]
    layers: usize,
    /// Output image (png/ppm)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfidenceArgs {
    /// Estimate whose variance is measured (pfm/pgm/png)
    #[arg(long)]
    input: PathBuf,
    /// Color guide image
    #[arg(long)]
    guide: PathBuf,
    /// Output confidence map in (0, 1]
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    dt: DtFlags,
    /// Confidence scale (artifact default: 16)
    #[arg(long, env = "DTS_SIGMA_C", default_value_t = 16.0)]
    sigma_c: f32,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum BenchMode {
    /// Time vs image size at fixed settings
    Pixels,
    /// Time vs spatial window scale at fixed size
    SigmaX,
    /// Time vs range scale at fixed size
    SigmaR,
    /// Error vs iteration count on a synthetic scene
    Iters,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    mode: BenchMode,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Iterations per timed solve (timing modes)
    #[arg(long, default_value_t = 12)]
    iterations: usize,
    /// Image sizes for pixels mode, in megapixels
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0, 2.0])]
    sizes: Vec<f64>,
    /// Image size for the sigma modes, in megapixels
    #[arg(long, default_value_t = 1.0)]
    megapixels: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Report path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Errors with their process exit codes.
enum CliError {
    Usage(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Numeric(m) => m,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io(_)
            | CoreError::MalformedHeader(_)
            | CoreError::TruncatedPayload { .. }
            | CoreError::ZeroScale
            | CoreError::UnsupportedBitDepth(_)
            | CoreError::PngDecode(_)
            | CoreError::PngEncode(_) => CliError::Io(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(3);
        }
    }

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Filter(args) => run_filter(args),
        Command::Stereo(args) => run_stereo(args),
        Command::Superres(args) => run_superres(args),
        Command::Defocus(args) => run_defocus(args),
        Command::Confidence(args) => run_confidence(args),
        Command::Bench(args) => run_bench(args),
        Command::Verify(args) => run_verify(args),
    }
}

fn run_filter(args: FilterArgs) -> Result<(), CliError> {
    let params = args.dt.params()?;
    if !(args.radius_scale.is_finite() && args.radius_scale >= 0.0) {
        return Err(usage("--radius-scale must be finite and >= 0"));
    }
    let guide = read_color(&args.guide)?;
    let (input, _) = read_gray(&args.input)?;
    let (mean, _) = edge_aware_mean(&input, &guide, params, args.radius_scale)?;
    write_gray(&mean, &args.out)
}

fn run_stereo(args: StereoArgs) -> Result<(), CliError> {
    let cfg = SolverConfig {
        lambda: args.solver.lambda,
        step: args.solver.step,
        iterations: args.iterations,
        epsilon: args.solver.epsilon,
        use_charbonnier: true,
        dt: args.dt.params()?,
        sigma_c: args.solver.sigma_c,
    };
    cfg.validate().map_err(usage)?;
    if !(args.gamma.is_finite() && args.gamma >= 0.0) {
        return Err(usage("--gamma must be finite and >= 0"));
    }

    let left = read_color(&args.left)?;
    let right = read_color(&args.right)?;
    let (target, mask) = read_gray(&args.target)?;
    let (tlo, thi) = target.min_max();
    let range = (
        args.min_disparity.unwrap_or(tlo),
        args.max_disparity.unwrap_or(thi),
    );
    let inputs = StereoInputs {
        left: &left,
        right: &right,
        target_disparity: &target,
        valid_mask: mask.as_ref(),
        gamma: args.gamma,
        disparity_range: range,
    };
    let refined = refine_disparity(&inputs, &cfg)?;
    write_gray(&refined, &args.out)
}

fn run_superres(args: SuperresArgs) -> Result<(), CliError> {
    if args.factor == 0 {
        return Err(usage("--factor must be at least 1"));
    }
    let defaults = SolverConfig::superres_defaults(args.factor);
    let cfg = SolverConfig {
        lambda: args.solver.lambda,
        step: args.solver.step,
        iterations: args.iterations,
        epsilon: args.solver.epsilon,
        use_charbonnier: false,
        dt: DtParams::new(
            args.sigma_x.unwrap_or(defaults.dt.sigma_x),
            args.sigma_y.unwrap_or(defaults.dt.sigma_y),
            args.sigma_r,
        )
        .map_err(usage)?,
        sigma_c: args.solver.sigma_c,
    };
    cfg.validate().map_err(usage)?;

    let (low_depth, _) = read_gray(&args.low_depth)?;
    let guide = read_color(&args.guide)?;
    let inputs = SuperresInputs {
        low_depth: &low_depth,
        guide: &guide,
        factor: args.factor,
    };
    let out = superresolve(&inputs, &cfg)?;
    write_gray(&out, &args.out)?;
    if let Some(preview) = &args.preview {
        dts_core::io::write_png_gray_normalized(&out, preview)?;
    }
    Ok(())
}

fn run_defocus(args: DefocusArgs) -> Result<(), CliError> {
    let params = DefocusParams {
        focal_disparity: args.focal,
        aperture: args.aperture,
        layers: args.layers,
    };
    params.validate().map_err(usage)?;
    let color = read_color(&args.color)?;
    let (disparity, _) = read_gray(&args.disparity)?;
    let out = render_defocus(&color, &disparity, &params)?;
    write_color(&out, &args.out)
}

fn run_confidence(args: ConfidenceArgs) -> Result<(), CliError> {
    let params = args.dt.params()?;
    if !(args.sigma_c.is_finite() && args.sigma_c > 0.0) {
        return Err(usage("--sigma-c must be finite and > 0"));
    }
    let (input, mask) = read_gray(&args.input)?;
    let guide = read_color(&args.guide)?;
    let variance = edge_aware_variance(&input, &guide, params)?;
    let mut confidence = confidence_from_variance(&variance, args.sigma_c)?;
    if let Some(mask) = mask {
        for (c, &m) in confidence.data_mut().iter_mut().zip(mask.data()) {
            if m <= 0.0 {
                *c = 0.0;
            }
        }
    }
    write_gray(&confidence, &args.out)
}

fn run_bench(args: BenchArgs) -> Result<(), CliError> {
    let records = match args.mode {
        BenchMode::Pixels => {
            let points = bench::pixels_sweep(&args.sizes, args.iterations, args.seed);
            bench::to_records(&points, "megapixels_requested")
        }
        BenchMode::SigmaX => {
            let points = bench::sigma_x_sweep(
                &[16.0, 32.0, 128.0, 256.0],
                args.megapixels,
                args.iterations,
                args.seed,
            );
            bench::to_records(&points, "sigma_x")
        }
        BenchMode::SigmaR => {
            let points = bench::sigma_r_sweep(
                &[0.1, 0.2, 0.3, 0.5, 0.75, 0.9],
                args.megapixels,
                args.iterations,
                args.seed,
            );
            bench::to_records(&points, "sigma_r")
        }
        BenchMode::Iters => {
            let points = bench::iteration_curve(&[10, 30, 100, 300, 1000, 3000], 96, 72, args.seed);
            bench::to_records(&points, "iterations")
        }
    };
    write_csv(&records, &args.out)?;
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<(), CliError> {
    let entries = verify::run(args.seed);
    let report = verify::render_report(&entries);
    match &args.out {
        Some(path) => std::fs::write(path, &report).map_err(|e| CliError::Io(e.to_string()))?,
        None => print!("{report}"),
    }
    if entries.iter().all(|e| e.pass) {
        Ok(())
    } else {
        Err(CliError::Numeric("verification checks failed".into()))
    }
}
