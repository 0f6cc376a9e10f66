//! `spu`: batch driver for decoding, masking, unwrapping, evaluation,
//! scene synthesis and reconstruction.

mod bench;
mod commands;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spu_core::unwrap_spatial::Method;

#[derive(Debug, Parser)]
#[command(
    name = "spu",
    version,
    about = "Hybrid spatial phase unwrapping for fringe projection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Flood,
    Modu,
    Fspu,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Flood => Method::FloodFill,
            MethodArg::Modu => Method::ModuSort,
            MethodArg::Fspu => Method::Fspu,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    /// Fringe order differs from ground truth.
    Order,
    /// Phase differs by more than 0.3 rad.
    Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    /// Rule-based labels from the PMI image.
    Heuristic,
    /// Ground-truth labels of the synthetic scene.
    Oracle,
    /// Modulation threshold and small-region removal only.
    Threshold,
    /// Every decodable point.
    None,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Error-percent thresholds as fractions of all map points.
    #[arg(long, value_delimiter = ',', default_values_t = [0.001, 0.01])]
    pub thresholds: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Order)]
    pub mode: ModeArg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stack frames to wrapped phase, background and modulation.
    Decode {
        /// Frame prefix: reads <stack>_00.fpm, <stack>_01.fpm, ...
        #[arg(long)]
        stack: PathBuf,
        /// Writes <out>_phi.fpm, <out>_bg.fpm, <out>_mod.fpm, <out>_valid.pgm.
        #[arg(long)]
        out: PathBuf,
    },
    /// Stack frames to PMI channels and validity.
    Pmi {
        #[arg(long)]
        stack: PathBuf,
        /// Writes <out>_p.fpm, <out>_m.fpm, <out>_i.fpm, <out>_valid.pgm,
        /// plus <out>_phi.fpm and <out>_mod.fpm.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        threshold: f64,
        #[arg(long, default_value_t = 0.01)]
        min_region: f64,
    },
    /// PMI channels to a three-class label map with the rule-based classifier.
    Classify {
        /// PMI prefix as written by `pmi`.
        #[arg(long)]
        pmi: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.08)]
        q_low: f64,
        #[arg(long, default_value_t = 1.0)]
        tau_d: f64,
    },
    /// Wrapped phase to continuous phase.
    Unwrap {
        #[arg(long)]
        phase: PathBuf,
        /// Label or validity PGM; points labelled 2 are unwrapped.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Quality map for MODU-sort, usually the modulation.
        #[arg(long)]
        quality: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Flood)]
        method: MethodArg,
        /// Writes <out>.fpm (phase) and <out>.fpk (orders).
        #[arg(long)]
        out: PathBuf,
    },
    /// Phase-shifted stack plus Gray-code images to absolute phase.
    Tpu {
        #[arg(long)]
        stack: PathBuf,
        /// Code image prefix; the last image is the complementary pattern.
        #[arg(long)]
        graycode: PathBuf,
        /// Projected fringe count; defaults to 2^(code images - 1).
        #[arg(long)]
        fringes: Option<usize>,
        /// Writes <out>.fpm and <out>.fpk.
        #[arg(long)]
        out: PathBuf,
    },
    /// Modulation plus depth to ground-truth labels.
    Label {
        #[arg(long)]
        modulation: PathBuf,
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        threshold: f64,
        #[arg(long, default_value_t = 3.0)]
        spatial_sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        range_sigma: f64,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 0.25)]
        variance_threshold: f64,
        #[arg(long, default_value_t = 0.01)]
        min_region: f64,
    },
    /// Unwrapped phase against ground truth, as CSV.
    Eval {
        /// Prefix of an `unwrap` result: <unwrapped>.fpm and <unwrapped>.fpk.
        #[arg(long)]
        unwrapped: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Ground-truth labels; label 0 points are not compared.
        #[arg(long)]
        gt_labels: Option<PathBuf>,
        /// Predicted labels, scored against --gt-labels.
        #[arg(long)]
        pred_labels: Option<PathBuf>,
        /// Depth map and its reference; RMSE is over depth when given,
        /// otherwise over aligned phase.
        #[arg(long, requires = "depth_gt")]
        depth: Option<PathBuf>,
        #[arg(long, requires = "depth")]
        depth_gt: Option<PathBuf>,
        #[arg(long, default_value = "map")]
        map_id: String,
        #[arg(long, default_value = "flood")]
        method: String,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generates a scene suite, or one scene from a spec file.
    Synth {
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        suite: Option<String>,
        /// Scene spec in TOML.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        /// Output directory; suites get one scene_NNN directory per scene.
        #[arg(long)]
        out: PathBuf,
    },
    /// Absolute phase plus calibration to a PLY point cloud and depth map.
    Reconstruct {
        #[arg(long)]
        phase: PathBuf,
        /// Orders file whose validity selects the points; all points otherwise.
        #[arg(long)]
        orders: Option<PathBuf>,
        #[arg(long)]
        calib: PathBuf,
        /// Writes <out>.ply and <out>_depth.fpm.
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes the calibration of a synthetic camera-projector rig.
    Calib {
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        /// Fringe period in projector pixels.
        #[arg(long, default_value_t = 38.0)]
        period: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline over a synthetic suite with a per-method failure table.
    Bench {
        #[arg(long, default_value = "simple")]
        suite: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        /// Mask for flood fill.
        #[arg(long, value_enum, default_value_t = ClassifierArg::Heuristic)]
        classifier: ClassifierArg,
        /// Directory of external label maps named <map_id>.pgm; overrides
        /// --classifier for flood fill.
        #[arg(long)]
        labels_dir: Option<PathBuf>,
        /// Modulation threshold of the MODU-sort and FSPU preprocessing.
        #[arg(long, default_value_t = 2.0, conflicts_with = "illumination")]
        baseline_threshold: f64,
        /// Use the baseline threshold preset of illumination 1-5 (6-10).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        illumination: Option<u8>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Flood, MethodArg::Modu, MethodArg::Fspu])]
        methods: Vec<MethodArg>,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Bad arguments that clap could not catch.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Decode { stack, out } => commands::decode(&stack, &out),
        Command::Pmi {
            stack,
            out,
            threshold,
            min_region,
        } => commands::pmi(&stack, &out, threshold, min_region),
        Command::Classify {
            pmi,
            out,
            q_low,
            tau_d,
        } => commands::classify(&pmi, &out, q_low, tau_d),
        Command::Unwrap {
            phase,
            mask,
            quality,
            method,
            out,
        } => commands::unwrap(
            &phase,
            mask.as_deref(),
            quality.as_deref(),
            method.into(),
            &out,
        ),
        Command::Tpu {
            stack,
            graycode,
            fringes,
            out,
        } => commands::tpu(&stack, &graycode, fringes, &out),
        Command::Label {
            modulation,
            depth,
            out,
            threshold,
            spatial_sigma,
            range_sigma,
            window,
            variance_threshold,
            min_region,
        } => commands::label(
            &modulation,
            &depth,
            &out,
            threshold,
            spu_core::labeling::OutlierParams {
                spatial_sigma,
                range_sigma,
                window,
                variance_threshold,
                min_region_fraction: min_region,
            },
        ),
        Command::Eval {
            unwrapped,
            gt,
            gt_labels,
            pred_labels,
            depth,
            depth_gt,
            map_id,
            method,
            thresholds,
            out,
        } => commands::eval(commands::EvalArgs {
            unwrapped: &unwrapped,
            gt: &gt,
            gt_labels: gt_labels.as_deref(),
            pred_labels: pred_labels.as_deref(),
            depth: depth.as_deref().zip(depth_gt.as_deref()),
            map_id: &map_id,
            method: &method,
            thresholds: &thresholds,
            out: out.as_deref(),
        }),
        Command::Synth {
            suite,
            spec,
            count,
            seed,
            width,
            height,
            out,
        } => match (suite, spec) {
            (_, Some(spec)) => commands::synth_spec(&spec, &out),
            (Some(suite), None) => commands::synth_suite(&suite, count, seed, width, height, &out),
            (None, None) => Err(UsageError("one of --suite or --spec is required".into()).into()),
        },
        Command::Reconstruct {
            phase,
            orders,
            calib,
            out,
        } => commands::reconstruct(&phase, orders.as_deref(), &calib, &out),
        Command::Calib {
            width,
            height,
            period,
            out,
        } => commands::calib(width, height, period, &out),
        Command::Bench {
            suite,
            count,
            seed,
            width,
            height,
            classifier,
            labels_dir,
            baseline_threshold,
            illumination,
            methods,
            thresholds,
            out,
        } => bench::run(bench::BenchArgs {
            suite,
            count,
            seed,
            width,
            height,
            classifier,
            labels_dir,
            baseline_threshold: match illumination {
                Some(i) => spu_core::masking::ILLUMINATION_THRESHOLD_PRESETS[i as usize - 1],
                None => baseline_threshold,
            },
            methods: methods.into_iter().map(Method::from).collect(),
            thresholds,
            out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
