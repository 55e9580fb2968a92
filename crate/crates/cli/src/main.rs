//! `rgbw`: data generation, remosaic, training, scoring and ranking from the shell.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rgbw_core::{CfaDescriptor, DemosaicKind, M4Mode, Split, Transfer};

#[derive(Parser, Debug)]
#[command(name = "rgbw", version, about = "RGBW to Bayer remosaic benchmark toolkit")]
pub struct Cli {
    /// Seed for synthetic scenes and noise; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build aligned RGBW/Bayer pairs from synthetic scenes or from one capture.
    GenData(GenDataArgs),
    /// Add gain-dependent sensor noise to a raw frame.
    AddNoise(AddNoiseArgs),
    /// Convert an RGBW frame to Bayer.
    Remosaic(RemosaicArgs),
    /// Fit a least-squares filter bank on a dataset split.
    Train(TrainArgs),
    /// Render a Bayer frame to an 8-bit PNG.
    Isp(IspArgs),
    /// Score one prediction, or an algorithm over a whole dataset.
    Score(ScoreArgs),
    /// Time an algorithm and extrapolate to a 64 MP frame.
    Bench(BenchArgs),
    /// Rank evaluation reports or literal metric rows by M4.
    Leaderboard(LeaderboardArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmName {
    Nearest,
    WhiteGuided,
    FilterBank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverName {
    Auto,
    Cholesky,
    Cg,
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// Dataset root; files go to `<out>/<split>/`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "valid")]
    pub split: Split,
    /// Number of synthetic scenes.
    #[arg(long, default_value_t = 10)]
    pub scenes: usize,
    /// Side length of each output pair in pixels.
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 24.0, 42.0])]
    pub gains: Vec<f64>,
    /// Demosaic used inside the pair pipeline (defaults to the config's ISP demosaic).
    #[arg(long)]
    pub demosaic: Option<DemosaicKind>,
    /// Full-resolution RGBW capture (`.rmsc`, or 16-bit binary `.pgm`) instead of synthetic scenes.
    #[arg(long)]
    pub capture: Option<PathBuf>,
    /// Scene id for `--capture`; defaults to the file stem.
    #[arg(long)]
    pub scene_id: Option<String>,
    /// CFA of a `.pgm` capture.
    #[arg(long, default_value = "rgbw4x4")]
    pub capture_cfa: CfaDescriptor,
    #[arg(long, default_value_t = rgbw_core::image::DEFAULT_BLACK_LEVEL)]
    pub black_level: u16,
    #[arg(long, default_value_t = rgbw_core::image::DEFAULT_WHITE_LEVEL)]
    pub white_level: u16,
}

#[derive(Args, Debug)]
pub struct AddNoiseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Analog gain in dB.
    #[arg(long)]
    pub gain: f64,
    /// Overrides the registered read-noise sigma.
    #[arg(long)]
    pub read_sigma: Option<f64>,
    /// Overrides the registered shot-noise coefficient.
    #[arg(long)]
    pub shot_k: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BankArgs {
    /// Filter bank used for every gain without a `--bank-gain` entry.
    #[arg(long)]
    pub bank: Option<PathBuf>,
    /// Gain-specific filter bank, as `GAIN=PATH`; repeatable.
    #[arg(long = "bank-gain", value_name = "GAIN=PATH")]
    pub bank_gain: Vec<String>,
}

#[derive(Args, Debug)]
pub struct RemosaicArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmName::WhiteGuided)]
    pub algorithm: AlgorithmName,
    /// Output Bayer pattern; ignored for filter banks, which carry their own.
    #[arg(long, default_value = "rggb")]
    pub cfa_out: CfaDescriptor,
    /// Gain of the input, used to pick a gain-specific bank.
    #[arg(long, default_value_t = 0.0)]
    pub gain: f64,
    #[command(flatten)]
    pub banks: BankArgs,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset root laid out as `<root>/<split>/<scene>_<gain>dB.rmsc`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "train")]
    pub split: Split,
    /// Only train on these gains.
    #[arg(long, value_delimiter = ',')]
    pub gains: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum, default_value_t = SolverName::Auto)]
    pub solver: SolverName,
    /// Writes per-phase solver diagnostics as JSON.
    #[arg(long)]
    pub fit_report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IspOverrides {
    #[arg(long)]
    pub demosaic: Option<DemosaicKind>,
    /// White-balance gains as `R,G,B`.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub wb: Option<Vec<f64>>,
    #[arg(long)]
    pub transfer: Option<Transfer>,
}

#[derive(Args, Debug)]
pub struct IspArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub isp: IspOverrides,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// Predicted Bayer frame (pair mode).
    #[arg(long, requires = "gt", conflicts_with = "data")]
    pub pred: Option<PathBuf>,
    /// Ground-truth Bayer frame (pair mode).
    #[arg(long, requires = "pred")]
    pub gt: Option<PathBuf>,
    /// Dataset root (manifest mode).
    #[arg(long, required_unless_present = "pred")]
    pub data: Option<PathBuf>,
    /// Restrict the manifest to these splits.
    #[arg(long, value_delimiter = ',')]
    pub split: Vec<Split>,
    /// Restrict the manifest to these gains.
    #[arg(long, value_delimiter = ',')]
    pub gains: Vec<f64>,
    #[arg(long, value_enum, default_value_t = AlgorithmName::WhiteGuided)]
    pub algorithm: AlgorithmName,
    #[command(flatten)]
    pub banks: BankArgs,
    /// Where to write the JSON report; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// External LPIPS command, called as `<cmd> <png_a> <png_b>`.
    #[arg(long)]
    pub lpips_provider: Option<String>,
    /// Provider timeout in seconds.
    #[arg(long)]
    pub lpips_timeout: Option<f64>,
    #[command(flatten)]
    pub isp: IspOverrides,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// RGBW frame to time; a synthetic frame of `--width`x`--height` otherwise.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = rgbw_core::harness::MEASURED_WIDTH)]
    pub width: usize,
    #[arg(long, default_value_t = rgbw_core::harness::MEASURED_HEIGHT)]
    pub height: usize,
    #[arg(long, value_enum, default_value_t = AlgorithmName::WhiteGuided)]
    pub algorithm: AlgorithmName,
    #[arg(long, default_value = "rggb")]
    pub cfa_out: CfaDescriptor,
    #[arg(long, default_value_t = 0.0)]
    pub gain: f64,
    #[command(flatten)]
    pub banks: BankArgs,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Skip timing and only extrapolate this many measured seconds.
    #[arg(long, value_name = "SECONDS")]
    pub estimate: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct LeaderboardArgs {
    /// Evaluation report, as `PATH` or `NAME=PATH`; repeatable.
    #[arg(long = "report", value_name = "[NAME=]PATH")]
    pub reports: Vec<String>,
    /// Literal row `NAME:PSNR,SSIM,LPIPS,KLD`; repeatable. Use `-` for an absent LPIPS.
    #[arg(long = "row", value_name = "NAME:PSNR,SSIM,LPIPS,KLD")]
    pub rows: Vec<String>,
    /// Runtime column, as `NAME=SECONDS` measured at 1200x1800; repeatable.
    #[arg(long = "runtime", value_name = "NAME=SECONDS")]
    pub runtimes: Vec<String>,
    #[arg(long, default_value = "mean-of-m4")]
    pub mode: M4Mode,
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
