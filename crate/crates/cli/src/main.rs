//! `mvs`: depth estimation, fusion, evaluation and synthetic scenes from the
//! command line.

mod commands;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "mvs", version, about = "Coarse-to-fine multi-view stereo")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the depth map of a reference view.
    Depth(DepthArgs),
    /// Fuse depth maps into a binary PLY point cloud.
    Fuse(FuseArgs),
    /// Score a depth map (PFM) or point cloud (PLY) against ground truth.
    Eval(EvalArgs),
    /// Render a synthetic scene with exact ground truth.
    Synth(SynthArgs),
    /// Check every analytic loss gradient against finite differences.
    Losscheck(LosscheckArgs),
    /// Sweep the variance-interval parameters on a synthetic scene.
    CalibrateInterval(CalibrateArgs),
    /// Compare the strategy schedules on a synthetic scene.
    Ablation(AblationArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args, Debug)]
struct DepthArgs {
    /// Reference image.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Source images.
    #[arg(long = "src", num_args = 1.., required = true)]
    sources: Vec<PathBuf>,
    /// Directory with one `<image stem>_cam.txt` per image.
    #[arg(long)]
    cams: PathBuf,
    /// TOML run configuration; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of pyramid levels (stages).
    #[arg(long)]
    levels: Option<usize>,
    /// Strategy schedule: dhs1, dhs1+dhs2, dhs1+dhs3 or full.
    #[arg(long)]
    strategy: Option<String>,
    /// Adaptive unimodal filtering of stage-1 distributions.
    #[arg(long, value_enum)]
    auf: Option<OnOff>,
    /// Output depth map (PFM).
    #[arg(long)]
    out: PathBuf,
    /// Also write the confidence map (PFM).
    #[arg(long)]
    confidence: Option<PathBuf>,
    /// Write one JSON object per stage to this file (`-` for stdout).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Dump every stage's probability volume as PFM slices into this directory.
    #[arg(long)]
    dump_volumes: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FuseArgs {
    /// Depth maps (PFM), one per view.
    #[arg(long = "depth", num_args = 1.., required = true)]
    depths: Vec<PathBuf>,
    /// Directory with one `<depth stem>_cam.txt` per depth map.
    #[arg(long)]
    cams: PathBuf,
    /// Directory with `<depth stem>.png` color images.
    #[arg(long)]
    images: Option<PathBuf>,
    /// TOML run configuration; only the `[fusion]` table is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Voxel edge for duplicate suppression (0 disables).
    #[arg(long)]
    voxel: Option<f64>,
    /// Finest hypothesis spacing, used for the default voxel edge.
    #[arg(long)]
    spacing: Option<f64>,
    /// Output point cloud (binary PLY).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Prediction: a PFM depth map or a PLY point cloud.
    #[arg(long)]
    pred: PathBuf,
    /// Ground truth of the same kind.
    #[arg(long)]
    gt: PathBuf,
    /// Depth tolerance unit: fractions within 1, 2 and 4 spacings.
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Ignore this many pixels at the border.
    #[arg(long, default_value_t = 0)]
    margin: usize,
    /// Distance cap for cloud metrics.
    #[arg(long, default_value_t = 20.0)]
    d_max: f64,
}

#[derive(Args, Debug)]
struct SceneArgs {
    /// Built-in scene: plane, slanted, step, sphere or textureless.
    #[arg(long, conflicts_with = "scene")]
    preset: Option<String>,
    /// Scene description (TOML).
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Output directory for images/, depths/, cams/ and scene.toml.
    #[arg(long, required_unless_present = "print_spec")]
    out: Option<PathBuf>,
    /// Print the scene description and exit.
    #[arg(long)]
    print_spec: bool,
}

#[derive(Args, Debug)]
struct LosscheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    instances: usize,
    /// One JSON object per check instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 1.5, 2.0])]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 5.0, 10.0])]
    beta: Vec<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct AblationArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    json: bool,
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
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Depth(a) => commands::depth(a),
        Command::Fuse(a) => commands::fuse(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synth(a) => commands::synth(a),
        Command::Losscheck(a) => commands::losscheck(a),
        Command::CalibrateInterval(a) => commands::calibrate(a),
        Command::Ablation(a) => commands::ablation(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", commands::describe(&e));
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
