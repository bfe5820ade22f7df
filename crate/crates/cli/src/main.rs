use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use contextmix::mixers::{EpsilonRule, MixKind, MixPolicy, PasteFilter, Variant};
use contextmix::rng::DEFAULT_SEED;
use contextmix::trainer::Arch;

mod commands;

#[derive(Debug, Parser)]
#[command(name = "contextmix", version, about = "Image mixing augmentation and desk-scale experiments")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Worker threads. Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,

    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mix batches drawn from a manifest and write the images plus mix records.
    Augment(AugmentArgs),
    /// Histogram of occluded areas before and after box clipping.
    Areas(AreasArgs),
    /// Generate a synthetic long-tailed inspection dataset.
    Synth(SynthArgs),
    /// Train a classifier.
    Train(TrainArgs),
    /// Evaluate a trained model on a manifest.
    Eval(EvalArgs),
    /// Run the per-component inspection decision over a manifest.
    Inspect(InspectArgs),
    /// Train once per resize ratio and tabulate the final metrics.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
struct PolicyArgs {
    /// none, contextmix, cutmix, mixup or cutout.
    #[arg(long)]
    policy: Option<MixKind>,

    /// Beta distribution parameter.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,

    /// contextmix variant, e.g. square_region or fixed_size:0.75.
    #[arg(long)]
    variant: Option<Variant>,

    /// Resize ratio for contextmix: `fit` or a number in (0, 4].
    #[arg(long)]
    epsilon: Option<EpsilonRule>,

    /// Paste filter, e.g. blur:1.0@occluded or erode:1@resized.
    #[arg(long)]
    filter: Option<PasteFilter>,

    /// Use this mixing ratio instead of sampling one.
    #[arg(long)]
    lambda: Option<f64>,

    /// Draw one box per image instead of one per batch.
    #[arg(long)]
    per_image: bool,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    manifest: PathBuf,

    #[command(flatten)]
    policy: PolicyArgs,

    #[arg(long, default_value_t = 1)]
    n_batches: u64,

    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: u64,
}

#[derive(Debug, Args)]
struct AreasArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,

    #[arg(long, default_value_t = 224, value_parser = clap::value_parser!(u64).range(1..))]
    width: u64,

    #[arg(long, default_value_t = 224, value_parser = clap::value_parser!(u64).range(1..))]
    height: u64,

    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,

    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    bins: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Preset {
    /// 5,000 grayscale 16x16 images in ten classes.
    Desk,
    /// 52,304 RGB 32x32 images in ten classes.
    Industrial,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,

    /// Per-class image counts, majority (normal) class first.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<u64>>,

    #[arg(long)]
    image_size: Option<usize>,

    #[arg(long)]
    channels: Option<usize>,

    #[arg(long)]
    noise_std: Option<f64>,

    #[arg(long)]
    max_defect_fraction: Option<f64>,

    /// Size of the validation split relative to the training split; 0 skips it.
    #[arg(long, default_value_t = 0.1)]
    valid_fraction: f64,

    /// Minimum validation images per class.
    #[arg(long, default_value_t = 20)]
    valid_min: u64,
}

#[derive(Debug, Clone, Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,

    /// Validation manifest; the clean training set is used when absent.
    #[arg(long)]
    valid: Option<PathBuf>,

    /// `linear`, `mlp` or `mlp:<hidden>`.
    #[arg(long, default_value = "mlp:64")]
    arch: Arch,

    #[arg(long, default_value_t = 40)]
    epochs: usize,

    #[arg(long, default_value_t = 64)]
    batch_size: usize,

    #[arg(long, default_value_t = 0.1)]
    lr: f64,

    #[arg(long, value_delimiter = ',', default_value = "20,30")]
    lr_decay_epochs: Vec<usize>,

    #[arg(long, default_value_t = 0.1)]
    lr_decay_factor: f64,

    #[arg(long)]
    no_shuffle: bool,

    #[arg(long)]
    no_standardize: bool,

    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,

    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,

    /// Surface images; consecutive groups of `--surfaces` entries form one component.
    #[arg(long)]
    manifest: PathBuf,

    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    surfaces: u64,

    #[arg(long, default_value_t = 0)]
    normal_class: usize,

    /// Region to classify in every surface as `xs,ys,xe,ye`; whole image by default.
    #[arg(long, value_delimiter = ',')]
    roi: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma separated resize ratios; `fit` sizes the resized image to the box.
    #[arg(long, value_delimiter = ',', required = true)]
    epsilons: Vec<String>,

    #[command(flatten)]
    train: TrainArgs,
}

/// Bad flag combinations found after parsing; reported with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl PolicyArgs {
    fn build(&self, default: MixKind) -> anyhow::Result<MixPolicy> {
        let kind = self.policy.unwrap_or(default);
        let mut policy = MixPolicy::new(kind).with_alpha(self.alpha).with_per_image_boxes(self.per_image);
        policy.variant = self.variant;
        policy.epsilon = self.epsilon;
        policy.filter = self.filter;
        policy.fixed_lambda = self.lambda;
        policy.validate().map_err(|e| usage(format!("--policy {kind}: {e}")))?;
        Ok(policy)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads as usize)
        .build_global()
    {
        eprintln!("error: cannot start worker pool: {e}");
        return ExitCode::from(1);
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let cause = cause.to_string();
                if !msg.contains(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
