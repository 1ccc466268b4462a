//! Command-line front end: `train`, `generate` and `score`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid invocation.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{filter_class, read_labelled, read_pgm, write_pgm, IMAGE_PIXELS};
use crate::error::Error;
use crate::gan::{self, Ablations, Mode, TrainConfig};
use crate::linalg::Matrix;
use crate::metrics::{extract_features, frechet_distance_samples, FeatureMode};

#[derive(Debug, Parser)]
#[command(name = "organiq", version, about = "Quantum GAN training, sampling and scoring")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on one class of an IDX dataset.
    Train(TrainArgs),
    /// Sample images from a trained model as PGM files.
    Generate(GenerateArgs),
    /// Fréchet distance between generated PGMs and one class of real images.
    Score(ScoreArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Organiq,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeaturesArg {
    Pixels,
    Pca,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=9))]
    pub class: u8,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "organiq")]
    pub mode: ModeArg,
    #[arg(long)]
    pub no_combined: bool,
    #[arg(long)]
    pub no_regularization: bool,
    #[arg(long)]
    pub no_injection: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[arg(long, default_value_t = 20)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr_g: f64,
    #[arg(long, default_value_t = 0.05)]
    pub lr_d: f64,
    /// Loss-history CSV (default: next to the model file).
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long, default_value_t = 25)]
    pub eval_every: usize,
    #[arg(long, default_value_t = 50)]
    pub eval_count: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub count: u32,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub real_images: PathBuf,
    #[arg(long)]
    pub real_labels: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=9))]
    pub class: u8,
    #[arg(long)]
    pub generated: PathBuf,
    #[arg(long, value_enum, default_value = "pixels")]
    pub features: FeaturesArg,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Runtime(err) => eprintln!("error: {err}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Generate(args) => cmd_generate(&args),
        Command::Score(args) => cmd_score(&args),
    }
}

fn train_config(args: &TrainArgs) -> TrainConfig {
    let mode = match args.mode {
        ModeArg::Organiq => Mode::OrganiQ,
        ModeArg::Baseline => Mode::Baseline,
    };
    let mut ablations = Ablations {
        no_combined: args.no_combined,
        no_regularization: args.no_regularization,
        no_injection: args.no_injection,
    };
    if mode == Mode::Baseline && ablations.any() {
        warn!("ablation flags have no effect in baseline mode and are ignored");
        ablations = Ablations::default();
    }
    TrainConfig {
        iterations: args.iters,
        batch_size: args.batch,
        lr_g: args.lr_g,
        lr_d: args.lr_d,
        seed: args.seed,
        mode,
        ablations,
        eval_every: args.eval_every,
        eval_count: args.eval_count,
        dataset_class: args.class,
        ..TrainConfig::default()
    }
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let config = train_config(args);
    let history_path = args
        .history
        .clone()
        .unwrap_or_else(|| args.out.with_extension("history.csv"));
    eprintln!(
        "train: {} images={} labels={} out={} history={}",
        serde_json::to_string(&config).map_err(Error::from)?,
        args.images.display(),
        args.labels.display(),
        args.out.display(),
        history_path.display()
    );
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let set = read_labelled(&args.images, &args.labels)?;
    let class = filter_class(&set, args.class)?;
    info!("{} images of class {}", class.len(), args.class);
    let outcome = gan::train(&config, &class.images)?;
    gan::save_model(&outcome.model, &args.out)?;
    gan::write_history(&outcome.history, &history_path)?;

    let show = |f: Option<f64>| f.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
    println!("final_frechet {}", show(outcome.final_frechet));
    println!("best_frechet {}", show(outcome.best_frechet));
    if let Some(it) = outcome.best_iteration {
        println!("best_iteration {}", it + 1);
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    eprintln!(
        "generate: model={} count={} out_dir={} seed={}",
        args.model.display(),
        args.count,
        args.out_dir.display(),
        args.seed
    );
    let model = gan::load_model(&args.model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let images = gan::infer(&model, args.count as usize, &mut rng)?;
    fs::create_dir_all(&args.out_dir).map_err(Error::from)?;
    let mut manifest = String::from("filename,seed\n");
    for (i, image) in images.row_iter().enumerate() {
        let name = format!("img_{i:05}.pgm");
        write_pgm(image, args.out_dir.join(&name))?;
        manifest.push_str(&format!("{name},{}\n", args.seed));
    }
    fs::write(args.out_dir.join("manifest.csv"), manifest).map_err(Error::from)?;
    info!("wrote {} images to {}", images.rows(), args.out_dir.display());
    Ok(())
}

/// All `*.pgm` files of a directory in file-name order.
fn read_pgm_dir(dir: &Path) -> crate::error::Result<Matrix> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "pgm"));
    paths.sort();
    let rows = paths.iter().map(read_pgm).collect::<crate::error::Result<Vec<_>>>()?;
    Matrix::from_rows(&rows, IMAGE_PIXELS)
}

fn cmd_score(args: &ScoreArgs) -> Result<(), CliError> {
    eprintln!(
        "score: real_images={} real_labels={} class={} generated={} features={:?} model={}",
        args.real_images.display(),
        args.real_labels.display(),
        args.class,
        args.generated.display(),
        args.features,
        args.model
            .as_deref()
            .map_or_else(|| "-".into(), |p| p.display().to_string())
    );
    let model = match (args.features, &args.model) {
        (FeaturesArg::Pca, None) => return Err(CliError::Usage("--features pca requires --model".into())),
        (FeaturesArg::Pixels, Some(_)) => {
            return Err(CliError::Usage("--model is only used with --features pca".into()))
        }
        (FeaturesArg::Pca, Some(path)) => Some(gan::load_model(path)?),
        (FeaturesArg::Pixels, None) => None,
    };
    let real = filter_class(&read_labelled(&args.real_images, &args.real_labels)?, args.class)?;
    let generated = read_pgm_dir(&args.generated)?;
    let mode = match &model {
        Some(m) => FeatureMode::PcaScores(&m.pca),
        None => FeatureMode::Pixels,
    };
    let distance = frechet_distance_samples(
        &extract_features(&generated, mode)?,
        &extract_features(&real.images, mode)?,
    )?;
    println!("{distance:.6}");
    Ok(())
}
