//! `nilm`: command-line front end for the disaggregation pipeline.

mod commands;
mod config;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nilm_core::series::Appliance;
use nilm_core::training::ModelVariant;

use workspace::{Invalid, Workspace};

#[derive(Parser)]
#[command(name = "nilm", version, about = "Non-intrusive load monitoring: datasets, training, selection and evaluation")]
struct Cli {
    /// Workspace root; all configured paths are relative to it.
    #[arg(long, env = "NILM_ROOT", default_value = ".", global = true)]
    root: PathBuf,
    /// JSON config file (default: <root>/nilm.json when present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the root seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a series CSV or a raw waveform into a canonical 6 s series file.
    Ingest(IngestArgs),
    /// Write a synthetic corpus of houses into the recordings directory.
    SynthCorpus(SynthArgs),
    /// Dataset operations.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Train a model over the optimizer grid.
    Train(TrainArgs),
    /// Pick the best model per appliance from the run ledger.
    Select(SelectArgs),
    /// Rolling-window disaggregation of an aggregate series.
    Predict(PredictArgs),
    /// Evaluate a trained model.
    Evaluate(EvaluateArgs),
    /// Waveform feature study: feature matrix, importances, classifier benchmark.
    Features(FeaturesArgs),
    /// Merge evaluation reports into summary tables.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct IngestArgs {
    /// Series CSV, or a waveform sidecar JSON with --hf.
    #[arg(long)]
    pub input: PathBuf,
    /// Reduce a raw voltage/current waveform to power, form factor and phase shift.
    #[arg(long)]
    pub hf: bool,
    /// House directory name under the recordings path.
    #[arg(long, required_unless_present = "output")]
    pub house: Option<String>,
    /// Series name: `aggregate` or an appliance name.
    #[arg(long, default_value = "aggregate")]
    pub name: String,
    /// Explicit output file instead of <recordings>/<house>/<name>.csv.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Source sampling period in seconds (inferred when omitted).
    #[arg(long)]
    pub period: Option<f64>,
    /// Current RMS (A) below which descriptor channels are neutral (--hf).
    #[arg(long, default_value_t = 0.01)]
    pub current_floor: f64,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    pub houses: usize,
    #[arg(long, default_value_t = 28.0)]
    pub days: f64,
    /// Also write form-factor and phase-shift channels.
    #[arg(long)]
    pub hf: bool,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Build train/validation/test windows for one appliance.
    Build(DatasetBuildArgs),
}

#[derive(Args)]
pub struct DatasetBuildArgs {
    #[arg(long)]
    pub appliance: Appliance,
    /// Use the three-channel aggregate (power, form factor, phase shift).
    #[arg(long)]
    pub hf: bool,
    /// Skip synthetic training windows even if enabled in the config.
    #[arg(long)]
    pub no_augment: bool,
    /// House held out as test set I (overrides the config).
    #[arg(long)]
    pub test_house: Option<String>,
    /// Window length in samples (overrides the appliance table).
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    All,
    One(ModelVariant),
}

fn parse_model_choice(s: &str) -> Result<ModelChoice, String> {
    if s == "all" {
        Ok(ModelChoice::All)
    } else {
        s.parse().map(ModelChoice::One).map_err(|e: nilm_core::Error| e.to_string())
    }
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub appliance: Appliance,
    /// Model variant, or `all` for the seven variants.
    #[arg(long, value_parser = parse_model_choice)]
    pub model: ModelChoice,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Grid points trained in parallel.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Reseeded attempts for a diverged run.
    #[arg(long)]
    pub retries: Option<usize>,
    /// Print per-epoch losses.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Args)]
pub struct SelectArgs {
    /// Run ledger (default: <runs>/ledger.jsonl).
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Restrict to one appliance.
    #[arg(long)]
    pub appliance: Option<Appliance>,
}

#[derive(Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub appliance: Appliance,
    /// Use the best grid point of this model instead of the selected one.
    #[arg(long)]
    pub model: Option<ModelVariant>,
    /// Use this weights file directly.
    #[arg(long, conflicts_with = "model")]
    pub weights: Option<PathBuf>,
}

#[derive(Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Aggregate series CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Predicted appliance power CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Mean activation length in samples (default: from the dataset).
    #[arg(long)]
    pub mean_activation_len: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcedureArg {
    Activations,
    Rolling,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Val,
    TestI,
    TestIi,
}

impl SplitArg {
    pub fn name(self) -> &'static str {
        match self {
            SplitArg::Val => "val",
            SplitArg::TestI => "test_i",
            SplitArg::TestIi => "test_ii",
        }
    }
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub procedure: ProcedureArg,
    /// Window set for the activations procedure.
    #[arg(long, value_enum, default_value = "test-i")]
    pub split: SplitArg,
    /// Aggregate CSV for the rolling procedure (default: the test house).
    #[arg(long, requires = "truth")]
    pub input: Option<PathBuf>,
    /// Submeter CSV matching --input.
    #[arg(long, requires = "input")]
    pub truth: Option<PathBuf>,
    /// Detection threshold in W (default: the one chosen on validation).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub mean_activation_len: Option<f64>,
    /// Report file (default: <reports>/<appliance>-<model>-<procedure>-<split>.json).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write aggregate, truth and prediction side by side (rolling only).
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Args)]
pub struct FeaturesArgs {
    /// Directory of waveform sidecar JSON files.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory (default: <reports>/features).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Directory of report JSON files (default: <reports>).
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Output directory (default: <dir>/summary).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut ws = Workspace::open(&cli.root, cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        ws.config.seed = seed;
    }
    match cli.command {
        Command::Ingest(a) => commands::ingest(&ws, &a),
        Command::SynthCorpus(a) => commands::synth_corpus(&ws, &a),
        Command::Dataset {
            command: DatasetCommand::Build(a),
        } => commands::dataset_build(&ws, &a),
        Command::Train(a) => commands::train(&ws, &a),
        Command::Select(a) => commands::select(&ws, &a),
        Command::Predict(a) => commands::predict(&ws, &a),
        Command::Evaluate(a) => commands::evaluate(&ws, &a),
        Command::Features(a) => commands::features(&ws, &a),
        Command::Report(a) => commands::report(&ws, &a),
    }
}

/// 2 for invalid input, 1 for failures while running.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Invalid>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<nilm_core::Error>() {
            use nilm_core::Error as E;
            return match e {
                E::InvalidArgument(_)
                | E::UnknownAppliance(_)
                | E::Config(_)
                | E::Parse { .. }
                | E::Corrupt(_)
                | E::Version { .. }
                | E::ShapeMismatch(_)
                | E::LengthMismatch { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
