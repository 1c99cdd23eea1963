//! radgate — CT radiomics quality gate and feature exploration, end to end:
//! describe/check a DICOM dataset, convert it to NRRD volumes and masks,
//! preprocess, extract features, and analyze them against an outcome.

mod commands;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Errors are split by exit code: bad input or configuration exits 1,
/// filesystem trouble exits 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    fn validation(msg: impl fmt::Display) -> CliError {
        CliError::Validation(msg.to_string())
    }

    fn io(msg: impl fmt::Display) -> CliError {
        CliError::Io(msg.to_string())
    }

    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(1),
            CliError::Io(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

/// Every log line carries the subcommand it came from.
pub fn log(sub: &str, msg: impl fmt::Display) {
    println!("[{sub}] {msg}");
}

#[derive(Parser)]
#[command(name = "radgate", version, about = "CT radiomics quality gate and feature explorer")]
struct Cli {
    /// Worker threads for patient-level parallelism (falls back to the
    /// RADGATE_JOBS environment variable, then to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a DICOM dataset: files, series, acquisition parameters.
    Describe(DescribeArgs),
    /// Run the quality checks against a dataset and write the report.
    Check(CheckArgs),
    /// Convert DICOM series and RT structure sets to NRRD volumes and masks.
    Convert(ConvertArgs),
    /// Apply a preprocessing chain to converted volumes.
    Preprocess(PreprocessArgs),
    /// Export per-slice overlay images for visual inspection.
    Unroll(UnrollArgs),
    /// Extract radiomics features from converted volumes and masks.
    Extract(ExtractArgs),
    /// Statistics and plots for a feature table against an outcome.
    Analyze(AnalyzeArgs),
    /// Generate the seeded synthetic dataset used by tests and demos.
    GenFixtures(GenFixturesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DescribeModeArg {
    /// One row per file.
    Files,
    /// One row per CT series with acquisition parameters.
    Ct,
}

#[derive(Args)]
struct DescribeArgs {
    /// Dataset root directory (DICOM files, nested freely).
    #[arg(long)]
    root: PathBuf,
    /// Table flavor.
    #[arg(long, value_enum, default_value = "files")]
    mode: DescribeModeArg,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Dataset root directory.
    #[arg(long)]
    root: PathBuf,
    /// Quality spec JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Output CSV path for the per-series report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    /// Dataset root directory.
    #[arg(long)]
    root: PathBuf,
    /// Output directory; volumes land in `<out>/converted_nrrds/<patient>/`.
    #[arg(long)]
    out: PathBuf,
    /// Only rasterize the ROI with this exact name (written as mask.nrrd).
    /// Without it, every ROI is written as its own mask file.
    #[arg(long)]
    roi: Option<String>,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Directory of converted patients (`<root>/<patient>/image.nrrd`).
    #[arg(long)]
    root: PathBuf,
    /// Preprocess chain JSON.
    #[arg(long)]
    params: PathBuf,
    /// Output directory, same layout as the input.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UnrollArgs {
    /// Directory of converted patients (`<root>/<patient>/image.nrrd`).
    #[arg(long)]
    root: PathBuf,
    /// Output directory; slices land in `<out>/images_quick_check/<patient>/`.
    #[arg(long)]
    out: PathBuf,
    /// Intensity window `lo:hi` (defaults to the volume's full range).
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Skip mask overlays even when masks are present.
    #[arg(long)]
    no_mask: bool,
}

#[derive(Args)]
struct ExtractArgs {
    /// Directory of converted patients with masks.
    #[arg(long)]
    root: PathBuf,
    /// Extraction parameters JSON.
    #[arg(long)]
    params: PathBuf,
    /// Output CSV path for the feature table.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Feature table CSV (first column = patient id).
    #[arg(long)]
    features: PathBuf,
    /// Optional clinical CSV merged on patient id.
    #[arg(long)]
    clinical: Option<PathBuf>,
    /// Outcome column name.
    #[arg(long)]
    outcome: String,
    /// Volume column name for the correlation/PR views.
    #[arg(long)]
    volume: Option<String>,
    /// Feature shown in the class-distribution histogram (defaults to the
    /// volume column, else the first feature alphabetically).
    #[arg(long)]
    hist_feature: Option<String>,
    /// Output directory for the report files.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    /// Drop rows (patients) or columns (features) containing missing values.
    #[arg(long, value_enum, default_value = "patients")]
    nan_axis: NanAxisArg,
    /// Significance level for the Mann-Whitney tests.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// AUC highlight threshold.
    #[arg(long, default_value_t = 0.70)]
    auc_threshold: f64,
    /// |Spearman rho| highlight threshold for volume correlation.
    #[arg(long, default_value_t = 0.75)]
    corr_threshold: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum NanAxisArg {
    Patients,
    Features,
}

#[derive(Args)]
struct GenFixturesArgs {
    /// Output directory for the fixture tree.
    #[arg(long)]
    out: PathBuf,
    /// Generator seed; equal seeds give byte-identical trees.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn resolve_jobs(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("RADGATE_JOBS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version are successful exits; anything else is a usage
            // error and must exit 1
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    if let Some(n) = resolve_jobs(cli.jobs) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("[radgate] could not size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match &cli.command {
        Command::Describe(args) => commands::describe(args),
        Command::Check(args) => commands::check(args),
        Command::Convert(args) => commands::convert(args),
        Command::Preprocess(args) => commands::preprocess(args),
        Command::Unroll(args) => commands::unroll(args),
        Command::Extract(args) => commands::extract(args),
        Command::Analyze(args) => commands::analyze(args),
        Command::GenFixtures(args) => commands::gen_fixtures(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let sub = match &cli.command {
                Command::Describe(_) => "describe",
                Command::Check(_) => "check",
                Command::Convert(_) => "convert",
                Command::Preprocess(_) => "preprocess",
                Command::Unroll(_) => "unroll",
                Command::Extract(_) => "extract",
                Command::Analyze(_) => "analyze",
                Command::GenFixtures(_) => "gen-fixtures",
            };
            eprintln!("[{sub}] error: {}", e.message());
            e.exit_code()
        }
    }
}
