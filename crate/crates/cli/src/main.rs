use std::io::{self, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mindprobe_cli::commands::{self, AblateArgs, EvalMode, EvaluateArgs, GenerateArgs, TrainArgs};
use mindprobe_cli::model::{ModelArchive, ModelKind};
use mindprobe_cli::report::{self, ReportArgs};
use mindprobe_cli::{diagnose, style, CliResult};
use mindprobe_core::ablation::OcclusionMode;

#[derive(Parser)]
#[command(
    name = "mindprobe",
    version,
    about = "Questionnaire-based classification and question ablation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Occlusion {
    Mean,
    Zero,
}

impl From<Occlusion> for OcclusionMode {
    fn from(o: Occlusion) -> Self {
        match o {
            Occlusion::Mean => OcclusionMode::MeanImpute,
            Occlusion::Zero => OcclusionMode::ZeroFill,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic response cohort
    Generate {
        /// `builtin` or a questionnaire JSON file
        #[arg(long, default_value = "builtin")]
        survey: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML file with `driver`, `flip` and `[[couplings]]`
        #[arg(long)]
        signal: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier and save it as an archive
    Train {
        #[arg(long, value_enum)]
        kind: ModelKind,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "builtin")]
        survey: String,
        /// TOML training settings
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy and confusion matrix on held-out data
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "builtin")]
        survey: String,
        #[arg(long, value_enum, default_value = "kfold")]
        mode: EvalMode,
        /// Train/validation/test proportions for holdout, e.g. `204,44,44`
        #[arg(long, value_parser = commands::parse_ratios)]
        ratios: Option<[f64; 3]>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Accuracy with each question and each pair of questions removed
    Ablate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "builtin")]
        survey: String,
        #[arg(long, value_enum, default_value = "mean")]
        occlusion: Occlusion,
        #[arg(long)]
        out: PathBuf,
    },
    /// Critical questions and dependencies from an ablation matrix
    Interpret {
        #[arg(
            required_unless_present = "builtin_table3",
            conflicts_with = "builtin_table3"
        )]
        matrix: Option<PathBuf>,
        /// Use the published survey results instead of a file
        #[arg(long)]
        builtin_table3: bool,
        #[arg(long, default_value_t = 0.25)]
        threshold: f64,
    },
    /// Answer the questionnaire and get a prediction
    Diagnose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "builtin")]
        survey: String,
    },
    /// Markdown report with evaluation, ablation matrix and dependencies
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "builtin")]
        survey: String,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.25)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "mean")]
        occlusion: Occlusion,
    },
}

fn run(cmd: Command) -> CliResult<String> {
    match cmd {
        Command::Generate {
            survey,
            n,
            seed,
            signal,
            out,
        } => commands::generate(&GenerateArgs {
            survey,
            n,
            seed,
            signal,
            out,
        }),
        Command::Train {
            kind,
            data,
            survey,
            config,
            seed,
            out,
        } => commands::train(&TrainArgs {
            kind,
            data,
            survey,
            config,
            seed,
            out,
        }),
        Command::Evaluate {
            model,
            data,
            survey,
            mode,
            ratios,
            k,
            seed,
        } => commands::evaluate_cmd(&EvaluateArgs {
            model,
            data,
            survey,
            mode,
            ratios,
            k,
            seed,
        }),
        Command::Ablate {
            model,
            data,
            survey,
            occlusion,
            out,
        } => commands::ablate(&AblateArgs {
            model,
            data,
            survey,
            occlusion: occlusion.into(),
            out,
        }),
        Command::Interpret {
            matrix,
            builtin_table3,
            threshold,
        } => commands::interpret_cmd(matrix.as_deref(), builtin_table3, threshold),
        Command::Diagnose { model, survey } => {
            let archive = ModelArchive::load(&model)?;
            let q = commands::load_survey(&survey)?;
            let stdin = io::stdin();
            let interactive = stdin.is_terminal();
            let mut out = Vec::new();
            diagnose::run(
                &archive,
                &q,
                stdin.lock(),
                &mut out,
                &mut io::stderr(),
                interactive,
            )?;
            Ok(String::from_utf8_lossy(&out).into_owned())
        }
        Command::Report {
            model,
            data,
            survey,
            out_dir,
            k,
            seed,
            threshold,
            occlusion,
        } => report::report(&ReportArgs {
            model,
            data,
            survey,
            out_dir,
            k,
            seed,
            threshold,
            occlusion: occlusion.into(),
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(text) => {
            let mut stdout = io::stdout().lock();
            if stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{} {e}", style::error_label());
            ExitCode::FAILURE
        }
    }
}
