use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mzsim_cli::{
    cmd_compare, cmd_run, cmd_scan_phase, CmdOutput, Engine, Format, Input, RunConfig, DEFAULT_SEED, DEFAULT_TRIALS,
};
use mzsim_core::stats::DEFAULT_ALPHA;

#[derive(Parser)]
#[command(name = "mzsim", version, about = "Interferometer simulator: analytic amplitudes and sampled particles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the outcome distribution, or sample an ensemble.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = EngineArg::Analytic)]
        engine: EngineArg,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Print the canonical DSL for the input and exit.
        #[arg(long)]
        emit_dsl: bool,
    },
    /// Sample an ensemble and test it against the prediction.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// JSON object of label -> probability used instead of the analytic result.
        #[arg(long, value_name = "PATH")]
        predicted: Option<PathBuf>,
    },
    /// Tabulate the distribution while a phase stage is swept over [0, 2 pi).
    ScanPhase {
        #[command(flatten)]
        input: InputArgs,
        /// 1-based stage position of the phase device.
        #[arg(long)]
        stage: usize,
        #[arg(long)]
        points: usize,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputArgs {
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,
}

impl InputArgs {
    fn resolve(self) -> Input {
        match (self.builtin, self.file) {
            (Some(name), _) => Input::Builtin(name),
            (None, Some(path)) => Input::File(path),
            (None, None) => unreachable!("clap enforces one input"),
        }
    }
}

#[derive(Args)]
struct SamplingArgs {
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Analytic,
    Sample,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out: CmdOutput = match cli.command {
        Command::Run {
            input,
            engine,
            sampling,
            format,
            emit_dsl,
        } => cmd_run(&RunConfig {
            engine: match engine {
                EngineArg::Analytic => Engine::Analytic,
                EngineArg::Sample => Engine::Sample,
            },
            trials: sampling.trials,
            seed: sampling.seed,
            format: format.into(),
            emit_dsl,
            ..RunConfig::new(input.resolve())
        }),
        Command::Compare {
            input,
            sampling,
            alpha,
            format,
            predicted,
        } => cmd_compare(
            &RunConfig {
                trials: sampling.trials,
                seed: sampling.seed,
                alpha,
                format: format.into(),
                ..RunConfig::new(input.resolve())
            },
            predicted.as_deref(),
        ),
        Command::ScanPhase {
            input,
            stage,
            points,
            format,
        } => cmd_scan_phase(&input.resolve(), stage, points, format.into()),
    };
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
