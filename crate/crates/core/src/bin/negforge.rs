use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use negforge::mask::Granularity;
use negforge::pipeline::{cmd_augment, cmd_eval, cmd_filter, cmd_mask, cmd_run, Overrides, PipelineError, RunConfig};

/// Negation augmentation over dependency-parsed corpora.
#[derive(Parser)]
#[command(name = "negforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Propose masked sentences from CoNLL-U (or JSONL with a conllu field).
    Mask,
    /// Generate, fill and filter negations for masked records.
    Augment,
    /// Re-filter stored generations without generating again.
    Filter,
    /// Compute the evaluation report over filtered records.
    Eval,
    /// Mask, augment and evaluate in one pass.
    Run,
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    Token,
    Subtree,
}

#[derive(Args)]
struct Opts {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Remote generation server; also read from NEGFORGE_BACKEND_URL.
    #[arg(long, global = true, value_name = "URL")]
    backend_url: Option<String>,
    #[arg(long, global = true, value_enum)]
    granularity: Option<GranularityArg>,
    /// Negations kept per sentence.
    #[arg(long, global = true, value_name = "N")]
    epsilon: Option<usize>,
    /// Normalized edit-distance bound (exclusive).
    #[arg(long, global = true, value_name = "B")]
    threshold: Option<f64>,
    /// Use the built-in rule-based negator.
    #[arg(long, global = true)]
    offline: bool,
    #[arg(short, long, global = true, value_name = "PATH")]
    input: Option<PathBuf>,
    #[arg(short, long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// CoNLL-U parses of generated sentences for the syntactic distance.
    #[arg(long, global = true, value_name = "PATH")]
    parses: Option<PathBuf>,
    /// Where to write the evaluation report.
    #[arg(long, global = true, value_name = "PATH")]
    report: Option<PathBuf>,
}

impl Opts {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            backend_url: self.backend_url.clone(),
            granularity: self.granularity.map(|g| match g {
                GranularityArg::Token => Granularity::Token,
                GranularityArg::Subtree => Granularity::Subtree,
            }),
            epsilon: self.epsilon,
            threshold: self.threshold,
            offline: self.offline,
            workers: self.workers,
            input: self.input.clone(),
            output: self.output.clone(),
            parses: self.parses.clone(),
            report: self.report.clone(),
        }
    }
}

fn execute(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = RunConfig::resolve(cli.opts.config.as_deref(), cli.opts.overrides())?;
    match cli.command {
        Command::Mask => eprintln!("mask: {}", cmd_mask(&cfg)?),
        Command::Augment => eprintln!("augment: {}", cmd_augment(&cfg)?),
        Command::Filter => eprintln!("filter: {}", cmd_filter(&cfg)?),
        Command::Eval => eprint!("{}", cmd_eval(&cfg)?.to_table()),
        Command::Run => {
            let (summary, report) = cmd_run(&cfg)?;
            eprintln!("run: {summary}");
            eprint!("{}", report.to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("negforge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
