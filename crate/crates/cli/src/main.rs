use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairrep_cli::stages::{self, StageOutput};
use fairrep_cli::{pipeline, CliError, PipelineConfig};

#[derive(Parser)]
#[command(name = "fairrep", version, about = "Mixed-type tabular embeddings with sensitive-attribute removal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode the raw CSV and draw the stratified split.
    Prepare(Common),
    /// Train both cross-reconstruction networks and write the representation.
    TrainEmbed(Common),
    /// Remove the sensitive directions from the rank-k representation.
    Debias(Common),
    /// Probe accuracy, ROC AUC and group fairness for both representations.
    Evaluate(Common),
    /// Run all stages in order and write the run manifest.
    Pipeline(Common),
}

fn print_stage(out: &StageOutput) {
    println!("{}: wrote {} artifacts to {}", out.stage, out.artifacts.len(), out.dir.display());
    for (k, v) in &out.facts.0 {
        println!("  {k} = {v}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, step): (&Common, Option<fn(&PipelineConfig) -> Result<StageOutput, CliError>>) = match &cli.command {
        Command::Prepare(c) => (c, Some(stages::prepare)),
        Command::TrainEmbed(c) => (c, Some(stages::train_embed)),
        Command::Debias(c) => (c, Some(stages::debias)),
        Command::Evaluate(c) => (c, Some(stages::evaluate)),
        Command::Pipeline(c) => (c, None),
    };
    let cfg = PipelineConfig::load(&common.config, common.seed, common.out.as_deref())?;
    match step {
        Some(step) => print_stage(&step(&cfg)?),
        None => {
            let manifest = pipeline(&cfg)?;
            println!("pipeline complete: {}", cfg.output.dir.join(fairrep_cli::manifest::MANIFEST_FILE).display());
            for (k, v) in manifest.entries.0.iter().filter(|(k, _)| k.starts_with("evaluate.")) {
                println!("  {k} = {v}");
            }
            if let Some(total) = manifest.timing.get("time.total_seconds") {
                println!("  total_seconds = {total}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
