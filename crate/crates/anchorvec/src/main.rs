use std::path::PathBuf;
use std::process::ExitCode;

use anchorvec::commands;
use anchorvec::config::{load_config_file, RunConfig};
use anchorvec::AppResult;
use clap::{Args, Parser, Subcommand};

/// Word embeddings with one interpretable dimension, tied to a concept by
/// priors on anchor words.
///
/// Every key can be set in a TOML file passed with `--config` and
/// overridden on the command line (`sigma_d` in the file is `--sigma-d`).
#[derive(Parser)]
#[command(name = "anchorvec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with configuration keys; command-line flags take
    /// precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(flatten)]
    keys: RunConfig,
}

impl Common {
    fn merged(self) -> AppResult<RunConfig> {
        let base = match &self.config {
            Some(p) => load_config_file(p)?,
            None => RunConfig::default(),
        };
        Ok(base.merge(self.keys))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a manifest's text files into a token cache and vocabulary.
    Preprocess(Common),
    /// Fit a static model; writes a new run directory under `out_dir`.
    Train(Common),
    /// Fit a dynamic model with one embedding matrix per slice.
    TrainDynamic(Common),
    /// Hold-out sign accuracy on the interpretable dimension.
    Eval(Common),
    /// Hold-out accuracy of the antonym-subtraction baseline.
    EvalSota(Common),
    /// Export interpretable-dimension trajectories from a dynamic model.
    Trajectory(Common),
    /// Generate a planted-dimension corpus with anchor and hold-out files.
    Synth(Common),
}

fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Preprocess(c) => {
            let cfg = c.merged()?;
            let s = commands::preprocess(cfg)?;
            let cache = anchorvec::formats::read_cache(&s.cache_dir)?;
            let labels: Vec<String> = cache.corpus.labels().map(str::to_owned).collect();
            println!("{}", s.describe(&labels));
        }
        Command::Train(c) => report_train(commands::train(c.merged()?, false)?),
        Command::TrainDynamic(c) => report_train(commands::train(c.merged()?, true)?),
        Command::Eval(c) => report_eval(commands::eval(c.merged()?, false)?),
        Command::EvalSota(c) => report_eval(commands::eval(c.merged()?, true)?),
        Command::Trajectory(c) => {
            for (word, path) in commands::trajectories(c.merged()?)? {
                println!("{word}: {}", path.display());
            }
        }
        Command::Synth(c) => {
            let s = commands::synth(c.merged()?)?;
            println!("manifest: {}", s.manifest.display());
            println!("anchors: {}", s.anchors.display());
            println!("holdout: {}", s.holdout.display());
            println!("truth: {}", s.truth.display());
        }
    }
    Ok(())
}

fn report_train(s: commands::TrainSummary) {
    let resolved = s.resolution.resolved.len();
    let missing = s.resolution.missing.len();
    println!("anchors: {resolved} resolved, {missing} not in vocabulary");
    if let Some(e) = s.epochs.last() {
        println!(
            "final objective: {:.6e} after {} steps",
            e.objective, s.steps
        );
    }
    println!("run directory: {}", s.run_dir.display());
}

fn report_eval(s: commands::EvalSummary) {
    let r = &s.report;
    println!(
        "n = {}: rho {:.4} [{:.4}, {:.4}], alpha {:.4}, joint {:.4}",
        r.n, r.accuracy_rho, r.ci_rho[0], r.ci_rho[1], r.accuracy_alpha, r.accuracy_joint
    );
    println!("report: {}", s.json_path.display());
    println!("per word: {}", s.words_path.display());
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
