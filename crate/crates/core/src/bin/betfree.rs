use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use betfree::bench::{run_experiment, ExperimentConfig, OptimizerKind, TargetMode};
use betfree::oracle::run_suite;

#[derive(Parser)]
#[command(name = "betfree", version, about = "Coin-betting learners: synthetic experiments and numeric checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one synthetic absolute-loss experiment and write its CSV.
    Run(RunArgs),
    /// Run the randomized numeric property suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// recursive, diag, doubling1d or adagrad
    #[arg(long, default_value = "recursive")]
    optimizer: OptimizerKind,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, default_value_t = 20_000)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Learning rate (adagrad only)
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 750.0)]
    cond_number: f64,
    /// min-eig or max-eig
    #[arg(long, default_value = "min-eig")]
    target: TargetMode,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    gmax_scale: bool,
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    momentum: bool,
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    init_clamp: bool,
    #[arg(long, default_value_t = 1000)]
    holdout: usize,
    #[arg(long, default_value_t = 100)]
    eval_every: u64,
    #[arg(long)]
    out: PathBuf,
}

impl From<RunArgs> for ExperimentConfig {
    fn from(a: RunArgs) -> Self {
        ExperimentConfig {
            optimizer: a.optimizer,
            dim: a.dim,
            steps: a.steps,
            seed: a.seed,
            epsilon: a.epsilon,
            eta: a.eta,
            learning_rate: a.lr,
            cond_number: a.cond_number,
            target_mode: a.target,
            gmax_scale: a.gmax_scale,
            momentum: a.momentum,
            init_clamp: a.init_clamp,
            holdout_size: a.holdout,
            eval_every: a.eval_every,
            output: Some(a.out),
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => {
            let config = ExperimentConfig::from(args);
            match run_experiment(&config) {
                Ok(out) => {
                    eprintln!(
                        "{} steps, final holdout loss {:.6}",
                        config.steps,
                        out.final_holdout_loss()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    match e.root() {
                        betfree::Error::Config(_) | betfree::Error::InvalidArgument(_) | betfree::Error::Io(_) => {
                            ExitCode::from(1)
                        }
                        _ => ExitCode::from(2),
                    }
                }
            }
        }
        Command::Verify { seed } => {
            let reports = run_suite(seed);
            let mut ok = true;
            for r in &reports {
                println!(
                    "{} {} ({} cases, {} violations, worst excess {:.3e})",
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.name,
                    r.cases,
                    r.violations,
                    r.worst
                );
                ok &= r.passed();
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}
