//! Command-line front end for the simulator.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dpbandit_core::harness::{self, config::format_epsilon, experiment::fmt_f64, probe::Mechanism, ExperimentConfig};
use dpbandit_core::rng::SimRng;
use dpbandit_core::HarnessError;
use rand::SeedableRng;

#[derive(Parser, Debug)]
#[command(name = "dpbandit", version, about = "Private sparse linear contextual bandit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a key = value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's out_dir.
        #[arg(long, env = harness::OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Estimate the privacy loss of a mechanism on neighbouring inputs.
    Probe {
        /// laplace-scalar or svt-single-coordinate
        #[arg(long)]
        mechanism: String,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render regret curves from a run directory's trajectory.csv.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, out, jobs } => {
            if jobs == Some(0) {
                return Err(HarnessError::Config("--jobs must be at least 1".into()));
            }
            let cfg = ExperimentConfig::load(&config)?;
            if let Some(requested) = cfg.requested_horizon {
                eprintln!("note: horizon {requested} padded to {}", cfg.horizon);
            }
            let dir = out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let output = harness::run_experiment(&cfg, &dir, jobs)?;
            println!("policy,epsilon,replications,mean_regret,stderr_regret");
            for row in &output.summary {
                println!(
                    "{},{},{},{},{}",
                    row.kind.name(),
                    format_epsilon(row.epsilon),
                    row.replications,
                    fmt_f64(row.mean_regret),
                    fmt_f64(row.stderr_regret)
                );
            }
            eprintln!("wrote results to {}", dir.display());
        }
        Command::Probe { mechanism, trials, epsilon, gap, seed } => {
            let mech = Mechanism::parse(&mechanism)
                .ok_or_else(|| HarnessError::Config(format!("unknown mechanism {mechanism}")))?;
            let mut rng = SimRng::seed_from_u64(seed);
            let r = harness::privacy_probe(mech, gap, epsilon, trials, &mut rng)?;
            println!("mechanism = {}", mech.name());
            println!("epsilon = {}", r.epsilon);
            println!("gap = {}", r.gap);
            println!("trials = {}", r.trials);
            println!("epsilon_hat = {}", fmt_f64(r.epsilon_hat));
            println!("stderr = {}", fmt_f64(r.stderr));
            println!("interval = [{}, {}]", fmt_f64(r.ci_low), fmt_f64(r.ci_high));
            println!("within_bound = {}", r.passes());
        }
        Command::Plot { input } => {
            for path in harness::render_plots(&input)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
