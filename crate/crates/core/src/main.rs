use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use swapnet::harness::{
    self, cmd_evaluate, cmd_noise_sweep, cmd_oracle_check, cmd_train, cmd_transfer, load_config, EvaluateConfig,
    RunContext, SweepConfig, TrainRunConfig, EVALUATE_SCHEMA, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_NUMERICAL,
    EXIT_OK, SWEEP_SCHEMA, TRAIN_SCHEMA,
};
use swapnet::{CrossPairCoupling, Result};

/// Train, transfer and stress-test SWAP controllers for quantum repeater nodes.
#[derive(Parser, Debug)]
#[command(name = "swapnet", version)]
struct Cli {
    /// Base seed for every derived random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 uses all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train controls from a seeded random start.
    Train {
        /// Training config; built-in two-qubit defaults when omitted.
        config: Option<PathBuf>,
        /// Validate the config and exit without writing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Replicate a two-qubit parameter file onto more pairs.
    Transfer {
        source: PathBuf,
        #[arg(long)]
        n_pairs: usize,
        #[arg(long, default_value_t = CrossPairCoupling::Zero)]
        cross_pair_coupling: CrossPairCoupling,
        #[arg(long, default_value = "params_transferred.json")]
        output: String,
    },
    /// Evaluate a parameter file on a test manifest.
    Evaluate { config: PathBuf },
    /// Sweep noise kinds and levels over register sizes.
    NoiseSweep {
        config: PathBuf,
        #[arg(long)]
        dry_run: bool,
    },
    /// Check the integrator order and the finite-difference Jacobian.
    OracleCheck {
        #[arg(long, hide = true)]
        corrupted_weights: bool,
    },
}

fn run(cli: &Cli) -> Result<i32> {
    let ctx = RunContext::new(cli.seed, &cli.out_dir);
    match &cli.command {
        Command::Train { config, dry_run } => {
            let cfg: TrainRunConfig = match config {
                Some(path) => load_config(path, TRAIN_SCHEMA)?,
                None => TrainRunConfig::default(),
            };
            let Some(outcome) = cmd_train(&ctx, &cfg, *dry_run)? else {
                println!("config ok");
                return Ok(EXIT_OK);
            };
            let s = &outcome.summary;
            println!(
                "epochs {} ({} accepted), stop {:?}",
                s.epochs, s.accepted_steps, s.stop_reason
            );
            println!("final train rms {:.6e}", s.final_train_rms);
            println!("test rms {:.6e}", s.test_rms);
            Ok(if outcome.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Transfer {
            source,
            n_pairs,
            cross_pair_coupling,
            output,
        } => {
            let (path, hash) = cmd_transfer(&ctx, source, *n_pairs, *cross_pair_coupling, output)?;
            println!("wrote {} ({hash})", path.display());
            Ok(EXIT_OK)
        }
        Command::Evaluate { config } => {
            let cfg: EvaluateConfig = load_config(config, EVALUATE_SCHEMA)?;
            let records = cmd_evaluate(&ctx, &cfg, Some(config))?;
            for r in &records {
                match r.rms_mean {
                    Some(m) => println!("{} rnp={:e}: rms {m:.6e} ± {:.2e}", r.noise_kind, r.rnp, r.rms_std.unwrap_or(0.0)),
                    None => println!("{} rnp={:e}: {}", r.noise_kind, r.rnp, r.status),
                }
            }
            Ok(EXIT_OK)
        }
        Command::NoiseSweep { config, dry_run } => {
            let cfg: SweepConfig = load_config(config, SWEEP_SCHEMA)?;
            cfg.validate()?;
            if *dry_run {
                println!("config ok");
                return Ok(EXIT_OK);
            }
            let outcome = cmd_noise_sweep(&ctx, &cfg, Some(config))?;
            let failed = outcome.records.iter().filter(|r| !r.is_ok()).count();
            println!("wrote {} ({} rows, {failed} failed)", outcome.csv_path.display(), outcome.records.len());
            Ok(if failed == 0 { EXIT_OK } else { EXIT_NUMERICAL })
        }
        Command::OracleCheck { corrupted_weights } => {
            let report = cmd_oracle_check(cli.seed, *corrupted_weights)?;
            for line in report.lines() {
                println!("{line}");
            }
            Ok(if report.passed() { EXIT_OK } else { EXIT_NUMERICAL })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            harness::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
