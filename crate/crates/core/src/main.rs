use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use genbench::bench::{self, BenchError, RunConfig, RunOptions};

#[derive(Parser)]
#[command(
    name = "genbench",
    version,
    about = "Check, train and sweep θ-parametrized MDP families"
)]
struct Cli {
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    workers: Option<usize>,
    /// Fill the wall_seconds column
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether one policy is optimal for every training member
    Check(Common),
    /// Train, then report train and population objectives
    Gap(Common),
    /// Run the gap experiment across the config's swept axis
    Sweep(Common),
    /// Regenerate the brute-force golden files
    Oracle {
        #[arg(long, default_value = "golden")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(c: &Common) -> Result<(RunConfig, RunOptions), BenchError> {
    let cfg = RunConfig::load(&c.config)?;
    Ok((
        cfg,
        RunOptions {
            out: c.out.clone(),
            workers: c.workers,
            timing: c.timing,
        },
    ))
}

fn run(cli: Cli) -> Result<i32, BenchError> {
    match cli.command {
        Command::Check(c) => {
            let (cfg, opts) = load(&c)?;
            let (cert, path) = bench::run_check(&cfg, &opts)?;
            println!("{} ({})", cert.verdict.name(), path.display());
            Ok(bench::verdict_exit_code(&cert))
        }
        Command::Gap(c) => {
            let (cfg, opts) = load(&c)?;
            let rows = bench::run_gap(&cfg, &opts)?;
            for r in &rows {
                println!(
                    "repeat {}: j_train {} j_population {} gap {}",
                    r.repeat,
                    bench::fmt_float(r.j_train),
                    bench::fmt_float(r.j_population),
                    r.gap_text()
                );
            }
            Ok(bench::EXIT_OK)
        }
        Command::Sweep(c) => {
            let (cfg, opts) = load(&c)?;
            let (_, summary) = bench::run_sweep(&cfg, &opts)?;
            for p in &summary.points {
                println!(
                    "{}={}: mean gap {} median gap {}",
                    summary.axis,
                    p.value,
                    bench::fmt_float(p.mean_gap),
                    bench::fmt_float(p.median_gap)
                );
            }
            Ok(bench::EXIT_OK)
        }
        Command::Oracle { out, seed } => {
            for path in bench::run_oracle(&out, seed)? {
                println!("{}", path.display());
            }
            Ok(bench::EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .init();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
