use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wlsim::{run_file, Overrides, REGISTRY};

#[derive(Parser)]
#[command(
    name = "wlsim",
    version,
    about = "Outage and mMTC experiments for widely linear receivers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials (slots for mMTC runs), overriding the config file.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory, overriding the config file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// List the registered experiments.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::List => {
            for e in &REGISTRY {
                println!("{:<22} {}", e.name, e.description);
            }
            ExitCode::SUCCESS
        }
        Cmd::Run { config } => {
            let o = Overrides {
                seed: cli.seed,
                trials: cli.trials,
                out_dir: cli.out_dir,
            };
            match run_file(&config, &o) {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
