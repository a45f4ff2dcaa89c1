use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fraceig::cli;

#[derive(Parser)]
#[command(name = "fraceig", about = "Weighted fractional p-Laplacian eigenvalue experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration.
    Run {
        config: PathBuf,
        /// Worker threads for the numerical kernels.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory, overriding the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.command {
        Command::Run { config, workers, out } => {
            let outcome = cli::run(&config, out.as_deref(), workers);
            if outcome.exit == cli::ExitCode::Success {
                println!("{}", outcome.message);
            } else {
                eprintln!("{}", outcome.message);
            }
            outcome.exit
        }
        Command::Validate { config } => {
            let (exit, msg) = cli::validate(&config);
            if exit == cli::ExitCode::Success {
                println!("{msg}");
            } else {
                eprintln!("{msg}");
            }
            exit
        }
        Command::Version => {
            println!("fraceig {}", env!("CARGO_PKG_VERSION"));
            cli::ExitCode::Success
        }
    };
    ExitCode::from(code.code() as u8)
}
