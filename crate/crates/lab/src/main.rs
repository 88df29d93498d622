use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use soliton_lab::{exit, schema, RunConfig, Status, Suite};

#[derive(Parser)]
#[command(
    name = "soliton-lab",
    version,
    about = "Builds KdV soliton fields and checks them against their spectral data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites listed in a config file.
    Run {
        config: PathBuf,
        /// Run suites on the thread pool. Artifacts are identical.
        #[arg(long)]
        parallel: bool,
    },
    /// Describe what a suite checks and how its tolerance is applied.
    Explain { suite: String },
    /// Print the JSON schema of the config file.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, parallel } => run(&config, parallel),
        Command::Explain { suite } => match suite.parse::<Suite>() {
            Ok(s) => {
                println!("{s}: {}\n\n{}", s.checks(), s.explain());
                exit::PASS
            }
            Err(e) => {
                let known: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                eprintln!("error: {e}; known suites: {}", known.join(", "));
                exit::CONFIG
            }
        },
        Command::Schema => {
            println!("{}", schema::CONFIG_SCHEMA);
            exit::PASS
        }
    };
    ExitCode::from(code as u8)
}

fn run(path: &std::path::Path, parallel: bool) -> i32 {
    let result = RunConfig::load(path)
        .map_err(Into::into)
        .and_then(|c| soliton_lab::run(&c, parallel));
    match result {
        Ok(summary) => {
            for s in &summary.suites {
                let status = match s.status {
                    Status::Pass => "pass",
                    Status::Fail => "FAIL",
                    Status::Guard => "GUARD",
                    Status::Error => "ERROR",
                };
                match &s.message {
                    Some(m) => println!("{:<10} {status}  {m}", s.suite.name()),
                    None => println!("{:<10} {status}", s.suite.name()),
                }
            }
            summary.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
