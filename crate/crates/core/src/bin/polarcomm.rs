use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use polarcomm::harness::{error_record, run_experiment, schema, Command, ExperimentConfig};
use polarcomm::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Profile,
    Plan,
    Simulate,
    Verify,
    Rates,
    Sweep,
}

/// Polar-coded interactive function computation experiments.
#[derive(Debug, Parser)]
#[command(name = "polarcomm", version)]
struct Cli {
    command: Option<Cmd>,
    /// Flat TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Print the config schema with defaults and exit.
    #[arg(long)]
    print_schema: bool,
}

fn fail(err: Error) -> ExitCode {
    eprintln!("{}", error_record(&err));
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(Error::Config(e.to_string().trim().to_string())),
    };
    if cli.print_schema {
        println!("{}", serde_json::to_string_pretty(&schema()).expect("schema serializes"));
        return ExitCode::SUCCESS;
    }
    let (Some(cmd), Some(path)) = (cli.command, cli.config) else {
        return fail(Error::Config("usage: polarcomm <command> --config <path>".into()));
    };
    let mut cfg = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    let command = match cmd {
        Cmd::Profile => Command::Profile,
        Cmd::Plan => Command::Plan,
        Cmd::Simulate => Command::Simulate,
        Cmd::Verify => Command::Verify,
        Cmd::Rates => Command::Rates,
        Cmd::Sweep => Command::Sweep,
    };
    match run_experiment(&cfg, command, &cli.out) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
