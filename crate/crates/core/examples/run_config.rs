//! Drive the experiment harness from a TOML file, as the binary does.
//!
//! cargo run --example run_config -- crates/core/examples/configs/and_small.toml verify /tmp/out
use std::path::Path;

use polarcomm::harness::{error_record, run_experiment, Command, ExperimentConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let cfg_path = args.get(1).map(String::as_str).unwrap_or("crates/core/examples/configs/and_small.toml");
    let command = match args.get(2).map(String::as_str).unwrap_or("verify") {
        "profile" => Command::Profile,
        "plan" => Command::Plan,
        "simulate" => Command::Simulate,
        "rates" => Command::Rates,
        "sweep" => Command::Sweep,
        _ => Command::Verify,
    };
    let out = args.get(3).map(String::as_str).unwrap_or("out");
    let result = ExperimentConfig::load(Path::new(cfg_path)).and_then(|cfg| run_experiment(&cfg, command, Path::new(out)));
    match result {
        Ok(files) => files.iter().for_each(|f| println!("{}", f.display())),
        Err(e) => {
            eprintln!("{}", error_record(&e));
            std::process::exit(e.exit_code());
        }
    }
}
