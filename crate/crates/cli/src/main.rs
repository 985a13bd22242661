mod args;
mod commands;
mod error;
mod manifest;

use clap::Parser;

use crate::args::{Cli, Command, FileConfig};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = FileConfig::load(cli.config.as_deref()).and_then(|file| match &cli.command {
        Command::SolveTsp(a) => commands::solve_tsp(a, &file),
        Command::Cycle(a) => commands::cycle(a, &file),
        Command::Bench(a) => commands::bench(a, &file),
        Command::Fetch(a) => commands::fetch(a, &file),
        Command::Distances(a) => commands::distances(a, &file),
    });
    if let Err(failure) = outcome {
        eprintln!("error: {failure}");
        std::process::exit(failure.code);
    }
}
