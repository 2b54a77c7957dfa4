use clap::Parser;
use formal_wiki::cli::{run_creolify, CreolifyArgs};

/// Translate annotated LaTeX into wiki markup.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(flatten)]
    args: CreolifyArgs,
}

fn main() {
    env_logger::init();
    if let Err(e) = run_creolify(&Cli::parse().args) {
        eprintln!("creolify: {e}");
        std::process::exit(1);
    }
}
