//! Scriptable stand-in for an interactive prover, speaking the same line
//! protocol as the real toplevel wrapper.

use std::io;
use std::path::PathBuf;

use clap::Parser;
use formal_wiki::prover_session::stub::{serve, StubConfig, StubMachine};

#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Commands run silently before the first request.
    #[arg(long)]
    prelude: Option<PathBuf>,
    /// Fail every command containing this text.
    #[arg(long)]
    reject: Vec<String>,
    /// Exit when a command contains this text.
    #[arg(long = "die-on")]
    die_on: Vec<String>,
}

fn main() -> io::Result<()> {
    let cli = Cli::parse();
    let prelude = match &cli.prelude {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    let mut machine = StubMachine::new(StubConfig {
        reject: cli.reject,
        die_on: cli.die_on,
    });
    serve(&mut machine, &prelude, io::stdin().lock(), io::stdout().lock())
}
