use clap::Parser;
use formal_wiki::cli::{run_advise, AdviseArgs};

/// Ask an advice server about one goal and print its advice lines.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(flatten)]
    args: AdviseArgs,
}

fn main() {
    env_logger::init();
    match run_advise(&Cli::parse().args) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
        }
        Err(e) => {
            eprintln!("advise: {e}");
            std::process::exit(1);
        }
    }
}
