use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use formal_wiki::cli::{run_advice_server, run_creolify, AdviceServerArgs, CreolifyArgs};
use formal_wiki::prover_session::{ProcessConfig, ProcessFactory};
use formal_wiki::service::{build, build_index_file, serve, AdvisorConfig, AppState, RepositoryStore};

/// Wiki engine for formal mathematics.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regenerate the symbol index and the static pages under rendered/.
    Build { repo: PathBuf },
    /// Regenerate index/symbols.tsv only.
    Index { repo: PathBuf },
    /// Serve pages, prover states, editing and advice over HTTP.
    Serve {
        repo: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Prover command line; defaults to the bundled stub prover.
        #[arg(long = "prover-cmd")]
        prover_cmd: Option<String>,
    },
    /// Translate annotated LaTeX into wiki markup.
    Creolify(CreolifyArgs),
    /// Run the proof advice server.
    AdviceServer(AdviceServerArgs),
}

fn default_prover() -> String {
    std::env::current_exe()
        .ok()
        .and_then(|p| p.parent().map(|d| d.join("stub-prover")))
        .filter(|p| p.exists())
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "stub-prover".to_string())
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Build { repo } => {
            let store = RepositoryStore::open(repo).map_err(|e| e.to_string())?;
            let report = build(&store).map_err(|e| e.to_string())?;
            println!(
                "{} sources, {} pages, {} symbols",
                report.sources, report.pages, report.symbols
            );
        }
        Command::Index { repo } => {
            let store = RepositoryStore::open(repo).map_err(|e| e.to_string())?;
            let corpus = build_index_file(&store).map_err(|e| e.to_string())?;
            println!("{} symbols", corpus.index.len());
        }
        Command::Serve {
            repo,
            port,
            host,
            prover_cmd,
        } => {
            let line = prover_cmd.unwrap_or_else(default_prover);
            let config = ProcessConfig::from_command_line(&line).ok_or("empty prover command")?;
            let store = RepositoryStore::open(repo).map_err(|e| e.to_string())?;
            let state = AppState::new(store, Arc::new(ProcessFactory(config)), AdvisorConfig::from_env())
                .map_err(|e| e.to_string())?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(serve(state, &format!("{host}:{port}")))
                .map_err(|e| e.to_string())?;
        }
        Command::Creolify(args) => run_creolify(&args)?,
        Command::AdviceServer(args) => run_advice_server(&args)?,
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("engine: {e}");
        std::process::exit(1);
    }
}
