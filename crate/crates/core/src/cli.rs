//! Argument sets and drivers shared by the command line tools.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Args;

use crate::advice::{request_advice, AdviceServer};
use crate::creolifier::{creolify_with, RuleSet};
use crate::hyperlinker::{import_index, SymbolIndex};

#[derive(Debug, Args)]
pub struct CreolifyArgs {
    /// Annotated LaTeX input.
    pub input: PathBuf,
    /// Wiki output.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Symbol index (`symbols.tsv`); without it formal references stay
    /// unresolved.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Extra rewrite rules, appended to the defaults.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Where to write warnings and unresolved references.
    #[arg(long)]
    pub warnings: Option<PathBuf>,
}

fn read(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn run_creolify(args: &CreolifyArgs) -> Result<(), String> {
    let latex = read(&args.input)?;
    let index = match &args.index {
        Some(p) => import_index(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
        None => SymbolIndex::new(),
    };
    let mut rules = RuleSet::default();
    if let Some(p) = &args.rules {
        rules.extend_from_file(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    let out = creolify_with(&latex, &index, &rules).map_err(|e| format!("{}: {e}", args.input.display()))?;
    fs::write(&args.output, &out.wiki).map_err(|e| format!("{}: {e}", args.output.display()))?;
    let mut report = String::new();
    for w in &out.warnings {
        report.push_str(&format!("warning: {w}\n"));
    }
    for name in &out.unresolved {
        report.push_str(&format!("unresolved: {name}\n"));
    }
    match &args.warnings {
        Some(p) => fs::write(p, report).map_err(|e| format!("{}: {e}", p.display()))?,
        None => eprint!("{report}"),
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 7431)]
    pub port: u16,
    /// Seconds to wait for the server.
    #[arg(long, default_value_t = 30)]
    pub timeout: u64,
    /// Goal line: assumptions and conclusion separated by backticks.
    pub goal: String,
}

pub fn run_advise(args: &AdviseArgs) -> Result<Vec<String>, String> {
    request_advice(
        (args.host.as_str(), args.port),
        &args.goal,
        Duration::from_secs(args.timeout),
    )
    .map_err(|e| format!("{}:{}: {e}", args.host, args.port))
}

#[derive(Debug, Args)]
pub struct AdviceServerArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 7431)]
    pub port: u16,
    /// Seconds a request may spend in the strategies.
    #[arg(long, default_value_t = 10)]
    pub timeout: u64,
}

pub fn run_advice_server(args: &AdviceServerArgs) -> Result<(), String> {
    let server = Arc::new(AdviceServer::new(
        vec![Arc::new(crate::advice::TautologyStrategy)],
        Duration::from_secs(args.timeout),
    ));
    let listener = std::net::TcpListener::bind((args.host.as_str(), args.port))
        .map_err(|e| format!("{}:{}: {e}", args.host, args.port))?;
    log::info!("advice server on {}", listener.local_addr().map_err(|e| e.to_string())?);
    server.serve_tcp(listener);
    Ok(())
}
