//! Deterministic stand-in for an interactive prover.
//!
//! The stub keeps a goalstack history the way an LCF-style toplevel does:
//! `g` starts a fresh history with one entry, each successful `e` pushes an
//! entry, and `b ()` pops one (never below zero). Everything else leaves the
//! history alone. The same state machine backs the `stub-prover` binary and
//! the in-process adapter.

use std::io::{self, BufRead, Write};

use crate::script_parser::{first_token, is_complete_command, strip_comments};

/// Line that ends every response on the wire.
pub const READY: &str = "<<ready>>";
/// Command answered with the current goalstack depth as one decimal line.
pub const PROBE: &str = "#depth;;";
/// Undo command.
pub const UNDO: &str = "b ();;";

#[derive(Debug, Clone, Default)]
pub struct StubConfig {
    /// Commands containing any of these substrings fail.
    pub reject: Vec<String>,
    /// Commands containing any of these substrings kill the process.
    pub die_on: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct StubMachine {
    history: Vec<String>,
    config: StubConfig,
}

/// What a command did to the stub.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StubReply {
    Output(String),
    Die,
}

impl StubMachine {
    pub fn new(config: StubConfig) -> Self {
        StubMachine {
            history: Vec::new(),
            config,
        }
    }

    pub fn depth(&self) -> u32 {
        self.history.len() as u32
    }

    fn goal_display(&self) -> String {
        match self.history.last() {
            Some(goal) => format!("val it : goalstack = 1 subgoal (1 total)\n\n`{goal}`\n"),
            None => "val it : goalstack = No goals\n".to_string(),
        }
    }

    pub fn execute(&mut self, command: &str) -> StubReply {
        if self.config.die_on.iter().any(|d| command.contains(d.as_str())) {
            return StubReply::Die;
        }
        if self.config.reject.iter().any(|r| command.contains(r.as_str())) {
            return StubReply::Output("Exception: Failure \"rejected\".\n".to_string());
        }
        let code = strip_comments(command);
        let code = code.trim();
        let out = match first_token(code) {
            Some("g") => {
                let goal = quoted(code).unwrap_or_else(|| code[1..].trim_end_matches(";;").trim().to_string());
                self.history = vec![goal];
                self.goal_display()
            }
            Some("e") => {
                if self.history.is_empty() {
                    "Exception: Failure \"Empty goalstack\".\n".to_string()
                } else if code.contains("FAIL_TAC") {
                    "Exception: Failure \"FAIL_TAC\".\n".to_string()
                } else {
                    let top = self.history.last().cloned().unwrap_or_default();
                    self.history.push(top);
                    self.goal_display()
                }
            }
            Some("b") if is_undo(code) => {
                self.history.pop();
                self.goal_display()
            }
            Some("module") | Some("end") => String::new(),
            Some("let") => {
                let name = code[3..]
                    .trim_start()
                    .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\''))
                    .next()
                    .unwrap_or("_")
                    .to_string();
                let concl = self.history.last().map(String::as_str).unwrap_or("T");
                format!("val {name} : thm = |- {concl}\n")
            }
            _ => "val it : unit = ()\n".to_string(),
        };
        StubReply::Output(out)
    }
}

fn is_undo(code: &str) -> bool {
    let squashed: String = code.chars().filter(|c| !c.is_whitespace()).collect();
    squashed == "b();;" || squashed == "b()"
}

fn quoted(code: &str) -> Option<String> {
    let start = code.find('`')?;
    let len = code[start + 1..].find('`')?;
    Some(code[start + 1..start + 1 + len].to_string())
}

/// Runs the wire protocol: commands end with `;;` and a newline; each
/// response is followed by a [`READY`] line; [`PROBE`] is answered by a
/// single decimal line. Lines of a prelude are executed silently first.
/// Returns when input ends or a `die_on` command arrives.
pub fn serve<R: BufRead, W: Write>(
    machine: &mut StubMachine,
    prelude: &str,
    input: R,
    mut output: W,
) -> io::Result<()> {
    if !prelude.is_empty() {
        if let Ok(frames) = crate::script_parser::split_commands(prelude) {
            for f in frames.iter().filter(|f| !f.is_comment() && !f.unterminated) {
                machine.execute(&f.command_text);
            }
        }
    }
    let mut buffer = String::new();
    for line in input.lines() {
        let line = line?;
        if buffer.is_empty() && line.trim().is_empty() {
            continue;
        }
        buffer.push_str(&line);
        buffer.push('\n');
        if buffer.trim() == PROBE {
            writeln!(output, "{}", machine.depth())?;
            output.flush()?;
            buffer.clear();
            continue;
        }
        if !is_complete_command(&buffer) {
            continue;
        }
        match machine.execute(buffer.trim_end()) {
            StubReply::Die => return Ok(()),
            StubReply::Output(text) => {
                output.write_all(text.as_bytes())?;
                if !text.is_empty() && !text.ends_with('\n') {
                    output.write_all(b"\n")?;
                }
                writeln!(output, "{READY}")?;
                output.flush()?;
            }
        }
        buffer.clear();
    }
    Ok(())
}
