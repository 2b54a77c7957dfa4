use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

use super::stub::{StubConfig, StubMachine, StubReply, PROBE, READY, UNDO};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProverError {
    #[error("prover i/o failed: {0}")]
    Io(String),
    #[error("prover protocol violation: {0}")]
    Protocol(String),
    #[error("prover session is dead")]
    Dead,
}

impl From<std::io::Error> for ProverError {
    fn from(e: std::io::Error) -> Self {
        ProverError::Io(e.to_string())
    }
}

/// Opaque token naming a restorable prover state: the commands that were
/// executed after the prover's prelude.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Snapshot {
    commands: Vec<String>,
}

/// Synchronous connection to an interactive prover.
pub trait ProverAdapter: Send {
    /// Sends one command and returns the prover's response.
    fn send(&mut self, command: &str) -> Result<String, ProverError>;
    /// Current length of the goalstack.
    fn probe_depth(&mut self) -> Result<u32, ProverError>;
    fn snapshot(&mut self) -> Result<Snapshot, ProverError>;
    /// Replaces the running prover with a fresh one at the snapshot state.
    fn restore(&mut self, token: &Snapshot) -> Result<(), ProverError>;
}

impl<A: ProverAdapter + ?Sized> ProverAdapter for Box<A> {
    fn send(&mut self, command: &str) -> Result<String, ProverError> {
        (**self).send(command)
    }
    fn probe_depth(&mut self) -> Result<u32, ProverError> {
        (**self).probe_depth()
    }
    fn snapshot(&mut self) -> Result<Snapshot, ProverError> {
        (**self).snapshot()
    }
    fn restore(&mut self, token: &Snapshot) -> Result<(), ProverError> {
        (**self).restore(token)
    }
}

/// Starts provers at their prelude state.
pub trait ProverFactory: Send + Sync {
    fn spawn(&self) -> Result<Box<dyn ProverAdapter>, ProverError>;
}

/// Whether a prover response reports an error.
pub fn is_failure(response: &str) -> bool {
    response
        .lines()
        .map(str::trim_start)
        .any(|l| l.starts_with("Exception:") || l.starts_with("Error:"))
}

/// How to launch a prover child process.
#[derive(Debug, Clone)]
pub struct ProcessConfig {
    pub program: String,
    pub args: Vec<String>,
}

impl ProcessConfig {
    pub fn new(program: impl Into<String>) -> Self {
        ProcessConfig {
            program: program.into(),
            args: Vec::new(),
        }
    }

    /// Splits a shell-like command line on whitespace.
    pub fn from_command_line(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace().map(String::from);
        let program = parts.next()?;
        Some(ProcessConfig {
            program,
            args: parts.collect(),
        })
    }
}

/// Prover running as a child process speaking the line protocol.
pub struct ProcessProver {
    config: ProcessConfig,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    history: Vec<String>,
}

impl ProcessProver {
    pub fn spawn(config: ProcessConfig) -> Result<Self, ProverError> {
        let (child, stdin, stdout) = launch(&config)?;
        Ok(ProcessProver {
            config,
            child,
            stdin,
            stdout,
            history: Vec::new(),
        })
    }

    fn write_command(&mut self, command: &str) -> Result<(), ProverError> {
        let mut line = command.trim_end().to_string();
        line.push('\n');
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.flush()?;
        Ok(())
    }

    fn read_line(&mut self) -> Result<String, ProverError> {
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(ProverError::Io("prover closed its output".into()));
        }
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    }

    fn exchange(&mut self, command: &str) -> Result<String, ProverError> {
        self.write_command(command)?;
        let mut lines = Vec::new();
        loop {
            let line = self.read_line()?;
            if line == READY {
                break;
            }
            lines.push(line);
        }
        Ok(lines.join("\n"))
    }
}

fn launch(config: &ProcessConfig) -> Result<(Child, ChildStdin, BufReader<ChildStdout>), ProverError> {
    let mut child = Command::new(&config.program)
        .args(&config.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| ProverError::Io(format!("cannot start `{}`: {e}", config.program)))?;
    let stdin = child.stdin.take().ok_or_else(|| ProverError::Io("no stdin".into()))?;
    let stdout = child.stdout.take().ok_or_else(|| ProverError::Io("no stdout".into()))?;
    Ok((child, stdin, BufReader::new(stdout)))
}

impl ProverAdapter for ProcessProver {
    fn send(&mut self, command: &str) -> Result<String, ProverError> {
        let response = self.exchange(command)?;
        self.history.push(command.to_string());
        Ok(response)
    }

    fn probe_depth(&mut self) -> Result<u32, ProverError> {
        self.write_command(PROBE)?;
        let line = self.read_line()?;
        line.trim()
            .parse()
            .map_err(|_| ProverError::Protocol(format!("bad depth reply `{line}`")))
    }

    fn snapshot(&mut self) -> Result<Snapshot, ProverError> {
        Ok(Snapshot {
            commands: self.history.clone(),
        })
    }

    fn restore(&mut self, token: &Snapshot) -> Result<(), ProverError> {
        let _ = self.child.kill();
        let _ = self.child.wait();
        let (child, stdin, stdout) = launch(&self.config)?;
        self.child = child;
        self.stdin = stdin;
        self.stdout = stdout;
        self.history.clear();
        for command in &token.commands {
            self.send(command)?;
        }
        Ok(())
    }
}

impl Drop for ProcessProver {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct ProcessFactory(pub ProcessConfig);

impl ProverFactory for ProcessFactory {
    fn spawn(&self) -> Result<Box<dyn ProverAdapter>, ProverError> {
        Ok(Box::new(ProcessProver::spawn(self.0.clone())?))
    }
}

/// The stub state machine driven directly, without a child process.
pub struct InProcessStub {
    config: StubConfig,
    machine: StubMachine,
    history: Vec<String>,
    dead: bool,
}

impl InProcessStub {
    pub fn new(config: StubConfig) -> Self {
        InProcessStub {
            machine: StubMachine::new(config.clone()),
            config,
            history: Vec::new(),
            dead: false,
        }
    }
}

impl Default for InProcessStub {
    fn default() -> Self {
        InProcessStub::new(StubConfig::default())
    }
}

impl ProverAdapter for InProcessStub {
    fn send(&mut self, command: &str) -> Result<String, ProverError> {
        if self.dead {
            return Err(ProverError::Io("stub exited".into()));
        }
        match self.machine.execute(command) {
            StubReply::Die => {
                self.dead = true;
                Err(ProverError::Io("stub exited".into()))
            }
            StubReply::Output(text) => {
                self.history.push(command.to_string());
                Ok(text.trim_end_matches('\n').to_string())
            }
        }
    }

    fn probe_depth(&mut self) -> Result<u32, ProverError> {
        if self.dead {
            return Err(ProverError::Io("stub exited".into()));
        }
        Ok(self.machine.depth())
    }

    fn snapshot(&mut self) -> Result<Snapshot, ProverError> {
        Ok(Snapshot {
            commands: self.history.clone(),
        })
    }

    fn restore(&mut self, token: &Snapshot) -> Result<(), ProverError> {
        *self = InProcessStub::new(self.config.clone());
        for c in &token.commands {
            self.send(c)?;
        }
        Ok(())
    }
}

#[derive(Default)]
pub struct InProcessFactory(pub StubConfig);

impl ProverFactory for InProcessFactory {
    fn spawn(&self) -> Result<Box<dyn ProverAdapter>, ProverError> {
        Ok(Box::new(InProcessStub::new(self.0.clone())))
    }
}

/// Counters shared between instrumented adapters and the code observing them.
#[derive(Debug, Default)]
pub struct ProverStats {
    sends: AtomicUsize,
    undos: AtomicUsize,
    probes: AtomicUsize,
    restores: AtomicUsize,
    spawns: AtomicUsize,
}

impl ProverStats {
    /// Commands sent, undo commands excluded.
    pub fn sends(&self) -> usize {
        self.sends.load(Ordering::SeqCst)
    }
    pub fn undos(&self) -> usize {
        self.undos.load(Ordering::SeqCst)
    }
    pub fn probes(&self) -> usize {
        self.probes.load(Ordering::SeqCst)
    }
    pub fn restores(&self) -> usize {
        self.restores.load(Ordering::SeqCst)
    }
    pub fn spawns(&self) -> usize {
        self.spawns.load(Ordering::SeqCst)
    }
}

/// Adapter wrapper that counts traffic.
pub struct CountingProver<A> {
    inner: A,
    stats: Arc<ProverStats>,
}

impl<A: ProverAdapter> CountingProver<A> {
    pub fn new(inner: A, stats: Arc<ProverStats>) -> Self {
        CountingProver { inner, stats }
    }
}

impl<A: ProverAdapter> ProverAdapter for CountingProver<A> {
    fn send(&mut self, command: &str) -> Result<String, ProverError> {
        if command.trim() == UNDO {
            self.stats.undos.fetch_add(1, Ordering::SeqCst);
        } else {
            self.stats.sends.fetch_add(1, Ordering::SeqCst);
        }
        self.inner.send(command)
    }
    fn probe_depth(&mut self) -> Result<u32, ProverError> {
        self.stats.probes.fetch_add(1, Ordering::SeqCst);
        self.inner.probe_depth()
    }
    fn snapshot(&mut self) -> Result<Snapshot, ProverError> {
        self.inner.snapshot()
    }
    fn restore(&mut self, token: &Snapshot) -> Result<(), ProverError> {
        self.stats.restores.fetch_add(1, Ordering::SeqCst);
        self.inner.restore(token)
    }
}

/// Factory whose adapters all report into one [`ProverStats`].
pub struct CountingFactory<F> {
    inner: F,
    stats: Arc<ProverStats>,
}

impl<F: ProverFactory> CountingFactory<F> {
    pub fn new(inner: F) -> Self {
        CountingFactory {
            inner,
            stats: Arc::default(),
        }
    }

    pub fn stats(&self) -> Arc<ProverStats> {
        self.stats.clone()
    }
}

impl<F: ProverFactory> ProverFactory for CountingFactory<F> {
    fn spawn(&self) -> Result<Box<dyn ProverAdapter>, ProverError> {
        self.stats.spawns.fetch_add(1, Ordering::SeqCst);
        Ok(Box::new(CountingProver::new(self.inner.spawn()?, self.stats.clone())))
    }
}
