//! Proof advice: a one-line goal protocol, a strategy race with first
//! success cancellation, and a caching line server.
//!
//! A request line is `assumption1`assumption2`...`conclusion`; the server
//! answers with zero or more advice lines and closes the connection.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, RwLock};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::par;

pub const SEPARATOR: char = '`';
pub const TAUTOLOGY_ADVICE: &str = "e (TAUT_PROVE);;";
/// Longest request line the server reads.
pub const MAX_REQUEST: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AdviceRequest {
    pub assumptions: Vec<String>,
    pub conclusion: String,
}

impl AdviceRequest {
    pub fn goal(conclusion: &str) -> Self {
        AdviceRequest {
            assumptions: Vec::new(),
            conclusion: conclusion.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("empty request line")]
    Empty,
    #[error("field {0} contains the separator")]
    Separator(usize),
    #[error("field {0} contains a line break")]
    LineBreak(usize),
    #[error("request is not UTF-8")]
    Encoding,
    #[error("request line longer than {MAX_REQUEST} bytes")]
    TooLong,
}

pub fn encode_goal(req: &AdviceRequest) -> Result<String, ProtocolError> {
    let fields: Vec<&str> = req
        .assumptions
        .iter()
        .map(String::as_str)
        .chain([req.conclusion.as_str()])
        .collect();
    for (i, f) in fields.iter().enumerate() {
        if f.contains(SEPARATOR) {
            return Err(ProtocolError::Separator(i));
        }
        if f.contains(['\n', '\r']) {
            return Err(ProtocolError::LineBreak(i));
        }
    }
    let line = fields.join("`");
    if line.is_empty() {
        return Err(ProtocolError::Empty);
    }
    Ok(line)
}

pub fn decode_goal(line: &str) -> Result<AdviceRequest, ProtocolError> {
    if line.is_empty() {
        return Err(ProtocolError::Empty);
    }
    let mut fields: Vec<String> = line.split(SEPARATOR).map(str::to_string).collect();
    let conclusion = fields.pop().expect("split yields at least one field");
    Ok(AdviceRequest {
        assumptions: fields,
        conclusion,
    })
}

/// Goal shown in a prover response, if any: the last backquoted term on a
/// line of its own is the conclusion, numbered `N [`t`]` lines are the
/// assumptions.
pub fn goal_from_response(response: &str) -> Option<AdviceRequest> {
    if !response.contains("subgoal") {
        return None;
    }
    let mut assumptions = Vec::new();
    let mut conclusion = None;
    for line in response.lines() {
        let t = line.trim();
        if let Some(inner) = t.strip_prefix('`').and_then(|r| r.strip_suffix('`')) {
            conclusion = Some(inner.to_string());
        } else if let Some((n, rest)) = t.split_once(' ') {
            if n.chars().all(|c| c.is_ascii_digit()) {
                if let Some(inner) = rest.trim().strip_prefix("[`").and_then(|r| r.strip_suffix("`]")) {
                    assumptions.push(inner.to_string());
                }
            }
        }
    }
    Some(AdviceRequest {
        assumptions,
        conclusion: conclusion?,
    })
}

/// Propositional terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MiniTerm {
    Const(bool),
    Atom(String),
    Not(Box<MiniTerm>),
    And(Box<MiniTerm>, Box<MiniTerm>),
    Or(Box<MiniTerm>, Box<MiniTerm>),
    Imp(Box<MiniTerm>, Box<MiniTerm>),
    Iff(Box<MiniTerm>, Box<MiniTerm>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse term at byte {offset}: {reason}")]
pub struct TermError {
    pub offset: usize,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Imp,
    Iff,
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, TermError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let fixed = [
            ("<=>", Tok::Iff),
            ("==>", Tok::Imp),
            ("/\\", Tok::And),
            ("\\/", Tok::Or),
            ("~", Tok::Not),
            ("(", Tok::Open),
            (")", Tok::Close),
        ];
        if let Some((s, t)) = fixed.iter().find(|(s, _)| rest.starts_with(s)) {
            out.push((i, t.clone()));
            i += s.len();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '\''))
                .unwrap_or(rest.len());
            out.push((i, Tok::Ident(rest[..len].to_string())));
            i += len;
            continue;
        }
        return Err(TermError {
            offset: i,
            reason: "unexpected character",
        });
    }
    Ok(out)
}

struct TermParser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl TermParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err(&self, reason: &'static str) -> TermError {
        TermError {
            offset: self.offset(),
            reason,
        }
    }

    // Levels: 0 <=>, 1 ==>, 2 \/, 3 /\, then unary.
    fn binary(&mut self, level: u8) -> Result<MiniTerm, TermError> {
        if level == 4 {
            return self.unary();
        }
        let lhs = self.binary(level + 1)?;
        let op = matches!(
            (level, self.peek()),
            (0, Some(Tok::Iff)) | (1, Some(Tok::Imp)) | (2, Some(Tok::Or)) | (3, Some(Tok::And))
        );
        if !op {
            return Ok(lhs);
        }
        self.pos += 1;
        let rhs = self.binary(level)?;
        let (l, r) = (Box::new(lhs), Box::new(rhs));
        Ok(match level {
            0 => MiniTerm::Iff(l, r),
            1 => MiniTerm::Imp(l, r),
            2 => MiniTerm::Or(l, r),
            _ => MiniTerm::And(l, r),
        })
    }

    fn unary(&mut self) -> Result<MiniTerm, TermError> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(MiniTerm::Not(Box::new(self.unary()?)))
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let t = self.binary(0)?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(t)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(match name.as_str() {
                    "T" => MiniTerm::Const(true),
                    "F" => MiniTerm::Const(false),
                    _ => MiniTerm::Atom(name),
                })
            }
            Some(_) => Err(self.err("expected a term")),
            None => Err(self.err("unexpected end of term")),
        }
    }
}

impl MiniTerm {
    pub fn parse(text: &str) -> Result<MiniTerm, TermError> {
        let mut p = TermParser {
            toks: tokenize(text)?,
            pos: 0,
            end: text.len(),
        };
        let t = p.binary(0)?;
        if p.pos != p.toks.len() {
            return Err(p.err("trailing input"));
        }
        Ok(t)
    }

    fn level(&self) -> u8 {
        match self {
            MiniTerm::Iff(..) => 0,
            MiniTerm::Imp(..) => 1,
            MiniTerm::Or(..) => 2,
            MiniTerm::And(..) => 3,
            _ => 4,
        }
    }

    /// Atoms in order of first occurrence.
    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            MiniTerm::Const(_) => {}
            MiniTerm::Atom(a) => {
                if !out.contains(&a.as_str()) {
                    out.push(a);
                }
            }
            MiniTerm::Not(t) => t.collect_atoms(out),
            MiniTerm::And(a, b) | MiniTerm::Or(a, b) | MiniTerm::Imp(a, b) | MiniTerm::Iff(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Value under `assignment`: atom `atoms[i]` is true iff bit `i` is set.
    pub fn eval(&self, atoms: &[&str], assignment: u64) -> bool {
        match self {
            MiniTerm::Const(b) => *b,
            MiniTerm::Atom(a) => {
                let i = atoms.iter().position(|x| x == a).expect("atom listed");
                assignment >> i & 1 == 1
            }
            MiniTerm::Not(t) => !t.eval(atoms, assignment),
            MiniTerm::And(a, b) => a.eval(atoms, assignment) && b.eval(atoms, assignment),
            MiniTerm::Or(a, b) => a.eval(atoms, assignment) || b.eval(atoms, assignment),
            MiniTerm::Imp(a, b) => !a.eval(atoms, assignment) || b.eval(atoms, assignment),
            MiniTerm::Iff(a, b) => a.eval(atoms, assignment) == b.eval(atoms, assignment),
        }
    }
}

impl fmt::Display for MiniTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, a, b) = match self {
            MiniTerm::Const(true) => return f.write_str("T"),
            MiniTerm::Const(false) => return f.write_str("F"),
            MiniTerm::Atom(a) => return f.write_str(a),
            MiniTerm::Not(t) => {
                return if t.level() < 4 {
                    write!(f, "~({t})")
                } else {
                    write!(f, "~{t}")
                }
            }
            MiniTerm::And(a, b) => ("/\\", a, b),
            MiniTerm::Or(a, b) => ("\\/", a, b),
            MiniTerm::Imp(a, b) => ("==>", a, b),
            MiniTerm::Iff(a, b) => ("<=>", a, b),
        };
        // Right associative: only a left operand at the same level needs
        // parentheses.
        let lvl = self.level();
        if a.level() <= lvl {
            write!(f, "({a})")?;
        } else {
            write!(f, "{a}")?;
        }
        write!(f, " {op} ")?;
        if b.level() < lvl {
            write!(f, "({b})")
        } else {
            write!(f, "{b}")
        }
    }
}

/// Widest truth table attempted.
pub const MAX_ATOMS: usize = 24;
/// Tables at least this wide are split across the thread pool.
const PARALLEL_ATOMS: usize = 14;

/// Whether `term` holds under every assignment; `None` when it has more
/// than [`MAX_ATOMS`] atoms.
pub fn is_tautology(term: &MiniTerm) -> Option<bool> {
    let atoms = term.atoms();
    if atoms.len() > MAX_ATOMS {
        return None;
    }
    let rows = 1u64 << atoms.len();
    let check = |row: u64| term.eval(&atoms, row);
    Some(if atoms.len() >= PARALLEL_ATOMS {
        par::all_in_range(0..rows, check)
    } else {
        par::seq::all_in_range(0..rows, check)
    })
}

pub fn is_tautology_sequential(term: &MiniTerm) -> Option<bool> {
    let atoms = term.atoms();
    if atoms.len() > MAX_ATOMS {
        return None;
    }
    Some(par::seq::all_in_range(0..1u64 << atoms.len(), |row| term.eval(&atoms, row)))
}

/// The goal as one implication: `(a1 /\ ... /\ an) ==> c`.
pub fn goal_term(req: &AdviceRequest) -> Result<MiniTerm, TermError> {
    let conclusion = MiniTerm::parse(&req.conclusion)?;
    let mut hyps = req.assumptions.iter().map(|a| MiniTerm::parse(a)).collect::<Result<Vec<_>, _>>()?;
    let Some(mut hyp) = hyps.pop() else {
        return Ok(conclusion);
    };
    while let Some(h) = hyps.pop() {
        hyp = MiniTerm::And(Box::new(h), Box::new(hyp));
    }
    Ok(MiniTerm::Imp(Box::new(hyp), Box::new(conclusion)))
}

pub fn tautology_strategy(req: &AdviceRequest) -> Option<String> {
    let term = goal_term(req).ok()?;
    is_tautology(&term)?.then(|| TAUTOLOGY_ADVICE.to_string())
}

/// Cooperative cancellation flag shared by one dispatch.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

pub trait Strategy: Send + Sync {
    fn name(&self) -> &str;
    /// Advice for `req`, or `None`. Long runs should poll `cancel`.
    fn run(&self, req: &AdviceRequest, cancel: &CancelToken) -> Option<String>;
}

pub struct TautologyStrategy;

impl Strategy for TautologyStrategy {
    fn name(&self) -> &str {
        "tautology"
    }

    fn run(&self, req: &AdviceRequest, _cancel: &CancelToken) -> Option<String> {
        tautology_strategy(req)
    }
}

/// Test strategy with scripted timing and outcome. Records whether it saw
/// cancellation.
#[derive(Debug, Default)]
pub struct StubStrategy {
    pub name: String,
    pub delay: Duration,
    pub advice: Option<String>,
    pub panics: bool,
    pub runs: AtomicUsize,
    pub cancelled: AtomicBool,
    pub finished: AtomicBool,
}

impl StubStrategy {
    pub fn new(name: &str, delay: Duration, advice: Option<&str>) -> Self {
        StubStrategy {
            name: name.to_string(),
            delay,
            advice: advice.map(str::to_string),
            ..StubStrategy::default()
        }
    }

    pub fn panicking(name: &str) -> Self {
        StubStrategy {
            name: name.to_string(),
            panics: true,
            ..StubStrategy::default()
        }
    }

    pub fn was_cancelled(&self) -> bool {
        self.cancelled.load(Ordering::SeqCst)
    }

    pub fn has_finished(&self) -> bool {
        self.finished.load(Ordering::SeqCst)
    }
}

impl Strategy for StubStrategy {
    fn name(&self) -> &str {
        &self.name
    }

    fn run(&self, _req: &AdviceRequest, cancel: &CancelToken) -> Option<String> {
        self.runs.fetch_add(1, Ordering::SeqCst);
        if self.panics {
            panic!("strategy {} crashed", self.name);
        }
        let deadline = Instant::now() + self.delay;
        while Instant::now() < deadline {
            if cancel.is_cancelled() {
                self.cancelled.store(true, Ordering::SeqCst);
                self.finished.store(true, Ordering::SeqCst);
                return None;
            }
            thread::sleep(Duration::from_millis(1).min(deadline - Instant::now()));
        }
        self.finished.store(true, Ordering::SeqCst);
        self.advice.clone()
    }
}

/// How long stragglers get to notice cancellation before dispatch returns
/// without them.
const JOIN_GRACE: Duration = Duration::from_millis(200);

/// Runs every strategy concurrently; the first advice wins and the rest are
/// cancelled. A panicking strategy counts as having no advice.
pub fn dispatch(
    req: &AdviceRequest,
    strategies: &[Arc<dyn Strategy>],
    timeout: Duration,
) -> Option<(String, String)> {
    let cancel = CancelToken::default();
    let (tx, rx) = mpsc::channel();
    let req = Arc::new(req.clone());
    let mut handles = Vec::with_capacity(strategies.len());
    for (i, s) in strategies.iter().enumerate() {
        let (s, tx, cancel, req) = (s.clone(), tx.clone(), cancel.clone(), req.clone());
        handles.push(thread::spawn(move || {
            let result = catch_unwind(AssertUnwindSafe(|| s.run(&req, &cancel))).unwrap_or_else(|_| {
                log::warn!("strategy {} panicked", s.name());
                None
            });
            let _ = tx.send((i, result));
        }));
    }
    drop(tx);

    let deadline = Instant::now() + timeout;
    let mut winner = None;
    let mut done = vec![false; strategies.len()];
    while done.iter().any(|d| !d) {
        let now = Instant::now();
        if now >= deadline {
            break;
        }
        match rx.recv_timeout(deadline - now) {
            Ok((i, result)) => {
                done[i] = true;
                if let Some(advice) = result {
                    winner = Some((strategies[i].name().to_string(), advice));
                    break;
                }
            }
            Err(_) => break,
        }
    }
    cancel.cancel();

    let grace = Instant::now() + JOIN_GRACE;
    while done.iter().any(|d| !d) {
        let now = Instant::now();
        if now >= grace {
            break;
        }
        match rx.recv_timeout(grace - now) {
            Ok((i, _)) => done[i] = true,
            Err(_) => break,
        }
    }
    for (handle, finished) in handles.into_iter().zip(&done) {
        if *finished {
            let _ = handle.join();
        } else {
            log::warn!("a strategy ignored cancellation; leaving it detached");
        }
    }
    winner
}

/// Answers request lines from a cache or by dispatching the strategies.
pub struct AdviceServer {
    strategies: Vec<Arc<dyn Strategy>>,
    timeout: Duration,
    cache: RwLock<HashMap<String, Vec<String>>>,
    dispatches: AtomicUsize,
}

impl Default for AdviceServer {
    fn default() -> Self {
        AdviceServer::new(vec![Arc::new(TautologyStrategy)], Duration::from_secs(10))
    }
}

impl AdviceServer {
    pub fn new(strategies: Vec<Arc<dyn Strategy>>, timeout: Duration) -> Self {
        assert!(!strategies.is_empty(), "advice server needs a strategy");
        AdviceServer {
            strategies,
            timeout,
            cache: RwLock::default(),
            dispatches: AtomicUsize::new(0),
        }
    }

    /// Number of requests that ran the strategies (cache misses).
    pub fn dispatches(&self) -> usize {
        self.dispatches.load(Ordering::SeqCst)
    }

    /// Advice lines for a request line. Errors are protocol errors.
    pub fn advise(&self, line: &str) -> Result<Vec<String>, ProtocolError> {
        if let Some(hit) = self.cache.read().unwrap().get(line) {
            return Ok(hit.clone());
        }
        let req = decode_goal(line)?;
        self.dispatches.fetch_add(1, Ordering::SeqCst);
        let advice: Vec<String> = dispatch(&req, &self.strategies, self.timeout)
            .map(|(_, a)| a)
            .into_iter()
            .collect();
        self.cache.write().unwrap().insert(line.to_string(), advice.clone());
        Ok(advice)
    }

    /// Serves one request on `conn`: reads a line, writes the advice lines
    /// (or one `error:` line) and returns, after which the caller closes.
    pub fn serve_connection<C: Read + Write>(&self, conn: &mut C) -> io::Result<()> {
        let reply = match read_request(conn) {
            Ok(line) => self.advise(&line),
            Err(e) => Err(e),
        };
        let mut out = String::new();
        match reply {
            Ok(lines) => {
                for l in lines {
                    out.push_str(&l);
                    out.push('\n');
                }
            }
            Err(e) => out.push_str(&format!("error: {e}\n")),
        }
        conn.write_all(out.as_bytes())?;
        conn.flush()
    }

    /// Accepts connections forever, one thread each.
    pub fn serve_tcp(self: Arc<Self>, listener: TcpListener) {
        for stream in listener.incoming() {
            let mut stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            let server = self.clone();
            thread::spawn(move || {
                let _ = stream.set_read_timeout(Some(Duration::from_secs(30)));
                if let Err(e) = server.serve_connection(&mut stream) {
                    log::debug!("advice connection: {e}");
                }
                let _ = stream.shutdown(std::net::Shutdown::Both);
            });
        }
    }

    /// Binds `addr` and serves on a background thread.
    pub fn spawn(self: Arc<Self>, addr: impl ToSocketAddrs) -> io::Result<SocketAddr> {
        let listener = TcpListener::bind(addr)?;
        let local = listener.local_addr()?;
        thread::spawn(move || self.serve_tcp(listener));
        Ok(local)
    }
}

fn read_request<R: Read>(conn: &mut R) -> Result<String, ProtocolError> {
    let mut reader = BufReader::new(conn.take(MAX_REQUEST as u64 + 1));
    let mut buf = Vec::new();
    reader.read_until(b'\n', &mut buf).map_err(|_| ProtocolError::Empty)?;
    if buf.last() == Some(&b'\n') {
        buf.pop();
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
    } else if buf.len() > MAX_REQUEST {
        return Err(ProtocolError::TooLong);
    }
    String::from_utf8(buf).map_err(|_| ProtocolError::Encoding)
}

/// Client side: sends one line and collects the reply lines until the
/// server closes.
pub fn request_advice(addr: impl ToSocketAddrs, line: &str, timeout: Duration) -> io::Result<Vec<String>> {
    let addr = addr
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no address"))?;
    let mut stream = TcpStream::connect_timeout(&addr, timeout)?;
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;
    stream.write_all(line.as_bytes())?;
    stream.write_all(b"\n")?;
    stream.flush()?;
    let mut reply = String::new();
    stream.read_to_string(&mut reply)?;
    Ok(reply.lines().map(str::to_string).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(assumptions: &[&str], conclusion: &str) -> AdviceRequest {
        AdviceRequest {
            assumptions: assumptions.iter().map(|s| s.to_string()).collect(),
            conclusion: conclusion.to_string(),
        }
    }

    #[test]
    fn encoding() {
        assert_eq!(encode_goal(&req(&["x = y"], "y = x")).unwrap(), "x = y`y = x");
        assert_eq!(encode_goal(&req(&[], "p \\/ ~p")).unwrap(), "p \\/ ~p");
        assert_eq!(encode_goal(&req(&["a`"], "c")), Err(ProtocolError::Separator(0)));
        assert_eq!(encode_goal(&req(&[], "")), Err(ProtocolError::Empty));
    }

    #[test]
    fn decoding() {
        assert_eq!(decode_goal("a`b`c").unwrap(), req(&["a", "b"], "c"));
        assert_eq!(decode_goal("c").unwrap(), req(&[], "c"));
        assert_eq!(decode_goal(" a ` b").unwrap(), req(&[" a "], " b"));
        assert_eq!(decode_goal(""), Err(ProtocolError::Empty));
    }

    #[test]
    fn term_precedence() {
        let t = MiniTerm::parse("~p /\\ q \\/ r ==> s ==> t <=> u").unwrap();
        assert_eq!(t.to_string(), "~p /\\ q \\/ r ==> s ==> t <=> u");
        let MiniTerm::Iff(lhs, _) = &t else { panic!() };
        let MiniTerm::Imp(a, rest) = lhs.as_ref() else { panic!() };
        assert!(matches!(a.as_ref(), MiniTerm::Or(..)));
        assert!(matches!(rest.as_ref(), MiniTerm::Imp(..)));
        assert_eq!(MiniTerm::parse("(p ==> q) ==> r").unwrap().to_string(), "(p ==> q) ==> r");
        assert_eq!(MiniTerm::parse("~(p /\\ q)").unwrap().to_string(), "~(p /\\ q)");
        assert!(MiniTerm::parse("n * (n + 1) = 2 * k").is_err());
        assert!(MiniTerm::parse("p /\\").is_err());
        assert!(MiniTerm::parse("(p").is_err());
    }

    #[test]
    fn tautologies() {
        assert_eq!(tautology_strategy(&req(&[], "p \\/ ~p")).as_deref(), Some(TAUTOLOGY_ADVICE));
        assert_eq!(tautology_strategy(&req(&[], "T")).as_deref(), Some(TAUTOLOGY_ADVICE));
        assert_eq!(tautology_strategy(&req(&["p"], "q")), None);
        assert_eq!(tautology_strategy(&req(&["p", "p ==> q"], "q")).as_deref(), Some(TAUTOLOGY_ADVICE));
        assert_eq!(tautology_strategy(&req(&[], "n * (n + 1) = 2 * k")), None);
    }

    #[test]
    fn wide_table_uses_same_answer() {
        let atoms: Vec<String> = (0..16).map(|i| format!("a{i}")).collect();
        let t = MiniTerm::parse(&format!("{} ==> a0", atoms.join(" /\\ "))).unwrap();
        assert_eq!(is_tautology(&t), Some(true));
        let t = MiniTerm::parse(&atoms.join(" \\/ ")).unwrap();
        assert_eq!(is_tautology(&t), is_tautology_sequential(&t));
        assert_eq!(is_tautology(&t), Some(false));
    }

    #[test]
    fn goal_extraction() {
        let r = "val it : goalstack = 1 subgoal (1 total)\n\n  0 [`p`]\n\n`p \\/ q`\n";
        assert_eq!(goal_from_response(r), Some(req(&["p"], "p \\/ q")));
        assert_eq!(goal_from_response("val it : goalstack = No goals\n"), None);
    }

    fn strategies(list: Vec<Arc<StubStrategy>>) -> Vec<Arc<dyn Strategy>> {
        list.into_iter().map(|s| s as Arc<dyn Strategy>).collect()
    }

    #[test]
    fn delayed_success_beats_fast_failure() {
        let fail = Arc::new(StubStrategy::new("fail", Duration::ZERO, None));
        let slow = Arc::new(StubStrategy::new("slow", Duration::from_millis(50), Some("e X;;")));
        let got = dispatch(&req(&[], "p"), &strategies(vec![fail.clone(), slow]), Duration::from_secs(5));
        assert_eq!(got, Some(("slow".into(), "e X;;".into())));
        assert!(fail.has_finished());
    }

    #[test]
    fn winner_cancels_the_rest() {
        let a = Arc::new(StubStrategy::new("a", Duration::ZERO, Some("e A;;")));
        let b = Arc::new(StubStrategy::new("b", Duration::from_secs(30), Some("e B;;")));
        let got = dispatch(&req(&[], "p"), &strategies(vec![a, b.clone()]), Duration::from_secs(5));
        assert_eq!(got.unwrap().0, "a");
        assert!(b.was_cancelled());
    }

    #[test]
    fn crashes_and_timeouts_give_nothing() {
        let crash = Arc::new(StubStrategy::panicking("crash"));
        let none = Arc::new(StubStrategy::new("none", Duration::ZERO, None));
        assert_eq!(
            dispatch(&req(&[], "p"), &strategies(vec![crash, none]), Duration::from_secs(5)),
            None
        );
        let slow = Arc::new(StubStrategy::new("slow", Duration::from_secs(30), Some("x")));
        let start = Instant::now();
        assert_eq!(
            dispatch(&req(&[], "p"), &strategies(vec![slow.clone()]), Duration::from_millis(50)),
            None
        );
        assert!(start.elapsed() < Duration::from_secs(2));
        assert!(slow.was_cancelled());
    }

    #[test]
    fn connection_replies_and_caches() {
        let server = AdviceServer::default();
        let mut conn = io::Cursor::new(b"p \\/ ~p\n".to_vec());
        let mut out = Vec::new();
        struct Duplex<'a>(&'a mut io::Cursor<Vec<u8>>, &'a mut Vec<u8>);
        impl Read for Duplex<'_> {
            fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
                self.0.read(buf)
            }
        }
        impl Write for Duplex<'_> {
            fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
                self.1.write(buf)
            }
            fn flush(&mut self) -> io::Result<()> {
                Ok(())
            }
        }
        server.serve_connection(&mut Duplex(&mut conn, &mut out)).unwrap();
        assert_eq!(out, b"e (TAUT_PROVE);;\n");
        assert_eq!(server.advise("p \\/ ~p").unwrap(), ["e (TAUT_PROVE);;"]);
        assert_eq!(server.dispatches(), 1);
        assert!(server.advise("").is_err());
    }
}
