//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use formal_wiki::frame_model::{new_document, Document, Flavor};
use formal_wiki::hyperlinker::LinkerConfig;
use formal_wiki::prover_session::{CountingFactory, InProcessFactory, ProverStats, StubConfig};
use formal_wiki::service::{AdvisorConfig, AppState, RepositoryStore};
use formal_wiki::split_commands;
use rand::rngs::StdRng;
use rand::Rng;

/// The worked example script.
pub const EXAMPLE: &str = "(* Example code fragment. *)\ng `x=x`;;\ne REFL_TAC;;\nlet t = (* Use top_thm to verify the proof. *)\n  top_thm();;\n";

pub fn parse(uri: &str, text: &str) -> Document {
    new_document(uri, split_commands(text).expect("script splits"), Flavor::FormalScript).expect("well formed")
}

/// Random proof script: optional leading comments, one `g`, then a mix of
/// tactics, failing tactics, comments and `let`s.
pub fn random_script(rng: &mut StdRng, len: usize) -> String {
    let mut out = String::new();
    for _ in 0..rng.gen_range(0..3) {
        out.push_str(&format!("(* note {} *)\n", rng.gen::<u16>()));
    }
    out.push_str(&format!("g `p{} = p{}`;;\n", rng.gen::<u8>(), rng.gen::<u8>()));
    for _ in 1..len {
        out.push_str(&random_step(rng));
    }
    out
}

pub fn random_step(rng: &mut StdRng) -> String {
    match rng.gen_range(0..10) {
        0..=5 => format!("e (TAC_{});;\n", rng.gen::<u16>()),
        6 => "e FAIL_TAC;;\n".to_string(),
        7 => format!("(* step {} *)\n", rng.gen::<u16>()),
        8 => format!("let th{} = top_thm();;\n", rng.gen::<u16>()),
        _ => format!("e (REWRITE_TAC[]) (* ;; {} *);;\n", rng.gen::<u16>()),
    }
}

/// Script of `n` frames where every frame is a successful tactic after the
/// initial goal, so frame i has state i + 1.
pub fn tactic_script(n: usize, salt: &str) -> String {
    let mut out = String::from("g `x = x`;;\n");
    for i in 1..n {
        out.push_str(&format!("e (TAC_{i}_{salt});;\n"));
    }
    out
}

/// A temporary repository with a stub-backed service whose prover traffic
/// is counted.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub app: Arc<AppState>,
    pub stats: Arc<ProverStats>,
}

pub fn fixture(files: &[(&str, &str)], stub: StubConfig, advisor: AdvisorConfig) -> Fixture {
    let dir = tempfile::tempdir().expect("temp dir");
    let store = RepositoryStore::open(dir.path()).expect("store opens");
    for (uri, text) in files {
        store.write(uri, text).expect("write");
    }
    let (app, stats) = reopen(dir.path(), stub, advisor);
    Fixture { dir, app, stats }
}

/// A fresh service over an existing repository directory.
pub fn reopen(root: &std::path::Path, stub: StubConfig, advisor: AdvisorConfig) -> (Arc<AppState>, Arc<ProverStats>) {
    let factory = CountingFactory::new(InProcessFactory(stub));
    let stats = factory.stats();
    let store = RepositoryStore::open(root).expect("store opens");
    let app = AppState::new(store, Arc::new(factory), advisor).expect("service starts");
    (app, stats)
}

/// Synthetic formal corpus: `files` sources with `per_file` definitions
/// each, plus one theorem per file that uses names from earlier files.
/// Every tenth name of the first file is also mentioned in later files and
/// listed in `denied`.
pub struct SyntheticCorpus {
    pub docs: Vec<Document>,
    pub config: LinkerConfig,
    pub denied: Vec<String>,
    pub defined: usize,
}

pub fn synthetic_corpus(files: usize, per_file: usize, rng: &mut StdRng) -> SyntheticCorpus {
    let name = |f: usize, d: usize| format!("DEF_{f}_{d}");
    let denied: Vec<String> = (0..per_file).step_by(10).map(|d| name(0, d)).collect();
    let mut docs = Vec::with_capacity(files);
    for f in 0..files {
        let mut text = format!("(* generated file {f} *)\nmodule M{f} = struct;;\n");
        for d in 0..per_file {
            let uses = if f > 0 {
                let (uf, ud) = (rng.gen_range(0..f), rng.gen_range(0..per_file));
                format!(" /\\ {} x", name(uf, ud))
            } else {
                String::new()
            };
            text.push_str(&format!(
                "let {} = new_definition `{} x <=> x = {d}{uses}`;;\n",
                name(f, d),
                name(f, d)
            ));
        }
        let refs: Vec<String> = (0..4)
            .map(|_| name(rng.gen_range(0..=f), rng.gen_range(0..per_file)))
            .chain(if f > 0 { denied.first().cloned() } else { None })
            .collect();
        text.push_str(&format!(
            "let THM_{f} = (* uses {} *) REWRITE_RULE [{}] TRUTH;;\nend;;\n",
            refs[0],
            refs.join("; ")
        ));
        docs.push(parse(&format!("src/gen/f{f:03}.hl"), &text));
    }
    let mut config = LinkerConfig::default();
    config.deny_list.extend(denied.iter().cloned());
    SyntheticCorpus {
        docs,
        config,
        denied,
        defined: files * (per_file + 1),
    }
}

/// Map from page path to HTML, in the form `dangling_links` expects.
pub fn pages_by_path(pages: Vec<(String, String)>) -> HashMap<String, String> {
    pages.into_iter().collect()
}

/// Independent propositional syntax used as a test oracle: formulas are
/// built here, printed in the advice grammar and evaluated directly.
#[derive(Debug, Clone)]
pub enum Prop {
    T,
    F,
    Var(usize),
    Not(Box<Prop>),
    Bin(char, Box<Prop>, Box<Prop>),
}

pub const VARS: [&str; 4] = ["p", "q", "r", "s"];
pub const OPS: [char; 4] = ['&', '|', '>', '='];

impl Prop {
    /// Fully parenthesized text in the advice grammar.
    pub fn text(&self) -> String {
        match self {
            Prop::T => "T".into(),
            Prop::F => "F".into(),
            Prop::Var(i) => VARS[*i].into(),
            Prop::Not(a) => format!("~({})", a.text()),
            Prop::Bin(op, a, b) => {
                let sym = match op {
                    '&' => "/\\",
                    '|' => "\\/",
                    '>' => "==>",
                    _ => "<=>",
                };
                format!("({}) {sym} ({})", a.text(), b.text())
            }
        }
    }

    pub fn eval(&self, row: u32) -> bool {
        match self {
            Prop::T => true,
            Prop::F => false,
            Prop::Var(i) => row >> i & 1 == 1,
            Prop::Not(a) => !a.eval(row),
            Prop::Bin(op, a, b) => {
                let (x, y) = (a.eval(row), b.eval(row));
                match op {
                    '&' => x && y,
                    '|' => x || y,
                    '>' => !x || y,
                    _ => x == y,
                }
            }
        }
    }

    /// Truth over all 16 rows of the four variables.
    pub fn valid(&self) -> bool {
        (0..16).all(|row| self.eval(row))
    }
}

/// Every formula of connective depth at most `depth`.
pub fn all_props(depth: usize) -> Vec<Prop> {
    let mut levels: Vec<Vec<Prop>> = Vec::new();
    let leaves: Vec<Prop> = [Prop::T, Prop::F].into_iter().chain((0..4).map(Prop::Var)).collect();
    levels.push(leaves);
    for d in 1..=depth {
        let below: Vec<Prop> = levels.iter().flatten().cloned().collect();
        let shallower: Vec<Prop> = levels[..d - 1].iter().flatten().cloned().collect();
        let exact = &levels[d - 1];
        let mut next: Vec<Prop> = exact.iter().map(|a| Prop::Not(Box::new(a.clone()))).collect();
        // At least one operand has depth exactly d - 1.
        for op in OPS {
            for a in exact {
                for b in &below {
                    next.push(Prop::Bin(op, Box::new(a.clone()), Box::new(b.clone())));
                }
            }
            for a in &shallower {
                for b in exact {
                    next.push(Prop::Bin(op, Box::new(a.clone()), Box::new(b.clone())));
                }
            }
        }
        levels.push(next);
    }
    levels.into_iter().flatten().collect()
}

/// Random formula of connective depth at most `depth`.
pub fn random_prop(rng: &mut StdRng, depth: usize) -> Prop {
    if depth == 0 || rng.gen_range(0..5) == 0 {
        return match rng.gen_range(0..6) {
            0 => Prop::T,
            1 => Prop::F,
            i => Prop::Var(i - 2),
        };
    }
    if rng.gen_range(0..5) == 0 {
        return Prop::Not(Box::new(random_prop(rng, depth - 1)));
    }
    let op = OPS[rng.gen_range(0..4)];
    Prop::Bin(op, Box::new(random_prop(rng, depth - 1)), Box::new(random_prop(rng, depth - 1)))
}

/// Exact number of formulas of depth at most `d` over six leaves, four
/// binary connectives and negation.
pub fn count_props(depth: usize) -> f64 {
    let mut n = 6.0f64;
    for _ in 0..depth {
        n = 6.0 + n + 4.0 * n * n;
    }
    n
}
