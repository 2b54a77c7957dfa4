//! Property tests for the invariants of each module.

mod common;

use std::collections::HashMap;

use formal_wiki::advice::{decode_goal, encode_goal, is_tautology, is_tautology_sequential, AdviceRequest, MiniTerm};
use formal_wiki::creolifier::{creolify, math_segments};
use formal_wiki::frame_model::{new_document, Flavor};
use formal_wiki::html::check_well_formed;
use formal_wiki::hyperlinker::{
    build_index, build_index_sequential, export_index, import_index, link_corpus, link_corpus_sequential,
    LinkerConfig, SymbolIndex,
};
use formal_wiki::prover_session::{InProcessStub, ProverSession};
use formal_wiki::wiki_renderer::{parse_wiki, render_page, RenderContext};
use formal_wiki::{reconstruct_source, split_commands, Frame};
use proptest::prelude::*;
use rand::SeedableRng;

use common::*;

/// Text built from the characters that matter to the splitter.
fn script_text() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just(";;".to_string()),
        Just("(*".to_string()),
        Just("*)".to_string()),
        Just("\"".to_string()),
        Just("`".to_string()),
        Just("\n".to_string()),
        Just(" ".to_string()),
        Just("\\".to_string()),
        Just(";".to_string()),
        "[a-z_]{1,6}",
        "[ \t\n]{1,3}",
    ];
    prop::collection::vec(piece, 0..40).prop_map(|v| v.concat())
}

/// Scripts that always split: commands, comments and strings in balance.
fn well_formed_script() -> impl Strategy<Value = String> {
    let item = prop_oneof![
        "[a-z]{1,5}( [A-Z_]{1,6})?".prop_map(|c| format!("{c};;")),
        "[a-z ]{0,8}".prop_map(|c| format!("(* {c} *)")),
        "[a-z ;]{0,8}".prop_map(|c| format!("let s = \"{c}\";;")),
        "[a-z ;]{0,8}".prop_map(|c| format!("g `{c}`;;")),
        "[a-z ;]{0,6}".prop_map(|c| format!("let t = (* {c} ;; *) x;;")),
    ];
    let sep = prop_oneof![Just("\n"), Just("\n\n"), Just(" "), Just("\n  ")];
    (prop::collection::vec((sep, item), 1..12), "[ \n]{0,3}").prop_map(|(v, tail)| {
        let mut s: String = v.into_iter().map(|(sep, item)| format!("{sep}{item}")).collect();
        s.push_str(&tail);
        s
    })
}

fn mini_term() -> impl Strategy<Value = MiniTerm> {
    let leaf = prop_oneof![
        Just(MiniTerm::Const(true)),
        Just(MiniTerm::Const(false)),
        "[a-e]".prop_map(MiniTerm::Atom),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| MiniTerm::Not(Box::new(t))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| MiniTerm::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| MiniTerm::Or(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| MiniTerm::Imp(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| MiniTerm::Iff(Box::new(a), Box::new(b))),
        ]
    })
}

fn latex_text() -> impl Strategy<Value = String> {
    let math = prop_oneof![
        "[a-z+=^ ]{1,6}".prop_map(|m| format!("${m}$")),
        "[a-z]{1,3}".prop_map(|m| format!("$\\emph{{{m}}}\\subset\\ring{{R}}^n$")),
        "[a-z ]{1,5}".prop_map(|m| format!("\\[ \\newterm{{{m}}} \\]")),
        "[a-z]{1,4}".prop_map(|m| format!("\\begin{{align}}{m} & \\label{{x}}\\end{{align}}")),
    ];
    let prose = prop_oneof![
        "[a-z ]{1,12}",
        "[a-z]{1,6}".prop_map(|w| format!("\\emph{{{w}}}")),
        "[a-z]{1,6}".prop_map(|w| format!("\\newterm{{{w}}}")),
        "[A-Z]{4}".prop_map(|w| format!("\\guid{{{w}}}")),
        "[a-z]{1,6}".prop_map(|w| format!("\\textbf{{\\emph{{{w}}}}}")),
        Just("\n\n".to_string()),
        Just("\n".to_string()),
    ];
    prop::collection::vec(prop_oneof![math, prose], 0..12).prop_map(|v| v.join(" "))
}

fn index_of(names: &[String]) -> SymbolIndex {
    let tsv: String = names
        .iter()
        .map(|n| format!("{n}\tdefinition\tsrc/f.hl\tsrc/f.html#{n}\n"))
        .collect();
    import_index(&tsv).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn splitting_then_reconstructing_is_identity(text in script_text()) {
        if let Ok(frames) = split_commands(&text) {
            if frames.is_empty() {
                prop_assert!(text.trim().is_empty());
            } else {
                let doc = new_document("src/p.hl", frames, Flavor::FormalScript).unwrap();
                prop_assert_eq!(reconstruct_source(&doc), text);
            }
        }
    }

    #[test]
    fn well_formed_scripts_split_and_round_trip(text in well_formed_script()) {
        let frames = split_commands(&text).unwrap();
        prop_assert!(frames.iter().all(|f| !f.unterminated));
        for f in &frames {
            prop_assert!(f.is_comment() || f.command_text.ends_with(";;"));
        }
        let doc = new_document("src/p.hl", frames, Flavor::FormalScript).unwrap();
        prop_assert_eq!(reconstruct_source(&doc), text);
    }

    #[test]
    fn goals_round_trip(assumptions in prop::collection::vec("[^`\r\n]{0,12}", 0..5), conclusion in "[^`\r\n]{0,12}") {
        let req = AdviceRequest { assumptions, conclusion };
        prop_assume!(!(req.assumptions.is_empty() && req.conclusion.is_empty()));
        let line = encode_goal(&req).unwrap();
        prop_assert_eq!(decode_goal(&line).unwrap(), req);
    }

    #[test]
    fn terms_print_and_parse_back(t in mini_term()) {
        let text = t.to_string();
        prop_assert_eq!(MiniTerm::parse(&text).unwrap(), t.clone());
        prop_assert_eq!(is_tautology(&t), is_tautology_sequential(&t));
    }

    #[test]
    fn math_is_passed_through_byte_exact(text in latex_text()) {
        let out = creolify(&text, &SymbolIndex::new()).unwrap();
        for seg in math_segments(&text) {
            prop_assert!(out.wiki.contains(&text[seg.clone()]), "lost {:?} in {:?}", &text[seg], out.wiki);
        }
    }

    #[test]
    fn enlarging_the_index_never_unresolves_a_guid(
        guids in prop::collection::vec("[A-Z]{3}", 1..8),
        small in prop::collection::vec(any::<bool>(), 8),
        extra in prop::collection::vec(any::<bool>(), 8),
    ) {
        let text: String = guids.iter().map(|g| format!("\\guid{{{g}}} and ")).collect();
        let a: Vec<String> = guids.iter().zip(&small).filter(|(_, &k)| k).map(|(g, _)| g.clone()).collect();
        let b: Vec<String> = guids
            .iter()
            .zip(small.iter().zip(&extra))
            .filter(|(_, (&k, &e))| k || e)
            .map(|(g, _)| g.clone())
            .collect();
        let ra = creolify(&text, &index_of(&a)).unwrap();
        let rb = creolify(&text, &index_of(&b)).unwrap();
        for g in &guids {
            if !ra.unresolved.contains(g) {
                prop_assert!(!rb.unresolved.contains(g), "{} became unresolved", g);
            }
        }
        prop_assert!(rb.unresolved.len() <= ra.unresolved.len());
    }

    #[test]
    fn labels_resolve_within_a_page(labels in prop::collection::btree_set("[a-z]{1,4}:[a-z]{1,4}", 1..5)) {
        let text: String = labels.iter().map(|l| format!("\\label{{{l}}} see \\ref{{{l}}}.\n")).collect();
        let wiki = creolify(&text, &SymbolIndex::new()).unwrap().wiki;
        let docs: HashMap<String, formal_wiki::Document> = HashMap::new();
        let index = SymbolIndex::new();
        let html = render_page(&parse_wiki(&wiki), &RenderContext {
            page: "doc/p.wiki", registry: &docs, index: &index, base: "/page/", math_prelude: None,
        });
        for l in &labels {
            let id = format!("id=\"{l}\"");
            let href = format!("href=\"#{l}\"");
            prop_assert!(html.contains(&id), "{} missing in {}", id, html);
            prop_assert!(html.contains(&href), "{} missing in {}", href, html);
        }
    }

    #[test]
    fn wiki_parsing_is_total_and_renders_well_formed(text in "(\\PC|[\\[\\]{}=*/~$\\n|#?]){0,80}") {
        let ast = parse_wiki(&text);
        let docs: HashMap<String, formal_wiki::Document> = HashMap::new();
        let index = SymbolIndex::new();
        let html = render_page(&ast, &RenderContext {
            page: "doc/p.wiki", registry: &docs, index: &index, base: "/page/", math_prelude: None,
        });
        prop_assert!(check_well_formed(&html).is_ok(), "{:?}", check_well_formed(&html));
    }

    #[test]
    fn tracked_depth_matches_the_prover(seed in any::<u64>(), len in 1usize..30) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut s = ProverSession::start(Box::new(InProcessStub::default())).unwrap();
        let doc = parse("src/d.hl", &random_script(&mut rng, len));
        for f in &doc.frames {
            let outcome = s.send_frame(f).unwrap();
            prop_assert_eq!(outcome.state, s.probe().unwrap());
            prop_assert_eq!(outcome.state, s.depth());
        }
    }

    #[test]
    fn index_export_round_trips_on_exported_fields(seed in any::<u64>(), files in 1usize..6) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let corpus = synthetic_corpus(files, 5, &mut rng);
        let docs: Vec<&formal_wiki::Document> = corpus.docs.iter().collect();
        let index = build_index(&docs, &corpus.config);
        let text = export_index(&index);
        let back = import_index(&text).unwrap();
        prop_assert_eq!(export_index(&back), text);
        for (a, b) in index.iter().zip(back.iter()) {
            prop_assert_eq!((&a.name, a.kind, &a.file, a.url()), (&b.name, b.kind, &b.file, b.url()));
        }
    }

    #[test]
    fn parallel_and_sequential_agree(seed in any::<u64>(), files in 1usize..8) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let corpus = synthetic_corpus(files, 6, &mut rng);
        let docs: Vec<&formal_wiki::Document> = corpus.docs.iter().collect();
        let a = build_index(&docs, &corpus.config);
        let b = build_index_sequential(&docs, &corpus.config);
        prop_assert_eq!(export_index(&a), export_index(&b));
        prop_assert_eq!(link_corpus(&docs, &a, "/"), link_corpus_sequential(&docs, &b, "/"));
    }
}

#[test]
fn default_linker_config_has_no_lists() {
    let c = LinkerConfig::default();
    assert!(c.allow_list.is_empty() && c.deny_list.is_empty());
    assert!(!c.patterns.is_empty());
}

#[test]
fn frame_text_changes_drop_memoized_data() {
    let mut f = Frame::command("e A;;");
    f.markup = Some("<b>".into());
    f.state_number = Some(3);
    f.set_command_text("e A;;");
    assert!(f.markup.is_some());
    f.set_command_text("e B;;");
    assert!(f.markup.is_none() && f.state_number.is_none());
}
