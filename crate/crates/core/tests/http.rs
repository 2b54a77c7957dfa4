//! HTTP endpoints exercised through the router.

mod common;

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use formal_wiki::advice::{AdviceServer, TAUTOLOGY_ADVICE};
use formal_wiki::prover_session::StubConfig;
use formal_wiki::service::{router, AdviceReply, AdvisorConfig, AppState, EditReply, FrameResult, StateReply};
use serde_json::Value;
use tower::ServiceExt;

use common::*;

const FAN: &str = "(* Fans. *)\nlet FAN = new_definition `FAN x <=> x = x`;;\nlet FAN_LEMMA = prove(`FAN y`, REWRITE_TAC[FAN]);;\n";
const PAGE: &str = "= Fans =\nA //fan// is defined in [[src/fan.html#FAN|the sources]].\n\n{{src/fan.hl#FAN_LEMMA|the lemma}}\n\n{{{hol\ng `x = x`;;\ne REFL_TAC;;\n}}}\n";

async fn call(app: &Arc<AppState>, req: Request<Body>) -> (StatusCode, String) {
    let resp = router(app.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let body = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(body.to_vec()).unwrap())
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(uri: &str, body: &str) -> Request<Body> {
    Request::post(uri).body(Body::from(body.to_string())).unwrap()
}

fn repo(stub: StubConfig) -> Fixture {
    fixture(
        &[("src/fan.hl", FAN), ("src/example.hl", EXAMPLE), ("doc/fan.wiki", PAGE)],
        stub,
        AdvisorConfig::none(),
    )
}

#[tokio::test]
async fn pages_for_sources_wiki_and_missing() {
    let fx = repo(StubConfig::default());
    let (status, html) = call(&fx.app, get("/page/src/fan.hl")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(html.contains("id=\"FAN\""));
    assert!(html.contains("href=\"/page/src/fan.html#FAN\""), "{html}");

    let (status, html) = call(&fx.app, get("/page/doc/fan.wiki")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(html.contains("<em>fan</em>"));
    assert!(html.contains("href=\"/page/src/fan.html#FAN\""));
    assert!(html.contains("class=\"island\""));
    assert!(html.contains("FAN_LEMMA"));
    assert!(html.contains("data-doc=\"doc/fan.wiki@0\""));

    let (status, via_html) = call(&fx.app, get("/page/src/fan.html")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(via_html.contains("id=\"FAN\""));

    assert_eq!(call(&fx.app, get("/page/src/none.hl")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&fx.app, get("/page/../secret")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn state_is_computed_once_then_cached() {
    let fx = repo(StubConfig::default());
    let (status, body) = call(&fx.app, get("/state/src/example.hl/3")).await;
    assert_eq!(status, StatusCode::OK);
    let reply: StateReply = serde_json::from_str(&body).unwrap();
    assert_eq!((reply.frame, reply.state), (3, 2));
    assert!(reply.response.contains("thm"));
    let sends = fx.stats.sends();
    assert_eq!(sends, 3, "the comment frame is not sent");

    for i in 0..4 {
        call(&fx.app, get(&format!("/state/src/example.hl/{i}"))).await;
    }
    assert_eq!(fx.stats.sends(), sends);

    let (_, body) = call(&fx.app, get("/state/src/example.hl/0")).await;
    let comment: StateReply = serde_json::from_str(&body).unwrap();
    assert_eq!((comment.state, comment.response.as_str()), (0, ""));
}

#[tokio::test]
async fn state_of_a_code_block_in_a_page() {
    let fx = repo(StubConfig::default());
    let (status, body) = call(&fx.app, get("/state/doc/fan.wiki@0/1")).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let reply: StateReply = serde_json::from_str(&body).unwrap();
    assert_eq!(reply.state, 2);
}

#[tokio::test]
async fn unknown_documents_and_frames_are_not_found() {
    let fx = repo(StubConfig::default());
    assert_eq!(call(&fx.app, get("/state/src/none.hl/0")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&fx.app, get("/state/src/example.hl/9")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&fx.app, get("/state/src/example.hl/x")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(fx.stats.sends(), 0);
}

#[tokio::test]
async fn frames_after_a_failure_report_it() {
    let fx = repo(StubConfig {
        reject: vec!["REFL_TAC".into()],
        ..StubConfig::default()
    });
    let (status, body) = call(&fx.app, get("/state/src/example.hl/3")).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["frame"], 2);
    assert!(v["response"].as_str().unwrap().starts_with("Exception:"));
    // Frames before the failure are fine.
    assert_eq!(call(&fx.app, get("/state/src/example.hl/1")).await.0, StatusCode::OK);
}

#[tokio::test]
async fn a_dead_prover_is_a_bad_gateway() {
    let fx = repo(StubConfig {
        die_on: vec!["top_thm".into()],
        ..StubConfig::default()
    });
    let (status, _) = call(&fx.app, get("/state/src/example.hl/3")).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(call(&fx.app, get("/state/src/example.hl/2")).await.0, StatusCode::OK);
}

#[tokio::test]
async fn deleting_the_cache_directory_is_safe() {
    let fx = repo(StubConfig::default());
    let (_, before) = call(&fx.app, get("/state/src/example.hl/3")).await;
    std::fs::remove_dir_all(fx.dir.path().join("cache")).unwrap();
    fx.app.states().cache().forget();
    let (status, after) = call(&fx.app, get("/state/src/example.hl/3")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
    assert!(fx.dir.path().join("cache").read_dir().unwrap().count() > 0);
}

async fn edit(app: &Arc<AppState>, doc: &str, session: Option<&str>, text: &str) -> (StatusCode, EditReply) {
    let uri = match session {
        Some(s) => format!("/edit/{doc}?session={s}"),
        None => format!("/edit/{doc}"),
    };
    let (status, body) = call(app, post(&uri, text)).await;
    (status, serde_json::from_str(&body).unwrap_or_else(|e| panic!("{e}: {body}")))
}

#[tokio::test]
async fn editing_the_tactic_undoes_once_and_resends_the_rest() {
    let fx = repo(StubConfig::default());
    let (status, first) = edit(&fx.app, "src/example.hl", None, EXAMPLE).await;
    assert_eq!(status, StatusCode::OK);
    let states: Vec<u32> = first.frames.iter().map(|f| f.state).collect();
    assert_eq!(states, [0, 1, 2, 2]);

    let (sends, undos) = (fx.stats.sends(), fx.stats.undos());
    let changed = EXAMPLE.replace("REFL_TAC", "(CONV_TAC REFL_CONV)");
    let (_, second) = edit(&fx.app, "src/example.hl", Some(&first.session), &changed).await;
    assert_eq!(second.first_changed, Some(2));
    assert_eq!(fx.stats.undos() - undos, 1);
    assert_eq!(fx.stats.sends() - sends, 2);

    // Changing only the last frame re-executes only it.
    let sends = fx.stats.sends();
    let last = changed.replace("top_thm()", "top_thm ()");
    let (_, third) = edit(&fx.app, "src/example.hl", Some(&first.session), &last).await;
    assert_eq!(third.first_changed, Some(3));
    assert_eq!(fx.stats.sends() - sends, 1);

    // Posting the same text again executes nothing.
    let sends = fx.stats.sends();
    let (_, fourth) = edit(&fx.app, "src/example.hl", Some(&first.session), &last).await;
    assert_eq!(fx.stats.sends(), sends);
    assert_eq!(fourth.frames, third.frames);
}

#[tokio::test]
async fn unparseable_edits_keep_earlier_frames() {
    let fx = repo(StubConfig::default());
    let (_, first) = edit(&fx.app, "src/example.hl", None, EXAMPLE).await;
    let broken = format!("{EXAMPLE}e (* open comment;;\n");
    let (status, reply) = edit(&fx.app, "src/example.hl", Some(&first.session), &broken).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(reply.offset, Some(EXAMPLE.len() + 2));
    assert_eq!(reply.frames, first.frames);
    assert!(reply.error.is_some());
}

#[tokio::test]
async fn a_session_belongs_to_one_document() {
    let fx = repo(StubConfig::default());
    let (_, first) = edit(&fx.app, "src/example.hl", None, EXAMPLE).await;
    let uri = format!("/edit/src/fan.hl?session={}", first.session);
    assert_eq!(call(&fx.app, post(&uri, FAN)).await.0, StatusCode::CONFLICT);
}

#[tokio::test]
async fn streamed_edits_send_one_line_per_frame() {
    let fx = repo(StubConfig::default());
    let (status, body) = call(&fx.app, post("/edit/src/example.hl?stream=true", EXAMPLE)).await;
    assert_eq!(status, StatusCode::OK);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 5);
    let frames: Vec<FrameResult> = lines[..4].iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(frames.iter().map(|f| f.id).collect::<Vec<_>>(), [0, 1, 2, 3]);
    let reply: EditReply = serde_json::from_str(lines[4]).unwrap();
    assert_eq!(reply.frames, frames);
}

#[tokio::test]
async fn commit_writes_the_text_and_reindexes() {
    let fx = repo(StubConfig::default());
    let text = format!("{FAN}let FAN_TWO = new_definition `FAN_TWO = FAN`;;\n");
    let (_, reply) = edit(&fx.app, "src/fan.hl", None, &text).await;
    let (status, _) = call(&fx.app, post(&format!("/commit/src/fan.hl?session={}", reply.session), "")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(std::fs::read_to_string(fx.dir.path().join("src/fan.hl")).unwrap(), text);
    assert!(fx.app.corpus().index.contains("FAN_TWO"));
    let (_, html) = call(&fx.app, get("/page/src/fan.hl")).await;
    assert!(html.contains("id=\"FAN_TWO\""));
    assert_eq!(
        call(&fx.app, post("/commit/src/fan.hl?session=nope", "")).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn advice_without_an_advisor_is_a_warning() {
    let fx = repo(StubConfig::default());
    let (status, body) = call(&fx.app, post("/advice", "p \\/ ~p\n")).await;
    assert_eq!(status, StatusCode::OK);
    let reply: AdviceReply = serde_json::from_str(&body).unwrap();
    assert!(reply.advice.is_empty());
    assert!(reply.warning.is_some());

    // An address nobody listens on.
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = reopen(
        dir.path(),
        StubConfig::default(),
        AdvisorConfig {
            address: Some(addr.to_string()),
            timeout: Duration::from_millis(500),
        },
    );
    let (status, body) = call(&app, post("/advice", "p \\/ ~p")).await;
    assert_eq!(status, StatusCode::OK);
    let reply: AdviceReply = serde_json::from_str(&body).unwrap();
    assert!(reply.advice.is_empty());
    assert!(reply.warning.unwrap().contains("unreachable"));
}

#[tokio::test]
async fn advice_through_a_running_advisor() {
    let server = Arc::new(AdviceServer::default());
    let addr = server.spawn("127.0.0.1:0").unwrap();
    let advisor = AdvisorConfig {
        address: Some(addr.to_string()),
        timeout: Duration::from_secs(5),
    };
    let fx = fixture(&[], StubConfig::default(), advisor);
    let (_, body) = call(&fx.app, post("/advice", "p \\/ ~p\n")).await;
    let reply: AdviceReply = serde_json::from_str(&body).unwrap();
    assert_eq!(reply.advice, [TAUTOLOGY_ADVICE]);
    assert!(reply.warning.is_none());

    // Open goals produced by an edit are sent to the advisor as well.
    let (_, reply) = edit(&fx.app, "src/t.hl", None, "g `p \\/ ~p`;;\ng `p ==> q`;;\n").await;
    assert_eq!(reply.frames[0].advice, [TAUTOLOGY_ADVICE]);
    assert!(reply.frames[1].advice.is_empty());
    assert!(reply.frames.iter().all(|f| f.advice_warning.is_none()));
}
