//! Shared test support: a tiny HTTP server and on-disk scenarios.
#![allow(dead_code)]

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;

use cook::wire;
use cook_core::providers::{self as prov, GenerationRequest, RetrievedDocument};
use cook_core::stubs::{
    BagOfCharsEmbedder, EchoGenerator, FirstSentenceSummarizer, MemoryRetriever, PromptMatcher, Script, ScriptRule,
    ScriptedLlm, TokenOverlapScorer,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub type Handler = dyn Fn(&str, &str) -> (u16, String) + Send + Sync;

/// Answers every connection with `handler(path, body)` and closes it.
pub struct StubServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<(String, String)>>>,
}

impl StubServer {
    pub fn start(handler: impl Fn(&str, &str) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        let handler: Arc<Handler> = Arc::new(handler);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (log, handler) = (Arc::clone(&log), Arc::clone(&handler));
                thread::spawn(move || serve(stream, &log, handler.as_ref()));
            }
        });
        Self { url, requests }
    }

    pub fn paths(&self) -> Vec<String> {
        self.requests.lock().unwrap().iter().map(|(p, _)| p.clone()).collect()
    }
}

fn serve(stream: TcpStream, log: &Mutex<Vec<(String, String)>>, handler: &Handler) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut length = 0usize;
    let mut chunked = false;
    loop {
        let mut h = String::new();
        if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
            break;
        }
        let lower = h.to_ascii_lowercase();
        if let Some(v) = lower.strip_prefix("content-length:") {
            length = v.trim().parse().unwrap_or(0);
        }
        if lower.starts_with("transfer-encoding:") && lower.contains("chunked") {
            chunked = true;
        }
    }
    let mut body = Vec::new();
    if chunked {
        loop {
            let mut size = String::new();
            reader.read_line(&mut size).unwrap();
            let n = usize::from_str_radix(size.trim(), 16).unwrap_or(0);
            let mut chunk = vec![0; n + 2];
            reader.read_exact(&mut chunk).unwrap();
            if n == 0 {
                break;
            }
            body.extend_from_slice(&chunk[..n]);
        }
    } else {
        body.resize(length, 0);
        reader.read_exact(&mut body).unwrap();
    }
    let body = String::from_utf8(body).unwrap();
    log.lock().unwrap().push((path.clone(), body.clone()));
    let (status, reply) = handler(&path, &body);
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        reply.len()
    );
    let _ = stream.flush();
}

/// A URL nothing listens on.
pub fn dead_url() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    url
}

pub fn error_body(message: &str) -> String {
    serde_json::to_string(&wire::ErrorBody { error: message.into() }).unwrap()
}

fn reply<Req: DeserializeOwned, Resp: Serialize>(body: &str, f: impl FnOnce(Req) -> Resp) -> (u16, String) {
    match serde_json::from_str::<Req>(body) {
        Ok(req) => (200, serde_json::to_string(&f(req)).unwrap()),
        Err(e) => (400, error_body(&e.to_string())),
    }
}

/// Serves all six routes from the in-core stubs, validating request bodies
/// against the strict wire types.
pub fn stub_handler(corpus: Vec<RetrievedDocument>) -> impl Fn(&str, &str) -> (u16, String) + Send + Sync {
    let retriever = MemoryRetriever::new("retriever", corpus);
    let llm = ScriptedLlm::new("llm", Script { rules: Vec::new(), default: Some("Yes".into()) });
    move |path, body| match path {
        wire::GENERATE => reply(body, |r: wire::GenerateRequest| {
            let req = GenerationRequest { prompt: r.prompt, n: r.n, temperature: r.temperature, max_new_tokens: r.max_new_tokens };
            wire::GenerateResponse { texts: prov::generate(&EchoGenerator::new("g"), &req).unwrap().texts }
        }),
        wire::EMBED => reply(body, |r: wire::EmbedRequest| wire::EmbedResponse {
            vectors: prov::embed(&BagOfCharsEmbedder::new("e"), &r.texts).unwrap().vectors,
        }),
        wire::SUMMARIZE => reply(body, |r: wire::SummarizeRequest| wire::SummarizeResponse {
            summary: prov::summarize(&FirstSentenceSummarizer::new("s"), &r.text).unwrap(),
        }),
        wire::FACT_SCORE => reply(body, |r: wire::FactScoreRequest| wire::FactScoreResponse {
            score: prov::fact_score(&TokenOverlapScorer::new("f"), &r.claim, &r.evidence).unwrap().score,
        }),
        wire::RETRIEVE => reply(body, |r: wire::RetrieveRequest| wire::RetrieveResponse {
            documents: prov::retrieve(&retriever, &r.query, r.k as usize).unwrap().documents.into_iter().map(Into::into).collect(),
        }),
        wire::COMPLETE => reply(body, |r: wire::CompleteRequest| wire::CompleteResponse {
            text: prov::llm_complete(&llm, &r.prompt, &r.stop.unwrap_or_default(), &mut Vec::new()).unwrap(),
        }),
        _ => (404, error_body("no such route")),
    }
}

// ---- scenarios ---------------------------------------------------------------

pub const RECORDS: usize = 20;

pub struct Scenario {
    pub dir: tempfile::TempDir,
    pub registry: PathBuf,
    pub dataset: PathBuf,
}

pub fn question(i: usize) -> String {
    format!("What is the code word for item {i}?")
}

pub fn marker(i: usize) -> String {
    format!("marker{i:02}")
}

pub fn gold(i: usize) -> String {
    format!("Gold{i:02}")
}

fn contains_all(parts: &[String], ends_with: &str) -> PromptMatcher {
    PromptMatcher { contains: parts.to_vec(), ends_with: Some(ends_with.into()), ..PromptMatcher::default() }
}

fn write_json(path: &Path, value: &impl Serialize) {
    fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn write_lines<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) {
    let text: String = rows.into_iter().map(|r| serde_json::to_string(&r).unwrap() + "\n").collect();
    fs::write(path, text).unwrap();
}

const NOISE: &str = "xyzzy plugh fnord.";
const STUB_PROVIDERS: &str = r#"
[providers.llm]
stub = "scripted"
script = "llm.json"

[providers.embedder]
stub = "bag-of-chars"

[providers.summarizer]
stub = "first-sentence"

[providers.fact_scorer]
stub = "token-overlap"

[providers.retriever]
stub = "memory"
corpus = "corpus.jsonl"

[providers.gen-noise]
stub = "scripted"
script = "noise.json"
"#;

/// Gate, selection and fallback rules shared by both scenarios, placed after
/// the per-record answer rules.
fn llm_script(answer_rules: Vec<ScriptRule>, card_description: &str) -> Script {
    let gate = |excludes: Vec<String>| PromptMatcher {
        ends_with: Some("(Yes or No)".into()),
        excludes,
        ..PromptMatcher::default()
    };
    let mut script = Script { rules: answer_rules, default: Some("unknown".into()) };
    script = script.rule(gate(vec!["Knowledge:".into()]), "Yes");
    script = script.rule(gate(vec![]), "No");
    script = script.rule(PromptMatcher { ends_with: Some("need?".into()), ..PromptMatcher::default() }, card_description);
    script.rule(
        PromptMatcher { contains: vec!["Choose an information source".into()], ..PromptMatcher::default() },
        card_description,
    )
}

fn write_common(dir: &Path, corpus: Vec<RetrievedDocument>, llm: Script) {
    write_json(&dir.join("llm.json"), &llm);
    write_json(&dir.join("noise.json"), &Script { rules: Vec::new(), default: Some(NOISE.into()) });
    let mut corpus = corpus;
    corpus.push(RetrievedDocument { text: "xyzzy".into(), source_id: "noise".into() });
    write_lines(&dir.join("corpus.jsonl"), corpus);
}

fn write_dataset(dir: &Path) -> PathBuf {
    let path = dir.join("dataset.jsonl");
    write_lines(
        &path,
        (1..=RECORDS).map(|i| serde_json::json!({"id": format!("item{i:02}"), "question": question(i), "gold": gold(i)})),
    );
    path
}

/// One card knows each record's marker; three cards emit noise. The LLM
/// answers correctly iff the marker reaches its prompt.
pub fn forced_scenario() -> Scenario {
    let dir = tempfile::tempdir().unwrap();
    let sentence = |i| format!("The code word for item {i} is {}.", marker(i));
    let codes = Script {
        rules: (1..=RECORDS)
            .map(|i| ScriptRule { when: PromptMatcher::exact(question(i)), response: sentence(i), texts: Vec::new() })
            .collect(),
        default: None,
    };
    write_json(&dir.path().join("codes.json"), &codes);
    let answers = (1..=RECORDS).map(|i| ScriptRule::new(contains_all(&[marker(i)], "Answer:"), gold(i))).collect();
    let corpus = (1..=RECORDS).map(|i| RetrievedDocument { text: sentence(i), source_id: format!("codes-{i}") }).collect();
    write_common(dir.path(), corpus, llm_script(answers, "code words for numbered items"));

    let registry = dir.path().join("registry.toml");
    let cards = r#"
[[cards]]
id = "codes"
description = "code words for numbered items"
provider = "gen-codes"

[[cards]]
id = "xyzzy"
description = "xyzzy lore"
provider = "gen-noise"

[[cards]]
id = "plugh"
description = "plugh lore"
provider = "gen-noise"

[[cards]]
id = "fnord"
description = "fnord lore"
provider = "gen-noise"

[pipeline]
n1 = 3
n2 = 5
n3 = 3
fact_top_k = 4
max_iterations = 1
rng_seed = 7

[providers.gen-codes]
stub = "scripted"
script = "codes.json"
"#;
    fs::write(&registry, format!("{cards}{STUB_PROVIDERS}")).unwrap();
    let dataset = write_dataset(dir.path());
    Scenario { dir, registry, dataset }
}

/// Each record's answer needs two markers from two different cards; a
/// third card emits noise with a lower factuality score. Only documents
/// surviving factuality sampling reach the LLM, so accuracy grows with n3.
pub fn split_scenario() -> Scenario {
    let dir = tempfile::tempdir().unwrap();
    let first = |i| format!("Code {i} begins with alpha{i:02}.");
    let second = |i| format!("Code {i} ends with beta{i:02}.");
    for (name, f) in [("first.json", &first as &dyn Fn(usize) -> String), ("second.json", &second)] {
        let script = Script {
            rules: (1..=RECORDS)
                .map(|i| ScriptRule { when: PromptMatcher::exact(question(i)), response: f(i), texts: Vec::new() })
                .collect(),
            default: None,
        };
        write_json(&dir.path().join(name), &script);
    }
    let answers = (1..=RECORDS)
        .map(|i| ScriptRule::new(contains_all(&[format!("alpha{i:02}"), format!("beta{i:02}")], "Answer:"), gold(i)))
        .collect();
    let corpus = (1..=RECORDS)
        .flat_map(|i| {
            [
                RetrievedDocument { text: first(i), source_id: format!("first-{i}") },
                RetrievedDocument { text: second(i), source_id: format!("second-{i}") },
            ]
        })
        .collect();
    write_common(dir.path(), corpus, llm_script(answers, "code beginnings"));

    let registry = dir.path().join("registry.toml");
    let cards = r#"
[[cards]]
id = "first"
description = "code beginnings"
provider = "gen-first"

[[cards]]
id = "second"
description = "code endings"
provider = "gen-second"

[[cards]]
id = "noise"
description = "xyzzy lore"
provider = "gen-noise"

[pipeline]
n1 = 1
n2 = 3
n3 = 3
fact_top_k = 4
rng_seed = 7

[providers.gen-first]
stub = "scripted"
script = "first.json"

[providers.gen-second]
stub = "scripted"
script = "second.json"
"#;
    fs::write(&registry, format!("{cards}{STUB_PROVIDERS}")).unwrap();
    let dataset = write_dataset(dir.path());
    Scenario { dir, registry, dataset }
}

/// Runs the CLI in-process and returns (exit code, stdout, stderr).
pub fn cook(args: &[&str]) -> (i32, String, String) {
    use clap::Parser;
    let mut argv = vec!["cook"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = match cook::cli::Cli::try_parse_from(argv) {
        Ok(cli) => cook::cli::run(cli, &mut out, &mut err),
        Err(e) => {
            let sink = if e.use_stderr() { &mut err } else { &mut out };
            sink.extend_from_slice(e.render().to_string().as_bytes());
            e.exit_code()
        }
    };
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
