#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use psv_cli::config::{Overrides, PipelineConfig};
use psv_core::llm::{HttpResponse, Transport};
use serde_json::{json, Value};

pub const TOY_FILES: [&str; 7] = [
    "corpus.jsonl",
    "graph.tsv",
    "embeddings.tsv",
    "lemmas.tsv",
    "hypernyms.tsv",
    "annotations.jsonl",
    "config.toml",
];

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy")
}

/// Copies the bundled toy data into `dir` so tests may edit it.
pub fn copy_toy(dir: &Path) -> PathBuf {
    for f in TOY_FILES {
        std::fs::copy(toy_dir().join(f), dir.join(f)).unwrap();
    }
    dir.join("config.toml")
}

/// Toy config rooted in `dir`, answering model requests from the mock endpoint.
pub fn toy_config(dir: &Path, overrides: &Overrides) -> PipelineConfig {
    let path = copy_toy(dir);
    let mut cfg = PipelineConfig::load(&path, overrides).unwrap();
    cfg.llm.endpoint = Some("http://mock.invalid/v1/chat/completions".into());
    cfg.llm.api_key_env = None;
    cfg.llm.backoff_ms = 1;
    cfg.paths.cache_dir = Some(dir.join("cache"));
    cfg
}

fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100000001b3)
    })
}

fn field<'a>(prompt: &'a str, name: &str) -> &'a str {
    prompt
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix(name))
        .unwrap_or("")
        .trim()
}

/// A stand-in model: replies are a fixed function of the prompt.
#[derive(Default)]
pub struct MockModel {
    pub calls: AtomicUsize,
}

impl MockModel {
    pub fn new() -> Arc<Self> {
        Arc::new(MockModel::default())
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reply(prompt: &str) -> String {
        if prompt.contains("attitude towards the given aspect") {
            let argument = field(prompt, "Argument:").to_lowercase();
            let aspect = field(prompt, "Aspect:").to_lowercase();
            if !argument.contains(&aspect) {
                return "neutral".into();
            }
            match fnv(&format!("{argument}|{aspect}")) % 3 {
                0 => "negative".into(),
                1 => "positive".into(),
                _ => "Positive.".into(),
            }
        } else if prompt.contains("decide whether it is relevant") {
            let concept = field(prompt, "Concept:");
            if fnv(concept).is_multiple_of(4) { "2" } else { "1" }.into()
        } else if prompt.contains("most important stakeholders") {
            "1. Hunters\n2. Animal rights activists\n3. Environmentalists".into()
        } else if prompt.contains("Which of these stakeholders") {
            let options = ["Hunters", "Animal rights activists", "Environmentalists"];
            let pick = fnv(prompt) as usize % options.len();
            format!("[\"{}\"]", options[pick])
        } else if prompt.contains("list of integers") {
            let concepts = field(prompt, "Concepts:");
            let n = concepts.trim_matches(['[', ']']).split(", ").count();
            let labels: Vec<String> = (0..n)
                .map(|i| (1 + fnv(&format!("{prompt}{i}")) % 3).to_string())
                .collect();
            format!("[{}]", labels.join(", "))
        } else {
            "unrecognized prompt".into()
        }
    }
}

impl Transport for MockModel {
    fn post_json(
        &self,
        _url: &str,
        _headers: &[(String, String)],
        body: &Value,
    ) -> psv_core::Result<HttpResponse> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let prompt = body["messages"][0]["content"].as_str().unwrap_or_default();
        Ok(HttpResponse {
            status: 200,
            body: json!({"choices": [{"message": {"role": "assistant", "content": Self::reply(prompt)}}]})
                .to_string(),
        })
    }
}

/// A transport that fails the test if it is ever used.
pub struct NoNetwork;

impl Transport for NoNetwork {
    fn post_json(&self, url: &str, _: &[(String, String)], _: &Value) -> psv_core::Result<HttpResponse> {
        panic!("unexpected request to {url}");
    }
}

/// Every file in `dir` with its bytes, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}
