//! Chat-completion client with a content-addressed response cache.
//!
//! Every request is keyed by the SHA-256 of `(model, rendered prompt,
//! temperature)`. A cache hit never touches the network, so a pipeline run
//! against a warm cache is fully reproducible offline.

mod cache;
mod prompts;
mod tasks;

pub use cache::{CacheEntry, ResponseCache};
pub use prompts::{python_list, PromptTemplate, TemplateName};
pub use tasks::{
    argument_stakeholders, pairwise_acceptability, parse_pairwise_reply, parse_relevance_reply,
    parse_stakeholder_list, parse_stance_reply, relevance_judgment, stance_judgment, topic_stakeholders,
    PairwiseLabel,
};

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::{Condvar, Mutex};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// One POST of a JSON body. `Err` means the request never produced a status.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, headers: &[(String, String)], body: &Value) -> Result<HttpResponse>;
}

/// Blocking HTTP transport.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        UreqTransport {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        UreqTransport::new(Duration::from_secs(120))
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, headers: &[(String, String)], body: &Value) -> Result<HttpResponse> {
        let mut req = self.agent.post(url);
        for (k, v) in headers {
            req = req.set(k, v);
        }
        match req.send_json(body) {
            Ok(resp) => Ok(HttpResponse {
                status: resp.status(),
                body: resp.into_string().map_err(|e| Error::Transport(e.to_string()))?,
            }),
            Err(ureq::Error::Status(status, resp)) => Ok(HttpResponse {
                status,
                body: resp.into_string().unwrap_or_default(),
            }),
            Err(ureq::Error::Transport(t)) => Err(Error::Transport(t.to_string())),
        }
    }
}

/// Model ids per prompt role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelRoles {
    pub stance: String,
    pub relevance: String,
    pub stakeholders: String,
    pub pairwise: String,
}

impl Default for ModelRoles {
    fn default() -> Self {
        ModelRoles {
            stance: "gpt-4o-2024-11-20".into(),
            relevance: "gpt-3.5-turbo-0125".into(),
            stakeholders: "gpt-3.5-turbo-0125".into(),
            pairwise: "gpt-4o-2024-11-20".into(),
        }
    }
}

impl ModelRoles {
    pub fn for_template(&self, name: TemplateName) -> &str {
        match name {
            TemplateName::StanceZero | TemplateName::StanceFew => &self.stance,
            TemplateName::Relevance => &self.relevance,
            TemplateName::TopicStakeholders | TemplateName::ArgumentStakeholders => &self.stakeholders,
            TemplateName::PairwiseAcceptability => &self.pairwise,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LlmConfig {
    /// Full chat-completions URL; `None` means cache-only operation.
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub models: ModelRoles,
    pub temperature: f64,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub max_in_flight: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: None,
            api_key: None,
            models: ModelRoles::default(),
            temperature: 0.0,
            max_retries: 3,
            backoff_base: Duration::from_millis(500),
            max_in_flight: 8,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub model: String,
    pub temperature: f64,
}

struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            permits: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut p = self.permits.lock();
        while *p == 0 {
            self.cv.wait(&mut p);
        }
        *p -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock() += 1;
        self.0.cv.notify_one();
    }
}

/// Thread-safe client; clone the `Arc` to share it across workers.
pub struct LlmClient {
    config: LlmConfig,
    transport: Arc<dyn Transport>,
    cache: ResponseCache,
    in_flight: Semaphore,
    network_calls: AtomicUsize,
}

impl LlmClient {
    pub fn new(config: LlmConfig, transport: Arc<dyn Transport>) -> Result<Self> {
        let cache = ResponseCache::open(config.cache_dir.clone())?;
        Ok(LlmClient {
            in_flight: Semaphore::new(config.max_in_flight),
            config,
            transport,
            cache,
            network_calls: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    /// Requests that reached the transport, retries included.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn params_for(&self, name: TemplateName) -> SamplingParams {
        SamplingParams {
            model: self.config.models.for_template(name).to_string(),
            temperature: self.config.temperature,
        }
    }

    /// Renders the template and completes it with the role's default parameters.
    pub fn complete_template(&self, name: TemplateName, fills: &BTreeMap<&str, String>) -> Result<String> {
        self.complete(&PromptTemplate::get(name), fills, &self.params_for(name))
    }

    pub fn complete(
        &self,
        template: &PromptTemplate,
        fills: &BTreeMap<&str, String>,
        params: &SamplingParams,
    ) -> Result<String> {
        let prompt = template.render(fills)?;
        self.complete_prompt(&prompt, params)
    }

    pub fn complete_prompt(&self, prompt: &str, params: &SamplingParams) -> Result<String> {
        let key = ResponseCache::key(&params.model, prompt, params.temperature);
        if let Some(hit) = self.cache.get(&key)? {
            return Ok(hit);
        }
        let reply = self.request(prompt, params)?;
        self.cache.put(CacheEntry {
            key,
            model: params.model.clone(),
            temperature: params.temperature,
            prompt: prompt.to_string(),
            reply: reply.clone(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })?;
        Ok(reply)
    }

    fn request(&self, prompt: &str, params: &SamplingParams) -> Result<String> {
        let url = self
            .config
            .endpoint
            .as_deref()
            .ok_or_else(|| Error::NotConfigured("cache miss and no endpoint configured".into()))?;
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(key) = &self.config.api_key {
            headers.push(("Authorization".to_string(), format!("Bearer {key}")));
        }
        let body = json!({
            "model": params.model,
            "temperature": params.temperature,
            "messages": [{ "role": "user", "content": prompt }],
        });

        let mut last_failure = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff_base * 2u32.saturating_pow(attempt - 1));
            }
            let outcome = {
                let _permit = self.in_flight.acquire();
                self.network_calls.fetch_add(1, Ordering::SeqCst);
                self.transport.post_json(url, &headers, &body)
            };
            match outcome {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    return extract_content(&resp.body);
                }
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    last_failure = format!("status {}: {}", resp.status, excerpt(&resp.body));
                    log::warn!("LLM request attempt {} failed with {last_failure}", attempt + 1);
                }
                Ok(resp) => {
                    return Err(Error::HttpStatus {
                        status: resp.status,
                        excerpt: excerpt(&resp.body),
                    })
                }
                Err(e) => {
                    last_failure = e.to_string();
                    log::warn!("LLM request attempt {} failed: {last_failure}", attempt + 1);
                }
            }
        }
        Err(Error::Transport(format!(
            "giving up after {} attempts; last failure: {last_failure}",
            self.config.max_retries + 1
        )))
    }
}

fn excerpt(body: &str) -> String {
    body.chars().take(200).collect()
}

fn extract_content(body: &str) -> Result<String> {
    let v: Value = serde_json::from_str(body)?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| Error::Transport(format!("no completion content in {}", excerpt(body))))
}
