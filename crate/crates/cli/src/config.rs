//! Pipeline configuration: a TOML file plus command-line overrides.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use psv_core::aggregate::Family;
use psv_core::llm::{LlmConfig, ModelRoles};
use psv_core::signature::SignatureFilter;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    Baseline,
    LlmZero,
    LlmFew,
}

impl Predictor {
    pub fn as_str(self) -> &'static str {
        match self {
            Predictor::Baseline => "baseline",
            Predictor::LlmZero => "llm_zero",
            Predictor::LlmFew => "llm_few",
        }
    }

    pub fn uses_llm(self) -> bool {
        self != Predictor::Baseline
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Predictor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Predictor::Baseline),
            "llm_zero" | "zero" => Ok(Predictor::LlmZero),
            "llm_few" | "few" => Ok(Predictor::LlmFew),
            _ => Err(format!(
                "unknown predictor `{s}` (expected baseline, llm_zero or llm_few)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFormat {
    /// `relation \t source \t target \t weight`
    Tsv,
    /// ConceptNet assertion dump.
    Conceptnet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StakeholderSource {
    /// Groups listed on the corpus records.
    Corpus,
    /// Generation and selection prompts.
    Llm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub corpus: PathBuf,
    pub graph: PathBuf,
    pub graph_format: GraphFormat,
    pub embeddings: PathBuf,
    pub lemmas: Option<PathBuf>,
    pub hypernyms: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmSettings {
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub models: ModelRoles,
    pub temperature: f64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
}

impl Default for LlmSettings {
    fn default() -> Self {
        let d = LlmConfig::default();
        LlmSettings {
            endpoint: None,
            api_key_env: Some("OPENAI_API_KEY".into()),
            models: d.models,
            temperature: d.temperature,
            max_retries: d.max_retries,
            backoff_ms: d.backoff_base.as_millis() as u64,
            max_in_flight: d.max_in_flight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingService {
    pub url: String,
    pub model: String,
    pub api_key_env: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub k: usize,
    pub top_m: usize,
    pub predictor: Predictor,
    pub families: Vec<Family>,
    pub filters: Vec<SignatureFilter>,
    pub stance_fallback_neutral: bool,
    pub per_concept_scores: bool,
    pub pairwise_ablation: bool,
    pub stakeholder_source: StakeholderSource,
    pub report_family: Family,
    pub top_n: usize,
    pub histogram_bin: f64,
    pub llm: LlmSettings,
    pub embedding_service: Option<EmbeddingService>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPaths {
    corpus: PathBuf,
    graph: PathBuf,
    #[serde(default = "default_graph_format")]
    graph_format: GraphFormat,
    embeddings: PathBuf,
    lemmas: Option<PathBuf>,
    hypernyms: Option<PathBuf>,
    annotations: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    #[serde(default = "default_out")]
    out_dir: PathBuf,
}

fn default_graph_format() -> GraphFormat {
    GraphFormat::Tsv
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPipeline {
    k: usize,
    top_m: usize,
    predictor: String,
    families: Vec<String>,
    filters: Vec<String>,
    stance_fallback_neutral: bool,
    per_concept_scores: bool,
    pairwise_ablation: bool,
    stakeholder_source: StakeholderSource,
    report_family: String,
    top_n: usize,
    histogram_bin: f64,
}

impl Default for RawPipeline {
    fn default() -> Self {
        RawPipeline {
            k: 15,
            top_m: 3,
            predictor: "llm_few".into(),
            families: Family::ALL.iter().map(|f| f.to_string()).collect(),
            filters: Vec::new(),
            stance_fallback_neutral: true,
            per_concept_scores: true,
            pairwise_ablation: false,
            stakeholder_source: StakeholderSource::Corpus,
            report_family: "P0".into(),
            top_n: 5,
            histogram_bin: 0.02,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    paths: RawPaths,
    #[serde(default)]
    pipeline: RawPipeline,
    #[serde(default)]
    llm: LlmSettings,
    embedding_service: Option<EmbeddingService>,
}

/// Values given on the command line take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub families: Option<Vec<Family>>,
    pub k: Option<usize>,
    pub predictor: Option<Predictor>,
    pub filters: Option<Vec<SignatureFilter>>,
}

fn parse_list<T: FromStr<Err = String>>(items: &[String]) -> Result<Vec<T>> {
    items
        .iter()
        .map(|s| s.parse::<T>().map_err(anyhow::Error::msg))
        .collect()
}

/// Splits `"S0,P0"` style lists; an empty string or `none` means no entries.
pub fn parse_csv_list<T: FromStr<Err = String>>(s: &str) -> std::result::Result<Vec<T>, String> {
    if s.trim().is_empty() || s.trim() == "none" {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| x.trim().parse::<T>()).collect()
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    /// Reads a config file; relative paths are resolved against its directory.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base, overrides).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_toml(text: &str, base: &Path, overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        let p = raw.paths;
        let paths = Paths {
            corpus: resolve(base, p.corpus),
            graph: resolve(base, p.graph),
            graph_format: p.graph_format,
            embeddings: resolve(base, p.embeddings),
            lemmas: p.lemmas.map(|x| resolve(base, x)),
            hypernyms: p.hypernyms.map(|x| resolve(base, x)),
            annotations: p.annotations.map(|x| resolve(base, x)),
            cache_dir: p.cache_dir.map(|x| resolve(base, x)),
            out_dir: overrides
                .out_dir
                .clone()
                .unwrap_or_else(|| resolve(base, p.out_dir)),
        };
        let r = raw.pipeline;
        let cfg = PipelineConfig {
            paths,
            k: overrides.k.unwrap_or(r.k),
            top_m: r.top_m,
            predictor: match overrides.predictor {
                Some(p) => p,
                None => r.predictor.parse().map_err(anyhow::Error::msg)?,
            },
            families: match &overrides.families {
                Some(f) => f.clone(),
                None => parse_list(&r.families)?,
            },
            filters: match &overrides.filters {
                Some(f) => f.clone(),
                None => parse_list(&r.filters)?,
            },
            stance_fallback_neutral: r.stance_fallback_neutral,
            per_concept_scores: r.per_concept_scores,
            pairwise_ablation: r.pairwise_ablation,
            stakeholder_source: r.stakeholder_source,
            report_family: r.report_family.parse().map_err(anyhow::Error::msg)?,
            top_n: r.top_n,
            histogram_bin: r.histogram_bin,
            llm: raw.llm,
            embedding_service: raw.embedding_service,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        if self.top_m == 0 {
            bail!("top_m must be at least 1");
        }
        if self.top_n == 0 {
            bail!("top_n must be at least 1");
        }
        if !(self.histogram_bin.is_finite() && self.histogram_bin > 0.0) {
            bail!("histogram_bin must be positive");
        }
        if self.families.is_empty() {
            bail!("at least one aggregation family is required");
        }
        let unique: BTreeSet<_> = self.families.iter().collect();
        if unique.len() != self.families.len() {
            bail!("aggregation families are listed more than once");
        }
        let unique: BTreeSet<_> = self.filters.iter().map(|f| f.as_str()).collect();
        if unique.len() != self.filters.len() {
            bail!("signature filters are listed more than once");
        }
        if self.filters.contains(&SignatureFilter::Hypernym) && self.paths.hypernyms.is_none() {
            bail!("the hypernym filter needs paths.hypernyms");
        }
        Ok(())
    }

    pub fn llm_config(&self) -> LlmConfig {
        LlmConfig {
            endpoint: self.llm.endpoint.clone(),
            api_key: self
                .llm
                .api_key_env
                .as_deref()
                .and_then(|v| std::env::var(v).ok()),
            models: self.llm.models.clone(),
            temperature: self.llm.temperature,
            max_retries: self.llm.max_retries,
            backoff_base: Duration::from_millis(self.llm.backoff_ms),
            max_in_flight: self.llm.max_in_flight,
            cache_dir: self.paths.cache_dir.clone(),
        }
    }

    /// Settings that shape each stage's output, cumulative over upstream stages.
    /// Paths, endpoints and credentials are left out.
    pub fn stage_settings(&self, stage: Stage) -> Value {
        let m = &self.llm.models;
        let t = self.llm.temperature;
        match stage {
            Stage::Align => json!({
                "top_m": self.top_m,
                "graph_format": self.paths.graph_format,
                "embedding_model": self.embedding_service.as_ref().map(|e| &e.model),
            }),
            Stage::Signature => json!({
                "align": self.stage_settings(Stage::Align),
                "k": self.k,
                "filters": self.filters,
                "relevance": self.filters.contains(&SignatureFilter::Relevance)
                    .then(|| json!({ "model": m.relevance, "temperature": t })),
            }),
            Stage::Psv => json!({
                "signature": self.stage_settings(Stage::Signature),
                "predictor": self.predictor,
                "llm": self.predictor.uses_llm().then(|| json!({
                    "model": m.stance,
                    "temperature": t,
                    "fallback_neutral": self.stance_fallback_neutral,
                })),
            }),
            Stage::Scores => json!({
                "psv": self.stage_settings(Stage::Psv),
                "families": self.families,
                "per_concept": self.per_concept_scores,
            }),
            Stage::Eval => json!({
                "scores": self.stage_settings(Stage::Scores),
                "pairwise_ablation": self.pairwise_ablation
                    .then(|| json!({ "model": m.pairwise, "temperature": t })),
            }),
            Stage::Stakeholders => json!({
                "source": self.stakeholder_source,
                "llm": (self.stakeholder_source == StakeholderSource::Llm)
                    .then(|| json!({ "model": m.stakeholders, "temperature": t })),
            }),
            Stage::Report => json!({
                "scores": self.stage_settings(Stage::Scores),
                "stakeholders": self.stage_settings(Stage::Stakeholders),
                "report_family": self.report_family,
                "top_n": self.top_n,
                "histogram_bin": self.histogram_bin,
            }),
        }
    }

    pub fn stage_digest(&self, stage: Stage) -> String {
        psv_core::sha256_hex(self.stage_settings(stage).to_string().as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Align,
    Signature,
    Psv,
    Scores,
    Eval,
    Stakeholders,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Align,
        Stage::Signature,
        Stage::Psv,
        Stage::Scores,
        Stage::Eval,
        Stage::Stakeholders,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Align => "align",
            Stage::Signature => "signature",
            Stage::Psv => "psv",
            Stage::Scores => "scores",
            Stage::Eval => "eval",
            Stage::Stakeholders => "stakeholders",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}
