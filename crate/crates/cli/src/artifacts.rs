//! Stage output files and their provenance headers.
//!
//! CSV files start with a `# provenance {json}` comment line, JSONL files with a
//! `{"provenance": ...}` line, JSON files carry a `provenance` field and Markdown
//! files an HTML comment.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use psv_core::aggregate::{Channel, Family};
use psv_core::signature::{DroppedEntry, Signature, SignatureEntry, SignatureFilter, SignatureRecord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Stage;

pub const ALIGNMENT: &str = "alignment.jsonl";
pub const SIGNATURE: &str = "signature.json";
pub const PSV: &str = "psv.csv";
pub const SCORES: &str = "scores.csv";
pub const EVAL: &str = "eval.csv";
pub const EVAL_TABLES: &str = "eval_tables.md";
pub const STAKEHOLDERS: &str = "stakeholders.csv";
pub const REPORT_MATRIX: &str = "report_stakeholder_matrix.csv";
pub const REPORT_TOP: &str = "report_top_perspectives.csv";
pub const REPORT_SCATTER: &str = "report_scatter.csv";
pub const REPORT_HISTOGRAM: &str = "report_histogram.csv";

/// Concept column value marking a global score row.
pub const GLOBAL: &str = "GLOBAL";

/// Stage that writes an artifact.
pub fn producer(artifact: &str) -> Option<Stage> {
    Some(match artifact {
        ALIGNMENT => Stage::Align,
        SIGNATURE => Stage::Signature,
        PSV => Stage::Psv,
        SCORES => Stage::Scores,
        EVAL | EVAL_TABLES => Stage::Eval,
        STAKEHOLDERS => Stage::Stakeholders,
        REPORT_MATRIX | REPORT_TOP | REPORT_SCATTER | REPORT_HISTOGRAM => Stage::Report,
        _ => return None,
    })
}

/// What produced a file: the stage, its settings digest and the hash of every input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub stage: Stage,
    pub config_digest: String,
    pub inputs: BTreeMap<String, String>,
}

impl Provenance {
    fn to_line(&self) -> String {
        serde_json::to_string(self).expect("provenance serializes")
    }
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(psv_core::sha256_hex(&bytes))
}

/// Writes through a temporary file so readers never see partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

const CSV_PREFIX: &str = "# provenance ";
const MD_PREFIX: &str = "<!-- provenance ";

/// Row type of a CSV artifact, with its column names.
pub trait CsvRecord: Serialize {
    const HEADER: &'static [&'static str];
}

pub fn write_csv<T: CsvRecord>(path: &Path, prov: &Provenance, rows: &[T]) -> Result<()> {
    let mut buf = format!("{CSV_PREFIX}{}\n", prov.to_line()).into_bytes();
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
        w.write_record(T::HEADER)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    write_atomic(path, &buf)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("{}: record {}", path.display(), i + 1)))
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, prov: &Provenance, rows: &[T]) -> Result<()> {
    let mut out = serde_json::to_string(&serde_json::json!({ "provenance": prov }))?;
    out.push('\n');
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

pub fn write_markdown(path: &Path, prov: &Provenance, body: &str) -> Result<()> {
    let text = format!("{MD_PREFIX}{} -->\n{body}", prov.to_line());
    write_atomic(path, text.as_bytes())
}

/// Provenance header of any artifact this tool writes.
pub fn read_provenance(path: &Path) -> Result<Provenance> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first)?;
    let first = first.trim_end();
    let missing = || anyhow!("{} has no provenance header", path.display());
    let prov = if let Some(rest) = first.strip_prefix(CSV_PREFIX) {
        serde_json::from_str(rest)?
    } else if let Some(rest) = first.strip_prefix(MD_PREFIX) {
        serde_json::from_str(rest.strip_suffix(" -->").ok_or_else(missing)?)?
    } else if first.starts_with('{') {
        // JSONL first line, or the opening of a pretty-printed JSON document.
        match serde_json::from_str::<serde_json::Value>(first) {
            Ok(v) => serde_json::from_value(v.get("provenance").cloned().ok_or_else(missing)?)?,
            Err(_) => {
                let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
                serde_json::from_value(v.get("provenance").cloned().ok_or_else(missing)?)?
            }
        }
    } else {
        return Err(missing());
    };
    Ok(prov)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureDoc {
    pub topic_id: String,
    pub k: usize,
    pub reference: String,
    pub filters_applied: Vec<SignatureFilter>,
    pub warnings: Vec<String>,
    pub concepts: Vec<SignatureRecord>,
}

impl SignatureDoc {
    pub fn from_signature(s: &Signature) -> Self {
        SignatureDoc {
            topic_id: s.topic_id.clone(),
            k: s.k,
            reference: s.reference(),
            filters_applied: s.filters_applied.clone(),
            warnings: s.warnings.clone(),
            concepts: s.records(),
        }
    }

    pub fn to_signature(&self) -> Result<Signature> {
        let mut concepts = Vec::new();
        let mut dropped = Vec::new();
        for r in &self.concepts {
            match (r.survived_filters, r.dropped_by) {
                (true, _) => concepts.push(SignatureEntry {
                    concept: r.concept.clone(),
                    side: r.side,
                    score: r.score,
                }),
                (false, Some(filter)) => dropped.push(DroppedEntry {
                    concept: r.concept.clone(),
                    side: r.side,
                    score: r.score,
                    filter,
                }),
                (false, None) => bail!("dropped concept `{}` names no filter", r.concept),
            }
        }
        let sig = Signature {
            topic_id: self.topic_id.clone(),
            k: self.k,
            concepts,
            filters_applied: self.filters_applied.clone(),
            dropped,
            warnings: self.warnings.clone(),
        };
        if sig.reference() != self.reference {
            bail!("signature for `{}` does not match its reference", self.topic_id);
        }
        Ok(sig)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureFile {
    pub provenance: Provenance,
    pub signatures: Vec<SignatureDoc>,
}

pub fn write_signatures(path: &Path, prov: &Provenance, sigs: &[Signature]) -> Result<()> {
    let file = SignatureFile {
        provenance: prov.clone(),
        signatures: sigs.iter().map(SignatureDoc::from_signature).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Signatures keyed by topic id.
pub fn read_signatures(path: &Path) -> Result<BTreeMap<String, Signature>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: SignatureFile = serde_json::from_str(&text)?;
    file.signatures
        .iter()
        .map(|d| Ok((d.topic_id.clone(), d.to_signature()?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsvRow {
    pub topic_id: String,
    pub argument_id: String,
    pub concept: String,
    pub s: i8,
    pub p_against: f64,
    pub p_neutral: f64,
    pub p_favor: f64,
}

impl CsvRecord for PsvRow {
    const HEADER: &'static [&'static str] = &[
        "topic_id",
        "argument_id",
        "concept",
        "s",
        "p_against",
        "p_neutral",
        "p_favor",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub topic_id: String,
    pub arg1: String,
    pub arg2: String,
    pub family: Family,
    pub channel: Channel,
    pub concept: String,
    pub value: f64,
}

impl CsvRecord for ScoreRow {
    const HEADER: &'static [&'static str] = &[
        "topic_id", "arg1", "arg2", "family", "channel", "concept", "value",
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StakeholderRow {
    pub topic_id: String,
    pub argument_id: String,
    pub group: String,
}

impl CsvRecord for StakeholderRow {
    const HEADER: &'static [&'static str] = &["topic_id", "argument_id", "group"];
}

/// One metric of the evaluation report; `value` is empty when not computable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub protocol: String,
    pub setting: String,
    pub channel: String,
    pub metric: String,
    pub value: Option<f64>,
    pub n: Option<usize>,
    pub note: String,
}

impl CsvRecord for EvalRow {
    const HEADER: &'static [&'static str] =
        &["protocol", "setting", "channel", "metric", "value", "n", "note"];
}

pub fn out_path(out_dir: &Path, artifact: &str) -> PathBuf {
    out_dir.join(artifact)
}
