//! Flat debate exports to [`Corpus`].
//!
//! Each input line is one JSON object describing one argument together with its
//! topic. Field names and stance tokens come from an [`ImportMapping`], so the
//! adapter follows whatever layout a dataset release uses. Nested fields are
//! addressed with JSON pointers (`/meta/question`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{Argument, Corpus, DebateTopic, TopicStance};
use crate::error::{Error, Result};
use crate::util::read_lines;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImportMapping {
    /// Topic identifier; when empty the id is a slug of the question.
    pub topic_id: String,
    pub question: String,
    /// Argument identifier; when empty ids are `<topic>-<n>` in file order.
    pub argument_id: String,
    pub text: String,
    pub stance: String,
    /// A list of strings, or one string split on `stakeholder_separator`.
    /// Empty means the export carries no stakeholder labels.
    pub stakeholders: String,
    pub stakeholder_separator: String,
    /// Raw stance token (numbers as written) to pro/con.
    pub stance_values: BTreeMap<String, TopicStance>,
}

impl Default for ImportMapping {
    fn default() -> Self {
        ImportMapping {
            topic_id: "topic_id".into(),
            question: "question".into(),
            argument_id: "id".into(),
            text: "text".into(),
            stance: "stance".into(),
            stakeholders: String::new(),
            stakeholder_separator: ";".into(),
            stance_values: BTreeMap::from([
                ("pro".into(), TopicStance::Pro),
                ("con".into(), TopicStance::Con),
                ("PRO".into(), TopicStance::Pro),
                ("CON".into(), TopicStance::Con),
                ("1".into(), TopicStance::Pro),
                ("-1".into(), TopicStance::Con),
            ]),
        }
    }
}

fn lookup<'a>(record: &'a Value, field: &str) -> Option<&'a Value> {
    if field.starts_with('/') {
        record.pointer(field)
    } else {
        record.get(field)
    }
}

fn scalar(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Lowercase ASCII alphanumerics joined by single dashes.
pub fn slug(text: &str) -> String {
    text.to_ascii_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join("-")
}

/// Builds a corpus from a flat export. Topics appear in order of first mention.
pub fn import_flat(path: impl AsRef<Path>, mapping: &ImportMapping) -> Result<Corpus> {
    let path = path.as_ref();
    let mut topics: Vec<DebateTopic> = Vec::new();
    let mut questions: BTreeMap<String, String> = BTreeMap::new();
    let mut counters: BTreeMap<String, usize> = BTreeMap::new();
    let mut arguments = Vec::new();
    for (line, raw) in read_lines(path)? {
        let err = |m: String| Error::parse(path, line, m);
        let record: Value = serde_json::from_str(&raw).map_err(|e| err(e.to_string()))?;
        let field = |name: &str| -> Result<String> {
            lookup(&record, name)
                .and_then(scalar)
                .ok_or_else(|| err(format!("missing field `{name}`")))
        };
        let question = field(&mapping.question)?;
        let topic_id = match mapping.topic_id.as_str() {
            "" => slug(&question),
            f => field(f)?,
        };
        match questions.get(&topic_id) {
            Some(q) if *q != question => {
                return Err(err(format!(
                    "topic `{topic_id}` has two questions: {q:?} and {question:?}"
                )))
            }
            Some(_) => {}
            None => {
                questions.insert(topic_id.clone(), question.clone());
                topics.push(DebateTopic {
                    topic_id: topic_id.clone(),
                    question,
                    stance_labels: ("pro".into(), "con".into()),
                });
            }
        }
        let n = counters.entry(topic_id.clone()).or_default();
        *n += 1;
        let argument_id = match mapping.argument_id.as_str() {
            "" => format!("{topic_id}-{n}"),
            f => field(f)?,
        };
        let token = field(&mapping.stance)?;
        let overall_stance = *mapping
            .stance_values
            .get(&token)
            .ok_or_else(|| err(format!("stance token `{token}` has no mapping")))?;
        let stakeholders = match Some(mapping.stakeholders.as_str())
            .filter(|f| !f.is_empty())
            .and_then(|f| lookup(&record, f))
        {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) => Some(items.iter().filter_map(scalar).collect()),
            Some(Value::String(s)) => Some(
                s.split(mapping.stakeholder_separator.as_str())
                    .map(str::trim)
                    .filter(|g| !g.is_empty())
                    .map(String::from)
                    .collect(),
            ),
            Some(other) => return Err(err(format!("stakeholders must be a list or string, got {other}"))),
        };
        arguments.push(Argument {
            argument_id,
            topic_id,
            text: field(&mapping.text)?,
            overall_stance,
            stakeholders,
        });
    }
    Corpus::new(topics, arguments)
}
