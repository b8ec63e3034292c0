//! Debate topics, arguments and annotation files.
//!
//! Corpus files are line-delimited JSON. A record carrying a `question` field
//! is a topic, anything else is an argument:
//!
//! ```text
//! {"id": "animal-hunting", "question": "Should animal hunting be banned?"}
//! {"id": "ah-1", "topic_id": "animal-hunting", "text": "...", "stance": "pro", "stakeholders": ["Hunters"]}
//! ```
//!
//! Annotation files hold typed records selected by their `kind` field
//! (`signature`, `stance`, `pair_global`, `pair_concept`). Records that carry
//! an `annotator` field feed the reliability tables instead of the gold labels.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::eval::ReliabilityData;
use crate::stance::Stance;
use crate::util::read_lines;

/// Overall position of an argument on the binary topic question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicStance {
    Pro,
    Con,
}

impl TopicStance {
    pub fn value(self) -> i8 {
        match self {
            TopicStance::Pro => 1,
            TopicStance::Con => -1,
        }
    }

    pub fn as_stance(self) -> Stance {
        match self {
            TopicStance::Pro => Stance::Favor,
            TopicStance::Con => Stance::Against,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TopicStance::Pro => "pro",
            TopicStance::Con => "con",
        }
    }
}

impl FromStr for TopicStance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pro" => Ok(TopicStance::Pro),
            "con" => Ok(TopicStance::Con),
            other => Err(format!(
                "unknown stance token `{other}` (expected \"pro\" or \"con\")"
            )),
        }
    }
}

impl fmt::Display for TopicStance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DebateTopic {
    pub topic_id: String,
    pub question: String,
    /// Display labels for the (pro, con) sides.
    pub stance_labels: (String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Argument {
    pub argument_id: String,
    pub topic_id: String,
    pub text: String,
    pub overall_stance: TopicStance,
    pub stakeholders: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TopicRecord {
    id: String,
    question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stance_labels: Option<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArgumentRecord {
    id: String,
    topic_id: String,
    text: String,
    stance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stakeholders: Option<Vec<String>>,
}

/// Topics and arguments, indexed by topic. Immutable after loading.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    topics: Vec<DebateTopic>,
    arguments: Vec<Argument>,
    by_topic: BTreeMap<String, Vec<usize>>,
    by_id: HashMap<String, usize>,
    topic_index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(topics: Vec<DebateTopic>, arguments: Vec<Argument>) -> Result<Self> {
        let mut topic_index = HashMap::new();
        for (i, t) in topics.iter().enumerate() {
            if t.question.trim().is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "topic `{}` has an empty question",
                    t.topic_id
                )));
            }
            if topic_index.insert(t.topic_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(t.topic_id.clone()));
            }
        }
        let mut by_id = HashMap::new();
        let mut by_topic: BTreeMap<String, Vec<usize>> =
            topics.iter().map(|t| (t.topic_id.clone(), Vec::new())).collect();
        for (i, a) in arguments.iter().enumerate() {
            if a.text.trim().is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "argument `{}` has empty text",
                    a.argument_id
                )));
            }
            if by_id.insert(a.argument_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(a.argument_id.clone()));
            }
            by_topic
                .get_mut(&a.topic_id)
                .ok_or_else(|| Error::UnknownTopic(a.topic_id.clone()))?
                .push(i);
        }
        Ok(Corpus {
            topics,
            arguments,
            by_topic,
            by_id,
            topic_index,
        })
    }

    pub fn topics(&self) -> &[DebateTopic] {
        &self.topics
    }

    pub fn arguments(&self) -> &[Argument] {
        &self.arguments
    }

    pub fn topic(&self, topic_id: &str) -> Option<&DebateTopic> {
        self.topic_index.get(topic_id).map(|&i| &self.topics[i])
    }

    pub fn argument(&self, argument_id: &str) -> Option<&Argument> {
        self.by_id.get(argument_id).map(|&i| &self.arguments[i])
    }

    /// Arguments of one topic in corpus order.
    pub fn topic_arguments(&self, topic_id: &str) -> Result<Vec<&Argument>> {
        let idx = self
            .by_topic
            .get(topic_id)
            .ok_or_else(|| Error::UnknownTopic(topic_id.to_string()))?;
        Ok(idx.iter().map(|&i| &self.arguments[i]).collect())
    }

    /// Partitions a topic's arguments into (pro, con), keeping corpus order.
    pub fn split_by_stance(&self, topic_id: &str) -> Result<(Vec<&Argument>, Vec<&Argument>)> {
        Ok(self
            .topic_arguments(topic_id)?
            .into_iter()
            .partition(|a| a.overall_stance == TopicStance::Pro))
    }

    /// Serializes back to the line-delimited format: topics first, then arguments.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.topics {
            let rec = TopicRecord {
                id: t.topic_id.clone(),
                question: t.question.clone(),
                stance_labels: (t.stance_labels != default_stance_labels()).then(|| t.stance_labels.clone()),
            };
            out.push_str(&serde_json::to_string(&rec).expect("topic record serializes"));
            out.push('\n');
        }
        for a in &self.arguments {
            let rec = ArgumentRecord {
                id: a.argument_id.clone(),
                topic_id: a.topic_id.clone(),
                text: a.text.clone(),
                stance: a.overall_stance.as_str().to_string(),
                stakeholders: a.stakeholders.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("argument record serializes"));
            out.push('\n');
        }
        out
    }
}

fn default_stance_labels() -> (String, String) {
    ("pro".to_string(), "con".to_string())
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let mut topics = Vec::new();
    let mut arguments = Vec::new();
    let mut arg_lines = HashMap::new();
    let mut topic_ids = BTreeSet::new();
    for (line, text) in read_lines(path)? {
        let value: Value =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, line, e.to_string()))?;
        let is_topic = value.get("question").is_some();
        if is_topic {
            let rec: TopicRecord =
                serde_json::from_value(value).map_err(|e| Error::parse(path, line, e.to_string()))?;
            if rec.question.trim().is_empty() {
                return Err(Error::parse(path, line, "empty topic question"));
            }
            if !topic_ids.insert(rec.id.clone()) {
                return Err(Error::parse(
                    path,
                    line,
                    format!("duplicate topic id `{}`", rec.id),
                ));
            }
            topics.push(DebateTopic {
                topic_id: rec.id,
                question: rec.question,
                stance_labels: rec.stance_labels.unwrap_or_else(default_stance_labels),
            });
        } else {
            let rec: ArgumentRecord =
                serde_json::from_value(value).map_err(|e| Error::parse(path, line, e.to_string()))?;
            let stance = rec
                .stance
                .parse::<TopicStance>()
                .map_err(|m| Error::parse(path, line, m))?;
            if rec.text.trim().is_empty() {
                return Err(Error::parse(path, line, "empty argument text"));
            }
            if let Some(first) = arg_lines.insert(rec.id.clone(), line) {
                return Err(Error::parse(
                    path,
                    line,
                    format!("duplicate argument id `{}` (first seen on line {first})", rec.id),
                ));
            }
            arguments.push(Argument {
                argument_id: rec.id,
                topic_id: rec.topic_id,
                text: rec.text,
                overall_stance: stance,
                stakeholders: rec.stakeholders,
            });
        }
    }
    for a in &arguments {
        if !topic_ids.contains(&a.topic_id) {
            return Err(Error::parse(
                path,
                arg_lines[&a.argument_id],
                format!(
                    "argument `{}` references unknown topic `{}`",
                    a.argument_id, a.topic_id
                ),
            ));
        }
    }
    Corpus::new(topics, arguments)
}

/// Unordered pair of argument ids; `(a, b)` and `(b, a)` compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey(String, String);

impl PairKey {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Self {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            PairKey(a, b)
        } else {
            PairKey(b, a)
        }
    }

    pub fn first(&self) -> &str {
        &self.0
    }

    pub fn second(&self) -> &str {
        &self.1
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureLabel {
    pub relevant: bool,
    pub appropriate_granularity: bool,
}

/// Pair-level acceptability label for a whole argument pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalLabel {
    Agreement,
    PartialAgreement,
    Orthogonal,
    Disagreement,
}

impl FromStr for GlobalLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "agreement" => Ok(GlobalLabel::Agreement),
            "partial_agreement" => Ok(GlobalLabel::PartialAgreement),
            "orthogonal" => Ok(GlobalLabel::Orthogonal),
            "disagreement" => Ok(GlobalLabel::Disagreement),
            other => Err(format!("unknown pair label `{other}`")),
        }
    }
}

/// Pair-level label for a single concept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptLabel {
    Agree,
    Neutral,
    Disagree,
}

impl FromStr for ConceptLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "agree" => Ok(ConceptLabel::Agree),
            "neutral" => Ok(ConceptLabel::Neutral),
            "disagree" => Ok(ConceptLabel::Disagree),
            other => Err(format!("unknown concept label `{other}`")),
        }
    }
}

/// Gold labels for signatures, stances and argument pairs.
#[derive(Debug, Clone, Default)]
pub struct AnnotationSet {
    /// Keyed by (topic_id, concept).
    pub signature_labels: BTreeMap<(String, String), SignatureLabel>,
    /// Keyed by (argument_id, concept).
    pub stance_labels: BTreeMap<(String, String), Stance>,
    pub pair_global_labels: BTreeMap<PairKey, GlobalLabel>,
    pub pair_concept_labels: BTreeMap<(PairKey, String), ConceptLabel>,
    /// task → annotator → item → label, from records with an `annotator` field.
    pub reliability: BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>>,
}

impl AnnotationSet {
    pub fn pair_global(&self, a: &str, b: &str) -> Option<GlobalLabel> {
        self.pair_global_labels.get(&PairKey::new(a, b)).copied()
    }

    pub fn pair_concept(&self, a: &str, b: &str, concept: &str) -> Option<ConceptLabel> {
        self.pair_concept_labels
            .get(&(PairKey::new(a, b), concept.to_string()))
            .copied()
    }

    pub fn stance(&self, argument_id: &str, concept: &str) -> Option<Stance> {
        self.stance_labels
            .get(&(argument_id.to_string(), concept.to_string()))
            .copied()
    }

    /// Annotator × item matrix for one annotation task.
    pub fn reliability_data(&self, task: &str) -> Option<ReliabilityData<String>> {
        let per_annotator = self.reliability.get(task)?;
        let items: BTreeSet<&String> = per_annotator.values().flat_map(|m| m.keys()).collect();
        let rows = per_annotator
            .values()
            .map(|labels| items.iter().map(|item| labels.get(*item).cloned()).collect())
            .collect();
        Some(ReliabilityData::new(rows))
    }
}

#[derive(Debug, Deserialize)]
struct SignatureRecord {
    topic_id: String,
    concept: String,
    relevant: bool,
    appropriate_granularity: bool,
}

#[derive(Debug, Deserialize)]
struct StanceRecord {
    argument_id: String,
    concept: String,
    label: Value,
}

#[derive(Debug, Deserialize)]
struct PairGlobalRecord {
    arg1: String,
    arg2: String,
    label: String,
}

#[derive(Debug, Deserialize)]
struct PairConceptRecord {
    arg1: String,
    arg2: String,
    concept: String,
    label: String,
}

fn parse_stance_label(v: &Value) -> std::result::Result<Stance, String> {
    match v {
        Value::Number(n) => match n.as_i64() {
            Some(-1) => Ok(Stance::Against),
            Some(0) => Ok(Stance::Neutral),
            Some(1) => Ok(Stance::Favor),
            _ => Err(format!("stance label {n} not in {{-1, 0, 1}}")),
        },
        Value::String(s) => match s.as_str() {
            "against" | "-1" => Ok(Stance::Against),
            "neutral" | "0" => Ok(Stance::Neutral),
            "favor" | "for" | "1" | "+1" => Ok(Stance::Favor),
            other => Err(format!("unknown stance label `{other}`")),
        },
        other => Err(format!("unknown stance label {other}")),
    }
}

fn insert_unique<K: Ord + fmt::Debug, V: PartialEq + Copy>(
    map: &mut BTreeMap<K, V>,
    key: K,
    value: V,
    path: &Path,
    line: usize,
) -> Result<()> {
    if let Some(prev) = map.get(&key) {
        if *prev != value {
            return Err(Error::parse(path, line, format!("conflicting label for {key:?}")));
        }
    }
    map.insert(key, value);
    Ok(())
}

/// Loads annotations and checks every referenced argument exists in `corpus`.
pub fn load_annotations(path: impl AsRef<Path>, corpus: &Corpus) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let mut set = AnnotationSet::default();
    let mut unknown = BTreeSet::new();
    let mut check = |id: &str| {
        if corpus.argument(id).is_none() {
            unknown.insert(id.to_string());
        }
    };
    for (line, text) in read_lines(path)? {
        let value: Value =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, line, e.to_string()))?;
        let kind = value
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::parse(path, line, "record without a `kind` field"))?
            .to_string();
        let annotator = value.get("annotator").and_then(Value::as_str).map(str::to_string);
        let perr = |e: serde_json::Error| Error::parse(path, line, e.to_string());
        let lerr = |m: String| Error::parse(path, line, m);
        // (item key, canonical label) for reliability records
        let item: (String, String) = match kind.as_str() {
            "signature" => {
                let r: SignatureRecord = serde_json::from_value(value).map_err(perr)?;
                if corpus.topic(&r.topic_id).is_none() {
                    return Err(lerr(format!("unknown topic `{}`", r.topic_id)));
                }
                let label = SignatureLabel {
                    relevant: r.relevant,
                    appropriate_granularity: r.appropriate_granularity,
                };
                let item = (
                    format!("{}\t{}", r.topic_id, r.concept),
                    format!("{}/{}", label.relevant, label.appropriate_granularity),
                );
                if annotator.is_none() {
                    insert_unique(
                        &mut set.signature_labels,
                        (r.topic_id, r.concept),
                        label,
                        path,
                        line,
                    )?;
                }
                item
            }
            "stance" => {
                let r: StanceRecord = serde_json::from_value(value).map_err(perr)?;
                check(&r.argument_id);
                let stance = parse_stance_label(&r.label).map_err(lerr)?;
                let item = (
                    format!("{}\t{}", r.argument_id, r.concept),
                    stance.value().to_string(),
                );
                if annotator.is_none() {
                    insert_unique(
                        &mut set.stance_labels,
                        (r.argument_id, r.concept),
                        stance,
                        path,
                        line,
                    )?;
                }
                item
            }
            "pair_global" => {
                let r: PairGlobalRecord = serde_json::from_value(value).map_err(perr)?;
                check(&r.arg1);
                check(&r.arg2);
                let label: GlobalLabel = r.label.parse().map_err(lerr)?;
                let key = PairKey::new(r.arg1, r.arg2);
                let item = (key.to_string(), r.label);
                if annotator.is_none() {
                    insert_unique(&mut set.pair_global_labels, key, label, path, line)?;
                }
                item
            }
            "pair_concept" => {
                let r: PairConceptRecord = serde_json::from_value(value).map_err(perr)?;
                check(&r.arg1);
                check(&r.arg2);
                let label: ConceptLabel = r.label.parse().map_err(lerr)?;
                let key = PairKey::new(r.arg1, r.arg2);
                let item = (format!("{key}\t{}", r.concept), r.label);
                if annotator.is_none() {
                    insert_unique(&mut set.pair_concept_labels, (key, r.concept), label, path, line)?;
                }
                item
            }
            other => return Err(lerr(format!("unknown record kind `{other}`"))),
        };
        if let Some(annotator) = annotator {
            set.reliability
                .entry(kind)
                .or_default()
                .entry(annotator)
                .or_default()
                .insert(item.0, item.1);
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownArguments(unknown.into_iter().collect()));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn two_topic_file() -> String {
        let mut s = String::new();
        s.push_str(r#"{"id":"t1","question":"Should animal hunting be banned?"}"#);
        s.push('\n');
        s.push_str(r#"{"id":"t2","question":"Should kids wear uniforms?"}"#);
        s.push('\n');
        for i in 0..10 {
            let topic = if i < 6 { "t1" } else { "t2" };
            let stance = if i % 2 == 0 { "pro" } else { "con" };
            s.push_str(&format!(
                r#"{{"id":"a{i}","topic_id":"{topic}","text":"Argument {i}.","stance":"{stance}"}}"#
            ));
            s.push('\n');
        }
        s
    }

    #[test]
    fn loads_counts_and_index() {
        let f = write_tmp(&two_topic_file());
        let c = load_corpus(f.path()).unwrap();
        assert_eq!(c.topics().len(), 2);
        assert_eq!(c.arguments().len(), 10);
        assert_eq!(c.topic_arguments("t1").unwrap().len(), 6);
        assert_eq!(c.topic_arguments("t2").unwrap().len(), 4);
    }

    #[test]
    fn unknown_stance_token_names_line() {
        let f = write_tmp(
            "{\"id\":\"t1\",\"question\":\"Q?\"}\n{\"id\":\"a\",\"topic_id\":\"t1\",\"text\":\"x\",\"stance\":\"maybe\"}\n",
        );
        match load_corpus(f.path()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("maybe"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_and_duplicates() {
        let f = write_tmp("{\"id\":\"t1\",\"question\":\"Q?\"}\n{not json\n");
        assert!(matches!(load_corpus(f.path()), Err(Error::Parse { line: 2, .. })));

        let f = write_tmp(
            "{\"id\":\"t1\",\"question\":\"Q?\"}\n\
             {\"id\":\"a\",\"topic_id\":\"t1\",\"text\":\"x\",\"stance\":\"pro\"}\n\
             {\"id\":\"a\",\"topic_id\":\"t1\",\"text\":\"y\",\"stance\":\"con\"}\n",
        );
        assert!(matches!(load_corpus(f.path()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let f = write_tmp("");
        let c = load_corpus(f.path()).unwrap();
        assert!(c.topics().is_empty() && c.arguments().is_empty());
    }

    #[test]
    fn split_partitions_in_corpus_order() {
        let f = write_tmp(&two_topic_file());
        let c = load_corpus(f.path()).unwrap();
        let (pro, con) = c.split_by_stance("t1").unwrap();
        assert_eq!(pro.len() + con.len(), 6);
        let ids: Vec<_> = pro.iter().map(|a| a.argument_id.as_str()).collect();
        assert_eq!(ids, ["a0", "a2", "a4"]);
        assert!(matches!(c.split_by_stance("nope"), Err(Error::UnknownTopic(_))));
    }

    #[test]
    fn one_sided_topic_splits_without_error() {
        let f = write_tmp(
            "{\"id\":\"t1\",\"question\":\"Q?\"}\n\
             {\"id\":\"a\",\"topic_id\":\"t1\",\"text\":\"x\",\"stance\":\"pro\"}\n\
             {\"id\":\"b\",\"topic_id\":\"t1\",\"text\":\"y\",\"stance\":\"pro\"}\n",
        );
        let c = load_corpus(f.path()).unwrap();
        let (pro, con) = c.split_by_stance("t1").unwrap();
        assert_eq!((pro.len(), con.len()), (2, 0));
    }

    #[test]
    fn jsonl_round_trip() {
        let src = two_topic_file();
        let f = write_tmp(&src);
        let c = load_corpus(f.path()).unwrap();
        let again = c.to_jsonl();
        let parse = |s: &str| -> Vec<Value> { s.lines().map(|l| serde_json::from_str(l).unwrap()).collect() };
        assert_eq!(parse(&src), parse(&again));
    }

    fn small_corpus() -> Corpus {
        let f = write_tmp(&two_topic_file());
        load_corpus(f.path()).unwrap()
    }

    #[test]
    fn annotations_load_and_are_symmetric() {
        let c = small_corpus();
        let f = write_tmp(concat!(
            "{\"kind\":\"signature\",\"topic_id\":\"t1\",\"concept\":\"meat\",\"relevant\":true,\"appropriate_granularity\":false}\n",
            "{\"kind\":\"stance\",\"argument_id\":\"a0\",\"concept\":\"meat\",\"label\":-1}\n",
            "{\"kind\":\"stance\",\"argument_id\":\"a1\",\"concept\":\"meat\",\"label\":\"neutral\"}\n",
            "{\"kind\":\"pair_global\",\"arg1\":\"a0\",\"arg2\":\"a1\",\"label\":\"partial_agreement\"}\n",
            "{\"kind\":\"pair_concept\",\"arg1\":\"a0\",\"arg2\":\"a1\",\"concept\":\"meat\",\"label\":\"disagree\"}\n",
        ));
        let set = load_annotations(f.path(), &c).unwrap();
        assert_eq!(set.signature_labels.len(), 1);
        assert_eq!(set.stance_labels.len(), 2);
        assert_eq!(set.pair_global("a1", "a0"), Some(GlobalLabel::PartialAgreement));
        assert_eq!(set.pair_global("a0", "a1"), Some(GlobalLabel::PartialAgreement));
        assert_eq!(set.pair_concept("a1", "a0", "meat"), Some(ConceptLabel::Disagree));
        assert_eq!(set.stance("a1", "meat"), Some(Stance::Neutral));
    }

    #[test]
    fn bad_pair_label_is_rejected() {
        let c = small_corpus();
        let f = write_tmp(
            "{\"kind\":\"pair_global\",\"arg1\":\"a0\",\"arg2\":\"a1\",\"label\":\"maybe-agree\"}\n",
        );
        assert!(matches!(
            load_annotations(f.path(), &c),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_arguments_are_listed() {
        let c = small_corpus();
        let f = write_tmp(concat!(
            "{\"kind\":\"pair_global\",\"arg1\":\"zz\",\"arg2\":\"a1\",\"label\":\"orthogonal\"}\n",
            "{\"kind\":\"stance\",\"argument_id\":\"yy\",\"concept\":\"meat\",\"label\":1}\n",
        ));
        match load_annotations(f.path(), &c) {
            Err(Error::UnknownArguments(ids)) => assert_eq!(ids, ["yy", "zz"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn annotator_records_feed_reliability_only() {
        let c = small_corpus();
        let f = write_tmp(concat!(
            "{\"kind\":\"stance\",\"annotator\":\"x\",\"argument_id\":\"a0\",\"concept\":\"meat\",\"label\":1}\n",
            "{\"kind\":\"stance\",\"annotator\":\"y\",\"argument_id\":\"a0\",\"concept\":\"meat\",\"label\":1}\n",
            "{\"kind\":\"stance\",\"annotator\":\"y\",\"argument_id\":\"a1\",\"concept\":\"meat\",\"label\":0}\n",
        ));
        let set = load_annotations(f.path(), &c).unwrap();
        assert!(set.stance_labels.is_empty());
        let data = set.reliability_data("stance").unwrap();
        assert_eq!(data.n_annotators(), 2);
        assert_eq!(data.n_items(), 2);
    }
}
