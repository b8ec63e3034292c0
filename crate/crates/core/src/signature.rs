//! Topic signatures: the ordered concept list that defines PSV dimensions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Argument, Corpus};
use crate::error::{Error, Result};
use crate::llm::{relevance_judgment, LlmClient};
use crate::util::{rank_desc, read_lines, sha256_hex};

/// Aligned concept sets keyed by argument id.
pub type AlignedSets = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pro,
    Con,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Pro => "pro",
            Side::Con => "con",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Normalized frequency difference; `con == -pro` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConceptScore {
    pub pro: f64,
    pub con: f64,
}

impl ConceptScore {
    pub fn from_frequencies(f_pro: f64, f_con: f64) -> Self {
        let pro = f_pro - f_con;
        ConceptScore { pro, con: -pro }
    }

    pub fn magnitude(self) -> f64 {
        self.pro.abs()
    }

    pub fn for_side(self, side: Side) -> f64 {
        match side {
            Side::Pro => self.pro,
            Side::Con => self.con,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureEntry {
    pub concept: String,
    pub side: Side,
    /// Score on the entry's own side.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedEntry {
    pub concept: String,
    pub side: Side,
    pub score: f64,
    pub filter: SignatureFilter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureFilter {
    Hypernym,
    Relevance,
}

impl SignatureFilter {
    pub fn as_str(self) -> &'static str {
        match self {
            SignatureFilter::Hypernym => "hypernym",
            SignatureFilter::Relevance => "relevance",
        }
    }
}

impl fmt::Display for SignatureFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignatureFilter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hypernym" | "hyp" => Ok(SignatureFilter::Hypernym),
            "relevance" | "irrel" => Ok(SignatureFilter::Relevance),
            _ => Err(format!("unknown filter `{s}` (expected hypernym or relevance)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub topic_id: String,
    pub k: usize,
    /// Surviving concepts: pro side first, each side by descending score.
    pub concepts: Vec<SignatureEntry>,
    pub filters_applied: Vec<SignatureFilter>,
    pub dropped: Vec<DroppedEntry>,
    pub warnings: Vec<String>,
}

/// One row of the signature output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureRecord {
    pub concept: String,
    pub side: Side,
    pub score: f64,
    pub survived_filters: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropped_by: Option<SignatureFilter>,
}

fn entry_order(a: (Side, &str, f64), b: (Side, &str, f64)) -> std::cmp::Ordering {
    a.0.cmp(&b.0).then_with(|| rank_desc((a.1, a.2), (b.1, b.2)))
}

impl Signature {
    pub fn dim(&self) -> usize {
        self.concepts.len()
    }

    pub fn concept_names(&self) -> Vec<String> {
        self.concepts.iter().map(|e| e.concept.clone()).collect()
    }

    pub fn side_of(&self, concept: &str) -> Option<Side> {
        self.concepts
            .iter()
            .find(|e| e.concept == concept)
            .map(|e| e.side)
    }

    /// Identifier tying PSVs to this exact concept list.
    pub fn reference(&self) -> String {
        let joined = self
            .concepts
            .iter()
            .map(|e| format!("{}\t{}", e.side, e.concept))
            .collect::<Vec<_>>()
            .join("\n");
        format!("{}@{}", self.topic_id, &sha256_hex(joined.as_bytes())[..16])
    }

    /// Pre-filter entries in selection order, each marked with its fate.
    pub fn records(&self) -> Vec<SignatureRecord> {
        let mut out: Vec<SignatureRecord> = self
            .concepts
            .iter()
            .map(|e| SignatureRecord {
                concept: e.concept.clone(),
                side: e.side,
                score: e.score,
                survived_filters: true,
                dropped_by: None,
            })
            .chain(self.dropped.iter().map(|d| SignatureRecord {
                concept: d.concept.clone(),
                side: d.side,
                score: d.score,
                survived_filters: false,
                dropped_by: Some(d.filter),
            }))
            .collect();
        out.sort_by(|a, b| entry_order((a.side, &a.concept, a.score), (b.side, &b.concept, b.score)));
        out
    }

    fn retain(mut self, filter: SignatureFilter, keep: impl Fn(&SignatureEntry) -> bool) -> Self {
        let (kept, removed): (Vec<_>, Vec<_>) = self.concepts.into_iter().partition(|e| keep(e));
        self.concepts = kept;
        self.dropped.extend(removed.into_iter().map(|e| DroppedEntry {
            concept: e.concept,
            side: e.side,
            score: e.score,
            filter,
        }));
        self.filters_applied.push(filter);
        self
    }
}

/// Share of `side_args` whose concept set contains `concept`; 0 when `side_args` is empty.
pub fn stance_frequency(concept: &str, aligned: &AlignedSets, side_args: &[&Argument]) -> f64 {
    let hits = side_args
        .iter()
        .filter(|a| aligned.get(&a.argument_id).is_some_and(|c| c.contains(concept)))
        .count();
    hits as f64 / side_args.len().max(1) as f64
}

/// Scores every concept aligned to at least one argument of the topic.
pub fn score_concepts(
    topic_id: &str,
    aligned: &AlignedSets,
    corpus: &Corpus,
) -> Result<BTreeMap<String, ConceptScore>> {
    let (pro, con) = corpus.split_by_stance(topic_id)?;
    let missing: Vec<String> = pro
        .iter()
        .chain(&con)
        .filter(|a| !aligned.contains_key(&a.argument_id))
        .map(|a| a.argument_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no aligned concept sets for arguments of topic `{topic_id}`: {}",
            missing.join(", ")
        )));
    }
    let candidates: BTreeSet<&String> = pro
        .iter()
        .chain(&con)
        .flat_map(|a| &aligned[&a.argument_id])
        .collect();
    Ok(candidates
        .into_iter()
        .map(|c| {
            let s = ConceptScore::from_frequencies(
                stance_frequency(c, aligned, &pro),
                stance_frequency(c, aligned, &con),
            );
            (c.clone(), s)
        })
        .collect())
}

/// `concept -> lemma`; unknown concepts are their own lemma.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaTable(BTreeMap<String, String>);

impl LemmaTable {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        LemmaTable(map)
    }

    pub fn lemma<'a>(&'a self, concept: &'a str) -> &'a str {
        self.0.get(concept).map(String::as_str).unwrap_or(concept)
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.0.contains_key(concept)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `lemma -> hypernym lemmas` (first sense only, as prepared offline).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HypernymTable(BTreeMap<String, BTreeSet<String>>);

impl HypernymTable {
    pub fn new(map: BTreeMap<String, BTreeSet<String>>) -> Self {
        HypernymTable(map)
    }

    pub fn hypernyms(&self, lemma: &str) -> impl Iterator<Item = &str> {
        self.0.get(lemma).into_iter().flatten().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn two_columns(path: &Path) -> Result<Vec<(usize, String, String)>> {
    read_lines(path)?
        .into_iter()
        .map(|(no, line)| {
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                [a, b] if !a.trim().is_empty() && !b.trim().is_empty() => {
                    Ok((no, a.trim().to_string(), b.trim().to_string()))
                }
                _ => Err(Error::parse(
                    path,
                    no,
                    "expected two non-empty tab-separated columns",
                )),
            }
        })
        .collect()
}

pub fn load_lemmas(path: impl AsRef<Path>) -> Result<LemmaTable> {
    let path = path.as_ref();
    let mut map = BTreeMap::new();
    for (no, concept, lemma) in two_columns(path)? {
        if let Some(prev) = map.insert(concept.clone(), lemma.clone()) {
            if prev != lemma {
                return Err(Error::parse(
                    path,
                    no,
                    format!("`{concept}` has lemmas `{prev}` and `{lemma}`"),
                ));
            }
        }
    }
    Ok(LemmaTable(map))
}

pub fn load_hypernyms(path: impl AsRef<Path>) -> Result<HypernymTable> {
    let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (_, lemma, hypernym) in two_columns(path.as_ref())? {
        map.entry(lemma).or_default().insert(hypernym);
    }
    Ok(HypernymTable(map))
}

/// Keeps one concept per lemma: largest |score|, ties to the smaller concept.
pub fn dedup_lemmas(
    scored: &BTreeMap<String, ConceptScore>,
    lemmas: &LemmaTable,
) -> BTreeMap<String, ConceptScore> {
    let mut best: BTreeMap<&str, (&String, ConceptScore)> = BTreeMap::new();
    for (concept, score) in scored {
        if !lemmas.contains(concept) {
            log::debug!("no lemma for `{concept}`; using the concept itself");
        }
        let slot = best.entry(lemmas.lemma(concept)).or_insert((concept, *score));
        // Concepts arrive in ascending order, so only a strictly larger score replaces.
        if score.magnitude() > slot.1.magnitude() {
            *slot = (concept, *score);
        }
    }
    best.into_values().map(|(c, s)| (c.clone(), s)).collect()
}

/// Top-k concepts per side.
///
/// Positive pro-scores form the pro pool and negative ones the con pool. A side
/// short of `k` takes zero-score concepts (lexicographically, pro side first) and
/// then the other side's unused concepts by its own score. No concept appears twice.
pub fn select_top_k(topic_id: &str, scored: &BTreeMap<String, ConceptScore>, k: usize) -> Result<Signature> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let ranked = |side: Side, keep: &dyn Fn(f64) -> bool| -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = scored
            .iter()
            .map(|(c, s)| (c.as_str(), s.for_side(side)))
            .filter(|&(_, s)| keep(s))
            .collect();
        v.sort_by(|a, b| rank_desc(*a, *b));
        v
    };
    let mut pro = ranked(Side::Pro, &|s| s > 0.0);
    let mut con = ranked(Side::Con, &|s| s > 0.0);
    let pro_spill = pro.split_off(k.min(pro.len()));
    let con_spill = con.split_off(k.min(con.len()));
    let mut zeros: Vec<(&str, f64)> = ranked(Side::Pro, &|s| s == 0.0);
    zeros.reverse();
    for side in [&mut pro, &mut con] {
        while side.len() < k {
            match zeros.pop() {
                Some(z) => side.push(z),
                None => break,
            }
        }
    }
    fn fill<'a>(
        side: &mut Vec<(&'a str, f64)>,
        spill: &[(&'a str, f64)],
        s: Side,
        scored: &BTreeMap<String, ConceptScore>,
        k: usize,
    ) {
        let mut rest: Vec<(&str, f64)> = spill.iter().map(|&(c, _)| (c, scored[c].for_side(s))).collect();
        rest.sort_by(|a, b| rank_desc(*a, *b));
        let need = k.saturating_sub(side.len());
        side.extend(rest.into_iter().take(need));
    }
    // A spill is non-empty only when its own side is full, so the two fills never overlap.
    fill(&mut pro, &con_spill, Side::Pro, scored, k);
    fill(&mut con, &pro_spill, Side::Con, scored, k);

    let mut warnings = Vec::new();
    for (side, list) in [(Side::Pro, &pro), (Side::Con, &con)] {
        if list.len() < k {
            let w = format!(
                "topic `{topic_id}`: only {} {side} concepts available for k = {k}",
                list.len()
            );
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    let concepts = pro
        .iter()
        .map(|&(c, s)| (Side::Pro, c, s))
        .chain(con.iter().map(|&(c, s)| (Side::Con, c, s)))
        .map(|(side, c, score)| SignatureEntry {
            concept: c.to_string(),
            side,
            score,
        })
        .collect();
    Ok(Signature {
        topic_id: topic_id.to_string(),
        k,
        concepts,
        filters_applied: Vec::new(),
        dropped: Vec::new(),
        warnings,
    })
}

/// Scoring, lemma deduplication and top-k selection for one topic.
pub fn induce_signature(
    topic_id: &str,
    aligned: &AlignedSets,
    corpus: &Corpus,
    lemmas: &LemmaTable,
    k: usize,
) -> Result<Signature> {
    let scored = score_concepts(topic_id, aligned, corpus)?;
    select_top_k(topic_id, &dedup_lemmas(&scored, lemmas), k)
}

/// Drops every concept whose lemma is a hypernym of another member's lemma.
///
/// Judged against the input set in one pass, so chains like a → b → c drop both b and c.
/// Concepts that never occur in the table are kept.
pub fn filter_hypernyms(signature: Signature, lemmas: &LemmaTable, hypernyms: &HypernymTable) -> Signature {
    let member_lemmas: BTreeSet<&str> = signature
        .concepts
        .iter()
        .map(|e| lemmas.lemma(&e.concept))
        .collect();
    let covered: BTreeSet<String> = member_lemmas
        .iter()
        .flat_map(|&l| hypernyms.hypernyms(l).filter(move |h| *h != l))
        .map(str::to_string)
        .collect();
    let lemma_of: BTreeMap<String, String> = signature
        .concepts
        .iter()
        .map(|e| (e.concept.clone(), lemmas.lemma(&e.concept).to_string()))
        .collect();
    signature.retain(SignatureFilter::Hypernym, |e| {
        !covered.contains(&lemma_of[&e.concept])
    })
}

/// Asks the model whether each concept matters for the topic; unparseable replies keep it.
pub fn filter_relevance(signature: Signature, topic_question: &str, client: &LlmClient) -> Result<Signature> {
    let verdicts: Vec<Option<bool>> = signature
        .concepts
        .par_iter()
        .map(|e| {
            relevance_judgment(client, topic_question, &e.concept)
                .map_err(|err| err.context(format!("relevance of `{}`", e.concept)))
        })
        .collect::<Result<_>>()?;
    let keep: BTreeMap<String, bool> = signature
        .concepts
        .iter()
        .zip(&verdicts)
        .map(|(e, v)| (e.concept.clone(), v.unwrap_or(true)))
        .collect();
    Ok(signature.retain(SignatureFilter::Relevance, |e| keep[&e.concept]))
}
