use std::collections::BTreeSet;

use crate::corpus::Argument;
use crate::error::{Error, Result};
use crate::util::{cosine, rank_desc};

use super::{connect_paths, ArgumentConcepts, ConceptGraph, Embedder, EmbeddingStore};

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "etc", "e.g", "i.e", "inc", "ltd", "no", "fig",
    "approx", "dept", "u.s", "gov",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];

fn is_abbreviation(before: &str) -> bool {
    let word = before
        .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .next()
        .unwrap_or("")
        .to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

/// Rule-based splitter on terminal punctuation (`.`, `?`, `!`).
///
/// A boundary needs whitespace (or end of text) after the punctuation run and
/// any closing quotes or brackets; a period after a known abbreviation is
/// not a boundary.
pub fn sentence_split(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '?' | '!') {
            let mut j = i;
            while j + 1 < chars.len() && matches!(chars[j + 1].1, '.' | '?' | '!') {
                j += 1;
            }
            while j + 1 < chars.len() && CLOSERS.contains(&chars[j + 1].1) {
                j += 1;
            }
            let at_boundary = j + 1 == chars.len() || chars[j + 1].1.is_whitespace();
            let abbreviated = c == '.' && i == j && is_abbreviation(&text[start..pos]);
            if at_boundary && !abbreviated {
                let end = chars.get(j + 1).map_or(text.len(), |&(p, _)| p);
                let s = text[start..end].trim();
                if !s.is_empty() {
                    sentences.push(s.to_string());
                }
                start = end;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

/// Graph nodes that have an embedding, ready for nearest-neighbour lookup.
pub struct ConceptMatcher<'a> {
    candidates: Vec<(&'a str, &'a [f64])>,
}

impl<'a> ConceptMatcher<'a> {
    pub fn new(graph: &'a ConceptGraph, store: &'a EmbeddingStore) -> Result<Self> {
        if store.is_empty() {
            return Err(Error::EmptyEmbeddings);
        }
        let candidates = graph
            .nodes()
            .iter()
            .filter_map(|l| store.get(l).map(|v| (l.as_str(), v)))
            .collect();
        Ok(ConceptMatcher { candidates })
    }

    /// The `top_m` concepts most similar to `vector`, best first; ties go to the smaller label.
    pub fn top(&self, vector: &[f64], top_m: usize) -> Vec<(String, f64)> {
        let mut scored: Vec<(&str, f64)> = self
            .candidates
            .iter()
            .map(|&(l, v)| (l, cosine(v, vector)))
            .collect();
        scored.sort_by(|a, b| rank_desc(*a, *b));
        scored
            .into_iter()
            .take(top_m)
            .map(|(l, s)| (l.to_string(), s))
            .collect()
    }
}

/// Ranks graph concepts by cosine similarity to an embedded sentence.
pub fn match_concepts(
    sentence: &str,
    embedder: &dyn Embedder,
    store: &EmbeddingStore,
    graph: &ConceptGraph,
    top_m: usize,
) -> Result<Vec<(String, f64)>> {
    if top_m == 0 {
        return Err(Error::InvalidArgument("top_m must be at least 1".into()));
    }
    let matcher = ConceptMatcher::new(graph, store)?;
    let vector = embedder.embed(sentence)?;
    Ok(matcher.top(&vector, top_m))
}

/// Sentence matching followed by path connection for one argument.
///
/// The argument vector is the mean of its sentence vectors.
pub fn align_argument(
    argument: &Argument,
    graph: &ConceptGraph,
    store: &EmbeddingStore,
    embedder: &dyn Embedder,
    top_m: usize,
) -> Result<ArgumentConcepts> {
    if top_m == 0 {
        return Err(Error::InvalidArgument("top_m must be at least 1".into()));
    }
    let matcher = ConceptMatcher::new(graph, store)?;
    let ctx = |e: Error| e.context(format!("argument `{}`", argument.argument_id));
    let sentences = sentence_split(&argument.text);
    let mut anchors = BTreeSet::new();
    let mut mean: Vec<f64> = Vec::new();
    for sentence in &sentences {
        let v = embedder.embed(sentence).map_err(ctx)?;
        if mean.is_empty() {
            mean = vec![0.0; v.len()];
        } else if v.len() != mean.len() {
            return Err(ctx(Error::DimensionMismatch {
                label: sentence.clone(),
                expected: mean.len(),
                actual: v.len(),
            }));
        }
        for (m, x) in mean.iter_mut().zip(&v) {
            *m += x;
        }
        anchors.extend(matcher.top(&v, top_m).into_iter().map(|(l, _)| l));
    }
    let n = sentences.len().max(1) as f64;
    for m in &mut mean {
        *m /= n;
    }
    connect_paths(&argument.argument_id, graph, &anchors, store, &mean).map_err(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TopicStance;
    use crate::graph::Edge;

    #[test]
    fn splits_on_terminal_punctuation() {
        assert_eq!(sentence_split("A. B? C!"), ["A.", "B?", "C!"]);
        assert_eq!(sentence_split("No terminal punct"), ["No terminal punct"]);
        assert_eq!(sentence_split("Mr. Smith hunts."), ["Mr. Smith hunts."]);
        assert!(sentence_split("   \n ").is_empty());
    }

    #[test]
    fn split_keeps_closers_and_decimals() {
        assert_eq!(
            sentence_split("He said \"stop!\" Then left. Pi is 3.14 here."),
            ["He said \"stop!\"", "Then left.", "Pi is 3.14 here."]
        );
        assert_eq!(sentence_split("Really?! Yes."), ["Really?!", "Yes."]);
    }

    #[test]
    fn split_preserves_content() {
        let text = "First one.  Second, e.g. with stuff!\nThird";
        let joined: String = sentence_split(text).concat();
        let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        assert_eq!(strip(&joined), strip(text));
    }

    fn toy() -> (ConceptGraph, EmbeddingStore) {
        let g = ConceptGraph::from_edges([("a", "b"), ("b", "c"), ("c", "d")].map(|(s, t)| Edge {
            source: s.into(),
            target: t.into(),
            relation: "RelatedTo".into(),
            base_weight: 1.0,
        }));
        let mut s = EmbeddingStore::default();
        s.insert("a", vec![1.0, 0.0]).unwrap();
        s.insert("b", vec![0.0, 1.0]).unwrap();
        s.insert("c", vec![0.0, 1.0]).unwrap();
        s.insert("first sentence.", vec![1.0, 0.0]).unwrap();
        s.insert("tied", vec![0.0, 2.0]).unwrap();
        (g, s)
    }

    #[test]
    fn identical_vector_ranks_first() {
        let (g, s) = toy();
        let m = match_concepts("first sentence.", &s, &s, &g, 2).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0], ("a".to_string(), 1.0));
    }

    #[test]
    fn ties_are_lexicographic() {
        let (g, s) = toy();
        let m = match_concepts("tied", &s, &s, &g, 3).unwrap();
        assert_eq!(m[0].0, "b");
        assert_eq!(m[1].0, "c");
        // d has no embedding and is never a candidate
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn empty_store_errors() {
        let (g, _) = toy();
        let empty = EmbeddingStore::default();
        assert!(matches!(
            match_concepts("x", &empty, &empty, &g, 1),
            Err(Error::EmptyEmbeddings)
        ));
    }

    #[test]
    fn align_unions_anchors_and_paths() {
        let (g, mut s) = toy();
        s.insert("Go a.", vec![1.0, 0.0]).unwrap();
        s.insert("Go c.", vec![0.0, 1.0]).unwrap();
        let arg = Argument {
            argument_id: "x".into(),
            topic_id: "t".into(),
            text: "Go a. Go c.".into(),
            overall_stance: TopicStance::Pro,
            stakeholders: None,
        };
        let r = align_argument(&arg, &g, &s, &s, 1).unwrap();
        assert_eq!(r.anchor_concepts.len(), 2);
        assert!(r.anchor_concepts.contains("a"));
        assert!(r.concepts.contains("b"));
        let union: BTreeSet<_> = r.anchor_concepts.union(&r.path_concepts).cloned().collect();
        assert_eq!(union, r.concepts);
    }
}
