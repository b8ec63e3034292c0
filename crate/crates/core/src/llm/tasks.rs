//! Prompt-specific calls and their reply parsers.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stance::Stance;

use super::{python_list, LlmClient, TemplateName};

/// One-word stance reply: `negative` / `neutral` / `positive`, any case,
/// surrounding punctuation ignored.
pub fn parse_stance_reply(raw: &str) -> Result<Stance> {
    let word = raw
        .trim()
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_lowercase();
    match word.as_str() {
        "negative" => Ok(Stance::Against),
        "neutral" => Ok(Stance::Neutral),
        "positive" => Ok(Stance::Favor),
        _ => Err(Error::UnparseableReply {
            context: "stance".into(),
            raw: raw.to_string(),
        }),
    }
}

/// First digit decides: `1` relevant, `2` irrelevant, anything else unparseable.
pub fn parse_relevance_reply(raw: &str) -> Option<bool> {
    match raw.chars().find(char::is_ascii_digit) {
        Some('1') => Some(true),
        Some('2') => Some(false),
        _ => None,
    }
}

fn strip_list_marker(item: &str) -> &str {
    let mut s = item.trim();
    s = s.trim_start_matches(['-', '*', '•', '–']).trim_start();
    let digits = s.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &s[digits..];
        if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            s = r.trim_start();
        }
    }
    s.trim_matches(|c: char| matches!(c, '"' | '\'' | '[' | ']' | '.' | ';') || c.is_whitespace())
}

/// Line- or comma-delimited list, bullets stripped, deduplicated ignoring case
/// (first spelling wins).
pub fn parse_stakeholder_list(raw: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in raw.lines() {
        for item in line.split(',') {
            let name = strip_list_marker(item);
            if name.is_empty() {
                continue;
            }
            if seen.insert(name.to_lowercase()) {
                out.push(name.to_string());
            }
        }
    }
    out
}

fn normalize_group(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Per-concept label of the pairwise prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairwiseLabel {
    Agreement = 1,
    Neutral = 2,
    Disagreement = 3,
}

/// Parses `[1, 3, 2]` (brackets optional) and checks the length.
pub fn parse_pairwise_reply(raw: &str, expected_len: usize) -> Result<Vec<PairwiseLabel>> {
    let bad = || Error::UnparseableReply {
        context: format!("pairwise acceptability over {expected_len} concepts"),
        raw: raw.to_string(),
    };
    let body = raw.trim();
    let body = body.strip_prefix('[').unwrap_or(body);
    let body = body.strip_suffix(']').unwrap_or(body);
    let labels = body
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "1" => Ok(PairwiseLabel::Agreement),
            "2" => Ok(PairwiseLabel::Neutral),
            "3" => Ok(PairwiseLabel::Disagreement),
            _ => Err(bad()),
        })
        .collect::<Result<Vec<_>>>()?;
    if labels.len() != expected_len {
        return Err(bad());
    }
    Ok(labels)
}

/// Asks for an argument's attitude towards one aspect.
pub fn stance_judgment(
    client: &LlmClient,
    few_shot: bool,
    topic: &str,
    argument: &str,
    aspect: &str,
) -> Result<Stance> {
    let name = if few_shot {
        TemplateName::StanceFew
    } else {
        TemplateName::StanceZero
    };
    let fills = BTreeMap::from([
        ("topic", topic.to_string()),
        ("argument", argument.to_string()),
        ("aspect", aspect.to_string()),
    ]);
    parse_stance_reply(&client.complete_template(name, &fills)?)
}

/// `Some(relevant)` or `None` when the reply has no usable digit.
pub fn relevance_judgment(client: &LlmClient, topic: &str, concept: &str) -> Result<Option<bool>> {
    let fills = BTreeMap::from([("topic", topic.to_string()), ("concept", concept.to_string())]);
    let reply = client.complete_template(TemplateName::Relevance, &fills)?;
    let parsed = parse_relevance_reply(&reply);
    if parsed.is_none() {
        log::warn!("unparseable relevance reply for `{concept}`: {reply:?}");
    }
    Ok(parsed)
}

/// Stakeholder groups the model proposes for a topic.
pub fn topic_stakeholders(client: &LlmClient, topic: &str) -> Result<Vec<String>> {
    let fills = BTreeMap::from([("topic", topic.to_string())]);
    let reply = client.complete_template(TemplateName::TopicStakeholders, &fills)?;
    let groups = parse_stakeholder_list(&reply);
    if groups.is_empty() {
        return Err(Error::UnparseableReply {
            context: format!("stakeholders for `{topic}`"),
            raw: reply,
        });
    }
    Ok(groups)
}

/// Candidate groups the model selects for one argument, in candidate order.
pub fn argument_stakeholders(
    client: &LlmClient,
    argument: &str,
    candidates: &[String],
) -> Result<Vec<String>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate stakeholder groups".into()));
    }
    let fills = BTreeMap::from([
        ("argument", argument.to_string()),
        ("stakeholders", python_list(candidates)),
    ]);
    let reply = client.complete_template(TemplateName::ArgumentStakeholders, &fills)?;
    Ok(select_candidates(&reply, candidates))
}

fn select_candidates(reply: &str, candidates: &[String]) -> Vec<String> {
    let named: HashSet<String> = parse_stakeholder_list(reply)
        .iter()
        .map(|n| normalize_group(n))
        .collect();
    let known: HashSet<String> = candidates.iter().map(|c| normalize_group(c)).collect();
    for n in named.difference(&known) {
        log::warn!("dropping stakeholder `{n}` outside the candidate set");
    }
    let picked: Vec<String> = candidates
        .iter()
        .filter(|c| named.contains(&normalize_group(c)))
        .cloned()
        .collect();
    if picked.is_empty() {
        log::warn!("no candidate stakeholder matched reply {reply:?}");
    }
    picked
}

/// Direct per-concept (dis)agreement judgment for an argument pair.
pub fn pairwise_acceptability(
    client: &LlmClient,
    argument_1: &str,
    argument_2: &str,
    concepts: &[String],
) -> Result<Vec<PairwiseLabel>> {
    if concepts.is_empty() {
        return Err(Error::InvalidArgument("empty concept list".into()));
    }
    let fills = BTreeMap::from([
        ("argument_1", argument_1.to_string()),
        ("argument_2", argument_2.to_string()),
        ("concepts", python_list(concepts)),
    ]);
    let reply = client.complete_template(TemplateName::PairwiseAcceptability, &fills)?;
    parse_pairwise_reply(&reply, concepts.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::testing::{client_with, FnTransport};
    use std::sync::Arc;

    #[test]
    fn stance_replies() {
        assert_eq!(parse_stance_reply("Positive.").unwrap(), Stance::Favor);
        assert_eq!(parse_stance_reply("neutral").unwrap(), Stance::Neutral);
        assert_eq!(parse_stance_reply(" NEGATIVE!\n").unwrap(), Stance::Against);
        match parse_stance_reply("I think negative overall") {
            Err(Error::UnparseableReply { raw, .. }) => assert_eq!(raw, "I think negative overall"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn relevance_replies() {
        assert_eq!(parse_relevance_reply("1"), Some(true));
        assert_eq!(parse_relevance_reply("2"), Some(false));
        assert_eq!(parse_relevance_reply("relevance: 1"), Some(true));
        assert_eq!(parse_relevance_reply("yes"), None);
        assert_eq!(parse_relevance_reply("3"), None);
    }

    #[test]
    fn stakeholder_lists() {
        assert_eq!(
            parse_stakeholder_list("- Hunters\n- Parents"),
            ["Hunters", "Parents"]
        );
        assert_eq!(parse_stakeholder_list("hunters, Hunters"), ["hunters"]);
        assert_eq!(
            parse_stakeholder_list("1. Farmers\n2) \"Animal rights activists\".\n\n* Hunters"),
            ["Farmers", "Animal rights activists", "Hunters"]
        );
        assert!(parse_stakeholder_list("  \n").is_empty());
    }

    #[test]
    fn candidate_selection_is_fuzzy_and_closed() {
        let cands: Vec<String> = [
            "Hunters",
            "Animal rights activists",
            "Farmers",
            "Parents",
            "Government officials",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(
            select_candidates("- hunters\n- Animal-rights activists!", &cands),
            ["Hunters", "Animal rights activists"]
        );
        assert_eq!(
            select_candidates("Farmers, government officials", &cands),
            ["Farmers", "Government officials"]
        );
        assert_eq!(select_candidates("Aliens", &cands), Vec::<String>::new());
    }

    #[test]
    fn pairwise_replies() {
        use PairwiseLabel::*;
        assert_eq!(
            parse_pairwise_reply("[1, 3, 2]", 3).unwrap(),
            [Agreement, Disagreement, Neutral]
        );
        assert!(parse_pairwise_reply("[1, 3]", 3).is_err());
        assert!(parse_pairwise_reply("[1, 4, 2]", 3).is_err());
        assert_eq!(PairwiseLabel::Disagreement as u8, 3);
    }

    #[test]
    fn end_to_end_through_client() {
        let t = Arc::new(FnTransport(|p: &str| {
            if p.contains("Return a list of the most important stakeholders") {
                "- Hunters\n- Parents\n- hunters".to_string()
            } else if p.starts_with("Here is an argument") {
                "Parents".to_string()
            } else if p.contains("Concepts: ['a', 'b']") {
                "[2, 3]".to_string()
            } else {
                "Positive".to_string()
            }
        }));
        let c = client_with(t, None);
        let groups = topic_stakeholders(&c, "Q?").unwrap();
        assert_eq!(groups, ["Hunters", "Parents"]);
        assert_eq!(argument_stakeholders(&c, "arg", &groups).unwrap(), ["Parents"]);
        let concepts = vec!["a".to_string(), "b".to_string()];
        assert_eq!(
            pairwise_acceptability(&c, "x", "y", &concepts).unwrap(),
            [PairwiseLabel::Neutral, PairwiseLabel::Disagreement]
        );
        assert_eq!(
            stance_judgment(&c, true, "Q?", "arg", "a").unwrap(),
            Stance::Favor
        );
    }
}
