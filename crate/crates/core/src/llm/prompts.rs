use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    StanceZero,
    StanceFew,
    Relevance,
    TopicStakeholders,
    ArgumentStakeholders,
    PairwiseAcceptability,
}

impl TemplateName {
    pub const ALL: [TemplateName; 6] = [
        TemplateName::StanceZero,
        TemplateName::StanceFew,
        TemplateName::Relevance,
        TemplateName::TopicStakeholders,
        TemplateName::ArgumentStakeholders,
        TemplateName::PairwiseAcceptability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::StanceZero => "stance_zero",
            TemplateName::StanceFew => "stance_few",
            TemplateName::Relevance => "relevance",
            TemplateName::TopicStakeholders => "topic_stakeholders",
            TemplateName::ArgumentStakeholders => "argument_stakeholders",
            TemplateName::PairwiseAcceptability => "pairwise_acceptability",
        }
    }

    fn source(self) -> &'static str {
        match self {
            TemplateName::StanceZero => include_str!("../../prompts/stance_zero.txt"),
            TemplateName::StanceFew => include_str!("../../prompts/stance_few.txt"),
            TemplateName::Relevance => include_str!("../../prompts/relevance.txt"),
            TemplateName::TopicStakeholders => include_str!("../../prompts/topic_stakeholders.txt"),
            TemplateName::ArgumentStakeholders => {
                include_str!("../../prompts/argument_stakeholders.txt")
            }
            TemplateName::PairwiseAcceptability => {
                include_str!("../../prompts/pairwise_acceptability.txt")
            }
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        TemplateName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown template `{s}`"))
    }
}

/// Prompt text with `{name}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub text: String,
}

impl PromptTemplate {
    /// Built-in template. Leading `#` comment lines and the final newline are stripped.
    pub fn get(name: TemplateName) -> Self {
        let body: Vec<&str> = name.source().lines().skip_while(|l| l.starts_with('#')).collect();
        PromptTemplate {
            name: name.as_str().to_string(),
            text: body.join("\n"),
        }
    }

    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        PromptTemplate {
            name: name.into(),
            text: text.into(),
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (_, name, _) in scan(&self.text) {
            if seen.insert(name) {
                out.push(name.to_string());
            }
        }
        out
    }

    /// Substitutes every placeholder; fails on the first one without a fill.
    pub fn render(&self, fills: &BTreeMap<&str, String>) -> Result<String> {
        let mut out = String::with_capacity(self.text.len());
        let mut last = 0;
        for (start, name, end) in scan(&self.text) {
            let value = fills.get(name).ok_or_else(|| Error::UnfilledPlaceholder {
                template: self.name.clone(),
                placeholder: name.to_string(),
            })?;
            out.push_str(&self.text[last..start]);
            out.push_str(value);
            last = end;
        }
        out.push_str(&self.text[last..]);
        Ok(out)
    }
}

/// `(start, name, end)` for each `{identifier}` in `text`.
fn scan(text: &str) -> Vec<(usize, &str, usize)> {
    let bytes = text.as_bytes();
    let mut found = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let rest = &text[i + 1..];
            if let Some(close) = rest.find('}') {
                let name = &rest[..close];
                if !name.is_empty()
                    && name
                        .bytes()
                        .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
                {
                    found.push((i, name, i + close + 2));
                    i += close + 2;
                    continue;
                }
            }
        }
        i += 1;
    }
    found
}

/// Formats strings the way Python's `repr(list_of_str)` does.
pub fn python_list(items: &[String]) -> String {
    let reprs: Vec<String> = items.iter().map(|s| python_str_repr(s)).collect();
    format!("[{}]", reprs.join(", "))
}

fn python_str_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}
