//! Perspectivized stance vectors and the predictors that fill them.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Argument, Corpus};
use crate::error::{Error, Result};
use crate::llm::{stance_judgment, LlmClient};
use crate::signature::Signature;

/// Stance of an argument towards one concept.
///
/// Probability rows use the column order (against, neutral, favor).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Stance {
    Against,
    Neutral,
    Favor,
}

impl Stance {
    pub const ALL: [Stance; 3] = [Stance::Against, Stance::Neutral, Stance::Favor];

    pub fn value(self) -> i8 {
        match self {
            Stance::Against => -1,
            Stance::Neutral => 0,
            Stance::Favor => 1,
        }
    }

    pub fn from_value(v: i8) -> Option<Stance> {
        match v {
            -1 => Some(Stance::Against),
            0 => Some(Stance::Neutral),
            1 => Some(Stance::Favor),
            _ => None,
        }
    }

    pub fn column(self) -> usize {
        (self.value() + 1) as usize
    }

    pub fn one_hot(self) -> [f64; 3] {
        let mut row = [0.0; 3];
        row[self.column()] = 1.0;
        row
    }

    /// Most probable class; ties go to the earlier column.
    pub fn argmax(row: &[f64; 3]) -> Stance {
        let mut best = 0;
        for j in 1..3 {
            if row[j] > row[best] {
                best = j;
            }
        }
        Stance::ALL[best]
    }
}

impl From<Stance> for i8 {
    fn from(s: Stance) -> i8 {
        s.value()
    }
}

impl TryFrom<i8> for Stance {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        Stance::from_value(v).ok_or_else(|| format!("stance value {v} not in {{-1, 0, 1}}"))
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsvDiscrete {
    pub argument_id: String,
    pub signature_ref: String,
    pub values: Vec<Stance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsvProb {
    pub argument_id: String,
    pub signature_ref: String,
    pub rows: Vec<[f64; 3]>,
}

impl PsvProb {
    pub fn validate(&self) -> Result<()> {
        for row in &self.rows {
            validate_row(row, ROW_SUM_TOL)?;
        }
        Ok(())
    }
}

/// Row-sum tolerance for stored probability PSVs.
pub const ROW_SUM_TOL: f64 = 1e-9;

pub(crate) fn validate_row(row: &[f64; 3], tol: f64) -> Result<()> {
    let ok = row.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p))
        && (row.iter().sum::<f64>() - 1.0).abs() <= tol;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidDistribution { row: *row })
    }
}

/// Both representations of one argument's PSV over a shared signature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psv {
    pub argument_id: String,
    pub signature_ref: String,
    pub values: Vec<Stance>,
    pub rows: Vec<[f64; 3]>,
}

impl Psv {
    pub fn new(discrete: PsvDiscrete, prob: PsvProb) -> Result<Self> {
        if discrete.signature_ref != prob.signature_ref || discrete.values.len() != prob.rows.len() {
            return Err(Error::SignatureMismatch {
                left: discrete.signature_ref,
                right: prob.signature_ref,
            });
        }
        Ok(Psv {
            argument_id: discrete.argument_id,
            signature_ref: discrete.signature_ref,
            values: discrete.values,
            rows: prob.rows,
        })
    }

    /// Discrete PSV with one-hot probability rows.
    pub fn from_values(argument_id: &str, signature_ref: &str, values: Vec<Stance>) -> Self {
        let rows = values.iter().map(|s| s.one_hot()).collect();
        Psv {
            argument_id: argument_id.to_string(),
            signature_ref: signature_ref.to_string(),
            values,
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One-hot rows: −1 → (1,0,0), 0 → (0,1,0), +1 → (0,0,1).
pub fn to_prob(psv: &PsvDiscrete) -> PsvProb {
    PsvProb {
        argument_id: psv.argument_id.clone(),
        signature_ref: psv.signature_ref.clone(),
        rows: psv.values.iter().map(|s| s.one_hot()).collect(),
    }
}

/// 0 for concepts outside the argument's concept set, else the argument's topic stance.
pub fn baseline_stance(concept: &str, aligned: &BTreeSet<String>, topic_stance: Stance) -> Stance {
    if aligned.contains(concept) {
        topic_stance
    } else {
        Stance::Neutral
    }
}

pub trait StancePredictor: Sync {
    fn predict(&self, argument: &Argument, concept: &str) -> Result<Stance>;

    /// Native class distribution, for predictors that have one.
    fn predict_distribution(&self, _argument: &Argument, _concept: &str) -> Result<Option<[f64; 3]>> {
        Ok(None)
    }
}

/// Concept-set membership predictor.
pub struct BaselinePredictor<'a> {
    aligned: HashMap<&'a str, &'a BTreeSet<String>>,
}

impl<'a> BaselinePredictor<'a> {
    pub fn new(aligned: impl IntoIterator<Item = (&'a str, &'a BTreeSet<String>)>) -> Self {
        BaselinePredictor {
            aligned: aligned.into_iter().collect(),
        }
    }
}

impl StancePredictor for BaselinePredictor<'_> {
    fn predict(&self, argument: &Argument, concept: &str) -> Result<Stance> {
        let concepts = self.aligned.get(argument.argument_id.as_str()).ok_or_else(|| {
            Error::InvalidArgument(format!("no aligned concepts for `{}`", argument.argument_id))
        })?;
        Ok(baseline_stance(
            concept,
            concepts,
            argument.overall_stance.as_stance(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    FewShot,
}

/// Prompted predictor. With `fallback_neutral`, unparseable replies become 0.
pub struct LlmPredictor<'a> {
    pub client: &'a LlmClient,
    pub corpus: &'a Corpus,
    pub mode: PromptMode,
    pub fallback_neutral: bool,
}

impl StancePredictor for LlmPredictor<'_> {
    fn predict(&self, argument: &Argument, concept: &str) -> Result<Stance> {
        let topic = self
            .corpus
            .topic(&argument.topic_id)
            .ok_or_else(|| Error::UnknownTopic(argument.topic_id.clone()))?;
        llm_stance(
            self.client,
            self.mode,
            &topic.question,
            argument,
            concept,
            self.fallback_neutral,
        )
    }
}

pub fn llm_stance(
    client: &LlmClient,
    mode: PromptMode,
    topic_question: &str,
    argument: &Argument,
    concept: &str,
    fallback_neutral: bool,
) -> Result<Stance> {
    match stance_judgment(
        client,
        mode == PromptMode::FewShot,
        topic_question,
        &argument.text,
        concept,
    ) {
        Err(Error::UnparseableReply { raw, .. }) if fallback_neutral => {
            log::warn!(
                "unparseable stance reply for ({}, {concept}): {raw:?}; using neutral",
                argument.argument_id
            );
            Ok(Stance::Neutral)
        }
        other => other,
    }
}

/// One prediction per signature concept, in signature order.
pub fn build_psv(
    argument: &Argument,
    signature: &Signature,
    predictor: &dyn StancePredictor,
) -> Result<(PsvDiscrete, PsvProb)> {
    let concepts = signature.concept_names();
    let ctx = |concept: &str, e: Error| {
        e.context(format!(
            "argument `{}`, concept `{concept}`",
            argument.argument_id
        ))
    };
    let predictions: Vec<(Stance, Option<[f64; 3]>)> = concepts
        .par_iter()
        .map(|c| {
            let s = predictor.predict(argument, c).map_err(|e| ctx(c, e))?;
            let p = predictor
                .predict_distribution(argument, c)
                .map_err(|e| ctx(c, e))?;
            if let Some(row) = &p {
                validate_row(row, ROW_SUM_TOL).map_err(|e| ctx(c, e))?;
            }
            Ok((s, p))
        })
        .collect::<Result<_>>()?;
    let signature_ref = signature.reference();
    let discrete = PsvDiscrete {
        argument_id: argument.argument_id.clone(),
        signature_ref: signature_ref.clone(),
        values: predictions.iter().map(|(s, _)| *s).collect(),
    };
    let prob = PsvProb {
        argument_id: argument.argument_id.clone(),
        signature_ref,
        rows: predictions
            .iter()
            .map(|(s, p)| p.unwrap_or_else(|| s.one_hot()))
            .collect(),
    };
    Ok((discrete, prob))
}
