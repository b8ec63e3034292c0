//! Acceptability scores between two PSVs.
//!
//! Six families: `S`, `S0`, `SD` on discrete values and `P`, `P0`, `PD` on
//! probability rows. Only `S0` and `P0` define an orthogonality channel.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stance::{validate_row, Psv, Stance};

/// Row-sum tolerance for probability inputs.
pub const PROB_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    S,
    S0,
    SD,
    P,
    P0,
    PD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Agreement,
    Orthogonality,
    Disagreement,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::S,
        Family::S0,
        Family::SD,
        Family::P,
        Family::P0,
        Family::PD,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::S => "S",
            Family::S0 => "S0",
            Family::SD => "SD",
            Family::P => "P",
            Family::P0 => "P0",
            Family::PD => "PD",
        }
    }

    pub fn is_probabilistic(self) -> bool {
        matches!(self, Family::P | Family::P0 | Family::PD)
    }

    pub fn channels(self) -> &'static [Channel] {
        match self {
            Family::S0 | Family::P0 => &[Channel::Agreement, Channel::Orthogonality, Channel::Disagreement],
            _ => &[Channel::Agreement, Channel::Disagreement],
        }
    }

    pub fn defines(self, channel: Channel) -> bool {
        self.channels().contains(&channel)
    }

    pub fn check(self, channel: Channel) -> Result<()> {
        if self.defines(channel) {
            Ok(())
        } else {
            Err(Error::UndefinedChannel {
                family: self.to_string(),
                channel: channel.to_string(),
            })
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase().replace('_', "");
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == up)
            .ok_or_else(|| format!("unknown aggregation family `{s}` (expected S, S0, SD, P, P0 or PD)"))
    }
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Agreement, Channel::Orthogonality, Channel::Disagreement];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Agreement => "agreement",
            Channel::Orthogonality => "orthogonality",
            Channel::Disagreement => "disagreement",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown channel `{s}`"))
    }
}

/// A family together with one of its channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggregationMethod {
    pub family: Family,
    pub channel: Channel,
}

impl AggregationMethod {
    pub fn new(family: Family, channel: Channel) -> Result<Self> {
        family.check(channel)?;
        Ok(AggregationMethod { family, channel })
    }
}

fn delta<T: PartialEq>(a: T, b: T) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// (agreement, disagreement)
pub fn agg_s(s1: Stance, s2: Stance) -> (f64, f64) {
    let d = delta(s1, s2);
    (d, 1.0 - d)
}

/// (agreement, orthogonality, disagreement)
pub fn agg_s0(s1: Stance, s2: Stance) -> (f64, f64, f64) {
    let d = delta(s1, s2);
    let n1 = delta(s1, Stance::Neutral);
    let n2 = delta(s2, Stance::Neutral);
    (
        d * (1.0 - n1),
        (n1 + n2).min(1.0),
        (1.0 - d) * (1.0 - n1) * (1.0 - n2),
    )
}

/// (agreement, disagreement) with agreement = S0 agreement − S0 disagreement.
pub fn agg_sd(s1: Stance, s2: Stance) -> (f64, f64) {
    let (a, _, d) = agg_s0(s1, s2);
    (a - d, d - a)
}

fn check_rows(p1: &[f64; 3], p2: &[f64; 3]) -> Result<()> {
    validate_row(p1, PROB_TOL)?;
    validate_row(p2, PROB_TOL)
}

fn masked_dot(p1: &[f64; 3], p2: &[f64; 3], mask: [f64; 3]) -> f64 {
    (0..3).map(|j| p1[j] * p2[j] * mask[j]).sum()
}

fn masked_half_l1(p1: &[f64; 3], p2: &[f64; 3], mask: [f64; 3]) -> f64 {
    0.5 * (0..3).map(|j| (p1[j] - p2[j]).abs() * mask[j]).sum::<f64>()
}

const ALL_COLUMNS: [f64; 3] = [1.0, 1.0, 1.0];
const POLAR: [f64; 3] = [1.0, 0.0, 1.0];
const NEUTRAL: [f64; 3] = [0.0, 1.0, 0.0];

/// (agreement, disagreement)
pub fn agg_p(p1: &[f64; 3], p2: &[f64; 3]) -> Result<(f64, f64)> {
    check_rows(p1, p2)?;
    Ok((
        masked_dot(p1, p2, ALL_COLUMNS),
        masked_half_l1(p1, p2, ALL_COLUMNS),
    ))
}

/// (agreement, orthogonality, disagreement)
pub fn agg_p0(p1: &[f64; 3], p2: &[f64; 3]) -> Result<(f64, f64, f64)> {
    check_rows(p1, p2)?;
    Ok((
        masked_dot(p1, p2, POLAR),
        masked_dot(p1, p2, NEUTRAL),
        masked_half_l1(p1, p2, POLAR),
    ))
}

/// (agreement, disagreement) with agreement = P0 agreement − P0 disagreement.
pub fn agg_pd(p1: &[f64; 3], p2: &[f64; 3]) -> Result<(f64, f64)> {
    let (a, _, d) = agg_p0(p1, p2)?;
    Ok((a - d, d - a))
}

/// Channel values of one concept; `orthogonality` is `None` where undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConceptScores {
    pub agreement: f64,
    pub orthogonality: Option<f64>,
    pub disagreement: f64,
}

impl ConceptScores {
    fn two((agreement, disagreement): (f64, f64)) -> Self {
        ConceptScores {
            agreement,
            orthogonality: None,
            disagreement,
        }
    }

    fn three((agreement, orthogonality, disagreement): (f64, f64, f64)) -> Self {
        ConceptScores {
            agreement,
            orthogonality: Some(orthogonality),
            disagreement,
        }
    }

    pub fn get(&self, channel: Channel) -> Option<f64> {
        match channel {
            Channel::Agreement => Some(self.agreement),
            Channel::Orthogonality => self.orthogonality,
            Channel::Disagreement => Some(self.disagreement),
        }
    }
}

/// Scores one concept position under `family`.
pub fn concept_scores(family: Family, v1: &Psv, v2: &Psv, i: usize) -> Result<ConceptScores> {
    let (s1, s2) = (v1.values[i], v2.values[i]);
    let (p1, p2) = (&v1.rows[i], &v2.rows[i]);
    Ok(match family {
        Family::S => ConceptScores::two(agg_s(s1, s2)),
        Family::S0 => ConceptScores::three(agg_s0(s1, s2)),
        Family::SD => ConceptScores::two(agg_sd(s1, s2)),
        Family::P => ConceptScores::two(agg_p(p1, p2)?),
        Family::P0 => ConceptScores::three(agg_p0(p1, p2)?),
        Family::PD => ConceptScores::two(agg_pd(p1, p2)?),
    })
}

/// Per-concept and global scores of one argument pair under one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub arg1_id: String,
    pub arg2_id: String,
    pub family: Family,
    pub per_concept: BTreeMap<Channel, Vec<f64>>,
    pub global: BTreeMap<Channel, f64>,
}

impl PairScores {
    pub fn global(&self, channel: Channel) -> Result<f64> {
        self.family.check(channel)?;
        Ok(self.global[&channel])
    }

    pub fn per_concept(&self, channel: Channel) -> Result<&[f64]> {
        self.family.check(channel)?;
        Ok(&self.per_concept[&channel])
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn pair_scores(v1: &Psv, v2: &Psv, family: Family) -> Result<PairScores> {
    if v1.signature_ref != v2.signature_ref || v1.len() != v2.len() {
        return Err(Error::SignatureMismatch {
            left: v1.signature_ref.clone(),
            right: v2.signature_ref.clone(),
        });
    }
    if v1.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "signature `{}` has no concepts",
            v1.signature_ref
        )));
    }
    let mut per_concept: BTreeMap<Channel, Vec<f64>> = family
        .channels()
        .iter()
        .map(|&c| (c, Vec::with_capacity(v1.len())))
        .collect();
    for i in 0..v1.len() {
        let cs = concept_scores(family, v1, v2, i).map_err(|e| {
            e.context(format!(
                "pair ({}, {}), concept {i}",
                v1.argument_id, v2.argument_id
            ))
        })?;
        for (channel, values) in per_concept.iter_mut() {
            values.push(cs.get(*channel).expect("family defines channel"));
        }
    }
    let global = per_concept.iter().map(|(&c, v)| (c, mean(v))).collect();
    Ok(PairScores {
        arg1_id: v1.argument_id.clone(),
        arg2_id: v2.argument_id.clone(),
        family,
        per_concept,
        global,
    })
}

/// Symmetric matrix of global scores, indexed like `ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub method: AggregationMethod,
    pub ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    /// Off-diagonal entries `(i, j, value)` with `i < j`.
    pub fn upper_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.ids.len();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j, self.values[i][j])))
    }
}

/// Global scores for every unordered pair (self-pairs on the diagonal), each computed once.
pub fn pairwise_matrix(psvs: &[Psv], family: Family, channel: Channel) -> Result<ScoreMatrix> {
    let method = AggregationMethod::new(family, channel)?;
    let n = psvs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let scores: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| pair_scores(&psvs[i], &psvs[j], family).map(|s| s.global[&channel]))
        .collect::<Result<_>>()?;
    let mut values = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(scores) {
        values[i][j] = v;
        values[j][i] = v;
    }
    Ok(ScoreMatrix {
        method,
        ids: psvs.iter().map(|p| p.argument_id.clone()).collect(),
        values,
    })
}
