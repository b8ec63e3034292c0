//! Case-study tables: stakeholder matrices, top perspectives and plot data.

use std::collections::{BTreeMap, BTreeSet};

use psv_core::aggregate::Channel;
use serde::{Deserialize, Serialize};

use crate::artifacts::CsvRecord;

/// Global scores of one argument pair under the report family.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSummary {
    pub topic_id: String,
    pub arg1: String,
    pub arg2: String,
    pub same_stance: bool,
    pub global: BTreeMap<Channel, f64>,
    pub per_concept: BTreeMap<Channel, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub topic_id: String,
    pub g1: String,
    pub g2: String,
    pub channel: Channel,
    /// Empty when no pair connects the two groups.
    pub value: Option<f64>,
    pub n_pairs: usize,
}

impl CsvRecord for MatrixCell {
    const HEADER: &'static [&'static str] = &["topic_id", "g1", "g2", "channel", "value", "n_pairs"];
}

/// Mean global score per (group, group) cell, in long form.
///
/// A pair adds its score to every (g1, g2) with g1 a group of `arg1` and g2 a
/// group of `arg2`. The directed means are then averaged with their mirror cell.
pub fn stakeholder_matrix(
    topic_id: &str,
    pairs: &[PairSummary],
    groups: &BTreeMap<String, Vec<String>>,
    channel: Channel,
) -> Vec<MatrixCell> {
    let mut sums: BTreeMap<(&str, &str), (f64, usize)> = BTreeMap::new();
    for p in pairs {
        let Some(&score) = p.global.get(&channel) else {
            continue;
        };
        let (Some(ga), Some(gb)) = (groups.get(&p.arg1), groups.get(&p.arg2)) else {
            continue;
        };
        for g1 in ga {
            for g2 in gb {
                let cell = sums.entry((g1.as_str(), g2.as_str())).or_insert((0.0, 0));
                cell.0 += score;
                cell.1 += 1;
            }
        }
    }
    let universe: BTreeSet<&str> = groups.values().flatten().map(String::as_str).collect();
    let directed = |a: &str, b: &str| sums.get(&(a, b)).map(|&(s, n)| (s / n as f64, n));
    let mut out = Vec::new();
    for &g1 in &universe {
        for &g2 in &universe {
            let (value, n_pairs) = if g1 == g2 {
                directed(g1, g2).map_or((None, 0), |(m, n)| (Some(m), n))
            } else {
                match (directed(g1, g2), directed(g2, g1)) {
                    (Some((a, na)), Some((b, nb))) => (Some((a + b) / 2.0), na + nb),
                    (Some((a, n)), None) | (None, Some((a, n))) => (Some(a), n),
                    (None, None) => (None, 0),
                }
            };
            out.push(MatrixCell {
                topic_id: topic_id.to_string(),
                g1: g1.to_string(),
                g2: g2.to_string(),
                channel,
                value,
                n_pairs,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSubset {
    All,
    SameStance,
    CrossStance,
}

impl PairSubset {
    pub const ALL: [PairSubset; 3] = [PairSubset::All, PairSubset::SameStance, PairSubset::CrossStance];

    pub fn contains(self, same_stance: bool) -> bool {
        match self {
            PairSubset::All => true,
            PairSubset::SameStance => same_stance,
            PairSubset::CrossStance => !same_stance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopPerspective {
    pub topic_id: String,
    pub subset: PairSubset,
    pub channel: Channel,
    pub rank: usize,
    pub concept: String,
    pub value: f64,
    pub n_pairs: usize,
}

impl CsvRecord for TopPerspective {
    const HEADER: &'static [&'static str] = &[
        "topic_id", "subset", "channel", "rank", "concept", "value", "n_pairs",
    ];
}

/// The `n` concepts with the highest mean per-concept score over the selected pairs.
pub fn top_perspectives(
    pairs: &[&PairSummary],
    concepts: &[String],
    channel: Channel,
    subset: PairSubset,
    n: usize,
) -> Vec<(String, f64, usize)> {
    let chosen: Vec<&[f64]> = pairs
        .iter()
        .filter(|p| subset.contains(p.same_stance))
        .filter_map(|p| p.per_concept.get(&channel).map(Vec::as_slice))
        .collect();
    if chosen.is_empty() {
        return Vec::new();
    }
    let mut means: Vec<(&str, f64)> = concepts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let total: f64 = chosen.iter().map(|v| v[i]).sum();
            (c.as_str(), total / chosen.len() as f64)
        })
        .collect();
    means.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    means
        .into_iter()
        .take(n)
        .map(|(c, v)| (c.to_string(), v, chosen.len()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub topic_id: String,
    pub arg1: String,
    pub arg2: String,
    pub agreement: f64,
    pub disagreement: f64,
    pub orthogonality: Option<f64>,
    pub same_stance: bool,
}

impl CsvRecord for ScatterRow {
    const HEADER: &'static [&'static str] = &[
        "topic_id",
        "arg1",
        "arg2",
        "agreement",
        "disagreement",
        "orthogonality",
        "same_stance",
    ];
}

pub fn scatter(pairs: &[PairSummary]) -> Vec<ScatterRow> {
    pairs
        .iter()
        .map(|p| ScatterRow {
            topic_id: p.topic_id.clone(),
            arg1: p.arg1.clone(),
            arg2: p.arg2.clone(),
            agreement: p.global[&Channel::Agreement],
            disagreement: p.global[&Channel::Disagreement],
            orthogonality: p.global.get(&Channel::Orthogonality).copied(),
            same_stance: p.same_stance,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_start: f64,
    pub bin_end: f64,
    pub same_stance: usize,
    pub different_stance: usize,
}

impl CsvRecord for HistogramBin {
    const HEADER: &'static [&'static str] = &["bin_start", "bin_end", "same_stance", "different_stance"];
}

fn tidy(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Counts per half-open bin `[start, start + width)`, covering the observed range.
pub fn histogram(values: &[(f64, bool)], width: f64) -> Vec<HistogramBin> {
    // The small offset keeps values such as 0.06 out of the bin below after rounding.
    let index = |v: f64| (v / width + 1e-9).floor() as i64;
    let Some(lo) = values.iter().map(|v| index(v.0)).min() else {
        return Vec::new();
    };
    let hi = values.iter().map(|v| index(v.0)).max().expect("non-empty");
    let mut bins: Vec<HistogramBin> = (lo..=hi)
        .map(|i| HistogramBin {
            bin_start: tidy(i as f64 * width),
            bin_end: tidy((i + 1) as f64 * width),
            same_stance: 0,
            different_stance: 0,
        })
        .collect();
    for &(v, same) in values {
        let b = &mut bins[(index(v) - lo) as usize];
        if same {
            b.same_stance += 1;
        } else {
            b.different_stance += 1;
        }
    }
    bins
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: &str, b: &str, same: bool, agreement: f64) -> PairSummary {
        PairSummary {
            topic_id: "t".into(),
            arg1: a.into(),
            arg2: b.into(),
            same_stance: same,
            global: BTreeMap::from([
                (Channel::Agreement, agreement),
                (Channel::Disagreement, 1.0 - agreement),
            ]),
            per_concept: BTreeMap::from([(Channel::Agreement, vec![agreement, 1.0 - agreement])]),
        }
    }

    fn groups(items: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
        items
            .iter()
            .map(|(a, gs)| (a.to_string(), gs.iter().map(|g| g.to_string()).collect()))
            .collect()
    }

    fn cell<'a>(m: &'a [MatrixCell], g1: &str, g2: &str) -> &'a MatrixCell {
        m.iter().find(|c| c.g1 == g1 && c.g2 == g2).unwrap()
    }

    #[test]
    fn single_group_matrix() {
        let m = stakeholder_matrix(
            "t",
            &[pair("a", "b", true, 0.4)],
            &groups(&[("a", &["H"]), ("b", &["H"])]),
            Channel::Agreement,
        );
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].value, m[0].n_pairs), (Some(0.4), 1));
    }

    #[test]
    fn two_group_matrix_by_hand() {
        // a, b hunters; c, d activists.
        let g = groups(&[("a", &["H"]), ("b", &["H"]), ("c", &["A"]), ("d", &["A"])]);
        let pairs = vec![
            pair("a", "b", true, 0.8),
            pair("a", "c", false, 0.2),
            pair("a", "d", false, 0.4),
            pair("b", "c", false, 0.0),
            pair("c", "b", false, 0.6),
            pair("c", "d", true, 0.9),
        ];
        let m = stakeholder_matrix("t", &pairs, &g, Channel::Agreement);
        assert_eq!(m.len(), 4);
        assert_eq!(cell(&m, "H", "H").value, Some(0.8));
        assert_eq!(cell(&m, "A", "A").value, Some(0.9));
        // H→A: (0.2 + 0.4 + 0.0) / 3 = 0.2; A→H: 0.6; symmetrized 0.4.
        let ha = cell(&m, "H", "A");
        assert!((ha.value.unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(ha.n_pairs, 4);
        assert_eq!(cell(&m, "A", "H").value, ha.value);
    }

    #[test]
    fn empty_cells_are_missing() {
        let g = groups(&[("a", &["H"]), ("b", &["H"]), ("c", &["A"])]);
        let m = stakeholder_matrix("t", &[pair("a", "b", true, 0.5)], &g, Channel::Agreement);
        assert_eq!(cell(&m, "A", "A").value, None);
        assert_eq!(cell(&m, "A", "H").n_pairs, 0);
    }

    #[test]
    fn multi_group_arguments_count_per_group() {
        let g = groups(&[("a", &["H", "E"]), ("b", &["H"])]);
        let m = stakeholder_matrix("t", &[pair("a", "b", true, 0.5)], &g, Channel::Agreement);
        assert_eq!(cell(&m, "H", "H").n_pairs, 1);
        assert_eq!(cell(&m, "E", "H").n_pairs, 1);
    }

    #[test]
    fn top_perspectives_rank_and_subset() {
        let ps = [pair("a", "b", true, 0.9), pair("a", "c", false, 0.1)];
        let refs: Vec<&PairSummary> = ps.iter().collect();
        let concepts = vec!["x".to_string(), "y".to_string()];
        let all = top_perspectives(&refs, &concepts, Channel::Agreement, PairSubset::All, 5);
        assert_eq!(all.len(), 2);
        assert_eq!((all[0].0.as_str(), all[0].2), ("x", 2));
        assert!((all[0].1 - 0.5).abs() < 1e-12);
        let same = top_perspectives(&refs, &concepts, Channel::Agreement, PairSubset::SameStance, 1);
        assert_eq!(same, [("x".to_string(), 0.9, 1)]);
        let cross = top_perspectives(&refs, &concepts, Channel::Agreement, PairSubset::CrossStance, 1);
        assert_eq!(cross[0].0, "y");
        assert!(top_perspectives(&refs, &concepts, Channel::Orthogonality, PairSubset::All, 3).is_empty());
    }

    #[test]
    fn subsets_partition_pairs() {
        for same in [true, false] {
            let hits = PairSubset::ALL[1..].iter().filter(|s| s.contains(same)).count();
            assert_eq!(hits, 1);
            assert!(PairSubset::All.contains(same));
        }
    }

    #[test]
    fn histogram_conserves_counts() {
        let vals = vec![
            (0.0, true),
            (0.06, false),
            (0.059, true),
            (1.0, false),
            (0.5, true),
        ];
        let h = histogram(&vals, 0.02);
        let total: usize = h.iter().map(|b| b.same_stance + b.different_stance).sum();
        assert_eq!(total, vals.len());
        assert_eq!(h.len(), 51);
        let b = h.iter().find(|b| b.bin_start == 0.06).unwrap();
        assert_eq!((b.same_stance, b.different_stance), (0, 1));
        assert_eq!(h[2].bin_start, 0.04);
        assert!(histogram(&[], 0.02).is_empty());
    }

    #[test]
    fn scatter_rows_follow_pairs() {
        let ps: Vec<PairSummary> = (0..25).map(|i| pair("a", &format!("b{i}"), false, 0.5)).collect();
        let rows = scatter(&ps);
        assert_eq!(rows.len(), 25);
        assert_eq!(rows[0].orthogonality, None);
    }
}
