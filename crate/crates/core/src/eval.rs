//! Metrics and evaluation protocols.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::aggregate::{Channel, Family};
use crate::corpus::{AnnotationSet, ConceptLabel, Corpus, GlobalLabel, PairKey};
use crate::error::{Error, Result};
use crate::llm::PairwiseLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherIsPositive,
    LowerIsPositive,
}

/// Parallel scores and binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredLabels {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl ScoredLabels {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
            return Err(Error::InvalidArgument(format!("score {bad} is not comparable")));
        }
        Ok(ScoredLabels { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

/// Mann–Whitney estimate of ROC-AUC; tied scores count one half.
pub fn roc_auc(data: &ScoredLabels, orientation: Orientation) -> Result<f64> {
    let n_pos = data.n_positive();
    let n_neg = data.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let sign = match orientation {
        Orientation::HigherIsPositive => 1.0,
        Orientation::LowerIsPositive => -1.0,
    };
    let mut order: Vec<(f64, bool)> = data
        .scores
        .iter()
        .zip(&data.labels)
        .map(|(&s, &l)| (sign * s, l))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Midranks are multiples of 1/2, so the sums below are exact.
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && order[j + 1].0 == order[i].0 {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_block = order[i..=j].iter().filter(|e| e.1).count();
        pos_rank_sum += midrank * pos_in_block as f64;
        i = j + 1;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Per-class and macro-averaged F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report<L> {
    pub macro_f1: f64,
    pub per_class: Vec<(L, f64)>,
}

fn check_parallel<L: Ord + std::fmt::Debug>(pred: &[L], gold: &[L], classes: &[L]) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions but {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("no items to evaluate".into()));
    }
    if let Some(bad) = pred.iter().chain(gold).find(|l| !classes.contains(l)) {
        return Err(Error::InvalidArgument(format!(
            "label {bad:?} outside the class set"
        )));
    }
    Ok(())
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Unweighted mean of per-class F1. A class absent from both sides scores 0.
pub fn macro_f1<L: Ord + Clone + std::fmt::Debug>(
    pred: &[L],
    gold: &[L],
    classes: &[L],
) -> Result<F1Report<L>> {
    check_parallel(pred, gold, classes)?;
    let per_class: Vec<(L, f64)> = classes
        .iter()
        .map(|c| {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (p, g) in pred.iter().zip(gold) {
                match (p == c, g == c) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
            (c.clone(), f1(tp, fp, fn_))
        })
        .collect();
    let macro_f1 = per_class.iter().map(|(_, f)| f).sum::<f64>() / classes.len() as f64;
    Ok(F1Report { macro_f1, per_class })
}

/// Counts indexed `[gold][predicted]` in `classes` order.
pub fn confusion_matrix<L: Ord + std::fmt::Debug>(
    pred: &[L],
    gold: &[L],
    classes: &[L],
) -> Result<Vec<Vec<usize>>> {
    check_parallel(pred, gold, classes)?;
    let idx = |l: &L| classes.iter().position(|c| c == l).expect("checked");
    let mut m = vec![vec![0; classes.len()]; classes.len()];
    for (p, g) in pred.iter().zip(gold) {
        m[idx(g)][idx(p)] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Set-based scores; precision is 0 for an empty prediction, recall 0 for empty gold.
pub fn precision_recall_f1<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> Prf {
    let tp = pred.intersection(gold).count() as f64;
    let precision = if pred.is_empty() {
        0.0
    } else {
        tp / pred.len() as f64
    };
    let recall = if gold.is_empty() {
        0.0
    } else {
        tp / gold.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf {
        precision,
        recall,
        f1,
    }
}

/// Annotator × item label matrix; `None` marks a missing label.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityData<L> {
    rows: Vec<Vec<Option<L>>>,
    n_items: usize,
}

impl<L> ReliabilityData<L> {
    /// Rows shorter than the longest one are padded with missing cells.
    pub fn new(rows: Vec<Vec<Option<L>>>) -> Self {
        let n_items = rows.iter().map(Vec::len).max().unwrap_or(0);
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.resize_with(n_items, || None);
                r
            })
            .collect();
        ReliabilityData { rows, n_items }
    }

    pub fn n_annotators(&self) -> usize {
        self.rows.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn rows(&self) -> &[Vec<Option<L>>] {
        &self.rows
    }
}

/// Krippendorff's alpha with the nominal metric, from the coincidence matrix.
///
/// Items with fewer than two labels are ignored. When every pairable value is
/// the same category the expected disagreement is zero; that case returns 1.
pub fn krippendorff_alpha_nominal<L: Ord>(data: &ReliabilityData<L>) -> Result<f64> {
    let mut coincidence: BTreeMap<(&L, &L), f64> = BTreeMap::new();
    for item in 0..data.n_items() {
        let mut counts: BTreeMap<&L, usize> = BTreeMap::new();
        for row in data.rows() {
            if let Some(l) = &row[item] {
                *counts.entry(l).or_default() += 1;
            }
        }
        let m: usize = counts.values().sum();
        if m < 2 {
            continue;
        }
        let w = 1.0 / (m - 1) as f64;
        for (&c, &nc) in &counts {
            for (&k, &nk) in &counts {
                let pairs = if c == k { nc * (nc - 1) } else { nc * nk };
                if pairs > 0 {
                    *coincidence.entry((c, k)).or_default() += pairs as f64 * w;
                }
            }
        }
    }
    if coincidence.is_empty() {
        return Err(Error::NoPairableItems);
    }
    let mut marginals: BTreeMap<&L, f64> = BTreeMap::new();
    let mut observed = 0.0;
    for (&(c, k), &o) in &coincidence {
        *marginals.entry(c).or_default() += o;
        if c != k {
            observed += o;
        }
    }
    let n: f64 = marginals.values().sum();
    let total_sq: f64 = marginals.values().map(|x| x * x).sum();
    let expected_pairs = n * n - total_sq;
    if expected_pairs == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - (n - 1.0) * observed / expected_pairs)
}

/// AUC with the number of items and positives behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucResult {
    pub auc: f64,
    pub n: usize,
    pub n_positive: usize,
}

fn auc_result(scores: Vec<f64>, labels: Vec<bool>, orientation: Orientation) -> Result<AucResult> {
    let data = ScoredLabels::new(scores, labels)?;
    Ok(AucResult {
        auc: roc_auc(&data, orientation)?,
        n: data.len(),
        n_positive: data.n_positive(),
    })
}

/// Agreement groups full and partial agreement; other channels match one label.
pub fn global_target(label: GlobalLabel, channel: Channel) -> bool {
    match channel {
        Channel::Agreement => matches!(label, GlobalLabel::Agreement | GlobalLabel::PartialAgreement),
        Channel::Orthogonality => label == GlobalLabel::Orthogonal,
        Channel::Disagreement => label == GlobalLabel::Disagreement,
    }
}

pub fn concept_target(label: ConceptLabel, channel: Channel) -> bool {
    matches!(
        (label, channel),
        (ConceptLabel::Agree, Channel::Agreement)
            | (ConceptLabel::Neutral, Channel::Orthogonality)
            | (ConceptLabel::Disagree, Channel::Disagreement)
    )
}

/// Indicator score of a direct pairwise judgment for one channel.
pub fn pairwise_label_score(label: PairwiseLabel, channel: Channel) -> f64 {
    let hit = matches!(
        (label, channel),
        (PairwiseLabel::Agreement, Channel::Agreement)
            | (PairwiseLabel::Neutral, Channel::Orthogonality)
            | (PairwiseLabel::Disagreement, Channel::Disagreement)
    );
    if hit {
        1.0
    } else {
        0.0
    }
}

/// AUC of global pair scores against pair-level labels.
pub fn eval_global_acceptability(
    scores: &BTreeMap<PairKey, f64>,
    labels: &BTreeMap<PairKey, GlobalLabel>,
    family: Family,
    channel: Channel,
) -> Result<AucResult> {
    family.check(channel)?;
    let missing: Vec<String> = labels
        .keys()
        .filter(|k| !scores.contains_key(k))
        .map(PairKey::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingScores(missing));
    }
    let (s, l) = labels
        .iter()
        .map(|(k, &lab)| (scores[k], global_target(lab, channel)))
        .unzip();
    auc_result(s, l, Orientation::HigherIsPositive)
}

/// AUC of per-concept pair scores against per-concept labels.
///
/// `family` is `None` for scores that do not come from an aggregation family.
pub fn eval_perspectivized(
    scores: &BTreeMap<(PairKey, String), f64>,
    labels: &BTreeMap<(PairKey, String), ConceptLabel>,
    family: Option<Family>,
    channel: Channel,
) -> Result<AucResult> {
    if let Some(f) = family {
        f.check(channel)?;
    }
    let missing: Vec<String> = labels
        .keys()
        .filter(|k| !scores.contains_key(k))
        .map(|(p, c)| format!("{p} on `{c}`"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingScores(missing));
    }
    let (s, l) = labels
        .iter()
        .map(|(k, &lab)| (scores[k], concept_target(lab, channel)))
        .unzip();
    auc_result(s, l, Orientation::HigherIsPositive)
}

/// Agreement ranks same-stance pairs high; the other channels rank them low.
pub fn same_side_orientation(channel: Channel) -> Orientation {
    match channel {
        Channel::Agreement => Orientation::HigherIsPositive,
        Channel::Orthogonality | Channel::Disagreement => Orientation::LowerIsPositive,
    }
}

/// AUC for recognizing pairs that share an overall stance.
pub fn eval_same_side(
    scores: &BTreeMap<PairKey, f64>,
    corpus: &Corpus,
    family: Family,
    channel: Channel,
) -> Result<AucResult> {
    family.check(channel)?;
    let stance = |id: &str| {
        corpus
            .argument(id)
            .map(|a| a.overall_stance)
            .ok_or_else(|| Error::UnknownArguments(vec![id.to_string()]))
    };
    let mut s = Vec::with_capacity(scores.len());
    let mut l = Vec::with_capacity(scores.len());
    for (k, &v) in scores {
        s.push(v);
        l.push(stance(k.first())? == stance(k.second())?);
    }
    auc_result(s, l, same_side_orientation(channel))
}

/// Relevance and granularity of a signature against per-concept judgments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureQuality {
    pub relevance: Prf,
    pub granularity: Prf,
    pub n_predicted: usize,
    /// Predicted concepts without a judgment; left out of both scores.
    pub unannotated: Vec<String>,
}

pub fn eval_signature(
    topic_id: &str,
    predicted: &BTreeSet<String>,
    annotations: &AnnotationSet,
) -> SignatureQuality {
    let judged: BTreeMap<&String, _> = annotations
        .signature_labels
        .iter()
        .filter(|((t, _), _)| t == topic_id)
        .map(|((_, c), l)| (c, *l))
        .collect();
    let gold = |f: &dyn Fn(&crate::corpus::SignatureLabel) -> bool| -> BTreeSet<&String> {
        judged.iter().filter(|(_, l)| f(l)).map(|(c, _)| *c).collect()
    };
    let pred: BTreeSet<&String> = predicted.iter().filter(|c| judged.contains_key(c)).collect();
    SignatureQuality {
        relevance: precision_recall_f1(&pred, &gold(&|l| l.relevant)),
        granularity: precision_recall_f1(&pred, &gold(&|l| l.appropriate_granularity)),
        n_predicted: predicted.len(),
        unannotated: predicted
            .iter()
            .filter(|c| !judged.contains_key(c))
            .cloned()
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stance::Stance;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn sl(scores: &[f64], labels: &[u8]) -> ScoredLabels {
        ScoredLabels::new(scores.to_vec(), labels.iter().map(|&l| l == 1).collect()).unwrap()
    }

    #[test]
    fn auc_cases() {
        let hi = Orientation::HigherIsPositive;
        assert_eq!(roc_auc(&sl(&[0.9, 0.1], &[1, 0]), hi).unwrap(), 1.0);
        assert_eq!(
            roc_auc(&sl(&[0.9, 0.1, 0.8, 0.2], &[1, 1, 0, 0]), hi).unwrap(),
            0.5
        );
        assert_eq!(roc_auc(&sl(&[0.3; 6], &[1, 0, 1, 0, 0, 0]), hi).unwrap(), 0.5);
        assert_eq!(
            roc_auc(&sl(&[0.9, 0.1], &[1, 0]), Orientation::LowerIsPositive).unwrap(),
            0.0
        );
        assert!(matches!(
            roc_auc(&sl(&[0.1, 0.2], &[1, 1]), hi),
            Err(Error::SingleClass)
        ));
        assert!(ScoredLabels::new(vec![0.1], vec![]).is_err());
        assert!(ScoredLabels::new(vec![f64::NAN], vec![true]).is_err());
    }

    #[test]
    fn macro_f1_cases() {
        use Stance::*;
        let classes = [Against, Neutral, Favor];
        let gold = [Against, Neutral, Favor];
        assert_eq!(macro_f1(&gold, &gold, &classes).unwrap().macro_f1, 1.0);
        let r = macro_f1(&[Neutral; 3], &gold, &classes).unwrap();
        assert_eq!(
            r.per_class.iter().map(|x| x.1).collect::<Vec<_>>(),
            [0.0, 0.5, 0.0]
        );
        assert!((r.macro_f1 - 1.0 / 6.0).abs() < 1e-15);
        assert!(macro_f1::<Stance>(&[], &[], &classes).is_err());
        assert!(macro_f1(&[Favor], &[Favor, Favor], &classes).is_err());
        let r = macro_f1(&[Favor], &[Favor], &classes).unwrap();
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn confusion_cases() {
        let m = confusion_matrix(&[0, 1, 1], &[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(m, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 1, 0]]);
        let m = confusion_matrix(&[0], &[-1], &[-1, 0, 1]).unwrap();
        assert_eq!(m[0][1], 1);
        assert!(confusion_matrix(&[5], &[0], &[0, 1]).is_err());
    }

    #[test]
    fn prf_cases() {
        let s = |v: &[u32]| v.iter().copied().collect::<BTreeSet<_>>();
        let r = precision_recall_f1(&s(&[1, 2]), &s(&[1, 2]));
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        let pred = s(&(0..10).collect::<Vec<_>>());
        let gold = s(&(1..11).collect::<Vec<_>>());
        let r = precision_recall_f1(&pred, &gold);
        assert!((r.precision - 0.9).abs() < 1e-15 && (r.recall - 0.9).abs() < 1e-15);
        assert!((r.f1 - 0.9).abs() < 1e-15);
        let r = precision_recall_f1(&s(&[]), &s(&[1]));
        assert_eq!((r.precision, r.f1), (0.0, 0.0));
        assert_eq!(precision_recall_f1(&s(&[1]), &s(&[])).recall, 0.0);
    }

    #[test]
    fn alpha_cases() {
        let d = ReliabilityData::new(vec![
            vec![Some("a"), Some("b"), Some("c")],
            vec![Some("a"), Some("b"), Some("c")],
        ]);
        assert_eq!(krippendorff_alpha_nominal(&d).unwrap(), 1.0);
        let d = ReliabilityData::new(vec![vec![Some("a"), None], vec![None, Some("b")]]);
        assert!(matches!(
            krippendorff_alpha_nominal(&d),
            Err(Error::NoPairableItems)
        ));
        let d = ReliabilityData::new(vec![
            vec![Some(1), Some(2), None, Some(1)],
            vec![Some(1), Some(2), Some(2), Some(2)],
            vec![None, Some(2), Some(2)],
        ]);
        assert_eq!(d.n_items(), 4);
        assert!(krippendorff_alpha_nominal(&d).unwrap() < 1.0);
    }

    #[test]
    fn alpha_reference_value() {
        // Two coders, ten items, nominal; computed by hand from the coincidence matrix.
        let a = [1, 1, 2, 2, 1, 1, 2, 2, 1, 2];
        let b = [1, 1, 2, 2, 1, 2, 2, 1, 1, 2];
        let d = ReliabilityData::new(vec![
            a.iter().map(|&x| Some(x)).collect(),
            b.iter().map(|&x| Some(x)).collect(),
        ]);
        // o11 = 8, o22 = 8, o12 = o21 = 2; n1 = n2 = 10; n = 20.
        let expected = 1.0 - 19.0 * 4.0 / (400.0 - 200.0);
        assert!((krippendorff_alpha_nominal(&d).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn alpha_is_label_invariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<Option<u8>>> = (0..3)
            .map(|_| {
                (0..50)
                    .map(|_| {
                        if rng.gen_bool(0.2) {
                            None
                        } else {
                            Some(rng.gen_range(0..3))
                        }
                    })
                    .collect()
            })
            .collect();
        let renamed: Vec<Vec<Option<char>>> = rows
            .iter()
            .map(|r| r.iter().map(|x| x.map(|v| ['z', 'x', 'y'][v as usize])).collect())
            .collect();
        let a = krippendorff_alpha_nominal(&ReliabilityData::new(rows)).unwrap();
        let b = krippendorff_alpha_nominal(&ReliabilityData::new(renamed)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn global_targets() {
        use GlobalLabel::*;
        assert!(global_target(PartialAgreement, Channel::Agreement));
        assert!(!global_target(Orthogonal, Channel::Agreement));
        assert!(global_target(Orthogonal, Channel::Orthogonality));
        let scores = BTreeMap::from([(PairKey::new("a", "b"), 0.9), (PairKey::new("a", "c"), 0.1)]);
        let labels = BTreeMap::from([
            (PairKey::new("b", "a"), PartialAgreement),
            (PairKey::new("a", "c"), Disagreement),
        ]);
        let r = eval_global_acceptability(&scores, &labels, Family::S0, Channel::Agreement).unwrap();
        assert_eq!((r.auc, r.n, r.n_positive), (1.0, 2, 1));
        assert!(matches!(
            eval_global_acceptability(&scores, &labels, Family::SD, Channel::Orthogonality),
            Err(Error::UndefinedChannel { .. })
        ));
        let partial = BTreeMap::from([(PairKey::new("a", "b"), 0.9)]);
        assert!(matches!(
            eval_global_acceptability(&partial, &labels, Family::S, Channel::Agreement),
            Err(Error::MissingScores(v)) if v == ["(a, c)"]
        ));
    }

    #[test]
    fn random_scores_give_chance_auc() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut total = 0.0;
        let trials = 200;
        for _ in 0..trials {
            let labels: Vec<bool> = (0..125).map(|i| i % 3 == 0).collect();
            let scores: Vec<f64> = (0..125).map(|_| rng.gen()).collect();
            total += roc_auc(
                &ScoredLabels::new(scores, labels).unwrap(),
                Orientation::HigherIsPositive,
            )
            .unwrap();
        }
        assert!((total / trials as f64 - 0.5).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn macro_f1_is_permutation_invariant(
            items in proptest::collection::vec((0u8..3, 0u8..3), 1..60),
            seed in any::<u64>(),
        ) {
            let mut shuffled = items.clone();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut rng);
            let f = |v: &[(u8, u8)]| {
                let p: Vec<u8> = v.iter().map(|x| x.0).collect();
                let g: Vec<u8> = v.iter().map(|x| x.1).collect();
                macro_f1(&p, &g, &[0, 1, 2]).unwrap().macro_f1
            };
            prop_assert!((f(&items) - f(&shuffled)).abs() < 1e-12);
        }

        #[test]
        fn confusion_conserves_items(items in proptest::collection::vec((0u8..3, 0u8..3), 1..60)) {
            let p: Vec<u8> = items.iter().map(|x| x.0).collect();
            let g: Vec<u8> = items.iter().map(|x| x.1).collect();
            let m = confusion_matrix(&p, &g, &[0, 1, 2]).unwrap();
            prop_assert_eq!(m.iter().flatten().sum::<usize>(), items.len());
            for c in 0..3u8 {
                prop_assert_eq!(m[c as usize].iter().sum::<usize>(), g.iter().filter(|&&x| x == c).count());
            }
        }
    }
}
