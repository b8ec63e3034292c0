//! Stage runners. Each stage reads its inputs from files, checks that upstream
//! artifacts still match the configuration and their own inputs, and writes one
//! or more artifacts with a provenance header.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use anyhow::{anyhow, bail, Context, Result};
use psv_core::aggregate::{pair_scores, Channel, Family};
use psv_core::corpus::{load_annotations, load_corpus, AnnotationSet, Corpus, PairKey};
use psv_core::eval::{
    confusion_matrix, eval_global_acceptability, eval_perspectivized, eval_same_side, eval_signature,
    krippendorff_alpha_nominal, macro_f1, pairwise_label_score, same_side_orientation, AucResult,
    Orientation,
};
use psv_core::graph::{
    align_argument, load_conceptnet_assertions, load_embeddings, load_graph, ArgumentConcepts, Embedder,
    FallbackEmbedder, HttpEmbedder,
};
use psv_core::llm::{argument_stakeholders, pairwise_acceptability, topic_stakeholders, PairwiseLabel};
use psv_core::llm::{LlmClient, Transport};
use psv_core::signature::{
    filter_hypernyms, filter_relevance, induce_signature, load_hypernyms, load_lemmas, AlignedSets,
    LemmaTable, Signature, SignatureFilter,
};
use psv_core::stance::{
    build_psv, BaselinePredictor, LlmPredictor, PromptMode, Psv, Stance, StancePredictor,
};

use crate::artifacts::{self as art, EvalRow, Provenance, PsvRow, ScoreRow, StakeholderRow};
use crate::config::{GraphFormat, PipelineConfig, Predictor, Stage, StakeholderSource};
use crate::reports::{self, PairSubset, PairSummary, TopPerspective};

type ConceptLabels = BTreeMap<(PairKey, String), psv_core::corpus::ConceptLabel>;
type PairwiseReplies = BTreeMap<(PairKey, Vec<String>), Vec<PairwiseLabel>>;
type LocalScores = BTreeMap<(Family, Channel), BTreeMap<(PairKey, String), f64>>;
type ConceptSelector = Box<dyn Fn(&Signature) -> BTreeSet<String>>;
/// Signature concepts per topic, in signature order.
pub type TopicConcepts = BTreeMap<String, Vec<String>>;

/// External inputs, by the name used in provenance headers.
const EXTERNAL: [&str; 6] = [
    "corpus",
    "graph",
    "embeddings",
    "lemmas",
    "hypernyms",
    "annotations",
];

pub struct Pipeline {
    config: PipelineConfig,
    transport: Arc<dyn Transport>,
    client: OnceLock<LlmClient>,
}

/// File hashes collected while a stage reads its inputs.
#[derive(Default)]
struct Inputs(BTreeMap<String, String>);

impl Inputs {
    fn add(&mut self, name: &str, path: &Path) -> Result<()> {
        self.0.insert(name.to_string(), art::hash_file(path)?);
        Ok(())
    }
}

impl Pipeline {
    /// Fails when a configured input file is missing.
    pub fn new(config: PipelineConfig, transport: Arc<dyn Transport>) -> Result<Self> {
        let p = Pipeline {
            config,
            transport,
            client: OnceLock::new(),
        };
        for name in EXTERNAL {
            if let Some(path) = p.external(name) {
                if !path.is_file() {
                    bail!("{name} file {} does not exist", path.display());
                }
            }
        }
        Ok(p)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// The model client, created on first use.
    pub fn client(&self) -> Result<&LlmClient> {
        if let Some(c) = self.client.get() {
            return Ok(c);
        }
        let c = LlmClient::new(self.config.llm_config(), self.transport.clone())?;
        Ok(self.client.get_or_init(|| c))
    }

    /// Requests sent to the model endpoint so far.
    pub fn network_calls(&self) -> usize {
        self.client.get().map_or(0, LlmClient::network_calls)
    }

    pub fn purge_cache(&self) -> Result<usize> {
        Ok(self.client()?.cache().purge()?)
    }

    pub fn run_all(&self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for stage in Stage::ALL {
            written.extend(self.run_stage(stage)?);
        }
        Ok(written)
    }

    pub fn run_stage(&self, stage: Stage) -> Result<Vec<PathBuf>> {
        log::info!("running stage {stage}");
        let out = match stage {
            Stage::Align => self.align(),
            Stage::Signature => self.signature(),
            Stage::Psv => self.psv(),
            Stage::Scores => self.scores(),
            Stage::Eval => self.eval(),
            Stage::Stakeholders => self.stakeholders(),
            Stage::Report => self.report(),
        };
        out.with_context(|| format!("stage {stage}"))
    }

    fn external(&self, name: &str) -> Option<PathBuf> {
        let p = &self.config.paths;
        match name {
            "corpus" => Some(p.corpus.clone()),
            "graph" => Some(p.graph.clone()),
            "embeddings" => Some(p.embeddings.clone()),
            "lemmas" => p.lemmas.clone(),
            "hypernyms" => p.hypernyms.clone(),
            "annotations" => p.annotations.clone(),
            _ => None,
        }
    }

    fn input_path(&self, name: &str) -> Option<PathBuf> {
        if art::producer(name).is_some() {
            Some(self.artifact(name))
        } else {
            self.external(name)
        }
    }

    fn artifact(&self, name: &str) -> PathBuf {
        art::out_path(&self.config.paths.out_dir, name)
    }

    fn provenance(&self, stage: Stage, inputs: Inputs) -> Provenance {
        Provenance {
            stage,
            config_digest: self.config.stage_digest(stage),
            inputs: inputs.0,
        }
    }

    /// Path of an upstream artifact after checking that it exists and is current.
    fn require(&self, artifact: &str) -> Result<PathBuf> {
        let stage = art::producer(artifact).expect("known artifact");
        let path = self.artifact(artifact);
        if !path.is_file() {
            bail!("{} is missing; run `psv {stage}` first", path.display());
        }
        self.check_upstream(artifact, &mut BTreeSet::new())?;
        Ok(path)
    }

    fn check_upstream(&self, artifact: &str, seen: &mut BTreeSet<String>) -> Result<()> {
        if !seen.insert(artifact.to_string()) {
            return Ok(());
        }
        let stage = art::producer(artifact).expect("known artifact");
        let path = self.artifact(artifact);
        let prov = art::read_provenance(&path)?;
        if prov.stage != stage || prov.config_digest != self.config.stage_digest(stage) {
            bail!(
                "{} was produced under different settings; re-run `psv {stage}`",
                path.display()
            );
        }
        for (name, hash) in &prov.inputs {
            let input = self
                .input_path(name)
                .ok_or_else(|| anyhow!("{} records unknown input `{name}`", path.display()))?;
            if !input.is_file() {
                bail!(
                    "{} depends on {}, which no longer exists; re-run `psv {stage}`",
                    path.display(),
                    input.display()
                );
            }
            if &art::hash_file(&input)? != hash {
                bail!(
                    "{} is stale: input `{name}` changed since it was written; re-run `psv {stage}`",
                    path.display()
                );
            }
            if art::producer(name).is_some() {
                self.check_upstream(name, seen)?;
            }
        }
        Ok(())
    }

    fn load_corpus(&self, inputs: &mut Inputs) -> Result<Corpus> {
        let path = &self.config.paths.corpus;
        inputs.add("corpus", path)?;
        Ok(load_corpus(path)?)
    }

    fn load_lemmas(&self, inputs: &mut Inputs) -> Result<LemmaTable> {
        match &self.config.paths.lemmas {
            Some(path) => {
                inputs.add("lemmas", path)?;
                Ok(load_lemmas(path)?)
            }
            None => Ok(LemmaTable::default()),
        }
    }

    fn load_annotations(&self, corpus: &Corpus, inputs: &mut Inputs) -> Result<Option<AnnotationSet>> {
        match &self.config.paths.annotations {
            Some(path) => {
                inputs.add("annotations", path)?;
                Ok(Some(load_annotations(path, corpus)?))
            }
            None => Ok(None),
        }
    }

    fn read_alignment(&self, inputs: &mut Inputs) -> Result<AlignedSets> {
        let path = self.require(art::ALIGNMENT)?;
        inputs.add(art::ALIGNMENT, &path)?;
        let records: Vec<ArgumentConcepts> = art::read_jsonl(&path)?;
        Ok(records.into_iter().map(|r| (r.argument_id, r.concepts)).collect())
    }

    fn read_signatures(&self, inputs: &mut Inputs) -> Result<BTreeMap<String, Signature>> {
        let path = self.require(art::SIGNATURE)?;
        inputs.add(art::SIGNATURE, &path)?;
        art::read_signatures(&path)
    }

    /// PSVs keyed by argument id, checked against the signatures.
    fn read_psvs(
        &self,
        signatures: &BTreeMap<String, Signature>,
        inputs: &mut Inputs,
    ) -> Result<BTreeMap<String, Psv>> {
        let path = self.require(art::PSV)?;
        inputs.add(art::PSV, &path)?;
        let rows: Vec<PsvRow> = art::read_csv(&path)?;
        let mut grouped: BTreeMap<String, (String, Vec<PsvRow>)> = BTreeMap::new();
        for r in rows {
            grouped
                .entry(r.argument_id.clone())
                .or_insert_with(|| (r.topic_id.clone(), Vec::new()))
                .1
                .push(r);
        }
        grouped
            .into_iter()
            .map(|(id, (topic, rows))| {
                let sig = signatures
                    .get(&topic)
                    .ok_or_else(|| anyhow!("{}: no signature for topic `{topic}`", path.display()))?;
                let names: Vec<&str> = rows.iter().map(|r| r.concept.as_str()).collect();
                if names != sig.concept_names() {
                    bail!(
                        "{}: concepts of `{id}` do not follow the `{topic}` signature; re-run `psv psv`",
                        path.display()
                    );
                }
                let values = rows
                    .iter()
                    .map(|r| Stance::try_from(r.s).map_err(anyhow::Error::msg))
                    .collect::<Result<Vec<_>>>()?;
                let psv = Psv {
                    argument_id: id.clone(),
                    signature_ref: sig.reference(),
                    values,
                    rows: rows
                        .iter()
                        .map(|r| [r.p_against, r.p_neutral, r.p_favor])
                        .collect(),
                };
                Ok((id, psv))
            })
            .collect()
    }

    fn read_scores(&self, inputs: &mut Inputs) -> Result<Vec<ScoreRow>> {
        let path = self.require(art::SCORES)?;
        inputs.add(art::SCORES, &path)?;
        art::read_csv(&path)
    }

    fn align(&self) -> Result<Vec<PathBuf>> {
        let cfg = &self.config;
        let mut inputs = Inputs::default();
        let corpus = self.load_corpus(&mut inputs)?;
        inputs.add("graph", &cfg.paths.graph)?;
        inputs.add("embeddings", &cfg.paths.embeddings)?;
        let graph = match cfg.paths.graph_format {
            GraphFormat::Tsv => load_graph(&cfg.paths.graph)?,
            GraphFormat::Conceptnet => load_conceptnet_assertions(&cfg.paths.graph)?,
        };
        let store = load_embeddings(&cfg.paths.embeddings)?;
        let remote = cfg.embedding_service.as_ref().map(|svc| {
            let key = svc.api_key_env.as_deref().and_then(|v| std::env::var(v).ok());
            HttpEmbedder::new(self.transport.clone(), &svc.url, &svc.model, key.as_deref())
        });
        let embedder = FallbackEmbedder {
            store: &store,
            remote: remote.as_ref().map(|r| r as &dyn Embedder),
        };
        let records = corpus
            .arguments()
            .iter()
            .map(|a| align_argument(a, &graph, &store, &embedder, cfg.top_m))
            .collect::<psv_core::Result<Vec<_>>>()?;
        let out = self.artifact(art::ALIGNMENT);
        art::write_jsonl(&out, &self.provenance(Stage::Align, inputs), &records)?;
        Ok(vec![out])
    }

    fn signature(&self) -> Result<Vec<PathBuf>> {
        let cfg = &self.config;
        let mut inputs = Inputs::default();
        let aligned = self.read_alignment(&mut inputs)?;
        let corpus = self.load_corpus(&mut inputs)?;
        let lemmas = self.load_lemmas(&mut inputs)?;
        let hypernyms = match (
            &cfg.paths.hypernyms,
            cfg.filters.contains(&SignatureFilter::Hypernym),
        ) {
            (Some(path), true) => {
                inputs.add("hypernyms", path)?;
                Some(load_hypernyms(path)?)
            }
            _ => None,
        };
        let mut signatures = Vec::new();
        for topic in corpus.topics() {
            let mut sig = induce_signature(&topic.topic_id, &aligned, &corpus, &lemmas, cfg.k)?;
            for filter in &cfg.filters {
                sig = match filter {
                    SignatureFilter::Hypernym => {
                        filter_hypernyms(sig, &lemmas, hypernyms.as_ref().expect("loaded above"))
                    }
                    SignatureFilter::Relevance => filter_relevance(sig, &topic.question, self.client()?)?,
                };
            }
            for w in &sig.warnings {
                log::warn!("{}: {w}", topic.topic_id);
            }
            log::info!("{}: {} signature concepts", topic.topic_id, sig.dim());
            signatures.push(sig);
        }
        let out = self.artifact(art::SIGNATURE);
        art::write_signatures(&out, &self.provenance(Stage::Signature, inputs), &signatures)?;
        Ok(vec![out])
    }

    fn psv(&self) -> Result<Vec<PathBuf>> {
        let cfg = &self.config;
        let mut inputs = Inputs::default();
        let signatures = self.read_signatures(&mut inputs)?;
        let corpus = self.load_corpus(&mut inputs)?;
        let aligned = match cfg.predictor {
            Predictor::Baseline => Some(self.read_alignment(&mut inputs)?),
            _ => None,
        };
        let baseline;
        let llm;
        let predictor: &dyn StancePredictor = match cfg.predictor {
            Predictor::Baseline => {
                let sets = aligned.as_ref().expect("read above");
                baseline = BaselinePredictor::new(sets.iter().map(|(k, v)| (k.as_str(), v)));
                &baseline
            }
            Predictor::LlmZero | Predictor::LlmFew => {
                llm = LlmPredictor {
                    client: self.client()?,
                    corpus: &corpus,
                    mode: if cfg.predictor == Predictor::LlmFew {
                        PromptMode::FewShot
                    } else {
                        PromptMode::ZeroShot
                    },
                    fallback_neutral: cfg.stance_fallback_neutral,
                };
                &llm
            }
        };
        let mut rows = Vec::new();
        for topic in corpus.topics() {
            let sig = signatures.get(&topic.topic_id).ok_or_else(|| {
                anyhow!(
                    "no signature for topic `{}`; re-run `psv signature`",
                    topic.topic_id
                )
            })?;
            let names = sig.concept_names();
            for arg in corpus.topic_arguments(&topic.topic_id)? {
                let (discrete, prob) = build_psv(arg, sig, predictor)?;
                for (i, concept) in names.iter().enumerate() {
                    let [p_against, p_neutral, p_favor] = prob.rows[i];
                    rows.push(PsvRow {
                        topic_id: topic.topic_id.clone(),
                        argument_id: arg.argument_id.clone(),
                        concept: concept.clone(),
                        s: discrete.values[i].value(),
                        p_against,
                        p_neutral,
                        p_favor,
                    });
                }
            }
        }
        let out = self.artifact(art::PSV);
        art::write_csv(&out, &self.provenance(Stage::Psv, inputs), &rows)?;
        Ok(vec![out])
    }

    fn scores(&self) -> Result<Vec<PathBuf>> {
        let cfg = &self.config;
        let mut inputs = Inputs::default();
        let signatures = self.read_signatures(&mut inputs)?;
        let psvs = self.read_psvs(&signatures, &mut inputs)?;
        let corpus = self.load_corpus(&mut inputs)?;
        let mut rows = Vec::new();
        for topic in corpus.topics() {
            let names = signatures[&topic.topic_id].concept_names();
            let args = corpus.topic_arguments(&topic.topic_id)?;
            let vectors = args
                .iter()
                .map(|a| {
                    psvs.get(&a.argument_id)
                        .ok_or_else(|| anyhow!("no PSV for `{}`; re-run `psv psv`", a.argument_id))
                })
                .collect::<Result<Vec<_>>>()?;
            for i in 0..vectors.len() {
                for j in i + 1..vectors.len() {
                    for &family in &cfg.families {
                        let ps = pair_scores(vectors[i], vectors[j], family)?;
                        for &channel in family.channels() {
                            let row = |concept: &str, value: f64| ScoreRow {
                                topic_id: topic.topic_id.clone(),
                                arg1: ps.arg1_id.clone(),
                                arg2: ps.arg2_id.clone(),
                                family,
                                channel,
                                concept: concept.to_string(),
                                value,
                            };
                            rows.push(row(art::GLOBAL, ps.global(channel)?));
                            if cfg.per_concept_scores {
                                for (c, &v) in names.iter().zip(ps.per_concept(channel)?) {
                                    rows.push(row(c, v));
                                }
                            }
                        }
                    }
                }
            }
        }
        let out = self.artifact(art::SCORES);
        art::write_csv(&out, &self.provenance(Stage::Scores, inputs), &rows)?;
        Ok(vec![out])
    }

    fn eval(&self) -> Result<Vec<PathBuf>> {
        let cfg = &self.config;
        let mut inputs = Inputs::default();
        let signatures = self.read_signatures(&mut inputs)?;
        let psv_path = self.require(art::PSV)?;
        inputs.add(art::PSV, &psv_path)?;
        let psv_rows: Vec<PsvRow> = art::read_csv(&psv_path)?;
        let score_rows = self.read_scores(&mut inputs)?;
        let corpus = self.load_corpus(&mut inputs)?;
        let annotations = self.load_annotations(&corpus, &mut inputs)?;

        let mut global: BTreeMap<(Family, Channel), BTreeMap<PairKey, f64>> = BTreeMap::new();
        let mut local: BTreeMap<(Family, Channel), BTreeMap<(PairKey, String), f64>> = BTreeMap::new();
        for r in score_rows {
            let key = PairKey::new(&r.arg1, &r.arg2);
            if r.concept == art::GLOBAL {
                global
                    .entry((r.family, r.channel))
                    .or_default()
                    .insert(key, r.value);
            } else {
                local
                    .entry((r.family, r.channel))
                    .or_default()
                    .insert((key, r.concept), r.value);
            }
        }

        let mut report = EvalReport::default();
        match &annotations {
            Some(ann) => {
                report.signature_quality(&signatures, ann, &cfg.filters);
                report.stance_quality(&psv_rows, ann)?;
                report.reliability(ann);
                report.global_acceptability(cfg, &global, ann)?;
                let labels = perspectivized_labels(ann, &signatures, &corpus);
                report.perspectivized(cfg, &local, &labels)?;
                if cfg.pairwise_ablation {
                    let scores = self.pairwise_scores(&labels, &corpus)?;
                    report.pairwise_ablation(&scores, &labels)?;
                }
            }
            None => log::info!("no annotations configured; running the same-side protocol only"),
        }
        report.same_side(cfg, &global, &corpus)?;

        let prov = self.provenance(Stage::Eval, inputs);
        let csv_out = self.artifact(art::EVAL);
        art::write_csv(&csv_out, &prov, &report.rows)?;
        let md_out = self.artifact(art::EVAL_TABLES);
        art::write_markdown(&md_out, &prov, &report.markdown(cfg))?;
        Ok(vec![csv_out, md_out])
    }

    /// Per-concept scores from direct pairwise judgments, one request per labeled pair.
    fn pairwise_scores(&self, labels: &ConceptLabels, corpus: &Corpus) -> Result<PairwiseReplies> {
        let mut per_pair: BTreeMap<PairKey, Vec<String>> = BTreeMap::new();
        for (pair, concept) in labels.keys() {
            per_pair.entry(pair.clone()).or_default().push(concept.clone());
        }
        let client = self.client()?;
        let text = |id: &str| {
            corpus
                .argument(id)
                .map(|a| a.text.as_str())
                .ok_or_else(|| anyhow!("unknown argument `{id}`"))
        };
        per_pair
            .into_iter()
            .map(|(pair, concepts)| {
                let judged =
                    pairwise_acceptability(client, text(pair.first())?, text(pair.second())?, &concepts)
                        .with_context(|| format!("pairwise judgment for {pair}"))?;
                Ok(((pair, concepts), judged))
            })
            .collect()
    }

    fn stakeholders(&self) -> Result<Vec<PathBuf>> {
        let mut inputs = Inputs::default();
        let corpus = self.load_corpus(&mut inputs)?;
        let mut rows = Vec::new();
        match self.config.stakeholder_source {
            StakeholderSource::Corpus => {
                let mut unlabeled = 0;
                for a in corpus.arguments() {
                    match &a.stakeholders {
                        Some(groups) => rows.extend(groups.iter().map(|g| StakeholderRow {
                            topic_id: a.topic_id.clone(),
                            argument_id: a.argument_id.clone(),
                            group: g.clone(),
                        })),
                        None => unlabeled += 1,
                    }
                }
                if unlabeled > 0 {
                    log::warn!("{unlabeled} arguments carry no stakeholder groups");
                }
            }
            StakeholderSource::Llm => {
                let client = self.client()?;
                for topic in corpus.topics() {
                    let candidates = topic_stakeholders(client, &topic.question)
                        .with_context(|| format!("stakeholders for `{}`", topic.topic_id))?;
                    for a in corpus.topic_arguments(&topic.topic_id)? {
                        let groups = argument_stakeholders(client, &a.text, &candidates)
                            .with_context(|| format!("stakeholders for `{}`", a.argument_id))?;
                        rows.extend(groups.into_iter().map(|g| StakeholderRow {
                            topic_id: a.topic_id.clone(),
                            argument_id: a.argument_id.clone(),
                            group: g,
                        }));
                    }
                }
            }
        }
        let out = self.artifact(art::STAKEHOLDERS);
        art::write_csv(&out, &self.provenance(Stage::Stakeholders, inputs), &rows)?;
        Ok(vec![out])
    }

    fn report(&self) -> Result<Vec<PathBuf>> {
        let cfg = &self.config;
        let family = cfg.report_family;
        if !cfg.families.contains(&family) {
            bail!("report family {family} is not among the scored families");
        }
        let mut inputs = Inputs::default();
        let score_rows = self.read_scores(&mut inputs)?;
        let sh_path = self.require(art::STAKEHOLDERS)?;
        inputs.add(art::STAKEHOLDERS, &sh_path)?;
        let sh_rows: Vec<StakeholderRow> = art::read_csv(&sh_path)?;
        let corpus = self.load_corpus(&mut inputs)?;

        let (pairs, concepts) = pair_summaries(&score_rows, family, &corpus)?;
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for r in sh_rows {
            groups.entry(r.argument_id).or_default().push(r.group);
        }

        let mut matrix = Vec::new();
        let mut top = Vec::new();
        for topic in corpus.topics() {
            let tid = topic.topic_id.as_str();
            let topic_pairs: Vec<PairSummary> = pairs.iter().filter(|p| p.topic_id == tid).cloned().collect();
            let topic_groups: BTreeMap<String, Vec<String>> = corpus
                .topic_arguments(tid)?
                .iter()
                .filter_map(|a| {
                    groups
                        .get(&a.argument_id)
                        .map(|g| (a.argument_id.clone(), g.clone()))
                })
                .collect();
            let refs: Vec<&PairSummary> = topic_pairs.iter().collect();
            for &channel in family.channels() {
                matrix.extend(reports::stakeholder_matrix(
                    tid,
                    &topic_pairs,
                    &topic_groups,
                    channel,
                ));
                let Some(names) = concepts.get(tid) else { continue };
                for subset in PairSubset::ALL {
                    let ranked = reports::top_perspectives(&refs, names, channel, subset, cfg.top_n);
                    top.extend(
                        ranked
                            .into_iter()
                            .enumerate()
                            .map(|(i, (concept, value, n_pairs))| TopPerspective {
                                topic_id: tid.to_string(),
                                subset,
                                channel,
                                rank: i + 1,
                                concept,
                                value,
                                n_pairs,
                            }),
                    );
                }
            }
        }
        if !cfg.per_concept_scores {
            log::warn!("per-concept scores are disabled; the top-perspective table is empty");
        }
        let scatter = reports::scatter(&pairs);
        let disagreement: Vec<(f64, bool)> = pairs
            .iter()
            .map(|p| (p.global[&Channel::Disagreement], p.same_stance))
            .collect();
        let histogram = reports::histogram(&disagreement, cfg.histogram_bin);

        let prov = self.provenance(Stage::Report, inputs);
        let paths: Vec<PathBuf> = [
            art::REPORT_MATRIX,
            art::REPORT_TOP,
            art::REPORT_SCATTER,
            art::REPORT_HISTOGRAM,
        ]
        .iter()
        .map(|n| self.artifact(n))
        .collect();
        art::write_csv(&paths[0], &prov, &matrix)?;
        art::write_csv(&paths[1], &prov, &top)?;
        art::write_csv(&paths[2], &prov, &scatter)?;
        art::write_csv(&paths[3], &prov, &histogram)?;
        Ok(paths)
    }
}

/// Pair summaries for one family in file order, plus each topic's concept order.
pub fn pair_summaries(
    rows: &[ScoreRow],
    family: Family,
    corpus: &Corpus,
) -> Result<(Vec<PairSummary>, TopicConcepts)> {
    let mut pairs: Vec<PairSummary> = Vec::new();
    let mut concepts: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let stance = |id: &str| {
        corpus
            .argument(id)
            .map(|a| a.overall_stance)
            .ok_or_else(|| anyhow!("scores name unknown argument `{id}`"))
    };
    for r in rows.iter().filter(|r| r.family == family) {
        let is_new = pairs.last().is_none_or(|p| p.arg1 != r.arg1 || p.arg2 != r.arg2);
        if is_new {
            pairs.push(PairSummary {
                topic_id: r.topic_id.clone(),
                arg1: r.arg1.clone(),
                arg2: r.arg2.clone(),
                same_stance: stance(&r.arg1)? == stance(&r.arg2)?,
                global: BTreeMap::new(),
                per_concept: BTreeMap::new(),
            });
        }
        let p = pairs.last_mut().expect("pushed above");
        if r.concept == art::GLOBAL {
            p.global.insert(r.channel, r.value);
        } else {
            p.per_concept.entry(r.channel).or_default().push(r.value);
            if is_first_pair_of_topic(&pairs) && r.channel == family.channels()[0] {
                concepts
                    .entry(r.topic_id.clone())
                    .or_default()
                    .push(r.concept.clone());
            }
        }
    }
    Ok((pairs, concepts))
}

fn is_first_pair_of_topic(pairs: &[PairSummary]) -> bool {
    let n = pairs.len();
    n == 1 || pairs[n - 2].topic_id != pairs[n - 1].topic_id
}

/// Concept-level pair labels on signature concepts of the pair's topic.
fn perspectivized_labels(
    ann: &AnnotationSet,
    signatures: &BTreeMap<String, Signature>,
    corpus: &Corpus,
) -> ConceptLabels {
    let members: BTreeMap<&str, BTreeSet<String>> = signatures
        .iter()
        .map(|(t, s)| (t.as_str(), s.concept_names().into_iter().collect()))
        .collect();
    let mut dropped = 0;
    let kept = ann
        .pair_concept_labels
        .iter()
        .filter(|((pair, concept), _)| {
            let topic = corpus.argument(pair.first()).map(|a| a.topic_id.as_str());
            let keep = topic
                .and_then(|t| members.get(t))
                .is_some_and(|m| m.contains(concept));
            if !keep {
                dropped += 1;
            }
            keep
        })
        .map(|(k, &v)| (k.clone(), v))
        .collect();
    if dropped > 0 {
        log::info!("{dropped} concept-level pair labels fall outside the signatures and are skipped");
    }
    kept
}

const STANCE_CLASSES: [Stance; 3] = [Stance::Against, Stance::Neutral, Stance::Favor];

fn stance_name(s: Stance) -> &'static str {
    match s {
        Stance::Against => "negative",
        Stance::Neutral => "neutral",
        Stance::Favor => "positive",
    }
}

fn filter_setting(filters: &[SignatureFilter]) -> &'static str {
    let hyp = filters.contains(&SignatureFilter::Hypernym);
    let irrel = filters.contains(&SignatureFilter::Relevance);
    match (hyp, irrel) {
        (false, false) => "all",
        (true, false) => "-hyp",
        (false, true) => "-irrel",
        (true, true) => "-both",
    }
}

#[derive(Default)]
struct EvalReport {
    rows: Vec<EvalRow>,
}

impl EvalReport {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        protocol: &str,
        setting: &str,
        channel: &str,
        metric: &str,
        value: Option<f64>,
        n: Option<usize>,
        note: &str,
    ) {
        self.rows.push(EvalRow {
            protocol: protocol.into(),
            setting: setting.into(),
            channel: channel.into(),
            metric: metric.into(),
            value,
            n,
            note: note.into(),
        });
    }

    fn value(&self, protocol: &str, setting: &str, channel: &str, metric: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| {
            r.protocol == protocol && r.setting == setting && r.channel == channel && r.metric == metric
        })
    }

    /// Precision, recall and F1 averaged over annotated topics, unfiltered and filtered.
    fn signature_quality(
        &mut self,
        sigs: &BTreeMap<String, Signature>,
        ann: &AnnotationSet,
        filters: &[SignatureFilter],
    ) {
        let annotated: BTreeSet<&str> = ann.signature_labels.keys().map(|(t, _)| t.as_str()).collect();
        let mut settings: Vec<(&str, ConceptSelector)> = vec![(
            "all",
            Box::new(|s: &Signature| s.records().into_iter().map(|r| r.concept).collect()),
        )];
        if !filters.is_empty() {
            settings.push((
                filter_setting(filters),
                Box::new(|s: &Signature| s.concept_names().into_iter().collect()),
            ));
        }
        for (setting, members) in settings {
            let qs: Vec<_> = sigs
                .iter()
                .filter(|(t, _)| annotated.contains(t.as_str()))
                .map(|(t, s)| {
                    let q = eval_signature(t, &members(s), ann);
                    if !q.unannotated.is_empty() {
                        log::info!("{t}: {} signature concepts lack judgments", q.unannotated.len());
                    }
                    q
                })
                .collect();
            let n = qs.len();
            if n == 0 {
                self.push(
                    "signature",
                    setting,
                    "",
                    "avg_dim",
                    None,
                    Some(0),
                    "no annotated topics",
                );
                continue;
            }
            let mean = |f: &dyn Fn(&psv_core::eval::SignatureQuality) -> f64| {
                qs.iter().map(f).sum::<f64>() / n as f64
            };
            self.push(
                "signature",
                setting,
                "",
                "avg_dim",
                Some(mean(&|q| q.n_predicted as f64)),
                Some(n),
                "",
            );
            for (channel, pick) in [
                (
                    "relevance",
                    (|q: &psv_core::eval::SignatureQuality| q.relevance) as fn(&_) -> _,
                ),
                ("granularity", |q: &psv_core::eval::SignatureQuality| {
                    q.granularity
                }),
            ] {
                self.push(
                    "signature",
                    setting,
                    channel,
                    "precision",
                    Some(mean(&|q| pick(q).precision)),
                    Some(n),
                    "",
                );
                self.push(
                    "signature",
                    setting,
                    channel,
                    "recall",
                    Some(mean(&|q| pick(q).recall)),
                    Some(n),
                    "",
                );
                self.push(
                    "signature",
                    setting,
                    channel,
                    "f1",
                    Some(mean(&|q| pick(q).f1)),
                    Some(n),
                    "",
                );
            }
        }
    }

    /// Macro-F1 of predicted stance values against concept-level stance labels.
    fn stance_quality(&mut self, psv_rows: &[PsvRow], ann: &AnnotationSet) -> Result<()> {
        let mut all: (Vec<Stance>, Vec<Stance>) = Default::default();
        let mut appropriate: (Vec<Stance>, Vec<Stance>) = Default::default();
        for r in psv_rows {
            let Some(gold) = ann.stance(&r.argument_id, &r.concept) else {
                continue;
            };
            let pred = Stance::try_from(r.s).map_err(anyhow::Error::msg)?;
            all.0.push(pred);
            all.1.push(gold);
            let fine = ann
                .signature_labels
                .get(&(r.topic_id.clone(), r.concept.clone()))
                .is_some_and(|l| l.appropriate_granularity);
            if fine {
                appropriate.0.push(pred);
                appropriate.1.push(gold);
            }
        }
        for (setting, (pred, gold)) in [("all", &all), ("appropriate", &appropriate)] {
            if pred.is_empty() {
                self.push(
                    "stance",
                    setting,
                    "",
                    "macro_f1",
                    None,
                    Some(0),
                    "no labeled items",
                );
                continue;
            }
            let rep = macro_f1(pred, gold, &STANCE_CLASSES)?;
            self.push(
                "stance",
                setting,
                "",
                "macro_f1",
                Some(rep.macro_f1),
                Some(pred.len()),
                "",
            );
            if setting == "all" {
                for (class, f) in &rep.per_class {
                    self.push(
                        "stance",
                        setting,
                        stance_name(*class),
                        "f1",
                        Some(*f),
                        Some(pred.len()),
                        "",
                    );
                }
                let cm = confusion_matrix(pred, gold, &STANCE_CLASSES)?;
                for (g, row) in STANCE_CLASSES.iter().zip(&cm) {
                    for (p, &count) in STANCE_CLASSES.iter().zip(row) {
                        let metric = format!("confusion:gold={},pred={}", stance_name(*g), stance_name(*p));
                        self.push(
                            "stance",
                            setting,
                            "",
                            &metric,
                            Some(count as f64),
                            Some(pred.len()),
                            "",
                        );
                    }
                }
            }
        }
        Ok(())
    }

    fn reliability(&mut self, ann: &AnnotationSet) {
        for task in ann.reliability.keys() {
            let data = ann.reliability_data(task).expect("task present");
            match krippendorff_alpha_nominal(&data) {
                Ok(a) => self.push(
                    "reliability",
                    task,
                    "",
                    "krippendorff_alpha",
                    Some(a),
                    Some(data.n_items()),
                    "",
                ),
                Err(e) => self.push(
                    "reliability",
                    task,
                    "",
                    "krippendorff_alpha",
                    None,
                    Some(data.n_items()),
                    &e.to_string(),
                ),
            }
        }
    }

    fn auc_row(
        &mut self,
        protocol: &str,
        setting: &str,
        channel: Channel,
        result: psv_core::Result<AucResult>,
        note: &str,
    ) -> Result<()> {
        match result {
            Ok(r) => {
                self.push(
                    protocol,
                    setting,
                    channel.as_str(),
                    "roc_auc",
                    Some(r.auc),
                    Some(r.n),
                    note,
                );
                Ok(())
            }
            Err(psv_core::Error::SingleClass) => {
                self.push(
                    protocol,
                    setting,
                    channel.as_str(),
                    "roc_auc",
                    None,
                    None,
                    "labels contain a single class",
                );
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }

    fn global_acceptability(
        &mut self,
        cfg: &PipelineConfig,
        global: &BTreeMap<(Family, Channel), BTreeMap<PairKey, f64>>,
        ann: &AnnotationSet,
    ) -> Result<()> {
        if ann.pair_global_labels.is_empty() {
            return Ok(());
        }
        let empty = BTreeMap::new();
        for &family in &cfg.families {
            for &channel in family.channels() {
                let scores = global.get(&(family, channel)).unwrap_or(&empty);
                let r = eval_global_acceptability(scores, &ann.pair_global_labels, family, channel);
                self.auc_row("global", family.as_str(), channel, r, "")?;
            }
        }
        Ok(())
    }

    fn perspectivized(
        &mut self,
        cfg: &PipelineConfig,
        local: &LocalScores,
        labels: &ConceptLabels,
    ) -> Result<()> {
        if labels.is_empty() {
            return Ok(());
        }
        if !cfg.per_concept_scores {
            log::warn!("per-concept scores are disabled; skipping the perspectivized protocol");
            return Ok(());
        }
        let empty = BTreeMap::new();
        for &family in &cfg.families {
            for &channel in family.channels() {
                let scores = local.get(&(family, channel)).unwrap_or(&empty);
                let r = eval_perspectivized(scores, labels, Some(family), channel);
                self.auc_row("perspectivized", family.as_str(), channel, r, "")?;
            }
        }
        Ok(())
    }

    fn pairwise_ablation(
        &mut self,
        judged: &BTreeMap<(PairKey, Vec<String>), Vec<PairwiseLabel>>,
        labels: &ConceptLabels,
    ) -> Result<()> {
        for channel in Channel::ALL {
            let scores: BTreeMap<(PairKey, String), f64> = judged
                .iter()
                .flat_map(|((pair, concepts), verdicts)| {
                    concepts
                        .iter()
                        .zip(verdicts)
                        .map(move |(c, &v)| ((pair.clone(), c.clone()), pairwise_label_score(v, channel)))
                })
                .collect();
            let r = eval_perspectivized(&scores, labels, None, channel);
            self.auc_row("perspectivized", "w/o PSV", channel, r, "")?;
        }
        Ok(())
    }

    fn same_side(
        &mut self,
        cfg: &PipelineConfig,
        global: &BTreeMap<(Family, Channel), BTreeMap<PairKey, f64>>,
        corpus: &Corpus,
    ) -> Result<()> {
        for &family in &cfg.families {
            for &channel in family.channels() {
                let Some(scores) = global.get(&(family, channel)) else {
                    continue;
                };
                let note = match same_side_orientation(channel) {
                    Orientation::LowerIsPositive => "lower_is_positive",
                    Orientation::HigherIsPositive => "",
                };
                let r = eval_same_side(scores, corpus, family, channel);
                self.auc_row("same_side", family.as_str(), channel, r, note)?;
            }
        }
        Ok(())
    }

    fn markdown(&self, cfg: &PipelineConfig) -> String {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.1}", 100.0 * v));
        let mut md = String::new();

        let sig_settings: Vec<&str> = ["all", "-hyp", "-irrel", "-both"]
            .into_iter()
            .filter(|s| self.value("signature", s, "", "avg_dim").is_some())
            .collect();
        if !sig_settings.is_empty() {
            let _ = writeln!(md, "## Signature concepts\n");
            let _ = writeln!(md, "| | | {} |", sig_settings.join(" | "));
            let _ = writeln!(md, "|---|---|{}", "---:|".repeat(sig_settings.len()));
            let avg: Vec<String> = sig_settings
                .iter()
                .map(|s| {
                    self.value("signature", s, "", "avg_dim")
                        .and_then(|r| r.value)
                        .map_or("n/a".into(), |v| format!("{v:.1}"))
                })
                .collect();
            let _ = writeln!(md, "| Avg | # | {} |", avg.join(" | "));
            for (label, channel) in [("Relevance", "relevance"), ("Granularity", "granularity")] {
                for (short, metric) in [("P", "precision"), ("R", "recall"), ("F1", "f1")] {
                    let cells: Vec<String> = sig_settings
                        .iter()
                        .map(|s| pct(self.value("signature", s, channel, metric).and_then(|r| r.value)))
                        .collect();
                    let name = if short == "P" { label } else { "" };
                    let _ = writeln!(md, "| {name} | {short} | {} |", cells.join(" | "));
                }
            }
            md.push('\n');
        }

        if self.value("stance", "all", "", "macro_f1").is_some() {
            let _ = writeln!(md, "## Stance values (macro F1)\n");
            let _ = writeln!(
                md,
                "| Method | all | appropriate | negative | neutral | positive |"
            );
            let _ = writeln!(md, "|---|---:|---:|---:|---:|---:|");
            let get = |setting: &str, channel: &str, metric: &str| {
                pct(self
                    .value("stance", setting, channel, metric)
                    .and_then(|r| r.value))
            };
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |\n",
                cfg.predictor,
                get("all", "", "macro_f1"),
                get("appropriate", "", "macro_f1"),
                get("all", "negative", "f1"),
                get("all", "neutral", "f1"),
                get("all", "positive", "f1"),
            );
            let _ = writeln!(md, "Confusion matrix (rows gold, columns predicted):\n");
            let _ = writeln!(md, "| gold \\ pred | negative | neutral | positive |");
            let _ = writeln!(md, "|---|---:|---:|---:|");
            for g in STANCE_CLASSES {
                let cells: Vec<String> = STANCE_CLASSES
                    .iter()
                    .map(|p| {
                        let m = format!("confusion:gold={},pred={}", stance_name(g), stance_name(*p));
                        self.value("stance", "all", "", &m)
                            .and_then(|r| r.value)
                            .map_or("0".into(), |v| format!("{v:.0}"))
                    })
                    .collect();
                let _ = writeln!(md, "| {} | {} |", stance_name(g), cells.join(" | "));
            }
            md.push('\n');
        }

        let alphas: Vec<&EvalRow> = self.rows.iter().filter(|r| r.protocol == "reliability").collect();
        if !alphas.is_empty() {
            let _ = writeln!(md, "## Inter-annotator agreement\n");
            let _ = writeln!(md, "| Task | items | Krippendorff's alpha |");
            let _ = writeln!(md, "|---|---:|---:|");
            for r in alphas {
                let v = r.value.map_or("n/a".into(), |v| format!("{v:.2}"));
                let _ = writeln!(md, "| {} | {} | {v} |", r.setting, r.n.unwrap_or(0));
            }
            md.push('\n');
        }

        let _ = writeln!(md, "## Aggregation methods (ROC-AUC)\n");
        let _ = writeln!(md, "| Mode | Method | Agreement | Orthogonal | Disagreement |");
        let _ = writeln!(md, "|---|---|---:|---:|---:|");
        for (protocol, title) in [
            ("global", "Global"),
            ("perspectivized", "Perspectivized"),
            ("same_side", "Same Stance"),
        ] {
            let mut settings: Vec<String> = cfg.families.iter().map(|f| f.as_str().to_string()).collect();
            if protocol == "perspectivized" {
                settings.push("w/o PSV".into());
            }
            for setting in settings {
                let has_any = self
                    .rows
                    .iter()
                    .any(|r| r.protocol == protocol && r.setting == setting);
                if !has_any {
                    continue;
                }
                let cells: Vec<String> = Channel::ALL
                    .iter()
                    .map(
                        |ch| match self.value(protocol, &setting, ch.as_str(), "roc_auc") {
                            None => "--".into(),
                            Some(r) => {
                                let star = if r.note == "lower_is_positive" { "*" } else { "" };
                                r.value.map_or("n/a".into(), |v| format!("{star}{v:.2}"))
                            }
                        },
                    )
                    .collect();
                let _ = writeln!(md, "| {title} | {setting} | {} |", cells.join(" | "));
            }
        }
        let _ = writeln!(
            md,
            "\n`--` marks channels a family does not define. `*` marks same-stance cells where lower scores indicate the same stance."
        );
        md
    }
}
