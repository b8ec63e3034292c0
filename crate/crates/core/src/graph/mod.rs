//! Commonsense concept graph and argument-to-concept alignment.

mod align;
mod embedding;

pub use align::{align_argument, match_concepts, sentence_split, ConceptMatcher};
pub use embedding::{load_embeddings, Embedder, EmbeddingStore, FallbackEmbedder, HttpEmbedder};

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{cosine, read_lines};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub relation: String,
    pub base_weight: f64,
}

/// Undirected view over deduplicated, loop-free edges.
///
/// Node indices follow lexicographic label order, so comparing index
/// sequences is the same as comparing label sequences.
#[derive(Debug, Clone, Default)]
pub struct ConceptGraph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl ConceptGraph {
    /// Builds the graph, dropping self-loops and repeated (relation, source, target) triples.
    pub fn from_edges(edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for e in edges {
            if e.source == e.target {
                continue;
            }
            if seen.insert((e.relation.clone(), e.source.clone(), e.target.clone())) {
                kept.push(e);
            }
        }
        let nodes: BTreeSet<&str> = kept
            .iter()
            .flat_map(|e| [e.source.as_str(), e.target.as_str()])
            .collect();
        let labels: Vec<String> = nodes.into_iter().map(str::to_string).collect();
        let index: HashMap<String, usize> = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let mut adjacency = vec![Vec::new(); labels.len()];
        for e in &kept {
            let (s, t) = (index[&e.source], index[&e.target]);
            adjacency[s].push(t);
            adjacency[t].push(s);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        ConceptGraph {
            labels,
            index,
            adjacency,
            edges: kept,
        }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Node labels in lexicographic order.
    pub fn nodes(&self) -> &[String] {
        &self.labels
    }

    pub fn neighbors(&self, label: &str) -> impl Iterator<Item = &str> {
        self.index
            .get(label)
            .map(|&i| self.adjacency[i].as_slice())
            .unwrap_or(&[])
            .iter()
            .map(|&j| self.labels[j].as_str())
    }

    /// Minimum-cost path between two nodes, including both endpoints.
    ///
    /// A path pays `node_cost` for every node it enters (the start node is
    /// free). Ties are broken by hop count, then by the label sequence.
    pub fn shortest_path(
        &self,
        source: &str,
        target: &str,
        node_cost: &dyn Fn(&str) -> f64,
    ) -> Result<Option<Vec<String>>> {
        let s = self.node_id(source)?;
        let t = self.node_id(target)?;
        let costs: Vec<f64> = self.labels.iter().map(|l| node_cost(l)).collect();
        let paths = self.paths_from(s, &[t], &costs);
        Ok(paths
            .into_iter()
            .next()
            .flatten()
            .map(|p| p.into_iter().map(|i| self.labels[i].clone()).collect()))
    }

    fn node_id(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownConcept(label.to_string()))
    }

    /// Single-source search that stops once every target is settled.
    fn paths_from(&self, source: usize, targets: &[usize], costs: &[f64]) -> Vec<Option<Vec<usize>>> {
        #[derive(Clone, Copy)]
        struct Label {
            cost: f64,
            hops: usize,
            pred: Option<usize>,
        }

        #[derive(PartialEq)]
        struct Key(f64, usize, usize);
        impl Eq for Key {}
        impl PartialOrd for Key {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Key {
            fn cmp(&self, other: &Self) -> Ordering {
                self.0
                    .total_cmp(&other.0)
                    .then(self.1.cmp(&other.1))
                    .then(self.2.cmp(&other.2))
            }
        }

        let n = self.labels.len();
        let mut labels: Vec<Option<Label>> = vec![None; n];
        let mut settled = vec![false; n];
        let mut remaining: HashSet<usize> = targets.iter().copied().collect();
        labels[source] = Some(Label {
            cost: 0.0,
            hops: 0,
            pred: None,
        });
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Key(0.0, 0, source)));

        let path_to = |labels: &[Option<Label>], mut v: usize| -> Vec<usize> {
            let mut path = vec![v];
            while let Some(p) = labels[v].and_then(|l| l.pred) {
                path.push(p);
                v = p;
            }
            path.reverse();
            path
        };

        while let Some(Reverse(Key(cost, hops, u))) = heap.pop() {
            if settled[u] {
                continue;
            }
            let lu = labels[u].expect("queued nodes are labelled");
            if lu.cost.total_cmp(&cost) != Ordering::Equal || lu.hops != hops {
                continue;
            }
            settled[u] = true;
            remaining.remove(&u);
            if remaining.is_empty() {
                break;
            }
            for &v in &self.adjacency[u] {
                if settled[v] {
                    continue;
                }
                let cand = Label {
                    cost: lu.cost + costs[v],
                    hops: lu.hops + 1,
                    pred: Some(u),
                };
                match labels[v] {
                    None => {
                        labels[v] = Some(cand);
                        heap.push(Reverse(Key(cand.cost, cand.hops, v)));
                    }
                    Some(cur) => {
                        let ord = cand.cost.total_cmp(&cur.cost).then(cand.hops.cmp(&cur.hops));
                        match ord {
                            Ordering::Less => {
                                labels[v] = Some(cand);
                                heap.push(Reverse(Key(cand.cost, cand.hops, v)));
                            }
                            Ordering::Equal => {
                                let via_new = path_to(&labels, u);
                                let via_cur = path_to(&labels, cur.pred.expect("non-source"));
                                if via_new < via_cur {
                                    labels[v] = Some(cand);
                                }
                            }
                            Ordering::Greater => {}
                        }
                    }
                }
            }
        }

        targets
            .iter()
            .map(|&t| settled[t].then(|| path_to(&labels, t)))
            .collect()
    }
}

/// Parses a `relation \t source \t target \t weight` edge dump.
pub fn load_graph(path: impl AsRef<Path>) -> Result<ConceptGraph> {
    let path = path.as_ref();
    let mut edges = Vec::new();
    for (line, text) in read_lines(path)? {
        let cols: Vec<&str> = text.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let weight: f64 = cols[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad weight `{}`", cols[3])))?;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::parse(
                path,
                line,
                "edge weight must be finite and nonnegative",
            ));
        }
        let (source, target) = (cols[1].trim(), cols[2].trim());
        if source.is_empty() || target.is_empty() {
            return Err(Error::parse(path, line, "empty edge endpoint"));
        }
        edges.push(Edge {
            relation: cols[0].trim().to_string(),
            source: source.to_string(),
            target: target.to_string(),
            base_weight: weight,
        });
    }
    Ok(ConceptGraph::from_edges(edges))
}

/// Maps a ConceptNet concept URI such as `/c/en/trophy_hunting/n` to `trophy hunting`.
/// Non-English concepts yield `None`.
pub fn conceptnet_label(uri: &str) -> Option<String> {
    let rest = uri.strip_prefix("/c/en/")?;
    let term = rest.split('/').next()?;
    (!term.is_empty()).then(|| term.replace('_', " "))
}

/// Reads the public ConceptNet assertion dump
/// (`uri \t relation \t start \t end \t json`), keeping English-English edges.
pub fn load_conceptnet_assertions(path: impl AsRef<Path>) -> Result<ConceptGraph> {
    let path = path.as_ref();
    let mut edges = Vec::new();
    for (line, text) in read_lines(path)? {
        let cols: Vec<&str> = text.split('\t').collect();
        if cols.len() < 5 {
            return Err(Error::parse(path, line, "expected 5 tab-separated columns"));
        }
        let (Some(source), Some(target)) = (conceptnet_label(cols[2]), conceptnet_label(cols[3])) else {
            continue;
        };
        let meta: serde_json::Value =
            serde_json::from_str(cols[4]).map_err(|e| Error::parse(path, line, e.to_string()))?;
        let weight = meta.get("weight").and_then(|w| w.as_f64()).unwrap_or(1.0);
        let relation = cols[1].trim_start_matches("/r/").to_string();
        edges.push(Edge {
            source,
            target,
            relation,
            base_weight: weight,
        });
    }
    Ok(ConceptGraph::from_edges(edges))
}

/// Cost of entering `label` on a path: `1 - cos(label, argument)` clamped to `[0, 2]`.
/// Concepts without an embedding cost 1 (cosine 0).
pub fn node_cost(store: &EmbeddingStore, label: &str, argument_vector: &[f64]) -> f64 {
    match store.get(label) {
        Some(v) => (1.0 - cosine(v, argument_vector)).clamp(0.0, 2.0),
        None => 1.0,
    }
}

/// Concepts aligned to one argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentConcepts {
    pub argument_id: String,
    pub concepts: BTreeSet<String>,
    pub anchor_concepts: BTreeSet<String>,
    /// Concepts contributed by connecting paths only (disjoint from anchors).
    pub path_concepts: BTreeSet<String>,
}

/// Unions the minimum-cost path for every unordered anchor pair with the anchors.
///
/// Each pair is searched from its lexicographically smaller endpoint, so the
/// result does not depend on the iteration order of `anchors`.
pub fn connect_paths_with_cost(
    argument_id: &str,
    graph: &ConceptGraph,
    anchors: &BTreeSet<String>,
    node_cost: &dyn Fn(&str) -> f64,
) -> Result<ArgumentConcepts> {
    let ids: Vec<usize> = anchors.iter().map(|a| graph.node_id(a)).collect::<Result<_>>()?;
    let costs: Vec<f64> = graph.labels.iter().map(|l| node_cost(l)).collect();
    let mut on_paths = BTreeSet::new();
    // BTreeSet iteration and index order agree, so ids[i] < ids[j] for i < j.
    for (i, &s) in ids.iter().enumerate() {
        let targets = &ids[i + 1..];
        if targets.is_empty() {
            break;
        }
        for path in graph.paths_from(s, targets, &costs).into_iter().flatten() {
            on_paths.extend(path);
        }
    }
    let path_concepts: BTreeSet<String> = on_paths
        .into_iter()
        .map(|i| graph.labels[i].clone())
        .filter(|l| !anchors.contains(l))
        .collect();
    let mut concepts = anchors.clone();
    concepts.extend(path_concepts.iter().cloned());
    Ok(ArgumentConcepts {
        argument_id: argument_id.to_string(),
        concepts,
        anchor_concepts: anchors.clone(),
        path_concepts,
    })
}

/// [`connect_paths_with_cost`] with the embedding-similarity node cost.
pub fn connect_paths(
    argument_id: &str,
    graph: &ConceptGraph,
    anchors: &BTreeSet<String>,
    store: &EmbeddingStore,
    argument_vector: &[f64],
) -> Result<ArgumentConcepts> {
    connect_paths_with_cost(argument_id, graph, anchors, &|l| {
        node_cost(store, l, argument_vector)
    })
}
