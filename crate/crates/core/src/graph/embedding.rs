use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::llm::Transport;
use crate::util::read_lines;

/// Anything that can turn a text into a dense vector.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// Precomputed vectors keyed by concept label or sentence text.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    dim: Option<usize>,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn insert(&mut self, label: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let label = label.into();
        if let Some(expected) = self.dim {
            if vector.len() != expected {
                return Err(Error::DimensionMismatch {
                    label,
                    expected,
                    actual: vector.len(),
                });
            }
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "embedding for `{label}` has non-finite entries"
            )));
        }
        self.dim = Some(vector.len());
        self.vectors.insert(label, vector);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&[f64]> {
        self.vectors.get(label).map(Vec::as_slice)
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl Embedder for EmbeddingStore {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        self.get(text)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| Error::MissingEmbedding(text.to_string()))
    }
}

/// Reads `label \t f1 f2 ... fd` rows.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let mut store = EmbeddingStore::default();
    for (line, text) in read_lines(path)? {
        let (label, values) = text
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, line, "expected `label<TAB>values`"))?;
        let vector = values
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        if vector.is_empty() {
            return Err(Error::parse(path, line, "empty vector"));
        }
        store
            .insert(label, vector)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
    }
    Ok(store)
}

/// Client for an embedding endpoint speaking the common
/// `{"model", "input": [..]}` → `{"data": [{"embedding": [..]}]}` shape.
pub struct HttpEmbedder {
    transport: Arc<dyn Transport>,
    url: String,
    model: String,
    headers: Vec<(String, String)>,
}

impl HttpEmbedder {
    pub fn new(
        transport: Arc<dyn Transport>,
        url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<&str>,
    ) -> Self {
        let headers = api_key
            .map(|k| vec![("Authorization".to_string(), format!("Bearer {k}"))])
            .unwrap_or_default();
        HttpEmbedder {
            transport,
            url: url.into(),
            model: model.into(),
            headers,
        }
    }

    pub fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let body = json!({ "model": self.model, "input": texts });
        let resp = self.transport.post_json(&self.url, &self.headers, &body)?;
        if !(200..300).contains(&resp.status) {
            return Err(Error::HttpStatus {
                status: resp.status,
                excerpt: resp.body.chars().take(200).collect(),
            });
        }
        let value: Value = serde_json::from_str(&resp.body)?;
        let data = value
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Transport("embedding response without `data`".into()))?;
        if data.len() != texts.len() {
            return Err(Error::Transport(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                data.len()
            )));
        }
        data.iter()
            .map(|d| {
                d.get("embedding")
                    .and_then(Value::as_array)
                    .map(|xs| xs.iter().filter_map(Value::as_f64).collect())
                    .ok_or_else(|| Error::Transport("embedding entry without vector".into()))
            })
            .collect()
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }
}

/// Looks texts up in a store and asks a remote service for the rest.
pub struct FallbackEmbedder<'a> {
    pub store: &'a EmbeddingStore,
    pub remote: Option<&'a dyn Embedder>,
}

impl Embedder for FallbackEmbedder<'_> {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        match (self.store.get(text), self.remote) {
            (Some(v), _) => Ok(v.to_vec()),
            (None, Some(remote)) => remote.embed(text),
            (None, None) => Err(Error::MissingEmbedding(text.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::HttpResponse;
    use std::io::Write;

    #[test]
    fn rejects_ragged_and_non_finite() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a\t1 2 3").unwrap();
        writeln!(f, "b\t1 2").unwrap();
        assert!(matches!(
            load_embeddings(f.path()),
            Err(Error::Parse { line: 2, .. })
        ));

        let mut store = EmbeddingStore::default();
        assert!(store.insert("x", vec![f64::NAN]).is_err());
    }

    #[test]
    fn labels_may_contain_spaces() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "trophy hunting\t0.5 -0.25").unwrap();
        let s = load_embeddings(f.path()).unwrap();
        assert_eq!(s.get("trophy hunting"), Some(&[0.5, -0.25][..]));
        assert_eq!(s.dim(), Some(2));
    }

    struct Fixed;
    impl Transport for Fixed {
        fn post_json(&self, _: &str, _: &[(String, String)], body: &Value) -> Result<HttpResponse> {
            let n = body["input"].as_array().unwrap().len();
            let data: Vec<Value> = (0..n).map(|i| json!({"embedding": [i as f64, 1.0]})).collect();
            Ok(HttpResponse {
                status: 200,
                body: json!({ "data": data }).to_string(),
            })
        }
    }

    #[test]
    fn http_embedder_and_fallback() {
        let remote = HttpEmbedder::new(Arc::new(Fixed), "http://x/embed", "m", None);
        assert_eq!(remote.embed_batch(&["a", "b"]).unwrap()[1], vec![1.0, 1.0]);
        let mut store = EmbeddingStore::default();
        store.insert("known", vec![3.0, 3.0]).unwrap();
        let fb = FallbackEmbedder {
            store: &store,
            remote: Some(&remote),
        };
        assert_eq!(fb.embed("known").unwrap(), vec![3.0, 3.0]);
        assert_eq!(fb.embed("other").unwrap(), vec![0.0, 1.0]);
        let local = FallbackEmbedder {
            store: &store,
            remote: None,
        };
        assert!(matches!(local.embed("other"), Err(Error::MissingEmbedding(_))));
    }
}
