//! Remote embedding provider and embedder selection.

use serde_json::{json, Value};
use tracerag_core::embed::{EmbedError, Embedder, EmbeddingVector, MockEmbedder, MOCK_DIM};

use crate::providers::HttpProvider;

pub struct RemoteEmbedder {
    http: HttpProvider,
    model: String,
    dim: usize,
}

impl RemoteEmbedder {
    pub fn new(http: HttpProvider, model: impl Into<String>, dim: usize) -> Self {
        RemoteEmbedder { http, model: model.into(), dim }
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let v = self
            .http
            .post_json("embeddings", &json!({"model": self.model, "input": text}))
            .map_err(|e| EmbedError::Provider(e.to_string()))?;
        let values: Vec<f32> = v
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| EmbedError::Provider("response has no embedding".into()))?
            .iter()
            .map(|x| x.as_f64().map(|f| f as f32).ok_or_else(|| EmbedError::Provider("non-numeric embedding".into())))
            .collect::<Result<_, _>>()?;
        if values.len() != self.dim {
            return Err(EmbedError::DimMismatch { expected: self.dim, actual: values.len() });
        }
        EmbeddingVector::new(values)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn descriptor(&self) -> String {
        format!("remote:{}:{}", self.model, self.dim)
    }
}

/// Parsed form of a store's embedder descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedderKind {
    Mock { dim: usize },
    Remote { model: String, dim: usize },
}

impl EmbedderKind {
    pub fn parse(descriptor: &str) -> Option<Self> {
        if let Some(dim) = descriptor.strip_prefix("mock-") {
            return dim.parse().ok().map(|dim| EmbedderKind::Mock { dim });
        }
        let rest = descriptor.strip_prefix("remote:")?;
        let (model, dim) = rest.rsplit_once(':')?;
        Some(EmbedderKind::Remote { model: model.to_string(), dim: dim.parse().ok()? })
    }
}

pub fn mock_embedder() -> MockEmbedder {
    MockEmbedder::new(MOCK_DIM)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors_round_trip() {
        assert_eq!(EmbedderKind::parse(&mock_embedder().descriptor()), Some(EmbedderKind::Mock { dim: 256 }));
        let http = HttpProvider::new("http://localhost:1", String::new(), std::time::Duration::from_secs(1));
        let r = RemoteEmbedder::new(http, "text-embedding-ada-002", 1536);
        assert_eq!(
            EmbedderKind::parse(&r.descriptor()),
            Some(EmbedderKind::Remote { model: "text-embedding-ada-002".into(), dim: 1536 })
        );
        assert_eq!(EmbedderKind::parse("other"), None);
    }
}
