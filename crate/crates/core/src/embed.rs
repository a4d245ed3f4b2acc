//! Embedding vectors, cosine similarity and the deterministic mock embedder.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::hash::fnv1a64;

/// Dimension of [`MockEmbedder`] vectors unless configured otherwise.
pub const MOCK_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("text to embed is empty")]
    EmptyText,
    #[error("embedding is the zero vector")]
    ZeroVector,
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("embedding provider error: {0}")]
    Provider(String),
}

/// A finite, non-zero vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::ZeroVector);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(EmbedError::ZeroVector);
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.0.iter().map(|&v| f64::from(v) * f64::from(v)).sum())
    }
}

impl TryFrom<Vec<f32>> for EmbeddingVector {
    type Error = EmbedError;

    fn try_from(values: Vec<f32>) -> Result<Self, Self::Error> {
        EmbeddingVector::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f32> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimMismatch { expected: a.dim(), actual: b.dim() });
    }
    let mut dot = 0.0f64;
    for (&x, &y) in a.0.iter().zip(&b.0) {
        dot += f64::from(x) * f64::from(y);
    }
    Ok((dot / (a.norm() * b.norm())).clamp(-1.0, 1.0))
}

pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    fn dim(&self) -> usize;

    /// Short stable name recorded in store headers, e.g. `mock-256`.
    fn descriptor(&self) -> String;
}

/// Bag-of-tokens hashing embedder: lowercase, split on non-alphanumeric runs,
/// FNV-1a 64 each token into `digest % dim`, count, L2-normalize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockEmbedder {
    pub dim: usize,
}

impl Default for MockEmbedder {
    fn default() -> Self {
        MockEmbedder { dim: MOCK_DIM }
    }
}

impl MockEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "mock embedder dimension must be positive");
        MockEmbedder { dim }
    }

    fn counts(&self, text: &str) -> Vec<f64> {
        let mut counts = vec![0.0f64; self.dim];
        let mut token = String::new();
        let mut flush = |token: &mut String| {
            if !token.is_empty() {
                let bucket = (fnv1a64(token.as_bytes()) % self.dim as u64) as usize;
                counts[bucket] += 1.0;
                token.clear();
            }
        };
        for c in text.chars() {
            if c.is_alphanumeric() {
                token.extend(c.to_lowercase());
            } else {
                flush(&mut token);
            }
        }
        flush(&mut token);
        counts
    }
}

impl Embedder for MockEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let counts = self.counts(text);
        let norm = libm::sqrt(counts.iter().map(|c| c * c).sum());
        if norm == 0.0 {
            return Err(EmbedError::ZeroVector);
        }
        EmbeddingVector::new(counts.iter().map(|c| (c / norm) as f32).collect())
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn descriptor(&self) -> String {
        alloc::format!("mock-{}", self.dim)
    }
}
