//! Per-app flat vector store with exact metadata filtering.
//!
//! Exact scan over every record: apps top out at a few thousand units, and an
//! exact index is trivially comparable against a brute-force ranking.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::embed::{cosine, EmbeddingVector};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("embedding dimension mismatch: store has {expected}, record has {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("unfiltered search over an empty store")]
    EmptyStore,
    #[error("metadata filter has no fields set")]
    NoFilterFields,
    #[error("k must be at least 1")]
    InvalidK,
}

/// Identity of the app a store belongs to, plus the embedder that built it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub app_id: String,
    pub package_name: String,
    pub sha256: String,
    pub embedder: String,
    pub dim: usize,
}

/// What the record's embedding was computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSource {
    #[default]
    Description,
    RawCode,
}

/// Audit trail for one record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_path: String,
    pub raw_text: String,
    pub cleaned_text: String,
    /// Cache keys of the prompts that produced the cleaned text and description.
    pub prompt_digests: Vec<String>,
    /// Fallbacks taken while building the record, e.g. `cleanse_fallback`.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedRecord {
    pub record_id: String,
    pub code_text: String,
    pub description: String,
    pub method_name: String,
    pub class_name: String,
    pub param_count: usize,
    pub embedding: EmbeddingVector,
    #[serde(default)]
    pub index_source: IndexSource,
    #[serde(default)]
    pub provenance: Provenance,
}

impl IndexedRecord {
    pub fn location(&self) -> String {
        format!("{}.{}", self.class_name, self.method_name)
    }
}

/// The text whose embedding indexes a record: class and method lines followed
/// by the description (or the code itself for raw-code indexing).
pub fn index_text(class_name: &str, method_name: &str, body: &str) -> String {
    if body.is_empty() {
        format!("class: {class_name}\nmethod: {method_name}")
    } else {
        format!("class: {class_name}\nmethod: {method_name}\n{body}")
    }
}

pub fn index_text_for(record: &IndexedRecord) -> String {
    let body = match record.index_source {
        IndexSource::Description => &record.description,
        IndexSource::RawCode => &record.code_text,
    };
    index_text(&record.class_name, &record.method_name, body)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataFilter {
    pub method_name: Option<String>,
    pub class_name: Option<String>,
    pub param_count: Option<usize>,
}

impl MetadataFilter {
    pub fn method(method: impl Into<String>) -> Self {
        MetadataFilter { method_name: Some(method.into()), ..Default::default() }
    }

    pub fn class(mut self, class: impl Into<String>) -> Self {
        self.class_name = Some(class.into());
        self
    }

    pub fn params(mut self, count: usize) -> Self {
        self.param_count = Some(count);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.method_name.is_none() && self.class_name.is_none() && self.param_count.is_none()
    }

    /// Exact, case-sensitive match on every field that is set.
    pub fn matches(&self, r: &IndexedRecord) -> bool {
        self.method_name.as_ref().is_none_or(|m| *m == r.method_name)
            && self.class_name.as_ref().is_none_or(|c| *c == r.class_name)
            && self.param_count.is_none_or(|p| p == r.param_count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub record_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Descending score, then ascending id.
fn ranking(a: &(f64, &str), b: &(f64, &str)) -> Ordering {
    b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(b.1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    meta: StoreMeta,
    records: BTreeMap<String, IndexedRecord>,
}

impl VectorStore {
    pub fn new(meta: StoreMeta) -> Self {
        VectorStore { meta, records: BTreeMap::new() }
    }

    pub fn meta(&self) -> &StoreMeta {
        &self.meta
    }

    pub fn dim(&self) -> usize {
        self.meta.dim
    }

    pub fn count(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&IndexedRecord> {
        self.records.get(id)
    }

    /// Records in ascending id order.
    pub fn records(&self) -> impl Iterator<Item = &IndexedRecord> {
        self.records.values()
    }

    /// Inserts or replaces by `record_id`.
    pub fn upsert(&mut self, record: IndexedRecord) -> Result<String, StoreError> {
        if record.embedding.dim() != self.meta.dim {
            return Err(StoreError::DimMismatch {
                expected: self.meta.dim,
                actual: record.embedding.dim(),
            });
        }
        let id = record.record_id.clone();
        self.records.insert(id.clone(), record);
        Ok(id)
    }

    /// Top-`k` records by cosine similarity, optionally restricted to records
    /// matching `filter`. Returns exactly `min(k, candidates)` results.
    pub fn search(
        &self,
        query: &EmbeddingVector,
        k: usize,
        filter: Option<&MetadataFilter>,
    ) -> Result<Vec<RetrievalResult>, StoreError> {
        if k == 0 {
            return Err(StoreError::InvalidK);
        }
        if query.dim() != self.meta.dim {
            return Err(StoreError::DimMismatch { expected: self.meta.dim, actual: query.dim() });
        }
        if let Some(f) = filter {
            if f.is_empty() {
                return Err(StoreError::NoFilterFields);
            }
        } else if self.records.is_empty() {
            return Err(StoreError::EmptyStore);
        }

        let mut scored: Vec<(f64, &str)> = self
            .records
            .values()
            .filter(|r| filter.is_none_or(|f| f.matches(r)))
            .map(|r| {
                let score = cosine(query, &r.embedding).expect("dims checked on upsert");
                (score, r.record_id.as_str())
            })
            .collect();
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, ranking);
            scored.truncate(k);
        }
        scored.sort_unstable_by(ranking);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (score, id))| RetrievalResult { record_id: id.to_string(), score, rank: i + 1 })
            .collect())
    }

    pub fn filter_candidates(&self, filter: &MetadataFilter) -> Result<BTreeSet<String>, StoreError> {
        if filter.is_empty() {
            return Err(StoreError::NoFilterFields);
        }
        Ok(self.records.values().filter(|r| filter.matches(r)).map(|r| r.record_id.clone()).collect())
    }

    /// Maps a reported code path such as `com.a.B.m(String)` or `com.a.B$C.m`
    /// to a stored record, if one implements it.
    pub fn resolve_code_path(&self, path: &str) -> Option<&IndexedRecord> {
        let path = path.trim().trim_start_matches("- ").trim();
        let (head, params) = match path.find('(') {
            Some(i) => (&path[..i], Some(path[i + 1..].trim_end_matches(')'))),
            None => (path, None),
        };
        let (class, method) = head.trim().rsplit_once(['.', '#'])?;
        let param_count = params.map(|p| {
            if p.trim().is_empty() {
                0
            } else {
                p.split(',').count()
            }
        });
        let normalize = |s: &str| s.replace('$', ".");
        let class_norm = normalize(class);
        let mut matches: Vec<&IndexedRecord> = self
            .records
            .values()
            .filter(|r| r.method_name == method)
            .filter(|r| r.class_name == class || normalize(&r.class_name) == class_norm)
            .collect();
        if let Some(n) = param_count {
            if matches.iter().any(|r| r.param_count == n) {
                matches.retain(|r| r.param_count == n);
            }
        }
        matches.into_iter().next()
    }
}
