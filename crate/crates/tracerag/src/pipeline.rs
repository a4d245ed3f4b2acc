//! Ingestion of one app into its own vector store.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use tracerag_core::embed::{EmbedError, Embedder};
use tracerag_core::index::{build_record, PipelineConfig};
use tracerag_core::java::{whole_file_unit, CodeUnit, SourceFile};
use tracerag_core::llm::PromptRunner;
use tracerag_core::store::{IndexedRecord, StoreError, StoreMeta, VectorStore};

use crate::source::{split_files, AppMeta};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("no Java files to ingest")]
    EmptyTree,
    #[error("embedding {unit} failed: {source}")]
    Embed { unit: String, source: EmbedError },
    #[error("store write failed: {0}")]
    StoreWrite(#[from] StoreError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestionStats {
    pub files: usize,
    pub units: usize,
    pub records: usize,
    pub cleaned: usize,
    pub described: usize,
    pub cleanse_fallbacks: usize,
    pub describe_fallbacks: usize,
    pub oversize: usize,
    pub warnings: Vec<String>,
}

/// Units to index: split methods, or one unit per file when splitting is off.
pub fn units_for(files: &[SourceFile], cfg: &PipelineConfig, warnings: &mut Vec<String>) -> Vec<CodeUnit> {
    if cfg.split_and_clean {
        split_files(files, warnings)
    } else {
        files.iter().map(whole_file_unit).collect()
    }
}

/// Maps `f` over `items` on up to `workers` threads; output keeps input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("slot lock")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("slot lock").into_iter().map(|r| r.expect("every slot filled")).collect()
}

pub fn ingest_app(
    meta: &AppMeta,
    files: &[SourceFile],
    cfg: &PipelineConfig,
    llm: &PromptRunner<'_>,
    embedder: &dyn Embedder,
    concurrency: usize,
) -> Result<(VectorStore, IngestionStats), IngestError> {
    if files.is_empty() {
        return Err(IngestError::EmptyTree);
    }
    let mut stats = IngestionStats { files: files.len(), ..Default::default() };
    let units = units_for(files, cfg, &mut stats.warnings);
    stats.units = units.len();
    tracing::info!(app = %meta.app_id, files = stats.files, units = stats.units, "indexing");

    let results: Vec<Result<IndexedRecord, EmbedError>> =
        parallel_map(&units, concurrency, |u| build_record(llm, embedder, u, cfg));

    let mut store = VectorStore::new(StoreMeta {
        app_id: meta.app_id.clone(),
        package_name: meta.package_name.clone(),
        sha256: meta.sha256.clone(),
        embedder: embedder.descriptor(),
        dim: embedder.dim(),
    });
    for (unit, result) in units.iter().zip(results) {
        let rec = result.map_err(|source| IngestError::Embed { unit: unit.location(), source })?;
        let flags = &rec.provenance.flags;
        let has = |f: &str| flags.iter().any(|x| x == f);
        if has("oversize") {
            stats.oversize += 1;
        }
        if has("cleanse_fallback") {
            stats.cleanse_fallbacks += 1;
            stats.warnings.push(format!("{}: cleaning failed; raw text kept", unit.location()));
        } else if cfg.split_and_clean {
            stats.cleaned += 1;
        }
        if has("describe_fallback") {
            stats.describe_fallbacks += 1;
            stats.warnings.push(format!("{}: description failed; code head used", unit.location()));
        } else if cfg.use_descriptions {
            stats.described += 1;
        }
        if store.get(&rec.record_id).is_some() {
            stats.warnings.push(format!("duplicate unit id {} for {}", rec.record_id, unit.location()));
        }
        store.upsert(rec)?;
    }
    stats.records = store.count();
    Ok((store, stats))
}
