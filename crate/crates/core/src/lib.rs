//! Core of the tracerag pipeline.
//!
//! Everything in this crate is a pure function of its inputs and only needs
//! `alloc`: the tolerant Java method splitter, prompt templates and the
//! chat-model abstraction, the mock embedder and flat cosine store, the
//! bounded multi-turn analysis loop, report assembly and evaluation metrics.
//!
//! Anything that touches the filesystem, the network or a clock lives in the
//! `tracerag` companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod embed;
pub mod hash;
pub mod index;
pub mod java;
pub mod llm;
pub mod metrics;
pub mod report;
pub mod store;

pub use analysis::{BehaviorCategory, QueryId, QuerySpec};
pub use embed::{cosine, EmbeddingVector, Embedder, MockEmbedder};
pub use java::{CodeUnit, SourceFile};
pub use llm::{ChatModel, CompletionRequest, CompletionResponse, Role};
pub use store::{IndexedRecord, MetadataFilter, RetrievalResult, VectorStore};
