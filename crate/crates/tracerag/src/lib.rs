//! Filesystem, network and command-line side of the tracerag pipeline.
//!
//! The pure logic lives in `tracerag_core`; this crate adds the LLM gateway
//! with its record/replay cache, HTTP and scripted providers, store files,
//! source-tree ingestion, evaluation IO, layered configuration and the CLI.

pub mod cli;
pub mod config;
pub mod embeddings;
pub mod eval;
pub mod gateway;
pub mod pipeline;
pub mod providers;
pub mod source;
pub mod storefile;

pub use tracerag_core as core;
