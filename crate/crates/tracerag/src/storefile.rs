//! Store persistence: one JSON header line, then one JSON line per record in
//! ascending id order. The header's checksum is SHA-256 over the record lines.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracerag_core::store::{IndexedRecord, StoreMeta, VectorStore};

pub const STORE_FORMAT: &str = "tracerag-store";
pub const STORE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreFileError {
    #[error("cannot access store file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corrupt store {path}: {reason}")]
    CorruptStore { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreHeader {
    pub format: String,
    pub version: u32,
    pub app_id: String,
    pub package_name: String,
    pub sha256: String,
    pub embedder: String,
    pub dim: usize,
    pub count: usize,
    pub checksum: String,
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn encode_store(store: &VectorStore) -> String {
    let mut body = String::new();
    for r in store.records() {
        body.push_str(&serde_json::to_string(r).expect("records serialize"));
        body.push('\n');
    }
    let m = store.meta();
    let header = StoreHeader {
        format: STORE_FORMAT.into(),
        version: STORE_VERSION,
        app_id: m.app_id.clone(),
        package_name: m.package_name.clone(),
        sha256: m.sha256.clone(),
        embedder: m.embedder.clone(),
        dim: m.dim,
        count: store.count(),
        checksum: hex_digest(body.as_bytes()),
    };
    format!("{}\n{body}", serde_json::to_string(&header).expect("header serializes"))
}

pub fn decode_store(text: &str) -> Result<VectorStore, String> {
    let (head, body) = text.split_once('\n').ok_or("missing header line")?;
    let header: StoreHeader = serde_json::from_str(head).map_err(|e| format!("bad header: {e}"))?;
    if header.format != STORE_FORMAT || header.version != STORE_VERSION {
        return Err(format!("unsupported format {} v{}", header.format, header.version));
    }
    if hex_digest(body.as_bytes()) != header.checksum {
        return Err("checksum mismatch".into());
    }
    let mut store = VectorStore::new(StoreMeta {
        app_id: header.app_id,
        package_name: header.package_name,
        sha256: header.sha256,
        embedder: header.embedder,
        dim: header.dim,
    });
    for (i, line) in body.lines().enumerate() {
        let rec: IndexedRecord = serde_json::from_str(line).map_err(|e| format!("record {}: {e}", i + 1))?;
        store.upsert(rec).map_err(|e| format!("record {}: {e}", i + 1))?;
    }
    if store.count() != header.count {
        return Err(format!("header count {} but {} records", header.count, store.count()));
    }
    Ok(store)
}

pub fn save_store(store: &VectorStore, path: &Path) -> Result<(), StoreFileError> {
    let io = |source| StoreFileError::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(encode_store(store).as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)
}

pub fn load_store(path: &Path) -> Result<VectorStore, StoreFileError> {
    let text = fs::read_to_string(path)
        .map_err(|source| StoreFileError::Io { path: path.display().to_string(), source })?;
    decode_store(&text).map_err(|reason| StoreFileError::CorruptStore { path: path.display().to_string(), reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tracerag_core::embed::{Embedder, MockEmbedder};
    use tracerag_core::store::MetadataFilter;

    fn store(n: usize) -> VectorStore {
        let e = MockEmbedder::default();
        let mut s = VectorStore::new(StoreMeta {
            app_id: "app".into(),
            package_name: "com.x".into(),
            sha256: "a".repeat(64),
            embedder: e.descriptor(),
            dim: e.dim(),
        });
        for i in 0..n {
            let description = format!("method {i} sends data {}", i % 3);
            s.upsert(IndexedRecord {
                record_id: format!("{i:04}"),
                code_text: format!("void m{i}() {{}}"),
                embedding: e.embed(&description).unwrap(),
                description,
                method_name: format!("m{}", i % 4),
                class_name: "com.x.A".into(),
                param_count: i % 2,
                index_source: Default::default(),
                provenance: Default::default(),
            })
            .unwrap();
        }
        s
    }

    #[test]
    fn round_trip_preserves_search() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let s = store(10);
        save_store(&s, &path).unwrap();
        let t = load_store(&path).unwrap();
        assert_eq!(s, t);
        let q = MockEmbedder::default().embed("sends data").unwrap();
        assert_eq!(s.search(&q, 5, None).unwrap(), t.search(&q, 5, None).unwrap());
        let f = MetadataFilter::method("m1");
        assert_eq!(s.filter_candidates(&f).unwrap(), t.filter_candidates(&f).unwrap());
        assert_eq!(encode_store(&t), fs::read_to_string(&path).unwrap());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let text = encode_store(&store(4));
        let cut = &text[..text.len() - 20];
        assert!(decode_store(cut).is_err());
        assert!(decode_store("").is_err());
        let header_only = text.lines().next().unwrap();
        assert!(decode_store(header_only).is_err());
    }

    #[test]
    fn header_dim_mismatch_is_corrupt() {
        let text = encode_store(&store(3));
        let bad = text.replacen("\"dim\":256", "\"dim\":128", 1);
        assert_ne!(bad, text);
        let err = decode_store(&bad).unwrap_err();
        assert!(err.contains("dimension"), "{err}");
    }

    #[test]
    fn tampered_record_fails_checksum() {
        let text = encode_store(&store(3));
        let bad = text.replacen("com.x.A", "com.x.B", 1);
        assert_eq!(decode_store(&bad).unwrap_err(), "checksum mismatch");
    }

    #[test]
    fn load_error_variant() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        fs::write(&path, "garbage").unwrap();
        assert!(matches!(load_store(&path), Err(StoreFileError::CorruptStore { .. })));
    }
}
