//! Reading a decompiled app: Java sources, package name and digest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use tracerag_core::java::{extract_methods, CodeUnit, SourceFile};

use crate::storefile::hex_digest;

#[derive(Debug, thiserror::Error)]
pub enum SourceError {
    #[error("source root {0} does not exist")]
    RootNotFound(PathBuf),
    #[error("no .java files under {0}")]
    EmptyTree(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid sha256 `{0}` (expected 64 lowercase hex characters)")]
    BadSha256(String),
    #[error("decompiler failed: {0}")]
    Decompiler(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppMeta {
    pub app_id: String,
    pub package_name: String,
    pub sha256: String,
    pub source_root: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct SourceTree {
    /// Sorted by relative path.
    pub files: Vec<SourceFile>,
    pub warnings: Vec<String>,
}

/// Every `.java` file under `root`, paths relative and `/`-separated, in
/// lexicographic order. Unreadable or empty files become warnings.
pub fn read_source_tree(root: &Path) -> Result<SourceTree, SourceError> {
    if !root.is_dir() {
        return Err(SourceError::RootNotFound(root.to_path_buf()));
    }
    let mut paths = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(false) {
        let entry = entry.map_err(|e| SourceError::Io {
            path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
            source: e.into(),
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "java") {
            let rel = entry.path().strip_prefix(root).expect("walkdir stays under root");
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            paths.push((rel, entry.path().to_path_buf()));
        }
    }
    if paths.is_empty() {
        return Err(SourceError::EmptyTree(root.to_path_buf()));
    }
    paths.sort();
    let mut tree = SourceTree::default();
    for (rel, abs) in paths {
        match fs::read(&abs) {
            Err(e) => tree.warnings.push(format!("{rel}: unreadable ({e})")),
            Ok(bytes) => match String::from_utf8(bytes) {
                Err(_) => tree.warnings.push(format!("{rel}: not valid UTF-8; skipped")),
                Ok(text) if text.trim().is_empty() => tree.warnings.push(format!("{rel}: empty; skipped")),
                Ok(text) => tree.files.push(SourceFile::new(rel, text)),
            },
        }
    }
    Ok(tree)
}

/// Method units of every file, in path order. Files that fail to split are
/// skipped with a warning.
pub fn split_files(files: &[SourceFile], warnings: &mut Vec<String>) -> Vec<CodeUnit> {
    let mut units = Vec::new();
    for f in files {
        match extract_methods(f) {
            Ok(u) => units.extend(u),
            Err(e) => warnings.push(format!("{}: {e}; no units emitted", f.path)),
        }
    }
    units
}

pub fn parse_source_tree(root: &Path) -> Result<(Vec<CodeUnit>, Vec<String>), SourceError> {
    let mut tree = read_source_tree(root)?;
    let units = split_files(&tree.files, &mut tree.warnings);
    Ok((units, tree.warnings))
}

/// `package="..."` from the first AndroidManifest.xml found under `root`.
pub fn manifest_package(root: &Path) -> Option<String> {
    let manifest = walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .find(|e| e.file_name() == "AndroidManifest.xml")?;
    let text = fs::read_to_string(manifest.path()).ok()?;
    let start = text.find("package=\"")? + "package=\"".len();
    let end = text[start..].find('"')?;
    Some(text[start..start + end].to_string()).filter(|p| !p.is_empty())
}

/// Most frequent `package` declaration; ties go to the lexicographically smallest.
pub fn dominant_package(files: &[SourceFile]) -> Option<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for f in files {
        if let Some(line) = f.text.lines().map(str::trim).find(|l| l.starts_with("package ")) {
            let name = line["package ".len()..].trim_end_matches(';').trim();
            *counts.entry(name.to_string()).or_default() += 1;
        }
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|(_, n)| *n == best).map(|(p, _)| p)
}

/// Digest of the source tree itself, used when no APK is available.
pub fn tree_digest(files: &[SourceFile]) -> String {
    let mut buf = Vec::new();
    for f in files {
        buf.extend_from_slice(f.path.as_bytes());
        buf.push(0);
        buf.extend_from_slice(&(f.text.len() as u64).to_le_bytes());
        buf.extend_from_slice(f.text.as_bytes());
    }
    hex_digest(&buf)
}

pub fn file_sha256(path: &Path) -> Result<String, SourceError> {
    fs::read(path)
        .map(|b| hex_digest(&b))
        .map_err(|source| SourceError::Io { path: path.to_path_buf(), source })
}

pub fn validate_sha256(s: &str) -> Result<String, SourceError> {
    if s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
        Ok(s.to_string())
    } else {
        Err(SourceError::BadSha256(s.to_string()))
    }
}

/// Runs `template` through `sh -c` with `{apk}` and `{out}` substituted.
pub fn run_decompiler(template: &str, apk: &Path, out: &Path) -> Result<(), SourceError> {
    fs::create_dir_all(out).map_err(|source| SourceError::Io { path: out.to_path_buf(), source })?;
    let cmd = template.replace("{apk}", &apk.display().to_string()).replace("{out}", &out.display().to_string());
    tracing::info!(command = %cmd, "running decompiler");
    let status = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .status()
        .map_err(|e| SourceError::Decompiler(e.to_string()))?;
    if status.success() {
        Ok(())
    } else {
        Err(SourceError::Decompiler(format!("`{cmd}` exited with {status}")))
    }
}
