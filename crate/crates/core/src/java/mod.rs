//! Method-level splitting of decompiled Java sources.
//!
//! A single pass tokenizer plus brace matching, rather than a full grammar:
//! decompiler output is often not valid Java, and a file we cannot make sense
//! of should cost one warning instead of the whole run.
//!
//! Every method or constructor with a body becomes a [`CodeUnit`], at any class
//! nesting depth. Anonymous and local classes stay inline in the enclosing
//! method's body. Initializer blocks and bodyless (abstract, native, interface)
//! declarations are not units.

mod extract;
mod lexer;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::hash::Fnv1a;

pub use extract::{build_context_header, extract_methods, whole_file_unit, ClassDecl};
pub use lexer::{tokenize, Token, TokenKind};

/// Method name used for whole-file units when splitting is disabled.
pub const WHOLE_FILE_METHOD: &str = "<file>";

/// Units whose body exceeds this many characters are flagged oversize.
pub const DEFAULT_OVERSIZE_CHARS: usize = 8000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    /// Path relative to the app root, `/`-separated.
    pub path: String,
    pub text: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceFile { path: path.into(), text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeUnit {
    pub unit_id: String,
    /// Fully qualified where a package is declared; nested classes joined with `$`.
    pub class_name: String,
    pub method_name: String,
    pub param_count: usize,
    pub param_types: Vec<String>,
    pub context_header: String,
    pub body_text: String,
    pub source_path: String,
    pub byte_span: (usize, usize),
}

impl CodeUnit {
    pub fn is_oversize(&self, cap_chars: usize) -> bool {
        self.body_text.chars().count() > cap_chars
    }

    /// `class.method(T1, T2)`, the path shown to reviewers and analyzers.
    pub fn location(&self) -> String {
        format!("{}.{}({})", self.class_name, self.method_name, self.param_types.join(", "))
    }

    /// The unit as a small standalone file: context header, then the method.
    pub fn standalone_text(&self) -> String {
        if self.context_header.is_empty() {
            self.body_text.clone()
        } else {
            format!("{}\n\n{}\n", self.context_header, self.body_text)
        }
    }
}

/// Deterministic identifier over the fields that make a unit unique.
pub fn unit_id(
    source_path: &str,
    class_name: &str,
    method_name: &str,
    param_types: &[String],
    byte_span: (usize, usize),
) -> String {
    let mut h = Fnv1a::new();
    for part in [source_path, class_name, method_name] {
        h.write(part.as_bytes());
        h.write(&[0]);
    }
    for t in param_types {
        h.write(t.as_bytes());
        h.write(&[0x1f]);
    }
    h.write(&[0]);
    h.write(&(byte_span.0 as u64).to_le_bytes());
    h.write(&(byte_span.1 as u64).to_le_bytes());
    format!("{:016x}", h.finish())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SplitError {
    #[error("unbalanced braces near byte {offset}")]
    UnbalancedBraces { offset: usize },
    #[error("unterminated comment or literal starting at byte {offset}")]
    UnterminatedLiteral { offset: usize },
}
