//! Turns one code unit into one indexed record: clean, describe, embed.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embed::{EmbedError, Embedder};
use crate::java::{CodeUnit, DEFAULT_OVERSIZE_CHARS, WHOLE_FILE_METHOD};
use crate::llm::{PromptRunner, Role};
use crate::store::{index_text, IndexSource, IndexedRecord, Provenance};

pub const TRUNCATION_MARKER: &str = "\n[TRUNCATED]";
pub const FALLBACK_DESCRIPTION_CHARS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub split_and_clean: bool,
    pub use_descriptions: bool,
    pub oversize_char_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { split_and_clean: true, use_descriptions: true, oversize_char_cap: DEFAULT_OVERSIZE_CHARS }
    }
}

/// Cuts `text` to `cap` characters and appends the marker when it was longer.
pub fn truncate_for_prompt(text: &str, cap: usize) -> String {
    match text.char_indices().nth(cap) {
        None => text.to_string(),
        Some((i, _)) => format!("{}{}", &text[..i], TRUNCATION_MARKER),
    }
}

/// The body of the first fenced block, or the whole reply when unfenced.
pub fn strip_fence(reply: &str) -> &str {
    let Some(open) = reply.find("```") else { return reply.trim() };
    let after = &reply[open + 3..];
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => body[..close].trim_end(),
        None => body.trim_end(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cleaned {
    pub text: String,
    pub digest: String,
    pub fallback: bool,
}

/// Cleanser output, or the original text if the call fails or comes back empty.
pub fn clean_unit(llm: &PromptRunner<'_>, unit: &CodeUnit, cap: usize) -> Cleaned {
    let original = unit.standalone_text();
    let code = truncate_for_prompt(&original, cap);
    let (digest, reply) = llm.ask_keyed(Role::Cleanser, &[("code", &code)]);
    match reply {
        Ok(r) if !strip_fence(&r.text).trim().is_empty() => {
            Cleaned { text: strip_fence(&r.text).to_string(), digest, fallback: false }
        }
        _ => Cleaned { text: original, digest, fallback: true },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Described {
    pub text: String,
    pub digests: Vec<String>,
    pub fallback: bool,
}

/// Describer output with one retry; falls back to the head of the code.
pub fn describe_unit(llm: &PromptRunner<'_>, cleaned: &str, unit: &CodeUnit, cap: usize) -> Described {
    let scope = if unit.method_name == WHOLE_FILE_METHOD { "Java source file" } else { "Java method" };
    let code = truncate_for_prompt(cleaned, cap);
    let vars =
        [("scope", scope), ("class", unit.class_name.as_str()), ("method", unit.method_name.as_str()), ("code", &code)];
    let mut digests = Vec::new();
    for _ in 0..2 {
        let (digest, reply) = llm.ask_keyed(Role::Describer, &vars);
        if digests.last() != Some(&digest) {
            digests.push(digest);
        }
        if let Ok(r) = reply {
            if !r.text.trim().is_empty() {
                return Described { text: r.text.trim().to_string(), digests, fallback: false };
            }
        }
    }
    let head: String = cleaned.chars().take(FALLBACK_DESCRIPTION_CHARS).collect();
    Described { text: head, digests, fallback: true }
}

/// Builds the record for `unit`. Only embedding failures are errors; LLM
/// failures fall back and leave a flag in the provenance.
pub fn build_record(
    llm: &PromptRunner<'_>,
    embedder: &dyn Embedder,
    unit: &CodeUnit,
    cfg: &PipelineConfig,
) -> Result<IndexedRecord, EmbedError> {
    let mut provenance = Provenance {
        source_path: unit.source_path.clone(),
        raw_text: unit.standalone_text(),
        ..Default::default()
    };
    if unit.is_oversize(cfg.oversize_char_cap) {
        provenance.flags.push("oversize".to_string());
    }

    let code_text = if cfg.split_and_clean {
        let c = clean_unit(llm, unit, cfg.oversize_char_cap);
        provenance.prompt_digests.push(c.digest);
        if c.fallback {
            provenance.flags.push("cleanse_fallback".to_string());
        }
        c.text
    } else {
        unit.standalone_text()
    };
    provenance.cleaned_text = code_text.clone();

    let (description, index_source) = if cfg.use_descriptions {
        let d = describe_unit(llm, &code_text, unit, cfg.oversize_char_cap);
        provenance.prompt_digests.extend(d.digests);
        if d.fallback {
            provenance.flags.push("describe_fallback".to_string());
        }
        (d.text, IndexSource::Description)
    } else {
        (String::new(), IndexSource::RawCode)
    };

    let body = match index_source {
        IndexSource::Description => &description,
        IndexSource::RawCode => &code_text,
    };
    let embedding = embedder.embed(&index_text(&unit.class_name, &unit.method_name, body))?;
    Ok(IndexedRecord {
        record_id: unit.unit_id.clone(),
        code_text,
        description,
        method_name: unit.method_name.clone(),
        class_name: unit.class_name.clone(),
        param_count: unit.param_count,
        embedding,
        index_source,
        provenance,
    })
}
