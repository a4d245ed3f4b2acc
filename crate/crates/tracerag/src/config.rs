//! Layered configuration: defaults, then the TOML file, then environment
//! variables, then command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use tracerag_core::analysis::AnalysisConfig;
use tracerag_core::index::PipelineConfig;
use tracerag_core::java::DEFAULT_OVERSIZE_CHARS;
use tracerag_core::llm::{Role, TemplateSet};

use crate::gateway::LlmMode;

pub const CONFIG_ENV: &str = "TRACERAG_CONFIG";
pub const API_KEY_ENV: &str = "TRACERAG_API_KEY";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {0}: {1}")]
    Read(PathBuf, std::io::Error),
    #[error("invalid config file {0}: {1}")]
    Parse(PathBuf, String),
    #[error("invalid value for {key}: {message}")]
    Invalid { key: String, message: String },
    #[error("{0}")]
    Missing(String),
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Http,
    Scripted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingProvider {
    Mock,
    #[default]
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub llm_mode: LlmMode,
    pub llm_provider: ProviderKind,
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key; the key itself is never stored.
    pub api_key_env: String,
    pub cache: Option<PathBuf>,
    pub script: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub concurrency: usize,
    pub retry_base_ms: u64,
    pub timeout_secs: u64,
    pub embedding_provider: EmbeddingProvider,
    pub embedding_model: String,
    pub embedding_base_url: Option<String>,
    pub embedding_dim: usize,
    pub max_turns: usize,
    pub top_k: usize,
    pub single_turn: bool,
    pub split_and_clean: bool,
    pub use_descriptions: bool,
    pub oversize_char_cap: usize,
    pub output_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            llm_mode: LlmMode::Live,
            llm_provider: ProviderKind::Http,
            base_url: "https://api.openai.com/v1".into(),
            model: "o3-mini".into(),
            api_key_env: API_KEY_ENV.into(),
            cache: None,
            script: None,
            templates_dir: None,
            concurrency: 4,
            retry_base_ms: 500,
            timeout_secs: 300,
            embedding_provider: EmbeddingProvider::Remote,
            embedding_model: "text-embedding-ada-002".into(),
            embedding_base_url: None,
            embedding_dim: 1536,
            max_turns: 5,
            top_k: 5,
            single_turn: false,
            split_and_clean: true,
            use_descriptions: true,
            oversize_char_cap: DEFAULT_OVERSIZE_CHARS,
            output_dir: PathBuf::from("tracerag-out"),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LlmLayer {
    mode: Option<LlmMode>,
    provider: Option<ProviderKind>,
    base_url: Option<String>,
    model: Option<String>,
    api_key_env: Option<String>,
    cache: Option<PathBuf>,
    script: Option<PathBuf>,
    templates_dir: Option<PathBuf>,
    concurrency: Option<usize>,
    retry_base_ms: Option<u64>,
    timeout_secs: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EmbeddingLayer {
    provider: Option<EmbeddingProvider>,
    model: Option<String>,
    base_url: Option<String>,
    dim: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AnalysisLayer {
    max_turns: Option<usize>,
    top_k: Option<usize>,
    single_turn: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PipelineLayer {
    split_and_clean: Option<bool>,
    use_descriptions: Option<bool>,
    oversize_char_cap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileLayer {
    output_dir: Option<PathBuf>,
    llm: LlmLayer,
    embedding: EmbeddingLayer,
    analysis: AnalysisLayer,
    pipeline: PipelineLayer,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn parse_env<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse().map_err(|e: T::Err| invalid(key, e.to_string()))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => Err(invalid(key, format!("`{other}` is not a boolean"))),
    }
}

impl Config {
    /// Applies a TOML document. Relative paths resolve against `base`.
    pub fn apply_toml(&mut self, text: &str, origin: &Path) -> Result<(), ConfigError> {
        let f: FileLayer = toml::from_str(text).map_err(|e| ConfigError::Parse(origin.into(), e.to_string()))?;
        let base = origin.parent().unwrap_or(Path::new(""));
        let rel = |p: Option<PathBuf>| p.map(|p| if p.is_relative() { base.join(p) } else { p });
        set(&mut self.output_dir, rel(f.output_dir));
        set(&mut self.llm_mode, f.llm.mode);
        set(&mut self.llm_provider, f.llm.provider);
        set(&mut self.base_url, f.llm.base_url);
        set(&mut self.model, f.llm.model);
        set(&mut self.api_key_env, f.llm.api_key_env);
        self.cache = rel(f.llm.cache).or(self.cache.take());
        self.script = rel(f.llm.script).or(self.script.take());
        self.templates_dir = rel(f.llm.templates_dir).or(self.templates_dir.take());
        set(&mut self.concurrency, f.llm.concurrency);
        set(&mut self.retry_base_ms, f.llm.retry_base_ms);
        set(&mut self.timeout_secs, f.llm.timeout_secs);
        set(&mut self.embedding_provider, f.embedding.provider);
        set(&mut self.embedding_model, f.embedding.model);
        self.embedding_base_url = f.embedding.base_url.or(self.embedding_base_url.take());
        set(&mut self.embedding_dim, f.embedding.dim);
        set(&mut self.max_turns, f.analysis.max_turns);
        set(&mut self.top_k, f.analysis.top_k);
        set(&mut self.single_turn, f.analysis.single_turn);
        set(&mut self.split_and_clean, f.pipeline.split_and_clean);
        set(&mut self.use_descriptions, f.pipeline.use_descriptions);
        set(&mut self.oversize_char_cap, f.pipeline.oversize_char_cap);
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.into(), e))?;
        self.apply_toml(&text, path)
    }

    /// Applies `TRACERAG_*` variables obtained through `get`.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        let s = |k: &str| get(k).filter(|v| !v.is_empty());
        if let Some(v) = s("TRACERAG_LLM_MODE") {
            self.llm_mode = parse_env("TRACERAG_LLM_MODE", &v)?;
        }
        if let Some(v) = s("TRACERAG_LLM_PROVIDER") {
            self.llm_provider = ProviderKind::from_str(&v, true).map_err(|e| invalid("TRACERAG_LLM_PROVIDER", e))?;
        }
        set(&mut self.base_url, s("TRACERAG_BASE_URL"));
        set(&mut self.model, s("TRACERAG_MODEL"));
        if let Some(v) = s("TRACERAG_CACHE") {
            self.cache = Some(v.into());
        }
        if let Some(v) = s("TRACERAG_SCRIPT") {
            self.script = Some(v.into());
        }
        if let Some(v) = s("TRACERAG_CONCURRENCY") {
            self.concurrency = parse_env("TRACERAG_CONCURRENCY", &v)?;
        }
        if let Some(v) = s("TRACERAG_EMBEDDING_PROVIDER") {
            self.embedding_provider =
                EmbeddingProvider::from_str(&v, true).map_err(|e| invalid("TRACERAG_EMBEDDING_PROVIDER", e))?;
        }
        set(&mut self.embedding_model, s("TRACERAG_EMBEDDING_MODEL"));
        if let Some(v) = s("TRACERAG_MAX_TURNS") {
            self.max_turns = parse_env("TRACERAG_MAX_TURNS", &v)?;
        }
        if let Some(v) = s("TRACERAG_TOP_K") {
            self.top_k = parse_env("TRACERAG_TOP_K", &v)?;
        }
        if let Some(v) = s("TRACERAG_SINGLE_TURN") {
            self.single_turn = parse_bool("TRACERAG_SINGLE_TURN", &v)?;
        }
        if let Some(v) = s("TRACERAG_OUTPUT_DIR") {
            self.output_dir = v.into();
        }
        Ok(())
    }

    /// File (from `explicit` or `TRACERAG_CONFIG`) then environment.
    pub fn layered(explicit: Option<&Path>, get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let path = explicit.map(Path::to_path_buf).or_else(|| get(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        if let Some(p) = path {
            cfg.apply_file(&p)?;
        }
        cfg.apply_env(get)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.top_k < 1 {
            return Err(invalid("top_k", "must be at least 1"));
        }
        if self.max_turns < 1 {
            return Err(invalid("max_turns", "must be at least 1"));
        }
        if self.concurrency < 1 {
            return Err(invalid("concurrency", "must be at least 1"));
        }
        if self.oversize_char_cap < 1 {
            return Err(invalid("oversize_char_cap", "must be at least 1"));
        }
        match self.llm_mode {
            LlmMode::Replay => match &self.cache {
                None => return Err(ConfigError::Missing("replay mode requires a cache path".into())),
                Some(p) if !p.is_file() => {
                    return Err(ConfigError::Missing(format!("replay cache {} does not exist", p.display())))
                }
                _ => {}
            },
            LlmMode::Record if self.cache.is_none() => {
                return Err(ConfigError::Missing("record mode requires a cache path".into()))
            }
            _ => {}
        }
        if self.llm_mode != LlmMode::Replay && self.llm_provider == ProviderKind::Scripted && self.script.is_none() {
            return Err(ConfigError::Missing("the scripted provider requires --script".into()));
        }
        Ok(())
    }

    pub fn needs_api_key(&self, embedding_remote: bool) -> bool {
        (self.llm_mode != LlmMode::Replay && self.llm_provider == ProviderKind::Http) || embedding_remote
    }

    pub fn api_key(&self, get: impl Fn(&str) -> Option<String>) -> Result<String, ConfigError> {
        get(&self.api_key_env)
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| ConfigError::Missing(format!("API key not set (environment variable {})", self.api_key_env)))
    }

    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig { max_turns: self.max_turns, top_k: self.top_k, single_turn: self.single_turn }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            split_and_clean: self.split_and_clean,
            use_descriptions: self.use_descriptions,
            oversize_char_cap: self.oversize_char_cap,
        }
    }

    /// Bundled templates, with any `<stem>.txt` in `templates_dir` replacing its role's.
    pub fn templates(&self) -> Result<TemplateSet, ConfigError> {
        let mut set = TemplateSet::default();
        if let Some(dir) = &self.templates_dir {
            for role in Role::ALL {
                let path = dir.join(format!("{}.txt", role.template_stem()));
                if path.is_file() {
                    let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Read(path.clone(), e))?;
                    let t = tracerag_core::llm::PromptTemplate::new(role, text)
                        .map_err(|e| invalid(&path.display().to_string(), e.to_string()))?;
                    set = set.with_template(t);
                }
            }
        }
        Ok(set)
    }
}
