//! The Analyzer's terminal block and the QueryReviewer's reply grammar.
//!
//! ```text
//! VERDICT: malicious|benign|inconclusive
//! PATHS:
//! - com.example.Sender.send(String)
//! ```
//! or
//! ```text
//! FOLLOWUP: method=j class=b params=1
//! ```

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assessment {
    Malicious,
    Benign,
    Inconclusive,
}

impl Assessment {
    fn parse(s: &str) -> Assessment {
        let s = s.trim().trim_matches(|c: char| !c.is_alphabetic()).to_ascii_lowercase();
        match s.as_str() {
            "malicious" => Assessment::Malicious,
            "benign" => Assessment::Benign,
            _ => Assessment::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conclusion {
    pub finding: String,
    pub assessment: Assessment,
    pub code_paths: Vec<String>,
}

impl Conclusion {
    pub fn is_malicious(&self) -> bool {
        self.assessment == Assessment::Malicious
    }

    pub fn inconclusive(finding: impl Into<String>) -> Self {
        Conclusion { finding: finding.into(), assessment: Assessment::Inconclusive, code_paths: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FollowUpQuery {
    pub method_name: String,
    pub class_name: String,
    pub param_count: Option<usize>,
}

impl core::fmt::Display for FollowUpQuery {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "method {} of class {}", self.method_name, self.class_name)?;
        if let Some(n) = self.param_count {
            write!(f, " taking {n} parameter(s)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Terminal {
    Conclusion(Conclusion),
    FollowUp(FollowUpQuery),
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

fn strip_key<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let t = line.trim().trim_start_matches(['*', '#', '>', '-', ' ']);
    let t = t.trim_start_matches("**");
    if t.len() >= key.len() && t[..key.len()].eq_ignore_ascii_case(key) {
        Some(t[key.len()..].trim_start_matches("**").trim())
    } else {
        None
    }
}

/// Parses `method=<m> class=<c> params=<n>`; method and class are required.
pub fn parse_followup_fields(s: &str) -> Option<FollowUpQuery> {
    let mut method = None;
    let mut class = None;
    let mut params = None;
    for field in s.split(|c: char| c.is_whitespace() || c == ',' || c == ';') {
        let Some((k, v)) = field.split_once('=') else { continue };
        let v = v.trim_matches(['"', '\'', '`']);
        match k.trim().to_ascii_lowercase().as_str() {
            "method" => method = Some(v.to_string()),
            "class" => class = Some(v.to_string()),
            "params" => params = v.parse::<usize>().ok(),
            _ => {}
        }
    }
    let method_name = method.filter(|m| !m.is_empty())?;
    let class_name = class.filter(|c| !c.is_empty())?;
    Some(FollowUpQuery { method_name, class_name, param_count: params })
}

/// Text of the output before its terminal directive, without a dangling fence.
pub fn finding_text(output: &str) -> String {
    let lines: Vec<&str> = output.lines().collect();
    let cut = lines
        .iter()
        .rposition(|l| strip_key(l, "VERDICT:").is_some() || strip_key(l, "FOLLOWUP:").is_some())
        .unwrap_or(lines.len());
    let mut head = &lines[..cut];
    while let Some(last) = head.last() {
        if last.trim().is_empty() || is_fence(last) {
            head = &head[..head.len() - 1];
        } else {
            break;
        }
    }
    let text = head.join("\n").trim().to_string();
    if text.is_empty() {
        output.trim().to_string()
    } else {
        text
    }
}

/// Extracts the terminal block when the output carries one. The last
/// `VERDICT:` or `FOLLOWUP:` line wins.
pub fn parse_structured(output: &str) -> Option<Terminal> {
    let lines: Vec<&str> = output.lines().collect();
    let idx = lines
        .iter()
        .rposition(|l| strip_key(l, "VERDICT:").is_some() || strip_key(l, "FOLLOWUP:").is_some())?;
    let line = lines[idx];
    if let Some(rest) = strip_key(line, "FOLLOWUP:") {
        return parse_followup_fields(rest).map(Terminal::FollowUp);
    }
    let assessment = Assessment::parse(strip_key(line, "VERDICT:")?);
    let mut code_paths = Vec::new();
    let mut in_paths = false;
    for l in &lines[idx + 1..] {
        if is_fence(l) {
            break;
        }
        if let Some(inline) = strip_key(l, "PATHS:") {
            in_paths = true;
            push_path(&mut code_paths, inline);
            continue;
        }
        if in_paths {
            push_path(&mut code_paths, l);
        }
    }
    Some(Terminal::Conclusion(Conclusion { finding: finding_text(output), assessment, code_paths }))
}

fn push_path(paths: &mut Vec<String>, raw: &str) {
    let p = raw.trim().trim_start_matches(['-', '*', '•']).trim().trim_matches('`').trim();
    let placeholder = matches!(p.to_ascii_lowercase().as_str(), "" | "none" | "n/a" | "-");
    if !placeholder && !paths.iter().any(|q| q == p) {
        paths.push(p.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReviewerClass {
    Conclusion,
    FollowUp(FollowUpQuery),
}

/// Reads the QueryReviewer's classification; `None` when it is unreadable.
pub fn parse_reviewer_reply(reply: &str) -> Option<ReviewerClass> {
    for line in reply.lines().rev() {
        if let Some(rest) = strip_key(line, "FOLLOWUP:") {
            return parse_followup_fields(rest).map(ReviewerClass::FollowUp);
        }
        if line.to_ascii_lowercase().contains("conclusion") {
            return Some(ReviewerClass::Conclusion);
        }
    }
    None
}
