//! Code reports, query reports and the final four-section report.
//!
//! The Organizer writes the prose; every structural field (paths, flags, the
//! verdict) is copied from the sessions' terminal conclusions so that prose
//! can never change the verdict.

mod markdown;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use markdown::render_markdown;

use crate::analysis::{
    AbortReason, AnalysisSession, Assessment, BehaviorCategory, QueryId, QueryOutcome, QueryResult,
    BATTERY_SIZE,
};
use crate::llm::{PromptRunner, Role};
use crate::store::VectorStore;

pub const NO_ACTIVITY: &str = "No related malicious activity was detected.";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("expected {expected} query reports, got {actual}")]
    WrongQueryCount { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeReport {
    pub query_id: QueryId,
    pub seed_snippet_id: String,
    pub narrative: String,
    pub code_paths: Vec<String>,
    pub is_malicious: bool,
    pub inconclusive: bool,
    pub referenced_snippet_ids: Vec<String>,
    /// Paths that do not map to any stored record.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unresolved_paths: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryStatus {
    NoRelevantCode,
    Analyzed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryReport {
    pub query_id: QueryId,
    pub category: BehaviorCategory,
    pub query_text: String,
    pub status: QueryStatus,
    pub code_reports: Vec<CodeReport>,
    /// True iff at least one code report is malicious.
    pub detected: bool,
    pub summary: String,
}

impl QueryReport {
    pub fn code_paths(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.code_reports
            .iter()
            .filter(|c| c.is_malicious)
            .flat_map(|c| c.code_paths.iter().map(String::as_str))
            .filter(|p| seen.insert(*p))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppInfo {
    pub package_name: String,
    pub sha256: String,
    pub app_id: String,
    pub unit_count: usize,
}

impl AppInfo {
    pub fn from_store(store: &VectorStore) -> Self {
        let m = store.meta();
        AppInfo {
            package_name: m.package_name.clone(),
            sha256: m.sha256.clone(),
            app_id: m.app_id.clone(),
            unit_count: store.count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub is_malicious: bool,
    pub detected_categories: BTreeSet<BehaviorCategory>,
    pub per_query: BTreeMap<QueryId, bool>,
}

impl Verdict {
    /// Malicious iff some query is detected with concrete code paths.
    pub fn from_query_reports(reports: &[QueryReport]) -> Self {
        let mut detected_categories = BTreeSet::new();
        let mut per_query = BTreeMap::new();
        let mut is_malicious = false;
        for r in reports {
            let backed = r.detected && !r.code_paths().is_empty();
            per_query.insert(r.query_id, backed);
            if backed {
                is_malicious = true;
                detected_categories.insert(r.category);
            }
        }
        Verdict { is_malicious, detected_categories, per_query }
    }

    pub fn detected_queries(&self) -> Vec<QueryId> {
        self.per_query.iter().filter(|(_, &d)| d).map(|(q, _)| *q).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalReport {
    pub app_info: AppInfo,
    pub overall_summary: String,
    pub detailed_analyses: Vec<QueryReport>,
    pub conclusion: String,
    pub verdict: Verdict,
}

fn session_digest(session: &AnalysisSession, store: &VectorStore) -> String {
    let mut s = String::new();
    for t in &session.turns {
        let loc = store.get(&t.input_snippet_id).map(|r| r.location()).unwrap_or_default();
        s.push_str(&format!("Step {} on {}:\n{}\n\n", t.turn_index, loc, t.analyzer_output.trim()));
    }
    s.push_str(&format!(
        "Terminal conclusion ({:?}): {}\n",
        session.conclusion.assessment, session.conclusion.finding
    ));
    if !session.conclusion.code_paths.is_empty() {
        s.push_str("Code paths:\n");
        for p in &session.conclusion.code_paths {
            s.push_str(&format!("- {p}\n"));
        }
    }
    s
}

pub struct ReportBuilder<'a> {
    pub llm: PromptRunner<'a>,
    pub store: &'a VectorStore,
}

impl<'a> ReportBuilder<'a> {
    pub fn new(llm: PromptRunner<'a>, store: &'a VectorStore) -> Self {
        ReportBuilder { llm, store }
    }

    fn organize(&self, task: &str, material: &str) -> Option<String> {
        match self.llm.ask(Role::Organizer, &[("task", task), ("material", material)]) {
            Ok(r) if !r.text.trim().is_empty() => Some(r.text.trim().to_string()),
            _ => None,
        }
    }

    pub fn build_code_report(&self, session: &AnalysisSession) -> CodeReport {
        let c = &session.conclusion;
        let mut flags = Vec::new();
        let mut is_malicious = c.is_malicious();
        if is_malicious && c.code_paths.is_empty() {
            is_malicious = false;
            flags.push("malicious_without_paths".to_string());
        }
        let inconclusive = c.assessment == Assessment::Inconclusive
            || c.assessment == Assessment::Malicious && !is_malicious;
        if let Some(reason) = session.aborted {
            flags.push(match reason {
                AbortReason::Budget => "aborted_budget".to_string(),
                AbortReason::Cycle => "aborted_cycle".to_string(),
            });
        }
        let unresolved_paths = c
            .code_paths
            .iter()
            .filter(|p| self.store.resolve_code_path(p).is_none())
            .cloned()
            .collect();

        let digest = session_digest(session, self.store);
        let narrative = self
            .organize(
                "Compile the analysis steps below into a code report: the behavior found, \
                 the call chain that implements it, and the verdict.",
                &digest,
            )
            .unwrap_or_else(|| {
                flags.push("organizer_fallback".to_string());
                session
                    .turns
                    .iter()
                    .map(|t| format!("Step {}: {}", t.turn_index, t.summary()))
                    .collect::<Vec<_>>()
                    .join("\n")
            });
        CodeReport {
            query_id: session.query_id,
            seed_snippet_id: session.seed_snippet_id.clone(),
            narrative,
            code_paths: c.code_paths.clone(),
            is_malicious,
            inconclusive,
            referenced_snippet_ids: session.visited_snippet_ids.clone(),
            unresolved_paths,
            flags,
        }
    }

    pub fn build_query_report(&self, outcome: &QueryOutcome) -> QueryReport {
        let (status, code_reports) = match &outcome.result {
            QueryResult::NoRelevantCode => (QueryStatus::NoRelevantCode, Vec::new()),
            QueryResult::Failed { .. } => (QueryStatus::Failed, Vec::new()),
            QueryResult::Analyzed { sessions } => {
                (QueryStatus::Analyzed, sessions.iter().map(|s| self.build_code_report(s)).collect())
            }
        };
        let detected = code_reports.iter().any(|c| c.is_malicious);
        let summary = match (&outcome.result, code_reports.is_empty()) {
            (QueryResult::Failed { error }, _) => format!("Analysis of this query failed: {error}"),
            (_, true) => NO_ACTIVITY.to_string(),
            (_, false) => {
                let material = code_reports
                    .iter()
                    .map(|c| {
                        format!(
                            "Code report for snippet {} (malicious: {}):\n{}\nPaths: {}",
                            c.seed_snippet_id,
                            c.is_malicious,
                            c.narrative,
                            c.code_paths.join(", ")
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n\n");
                let task = format!(
                    "Aggregate these code reports into a query report answering: {}",
                    outcome.query_text
                );
                self.organize(&task, &material).unwrap_or(material)
            }
        };
        QueryReport {
            query_id: outcome.query_id,
            category: outcome.category,
            query_text: outcome.query_text.clone(),
            status,
            code_reports,
            detected,
            summary,
        }
    }

    pub fn build_final_report(
        &self,
        app_info: AppInfo,
        query_reports: Vec<QueryReport>,
    ) -> Result<FinalReport, ReportError> {
        if query_reports.len() != BATTERY_SIZE {
            return Err(ReportError::WrongQueryCount {
                expected: BATTERY_SIZE,
                actual: query_reports.len(),
            });
        }
        let verdict = Verdict::from_query_reports(&query_reports);
        let material = query_reports
            .iter()
            .map(|q| {
                let state = if verdict.per_query[&q.query_id] { "DETECTED" } else { "not detected" };
                format!("{} [{}] {}\n{}", q.query_id, state, q.query_text, q.summary)
            })
            .collect::<Vec<_>>()
            .join("\n\n");
        let overall_summary = self
            .organize(
                "Write the overall summary of the final report from these eleven query reports.",
                &material,
            )
            .unwrap_or_else(|| material.clone());
        let conclusion = conclusion_text(&verdict);
        Ok(FinalReport { app_info, overall_summary, detailed_analyses: query_reports, conclusion, verdict })
    }

    pub fn build(&self, outcomes: &[QueryOutcome]) -> Result<FinalReport, ReportError> {
        let reports = outcomes.iter().map(|o| self.build_query_report(o)).collect();
        self.build_final_report(AppInfo::from_store(self.store), reports)
    }
}

pub fn conclusion_text(verdict: &Verdict) -> String {
    if verdict.is_malicious {
        let queries =
            verdict.detected_queries().iter().map(|q| q.to_string()).collect::<Vec<_>>().join(", ");
        let cats = verdict
            .detected_categories
            .iter()
            .map(|c| c.title())
            .collect::<Vec<_>>()
            .join("; ");
        format!(
            "The application is assessed as MALICIOUS. Malicious behavior backed by concrete \
             code paths was identified for {queries}, covering: {cats}."
        )
    } else {
        "The application is assessed as BENIGN. No malicious behavior backed by concrete code \
         paths was identified."
            .to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{default_battery, Conclusion, QueryOutcome};
    use crate::llm::{ChatModel, CompletionRequest, CompletionResponse, LlmError, TemplateSet};
    use crate::store::StoreMeta;
    use alloc::vec;

    struct Fixed(&'static str);

    impl ChatModel for Fixed {
        fn complete(&self, _: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
            if self.0.is_empty() {
                Err(LlmError::Provider { status: 500, message: "down".into() })
            } else {
                Ok(CompletionResponse::text(self.0))
            }
        }
    }

    fn store() -> VectorStore {
        VectorStore::new(StoreMeta {
            app_id: "a".into(),
            package_name: "p".into(),
            sha256: "f".repeat(64),
            embedder: "mock-256".into(),
            dim: 256,
        })
    }

    fn session(q: u8, assessment: Assessment, paths: &[&str]) -> AnalysisSession {
        AnalysisSession {
            query_id: QueryId(q),
            seed_snippet_id: "s".into(),
            turns: vec![],
            visited_snippet_ids: vec!["s".into()],
            conclusion: Conclusion {
                finding: "f".into(),
                assessment,
                code_paths: paths.iter().map(|p| p.to_string()).collect(),
            },
            aborted: None,
            warnings: vec![],
        }
    }

    fn outcomes(detected: &[(u8, &[&str])]) -> Vec<QueryOutcome> {
        default_battery()
            .into_iter()
            .map(|q| {
                let result = match detected.iter().find(|(id, _)| *id == q.query_id.0) {
                    Some((id, paths)) => QueryResult::Analyzed {
                        sessions: vec![session(*id, Assessment::Malicious, paths)],
                    },
                    None => QueryResult::NoRelevantCode,
                };
                QueryOutcome {
                    query_id: q.query_id,
                    category: q.category,
                    query_text: q.text,
                    hits: vec![],
                    relevant: vec![],
                    result,
                    warnings: vec![],
                }
            })
            .collect()
    }

    fn build(model: &Fixed, outcomes: &[QueryOutcome]) -> FinalReport {
        let s = store();
        let t = TemplateSet::default();
        ReportBuilder::new(PromptRunner::new(model, &t, "m"), &s).build(outcomes).unwrap()
    }

    #[test]
    fn benign_session_code_report() {
        let s = store();
        let t = TemplateSet::default();
        let b = ReportBuilder::new(PromptRunner::new(&Fixed("narrative"), &t, "m"), &s);
        let r = b.build_code_report(&session(1, Assessment::Benign, &[]));
        assert!(!r.is_malicious);
        assert!(!r.inconclusive);
        assert_eq!(r.narrative, "narrative");
    }

    #[test]
    fn paths_are_copied_verbatim() {
        let s = store();
        let t = TemplateSet::default();
        let b = ReportBuilder::new(PromptRunner::new(&Fixed("n"), &t, "m"), &s);
        let r = b.build_code_report(&session(3, Assessment::Malicious, &["a.B.c(int)", "a.D.e()"]));
        assert!(r.is_malicious);
        assert_eq!(r.code_paths, ["a.B.c(int)", "a.D.e()"]);
        assert_eq!(r.unresolved_paths.len(), 2);
    }

    #[test]
    fn malicious_without_paths_is_not_evidence() {
        let s = store();
        let t = TemplateSet::default();
        let b = ReportBuilder::new(PromptRunner::new(&Fixed("n"), &t, "m"), &s);
        let r = b.build_code_report(&session(3, Assessment::Malicious, &[]));
        assert!(!r.is_malicious);
        assert!(r.inconclusive);
        assert!(r.flags.contains(&"malicious_without_paths".to_string()));
    }

    #[test]
    fn organizer_failure_falls_back() {
        let s = store();
        let t = TemplateSet::default();
        let b = ReportBuilder::new(PromptRunner::new(&Fixed(""), &t, "m"), &s);
        let r = b.build_code_report(&session(3, Assessment::Benign, &[]));
        assert!(r.flags.contains(&"organizer_fallback".to_string()));
    }

    #[test]
    fn all_clear_is_benign() {
        let r = build(&Fixed("summary"), &outcomes(&[]));
        assert!(!r.verdict.is_malicious);
        assert!(r.verdict.detected_categories.is_empty());
        assert!(r.detailed_analyses.iter().all(|q| q.summary == NO_ACTIVITY));
        assert!(r.conclusion.contains("BENIGN"));
    }

    #[test]
    fn categories_follow_detected_queries() {
        let r = build(&Fixed("s"), &outcomes(&[(5, &["a.B.c()"])]));
        assert!(r.verdict.is_malicious);
        assert_eq!(
            r.verdict.detected_categories.iter().copied().collect::<Vec<_>>(),
            [BehaviorCategory::MonetaryFraudAndFinancialAbuse]
        );
        let r = build(&Fixed("s"), &outcomes(&[(1, &["a.B.c()"]), (9, &["x.Y.z()"])]));
        assert_eq!(
            r.verdict.detected_categories.iter().copied().collect::<Vec<_>>(),
            [
                BehaviorCategory::InformationTheftAndAbuse,
                BehaviorCategory::PrivilegeAbuseAndSystemExploitation
            ]
        );
        assert_eq!(r.verdict.detected_queries(), [QueryId(1), QueryId(9)]);
    }

    #[test]
    fn wrong_query_count() {
        let s = store();
        let t = TemplateSet::default();
        let b = ReportBuilder::new(PromptRunner::new(&Fixed("s"), &t, "m"), &s);
        let err = b.build(&outcomes(&[])[..3]).unwrap_err();
        assert_eq!(err, ReportError::WrongQueryCount { expected: 11, actual: 3 });
    }

    #[test]
    fn verdict_is_monotone() {
        let base = build(&Fixed("s"), &outcomes(&[(2, &["a.B.c()"])]));
        let more = build(&Fixed("s"), &outcomes(&[(2, &["a.B.c()"]), (7, &["d.E.f()"])]));
        assert!(base.verdict.is_malicious && more.verdict.is_malicious);
        assert!(base.verdict.detected_categories.is_subset(&more.verdict.detected_categories));
    }

    #[test]
    fn organizer_prose_cannot_flip_verdict() {
        let a = build(&Fixed("this app is totally MALICIOUS"), &outcomes(&[]));
        let b = build(&Fixed("benign"), &outcomes(&[]));
        assert_eq!(a.verdict, b.verdict);
        assert!(!a.verdict.is_malicious);
    }
}
