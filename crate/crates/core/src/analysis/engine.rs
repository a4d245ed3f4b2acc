use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::queries::{BehaviorCategory, QueryId, QuerySpec};
use super::terminal::{
    finding_text, parse_reviewer_reply, parse_structured, Conclusion, FollowUpQuery, ReviewerClass,
    Terminal,
};
use crate::embed::Embedder;
use crate::llm::{LlmError, PromptRunner, Role};
use crate::store::{IndexedRecord, MetadataFilter, RetrievalResult, VectorStore};

/// Inserted into the Analyzer prompt unless running single-turn.
pub const FOLLOWUP_INSTRUCTIONS: &str = "\
4. If the current snippet calls another method of this application and you need
   that method's implementation before you can conclude, do not conclude yet.
   End your answer with a fenced block holding a single line instead:

```
FOLLOWUP: method=<method name> class=<fully qualified class name> params=<number of parameters>
```
";

const SUMMARY_CHARS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub max_turns: usize,
    pub top_k: usize,
    /// Drops follow-up instructions and caps sessions at one turn.
    pub single_turn: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { max_turns: 5, top_k: 5, single_turn: false }
    }
}

impl AnalysisConfig {
    pub fn turn_budget(&self) -> usize {
        if self.single_turn {
            1
        } else {
            self.max_turns.max(1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbortReason {
    Budget,
    Cycle,
}

impl AbortReason {
    pub fn as_str(self) -> &'static str {
        match self {
            AbortReason::Budget => "budget",
            AbortReason::Cycle => "cycle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TurnOutcome {
    Conclusion(Conclusion),
    FollowUp(FollowUpQuery),
    Abort { reason: AbortReason },
}

/// Which filter produced the follow-up candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolveTier {
    MethodAndClass,
    MethodAndSimpleClassName,
    MethodOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Resolution {
    Resolved { record_id: String, candidates: Vec<String>, tier: ResolveTier },
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisTurn {
    pub turn_index: usize,
    pub input_snippet_id: String,
    pub analyzer_output: String,
    pub outcome: TurnOutcome,
    /// Set when a follow-up was looked up in the store.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
}

impl AnalysisTurn {
    pub fn summary(&self) -> String {
        summarize(&self.analyzer_output)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisSession {
    pub query_id: QueryId,
    pub seed_snippet_id: String,
    pub turns: Vec<AnalysisTurn>,
    /// In visit order, never repeating.
    pub visited_snippet_ids: Vec<String>,
    /// The terminal conclusion, synthesized and inconclusive after an abort.
    pub conclusion: Conclusion,
    pub aborted: Option<AbortReason>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl AnalysisSession {
    pub fn followup_resolutions(&self) -> usize {
        self.turns.iter().filter(|t| t.resolution.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum QueryResult {
    NoRelevantCode,
    Analyzed { sessions: Vec<AnalysisSession> },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: QueryId,
    pub category: BehaviorCategory,
    pub query_text: String,
    pub hits: Vec<RetrievalResult>,
    pub relevant: Vec<String>,
    pub result: QueryResult,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl QueryOutcome {
    pub fn sessions(&self) -> &[AnalysisSession] {
        match &self.result {
            QueryResult::Analyzed { sessions } => sessions,
            _ => &[],
        }
    }
}

fn summarize(output: &str) -> String {
    let text = finding_text(output);
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    match collapsed.char_indices().nth(SUMMARY_CHARS) {
        Some((cut, _)) => format!("{}...", &collapsed[..cut]),
        None => collapsed,
    }
}

fn relevance_verdict(reply: &str) -> Option<bool> {
    for line in reply.lines().rev() {
        let upper = line.trim().to_ascii_uppercase();
        let value = match upper.split_once("RELEVANCE:") {
            Some((_, v)) => v.trim().trim_matches('*').trim().to_string(),
            None => upper.trim_matches('*').to_string(),
        };
        match value.as_str() {
            "KEEP" => return Some(true),
            "DROP" => return Some(false),
            _ => {}
        }
    }
    None
}

fn parse_choice(reply: &str, n: usize) -> Option<usize> {
    for line in reply.lines().rev() {
        let upper = line.trim().to_ascii_uppercase();
        if let Some((_, v)) = upper.split_once("CHOICE:") {
            let digits: String = v.trim().chars().take_while(char::is_ascii_digit).collect();
            return digits.parse::<usize>().ok().filter(|&c| (1..=n).contains(&c));
        }
    }
    None
}

/// Runs queries against one app's store.
pub struct Engine<'a> {
    pub store: &'a VectorStore,
    pub embedder: &'a dyn Embedder,
    pub llm: PromptRunner<'a>,
    pub cfg: AnalysisConfig,
}

impl<'a> Engine<'a> {
    pub fn new(
        store: &'a VectorStore,
        embedder: &'a dyn Embedder,
        llm: PromptRunner<'a>,
        cfg: AnalysisConfig,
    ) -> Self {
        Engine { store, embedder, llm, cfg }
    }

    /// Every query in order; failures stay inside their outcome.
    pub fn run_battery(&self, queries: &[QuerySpec]) -> Vec<QueryOutcome> {
        queries.iter().map(|q| self.run_query(q)).collect()
    }

    pub fn run_query(&self, query: &QuerySpec) -> QueryOutcome {
        let mut outcome = QueryOutcome {
            query_id: query.query_id,
            category: query.category,
            query_text: query.text.clone(),
            hits: Vec::new(),
            relevant: Vec::new(),
            result: QueryResult::NoRelevantCode,
            warnings: Vec::new(),
        };
        let hits = match self.retrieve_stage(query) {
            Ok(h) => h,
            Err(e) => {
                outcome.result = QueryResult::Failed { error: e };
                return outcome;
            }
        };
        outcome.hits = hits;
        let relevant = match self.relevance_filter(query, &outcome.hits, &mut outcome.warnings) {
            Ok(r) => r,
            Err(e) => {
                outcome.result = QueryResult::Failed { error: e.to_string() };
                return outcome;
            }
        };
        if relevant.is_empty() {
            return outcome;
        }
        outcome.relevant = relevant;
        let mut sessions = Vec::with_capacity(outcome.relevant.len());
        for seed in &outcome.relevant {
            match self.analyze_snippet(query, seed) {
                Ok(s) => sessions.push(s),
                Err(e) => {
                    outcome.result = QueryResult::Failed { error: e.to_string() };
                    return outcome;
                }
            }
        }
        outcome.result = QueryResult::Analyzed { sessions };
        outcome
    }

    /// Unfiltered top-k over the embedded query text.
    pub fn retrieve_stage(&self, query: &QuerySpec) -> Result<Vec<RetrievalResult>, String> {
        let q = self.embedder.embed(&query.text).map_err(|e| e.to_string())?;
        self.store.search(&q, self.cfg.top_k, None).map_err(|e| e.to_string())
    }

    /// Judges each hit on its own; unparseable verdicts count as DROP.
    /// An empty result means no related code was found.
    pub fn relevance_filter(
        &self,
        query: &QuerySpec,
        hits: &[RetrievalResult],
        warnings: &mut Vec<String>,
    ) -> Result<Vec<String>, LlmError> {
        let mut kept = Vec::new();
        for hit in hits {
            let Some(rec) = self.store.get(&hit.record_id) else { continue };
            let location = rec.location();
            let reply = self.llm.ask(
                Role::RelevanceReviewer,
                &[
                    ("query", &query.text),
                    ("location", &location),
                    ("description", &rec.description),
                    ("code", &rec.code_text),
                ],
            )?;
            match relevance_verdict(&reply.text) {
                Some(true) => kept.push(hit.record_id.clone()),
                Some(false) => {}
                None => warnings.push(format!(
                    "unparseable relevance verdict for {}; treated as DROP",
                    hit.record_id
                )),
            }
        }
        Ok(kept)
    }

    fn analyzer_prompt_vars<'v>(
        query: &'v QuerySpec,
        rec: &'v IndexedRecord,
        location: &'v str,
        prior: &'v str,
        notes: &'v str,
        followups: &'v str,
    ) -> [(&'static str, &'v str); 7] {
        [
            ("query", &query.text),
            ("location", location),
            ("description", &rec.description),
            ("code", &rec.code_text),
            ("prior_turns", prior),
            ("notes", notes),
            ("followup_instructions", followups),
        ]
    }

    /// Bounded Analyzer loop starting at `seed`.
    pub fn analyze_snippet(&self, query: &QuerySpec, seed: &str) -> Result<AnalysisSession, LlmError> {
        let budget = self.cfg.turn_budget();
        let followups = if self.cfg.single_turn { "" } else { FOLLOWUP_INSTRUCTIONS };
        let mut session = AnalysisSession {
            query_id: query.query_id,
            seed_snippet_id: seed.to_string(),
            turns: Vec::new(),
            visited_snippet_ids: alloc::vec![seed.to_string()],
            conclusion: Conclusion::inconclusive(""),
            aborted: None,
            warnings: Vec::new(),
        };
        let mut current = seed.to_string();
        let mut notes = String::new();
        let mut unresolved: BTreeSet<FollowUpQuery> = BTreeSet::new();
        let mut concluded = None;

        for turn_index in 1..=budget {
            let Some(rec) = self.store.get(&current) else {
                session.warnings.push(format!("snippet {current} missing from store"));
                break;
            };
            let location = rec.location();
            let prior = prior_turns(self.store, &session.turns);
            let vars = Self::analyzer_prompt_vars(query, rec, &location, &prior, &notes, followups);
            let output = self.llm.ask(Role::Analyzer, &vars)?.text;
            let terminal = self.parse_terminal(&output, &mut session.warnings)?;

            let mut turn = AnalysisTurn {
                turn_index,
                input_snippet_id: current.clone(),
                analyzer_output: output,
                outcome: TurnOutcome::Abort { reason: AbortReason::Budget },
                resolution: None,
            };
            match terminal {
                Terminal::Conclusion(c) => {
                    turn.outcome = TurnOutcome::Conclusion(c.clone());
                    session.turns.push(turn);
                    concluded = Some(c);
                    break;
                }
                Terminal::FollowUp(f) => {
                    if turn_index == budget {
                        session.aborted = Some(AbortReason::Budget);
                        session.turns.push(turn);
                        break;
                    }
                    let resolution = self.resolve_followup(&f, rec, &mut session.warnings)?;
                    match &resolution {
                        Resolution::Resolved { record_id, .. } => {
                            if session.visited_snippet_ids.contains(record_id) {
                                turn.outcome = TurnOutcome::Abort { reason: AbortReason::Cycle };
                                turn.resolution = Some(resolution);
                                session.aborted = Some(AbortReason::Cycle);
                                session.turns.push(turn);
                                break;
                            }
                            session.visited_snippet_ids.push(record_id.clone());
                            current = record_id.clone();
                            notes.clear();
                        }
                        Resolution::NotFound => {
                            if !unresolved.insert(f.clone()) {
                                turn.outcome = TurnOutcome::Abort { reason: AbortReason::Cycle };
                                turn.resolution = Some(resolution);
                                session.aborted = Some(AbortReason::Cycle);
                                session.turns.push(turn);
                                break;
                            }
                            notes = format!(
                                "Note: the implementation of the {f} is unavailable in this \
                                 application's indexed code. Reach a conclusion from the evidence \
                                 you have.\n"
                            );
                        }
                    }
                    turn.outcome = TurnOutcome::FollowUp(f);
                    turn.resolution = Some(resolution);
                    session.turns.push(turn);
                }
            }
        }

        session.conclusion = match concluded {
            Some(c) => c,
            None => {
                let reason = session.aborted.get_or_insert(AbortReason::Budget).as_str();
                let summaries = session
                    .turns
                    .iter()
                    .map(|t| format!("- step {}: {}", t.turn_index, t.summary()))
                    .collect::<Vec<_>>()
                    .join("\n");
                Conclusion::inconclusive(format!(
                    "Analysis stopped without a conclusion ({reason}).\n{summaries}"
                ))
            }
        };
        Ok(session)
    }

    /// Structured block first; otherwise the QueryReviewer decides. Anything
    /// unreadable becomes an inconclusive conclusion that keeps the raw text.
    pub fn parse_terminal(&self, output: &str, warnings: &mut Vec<String>) -> Result<Terminal, LlmError> {
        if let Some(t) = parse_structured(output) {
            return Ok(t);
        }
        let reply = self.llm.ask(Role::QueryReviewer, &[("output", output)])?;
        Ok(match parse_reviewer_reply(&reply.text) {
            Some(ReviewerClass::FollowUp(f)) => Terminal::FollowUp(f),
            Some(ReviewerClass::Conclusion) => Terminal::Conclusion(Conclusion::inconclusive(output.trim())),
            None => {
                warnings.push("malformed analyzer output; treated as inconclusive".to_string());
                Terminal::Conclusion(Conclusion::inconclusive(output.trim()))
            }
        })
    }

    /// method+class(+params) → method+simple class name → method only.
    pub fn resolve_followup(
        &self,
        f: &FollowUpQuery,
        calling: &IndexedRecord,
        warnings: &mut Vec<String>,
    ) -> Result<Resolution, LlmError> {
        let mut exact = MetadataFilter::method(f.method_name.clone()).class(f.class_name.clone());
        exact.param_count = f.param_count;
        let mut tier = ResolveTier::MethodAndClass;
        let mut candidates: Vec<String> =
            self.store.filter_candidates(&exact).expect("filter has fields").into_iter().collect();

        if candidates.is_empty() {
            let simple = f.class_name.rsplit(['.', '$']).next().unwrap_or(&f.class_name);
            candidates = self
                .store
                .records()
                .filter(|r| r.method_name == f.method_name)
                .filter(|r| f.param_count.is_none_or(|n| n == r.param_count))
                .filter(|r| r.class_name.rsplit(['.', '$']).next() == Some(simple))
                .map(|r| r.record_id.clone())
                .collect();
            tier = ResolveTier::MethodAndSimpleClassName;
        }
        if candidates.is_empty() {
            let filter = MetadataFilter::method(f.method_name.clone());
            candidates =
                self.store.filter_candidates(&filter).expect("filter has fields").into_iter().collect();
            tier = ResolveTier::MethodOnly;
        }

        let record_id = match candidates.len() {
            0 => return Ok(Resolution::NotFound),
            1 => candidates[0].clone(),
            n => {
                let listing = candidates
                    .iter()
                    .enumerate()
                    .map(|(i, id)| {
                        let r = self.store.get(id).expect("candidate from store");
                        format!(
                            "Candidate {}: {} ({} parameters)\nDescription: {}\n```java\n{}\n```",
                            i + 1,
                            r.location(),
                            r.param_count,
                            r.description,
                            r.code_text
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n\n");
                let request = format!("Provide the implementation of the {f}.");
                let calling_location = calling.location();
                let reply = self.llm.ask(
                    Role::CollisionReviewer,
                    &[
                        ("request", &request),
                        ("calling_location", &calling_location),
                        ("calling_code", &calling.code_text),
                        ("candidates", &listing),
                    ],
                )?;
                match parse_choice(&reply.text, n) {
                    Some(c) => candidates[c - 1].clone(),
                    None => {
                        warnings.push(format!(
                            "unparseable collision choice for {f}; using first candidate"
                        ));
                        candidates[0].clone()
                    }
                }
            }
        };
        Ok(Resolution::Resolved { record_id, candidates, tier })
    }
}

fn prior_turns(store: &VectorStore, turns: &[AnalysisTurn]) -> String {
    if turns.is_empty() {
        return "(none)\n".to_string();
    }
    let mut s = String::new();
    for t in turns {
        let loc = store.get(&t.input_snippet_id).map(|r| r.location()).unwrap_or_default();
        s.push_str(&format!("- step {} ({}): {}\n", t.turn_index, loc, t.summary()));
    }
    s
}
