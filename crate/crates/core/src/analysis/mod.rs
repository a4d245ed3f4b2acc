//! The behavior-query battery: two-stage retrieval, relevance review, and a
//! bounded multi-turn Analyzer loop with follow-up resolution.

mod engine;
mod queries;
mod terminal;

pub use engine::{
    AbortReason, AnalysisConfig, AnalysisSession, AnalysisTurn, Engine, QueryOutcome, QueryResult,
    Resolution, ResolveTier, TurnOutcome, FOLLOWUP_INSTRUCTIONS,
};
pub use queries::{default_battery, validate_battery, BehaviorCategory, QueryId, QuerySpec, BATTERY_SIZE};
pub use terminal::{
    finding_text, parse_followup_fields, parse_reviewer_reply, parse_structured, Assessment, Conclusion,
    FollowUpQuery, ReviewerClass, Terminal,
};
