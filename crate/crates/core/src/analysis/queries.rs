use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BehaviorCategory {
    InformationTheftAndAbuse,
    MonetaryFraudAndFinancialAbuse,
    PrivilegeAbuseAndSystemExploitation,
}

impl BehaviorCategory {
    pub const ALL: [BehaviorCategory; 3] = [
        BehaviorCategory::InformationTheftAndAbuse,
        BehaviorCategory::MonetaryFraudAndFinancialAbuse,
        BehaviorCategory::PrivilegeAbuseAndSystemExploitation,
    ];

    pub fn title(self) -> &'static str {
        match self {
            BehaviorCategory::InformationTheftAndAbuse => "Information Theft and Abuse",
            BehaviorCategory::MonetaryFraudAndFinancialAbuse => "Monetary Fraud and Financial Abuse",
            BehaviorCategory::PrivilegeAbuseAndSystemExploitation => {
                "Privilege Abuse and System Exploitation"
            }
        }
    }

    /// Category that query `Qn` belongs to in the standard battery.
    pub fn for_query(id: QueryId) -> Option<BehaviorCategory> {
        match id.0 {
            1..=4 => Some(BehaviorCategory::InformationTheftAndAbuse),
            5..=7 => Some(BehaviorCategory::MonetaryFraudAndFinancialAbuse),
            8..=11 => Some(BehaviorCategory::PrivilegeAbuseAndSystemExploitation),
            _ => None,
        }
    }
}

impl fmt::Display for BehaviorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

/// `Q1`..`Q11`, serialized as that string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct QueryId(pub u8);

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0)
    }
}

impl FromStr for QueryId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('Q')
            .and_then(|n| n.parse::<u8>().ok())
            .filter(|&n| n > 0)
            .map(QueryId)
            .ok_or_else(|| format!("invalid query id `{s}`"))
    }
}

impl TryFrom<String> for QueryId {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<QueryId> for String {
    fn from(id: QueryId) -> Self {
        id.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub query_id: QueryId,
    pub category: BehaviorCategory,
    pub text: String,
}

const BATTERY: [&str; 11] = [
    "Does the application access or collect sensitive user data (e.g., SMS, contacts, location, or device identifiers)?",
    "Does the application capture user activity through screen recording or screenshots?",
    "Does the application connect to suspicious external URLs or perform background downloads without user interaction?",
    "Is obfuscation or encryption used to conceal communication endpoints or downloaded content?",
    "Does the application send messages or make calls that may incur charges without user consent?",
    "Does the UI mislead users into clicking ads or subscribing to services?",
    "Is there evidence of tampering with in-app purchases or payment processes?",
    "Does the application request elevated privileges (e.g., Accessibility or Device Administrator) or attempt to maintain persistence?",
    "Does the application support remote command execution or include dynamic code loading and anti-analysis techniques?",
    "Is there evidence of root-level activity, such as executing system commands or interacting with system partitions?",
    "Does the application use native libraries or known exploits to escalate privileges or bypass system security policies?",
];

pub const BATTERY_SIZE: usize = 11;

/// The eleven standard behavior questions, Q1..Q11.
pub fn default_battery() -> Vec<QuerySpec> {
    BATTERY
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let query_id = QueryId(i as u8 + 1);
            QuerySpec {
                query_id,
                category: BehaviorCategory::for_query(query_id).expect("1..=11"),
                text: text.to_string(),
            }
        })
        .collect()
}

/// A battery must be Q1..Q11 in order with the standard category mapping;
/// only the question texts may differ from the defaults.
pub fn validate_battery(specs: &[QuerySpec]) -> Result<(), String> {
    if specs.len() != BATTERY_SIZE {
        return Err(format!("expected {BATTERY_SIZE} queries, got {}", specs.len()));
    }
    for (i, spec) in specs.iter().enumerate() {
        let expected = QueryId(i as u8 + 1);
        if spec.query_id != expected {
            return Err(format!("query #{} has id {}, expected {expected}", i + 1, spec.query_id));
        }
        if Some(spec.category) != BehaviorCategory::for_query(expected) {
            return Err(format!("{expected} has category {:?}", spec.category));
        }
        if spec.text.trim().is_empty() {
            return Err(format!("{expected} has empty text"));
        }
    }
    Ok(())
}
