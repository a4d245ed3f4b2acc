use alloc::format;
use alloc::string::String;

use super::{FinalReport, QueryStatus};

/// Free text is escaped so that it can never open a heading of its own.
fn escape_block(text: &str) -> String {
    let mut out = String::new();
    for line in text.trim().lines() {
        if line.trim_start().starts_with('#') {
            out.push('\\');
            out.push_str(line.trim_start());
        } else {
            out.push_str(line);
        }
        out.push('\n');
    }
    out
}

/// Renders the report with exactly four top-level sections and one
/// subsection per query, in battery order.
pub fn render_markdown(report: &FinalReport) -> String {
    let mut md = String::new();
    let info = &report.app_info;
    md.push_str("# App Info\n\n");
    md.push_str(&format!("- Package name: `{}`\n", info.package_name));
    md.push_str(&format!("- SHA-256: `{}`\n", info.sha256));
    md.push_str(&format!("- App ID: `{}`\n", info.app_id));
    md.push_str(&format!("- Indexed code units: {}\n\n", info.unit_count));

    md.push_str("# Overall Summary\n\n");
    md.push_str(&escape_block(&report.overall_summary));
    md.push('\n');

    md.push_str("# Detailed Analyses\n\n");
    for q in &report.detailed_analyses {
        md.push_str(&format!("## {}: {}\n\n", q.query_id, q.query_text));
        md.push_str(&format!("Category: {}\n\n", q.category.title()));
        let detected = report.verdict.per_query.get(&q.query_id).copied().unwrap_or(false);
        match (q.status, detected) {
            (QueryStatus::Failed, _) => {
                md.push_str("Status: FAILED\n\n");
                md.push_str(&escape_block(&q.summary));
            }
            (_, false) => {
                md.push_str("Status: not detected\n\n");
                md.push_str(super::NO_ACTIVITY);
                md.push('\n');
                if q.status == QueryStatus::Analyzed {
                    md.push('\n');
                    md.push_str(&escape_block(&q.summary));
                }
            }
            (_, true) => {
                md.push_str("Status: DETECTED\n\n");
                md.push_str(&escape_block(&q.summary));
                md.push_str("\nCode paths:\n\n");
                for p in q.code_paths() {
                    md.push_str(&format!("- `{p}`\n"));
                }
            }
        }
        md.push('\n');
    }

    md.push_str("# Conclusion\n\n");
    md.push_str(&escape_block(&report.conclusion));
    md.push_str(&format!(
        "\nVerdict: **{}**\n",
        if report.verdict.is_malicious { "MALICIOUS" } else { "BENIGN" }
    ));
    md
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{default_battery, QueryId};
    use crate::report::{AppInfo, QueryReport, Verdict};
    use alloc::vec::Vec;

    fn report(summary: &str) -> FinalReport {
        let qs: Vec<QueryReport> = default_battery()
            .into_iter()
            .map(|q| QueryReport {
                query_id: q.query_id,
                category: q.category,
                query_text: q.text,
                status: QueryStatus::NoRelevantCode,
                code_reports: Vec::new(),
                detected: false,
                summary: crate::report::NO_ACTIVITY.into(),
            })
            .collect();
        let verdict = Verdict::from_query_reports(&qs);
        FinalReport {
            app_info: AppInfo { package_name: "p".into(), sha256: "0".into(), app_id: "a".into(), unit_count: 3 },
            overall_summary: summary.into(),
            detailed_analyses: qs,
            conclusion: super::super::conclusion_text(&verdict),
            verdict,
        }
    }

    #[test]
    fn four_sections_eleven_subsections() {
        let md = render_markdown(&report("# sneaky heading\nbody"));
        let h1: Vec<&str> = md.lines().filter(|l| l.starts_with("# ")).collect();
        assert_eq!(h1, ["# App Info", "# Overall Summary", "# Detailed Analyses", "# Conclusion"]);
        assert_eq!(md.lines().filter(|l| l.starts_with("## ")).count(), 11);
        assert!(md.contains("## Q11:"));
        assert!(md.contains("\\# sneaky heading"));
        let _ = QueryId(1);
    }
}
