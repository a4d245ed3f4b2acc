use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::Role;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("missing placeholder `{0}`")]
    MissingPlaceholder(String),
    #[error("no template registered for role {0}")]
    MissingRole(Role),
    #[error("unterminated placeholder at byte {0}")]
    Unterminated(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

/// Splits `text` into literal runs and `{{name}}` slots.
fn pieces(text: &str) -> Result<Vec<Piece<'_>>, TemplateError> {
    let mut out = Vec::new();
    let mut rest = text;
    let mut offset = 0;
    while let Some(open) = rest.find("{{") {
        let after = &rest[open + 2..];
        let close = after.find("}}").ok_or(TemplateError::Unterminated(offset + open))?;
        let name = &after[..close];
        let valid = !name.is_empty()
            && name.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_');
        if valid {
            out.push(Piece::Text(&rest[..open]));
            out.push(Piece::Slot(name));
        } else {
            out.push(Piece::Text(&rest[..open + 2]));
            rest = &rest[open + 2..];
            offset += open + 2;
            continue;
        }
        let consumed = open + 2 + close + 2;
        rest = &rest[consumed..];
        offset += consumed;
    }
    out.push(Piece::Text(rest));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub role: Role,
    pub template_text: String,
    pub required_placeholders: BTreeSet<String>,
}

impl PromptTemplate {
    pub fn new(role: Role, template_text: impl Into<String>) -> Result<Self, TemplateError> {
        let template_text = template_text.into();
        let required_placeholders = pieces(&template_text)?
            .into_iter()
            .filter_map(|p| match p {
                Piece::Slot(name) => Some(name.to_string()),
                Piece::Text(_) => None,
            })
            .collect();
        Ok(PromptTemplate { role, template_text, required_placeholders })
    }

    /// Substitutes every slot in one pass; values are never re-scanned.
    pub fn render(&self, vars: &[(&str, &str)]) -> Result<String, TemplateError> {
        let lookup = |name: &str| vars.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);
        if let Some(missing) = self.required_placeholders.iter().find(|n| lookup(n).is_none()) {
            return Err(TemplateError::MissingPlaceholder(missing.clone()));
        }
        let mut out = String::with_capacity(self.template_text.len());
        for piece in pieces(&self.template_text)? {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(name) => out.push_str(lookup(name).unwrap_or_default()),
            }
        }
        Ok(out)
    }
}

/// Exactly one template per role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<Role, PromptTemplate>,
}

const DEFAULTS: [(Role, &str); 7] = [
    (Role::Cleanser, include_str!("../../templates/cleanser.txt")),
    (Role::Describer, include_str!("../../templates/describer.txt")),
    (Role::Analyzer, include_str!("../../templates/analyzer.txt")),
    (Role::RelevanceReviewer, include_str!("../../templates/relevance_reviewer.txt")),
    (Role::CollisionReviewer, include_str!("../../templates/collision_reviewer.txt")),
    (Role::QueryReviewer, include_str!("../../templates/query_reviewer.txt")),
    (Role::Organizer, include_str!("../../templates/organizer.txt")),
];

impl Default for TemplateSet {
    fn default() -> Self {
        let templates = DEFAULTS
            .iter()
            .map(|&(role, text)| (role, PromptTemplate::new(role, text).expect("bundled template parses")))
            .collect();
        TemplateSet { templates }
    }
}

impl TemplateSet {
    /// Builds a set from `(role, text)` pairs; every role must be covered.
    pub fn from_texts<'t>(
        texts: impl IntoIterator<Item = (Role, &'t str)>,
    ) -> Result<Self, TemplateError> {
        let mut templates = BTreeMap::new();
        for (role, text) in texts {
            templates.insert(role, PromptTemplate::new(role, text)?);
        }
        if let Some(role) = Role::ALL.into_iter().find(|r| !templates.contains_key(r)) {
            return Err(TemplateError::MissingRole(role));
        }
        Ok(TemplateSet { templates })
    }

    /// Replaces one role's template.
    pub fn with_template(mut self, template: PromptTemplate) -> Self {
        self.templates.insert(template.role, template);
        self
    }

    pub fn get(&self, role: Role) -> &PromptTemplate {
        &self.templates[&role]
    }

    pub fn render(&self, role: Role, vars: &[(&str, &str)]) -> Result<String, TemplateError> {
        self.templates.get(&role).ok_or(TemplateError::MissingRole(role))?.render(vars)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_role_has_a_bundled_template() {
        let set = TemplateSet::default();
        for role in Role::ALL {
            assert_eq!(set.get(role).role, role);
            assert!(!set.get(role).required_placeholders.is_empty(), "{role}");
        }
    }

    #[test]
    fn describer_embeds_code_verbatim() {
        let set = TemplateSet::default();
        let code = "void m(){}";
        let out = set
            .render(Role::Describer, &[("code", code), ("class", "A"), ("method", "m"), ("scope", "method")])
            .unwrap();
        assert!(out.contains(code));
        assert!(!out.contains("{{"));
    }

    #[test]
    fn describer_asks_for_function_io_and_malicious_intent() {
        let text = &TemplateSet::default().get(Role::Describer).template_text.to_lowercase();
        for needle in ["input", "output", "malicious", "functionality"] {
            assert!(text.contains(needle), "{needle}");
        }
    }

    #[test]
    fn analyzer_states_the_terminal_contract() {
        let t = TemplateSet::default();
        let text = &t.get(Role::Analyzer).template_text;
        assert!(text.contains("VERDICT:"));
        assert!(text.contains("PATHS:"));
        assert!(text.contains("fully qualified"));
        assert!(t.get(Role::Analyzer).required_placeholders.contains("followup_instructions"));
    }

    #[test]
    fn missing_placeholder() {
        let set = TemplateSet::default();
        let err = set
            .render(Role::Analyzer, &[("location", "x"), ("description", "d"), ("code", "c")])
            .unwrap_err();
        assert!(matches!(err, TemplateError::MissingPlaceholder(_)));
        let t = PromptTemplate::new(Role::Analyzer, "Q: {{query}} / {{code}}").unwrap();
        assert_eq!(
            t.render(&[("code", "c")]),
            Err(TemplateError::MissingPlaceholder("query".into()))
        );
    }

    #[test]
    fn rendering_is_deterministic_and_single_pass() {
        let t = PromptTemplate::new(Role::Cleanser, "a {{code}} b {{code}}").unwrap();
        let vars = [("code", "{{code}} x")];
        let first = t.render(&vars).unwrap();
        assert_eq!(first, "a {{code}} x b {{code}} x");
        assert_eq!(first, t.render(&vars).unwrap());
    }

    #[test]
    fn non_placeholder_braces_pass_through() {
        let t = PromptTemplate::new(Role::Cleanser, "map {{ A }} {{x}}").unwrap();
        assert_eq!(t.required_placeholders.len(), 1);
        assert_eq!(t.render(&[("x", "1")]).unwrap(), "map {{ A }} 1");
        assert!(matches!(
            PromptTemplate::new(Role::Cleanser, "oops {{x"),
            Err(TemplateError::Unterminated(5))
        ));
    }

    #[test]
    fn from_texts_requires_all_roles() {
        let err = TemplateSet::from_texts([(Role::Cleanser, "{{code}}")]).unwrap_err();
        assert_eq!(err, TemplateError::MissingRole(Role::Describer));
    }
}
