//! Canonical text form of a vocabulary. Re-parsing the rendered text
//! yields a structurally equal model.

use super::{FactKind, RuleRhs, RuleScope, Vocabulary};

/// Emit one line per term, fact type, and rule in declaration order,
/// grouped in that order, using canonical spelling: bare `T:`/`F:`
/// prefixes, a single space after `NR:`, copula "are", and the article
/// picked by the following word's initial vowel. Lines end with LF;
/// an empty vocabulary renders as the empty string.
pub fn canonical_render(v: &Vocabulary) -> String {
    let mut out = String::new();
    for term in &v.terms {
        out.push_str("T:");
        out.push_str(&term.name);
        out.push('\n');
    }
    for fact in &v.fact_types {
        let verb = match fact.kind {
            FactKind::Attribute => "has",
            FactKind::Link => "is linked to",
        };
        out.push_str(&format!(
            "F:{} {} {}\n",
            v.term_name(fact.subject),
            verb,
            v.term_name(fact.object)
        ));
    }
    for rule in &v.rules {
        let subject = v.term_name(rule.scope.subject());
        let attr = v.term_name(rule.attribute);
        out.push_str("NR: For ");
        out.push_str(article(subject));
        out.push(' ');
        out.push_str(subject);
        if let RuleScope::Link { object, .. } = rule.scope {
            let object = v.term_name(object);
            out.push_str(" that is linked to ");
            out.push_str(article(object));
            out.push(' ');
            out.push_str(object);
        }
        out.push_str(&format!(
            " it is obligatory that the {attr} of the new {subject} are {} ",
            rule.comparison.phrase()
        ));
        match &rule.rhs {
            RuleRhs::OldAttribute => {
                out.push_str(&format!("the {attr} of the old {subject}"));
            }
            RuleRhs::Literal(n) => out.push_str(n.as_str()),
        }
        out.push_str(".\n");
    }
    out
}

fn article(word: &str) -> &'static str {
    match word.chars().next() {
        Some(c) if "aeiouAEIOU".contains(c) => "an",
        _ => "a",
    }
}
