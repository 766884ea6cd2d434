//! Line-oriented parser for the `.sbvr` source format.

use std::collections::BTreeMap;

use crate::diag::Diagnostic;

use super::{
    check_model, Comparison, DeclRef, FactKind, FactType, NormativeRule, NumberLiteral, RuleRhs,
    RuleScope, Term, TermId, Vocabulary,
};

/// Parse a vocabulary source. Returns the model when the source is free
/// of errors, otherwise every diagnostic found — parsing never both
/// succeeds and reports errors.
///
/// Lines are classified by prefix: `T:` term, `F:` fact type, `NR:`
/// normative rule. Whitespace after the colon is trimmed. Blank lines
/// and lines starting with `#` are skipped. CRLF input is accepted.
pub fn parse_vocabulary(source: &str) -> Result<Vocabulary, Vec<Diagnostic>> {
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut term_lines: Vec<(u32, String)> = Vec::new();
    let mut fact_lines: Vec<(u32, String)> = Vec::new();
    let mut rule_lines: Vec<(u32, String)> = Vec::new();

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx as u32 + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("NR:") {
            rule_lines.push((line_no, rest.trim().to_string()));
        } else if let Some(rest) = line.strip_prefix("T:") {
            term_lines.push((line_no, rest.trim().to_string()));
        } else if let Some(rest) = line.strip_prefix("F:") {
            fact_lines.push((line_no, rest.trim().to_string()));
        } else {
            let shown = line.split(':').next().unwrap_or(line);
            diags.push(Diagnostic::error(
                line_no,
                format!("unknown line prefix '{shown}'"),
            ));
        }
    }

    // Terms first so that fact types and rules may reference a term
    // declared anywhere in the file.
    let mut vocab = Vocabulary {
        source_text: source.to_string(),
        ..Vocabulary::default()
    };
    let mut by_name: BTreeMap<String, TermId> = BTreeMap::new();
    let mut term_line_of: Vec<u32> = Vec::new();
    for (line_no, name) in &term_lines {
        if name.is_empty() {
            diags.push(Diagnostic::error(*line_no, "empty term name"));
            continue;
        }
        if by_name.contains_key(name) {
            diags.push(Diagnostic::error(
                *line_no,
                format!("duplicate term declaration '{name}'"),
            ));
            continue;
        }
        let id = TermId(vocab.terms.len());
        by_name.insert(name.clone(), id);
        term_line_of.push(*line_no);
        vocab.terms.push(Term {
            name: name.clone(),
            declaration_index: id.0,
        });
    }

    let mut fact_line_of: Vec<u32> = Vec::new();
    for (line_no, sentence) in &fact_lines {
        match parse_fact(sentence, &by_name) {
            Ok((kind, subject, object)) => {
                fact_line_of.push(*line_no);
                vocab.fact_types.push(FactType {
                    kind,
                    subject,
                    object,
                    declaration_index: vocab.fact_types.len(),
                });
            }
            Err(msg) => diags.push(Diagnostic::error(*line_no, msg)),
        }
    }

    let mut rule_line_of: Vec<u32> = Vec::new();
    for (ordinal, (line_no, sentence)) in rule_lines.iter().enumerate() {
        let name = format!("NR{}", ordinal + 1);
        match parse_rule(sentence, name, &by_name, &vocab) {
            Ok(rule) => {
                rule_line_of.push(*line_no);
                vocab.rules.push(rule);
            }
            Err(msg) => diags.push(Diagnostic::error(*line_no, msg)),
        }
    }

    // Model-level invariants (duplicate facts, role mixing, …) with the
    // findings mapped back to their source lines.
    diags.extend(check_model(&vocab, |decl| match decl {
        DeclRef::Term(i) => term_line_of.get(i).copied(),
        DeclRef::Fact(i) => fact_line_of.get(i).copied(),
        DeclRef::Rule(i) => rule_line_of.get(i).copied(),
    }));

    if diags.is_empty() {
        Ok(vocab)
    } else {
        diags.sort_by_key(|d| d.line);
        Err(diags)
    }
}

/// `<subject> has <object>` or `<subject> is linked to <object>`.
/// The leftmost verb occurrence splits the sentence.
fn parse_fact(
    sentence: &str,
    by_name: &BTreeMap<String, TermId>,
) -> Result<(FactKind, TermId, TermId), String> {
    const VERBS: [(&str, FactKind); 4] = [
        (" has ", FactKind::Attribute),
        (" have ", FactKind::Attribute),
        (" is linked to ", FactKind::Link),
        (" are linked to ", FactKind::Link),
    ];
    let hit = VERBS
        .iter()
        .filter_map(|(verb, kind)| sentence.find(verb).map(|pos| (pos, *verb, *kind)))
        .min_by_key(|(pos, _, _)| *pos);
    let Some((pos, verb, kind)) = hit else {
        return Err("malformed fact type: expected 'has' or 'is linked to'".into());
    };
    let subject = &sentence[..pos];
    let object = &sentence[pos + verb.len()..];
    if subject.is_empty() || object.is_empty() {
        return Err("malformed fact type: missing term around the verb".into());
    }
    let resolve = |name: &str| {
        by_name
            .get(name)
            .copied()
            .ok_or_else(|| format!("undeclared term '{name}'"))
    };
    Ok((kind, resolve(subject)?, resolve(object)?))
}

/// Cursor over a rule sentence. Captures run up to the leftmost
/// occurrence of a fixed marker; when several markers match at the same
/// position the longest wins.
struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn eat_any(&mut self, lits: &[&'static str]) -> Option<&'static str> {
        // Longest first so that "an " is not shadowed by "a ".
        let mut sorted: Vec<&'static str> = lits.to_vec();
        sorted.sort_by_key(|l| std::cmp::Reverse(l.len()));
        sorted.into_iter().find(|lit| self.eat(lit))
    }

    fn capture_until(&mut self, markers: &[&'static str]) -> Option<(&'a str, &'static str)> {
        let rest = self.rest();
        let hit = markers
            .iter()
            .filter_map(|m| rest.find(m).map(|pos| (pos, *m)))
            .min_by_key(|(pos, m)| (*pos, std::cmp::Reverse(m.len())));
        let (pos, marker) = hit?;
        let captured = &rest[..pos];
        self.pos += pos + marker.len();
        Some((captured, marker))
    }

    fn found(&self, len: usize) -> String {
        let rest = self.rest();
        if rest.is_empty() {
            return "end of line".to_string();
        }
        let mut end = rest.len().min(len);
        while !rest.is_char_boundary(end) {
            end -= 1;
        }
        format!("'{}'", &rest[..end])
    }
}

const LINK_MARKERS: [&str; 4] = [
    " that is linked to a ",
    " that is linked to an ",
    " that are linked to a ",
    " that are linked to an ",
];
const OBLIGATION: &str = " it is obligatory that ";

/// One canonical sentence per scope:
///
/// * `For a(n) A that is linked to a(n) B it is obligatory that the
///   <attr> of the new A is/are <cmp> the <attr> of the old A.`
/// * `For a(n) A it is obligatory that the <attr> of the new A is/are
///   <cmp> <number | the <attr> of the old A>.`
fn parse_rule(
    sentence: &str,
    name: String,
    by_name: &BTreeMap<String, TermId>,
    vocab: &Vocabulary,
) -> Result<NormativeRule, String> {
    let mut cur = Cursor::new(sentence);
    if !cur.eat("For ") {
        return Err(format!("malformed rule: expected 'For', found {}", cur.found(12)));
    }
    if cur.eat_any(&["an ", "a "]).is_none() {
        return Err(format!(
            "malformed rule: expected 'a' or 'an', found {}",
            cur.found(12)
        ));
    }

    let mut scope_markers: Vec<&'static str> = LINK_MARKERS.to_vec();
    scope_markers.push(OBLIGATION);
    let Some((subject_name, marker)) = cur.capture_until(&scope_markers) else {
        return Err(
            "malformed rule: expected 'that is linked to' or 'it is obligatory that'".into(),
        );
    };

    let object_name = if marker == OBLIGATION {
        None
    } else {
        let Some((object_name, _)) = cur.capture_until(&[OBLIGATION]) else {
            return Err("malformed rule: expected 'it is obligatory that'".into());
        };
        Some(object_name)
    };

    if !cur.eat("the ") {
        return Err(format!("malformed rule: expected 'the', found {}", cur.found(12)));
    }
    let Some((attr_name, _)) = cur.capture_until(&[" of the new "]) else {
        return Err("malformed rule: expected 'of the new'".into());
    };
    if !cur.eat(subject_name) {
        return Err(format!(
            "malformed rule: expected term '{subject_name}' after 'of the new', found {}",
            cur.found(subject_name.len())
        ));
    }
    if cur.eat_any(&[" are ", " is "]).is_none() {
        return Err(format!(
            "malformed rule: expected 'is' or 'are', found {}",
            cur.found(8)
        ));
    }

    let comparison_phrases: [(&str, Comparison); 5] = [
        ("less than ", Comparison::LessThan),
        ("greater than ", Comparison::GreaterThan),
        ("equal to ", Comparison::EqualTo),
        ("at least ", Comparison::AtLeast),
        ("at most ", Comparison::AtMost),
    ];
    let comparison = comparison_phrases
        .iter()
        .find(|(phrase, _)| cur.eat(phrase))
        .map(|(_, cmp)| *cmp)
        .ok_or_else(|| {
            format!(
                "malformed rule: expected one of 'less than', 'greater than', 'equal to', \
                 'at least', 'at most', found {}",
                cur.found(16)
            )
        })?;

    let old_form = format!("the {attr_name} of the old {subject_name}");
    let rhs = if cur.eat("the ") {
        let Some((rhs_attr, _)) = cur.capture_until(&[" of the old "]) else {
            return Err("malformed rule: expected 'of the old'".into());
        };
        if rhs_attr != attr_name {
            return Err(format!(
                "malformed rule: expected attribute '{attr_name}' after 'the', found '{rhs_attr}'"
            ));
        }
        if !cur.eat(subject_name) {
            return Err(format!(
                "malformed rule: expected term '{subject_name}' after 'of the old', found {}",
                cur.found(subject_name.len())
            ));
        }
        if !cur.eat(".") {
            return Err(format!("malformed rule: expected '.', found {}", cur.found(8)));
        }
        RuleRhs::OldAttribute
    } else {
        let rest = cur.rest();
        let Some(number_text) = rest.strip_suffix('.').map(str::trim_end) else {
            return Err("malformed rule: expected '.' at end of sentence".into());
        };
        if object_name.is_some() {
            // The link-scoped sentence admits only the old-attribute form.
            return Err(format!("malformed rule: expected '{old_form}'"));
        }
        let literal = NumberLiteral::new(number_text).map_err(|_| {
            format!("malformed rule: expected a number or '{old_form}', found '{number_text}'")
        })?;
        cur.pos = cur.text.len();
        RuleRhs::Literal(literal)
    };

    if !cur.rest().trim().is_empty() {
        return Err(format!(
            "malformed rule: unexpected text after '.': {}",
            cur.found(16)
        ));
    }

    let resolve = |name: &str| {
        by_name
            .get(name)
            .copied()
            .ok_or_else(|| format!("undeclared term '{name}'"))
    };
    let subject = resolve(subject_name)?;
    let scope = match object_name {
        Some(object_name) => {
            let object = resolve(object_name)?;
            if !vocab.has_link(subject, object) {
                return Err(format!(
                    "no link fact type declared between '{subject_name}' and '{object_name}'"
                ));
            }
            RuleScope::Link { subject, object }
        }
        None => RuleScope::Term { subject },
    };
    let attribute = by_name.get(attr_name).copied().filter(|&attr| {
        vocab.is_attribute_of(attr, subject)
    });
    let Some(attribute) = attribute else {
        return Err(format!(
            "undeclared attribute '{attr_name}' for term '{subject_name}'"
        ));
    };

    Ok(NormativeRule {
        name,
        scope,
        attribute,
        comparison,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::Severity;

    const GUARD_VOCAB: &str = include_str!("../../tests/data/relink_guard.sbvr");

    #[test]
    fn parses_the_relink_guard_vocabulary() {
        let v = parse_vocabulary(GUARD_VOCAB).unwrap();
        assert_eq!(
            v.terms.iter().map(|t| t.name.as_str()).collect::<Vec<_>>(),
            ["SLA", "SVC", "total fines"]
        );
        assert_eq!(v.fact_types.len(), 2);
        assert_eq!(v.fact_types[0].kind, FactKind::Attribute);
        assert_eq!(v.fact_types[1].kind, FactKind::Link);
        assert_eq!(v.rules.len(), 1);
        let rule = &v.rules[0];
        assert_eq!(rule.name, "NR1");
        assert_eq!(
            rule.scope,
            RuleScope::Link {
                subject: v.term_named("SLA").unwrap(),
                object: v.term_named("SVC").unwrap(),
            }
        );
        assert_eq!(rule.attribute, v.term_named("total fines").unwrap());
        assert_eq!(rule.comparison, Comparison::LessThan);
        assert_eq!(rule.rhs, RuleRhs::OldAttribute);
    }

    #[test]
    fn empty_input_is_empty_vocabulary() {
        let v = parse_vocabulary("").unwrap();
        assert!(v.terms.is_empty() && v.fact_types.is_empty() && v.rules.is_empty());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let v = parse_vocabulary("# heading\n\nT:HOS\n   \n# done\n").unwrap();
        assert_eq!(v.terms.len(), 1);
    }

    #[test]
    fn missing_attribute_fact_is_reported() {
        let src = "T:SLA\nNR: For an SLA it is obligatory that the total fines of the new SLA \
                   are less than 100.\n";
        let diags = parse_vocabulary(src).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Error);
        assert_eq!(diags[0].line, Some(2));
        assert_eq!(
            diags[0].message,
            "undeclared attribute 'total fines' for term 'SLA'"
        );
    }

    #[test]
    fn unknown_prefix_is_an_error_not_a_term() {
        let diags = parse_vocabulary("TX:SLA\n").unwrap_err();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("unknown line prefix 'TX'"));
    }

    #[test]
    fn term_scope_literal_rule_parses() {
        let src = "T:SLA\nT:total fines\nF:SLA has total fines\n\
                   NR: For an SLA it is obligatory that the total fines of the new SLA are \
                   less than 100.\n";
        let v = parse_vocabulary(src).unwrap();
        let rule = &v.rules[0];
        assert!(matches!(rule.scope, RuleScope::Term { .. }));
        assert_eq!(rule.rhs, RuleRhs::Literal(NumberLiteral::new("100").unwrap()));
    }

    #[test]
    fn term_scope_old_attribute_rule_parses() {
        let src = "T:SLA\nT:total fines\nF:SLA has total fines\n\
                   NR: For an SLA it is obligatory that the total fines of the new SLA is \
                   at least the total fines of the old SLA.\n";
        let v = parse_vocabulary(src).unwrap();
        assert_eq!(v.rules[0].comparison, Comparison::AtLeast);
        assert_eq!(v.rules[0].rhs, RuleRhs::OldAttribute);
    }

    #[test]
    fn link_scope_rejects_numeric_rhs() {
        let src = "T:SLA\nT:SVC\nT:total fines\nF:SLA has total fines\nF:SLA is linked to SVC\n\
                   NR: For an SLA that is linked to an SVC it is obligatory that the total \
                   fines of the new SLA are less than 100.\n";
        let diags = parse_vocabulary(src).unwrap_err();
        assert!(diags[0].message.contains("expected 'the total fines of the old SLA'"));
    }

    #[test]
    fn undirected_link_reference_is_rejected() {
        let src = "T:SLA\nT:SVC\nT:total fines\nF:SVC has total fines\nF:SLA is linked to SVC\n\
                   NR: For an SVC that is linked to an SLA it is obligatory that the total \
                   fines of the new SVC are less than the total fines of the old SVC.\n";
        let diags = parse_vocabulary(src).unwrap_err();
        assert!(diags[0]
            .message
            .contains("no link fact type declared between 'SVC' and 'SLA'"));
    }

    #[test]
    fn malformed_sentence_names_expected_token() {
        let src = "T:SLA\nT:total fines\nF:SLA has total fines\n\
                   NR: For an SLA it is mandatory that the total fines of the new SLA are \
                   less than 100.\n";
        let diags = parse_vocabulary(src).unwrap_err();
        assert!(diags[0].message.contains("expected"), "{}", diags[0].message);
    }

    #[test]
    fn crlf_input_is_accepted() {
        let src = GUARD_VOCAB.replace('\n', "\r\n");
        let v = parse_vocabulary(&src).unwrap();
        assert_eq!(v.terms.len(), 3);
    }

    #[test]
    fn rules_are_numbered_by_source_position() {
        let src = "T:SLA\nT:total fines\nF:SLA has total fines\n\
                   NR: For an SLA it is obligatory that the total fines of the new SLA are less than 5.\n\
                   NR: For an SLA it is obligatory that the total fines of the new SLA are at most 9.\n";
        let v = parse_vocabulary(src).unwrap();
        assert_eq!(v.rules[0].name, "NR1");
        assert_eq!(v.rules[1].name, "NR2");
    }

    #[test]
    fn forward_references_are_allowed() {
        let src = "F:SLA has total fines\nT:SLA\nT:total fines\n";
        let v = parse_vocabulary(src).unwrap();
        assert_eq!(v.fact_types.len(), 1);
    }
}
