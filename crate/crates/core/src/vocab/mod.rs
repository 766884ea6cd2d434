//! Structured-English business vocabularies: terms, fact types, and
//! normative rules, parsed from `.sbvr` sources.
//!
//! A vocabulary source is line-oriented. `T:` lines declare terms, `F:`
//! lines declare fact types over those terms ("has" for attributes,
//! "is linked to" for relationships), and `NR:` lines state obligations
//! in a fixed sentence template. Blank lines and `#` comments are skipped.

mod parse;
mod render;

pub use parse::parse_vocabulary;
pub use render::canonical_render;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::diag::Diagnostic;

/// Index of a [`Term`] within its [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    /// Non-empty, unique (case-sensitive), may contain internal spaces.
    pub name: String,
    /// 0-based position among `T:` declarations.
    pub declaration_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactKind {
    /// `<subject> has <object>` — object becomes a column of subject.
    Attribute,
    /// `<subject> is linked to <object>` — becomes a relationship table.
    Link,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactType {
    pub kind: FactKind,
    pub subject: TermId,
    pub object: TermId,
    /// 0-based position among `F:` declarations.
    pub declaration_index: usize,
}

/// Comparison operator of a normative rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    LessThan,
    GreaterThan,
    EqualTo,
    AtLeast,
    AtMost,
}

impl Comparison {
    pub const ALL: [Comparison; 5] = [
        Comparison::LessThan,
        Comparison::GreaterThan,
        Comparison::EqualTo,
        Comparison::AtLeast,
        Comparison::AtMost,
    ];

    /// Surface phrase used in rule sentences.
    pub fn phrase(self) -> &'static str {
        match self {
            Comparison::LessThan => "less than",
            Comparison::GreaterThan => "greater than",
            Comparison::EqualTo => "equal to",
            Comparison::AtLeast => "at least",
            Comparison::AtMost => "at most",
        }
    }

    /// SQL operator emitted into trigger conditions.
    pub fn sql_op(self) -> &'static str {
        match self {
            Comparison::LessThan => "<",
            Comparison::GreaterThan => ">",
            Comparison::EqualTo => "=",
            Comparison::AtLeast => ">=",
            Comparison::AtMost => "<=",
        }
    }

    /// Evaluate the comparison over two numbers (new op old).
    pub fn eval(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::LessThan => lhs < rhs,
            Comparison::GreaterThan => lhs > rhs,
            Comparison::EqualTo => lhs == rhs,
            Comparison::AtLeast => lhs >= rhs,
            Comparison::AtMost => lhs <= rhs,
        }
    }
}

/// A validated numeric literal, kept in its source spelling so that
/// rendering and SQL emission reproduce it byte for byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberLiteral(String);

impl NumberLiteral {
    /// Accepts an optionally signed decimal: `100`, `-3`, `99.5`.
    pub fn new(text: impl Into<String>) -> Result<Self, String> {
        let text = text.into();
        let body = text.strip_prefix('-').unwrap_or(&text);
        let (whole, frac) = match body.split_once('.') {
            Some((w, f)) => (w, Some(f)),
            None => (body, None),
        };
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if digits(whole) && frac.is_none_or(digits) {
            Ok(NumberLiteral(text))
        } else {
            Err(format!("invalid numeric literal '{text}'"))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn value(&self) -> f64 {
        self.0.parse().expect("validated literal")
    }
}

impl fmt::Display for NumberLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// What the rule's obligation applies to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleScope {
    /// `For a <subject> that is linked to a <object> …` — guards relinking
    /// rows of the corresponding relationship table.
    Link { subject: TermId, object: TermId },
    /// `For a <subject> …` — guards updates of the attribute column itself.
    Term { subject: TermId },
}

impl RuleScope {
    pub fn subject(&self) -> TermId {
        match *self {
            RuleScope::Link { subject, .. } | RuleScope::Term { subject } => subject,
        }
    }
}

/// Right-hand side of the rule comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleRhs {
    /// `… the <attr> of the old <subject>`.
    OldAttribute,
    /// A numeric literal.
    Literal(NumberLiteral),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormativeRule {
    /// `"NR"` followed by the rule's 1-based position in source order.
    pub name: String,
    pub scope: RuleScope,
    /// The attribute term being constrained; always an attribute of the
    /// scope subject.
    pub attribute: TermId,
    pub comparison: Comparison,
    pub rhs: RuleRhs,
}

/// The parsed model of one vocabulary source.
///
/// Equality is structural over terms, fact types, and rules;
/// `source_text` is ignored so that a re-parse of [`canonical_render`]
/// output compares equal to the original.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    pub terms: Vec<Term>,
    pub fact_types: Vec<FactType>,
    pub rules: Vec<NormativeRule>,
    pub source_text: String,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
            && self.fact_types == other.fact_types
            && self.rules == other.rules
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    pub fn parse(source: &str) -> Result<Self, Vec<Diagnostic>> {
        parse_vocabulary(source)
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.0]
    }

    pub fn term_name(&self, id: TermId) -> &str {
        &self.terms[id.0].name
    }

    pub fn term_named(&self, name: &str) -> Option<TermId> {
        self.terms.iter().position(|t| t.name == name).map(TermId)
    }

    /// Term ids that appear as the object of an attribute fact. These
    /// become columns, never tables.
    pub fn attribute_object_ids(&self) -> BTreeSet<TermId> {
        self.fact_types
            .iter()
            .filter(|f| f.kind == FactKind::Attribute)
            .map(|f| f.object)
            .collect()
    }

    /// Attribute facts whose subject is `term`, in declaration order.
    pub fn attributes_of(&self, term: TermId) -> impl Iterator<Item = &FactType> {
        self.fact_types
            .iter()
            .filter(move |f| f.kind == FactKind::Attribute && f.subject == term)
    }

    /// True when a link fact `subject is linked to object` is declared
    /// with exactly this direction.
    pub fn has_link(&self, subject: TermId, object: TermId) -> bool {
        self.fact_types
            .iter()
            .any(|f| f.kind == FactKind::Link && f.subject == subject && f.object == object)
    }

    pub fn is_attribute_of(&self, attribute: TermId, subject: TermId) -> bool {
        self.attributes_of(subject).any(|f| f.object == attribute)
    }
}

/// Re-check every model invariant. Empty diagnostics iff the vocabulary
/// is well-formed. Diagnostics raised here carry no line numbers; the
/// parser runs the same checks with source positions attached.
pub fn validate_vocabulary(v: &Vocabulary) -> Vec<Diagnostic> {
    check_model(v, |_| None)
}

/// Which declaration a model check is complaining about; lets the parser
/// map findings back to source lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DeclRef {
    Term(usize),
    Fact(usize),
    Rule(usize),
}

pub(crate) fn check_model(
    v: &Vocabulary,
    line_of: impl Fn(DeclRef) -> Option<u32>,
) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut err = |decl: DeclRef, msg: String| diags.push(Diagnostic::error(line_of(decl), msg));

    // Terms: names are non-empty, printable-safe, unique, and must not
    // collide with the relationship-table naming scheme.
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, term) in v.terms.iter().enumerate() {
        if term.name.is_empty() {
            err(DeclRef::Term(i), "empty term name".into());
            continue;
        }
        if term.name.contains('"') {
            err(
                DeclRef::Term(i),
                format!("term name '{}' contains a double quote", term.name),
            );
        }
        if term.name.contains('\n') || term.name.contains('\r') {
            err(
                DeclRef::Term(i),
                "term name contains a line break".to_string(),
            );
        }
        if term.name.contains("-is_linked_to-") {
            err(
                DeclRef::Term(i),
                format!(
                    "term name '{}' collides with relationship table naming",
                    term.name
                ),
            );
        }
        if seen.insert(&term.name, i).is_some() {
            err(
                DeclRef::Term(i),
                format!("duplicate term declaration '{}'", term.name),
            );
        }
    }

    let in_range = |id: TermId| id.0 < v.terms.len();

    // Fact types: resolvable endpoints, no duplicates, no self-links.
    let mut seen_facts: BTreeSet<(bool, usize, usize)> = BTreeSet::new();
    for (i, fact) in v.fact_types.iter().enumerate() {
        for id in [fact.subject, fact.object] {
            if !in_range(id) {
                err(DeclRef::Fact(i), format!("dangling term reference #{}", id.0));
            }
        }
        if !in_range(fact.subject) || !in_range(fact.object) {
            continue;
        }
        if fact.kind == FactKind::Link && fact.subject == fact.object {
            err(
                DeclRef::Fact(i),
                format!(
                    "term '{}' may not be linked to itself",
                    v.term_name(fact.subject)
                ),
            );
        }
        if fact.kind == FactKind::Attribute && fact.subject == fact.object {
            err(
                DeclRef::Fact(i),
                format!(
                    "term '{}' may not be an attribute of itself",
                    v.term_name(fact.subject)
                ),
            );
        }
        if !seen_facts.insert((fact.kind == FactKind::Link, fact.subject.0, fact.object.0)) {
            err(
                DeclRef::Fact(i),
                format!(
                    "duplicate fact type '{}'",
                    fact_sentence(v, fact.kind, fact.subject, fact.object)
                ),
            );
        }
    }

    // Role separation: a term used as an attribute (object of "has") may
    // not also participate in links or own facts of its own — mixed roles
    // would make schema derivation ambiguous.
    let attr_objects = v.attribute_object_ids();
    let mut flagged: BTreeSet<TermId> = BTreeSet::new();
    for fact in &v.fact_types {
        if !in_range(fact.subject) || !in_range(fact.object) {
            continue;
        }
        let fact_idx = fact.declaration_index;
        let mut flag = |id: TermId, role: &str| {
            if attr_objects.contains(&id) && flagged.insert(id) {
                err(
                    DeclRef::Fact(fact_idx),
                    format!(
                        "term '{}' is used both as an attribute and as a {role}",
                        v.term_name(id)
                    ),
                );
            }
        };
        match fact.kind {
            FactKind::Link => {
                flag(fact.subject, "link participant");
                flag(fact.object, "link participant");
            }
            FactKind::Attribute => flag(fact.subject, "fact subject"),
        }
        if fact.kind == FactKind::Attribute && v.term_name(fact.object) == "id" {
            err(
                DeclRef::Fact(fact_idx),
                "attribute name 'id' conflicts with the identity column".to_string(),
            );
        }
    }

    // Rules: derived names, resolvable references, declared facts.
    for (i, rule) in v.rules.iter().enumerate() {
        let expected = format!("NR{}", i + 1);
        if rule.name != expected {
            err(
                DeclRef::Rule(i),
                format!("rule name '{}' should be '{}'", rule.name, expected),
            );
        }
        let ids: &[TermId] = match &rule.scope {
            RuleScope::Link { subject, object } => &[*subject, *object, rule.attribute],
            RuleScope::Term { subject } => &[*subject, rule.attribute],
        };
        if ids.iter().any(|id| !in_range(*id)) {
            err(DeclRef::Rule(i), "dangling term reference in rule".into());
            continue;
        }
        if let RuleScope::Link { subject, object } = rule.scope {
            if !v.has_link(subject, object) {
                err(
                    DeclRef::Rule(i),
                    format!(
                        "no link fact type declared between '{}' and '{}'",
                        v.term_name(subject),
                        v.term_name(object)
                    ),
                );
            }
        }
        let subject = rule.scope.subject();
        if !v.is_attribute_of(rule.attribute, subject) {
            err(
                DeclRef::Rule(i),
                format!(
                    "undeclared attribute '{}' for term '{}'",
                    v.term_name(rule.attribute),
                    v.term_name(subject)
                ),
            );
        }
    }

    diags
}

fn fact_sentence(v: &Vocabulary, kind: FactKind, subject: TermId, object: TermId) -> String {
    let verb = match kind {
        FactKind::Attribute => "has",
        FactKind::Link => "is linked to",
    };
    format!("{} {} {}", v.term_name(subject), verb, v.term_name(object))
}
