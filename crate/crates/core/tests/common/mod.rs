//! Shared test support: seeded random generators for vocabularies,
//! service trees, and outage sets; brute-force oracles independent of
//! the library's query paths; a DOT-grammar checker; and a Monte-Carlo
//! expected-cost oracle.

#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, Utc};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use trigate::tree::{
    AvailabilityClause, AvailabilityForecast, CiKind, ConfigItem, MtcTerms, OutageEvent,
    PeriodKind, ServiceTree, SlaTerms,
};
use trigate::vocab::{
    Comparison, FactKind, FactType, NormativeRule, NumberLiteral, RuleRhs, RuleScope, Term,
    TermId, Vocabulary,
};
use trigate::Money;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ts(s: &str) -> DateTime<Utc> {
    s.parse().unwrap()
}

// ---------------------------------------------------------------------
// Random vocabularies
// ---------------------------------------------------------------------

const RESERVED: &[&str] = &[
    "a", "an", "is", "are", "has", "have", "that", "it", "obligatory", "the", "new", "old",
    "for", "linked", "to", "less", "greater", "equal", "at", "least", "most", "than", "of",
    "id",
];

fn random_word(rng: &mut ChaCha8Rng) -> String {
    loop {
        let len = rng.gen_range(3..=8);
        let word: String = (0..len)
            .map(|_| (b'a' + rng.gen_range(0..26)) as char)
            .collect();
        if !RESERVED.contains(&word.as_str()) {
            return word;
        }
    }
}

fn random_term_name(rng: &mut ChaCha8Rng, taken: &BTreeSet<String>) -> String {
    loop {
        let words = rng.gen_range(1..=2);
        let name = (0..words)
            .map(|_| random_word(rng))
            .collect::<Vec<_>>()
            .join(" ");
        if !taken.contains(&name) {
            return name;
        }
    }
}

/// A random valid vocabulary: up to `max_terms` terms split into entity
/// and attribute roles, attribute and link facts over them, and up to
/// `max_rules` rules in both scopes.
pub fn random_vocabulary(rng: &mut ChaCha8Rng, max_terms: usize, max_rules: usize) -> Vocabulary {
    let n_terms = rng.gen_range(1..=max_terms.max(1));
    let mut taken = BTreeSet::new();
    let mut terms = Vec::new();
    for i in 0..n_terms {
        let name = random_term_name(rng, &taken);
        taken.insert(name.clone());
        terms.push(Term {
            name,
            declaration_index: i,
        });
    }

    // Roles: attribute terms may only ever appear as "has" objects.
    let n_attr_terms = if n_terms >= 2 {
        rng.gen_range(0..=(n_terms / 2))
    } else {
        0
    };
    let attr_terms: Vec<TermId> = (n_terms - n_attr_terms..n_terms).map(TermId).collect();
    let entity_terms: Vec<TermId> = (0..n_terms - n_attr_terms).map(TermId).collect();

    let mut fact_types = Vec::new();
    let mut seen_attr: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut seen_link: BTreeSet<(usize, usize)> = BTreeSet::new();
    if !entity_terms.is_empty() {
        for &attr in &attr_terms {
            // Every attribute term is used at least once.
            let owners = rng.gen_range(1..=2.min(entity_terms.len()));
            for _ in 0..owners {
                let subject = *entity_terms.choose(rng).unwrap();
                if seen_attr.insert((subject.0, attr.0)) {
                    fact_types.push(FactType {
                        kind: FactKind::Attribute,
                        subject,
                        object: attr,
                        declaration_index: fact_types.len(),
                    });
                }
            }
        }
        if entity_terms.len() >= 2 {
            let n_links = rng.gen_range(0..=entity_terms.len());
            for _ in 0..n_links {
                let subject = *entity_terms.choose(rng).unwrap();
                let object = *entity_terms.choose(rng).unwrap();
                if subject != object && seen_link.insert((subject.0, object.0)) {
                    fact_types.push(FactType {
                        kind: FactKind::Link,
                        subject,
                        object,
                        declaration_index: fact_types.len(),
                    });
                }
            }
        }
    }

    // Rule material: (subject, attribute) pairs and links per subject.
    let attrs_of = |subject: TermId| -> Vec<TermId> {
        fact_types
            .iter()
            .filter(|f| f.kind == FactKind::Attribute && f.subject == subject)
            .map(|f| f.object)
            .collect()
    };
    let links_of = |subject: TermId| -> Vec<TermId> {
        fact_types
            .iter()
            .filter(|f| f.kind == FactKind::Link && f.subject == subject)
            .map(|f| f.object)
            .collect()
    };
    let rule_subjects: Vec<TermId> = entity_terms
        .iter()
        .copied()
        .filter(|&t| !attrs_of(t).is_empty())
        .collect();

    let mut rules = Vec::new();
    if !rule_subjects.is_empty() {
        let n_rules = rng.gen_range(0..=max_rules);
        for _ in 0..n_rules {
            let subject = *rule_subjects.choose(rng).unwrap();
            let attribute = *attrs_of(subject).choose(rng).unwrap();
            let comparison = *Comparison::ALL.choose(rng).unwrap();
            let links = links_of(subject);
            let scope = if !links.is_empty() && rng.gen_bool(0.5) {
                RuleScope::Link {
                    subject,
                    object: *links.choose(rng).unwrap(),
                }
            } else {
                RuleScope::Term { subject }
            };
            let rhs = match scope {
                RuleScope::Link { .. } => RuleRhs::OldAttribute,
                RuleScope::Term { .. } => {
                    if rng.gen_bool(0.5) {
                        RuleRhs::OldAttribute
                    } else {
                        let text = if rng.gen_bool(0.3) {
                            format!("{}.{}", rng.gen_range(0..500), rng.gen_range(1..10))
                        } else {
                            rng.gen_range(0..1000).to_string()
                        };
                        RuleRhs::Literal(NumberLiteral::new(text).unwrap())
                    }
                }
            };
            rules.push(NormativeRule {
                name: format!("NR{}", rules.len() + 1),
                scope,
                attribute,
                comparison,
                rhs,
            });
        }
    }

    Vocabulary {
        terms,
        fact_types,
        rules,
        source_text: String::new(),
    }
}

// ---------------------------------------------------------------------
// Random service trees
// ---------------------------------------------------------------------

pub struct TreeGen {
    pub max_items: usize,
    /// Small priority range so equal-priority candidates occur.
    pub tie_prone: bool,
    /// Cap on the total number of root paths, to keep brute-force
    /// enumeration cheap.
    pub max_occurrences: usize,
}

impl Default for TreeGen {
    fn default() -> Self {
        TreeGen {
            max_items: 30,
            tie_prone: true,
            max_occurrences: 2000,
        }
    }
}

pub fn random_sla_terms(rng: &mut ChaCha8Rng, priority: i64) -> SlaTerms {
    let mut clauses = Vec::new();
    for period in PeriodKind::ALL {
        if rng.gen_bool(0.3) {
            clauses.push(AvailabilityClause {
                period,
                min_percent: rng.gen_range(90.0..=100.0),
                fine: Money::from_cents(rng.gen_range(0..=50_000)),
            });
        }
    }
    SlaTerms::new(
        priority,
        Money::from_cents(rng.gen_range(0..=100_000)),
        Money::from_cents(rng.gen_range(0..=50_000)),
        clauses,
    )
}

/// Random valid service tree: 1–3 RFC roots, then a mix of items each
/// attached to 1–3 legal earlier parents (so the graph is acyclic by
/// construction), with shared nodes arising naturally.
pub fn random_tree(rng: &mut ChaCha8Rng, config: &TreeGen) -> ServiceTree {
    loop {
        let mut items: Vec<ConfigItem> = Vec::new();
        let mut kinds: Vec<CiKind> = Vec::new();
        let mut edges: Vec<(String, String)> = Vec::new();
        let mut path_counts: Vec<usize> = Vec::new();
        let mut counters = [0usize; 5];

        let new_id = |kind: CiKind, counters: &mut [usize; 5]| {
            let slot = match kind {
                CiKind::Rfc => 0,
                CiKind::Svc => 1,
                CiKind::Hos => 2,
                CiKind::Sla => 3,
                CiKind::Mtc => 4,
            };
            counters[slot] += 1;
            format!("{kind}{}", counters[slot])
        };

        let n_roots = rng.gen_range(1..=3);
        for _ in 0..n_roots {
            let id = new_id(CiKind::Rfc, &mut counters);
            items.push(ConfigItem {
                id: id.clone(),
                kind: CiKind::Rfc,
                label: format!("change {id}"),
                sla: None,
                mtc: None,
            });
            kinds.push(CiKind::Rfc);
            path_counts.push(1);
        }

        let total = rng.gen_range(n_roots..=config.max_items.max(n_roots));
        let mut sla_count = 0;
        while items.len() < total {
            let kind = match rng.gen_range(0..100) {
                0..=29 => CiKind::Svc,
                30..=54 => CiKind::Hos,
                55..=79 => CiKind::Sla,
                _ => CiKind::Mtc,
            };
            let legal: Vec<usize> = (0..items.len())
                .filter(|&p| kinds[p].may_parent(kind))
                .collect();
            if legal.is_empty() {
                continue;
            }
            let n_parents = match rng.gen_range(0..100) {
                0..=74 => 1,
                75..=94 => 2,
                _ => 3,
            }
            .min(legal.len());
            let parents: Vec<usize> = legal.choose_multiple(rng, n_parents).copied().collect();
            let paths: usize = parents.iter().map(|&p| path_counts[p]).sum();

            let id = new_id(kind, &mut counters);
            let (sla, mtc) = match kind {
                CiKind::Sla => {
                    sla_count += 1;
                    let priority = if config.tie_prone {
                        rng.gen_range(1..=4)
                    } else {
                        sla_count as i64
                    };
                    (Some(random_sla_terms(rng, priority)), None)
                }
                CiKind::Mtc => (
                    None,
                    Some(MtcTerms {
                        liability: Money::from_cents(rng.gen_range(0..=100_000)),
                    }),
                ),
                _ => (None, None),
            };
            for &p in &parents {
                edges.push((items[p].id.clone(), id.clone()));
            }
            items.push(ConfigItem {
                id,
                kind,
                label: format!("{kind} item"),
                sla,
                mtc,
            });
            kinds.push(kind);
            path_counts.push(paths);
        }

        if path_counts.iter().sum::<usize>() > config.max_occurrences {
            continue;
        }
        return ServiceTree::from_parts(items, edges)
            .expect("generated tree must satisfy all structural invariants");
    }
}

// ---------------------------------------------------------------------
// Brute-force oracles over materialized root paths
// ---------------------------------------------------------------------

/// Forward depth-first enumeration of every root-to-node path, fully
/// independent of `ServiceTree::occurrences` (which walks parent links).
pub fn enumerate_all_paths(tree: &ServiceTree) -> Vec<Vec<String>> {
    let mut all = Vec::new();
    let mut stack: Vec<Vec<String>> = tree
        .roots()
        .map(|r| vec![r.id.clone()])
        .collect();
    while let Some(path) = stack.pop() {
        let tail = path.last().unwrap().clone();
        for child in tree.children_of(&tail).unwrap() {
            let mut next = path.clone();
            next.push(child.id.clone());
            stack.push(next);
        }
        all.push(path);
    }
    all.sort();
    all
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSla {
    None,
    Unique(String),
    Tie(Vec<String>),
}

/// Scan the path for attached SLAs and take the maximum priority by
/// explicit comparison.
pub fn oracle_effective_sla(tree: &ServiceTree, path: &[String]) -> OracleSla {
    let mut candidates: Vec<(i64, String)> = Vec::new();
    for node in path {
        for child in tree.children_of(node).unwrap() {
            if child.kind == CiKind::Sla {
                let entry = (child.sla.as_ref().unwrap().priority, child.id.clone());
                if !candidates.contains(&entry) {
                    candidates.push(entry);
                }
            }
        }
    }
    if candidates.is_empty() {
        return OracleSla::None;
    }
    let best = candidates.iter().map(|(p, _)| *p).max().unwrap();
    let mut winners: Vec<String> = candidates
        .into_iter()
        .filter(|(p, _)| *p == best)
        .map(|(_, id)| id)
        .collect();
    winners.sort();
    winners.dedup();
    if winners.len() == 1 {
        OracleSla::Unique(winners.pop().unwrap())
    } else {
        OracleSla::Tie(winners)
    }
}

pub fn oracle_accumulated_mtc(tree: &ServiceTree, path: &[String]) -> (BTreeSet<String>, Money) {
    let mut set = BTreeSet::new();
    for node in path {
        for child in tree.children_of(node).unwrap() {
            if child.kind == CiKind::Mtc {
                set.insert(child.id.clone());
            }
        }
    }
    let total = set
        .iter()
        .map(|id| tree.item(id).unwrap().mtc.as_ref().unwrap().liability)
        .sum();
    (set, total)
}

// ---------------------------------------------------------------------
// Random outages
// ---------------------------------------------------------------------

/// Random outages inside `[lo, hi)`, none crossing `split`, at
/// second granularity.
pub fn random_outages_avoiding(
    rng: &mut ChaCha8Rng,
    lo: DateTime<Utc>,
    hi: DateTime<Utc>,
    split: DateTime<Utc>,
    count: usize,
) -> Vec<OutageEvent> {
    let mut out = Vec::new();
    for _ in 0..count {
        let (seg_lo, seg_hi) = if rng.gen_bool(0.5) {
            (lo, split)
        } else {
            (split, hi)
        };
        let span = (seg_hi - seg_lo).num_seconds();
        if span < 2 {
            continue;
        }
        let a = rng.gen_range(0..span - 1);
        let b = rng.gen_range(a + 1..=(a + 1 + (span - a - 1).min(6 * 3600)).min(span));
        out.push(
            OutageEvent::new(
                seg_lo + Duration::seconds(a),
                seg_lo + Duration::seconds(b),
            )
            .unwrap(),
        );
    }
    out
}

// ---------------------------------------------------------------------
// Monte-Carlo expected-cost oracle
// ---------------------------------------------------------------------

/// Simulate the failure-count model underlying the analytic surrogate:
/// the number of failures over the horizon is `⌊λ⌋` plus a Bernoulli
/// draw on the fractional part, the first failure pays the first-failure
/// fine, every further failure the concurrent fine, and availability
/// fines follow deterministically from the forecast.
pub fn mc_expected_cost(
    terms: &SlaTerms,
    forecast: &AvailabilityForecast,
    horizon_years: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let lambda = forecast.expected_failures_per_year * horizon_years;
    let base = lambda.floor();
    let frac = lambda - base;
    let base = base as i64;

    let mut availability = 0.0;
    for clause in &terms.availability_clauses {
        let percent = forecast.expected_availability_percent[&clause.period];
        if percent < clause.min_percent {
            availability += clause.fine.as_f64() * clause.period.per_year() * horizon_years;
        }
    }

    let fff = terms.first_failure_fine.as_f64();
    let cff = terms.concurrent_failure_fine.as_f64();
    let mut total = 0.0;
    for _ in 0..samples {
        let n = base + i64::from(rng.gen_bool(frac.clamp(0.0, 1.0)) && frac > 0.0);
        let mut cost = availability;
        if n >= 1 {
            cost += fff + cff * (n - 1) as f64;
        }
        total += cost;
    }
    total / samples as f64
}

// ---------------------------------------------------------------------
// DOT grammar checker
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum DotToken {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Equals,
    DirectedEdge,
    UndirectedEdge,
}

fn dot_tokenize(text: &str) -> Result<Vec<DotToken>, String> {
    let mut tokens = Vec::new();
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '{' => {
                tokens.push(DotToken::LBrace);
                i += 1;
            }
            '}' => {
                tokens.push(DotToken::RBrace);
                i += 1;
            }
            '[' => {
                tokens.push(DotToken::LBracket);
                i += 1;
            }
            ']' => {
                tokens.push(DotToken::RBracket);
                i += 1;
            }
            ';' => {
                tokens.push(DotToken::Semi);
                i += 1;
            }
            ',' => {
                tokens.push(DotToken::Comma);
                i += 1;
            }
            '=' => {
                tokens.push(DotToken::Equals);
                i += 1;
            }
            '-' => {
                let next = bytes.get(i + 1);
                match next {
                    Some('>') => {
                        tokens.push(DotToken::DirectedEdge);
                        i += 2;
                    }
                    Some('-') => {
                        tokens.push(DotToken::UndirectedEdge);
                        i += 2;
                    }
                    _ => return Err(format!("stray '-' at offset {i}")),
                }
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    let Some(&c) = bytes.get(i) else {
                        return Err("unterminated quoted id".to_string());
                    };
                    match c {
                        '"' => {
                            i += 1;
                            break;
                        }
                        '\\' => {
                            let Some(&next) = bytes.get(i + 1) else {
                                return Err("dangling escape in quoted id".to_string());
                            };
                            s.push(next);
                            i += 2;
                        }
                        other => {
                            s.push(other);
                            i += 1;
                        }
                    }
                }
                tokens.push(DotToken::Id(s));
            }
            c if c.is_alphanumeric() || c == '_' || c == '.' => {
                let mut s = String::new();
                while i < bytes.len()
                    && (bytes[i].is_alphanumeric() || bytes[i] == '_' || bytes[i] == '.')
                {
                    s.push(bytes[i]);
                    i += 1;
                }
                tokens.push(DotToken::Id(s));
            }
            other => return Err(format!("unexpected character {other:?} at offset {i}")),
        }
    }
    Ok(tokens)
}

#[derive(Debug, Default)]
pub struct DotGraph {
    pub name: Option<String>,
    pub node_ids: Vec<String>,
    pub edges: Vec<(String, String)>,
}

/// Parse DOT graph text against the published grammar (graph, node,
/// edge, and attribute statements; subgraphs and ports are not needed by
/// the exporter and are rejected).
pub fn parse_dot(text: &str) -> Result<DotGraph, String> {
    let tokens = dot_tokenize(text)?;
    let mut pos = 0;
    let mut graph = DotGraph::default();

    let keyword = |t: Option<&DotToken>, want: &str| -> bool {
        matches!(t, Some(DotToken::Id(s)) if s.eq_ignore_ascii_case(want))
    };

    if keyword(tokens.get(pos), "strict") {
        pos += 1;
    }
    let directed = if keyword(tokens.get(pos), "digraph") {
        pos += 1;
        true
    } else if keyword(tokens.get(pos), "graph") {
        pos += 1;
        false
    } else {
        return Err("expected 'graph' or 'digraph'".to_string());
    };
    if let Some(DotToken::Id(name)) = tokens.get(pos) {
        graph.name = Some(name.clone());
        pos += 1;
    }
    if tokens.get(pos) != Some(&DotToken::LBrace) {
        return Err("expected '{'".to_string());
    }
    pos += 1;

    // stmt_list
    loop {
        match tokens.get(pos) {
            Some(DotToken::RBrace) => {
                pos += 1;
                break;
            }
            Some(DotToken::Id(id)) => {
                let id = id.clone();
                pos += 1;
                match tokens.get(pos) {
                    // ID '=' ID
                    Some(DotToken::Equals) => {
                        pos += 1;
                        let Some(DotToken::Id(_)) = tokens.get(pos) else {
                            return Err("expected value after '='".to_string());
                        };
                        pos += 1;
                    }
                    // edge_stmt: node_id ('->' node_id)+ [attr_list]
                    Some(DotToken::DirectedEdge) | Some(DotToken::UndirectedEdge) => {
                        let mut prev = id;
                        loop {
                            let edge_tok = tokens.get(pos);
                            let is_edge = matches!(
                                edge_tok,
                                Some(DotToken::DirectedEdge) | Some(DotToken::UndirectedEdge)
                            );
                            if !is_edge {
                                break;
                            }
                            if directed && edge_tok == Some(&DotToken::UndirectedEdge) {
                                return Err("'--' edge in a digraph".to_string());
                            }
                            if !directed && edge_tok == Some(&DotToken::DirectedEdge) {
                                return Err("'->' edge in an undirected graph".to_string());
                            }
                            pos += 1;
                            let Some(DotToken::Id(next)) = tokens.get(pos) else {
                                return Err("expected node id after edge operator".to_string());
                            };
                            graph.edges.push((prev.clone(), next.clone()));
                            prev = next.clone();
                            pos += 1;
                        }
                        pos = parse_optional_attr_list(&tokens, pos)?;
                    }
                    // node_stmt (possibly with attr_list), or bare node
                    _ => {
                        if keyword(Some(&DotToken::Id(id.clone())), "node")
                            || keyword(Some(&DotToken::Id(id.clone())), "edge")
                            || keyword(Some(&DotToken::Id(id.clone())), "graph")
                        {
                            // attr_stmt
                            if tokens.get(pos) != Some(&DotToken::LBracket) {
                                return Err("expected attr_list after attr keyword".to_string());
                            }
                            pos = parse_optional_attr_list(&tokens, pos)?;
                        } else {
                            graph.node_ids.push(id);
                            pos = parse_optional_attr_list(&tokens, pos)?;
                        }
                    }
                }
                if tokens.get(pos) == Some(&DotToken::Semi) {
                    pos += 1;
                }
            }
            Some(other) => return Err(format!("unexpected token {other:?}")),
            None => return Err("unexpected end of input, missing '}'".to_string()),
        }
    }
    if pos != tokens.len() {
        return Err("trailing tokens after closing '}'".to_string());
    }
    Ok(graph)
}

fn parse_optional_attr_list(tokens: &[DotToken], mut pos: usize) -> Result<usize, String> {
    while tokens.get(pos) == Some(&DotToken::LBracket) {
        pos += 1;
        loop {
            match tokens.get(pos) {
                Some(DotToken::RBracket) => {
                    pos += 1;
                    break;
                }
                Some(DotToken::Id(_)) => {
                    pos += 1;
                    if tokens.get(pos) != Some(&DotToken::Equals) {
                        return Err("expected '=' in attribute".to_string());
                    }
                    pos += 1;
                    let Some(DotToken::Id(_)) = tokens.get(pos) else {
                        return Err("expected attribute value".to_string());
                    };
                    pos += 1;
                    if matches!(tokens.get(pos), Some(DotToken::Comma) | Some(DotToken::Semi)) {
                        pos += 1;
                    }
                }
                other => return Err(format!("unexpected token in attr_list: {other:?}")),
            }
        }
    }
    Ok(pos)
}
