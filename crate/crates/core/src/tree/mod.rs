//! The ITSM service tree: a multi-rooted acyclic graph of configuration
//! items in which SLAs inherit downward with priority-based conflict
//! resolution and maintenance-contract liabilities accumulate.
//!
//! Shared items appear under several parents, so most analyses operate
//! per *occurrence* — one root-to-item path — rather than per item.

mod fines;
mod terms;

pub use fines::{compute_fines, expected_cost, optimal_sla, FineReport, OutageEvent};
pub use terms::{AvailabilityClause, AvailabilityForecast, MtcTerms, PeriodKind, SlaTerms};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::money::Money;

/// Configuration-item kinds. Closed enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CiKind {
    Rfc,
    Svc,
    Hos,
    Sla,
    Mtc,
}

impl CiKind {
    /// Legal parent/child combinations. Hosts may parent services
    /// (virtualization dependency) but not other hosts; SLA and MTC are
    /// always leaves; nothing may parent an RFC.
    pub fn may_parent(self, child: CiKind) -> bool {
        match self {
            CiKind::Rfc | CiKind::Svc => child != CiKind::Rfc,
            CiKind::Hos => matches!(child, CiKind::Svc | CiKind::Sla | CiKind::Mtc),
            CiKind::Sla | CiKind::Mtc => false,
        }
    }
}

impl fmt::Display for CiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CiKind::Rfc => "RFC",
            CiKind::Svc => "SVC",
            CiKind::Hos => "HOS",
            CiKind::Sla => "SLA",
            CiKind::Mtc => "MTC",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigItem {
    pub id: String,
    pub kind: CiKind,
    #[serde(default)]
    pub label: String,
    /// Present exactly when `kind == Sla`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sla: Option<SlaTerms>,
    /// Present exactly when `kind == Mtc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mtc: Option<MtcTerms>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    #[serde(default)]
    items: Vec<ConfigItem>,
    #[serde(default)]
    edges: Vec<EdgeWire>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeWire {
    parent: String,
    child: String,
}

/// One root-to-item walk. `path[0]` is an RFC root; consecutive entries
/// are connected by edges; ids never repeat.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Occurrence {
    pub path: Vec<String>,
}

impl Occurrence {
    pub fn target(&self) -> &str {
        self.path.last().map(String::as_str).unwrap_or("")
    }
}

impl fmt::Display for Occurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.path.join(" -> "))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TreeError {
    #[error("unknown item '{0}'")]
    UnknownItem(String),
    #[error("invalid occurrence: {0}")]
    InvalidOccurrence(String),
    #[error("occurrence target '{id}' must be SVC or HOS, not {kind}")]
    TargetNotService { id: String, kind: CiKind },
    #[error("priority tie for '{target}': {} share priority {priority}", candidates.join(", "))]
    PriorityTie {
        target: String,
        candidates: Vec<String>,
        priority: i64,
    },
    #[error("'{sla}' is not an SLA attached at '{node}'")]
    SlaNotAttached { node: String, sla: String },
    #[error("invalid sla terms: {0}")]
    InvalidSlaTerms(String),
    #[error("invalid interval: start {start} is not before end {end}")]
    InvalidInterval {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    #[error("invalid horizon: start {start} is not before end {end}")]
    InvalidHorizon {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    #[error("invalid horizon of {0} years")]
    InvalidHorizonYears(f64),
    #[error("no forecast entry for period {0}")]
    MissingForecast(PeriodKind),
    #[error("invalid forecast: {0}")]
    InvalidForecast(String),
    #[error("candidate list is empty")]
    NoCandidates,
}

/// Outcome of gating a proposed change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateDecision {
    Accept,
    /// Carries the name of the violated rule (`NR1` or `PriorityTie`).
    Reject { rule: String },
}

/// Proposed change: replace the terms of `old_sla_id` (attached at
/// `node_id`) with `new_terms`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplaceSla {
    pub node_id: String,
    pub old_sla_id: String,
    pub new_terms: SlaTerms,
}

/// A priority conflict found for one occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieFinding {
    pub occurrence: Occurrence,
    pub candidates: Vec<String>,
    pub priority: i64,
}

impl fmt::Display for TieFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "priority tie for '{}' via {}: {} share priority {}",
            self.occurrence.target(),
            self.occurrence,
            self.candidates.join(", "),
            self.priority
        )
    }
}

/// Immutable service tree. Construction validates every structural
/// invariant; queries are pure.
#[derive(Debug, Clone)]
pub struct ServiceTree {
    items: Vec<ConfigItem>,
    index: BTreeMap<String, usize>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

/// Parse and validate the tree file format: a JSON document with `items`
/// and `edges` arrays.
pub fn load_tree(document: &str) -> Result<ServiceTree, Vec<Diagnostic>> {
    let doc: TreeDoc = serde_json::from_str(document).map_err(|e| {
        vec![Diagnostic::error(
            Some(e.line() as u32),
            format!("invalid tree document: {e}"),
        )]
    })?;
    let edges = doc.edges.into_iter().map(|e| (e.parent, e.child)).collect();
    ServiceTree::from_parts(doc.items, edges)
}

/// Re-check all structural invariants and report a `PriorityTie` error
/// for every SVC/HOS occurrence whose maximal-priority SLA candidates
/// are not unique.
pub fn validate_tree(tree: &ServiceTree) -> Vec<Diagnostic> {
    let edges = tree
        .edges
        .iter()
        .map(|&(p, c)| (tree.items[p].id.clone(), tree.items[c].id.clone()))
        .collect::<Vec<_>>();
    let mut diags = check_structure(&tree.items, &edges);
    for tie in tree.scan_priority_ties() {
        diags.push(Diagnostic::error(None, tie.to_string()));
    }
    diags
}

fn check_structure(items: &[ConfigItem], edges: &[(String, String)]) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut err = |msg: String| diags.push(Diagnostic::error(None, msg));

    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        if index.insert(item.id.as_str(), i).is_some() {
            err(format!("duplicate item id '{}'", item.id));
        }
    }

    for item in items {
        match item.kind {
            CiKind::Sla => {
                match &item.sla {
                    None => err(format!("SLA '{}' is missing sla terms", item.id)),
                    Some(terms) => {
                        for msg in sla_terms_problems(terms) {
                            err(format!("SLA '{}': {msg}", item.id));
                        }
                    }
                }
                if item.mtc.is_some() {
                    err(format!("SLA '{}' must not carry mtc terms", item.id));
                }
            }
            CiKind::Mtc => {
                match &item.mtc {
                    None => err(format!("MTC '{}' is missing mtc terms", item.id)),
                    Some(terms) => {
                        if terms.liability.is_negative() {
                            err(format!("MTC '{}' has a negative liability", item.id));
                        }
                    }
                }
                if item.sla.is_some() {
                    err(format!("MTC '{}' must not carry sla terms", item.id));
                }
            }
            _ => {
                if item.sla.is_some() {
                    err(format!("{} '{}' must not carry sla terms", item.kind, item.id));
                }
                if item.mtc.is_some() {
                    err(format!("{} '{}' must not carry mtc terms", item.kind, item.id));
                }
            }
        }
    }

    let mut seen_edges: BTreeSet<(&str, &str)> = BTreeSet::new();
    let mut adjacency: Vec<(usize, usize)> = Vec::new();
    for (parent, child) in edges {
        let p = index.get(parent.as_str()).copied();
        let c = index.get(child.as_str()).copied();
        for (end, id) in [(p, parent), (c, child)] {
            if end.is_none() {
                err(format!("unknown item '{id}' in edge"));
            }
        }
        let (Some(p), Some(c)) = (p, c) else { continue };
        if !seen_edges.insert((parent.as_str(), child.as_str())) {
            err(format!("duplicate edge '{parent}' -> '{child}'"));
            continue;
        }
        let (pk, ck) = (items[p].kind, items[c].kind);
        if matches!(pk, CiKind::Sla | CiKind::Mtc) {
            err(format!("{pk} may not have children: '{parent}' -> '{child}'"));
            continue;
        }
        if !pk.may_parent(ck) {
            err(format!("illegal edge {pk} -> {ck}: '{parent}' -> '{child}'"));
            continue;
        }
        adjacency.push((p, c));
    }

    // Kahn's algorithm over the legal edges; whatever cannot be
    // topologically ordered sits on a cycle.
    let mut indegree = vec![0usize; items.len()];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); items.len()];
    for &(p, c) in &adjacency {
        indegree[c] += 1;
        out[p].push(c);
    }
    let mut queue: Vec<usize> = (0..items.len()).filter(|&i| indegree[i] == 0).collect();
    let mut visited = 0;
    while let Some(n) = queue.pop() {
        visited += 1;
        for &c in &out[n] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push(c);
            }
        }
    }
    if visited < items.len() {
        let culprit = (0..items.len())
            .filter(|&i| indegree[i] > 0)
            .map(|i| items[i].id.as_str())
            .min()
            .unwrap_or("?");
        err(format!("cycle detected involving '{culprit}'"));
    }

    // Roots are exactly the RFC items: every non-RFC needs a parent.
    let mut has_parent = vec![false; items.len()];
    for &(_, c) in &adjacency {
        has_parent[c] = true;
    }
    for (i, item) in items.iter().enumerate() {
        if item.kind != CiKind::Rfc && !has_parent[i] && index[item.id.as_str()] == i {
            err(format!(
                "{} '{}' has no parent; roots must be RFC items",
                item.kind, item.id
            ));
        }
    }

    diags
}

fn sla_terms_problems(terms: &SlaTerms) -> Vec<String> {
    let mut out = Vec::new();
    if terms.first_failure_fine.is_negative()
        || terms.concurrent_failure_fine.is_negative()
        || terms.availability_clauses.iter().any(|c| c.fine.is_negative())
    {
        out.push("negative fine".to_string());
    }
    let mut periods = BTreeSet::new();
    for clause in &terms.availability_clauses {
        if !(0.0..=100.0).contains(&clause.min_percent) {
            out.push(format!(
                "clause min_percent {} out of range 0..=100",
                clause.min_percent
            ));
        }
        if !periods.insert(clause.period) {
            out.push(format!("more than one {} clause", clause.period));
        }
    }
    if terms.total_fines != terms.computed_total() {
        out.push("total fines do not equal the sum of the fine components".to_string());
    }
    out
}

impl ServiceTree {
    /// Build a tree from items and `(parent id, child id)` edges,
    /// validating every structural invariant.
    pub fn from_parts(
        items: Vec<ConfigItem>,
        edges: Vec<(String, String)>,
    ) -> Result<Self, Vec<Diagnostic>> {
        let diags = check_structure(&items, &edges);
        if !diags.is_empty() {
            return Err(diags);
        }
        let index: BTreeMap<String, usize> = items
            .iter()
            .enumerate()
            .map(|(i, item)| (item.id.clone(), i))
            .collect();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); items.len()];
        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); items.len()];
        let mut edge_idx = Vec::with_capacity(edges.len());
        for (parent, child) in &edges {
            let (p, c) = (index[parent.as_str()], index[child.as_str()]);
            children[p].push(c);
            parents[c].push(p);
            edge_idx.push((p, c));
        }
        // Deterministic traversal order: adjacency sorted by item id.
        for list in children.iter_mut().chain(parents.iter_mut()) {
            list.sort_by(|&a, &b| items[a].id.cmp(&items[b].id));
        }
        Ok(ServiceTree {
            items,
            index,
            children,
            parents,
            edges: edge_idx,
        })
    }

    pub fn items(&self) -> &[ConfigItem] {
        &self.items
    }

    pub fn item(&self, id: &str) -> Option<&ConfigItem> {
        self.index.get(id).map(|&i| &self.items[i])
    }

    pub fn edges(&self) -> impl Iterator<Item = (&ConfigItem, &ConfigItem)> {
        self.edges
            .iter()
            .map(move |&(p, c)| (&self.items[p], &self.items[c]))
    }

    /// RFC items, in document order.
    pub fn roots(&self) -> impl Iterator<Item = &ConfigItem> {
        self.items.iter().filter(|i| i.kind == CiKind::Rfc)
    }

    pub fn children_of(&self, id: &str) -> Result<Vec<&ConfigItem>, TreeError> {
        let idx = self.idx(id)?;
        Ok(self.children[idx].iter().map(|&c| &self.items[c]).collect())
    }

    fn idx(&self, id: &str) -> Result<usize, TreeError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| TreeError::UnknownItem(id.to_string()))
    }

    fn paths_up(&self, idx: usize) -> Vec<Vec<usize>> {
        if self.parents[idx].is_empty() {
            return vec![vec![idx]];
        }
        let mut all = Vec::new();
        for &p in &self.parents[idx] {
            for mut path in self.paths_up(p) {
                path.push(idx);
                all.push(path);
            }
        }
        all
    }

    fn to_occurrence(&self, path: &[usize]) -> Occurrence {
        Occurrence {
            path: path.iter().map(|&i| self.items[i].id.clone()).collect(),
        }
    }

    /// All root-to-item walks reaching `item_id`, ordered
    /// lexicographically by their id sequences.
    pub fn occurrences(&self, item_id: &str) -> Result<Vec<Occurrence>, TreeError> {
        let idx = self.idx(item_id)?;
        let mut occurrences: Vec<Occurrence> = self
            .paths_up(idx)
            .iter()
            .map(|p| self.to_occurrence(p))
            .collect();
        occurrences.sort();
        Ok(occurrences)
    }

    /// Resolve an occurrence to item indices, checking that it is a
    /// valid root-to-item walk of this tree.
    fn resolve_occurrence(&self, occurrence: &Occurrence) -> Result<Vec<usize>, TreeError> {
        if occurrence.path.is_empty() {
            return Err(TreeError::InvalidOccurrence("empty path".into()));
        }
        let mut idxs = Vec::with_capacity(occurrence.path.len());
        for id in &occurrence.path {
            idxs.push(self.idx(id)?);
        }
        let root = idxs[0];
        if self.items[root].kind != CiKind::Rfc || !self.parents[root].is_empty() {
            return Err(TreeError::InvalidOccurrence(format!(
                "path must start at an RFC root, not '{}'",
                self.items[root].id
            )));
        }
        for pair in idxs.windows(2) {
            if !self.children[pair[0]].contains(&pair[1]) {
                return Err(TreeError::InvalidOccurrence(format!(
                    "no edge '{}' -> '{}'",
                    self.items[pair[0]].id, self.items[pair[1]].id
                )));
            }
        }
        let distinct: BTreeSet<usize> = idxs.iter().copied().collect();
        if distinct.len() != idxs.len() {
            return Err(TreeError::InvalidOccurrence("repeated item in path".into()));
        }
        Ok(idxs)
    }

    fn service_occurrence(&self, occurrence: &Occurrence) -> Result<Vec<usize>, TreeError> {
        let idxs = self.resolve_occurrence(occurrence)?;
        let target = &self.items[*idxs.last().expect("non-empty path")];
        if !matches!(target.kind, CiKind::Svc | CiKind::Hos) {
            return Err(TreeError::TargetNotService {
                id: target.id.clone(),
                kind: target.kind,
            });
        }
        Ok(idxs)
    }

    /// SLA children attached anywhere along the path, deduplicated.
    fn sla_candidates(&self, idxs: &[usize]) -> BTreeSet<usize> {
        idxs.iter()
            .flat_map(|&n| self.children[n].iter().copied())
            .filter(|&c| self.items[c].kind == CiKind::Sla)
            .collect()
    }

    fn mtc_set(&self, idxs: &[usize]) -> BTreeSet<usize> {
        idxs.iter()
            .flat_map(|&n| self.children[n].iter().copied())
            .filter(|&c| self.items[c].kind == CiKind::Mtc)
            .collect()
    }

    fn max_priority_slas(&self, candidates: &BTreeSet<usize>) -> Option<(i64, Vec<String>)> {
        let priority_of = |c: usize| self.items[c].sla.as_ref().expect("SLA item").priority;
        let best_priority = candidates.iter().map(|&c| priority_of(c)).max()?;
        let mut best: Vec<String> = candidates
            .iter()
            .filter(|&&c| priority_of(c) == best_priority)
            .map(|&c| self.items[c].id.clone())
            .collect();
        best.sort_unstable();
        Some((best_priority, best))
    }

    /// The unique maximal-priority SLA governing this occurrence, if any.
    /// SLAs inherit downward: every SLA attached on the path competes.
    pub fn effective_sla(&self, occurrence: &Occurrence) -> Result<Option<String>, TreeError> {
        let idxs = self.service_occurrence(occurrence)?;
        let candidates = self.sla_candidates(&idxs);
        match self.max_priority_slas(&candidates) {
            None => Ok(None),
            Some((_, best)) if best.len() == 1 => Ok(Some(best.into_iter().next().unwrap())),
            Some((priority, best)) => Err(TreeError::PriorityTie {
                target: occurrence.target().to_string(),
                candidates: best,
                priority,
            }),
        }
    }

    /// MTCs valid for this occurrence and their accumulated liability;
    /// a contract attached at several path nodes counts once.
    pub fn accumulated_mtc(
        &self,
        occurrence: &Occurrence,
    ) -> Result<(BTreeSet<String>, Money), TreeError> {
        let idxs = self.service_occurrence(occurrence)?;
        let set = self.mtc_set(&idxs);
        let total = set
            .iter()
            .map(|&m| self.items[m].mtc.as_ref().expect("MTC item").liability)
            .sum();
        let ids = set.iter().map(|&m| self.items[m].id.clone()).collect();
        Ok((ids, total))
    }

    /// Every SVC/HOS occurrence with its valid MTC set, in deterministic
    /// order (item document order, then path order).
    fn service_coverage(&self) -> Vec<(Occurrence, BTreeSet<usize>)> {
        let mut out = Vec::new();
        for (i, item) in self.items.iter().enumerate() {
            if !matches!(item.kind, CiKind::Svc | CiKind::Hos) {
                continue;
            }
            let mut paths = self.paths_up(i);
            paths.sort_by_key(|p| self.to_occurrence(p).path);
            for path in paths {
                let set = self.mtc_set(&path);
                out.push((self.to_occurrence(&path), set));
            }
        }
        out
    }

    /// An MTC is redundant when it covers at least one occurrence and
    /// every occurrence it covers is also covered by some other MTC —
    /// discharging it leaves nothing uncovered.
    pub fn find_redundant_mtcs(&self) -> Vec<(String, String)> {
        let coverage = self.service_coverage();
        let mut out = Vec::new();
        for (m, item) in self.items.iter().enumerate() {
            if item.kind != CiKind::Mtc {
                continue;
            }
            let covered: Vec<&BTreeSet<usize>> = coverage
                .iter()
                .filter(|(_, set)| set.contains(&m))
                .map(|(_, set)| set)
                .collect();
            if covered.is_empty() || !covered.iter().all(|set| set.len() > 1) {
                continue;
            }
            let witnesses: BTreeSet<&str> = covered
                .iter()
                .flat_map(|set| set.iter())
                .filter(|&&other| other != m)
                .map(|&other| self.items[other].id.as_str())
                .collect();
            let reason = format!(
                "every occurrence it covers is also covered by {}",
                witnesses.into_iter().collect::<Vec<_>>().join(", ")
            );
            out.push((item.id.clone(), reason));
        }
        out
    }

    /// All priority conflicts, across every SVC/HOS occurrence.
    pub fn scan_priority_ties(&self) -> Vec<TieFinding> {
        let mut out = Vec::new();
        for (i, item) in self.items.iter().enumerate() {
            if !matches!(item.kind, CiKind::Svc | CiKind::Hos) {
                continue;
            }
            let mut paths = self.paths_up(i);
            paths.sort_by_key(|p| self.to_occurrence(p).path);
            for path in paths {
                let candidates = self.sla_candidates(&path);
                if let Some((priority, best)) = self.max_priority_slas(&candidates) {
                    if best.len() > 1 {
                        out.push(TieFinding {
                            occurrence: self.to_occurrence(&path),
                            candidates: best,
                            priority,
                        });
                    }
                }
            }
        }
        out
    }

    /// Gate a proposed SLA replacement: accepted only when the new terms
    /// carry strictly lower total fines (rule NR1) and the replacement
    /// introduces no priority tie anywhere. Never mutates; apply accepted
    /// changes by building a new tree.
    pub fn gate_change(&self, change: &ReplaceSla) -> Result<GateDecision, TreeError> {
        let node = self.idx(&change.node_id)?;
        let sla = self.idx(&change.old_sla_id)?;
        if self.items[sla].kind != CiKind::Sla || !self.children[node].contains(&sla) {
            return Err(TreeError::SlaNotAttached {
                node: change.node_id.clone(),
                sla: change.old_sla_id.clone(),
            });
        }
        let problems = sla_terms_problems(&change.new_terms);
        if !problems.is_empty() {
            return Err(TreeError::InvalidSlaTerms(problems.join("; ")));
        }

        let old_total = self.items[sla].sla.as_ref().expect("SLA item").total_fines;
        if change.new_terms.total_fines >= old_total {
            return Ok(GateDecision::Reject {
                rule: "NR1".to_string(),
            });
        }

        let mut hypothetical = self.clone();
        hypothetical.items[sla].sla = Some(change.new_terms.clone());
        if !hypothetical.scan_priority_ties().is_empty() {
            return Ok(GateDecision::Reject {
                rule: "PriorityTie".to_string(),
            });
        }
        Ok(GateDecision::Accept)
    }
}
