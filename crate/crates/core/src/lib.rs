//! Compile structured-English business vocabularies and rules into relational
//! schemas and executable Event-Condition-Action SQL triggers, and analyze
//! ITSM service trees (SLA inheritance, maintenance-contract accumulation,
//! fine computation, ontological export).
//!
//! The crate is organized around the pipeline:
//!
//! * [`vocab`] — parse `.sbvr` sources into a [`Vocabulary`],
//! * [`schema`] — derive the relational [`SchemaModel`] and emit DDL,
//! * [`trigger`] — compile normative rules into `CREATE TRIGGER` statements,
//! * [`harness`] — run the generated SQL against a live embedded engine,
//! * [`tree`] — the service-tree engine (inheritance, fines, forecasts),
//! * [`ontology`] — instance expansion and graph exports (DOT, triples).

pub mod diag;
pub mod harness;
pub mod money;
pub mod ontology;
pub mod schema;
pub mod tree;
pub mod trigger;
pub mod vocab;

pub use diag::{Diagnostic, Severity};
pub use money::Money;
pub use schema::{derive_schema, emit_ddl, ColumnDef, ColumnRole, SchemaModel, SqlType, TableDef,
    TableKind};
pub use tree::{
    load_tree, validate_tree, AvailabilityClause, AvailabilityForecast, CiKind, ConfigItem,
    FineReport, GateDecision, MtcTerms, Occurrence, OutageEvent, PeriodKind, ReplaceSla,
    ServiceTree, SlaTerms, TreeError,
};
pub use trigger::{compile_all, compile_rule, emit_trigger, TriggerDef};
pub use vocab::{
    canonical_render, parse_vocabulary, validate_vocabulary, Comparison, FactKind, FactType,
    NormativeRule, RuleRhs, RuleScope, Term, TermId, Vocabulary,
};
