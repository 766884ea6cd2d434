//! Compilation of normative rules into `BEFORE UPDATE` guard triggers.
//!
//! The emitted layout is frozen: lowercase `from`/`where` inside the
//! subqueries, no space around the comparison operator, the condition
//! split across two lines in the two-subquery form, and the abort
//! message `Requirement of <name> not met`.

use thiserror::Error;

use crate::diag::Diagnostic;
use crate::schema::{derive_schema, emit_ddl, fk_column_name, link_table_name, SchemaModel};
use crate::vocab::{validate_vocabulary, NormativeRule, RuleRhs, RuleScope, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerTiming {
    BeforeUpdate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerDef {
    /// Rule name, e.g. `NR1`.
    pub name: String,
    pub timing: TriggerTiming,
    /// Table the trigger is created on: the link table for link-scoped
    /// rules, the entity table for term-scoped rules.
    pub on_table: String,
    /// Column whose update fires the trigger: `<A>_id` for link-scoped
    /// rules, the attribute column otherwise.
    pub update_column: String,
    /// The positive obligation, pre-split into its emitted line layout
    /// (two lines for the subquery-vs-subquery form, one otherwise).
    pub condition_lines: Vec<String>,
    pub abort_message: String,
}

impl TriggerDef {
    /// The obligation as a single expression (the emitter negates it).
    pub fn condition_sql(&self) -> String {
        self.condition_lines.concat()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("rule '{rule}' references table '{table}' missing from the schema")]
    MissingTable { rule: String, table: String },
    #[error("rule '{rule}' references column '{column}' missing from table '{table}'")]
    MissingColumn {
        rule: String,
        table: String,
        column: String,
    },
}

fn subquery(attr: &str, table: &str, row: &str, fk: &str) -> String {
    format!("(SELECT \"{attr}\" from \"{table}\" where id={row}.{fk})")
}

/// Compile one rule against the schema derived from the same vocabulary.
/// The schema lookups cannot fail for a validated vocabulary; the errors
/// are defensive.
pub fn compile_rule(
    rule: &NormativeRule,
    schema: &SchemaModel<'_>,
) -> Result<TriggerDef, CompileError> {
    let v = schema.vocabulary;
    let attr = v.term_name(rule.attribute);
    let op = rule.comparison.sql_op();

    let (on_table, update_column, condition_lines) = match rule.scope {
        RuleScope::Link { subject, object } => {
            let subject_name = v.term_name(subject);
            let table = link_table_name(subject_name, v.term_name(object));
            let column = fk_column_name(subject_name);
            let first = subquery(attr, subject_name, "new", &column);
            let lines = match &rule.rhs {
                RuleRhs::OldAttribute => {
                    let second = subquery(attr, subject_name, "old", &column);
                    vec![format!("{first}{op}"), second]
                }
                RuleRhs::Literal(n) => vec![format!("{first}{op}{n}")],
            };
            (table, column, lines)
        }
        RuleScope::Term { subject } => {
            let table = v.term_name(subject).to_string();
            let rhs = match &rule.rhs {
                RuleRhs::OldAttribute => format!("old.\"{attr}\""),
                RuleRhs::Literal(n) => n.to_string(),
            };
            let lines = vec![format!("new.\"{attr}\"{op}{rhs}")];
            (table, attr.to_string(), lines)
        }
    };

    let table_def = schema
        .table(&on_table)
        .ok_or_else(|| CompileError::MissingTable {
            rule: rule.name.clone(),
            table: on_table.clone(),
        })?;
    if !table_def.columns.iter().any(|c| c.name == update_column) {
        return Err(CompileError::MissingColumn {
            rule: rule.name.clone(),
            table: on_table,
            column: update_column,
        });
    }

    Ok(TriggerDef {
        name: rule.name.clone(),
        timing: TriggerTiming::BeforeUpdate,
        on_table,
        update_column,
        condition_lines,
        abort_message: format!("Requirement of {} not met", rule.name),
    })
}

/// Render a trigger in the frozen layout. LF line endings, no trailing
/// spaces, no trailing newline.
pub fn emit_trigger(trigger: &TriggerDef) -> String {
    let mut lines: Vec<&str> = Vec::with_capacity(trigger.condition_lines.len() + 6);
    let head = format!(
        "CREATE TRIGGER \"{}\" BEFORE UPDATE OF \"{}\"",
        trigger.name, trigger.update_column
    );
    let on = format!("ON \"{}\"", trigger.on_table);
    let raise = format!("SELECT RAISE(ABORT, '{}');", trigger.abort_message);
    lines.push(&head);
    lines.push(&on);
    lines.push("WHEN NOT");
    lines.extend(trigger.condition_lines.iter().map(String::as_str));
    lines.push("BEGIN");
    lines.push(&raise);
    lines.push("END;");
    lines.join("\n")
}

/// Compile a whole vocabulary: DDL for the derived schema followed by
/// one trigger per rule in source order. Validation failures are
/// returned as diagnostics before anything is emitted.
pub fn compile_all(v: &Vocabulary) -> Result<String, Vec<Diagnostic>> {
    let diags = validate_vocabulary(v);
    if !diags.is_empty() {
        return Err(diags);
    }
    let schema = derive_schema(v);
    let mut out = emit_ddl(&schema);
    for rule in &v.rules {
        let trigger = compile_rule(rule, &schema)
            .map_err(|e| vec![Diagnostic::error(None, e.to_string())])?;
        out.push_str(&emit_trigger(&trigger));
        out.push('\n');
    }
    Ok(out)
}
