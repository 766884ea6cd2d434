//! Run generated DDL and triggers on a live embedded engine and observe
//! runtime rule behavior.
//!
//! The harness talks to the engine through the narrow [`Engine`] trait so
//! any engine whose trigger dialect supports `WHEN` clauses and
//! `RAISE(ABORT, …)` bodies can be plugged in; the bundled implementation
//! uses an in-memory SQLite database per scenario.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::schema::derive_schema;
use crate::trigger::compile_all;
use crate::vocab::parse_vocabulary;

/// Statement-level failure inside a script.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("statement {statement_index}: {message}")]
pub struct EngineError {
    /// 1-based index of the failing statement within the script.
    pub statement_index: usize,
    pub message: String,
}

/// Minimal engine session surface needed by the harness.
pub trait Engine {
    /// Execute a single statement.
    fn execute(&mut self, sql: &str) -> Result<(), String>;

    /// Execute every statement of a script in order; stops at the first
    /// failure and reports its statement index.
    fn execute_script(&mut self, sql: &str) -> Result<usize, EngineError>;

    /// All rows of a table in storage order, values stringified.
    fn table_rows(&mut self, table: &str) -> Result<Vec<Vec<String>>, String>;
}

/// In-memory SQLite session.
pub struct SqliteEngine {
    conn: rusqlite::Connection,
}

impl SqliteEngine {
    /// Open a fresh, empty in-memory database.
    pub fn open() -> Result<Self, String> {
        rusqlite::Connection::open_in_memory()
            .map(|conn| SqliteEngine { conn })
            .map_err(|e| e.to_string())
    }
}

impl Engine for SqliteEngine {
    fn execute(&mut self, sql: &str) -> Result<(), String> {
        self.conn
            .execute(sql, [])
            .map(|_| ())
            .map_err(|e| engine_message(&e))
    }

    fn execute_script(&mut self, sql: &str) -> Result<usize, EngineError> {
        let mut batch = rusqlite::Batch::new(&self.conn, sql);
        let mut index = 0;
        loop {
            index += 1;
            match batch.next() {
                Ok(Some(mut stmt)) => {
                    stmt.execute([]).map_err(|e| EngineError {
                        statement_index: index,
                        message: engine_message(&e),
                    })?;
                }
                Ok(None) => return Ok(index - 1),
                Err(e) => {
                    return Err(EngineError {
                        statement_index: index,
                        message: engine_message(&e),
                    })
                }
            }
        }
    }

    fn table_rows(&mut self, table: &str) -> Result<Vec<Vec<String>>, String> {
        let sql = format!("SELECT * FROM \"{table}\" ORDER BY rowid");
        let mut stmt = self.conn.prepare(&sql).map_err(|e| engine_message(&e))?;
        let n = stmt.column_count();
        let rows = stmt
            .query_map([], |row| {
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    let text = match row.get_ref(i)? {
                        rusqlite::types::ValueRef::Null => "NULL".to_string(),
                        rusqlite::types::ValueRef::Integer(v) => v.to_string(),
                        rusqlite::types::ValueRef::Real(v) => v.to_string(),
                        rusqlite::types::ValueRef::Text(t) => {
                            String::from_utf8_lossy(t).into_owned()
                        }
                        rusqlite::types::ValueRef::Blob(b) => format!("blob({})", b.len()),
                    };
                    out.push(text);
                }
                Ok(out)
            })
            .map_err(|e| engine_message(&e))?
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| engine_message(&e))?;
        Ok(rows)
    }
}

/// The message the rule author cares about is the one given to
/// `RAISE(ABORT, …)`; rusqlite surfaces it as the SQLite error message.
fn engine_message(e: &rusqlite::Error) -> String {
    match e {
        rusqlite::Error::SqliteFailure(_, Some(msg)) => msg.clone(),
        other => other.to_string(),
    }
}

/// Apply a full script to the engine. `Ok` when every statement ran.
pub fn apply_script(engine: &mut dyn Engine, sql: &str) -> Result<(), EngineError> {
    engine.execute_script(sql).map(|_| ())
}

/// One scripted scenario: a vocabulary compiled and installed, seed rows,
/// then a sequence of updates with expected outcomes.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Vocabulary source text (`.sbvr`).
    pub vocabulary: String,
    pub seed_rows: Vec<SeedRow>,
    pub actions: Vec<UpdateAction>,
    pub expectations: Vec<Expectation>,
}

/// The scenario file body; the vocabulary arrives separately.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub seed_rows: Vec<SeedRow>,
    #[serde(default)]
    pub actions: Vec<UpdateAction>,
    #[serde(default)]
    pub expectations: Vec<Expectation>,
}

impl Scenario {
    pub fn from_parts(vocabulary: impl Into<String>, file: ScenarioFile) -> Self {
        Scenario {
            vocabulary: vocabulary.into(),
            seed_rows: file.seed_rows,
            actions: file.actions,
            expectations: file.expectations,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRow {
    pub table: String,
    pub values: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateAction {
    pub table: String,
    pub set: BTreeMap<String, serde_json::Value>,
    #[serde(rename = "where")]
    pub filter: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    /// 1-based action index.
    pub action: usize,
    pub outcome: ExpectedOutcome,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedOutcome {
    Succeeds,
    AbortsWith(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionOutcome {
    Succeeded,
    Aborted(String),
}

impl std::fmt::Display for ActionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActionOutcome::Succeeded => write!(f, "SUCCEEDED"),
            ActionOutcome::Aborted(msg) => write!(f, "ABORTED {msg}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("vocabulary has {} diagnostic(s)", .0.len())]
    Vocabulary(Vec<Diagnostic>),
    #[error("setup failed: {0}")]
    Setup(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("scenario references unknown {what} '{name}'")]
    UnknownReference { what: &'static str, name: String },
    #[error("action {action}: abort left the database modified")]
    AtomicityViolation { action: usize },
    #[error("unsupported value for column '{column}'")]
    UnsupportedValue { column: String },
}

fn sql_literal(column: &str, value: &serde_json::Value) -> Result<String, HarnessError> {
    match value {
        serde_json::Value::Null => Ok("NULL".to_string()),
        serde_json::Value::Bool(b) => Ok(if *b { "1" } else { "0" }.to_string()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        serde_json::Value::String(s) => Ok(format!("'{}'", s.replace('\'', "''"))),
        _ => Err(HarnessError::UnsupportedValue {
            column: column.to_string(),
        }),
    }
}

fn assignments(
    map: &BTreeMap<String, serde_json::Value>,
    joiner: &str,
) -> Result<String, HarnessError> {
    let parts = map
        .iter()
        .map(|(col, val)| Ok(format!("\"{col}\"={}", sql_literal(col, val)?)))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(parts.join(joiner))
}

/// Compile the scenario's vocabulary, install schema and triggers on a
/// fresh in-memory engine, seed the rows, then run each action and
/// observe whether it succeeded or aborted. After an aborted action the
/// database is checked against its pre-action snapshot; any difference
/// is an atomicity violation, reported as an error rather than an
/// outcome.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<ActionOutcome>, HarnessError> {
    let mut engine = SqliteEngine::open().map_err(HarnessError::Setup)?;
    run_scenario_on(&mut engine, scenario)
}

/// As [`run_scenario`], against a caller-provided engine session that
/// must be open on an empty database.
pub fn run_scenario_on(
    engine: &mut dyn Engine,
    scenario: &Scenario,
) -> Result<Vec<ActionOutcome>, HarnessError> {
    let vocabulary =
        parse_vocabulary(&scenario.vocabulary).map_err(HarnessError::Vocabulary)?;
    let script = compile_all(&vocabulary).map_err(HarnessError::Vocabulary)?;
    let schema = derive_schema(&vocabulary);

    // Scenario invariant: referenced tables and columns must exist.
    let check_columns = |table: &str,
                         cols: &BTreeMap<String, serde_json::Value>|
     -> Result<(), HarnessError> {
        let def = schema
            .table(table)
            .ok_or_else(|| HarnessError::UnknownReference {
                what: "table",
                name: table.to_string(),
            })?;
        for col in cols.keys() {
            if !def.columns.iter().any(|c| &c.name == col) {
                return Err(HarnessError::UnknownReference {
                    what: "column",
                    name: format!("{table}.{col}"),
                });
            }
        }
        Ok(())
    };
    for row in &scenario.seed_rows {
        check_columns(&row.table, &row.values)?;
    }
    for action in &scenario.actions {
        check_columns(&action.table, &action.set)?;
        check_columns(&action.table, &action.filter)?;
    }

    apply_script(engine, &script)?;

    for row in &scenario.seed_rows {
        let columns: Vec<String> = row.values.keys().map(|c| format!("\"{c}\"")).collect();
        let values = row
            .values
            .iter()
            .map(|(col, val)| sql_literal(col, val))
            .collect::<Result<Vec<_>, _>>()?;
        let sql = format!(
            "INSERT INTO \"{}\" ({}) VALUES ({})",
            row.table,
            columns.join(", "),
            values.join(", ")
        );
        engine.execute(&sql).map_err(HarnessError::Setup)?;
    }

    let table_names: Vec<String> = schema.tables.iter().map(|t| t.name.clone()).collect();
    let snapshot = |engine: &mut dyn Engine| -> Result<Vec<Vec<Vec<String>>>, HarnessError> {
        table_names
            .iter()
            .map(|t| engine.table_rows(t).map_err(HarnessError::Setup))
            .collect()
    };

    let mut outcomes = Vec::with_capacity(scenario.actions.len());
    for (i, action) in scenario.actions.iter().enumerate() {
        let before = snapshot(engine)?;
        let sql = format!(
            "UPDATE \"{}\" SET {} WHERE {}",
            action.table,
            assignments(&action.set, ", ")?,
            assignments(&action.filter, " AND ")?
        );
        match engine.execute(&sql) {
            Ok(()) => outcomes.push(ActionOutcome::Succeeded),
            Err(message) => {
                if snapshot(engine)? != before {
                    return Err(HarnessError::AtomicityViolation { action: i + 1 });
                }
                outcomes.push(ActionOutcome::Aborted(message));
            }
        }
    }
    Ok(outcomes)
}

/// Compare observed outcomes against the scenario's expectations.
/// `AbortsWith` matches when the engine message contains the expected
/// substring. Returns one error diagnostic per mismatch.
pub fn check_expectations(scenario: &Scenario, outcomes: &[ActionOutcome]) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for expectation in &scenario.expectations {
        let idx = expectation.action;
        let Some(outcome) = idx.checked_sub(1).and_then(|i| outcomes.get(i)) else {
            diags.push(Diagnostic::error(
                None,
                format!("expectation references action {idx} but only {} ran", outcomes.len()),
            ));
            continue;
        };
        let ok = match (&expectation.outcome, outcome) {
            (ExpectedOutcome::Succeeds, ActionOutcome::Succeeded) => true,
            (ExpectedOutcome::AbortsWith(sub), ActionOutcome::Aborted(msg)) => msg.contains(sub),
            _ => false,
        };
        if !ok {
            diags.push(Diagnostic::error(
                None,
                format!(
                    "action {idx}: expected {:?}, observed {outcome}",
                    expectation.outcome
                ),
            ));
        }
    }
    diags
}
