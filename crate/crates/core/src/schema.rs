//! Relational schema derived from a vocabulary by naming convention:
//! attribute facts ("has") become columns, link facts ("is linked to")
//! become relationship tables named `<A>-is_linked_to-<B>`.

use crate::vocab::{FactKind, TermId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqlType {
    Integer,
    Numeric,
    Text,
}

impl SqlType {
    fn ddl(self) -> &'static str {
        match self {
            SqlType::Integer => "integer",
            SqlType::Numeric => "numeric",
            SqlType::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRole {
    /// Engine-assigned row identity, always named `id`.
    Id,
    /// A column derived from an attribute fact.
    Attribute,
    /// `<TargetTerm>_id` column referencing the target entity table.
    ForeignKey { target_table: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDef {
    pub name: String,
    pub sql_type: SqlType,
    pub role: ColumnRole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableKind {
    Entity { term: TermId },
    Link { subject: TermId, object: TermId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDef {
    pub name: String,
    pub kind: TableKind,
    pub columns: Vec<ColumnDef>,
}

/// The tables implied by a vocabulary: one entity table per
/// non-attribute term and one link table per link fact, nothing else.
#[derive(Debug, Clone)]
pub struct SchemaModel<'v> {
    pub tables: Vec<TableDef>,
    pub vocabulary: &'v Vocabulary,
}

/// Name of the relationship table for `subject is linked to object`.
pub fn link_table_name(subject: &str, object: &str) -> String {
    format!("{subject}-is_linked_to-{object}")
}

/// Name of the foreign-key column referencing `term`'s table.
pub fn fk_column_name(term: &str) -> String {
    format!("{term}_id")
}

/// Derive the schema for a valid vocabulary. Attribute terms become
/// columns, not tables; table and column order follows declaration order.
pub fn derive_schema(v: &Vocabulary) -> SchemaModel<'_> {
    let attribute_terms = v.attribute_object_ids();
    let mut tables = Vec::new();

    for term in &v.terms {
        let id = TermId(term.declaration_index);
        if attribute_terms.contains(&id) {
            continue;
        }
        let mut columns = vec![ColumnDef {
            name: "id".into(),
            sql_type: SqlType::Integer,
            role: ColumnRole::Id,
        }];
        columns.extend(v.attributes_of(id).map(|fact| ColumnDef {
            name: v.term_name(fact.object).to_string(),
            sql_type: SqlType::Numeric,
            role: ColumnRole::Attribute,
        }));
        tables.push(TableDef {
            name: term.name.clone(),
            kind: TableKind::Entity { term: id },
            columns,
        });
    }

    for fact in v.fact_types.iter().filter(|f| f.kind == FactKind::Link) {
        let subject = v.term_name(fact.subject);
        let object = v.term_name(fact.object);
        let fk = |term: &str| ColumnDef {
            name: fk_column_name(term),
            sql_type: SqlType::Integer,
            role: ColumnRole::ForeignKey {
                target_table: term.to_string(),
            },
        };
        tables.push(TableDef {
            name: link_table_name(subject, object),
            kind: TableKind::Link {
                subject: fact.subject,
                object: fact.object,
            },
            columns: vec![fk(subject), fk(object)],
        });
    }

    SchemaModel {
        tables,
        vocabulary: v,
    }
}

impl SchemaModel<'_> {
    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Every identifier (table or column) present in the schema.
    pub fn identifiers(&self) -> impl Iterator<Item = &str> {
        self.tables.iter().flat_map(|t| {
            std::iter::once(t.name.as_str()).chain(t.columns.iter().map(|c| c.name.as_str()))
        })
    }
}

fn quoted(identifier: &str) -> String {
    debug_assert!(!identifier.contains('"'));
    format!("\"{identifier}\"")
}

/// Emit one `CREATE TABLE` statement per table, `;`-terminated, one per
/// line, byte-deterministic. An empty schema emits the empty string.
pub fn emit_ddl(schema: &SchemaModel<'_>) -> String {
    let mut out = String::new();
    for table in &schema.tables {
        let mut parts: Vec<String> = Vec::new();
        for column in &table.columns {
            let mut part = format!("{} {}", quoted(&column.name), column.sql_type.ddl());
            match &column.role {
                ColumnRole::Id => part.push_str(" primary key"),
                ColumnRole::Attribute => {}
                ColumnRole::ForeignKey { target_table } => {
                    part.push_str(&format!(" references {}(\"id\")", quoted(target_table)));
                }
            }
            parts.push(part);
        }
        if let TableKind::Link { .. } = table.kind {
            // Duplicate identical links would make old/new comparisons
            // meaningless, so the pair is unique.
            let cols: Vec<String> = table.columns.iter().map(|c| quoted(&c.name)).collect();
            parts.push(format!("unique ({})", cols.join(", ")));
        }
        out.push_str(&format!(
            "CREATE TABLE {} ({});\n",
            quoted(&table.name),
            parts.join(", ")
        ));
    }
    out
}
