//! Plan IR, constraint classification, the pruned subset enumerator and
//! the plan evaluator.

pub(crate) mod classify;
mod enumerate;
mod eval;
mod plan;

use std::sync::Arc;

use indexmap::IndexMap;

pub use classify::{
    classify_constraints, CardinalityBounds, ConstraintClassification, JoinAtom, Source,
};
pub use enumerate::{enumerate_subsets, EnumStats};
pub use eval::{
    aggregate_projection, evaluate, evaluate_with_stats, push_down_selections, EvalStats,
};
pub use plan::{OutputItem, PlanNode, Shape};

use crate::error::{Error, Result};
use crate::omega::SidRows;
use crate::relation::{Relation, Value};

/// Resource ceilings for one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Enumeration nodes a single subset enumeration may visit.
    pub max_generated: u64,
    /// Members any relation of subsets may hold.
    pub max_results: u64,
    /// Largest relation the materializing power set accepts.
    pub naive_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_generated: 1_000_000,
            max_results: 100_000,
            naive_cap: 20,
        }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<()> {
        if self.max_generated == 0 || self.max_results == 0 || self.naive_cap == 0 {
            return Err(Error::semantic("limits must be positive"));
        }
        Ok(())
    }
}

/// Registered relations, looked up by case-insensitive name in
/// registration order.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    tables: IndexMap<String, Arc<Relation>>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a relation under its own name; names must be unique.
    pub fn register(&mut self, relation: Relation) -> Result<Arc<Relation>> {
        let key = relation.name().to_ascii_lowercase();
        if self.tables.contains_key(&key) {
            return Err(Error::Load(format!(
                "table `{}` is already registered",
                relation.name()
            )));
        }
        let r = Arc::new(relation);
        self.tables.insert(key, r.clone());
        Ok(r)
    }

    /// Adds or replaces a relation.
    pub fn replace(&mut self, relation: Relation) -> Arc<Relation> {
        let r = Arc::new(relation);
        self.tables.insert(r.name().to_ascii_lowercase(), r.clone());
        r
    }

    pub fn get(&self, name: &str) -> Result<&Arc<Relation>> {
        self.tables
            .get(&name.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn relations(&self) -> impl Iterator<Item = &Arc<Relation>> + '_ {
        self.tables.values()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// Final output of a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryResult {
    /// Member tuples of each subset, tagged by sid. `columns` excludes
    /// the implicit leading sid column.
    Subsets {
        columns: Vec<String>,
        subsets: Vec<SidRows>,
    },
    /// One row per subset (aggregate projection) or per group. The first
    /// column is `sid`.
    Rows {
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
    },
}

impl QueryResult {
    /// Column headers as rendered, sid first.
    pub fn header(&self) -> Vec<String> {
        match self {
            QueryResult::Subsets { columns, .. } => std::iter::once("sid".to_string())
                .chain(columns.iter().cloned())
                .collect(),
            QueryResult::Rows { columns, .. } => columns.clone(),
        }
    }

    /// The result as flat rows, sid first.
    pub fn flat_rows(&self) -> Vec<Vec<Value>> {
        match self {
            QueryResult::Subsets { subsets, .. } => subsets
                .iter()
                .flat_map(|s| {
                    s.rows.iter().map(move |(_, vals)| {
                        std::iter::once(Value::Int(s.sid as i64))
                            .chain(vals.iter().cloned())
                            .collect()
                    })
                })
                .collect(),
            QueryResult::Rows { rows, .. } => rows.clone(),
        }
    }

    /// Member rowid lists of a subset result, in sid order.
    pub fn member_lists(&self) -> Option<Vec<Vec<u64>>> {
        match self {
            QueryResult::Subsets { subsets, .. } => Some(
                subsets
                    .iter()
                    .map(|s| s.rows.iter().map(|r| r.0).collect())
                    .collect(),
            ),
            QueryResult::Rows { .. } => None,
        }
    }
}
