use std::fmt;

use crate::omega::{CombineMode, Extremum};
use crate::relation::{AggregateTerm, ColumnRef, ConstraintExpr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectItem {
    Sid(String),
    Column(ColumnRef),
    Aggregate(AggregateTerm),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectList {
    Star,
    Items(Vec<SelectItem>),
}

/// `table sid` in WITH SUBSETS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetDecl {
    pub table: String,
    pub sid: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupClause {
    pub keys: Vec<ColumnRef>,
    pub having: Option<ConstraintExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetQuery {
    pub select: SelectList,
    pub from: Vec<String>,
    pub where_cond: Option<ConstraintExpr>,
    pub decls: Vec<SubsetDecl>,
    pub maxmin: Option<Extremum>,
    pub constrained_by: Option<ConstraintExpr>,
    pub apply_unary: Option<CombineMode>,
    pub group_by: Option<GroupClause>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combinator {
    Union,
    Intersection,
    CrossUnion,
    CrossIntersection,
}

impl Combinator {
    pub fn as_str(self) -> &'static str {
        match self {
            Combinator::Union => "UNION",
            Combinator::Intersection => "INTERSECTION",
            Combinator::CrossUnion => "CROSS UNION",
            Combinator::CrossIntersection => "CROSS INTERSECTION",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Subset(Box<SubsetQuery>),
    Compound {
        left: Box<Query>,
        op: Combinator,
        right: Box<Query>,
    },
}

fn mode_word(m: CombineMode) -> &'static str {
    match m {
        CombineMode::Union => "UNION",
        CombineMode::Intersection => "INTERSECTION",
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Sid(s) => f.write_str(s),
            SelectItem::Column(c) => write!(f, "{c}"),
            SelectItem::Aggregate(a) => write!(f, "{a}"),
        }
    }
}

impl fmt::Display for SubsetQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        match &self.select {
            SelectList::Star => f.write_str("*")?,
            SelectList::Items(items) => f.write_str(&join(items))?,
        }
        write!(f, " FROM {}", self.from.join(", "))?;
        if let Some(w) = &self.where_cond {
            write!(f, " WHERE {w}")?;
        }
        let decls: Vec<String> = self
            .decls
            .iter()
            .map(|d| format!("{} {}", d.table, d.sid))
            .collect();
        write!(f, " WITH SUBSETS {}", decls.join(", "))?;
        match self.maxmin {
            Some(Extremum::Maximal) => f.write_str(" MAXIMAL")?,
            Some(Extremum::Minimal) => f.write_str(" MINIMAL")?,
            None => {}
        }
        if let Some(c) = &self.constrained_by {
            write!(f, " CONSTRAINED BY {c}")?;
        }
        if let Some(m) = self.apply_unary {
            write!(f, " APPLY UNARY {}", mode_word(m))?;
        }
        if let Some(g) = &self.group_by {
            write!(f, " GROUP BY {}", join(&g.keys))?;
            if let Some(h) = &g.having {
                write!(f, " HAVING {h}")?;
            }
        }
        Ok(())
    }
}

/// Renders back to query text that parses to an equal tree.
impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Subset(q) => write!(f, "{q}"),
            Query::Compound { left, op, right } => {
                write!(f, "({left}) {} ({right})", op.as_str())
            }
        }
    }
}
