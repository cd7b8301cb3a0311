use std::fmt;

use super::expr::ColumnRef;
use super::value::Kind;
use crate::error::{Error, Result};

/// One column. `table` names the relation the column was loaded from; it
/// survives projections and products so `Item.ItemId` stays resolvable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub table: String,
    pub name: String,
    pub kind: Kind,
}

impl Attribute {
    pub fn qualified_name(&self) -> String {
        format!("{}.{}", self.table, self.name)
    }

    fn matches(&self, col: &ColumnRef) -> bool {
        self.name.eq_ignore_ascii_case(&col.name)
            && col
                .table
                .as_ref()
                .is_none_or(|t| self.table.eq_ignore_ascii_case(t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    /// Schema of a base table; names must be unique ignoring case.
    pub fn new<S: Into<String>>(
        table: &str,
        columns: impl IntoIterator<Item = (S, Kind)>,
    ) -> Result<Self> {
        let attributes = columns
            .into_iter()
            .map(|(name, kind)| Attribute {
                table: table.to_string(),
                name: name.into(),
                kind,
            })
            .collect();
        Self::from_attributes(attributes)
    }

    pub fn from_attributes(attributes: Vec<Attribute>) -> Result<Self> {
        for (i, a) in attributes.iter().enumerate() {
            let clash = attributes[..i].iter().any(|b| {
                b.name.eq_ignore_ascii_case(&a.name) && b.table.eq_ignore_ascii_case(&a.table)
            });
            if clash {
                return Err(Error::DuplicateAttribute(a.qualified_name()));
            }
        }
        Ok(Schema { attributes })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn attribute(&self, idx: usize) -> &Attribute {
        &self.attributes[idx]
    }

    pub fn resolve(&self, col: &ColumnRef) -> Result<usize> {
        let mut hits = self
            .attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.matches(col))
            .map(|(i, _)| i);
        match (hits.next(), hits.next()) {
            (Some(i), None) => Ok(i),
            (None, _) => Err(Error::UnknownAttribute(col.to_string())),
            (Some(_), Some(_)) => Err(Error::AmbiguousAttribute(col.to_string())),
        }
    }

    pub fn contains(&self, col: &ColumnRef) -> bool {
        self.attributes.iter().any(|a| a.matches(col))
    }

    /// Column headers: bare names, qualified only where a bare name repeats.
    pub fn display_names(&self) -> Vec<String> {
        self.attributes
            .iter()
            .map(|a| {
                let repeats = self
                    .attributes
                    .iter()
                    .filter(|b| b.name.eq_ignore_ascii_case(&a.name))
                    .count()
                    > 1;
                if repeats {
                    a.qualified_name()
                } else {
                    a.name.clone()
                }
            })
            .collect()
    }

    pub fn project(&self, indices: &[usize]) -> Schema {
        Schema {
            attributes: indices
                .iter()
                .map(|&i| self.attributes[i].clone())
                .collect(),
        }
    }

    pub fn concat(&self, other: &Schema) -> Result<Schema> {
        let mut attributes = self.attributes.clone();
        attributes.extend(other.attributes.iter().cloned());
        Schema::from_attributes(attributes)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.attributes.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}:{}", a.name, a.kind)?;
        }
        f.write_str(")")
    }
}
