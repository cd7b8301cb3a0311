//! Typed values, schemas, tuples and relations.

mod csv;
pub mod decimal;
pub mod expr;
mod schema;
mod tuple;
mod value;

use std::fmt;

pub use self::csv::{load_csv, read_csv};
pub use decimal::Decimal;
pub use expr::{
    AggArg, AggFn, AggregateTerm, BindScope, BoundAggregate, BoundExpr, BoundOperand, CmpOp,
    ColumnRef, ConstraintExpr, EvalContext, Operand, TupleContext,
};
pub use schema::{Attribute, Schema};
pub use tuple::{RowId, Tuple};
pub use value::{Kind, Value};

use crate::error::{Error, Result};

/// A named schema plus an extension ordered by rowid.
///
/// Loaded tables have rowids `0..n`. Relations derived by selection keep
/// the rowids of their source, so a filtered relation may have gaps;
/// `rowid_space` remembers the size of the source's rowid range so that
/// product rowids can be encoded without collisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    name: String,
    schema: Schema,
    tuples: Vec<Tuple>,
    rowid_space: u64,
}

impl Relation {
    pub fn new(name: &str, schema: Schema, rows: Vec<Vec<Value>>) -> Result<Self> {
        let rowid_space = rows.len() as u64;
        let tuples = rows
            .into_iter()
            .enumerate()
            .map(|(i, values)| Tuple::new(i as RowId, values))
            .collect();
        Self::derived(name, schema, tuples, rowid_space)
    }

    /// Builds a relation from tuples that already carry rowids. They must
    /// be strictly ascending and below `rowid_space`.
    pub fn derived(
        name: &str,
        schema: Schema,
        tuples: Vec<Tuple>,
        rowid_space: u64,
    ) -> Result<Self> {
        for (i, t) in tuples.iter().enumerate() {
            if t.values.len() != schema.arity() {
                return Err(Error::Load(format!(
                    "row {} of `{name}` has {} values, expected {}",
                    t.rowid,
                    t.values.len(),
                    schema.arity()
                )));
            }
            for (v, a) in t.values.iter().zip(schema.attributes()) {
                if v.kind() != a.kind {
                    return Err(Error::Load(format!(
                        "row {} of `{name}`: `{}` holds {} but is declared {}",
                        t.rowid,
                        a.name,
                        v.kind(),
                        a.kind
                    )));
                }
            }
            if t.rowid >= rowid_space || (i > 0 && tuples[i - 1].rowid >= t.rowid) {
                return Err(Error::semantic(format!(
                    "rowids of `{name}` must ascend below {rowid_space}"
                )));
            }
        }
        Ok(Relation {
            name: name.to_string(),
            schema,
            tuples,
            rowid_space,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn rowid_space(&self) -> u64 {
        self.rowid_space
    }

    pub fn rowids(&self) -> impl Iterator<Item = RowId> + '_ {
        self.tuples.iter().map(|t| t.rowid)
    }

    pub fn tuple(&self, rowid: RowId) -> Option<&Tuple> {
        self.tuples
            .binary_search_by_key(&rowid, |t| t.rowid)
            .ok()
            .map(|i| &self.tuples[i])
    }

    /// True when both relations are (possibly differently filtered) views
    /// of the same source table.
    pub fn same_base(&self, other: &Relation) -> bool {
        self.name.eq_ignore_ascii_case(&other.name) && self.rowid_space == other.rowid_space
    }

    /// Keeps the tuples satisfying a per-tuple condition; rowids and order
    /// are preserved.
    pub fn tuple_select(&self, cond: &ConstraintExpr) -> Result<Relation> {
        let bound = cond.bind(&self.schema, BindScope::Tuple)?;
        let mut tuples = Vec::new();
        for t in &self.tuples {
            if bound.eval_tuple(t)? {
                tuples.push(t.clone());
            }
        }
        Ok(Relation {
            name: self.name.clone(),
            schema: self.schema.clone(),
            tuples,
            rowid_space: self.rowid_space,
        })
    }

    /// Restricts every tuple to `attrs`, in the listed order. Duplicate
    /// value rows are kept; they still have distinct rowids.
    pub fn tuple_project(&self, attrs: &[ColumnRef]) -> Result<Relation> {
        if attrs.is_empty() {
            return Err(Error::semantic("projection needs at least one attribute"));
        }
        let idx = attrs
            .iter()
            .map(|c| self.schema.resolve(c))
            .collect::<Result<Vec<_>>>()?;
        let tuples = self
            .tuples
            .iter()
            .map(|t| Tuple::new(t.rowid, idx.iter().map(|&i| t.values[i].clone()).collect()))
            .collect();
        Ok(Relation {
            name: self.name.clone(),
            schema: self.schema.project(&idx),
            tuples,
            rowid_space: self.rowid_space,
        })
    }

    /// Union of two views of the same source, by rowid.
    pub fn merge(&self, other: &Relation) -> Result<Relation> {
        if !self.same_base(other) {
            return Err(Error::BaseMismatch(self.name.clone(), other.name.clone()));
        }
        let mut tuples = Vec::with_capacity(self.len().max(other.len()));
        let (mut a, mut b) = (
            self.tuples.iter().peekable(),
            other.tuples.iter().peekable(),
        );
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(x), Some(y)) if x.rowid == y.rowid => {
                    b.next();
                    a.next()
                }
                (Some(x), Some(y)) if x.rowid < y.rowid => a.next(),
                (Some(_), Some(_)) | (None, Some(_)) => b.next(),
                (Some(_), None) => a.next(),
                (None, None) => break,
            };
            tuples.push(next.unwrap().clone());
        }
        Ok(Relation {
            name: self.name.clone(),
            schema: self.schema.clone(),
            tuples,
            rowid_space: self.rowid_space,
        })
    }

    /// Every concatenation of a tuple of `self` with a tuple of `other`.
    /// The pair `(x, y)` gets rowid `x * other.rowid_space + y`.
    pub fn product(&self, other: &Relation) -> Result<Relation> {
        let schema = self.schema.concat(&other.schema)?;
        let rowid_space = self
            .rowid_space
            .checked_mul(other.rowid_space)
            .ok_or(Error::Overflow("product rowid space"))?;
        let mut tuples = Vec::with_capacity(self.len() * other.len());
        for x in &self.tuples {
            for y in &other.tuples {
                let mut values = x.values.clone();
                values.extend(y.values.iter().cloned());
                tuples.push(Tuple::new(x.rowid * other.rowid_space + y.rowid, values));
            }
        }
        Ok(Relation {
            name: format!("{}*{}", self.name, other.name),
            schema,
            tuples,
            rowid_space,
        })
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{} [{} rows]", self.name, self.schema, self.len())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn shop() -> Relation {
        let schema = Schema::new(
            "Shop",
            [
                ("ShopId", Kind::Int),
                ("Location", Kind::Str),
                ("Distance", Kind::Int),
                ("Rating", Kind::Dec),
            ],
        )
        .unwrap();
        let rows = [
            (1, "M.G. Road", 20, "4.5"),
            (2, "Airport", 15, "3.9"),
            (3, "Downing Street", 18, "4.6"),
            (4, "S.D. Road", 12, "4.8"),
            (5, "Highway Road", 17, "2.0"),
        ];
        Relation::new(
            "Shop",
            schema,
            rows.iter()
                .map(|(id, loc, d, r)| {
                    vec![
                        Value::Int(*id),
                        Value::str(*loc),
                        Value::Int(*d),
                        Value::dec(r),
                    ]
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn select_preserves_rowids() {
        let r = shop();
        let sel = r
            .tuple_select(&ConstraintExpr::column(
                "Rating",
                CmpOp::Gt,
                Value::dec("4.0"),
            ))
            .unwrap();
        assert_eq!(sel.rowids().collect::<Vec<_>>(), vec![0, 2, 3]);
        assert_eq!(sel.rowid_space(), 5);
        assert!(sel.same_base(&r));
    }

    #[test]
    fn select_rejects_unknown_attribute_and_kind_mismatch() {
        let r = shop();
        assert!(matches!(
            r.tuple_select(&ConstraintExpr::column("Price", CmpOp::Gt, 1)),
            Err(Error::UnknownAttribute(_))
        ));
        assert!(matches!(
            r.tuple_select(&ConstraintExpr::column("Location", CmpOp::Gt, 1)),
            Err(Error::KindMismatch(_))
        ));
    }

    #[test]
    fn project_keeps_order_and_duplicates() {
        let r = shop();
        let p = r
            .tuple_project(&[ColumnRef::new("Location"), ColumnRef::new("Rating")])
            .unwrap();
        assert_eq!(p.schema().arity(), 2);
        assert_eq!(p.len(), 5);
        assert_eq!(
            p.tuples()[3].values,
            vec![Value::str("S.D. Road"), Value::dec("4.8")]
        );
        assert!(r.tuple_project(&[]).is_err());
        assert!(r.tuple_project(&[ColumnRef::new("Nope")]).is_err());
    }

    #[test]
    fn merge_and_product() {
        let r = shop();
        let a = r
            .tuple_select(&ConstraintExpr::column("ShopId", CmpOp::Le, 2))
            .unwrap();
        let b = r
            .tuple_select(&ConstraintExpr::column("ShopId", CmpOp::Ge, 2))
            .unwrap();
        assert_eq!(a.merge(&b).unwrap(), r);
        let pair = Relation::new(
            "Pair",
            Schema::new("Pair", [("k", Kind::Int)]).unwrap(),
            vec![
                vec![Value::Int(7)],
                vec![Value::Int(8)],
                vec![Value::Int(9)],
            ],
        )
        .unwrap();
        let pair = pair
            .tuple_select(&ConstraintExpr::column("k", CmpOp::Ge, 8))
            .unwrap();
        let p = a.product(&pair).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.rowid_space(), 15);
        assert_eq!(p.rowids().collect::<Vec<_>>(), vec![1, 2, 4, 5]);
        assert_eq!(p.schema().arity(), 5);
        assert!(matches!(a.product(&b), Err(Error::DuplicateAttribute(_))));
    }

    #[test]
    fn derived_rejects_bad_rowids() {
        let r = shop();
        let mut t = r.tuples().to_vec();
        t.swap(0, 1);
        assert!(Relation::derived("Shop", r.schema().clone(), t, 5).is_err());
    }
}
