//! A subset of tuples drawn from one extension, and every operation on a
//! single subset: set algebra, select/project/join, group-by and
//! aggregation.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
pub use crate::relation::AggregateTerm;
use crate::relation::{
    AggFn, BindScope, BoundAggregate, BoundExpr, ColumnRef, ConstraintExpr, EvalContext, Relation,
    RowId, Tuple, Value,
};

/// An immutable set of rowids over a base extension. Members are sorted
/// ascending and distinct.
#[derive(Clone)]
pub struct Subset {
    base: Arc<Relation>,
    members: Vec<RowId>,
}

impl Subset {
    pub fn new(base: Arc<Relation>, members: impl IntoIterator<Item = RowId>) -> Result<Self> {
        let mut members: Vec<RowId> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(bad) = members.iter().find(|&&m| base.tuple(m).is_none()) {
            return Err(Error::semantic(format!(
                "rowid {bad} is not part of `{}`",
                base.name()
            )));
        }
        Ok(Subset { base, members })
    }

    /// Caller guarantees `members` is strictly ascending and drawn from `base`.
    pub(crate) fn from_sorted(base: Arc<Relation>, members: Vec<RowId>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(members.iter().all(|&m| base.tuple(m).is_some()));
        Subset { base, members }
    }

    pub fn whole(base: Arc<Relation>) -> Self {
        let members = base.rowids().collect();
        Subset { base, members }
    }

    pub fn empty(base: Arc<Relation>) -> Self {
        Subset {
            base,
            members: Vec::new(),
        }
    }

    pub fn base(&self) -> &Arc<Relation> {
        &self.base
    }

    pub fn members(&self) -> &[RowId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, rowid: RowId) -> bool {
        self.members.binary_search(&rowid).is_ok()
    }

    /// Member tuples in rowid order.
    pub fn tuples(&self) -> impl Iterator<Item = &Tuple> + '_ {
        self.members
            .iter()
            .map(|&m| self.base.tuple(m).expect("member of base"))
    }

    /// Canonical order: smaller subsets first, then lexicographic by rowid.
    pub fn canonical_cmp(&self, other: &Subset) -> Ordering {
        self.members
            .len()
            .cmp(&other.members.len())
            .then_with(|| self.members.cmp(&other.members))
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.members.len() <= other.members.len() && self.members.iter().all(|m| other.contains(*m))
    }

    /// Re-expresses this subset over a wider view of the same source.
    pub(crate) fn rebase(&self, base: &Arc<Relation>) -> Subset {
        if Arc::ptr_eq(&self.base, base) {
            return self.clone();
        }
        Subset::from_sorted(base.clone(), self.members.clone())
    }

    pub fn union(&self, other: &Subset) -> Result<Subset> {
        let base = common_base(&self.base, &other.base)?;
        let mut members = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            match self.members[i].cmp(&other.members[j]) {
                Ordering::Less => {
                    members.push(self.members[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    members.push(other.members[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    members.push(self.members[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        members.extend_from_slice(&self.members[i..]);
        members.extend_from_slice(&other.members[j..]);
        Ok(Subset::from_sorted(base, members))
    }

    pub fn intersect(&self, other: &Subset) -> Result<Subset> {
        let base = common_base(&self.base, &other.base)?;
        let members = self
            .members
            .iter()
            .copied()
            .filter(|m| other.contains(*m))
            .collect();
        Ok(Subset::from_sorted(base, members))
    }

    pub fn difference(&self, other: &Subset) -> Result<Subset> {
        let base = common_base(&self.base, &other.base)?;
        let members = self
            .members
            .iter()
            .copied()
            .filter(|m| !other.contains(*m))
            .collect();
        Ok(Subset::from_sorted(base, members))
    }

    /// Tuples of the base extension not in this subset.
    pub fn complement(&self) -> Subset {
        let members = self.base.rowids().filter(|m| !self.contains(*m)).collect();
        Subset::from_sorted(self.base.clone(), members)
    }

    pub fn select(&self, cond: &ConstraintExpr) -> Result<Subset> {
        let bound = cond.bind(self.base.schema(), BindScope::Tuple)?;
        self.select_bound(&bound)
    }

    pub(crate) fn select_bound(&self, cond: &BoundExpr) -> Result<Subset> {
        let mut members = Vec::new();
        for t in self.tuples() {
            if cond.eval_tuple(t)? {
                members.push(t.rowid);
            }
        }
        Ok(Subset::from_sorted(self.base.clone(), members))
    }

    /// One row per member, restricted to `attrs`, paired with the member's rowid.
    pub fn project(&self, attrs: &[ColumnRef]) -> Result<Vec<(RowId, Vec<Value>)>> {
        let schema = self.base.schema();
        let idx = attrs
            .iter()
            .map(|c| schema.resolve(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .tuples()
            .map(|t| (t.rowid, idx.iter().map(|&i| t.values[i].clone()).collect()))
            .collect())
    }

    /// Joins every member of `self` with every member of `other` that passes
    /// `cond`. A true condition gives the cartesian product.
    pub fn join(&self, other: &Subset, cond: &ConstraintExpr) -> Result<Subset> {
        let product = Arc::new(self.base.product(&other.base)?);
        let bound = cond.bind(product.schema(), BindScope::Tuple)?;
        self.join_into(other, &product, &bound)
    }

    /// As [`Subset::join`] with a prebuilt product extension of the two bases.
    pub(crate) fn join_into(
        &self,
        other: &Subset,
        product: &Arc<Relation>,
        cond: &BoundExpr,
    ) -> Result<Subset> {
        let width = other.base.rowid_space();
        let mut members = Vec::new();
        for &x in &self.members {
            for &y in &other.members {
                let rowid = x * width + y;
                let t = product.tuple(rowid).expect("pair in product extension");
                if cond.eval_tuple(t)? {
                    members.push(rowid);
                }
            }
        }
        Ok(Subset::from_sorted(product.clone(), members))
    }

    pub fn aggregate(&self, term: &AggregateTerm) -> Result<Value> {
        let bound = term.bind(self.base.schema())?;
        let tuples: Vec<&Tuple> = self.tuples().collect();
        aggregate_tuples(&bound, &tuples)
    }

    /// Evaluates an aggregate condition against the whole subset.
    pub fn satisfies(&self, cond: &BoundExpr) -> Result<bool> {
        let tuples: Vec<&Tuple> = self.tuples().collect();
        cond.eval(&GroupContext { tuples: &tuples })
    }

    /// Partitions the members by `keys`, computes `aggs` per group and
    /// drops groups failing `having`. Groups come out in ascending key order.
    pub fn group_by(
        &self,
        keys: &[ColumnRef],
        aggs: &[AggregateTerm],
        having: Option<&ConstraintExpr>,
    ) -> Result<Vec<GroupRow>> {
        let schema = self.base.schema();
        let key_idx = keys
            .iter()
            .map(|c| schema.resolve(c))
            .collect::<Result<Vec<_>>>()?;
        let bound_aggs = aggs
            .iter()
            .map(|a| a.bind(schema))
            .collect::<Result<Vec<_>>>()?;
        let having = having
            .map(|h| h.bind(schema, BindScope::Group(&key_idx)))
            .transpose()?;

        let mut keyed: Vec<(Vec<Value>, &Tuple)> = self
            .tuples()
            .map(|t| (key_idx.iter().map(|&i| t.values[i].clone()).collect(), t))
            .collect();
        keyed.sort_by(|a, b| cmp_keys(&a.0, &b.0).then(a.1.rowid.cmp(&b.1.rowid)));

        let mut out = Vec::new();
        let mut start = 0;
        while start < keyed.len() {
            let mut end = start + 1;
            while end < keyed.len() && cmp_keys(&keyed[start].0, &keyed[end].0).is_eq() {
                end += 1;
            }
            let tuples: Vec<&Tuple> = keyed[start..end].iter().map(|(_, t)| *t).collect();
            let keep = match &having {
                Some(h) => h.eval(&GroupContext { tuples: &tuples })?,
                None => true,
            };
            if keep {
                let aggregates = bound_aggs
                    .iter()
                    .map(|a| aggregate_tuples(a, &tuples))
                    .collect::<Result<Vec<_>>>()?;
                out.push(GroupRow {
                    key: keyed[start].0.clone(),
                    aggregates,
                });
            }
            start = end;
        }
        Ok(out)
    }
}

fn cmp_keys(a: &[Value], b: &[Value]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl PartialEq for Subset {
    fn eq(&self, other: &Self) -> bool {
        self.base.same_base(&other.base) && self.members == other.members
    }
}

impl Eq for Subset {}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.base.name(), self.members)
    }
}

/// One output row of a grouped subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupRow {
    pub key: Vec<Value>,
    pub aggregates: Vec<Value>,
}

/// Picks a base both subsets can be expressed over.
pub(crate) fn common_base(a: &Arc<Relation>, b: &Arc<Relation>) -> Result<Arc<Relation>> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(a.clone())
    } else if a.same_base(b) {
        Ok(Arc::new(a.merge(b)?))
    } else {
        Err(Error::BaseMismatch(
            a.name().to_string(),
            b.name().to_string(),
        ))
    }
}

/// Evaluation context over a set of tuples. Column references read the
/// first tuple, which is only meaningful for grouping keys.
pub(crate) struct GroupContext<'a, 'b> {
    pub tuples: &'a [&'b Tuple],
}

impl EvalContext for GroupContext<'_, '_> {
    fn column(&self, idx: usize) -> Result<Value> {
        self.tuples
            .first()
            .map(|t| t.values[idx].clone())
            .ok_or_else(|| Error::semantic("column reference over an empty group"))
    }

    fn aggregate(&self, agg: &BoundAggregate) -> Result<Value> {
        aggregate_tuples(agg, self.tuples)
    }
}

pub(crate) fn aggregate_tuples(agg: &BoundAggregate, tuples: &[&Tuple]) -> Result<Value> {
    if agg.func == AggFn::Count {
        return Ok(Value::Int(tuples.len() as i64));
    }
    let col = agg.column.expect("bound non-count aggregate has a column");
    let mut values = tuples.iter().map(|t| &t.values[col]);
    let first = values
        .next()
        .ok_or_else(|| Error::UndefinedAggregate(agg.func.name().to_string()))?
        .clone();
    match agg.func {
        AggFn::Sum => values.try_fold(first, |acc, v| acc.checked_add(v)),
        AggFn::Min | AggFn::Max => values.try_fold(first, |acc, v| {
            let ord = v.compare(&acc)?;
            let better = if agg.func == AggFn::Min {
                ord.is_lt()
            } else {
                ord.is_gt()
            };
            Ok(if better { v.clone() } else { acc })
        }),
        AggFn::Avg => {
            let total = values.try_fold(first, |acc, v| acc.checked_add(v))?;
            let total = total.as_decimal().expect("numeric average");
            Ok(Value::Dec(total.div_count(tuples.len() as u64)?))
        }
        AggFn::Count => unreachable!(),
    }
}
