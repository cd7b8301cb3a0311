//! Brute-force reference evaluator.
//!
//! Evaluates a [`PlanNode`] literally: power sets are materialized by
//! bitmask, selections inside subsets are applied member by member, and
//! conditions and aggregates are interpreted directly over tuples. Only
//! value arithmetic, comparison and name resolution are shared with the
//! engine. Intended for small inputs in tests; power sets are refused above
//! [`MAX_ROWS`] rows.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::engine::{Catalog, OutputItem, PlanNode, QueryResult};
use crate::error::{Error, Result};
use crate::omega::{CombineMode, Criterion, Extremum, SidRows};
use crate::relation::{
    AggArg, AggFn, AggregateTerm, ColumnRef, ConstraintExpr, Operand, Relation, RowId, Schema,
    Tuple, Value,
};

pub const MAX_ROWS: usize = 16;

/// A family of nonempty rowid sets over one base.
#[derive(Debug, Clone)]
struct Family {
    base: Arc<Relation>,
    members: BTreeSet<Vec<RowId>>,
}

impl Family {
    fn new(base: Arc<Relation>, members: impl IntoIterator<Item = Vec<RowId>>) -> Self {
        let members = members.into_iter().filter(|m| !m.is_empty()).collect();
        Family { base, members }
    }

    /// Members in shortlex order; position + 1 is the sid.
    fn ordered(&self) -> Vec<&Vec<RowId>> {
        let mut v: Vec<_> = self.members.iter().collect();
        v.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        v
    }

    fn tuples(&self, m: &[RowId]) -> Vec<&Tuple> {
        m.iter()
            .map(|&r| self.base.tuple(r).expect("member of base"))
            .collect()
    }
}

enum Val {
    Rel(Arc<Relation>),
    Fam(Family),
    Rows(QueryResult),
}

pub fn evaluate(plan: &PlanNode, catalog: &Catalog) -> Result<QueryResult> {
    plan.shape()?;
    match eval(plan, catalog)? {
        Val::Rel(r) => Err(Error::semantic(format!(
            "plan yields the relation `{}`",
            r.name()
        ))),
        Val::Fam(f) => project(&f, &[OutputItem::Star]),
        Val::Rows(r) => Ok(r),
    }
}

fn rel(plan: &PlanNode, catalog: &Catalog) -> Result<Arc<Relation>> {
    match eval(plan, catalog)? {
        Val::Rel(r) => Ok(r),
        _ => Err(Error::semantic("expected a relation")),
    }
}

fn fam(plan: &PlanNode, catalog: &Catalog) -> Result<Family> {
    match eval(plan, catalog)? {
        Val::Fam(f) => Ok(f),
        _ => Err(Error::semantic("expected subsets")),
    }
}

fn eval(plan: &PlanNode, catalog: &Catalog) -> Result<Val> {
    use PlanNode::*;
    Ok(match plan {
        Scan(name) => Val::Rel(catalog.get(name)?.clone()),
        TupleSelect { input, cond } => match eval(input, catalog)? {
            Val::Rel(r) => {
                let mut kept = Vec::new();
                for t in r.tuples() {
                    if holds(cond, r.schema(), &[t])? {
                        kept.push(t.clone());
                    }
                }
                Val::Rel(Arc::new(Relation::derived(
                    r.name(),
                    r.schema().clone(),
                    kept,
                    r.rowid_space(),
                )?))
            }
            Val::Fam(f) => {
                let mut out = Vec::new();
                for m in &f.members {
                    let mut kept = Vec::new();
                    for t in f.tuples(m) {
                        if holds(cond, f.base.schema(), &[t])? {
                            kept.push(t.rowid);
                        }
                    }
                    out.push(kept);
                }
                Val::Fam(Family::new(f.base, out))
            }
            Val::Rows(_) => return Err(Error::semantic("cannot select from rows")),
        },
        PowerSet(input) => {
            let r = rel(input, catalog)?;
            Val::Fam(power_set(&r)?)
        }
        Lift(input) => {
            let r = rel(input, catalog)?;
            if r.is_empty() {
                return Err(Error::semantic(format!(
                    "cannot lift empty relation `{}`",
                    r.name()
                )));
            }
            let all = r.rowids().collect();
            Val::Fam(Family::new(r, [all]))
        }
        ConstraintFilter { input, cond } => {
            let f = fam(input, catalog)?;
            let mut kept = Vec::new();
            for m in &f.members {
                if holds(cond, f.base.schema(), &f.tuples(m))? {
                    kept.push(m.clone());
                }
            }
            Val::Fam(Family::new(f.base, kept))
        }
        MaxMin {
            input,
            mode,
            criterion,
        } => Val::Fam(maxmin(fam(input, catalog)?, *mode, *criterion)),
        UnaryCombine { input, mode } => {
            let f = fam(input, catalog)?;
            let mut it = f.members.iter();
            let combined: BTreeSet<RowId> = match (it.next(), mode) {
                (None, CombineMode::Union) => BTreeSet::new(),
                (None, CombineMode::Intersection) => return Err(Error::EmptyIntersection),
                (Some(first), _) => it.fold(first.iter().copied().collect(), |acc, m| {
                    let m: BTreeSet<RowId> = m.iter().copied().collect();
                    match mode {
                        CombineMode::Union => &acc | &m,
                        CombineMode::Intersection => &acc & &m,
                    }
                }),
            };
            Val::Fam(Family::new(f.base, [combined.into_iter().collect()]))
        }
        SetCombine { left, right, mode } => {
            let (a, b) = (fam(left, catalog)?, fam(right, catalog)?);
            let base = shared_base(&a.base, &b.base)?;
            let members: Vec<Vec<RowId>> = match mode {
                CombineMode::Union => a.members.union(&b.members).cloned().collect(),
                CombineMode::Intersection => a.members.intersection(&b.members).cloned().collect(),
            };
            Val::Fam(Family::new(base, members))
        }
        CrossCombine { left, right, mode } => {
            let (a, b) = (fam(left, catalog)?, fam(right, catalog)?);
            let base = shared_base(&a.base, &b.base)?;
            let mut out = Vec::new();
            for x in &a.members {
                for y in &b.members {
                    let xs: BTreeSet<RowId> = x.iter().copied().collect();
                    let ys: BTreeSet<RowId> = y.iter().copied().collect();
                    let c = match mode {
                        CombineMode::Union => &xs | &ys,
                        CombineMode::Intersection => &xs & &ys,
                    };
                    out.push(c.into_iter().collect());
                }
            }
            Val::Fam(Family::new(base, out))
        }
        CrossProduct { left, right } => {
            let (a, b) = (fam(left, catalog)?, fam(right, catalog)?);
            Val::Fam(join(&a, &b, &ConstraintExpr::True)?)
        }
        CrossJoin { left, right, cond } => {
            let (a, b) = (fam(left, catalog)?, fam(right, catalog)?);
            Val::Fam(join(&a, &b, cond)?)
        }
        Project { input, items } => {
            let f = fam(input, catalog)?;
            Val::Rows(project(&f, items)?)
        }
        GroupBy {
            input,
            keys,
            items,
            having,
        } => {
            let f = fam(input, catalog)?;
            Val::Rows(group(&f, keys, items, having.as_ref())?)
        }
    })
}

fn power_set(r: &Arc<Relation>) -> Result<Family> {
    if r.len() > MAX_ROWS {
        return Err(Error::LimitExceeded {
            limit: "oracle rows",
            value: MAX_ROWS as u64,
        });
    }
    let ids: Vec<RowId> = r.rowids().collect();
    let members = (1u32..1 << ids.len()).map(|mask| {
        (0..ids.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| ids[i])
            .collect()
    });
    Ok(Family::new(r.clone(), members))
}

fn maxmin(f: Family, mode: Extremum, criterion: Criterion) -> Family {
    let members: Vec<Vec<RowId>> = match criterion {
        Criterion::Cardinality => {
            let lens = f.members.iter().map(Vec::len);
            let target = match mode {
                Extremum::Maximal => lens.max(),
                Extremum::Minimal => lens.min(),
            };
            f.members
                .iter()
                .filter(|m| Some(m.len()) == target)
                .cloned()
                .collect()
        }
        Criterion::Inclusion => {
            let sets: Vec<BTreeSet<RowId>> = f
                .members
                .iter()
                .map(|m| m.iter().copied().collect())
                .collect();
            f.members
                .iter()
                .zip(&sets)
                .filter(|(_, s)| {
                    !sets.iter().any(|t| match mode {
                        Extremum::Maximal => s.is_subset(t) && s.len() < t.len(),
                        Extremum::Minimal => t.is_subset(s) && t.len() < s.len(),
                    })
                })
                .map(|(m, _)| m.clone())
                .collect()
        }
    };
    Family::new(f.base, members)
}

fn shared_base(a: &Arc<Relation>, b: &Arc<Relation>) -> Result<Arc<Relation>> {
    if a == b {
        return Ok(a.clone());
    }
    if !a.name().eq_ignore_ascii_case(b.name()) || a.rowid_space() != b.rowid_space() {
        return Err(Error::BaseMismatch(
            a.name().to_string(),
            b.name().to_string(),
        ));
    }
    let mut by_id: BTreeMap<RowId, Tuple> = BTreeMap::new();
    for t in a.tuples().iter().chain(b.tuples()) {
        by_id.entry(t.rowid).or_insert_with(|| t.clone());
    }
    Ok(Arc::new(Relation::derived(
        a.name(),
        a.schema().clone(),
        by_id.into_values().collect(),
        a.rowid_space(),
    )?))
}

/// Pairwise join of members on the concatenated tuples. The pair `(x, y)`
/// is identified by `x * |rowids of b| + y`.
fn join(a: &Family, b: &Family, cond: &ConstraintExpr) -> Result<Family> {
    let schema = a.base.schema().concat(b.base.schema())?;
    let width = b.base.rowid_space();
    let mut tuples = Vec::new();
    for x in a.base.tuples() {
        for y in b.base.tuples() {
            let values = x.values.iter().chain(&y.values).cloned().collect();
            tuples.push(Tuple::new(x.rowid * width + y.rowid, values));
        }
    }
    let name = format!("{}*{}", a.base.name(), b.base.name());
    let base = Arc::new(Relation::derived(
        &name,
        schema,
        tuples,
        a.base.rowid_space() * width,
    )?);
    let mut out = Vec::new();
    for mx in &a.members {
        for my in &b.members {
            let mut m = Vec::new();
            for &x in mx {
                for &y in my {
                    let id = x * width + y;
                    if holds(cond, base.schema(), &[base.tuple(id).expect("pair")])? {
                        m.push(id);
                    }
                }
            }
            out.push(m);
        }
    }
    Ok(Family::new(base, out))
}

/// Evaluates `cond` over a group of tuples. Columns read the first tuple,
/// aggregates range over all of them; a single tuple is the per-tuple case.
fn holds(cond: &ConstraintExpr, schema: &Schema, tuples: &[&Tuple]) -> Result<bool> {
    Ok(match cond {
        ConstraintExpr::True => true,
        ConstraintExpr::Compare { left, op, right } => {
            let l = operand(left, schema, tuples)?;
            let r = operand(right, schema, tuples)?;
            op.holds(l.compare(&r)?)
        }
        ConstraintExpr::And(parts) => {
            for p in parts {
                if !holds(p, schema, tuples)? {
                    return Ok(false);
                }
            }
            true
        }
        ConstraintExpr::Or(parts) => {
            for p in parts {
                if holds(p, schema, tuples)? {
                    return Ok(true);
                }
            }
            false
        }
        ConstraintExpr::Not(x) => !holds(x, schema, tuples)?,
    })
}

fn operand(o: &Operand, schema: &Schema, tuples: &[&Tuple]) -> Result<Value> {
    match o {
        Operand::Literal(v) => Ok(v.clone()),
        Operand::Column(c) => {
            let i = schema.resolve(c)?;
            Ok(tuples[0].values[i].clone())
        }
        Operand::Aggregate(a) => aggregate(a, schema, tuples),
    }
}

fn aggregate(a: &AggregateTerm, schema: &Schema, tuples: &[&Tuple]) -> Result<Value> {
    let col = match &a.arg {
        AggArg::Sid(_) => None,
        AggArg::Column(c) => Some(schema.resolve(c)?),
    };
    if a.func == AggFn::Count {
        return Ok(Value::Int(tuples.len() as i64));
    }
    let col = col.ok_or_else(|| Error::semantic(format!("`{a}` needs a column")))?;
    let values: Vec<&Value> = tuples.iter().map(|t| &t.values[col]).collect();
    let Some((first, rest)) = values.split_first() else {
        return Err(Error::UndefinedAggregate(a.func.name().to_string()));
    };
    let sum = || {
        rest.iter()
            .try_fold((*first).clone(), |acc, v| acc.checked_add(v))
    };
    Ok(match a.func {
        AggFn::Sum => sum()?,
        AggFn::Avg => {
            let total = sum()?
                .as_decimal()
                .ok_or_else(|| Error::semantic("avg of text"))?;
            Value::Dec(total.div_count(values.len() as u64)?)
        }
        AggFn::Min | AggFn::Max => {
            let want = if a.func == AggFn::Min {
                Ordering::Less
            } else {
                Ordering::Greater
            };
            let mut best = *first;
            for v in rest {
                if v.compare(best)? == want {
                    best = v;
                }
            }
            best.clone()
        }
        AggFn::Count => unreachable!(),
    })
}

fn project(f: &Family, items: &[OutputItem]) -> Result<QueryResult> {
    let schema = f.base.schema();
    let names = schema.display_names();
    let ordered = f.ordered();
    if items.iter().any(|i| matches!(i, OutputItem::Aggregate(_))) {
        let mut columns = vec!["sid".to_string()];
        let mut aggs = Vec::new();
        for i in items {
            match i {
                OutputItem::Aggregate(a) => {
                    columns.push(a.to_string());
                    aggs.push(a);
                }
                OutputItem::Sid => {}
                _ => return Err(Error::MixedProjection),
            }
        }
        let mut rows = Vec::new();
        for (i, m) in ordered.iter().enumerate() {
            let tuples = f.tuples(m);
            let mut row = vec![Value::Int(i as i64 + 1)];
            for a in &aggs {
                row.push(aggregate(a, schema, &tuples)?);
            }
            rows.push(row);
        }
        return Ok(QueryResult::Rows { columns, rows });
    }
    let mut idx = Vec::new();
    for i in items {
        match i {
            OutputItem::Star => idx.extend(0..schema.arity()),
            OutputItem::Column(c) => idx.push(schema.resolve(c)?),
            _ => {}
        }
    }
    if idx.is_empty() {
        let rows = (1..=ordered.len())
            .map(|s| vec![Value::Int(s as i64)])
            .collect();
        return Ok(QueryResult::Rows {
            columns: vec!["sid".into()],
            rows,
        });
    }
    let subsets = ordered
        .iter()
        .enumerate()
        .map(|(i, m)| SidRows {
            sid: i + 1,
            rows: f
                .tuples(m)
                .into_iter()
                .map(|t| (t.rowid, idx.iter().map(|&k| t.values[k].clone()).collect()))
                .collect(),
        })
        .collect();
    Ok(QueryResult::Subsets {
        columns: idx.iter().map(|&k| names[k].clone()).collect(),
        subsets,
    })
}

fn group(
    f: &Family,
    keys: &[ColumnRef],
    items: &[OutputItem],
    having: Option<&ConstraintExpr>,
) -> Result<QueryResult> {
    let schema = f.base.schema();
    let names = schema.display_names();
    let key_idx = keys
        .iter()
        .map(|k| schema.resolve(k))
        .collect::<Result<Vec<_>>>()?;
    let mut columns = vec!["sid".to_string()];
    for i in items {
        match i {
            OutputItem::Sid => {}
            OutputItem::Column(c) => {
                let k = schema.resolve(c)?;
                if !key_idx.contains(&k) {
                    return Err(Error::semantic(format!("`{c}` is not a grouping key")));
                }
                columns.push(names[k].clone());
            }
            OutputItem::Aggregate(a) => columns.push(a.to_string()),
            OutputItem::Star => return Err(Error::semantic("SELECT * with GROUP BY")),
        }
    }
    let mut rows = Vec::new();
    for (sid, m) in f.ordered().into_iter().enumerate() {
        let mut groups: Vec<(Vec<Value>, Vec<&Tuple>)> = Vec::new();
        for t in f.tuples(m) {
            let key: Vec<Value> = key_idx.iter().map(|&k| t.values[k].clone()).collect();
            match groups.iter_mut().find(|(g, _)| key_eq(g, &key)) {
                Some((_, ts)) => ts.push(t),
                None => groups.push((key, vec![t])),
            }
        }
        groups.sort_by(|a, b| key_cmp(&a.0, &b.0));
        for (_, ts) in groups {
            if let Some(h) = having {
                if !holds(h, schema, &ts)? {
                    continue;
                }
            }
            let mut row = vec![Value::Int(sid as i64 + 1)];
            for i in items {
                match i {
                    OutputItem::Column(c) => row.push(ts[0].values[schema.resolve(c)?].clone()),
                    OutputItem::Aggregate(a) => row.push(aggregate(a, schema, &ts)?),
                    _ => {}
                }
            }
            rows.push(row);
        }
    }
    Ok(QueryResult::Rows { columns, rows })
}

fn key_eq(a: &[Value], b: &[Value]) -> bool {
    key_cmp(a, b) == Ordering::Equal
}

fn key_cmp(a: &[Value], b: &[Value]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}
