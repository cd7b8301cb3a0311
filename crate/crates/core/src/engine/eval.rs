use std::sync::Arc;

use crate::error::{Error, Result};
use crate::omega::RelationOfSubsets;
use crate::relation::{AggregateTerm, ColumnRef, ConstraintExpr, Relation, Value};
use crate::subset::Subset;

use super::enumerate::enumerate_subsets;
use super::plan::{OutputItem, PlanNode};
use super::{Catalog, Limits, QueryResult};

/// Work counters accumulated over a whole plan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub enumerations: u64,
    pub nodes: u64,
}

enum Evaluated {
    Relation(Arc<Relation>),
    Omega(RelationOfSubsets),
    Subset(Subset),
    Rows(QueryResult),
}

pub fn evaluate(plan: &PlanNode, catalog: &Catalog, limits: &Limits) -> Result<QueryResult> {
    evaluate_with_stats(plan, catalog, limits).map(|(r, _)| r)
}

pub fn evaluate_with_stats(
    plan: &PlanNode,
    catalog: &Catalog,
    limits: &Limits,
) -> Result<(QueryResult, EvalStats)> {
    limits.validate()?;
    plan.shape()?;
    let plan = push_down_selections(plan.clone());
    let mut ev = Evaluator {
        catalog,
        limits,
        stats: EvalStats::default(),
    };
    let result = match ev.eval(&plan)? {
        Evaluated::Relation(r) => {
            return Err(Error::semantic(format!(
                "plan yields the plain relation `{}`, not subsets",
                r.name()
            )))
        }
        Evaluated::Omega(w) => aggregate_projection(&w, &[OutputItem::Star])?,
        Evaluated::Subset(s) => aggregate_projection(&single(s), &[OutputItem::Star])?,
        Evaluated::Rows(r) => r,
    };
    Ok((result, ev.stats))
}

/// Moves per-tuple selections applied inside every generated subset below
/// the power set: selecting within all subsets of `r` gives exactly the
/// subsets of the selected `r`.
pub fn push_down_selections(plan: PlanNode) -> PlanNode {
    use PlanNode::*;
    let down = |p: Box<PlanNode>| Box::new(push_down_selections(*p));
    match plan {
        TupleSelect { input, cond } => match push_down_selections(*input) {
            PowerSet(r) => PowerSet(Box::new(TupleSelect { input: r, cond })),
            other => TupleSelect {
                input: Box::new(other),
                cond,
            },
        },
        Scan(n) => Scan(n),
        PowerSet(r) => PowerSet(down(r)),
        Lift(r) => Lift(down(r)),
        ConstraintFilter { input, cond } => ConstraintFilter {
            input: down(input),
            cond,
        },
        MaxMin {
            input,
            mode,
            criterion,
        } => MaxMin {
            input: down(input),
            mode,
            criterion,
        },
        UnaryCombine { input, mode } => UnaryCombine {
            input: down(input),
            mode,
        },
        SetCombine { left, right, mode } => SetCombine {
            left: down(left),
            right: down(right),
            mode,
        },
        CrossCombine { left, right, mode } => CrossCombine {
            left: down(left),
            right: down(right),
            mode,
        },
        CrossProduct { left, right } => CrossProduct {
            left: down(left),
            right: down(right),
        },
        CrossJoin { left, right, cond } => CrossJoin {
            left: down(left),
            right: down(right),
            cond,
        },
        Project { input, items } => Project {
            input: down(input),
            items,
        },
        GroupBy {
            input,
            keys,
            items,
            having,
        } => GroupBy {
            input: down(input),
            keys,
            items,
            having,
        },
    }
}

struct Evaluator<'a> {
    catalog: &'a Catalog,
    limits: &'a Limits,
    stats: EvalStats,
}

impl Evaluator<'_> {
    fn relation(&mut self, plan: &PlanNode) -> Result<Arc<Relation>> {
        match self.eval(plan)? {
            Evaluated::Relation(r) => Ok(r),
            _ => Err(Error::semantic("expected a relation operand")),
        }
    }

    fn omega(&mut self, plan: &PlanNode) -> Result<RelationOfSubsets> {
        match self.eval(plan)? {
            Evaluated::Omega(w) => Ok(w),
            _ => Err(Error::semantic("expected a relation of subsets operand")),
        }
    }

    fn enumerate(&mut self, r: &Arc<Relation>, cond: &ConstraintExpr) -> Result<RelationOfSubsets> {
        let (w, stats) = enumerate_subsets(r, cond, self.limits)?;
        self.stats.enumerations += 1;
        self.stats.nodes += stats.nodes;
        Ok(w)
    }

    fn checked(&self, w: RelationOfSubsets) -> Result<Evaluated> {
        debug_assert!(w.validate().is_ok(), "{:?}", w.validate());
        if w.len() as u64 > self.limits.max_results {
            return Err(Error::LimitExceeded {
                limit: "max_results",
                value: self.limits.max_results,
            });
        }
        Ok(Evaluated::Omega(w))
    }

    fn pairs(&self, a: &RelationOfSubsets, b: &RelationOfSubsets) -> Result<()> {
        if (a.len() as u64).saturating_mul(b.len() as u64) > self.limits.max_results {
            return Err(Error::LimitExceeded {
                limit: "max_results",
                value: self.limits.max_results,
            });
        }
        Ok(())
    }

    fn eval(&mut self, plan: &PlanNode) -> Result<Evaluated> {
        use PlanNode::*;
        match plan {
            Scan(name) => Ok(Evaluated::Relation(self.catalog.get(name)?.clone())),
            TupleSelect { input, cond } => match self.eval(input)? {
                Evaluated::Relation(r) => Ok(Evaluated::Relation(Arc::new(r.tuple_select(cond)?))),
                Evaluated::Omega(w) => self.checked(w.tuple_select(cond)?),
                _ => Err(Error::semantic("tuple select needs a relation or subsets")),
            },
            PowerSet(r) => {
                let r = self.relation(r)?;
                let w = self.enumerate(&r, &ConstraintExpr::True)?;
                self.checked(w)
            }
            ConstraintFilter { input, cond } => {
                if let PowerSet(r) = input.as_ref() {
                    let r = self.relation(r)?;
                    let w = self.enumerate(&r, cond)?;
                    return self.checked(w);
                }
                let w = self.omega(input)?;
                self.checked(w.constraint_filter(cond)?)
            }
            Lift(r) => {
                let r = self.relation(r)?;
                self.checked(RelationOfSubsets::lift(r)?)
            }
            MaxMin {
                input,
                mode,
                criterion,
            } => {
                let w = self.omega(input)?;
                self.checked(w.maxmin(*mode, *criterion))
            }
            UnaryCombine { input, mode } => {
                let w = self.omega(input)?;
                Ok(Evaluated::Subset(w.unary_combine(*mode)?))
            }
            SetCombine { left, right, mode } => {
                let (a, b) = (self.omega(left)?, self.omega(right)?);
                self.checked(a.set_combine(&b, *mode)?)
            }
            CrossCombine { left, right, mode } => {
                let (a, b) = (self.omega(left)?, self.omega(right)?);
                self.pairs(&a, &b)?;
                self.checked(a.cross_combine(&b, *mode)?)
            }
            CrossProduct { left, right } => {
                let (a, b) = (self.omega(left)?, self.omega(right)?);
                self.pairs(&a, &b)?;
                self.checked(a.cross_product(&b)?)
            }
            CrossJoin { left, right, cond } => {
                let (a, b) = (self.omega(left)?, self.omega(right)?);
                self.pairs(&a, &b)?;
                self.checked(a.cross_join(&b, cond)?)
            }
            Project { input, items } => {
                let w = self.subsets(input)?;
                Ok(Evaluated::Rows(aggregate_projection(&w, items)?))
            }
            GroupBy {
                input,
                keys,
                items,
                having,
            } => {
                let w = self.subsets(input)?;
                Ok(Evaluated::Rows(group_projection(
                    &w,
                    keys,
                    items,
                    having.as_ref(),
                )?))
            }
        }
    }

    /// A relation of subsets, or a single combined subset viewed as one.
    fn subsets(&mut self, plan: &PlanNode) -> Result<RelationOfSubsets> {
        match self.eval(plan)? {
            Evaluated::Omega(w) => Ok(w),
            Evaluated::Subset(s) => Ok(single(s)),
            _ => Err(Error::semantic("projection needs subsets")),
        }
    }
}

fn single(s: Subset) -> RelationOfSubsets {
    let base = s.base().clone();
    RelationOfSubsets::canonical(base, vec![s])
}

/// Projects every subset of `w` onto `items`. Aggregate items give one row
/// per subset; attribute items give the member tuples of each subset.
pub fn aggregate_projection(w: &RelationOfSubsets, items: &[OutputItem]) -> Result<QueryResult> {
    if items.is_empty() {
        return Err(Error::semantic("empty projection list"));
    }
    let schema = w.base().schema();
    let names = schema.display_names();
    let has_aggregate = items.iter().any(|i| matches!(i, OutputItem::Aggregate(_)));
    if has_aggregate {
        let mut aggs: Vec<&AggregateTerm> = Vec::new();
        for item in items {
            match item {
                OutputItem::Aggregate(a) => aggs.push(a),
                OutputItem::Sid => {}
                OutputItem::Column(_) | OutputItem::Star => return Err(Error::MixedProjection),
            }
        }
        for a in &aggs {
            a.bind(schema)?;
        }
        let columns = std::iter::once("sid".to_string())
            .chain(aggs.iter().map(|a| a.to_string()))
            .collect();
        let rows = w
            .iter()
            .map(|(sid, s)| {
                std::iter::once(Ok(Value::Int(sid as i64)))
                    .chain(aggs.iter().map(|a| s.aggregate(a)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        return Ok(QueryResult::Rows { columns, rows });
    }

    let mut cols: Vec<ColumnRef> = Vec::new();
    let mut headers = Vec::new();
    for item in items {
        match item {
            OutputItem::Sid => {}
            OutputItem::Star => {
                for (a, n) in schema.attributes().iter().zip(&names) {
                    cols.push(ColumnRef::qualified(a.table.clone(), a.name.clone()));
                    headers.push(n.clone());
                }
            }
            OutputItem::Column(c) => {
                headers.push(names[schema.resolve(c)?].clone());
                cols.push(c.clone());
            }
            OutputItem::Aggregate(_) => unreachable!(),
        }
    }
    if cols.is_empty() {
        let rows = w
            .iter()
            .map(|(sid, _)| vec![Value::Int(sid as i64)])
            .collect();
        return Ok(QueryResult::Rows {
            columns: vec!["sid".into()],
            rows,
        });
    }
    Ok(QueryResult::Subsets {
        columns: headers,
        subsets: w.project(&cols)?,
    })
}

fn group_projection(
    w: &RelationOfSubsets,
    keys: &[ColumnRef],
    items: &[OutputItem],
    having: Option<&ConstraintExpr>,
) -> Result<QueryResult> {
    let schema = w.base().schema();
    let names = schema.display_names();
    let key_idx = keys
        .iter()
        .map(|k| schema.resolve(k))
        .collect::<Result<Vec<_>>>()?;
    enum Slot {
        Key(usize),
        Agg(usize),
    }
    let mut aggs = Vec::new();
    let mut slots = Vec::new();
    let mut columns = vec!["sid".to_string()];
    for item in items {
        match item {
            OutputItem::Sid => {}
            OutputItem::Star => {
                return Err(Error::semantic("SELECT * cannot be combined with GROUP BY"));
            }
            OutputItem::Column(c) => {
                let idx = schema.resolve(c)?;
                let pos = key_idx.iter().position(|&k| k == idx).ok_or_else(|| {
                    Error::semantic(format!(
                        "`{c}` must appear in GROUP BY or inside an aggregate"
                    ))
                })?;
                slots.push(Slot::Key(pos));
                columns.push(names[idx].clone());
            }
            OutputItem::Aggregate(a) => {
                slots.push(Slot::Agg(aggs.len()));
                columns.push(a.to_string());
                aggs.push(a.clone());
            }
        }
    }
    let mut rows = Vec::new();
    for g in w.group_by(keys, &aggs, having)? {
        for row in g.groups {
            let mut out = vec![Value::Int(g.sid as i64)];
            for s in &slots {
                out.push(match s {
                    Slot::Key(k) => row.key[*k].clone(),
                    Slot::Agg(a) => row.aggregates[*a].clone(),
                });
            }
            rows.push(out);
        }
    }
    Ok(QueryResult::Rows { columns, rows })
}
