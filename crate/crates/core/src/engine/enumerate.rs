//! Depth-first subset enumeration with bound-based pruning.
//!
//! Each search node is one candidate subset; children extend it with a row
//! of larger index. For every top-level aggregate conjunct of the form
//! `agg(col) op literal` the search tracks the range of values the
//! aggregate can still reach in the subtree (using suffix sums, suffix
//! extrema and the number of remaining rows) and skips the child when no
//! value in that range satisfies the comparison. Conjuncts it does not
//! understand (avg, disjunctions, negations) prune nothing; the full
//! condition is always checked on every node before it is emitted.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::omega::RelationOfSubsets;
use crate::relation::{
    AggFn, BindScope, BoundExpr, BoundOperand, CmpOp, ConstraintExpr, Decimal, Relation, Tuple,
};
use crate::subset::{GroupContext, Subset};

use super::Limits;

/// Work counters of one enumeration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnumStats {
    /// Search nodes entered, including the empty root.
    pub nodes: u64,
    pub results: u64,
}

#[derive(Debug, Clone, Copy)]
enum Tracked {
    Sum(usize),
    Count,
    Min(usize),
    Max(usize),
}

#[derive(Debug)]
struct Bound {
    tracked: Tracked,
    op: CmpOp,
    limit: Decimal,
}

/// Per-column suffix summaries over rows `i..n`.
#[derive(Debug)]
struct Column {
    values: Vec<Decimal>,
    neg_suffix: Vec<Decimal>,
    pos_suffix: Vec<Decimal>,
    min_suffix: Vec<Option<Decimal>>,
    max_suffix: Vec<Option<Decimal>>,
    nonnegative: bool,
}

impl Column {
    fn new(tuples: &[Tuple], col: usize) -> Result<Self> {
        let values: Vec<Decimal> = tuples
            .iter()
            .map(|t| {
                t.values[col]
                    .as_decimal()
                    .ok_or(Error::KindMismatch("non-numeric aggregate".into()))
            })
            .collect::<Result<_>>()?;
        let n = values.len();
        let mut c = Column {
            neg_suffix: vec![Decimal::ZERO; n + 1],
            pos_suffix: vec![Decimal::ZERO; n + 1],
            min_suffix: vec![None; n + 1],
            max_suffix: vec![None; n + 1],
            nonnegative: values.iter().all(|v| !v.is_negative()),
            values,
        };
        for i in (0..n).rev() {
            let v = c.values[i];
            let (neg, pos) = if v.is_negative() {
                (v, Decimal::ZERO)
            } else {
                (Decimal::ZERO, v)
            };
            c.neg_suffix[i] = c.neg_suffix[i + 1].checked_add(neg)?;
            c.pos_suffix[i] = c.pos_suffix[i + 1].checked_add(pos)?;
            c.min_suffix[i] = Some(c.min_suffix[i + 1].map_or(v, |m| m.min(v)));
            c.max_suffix[i] = Some(c.max_suffix[i + 1].map_or(v, |m| m.max(v)));
        }
        Ok(c)
    }
}

/// Running aggregate of one tracked bound at a node.
#[derive(Debug, Clone, Copy)]
enum Acc {
    Sum(Decimal),
    Count(u64),
    Extreme(Option<Decimal>),
}

/// Can some value in `[lo, hi]` satisfy `x op limit`?
fn may_hold(op: CmpOp, lo: Decimal, hi: Decimal, limit: Decimal) -> bool {
    match op {
        CmpOp::Lt => lo < limit,
        CmpOp::Le => lo <= limit,
        CmpOp::Gt => hi > limit,
        CmpOp::Ge => hi >= limit,
        CmpOp::Eq => lo <= limit && limit <= hi,
        CmpOp::Ne => !(lo == hi && lo == limit),
    }
}

struct Search<'a> {
    base: &'a Arc<Relation>,
    tuples: &'a [Tuple],
    cond: &'a BoundExpr,
    bounds: Vec<Bound>,
    columns: Vec<Option<Column>>,
    limits: &'a Limits,
    stats: EnumStats,
    chosen: Vec<usize>,
    out: Vec<Subset>,
}

impl Search<'_> {
    fn column(&self, b: &Bound) -> Option<&Column> {
        match b.tracked {
            Tracked::Sum(c) | Tracked::Min(c) | Tracked::Max(c) => self.columns[c].as_ref(),
            Tracked::Count => None,
        }
    }

    fn extend(&self, accs: &[Acc], row: usize) -> Result<Vec<Acc>> {
        accs.iter()
            .zip(&self.bounds)
            .map(|(acc, b)| {
                let v = self.column(b).map(|c| c.values[row]);
                Ok(match (*acc, b.tracked) {
                    (Acc::Sum(s), _) => Acc::Sum(s.checked_add(v.unwrap())?),
                    (Acc::Count(k), _) => Acc::Count(k + 1),
                    (Acc::Extreme(m), Tracked::Min(_)) => {
                        Acc::Extreme(Some(m.map_or(v.unwrap(), |m| m.min(v.unwrap()))))
                    }
                    (Acc::Extreme(m), _) => {
                        Acc::Extreme(Some(m.map_or(v.unwrap(), |m| m.max(v.unwrap()))))
                    }
                })
            })
            .collect()
    }

    /// Whether the subtree rooted at a node whose last chosen row is
    /// `last` can still satisfy every tracked bound.
    fn feasible(&self, accs: &[Acc], last: usize) -> Result<bool> {
        let rest = last + 1;
        let remaining = (self.tuples.len() - rest) as i64;
        for (acc, b) in accs.iter().zip(&self.bounds) {
            let (lo, hi) = match (*acc, b.tracked) {
                (Acc::Sum(s), _) => {
                    let c = self.column(b).unwrap();
                    (
                        s.checked_add(c.neg_suffix[rest])?,
                        s.checked_add(c.pos_suffix[rest])?,
                    )
                }
                (Acc::Count(k), _) => (
                    Decimal::from_int(k as i64),
                    Decimal::from_int(k as i64 + remaining),
                ),
                (Acc::Extreme(Some(m)), Tracked::Min(_)) => {
                    let tail = self.column(b).unwrap().min_suffix[rest];
                    (tail.map_or(m, |t| t.min(m)), m)
                }
                (Acc::Extreme(Some(m)), _) => {
                    let tail = self.column(b).unwrap().max_suffix[rest];
                    (m, tail.map_or(m, |t| t.max(m)))
                }
                (Acc::Extreme(None), _) => continue,
            };
            if !may_hold(b.op, lo, hi, b.limit) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Cheap necessary condition for any child of a node to exist: every
    /// upper-bounded sum over a nonnegative column must leave room for at
    /// least the smallest remaining value.
    fn has_room(&self, accs: &[Acc], from: usize) -> bool {
        accs.iter()
            .zip(&self.bounds)
            .all(|(acc, b)| match (*acc, b.tracked, b.op) {
                (Acc::Sum(s), Tracked::Sum(_), CmpOp::Lt | CmpOp::Le) => {
                    let c = self.column(b).unwrap();
                    if !c.nonnegative {
                        return true;
                    }
                    match c.min_suffix[from].and_then(|m| s.checked_add(m).ok()) {
                        Some(next) => may_hold(b.op, next, next, b.limit),
                        None => false,
                    }
                }
                (Acc::Count(k), _, CmpOp::Lt | CmpOp::Le) => may_hold(
                    b.op,
                    Decimal::from_int(k as i64 + 1),
                    Decimal::from_int(k as i64 + 1),
                    b.limit,
                ),
                _ => true,
            })
    }

    fn visit(&mut self, accs: &[Acc], next: usize) -> Result<()> {
        self.stats.nodes += 1;
        if self.stats.nodes > self.limits.max_generated {
            return Err(Error::LimitExceeded {
                limit: "max_generated",
                value: self.limits.max_generated,
            });
        }
        if !self.chosen.is_empty() {
            let members: Vec<&Tuple> = self.chosen.iter().map(|&i| &self.tuples[i]).collect();
            if self.cond.eval(&GroupContext { tuples: &members })? {
                self.stats.results += 1;
                if self.stats.results > self.limits.max_results {
                    return Err(Error::LimitExceeded {
                        limit: "max_results",
                        value: self.limits.max_results,
                    });
                }
                let rowids = members.iter().map(|t| t.rowid).collect();
                self.out
                    .push(Subset::from_sorted(self.base.clone(), rowids));
            }
        }
        if next >= self.tuples.len() || !self.has_room(accs, next) {
            return Ok(());
        }
        for j in next..self.tuples.len() {
            let child = self.extend(accs, j)?;
            if self.feasible(&child, j)? {
                self.chosen.push(j);
                self.visit(&child, j + 1)?;
                self.chosen.pop();
            }
        }
        Ok(())
    }
}

fn literal_bound(e: &BoundExpr) -> Option<Bound> {
    let BoundExpr::Compare(l, op, r) = e else {
        return None;
    };
    let (agg, op, lit) = match (l, r) {
        (BoundOperand::Aggregate(a), BoundOperand::Literal(v)) => (a, *op, v),
        (BoundOperand::Literal(v), BoundOperand::Aggregate(a)) => (a, op.flip(), v),
        _ => return None,
    };
    let tracked = match (agg.func, agg.column) {
        (AggFn::Count, _) => Tracked::Count,
        (AggFn::Sum, Some(c)) => Tracked::Sum(c),
        (AggFn::Min, Some(c)) => Tracked::Min(c),
        (AggFn::Max, Some(c)) => Tracked::Max(c),
        _ => return None,
    };
    Some(Bound {
        tracked,
        op,
        limit: lit.as_decimal()?,
    })
}

fn top_conjuncts(e: &BoundExpr) -> Vec<&BoundExpr> {
    match e {
        BoundExpr::And(parts) => parts.iter().flat_map(top_conjuncts).collect(),
        other => vec![other],
    }
}

/// Every nonempty subset of `r` satisfying the aggregate condition `cond`,
/// without materializing the power set.
pub fn enumerate_subsets(
    r: &Arc<Relation>,
    cond: &ConstraintExpr,
    limits: &Limits,
) -> Result<(RelationOfSubsets, EnumStats)> {
    let bound = cond.bind(r.schema(), BindScope::Subset)?;
    let bounds: Vec<Bound> = top_conjuncts(&bound)
        .into_iter()
        .filter_map(literal_bound)
        .collect();
    let mut columns: Vec<Option<Column>> = (0..r.schema().arity()).map(|_| None).collect();
    for b in &bounds {
        if let Tracked::Sum(c) | Tracked::Min(c) | Tracked::Max(c) = b.tracked {
            if columns[c].is_none() {
                columns[c] = Some(Column::new(r.tuples(), c)?);
            }
        }
    }
    let root: Vec<Acc> = bounds
        .iter()
        .map(|b| match b.tracked {
            Tracked::Sum(_) => Acc::Sum(Decimal::ZERO),
            Tracked::Count => Acc::Count(0),
            Tracked::Min(_) | Tracked::Max(_) => Acc::Extreme(None),
        })
        .collect();
    let mut search = Search {
        base: r,
        tuples: r.tuples(),
        cond: &bound,
        bounds,
        columns,
        limits,
        stats: EnumStats::default(),
        chosen: Vec::new(),
        out: Vec::new(),
    };
    search.visit(&root, 0)?;
    let stats = search.stats;
    Ok((RelationOfSubsets::canonical(r.clone(), search.out), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{AggregateTerm, Value};
    use crate::subset::tests::{item, sub};

    fn filtered(kind: &str) -> Arc<Relation> {
        Arc::new(
            item()
                .tuple_select(&ConstraintExpr::column("Type", CmpOp::Eq, kind))
                .unwrap(),
        )
    }

    fn agg(f: AggFn, col: &str, op: CmpOp, v: i64) -> ConstraintExpr {
        ConstraintExpr::aggregate(AggregateTerm::new(f, col), op, v)
    }

    #[test]
    fn query_two() {
        let base = filtered("Non-Eatable");
        let cond = ConstraintExpr::all([
            agg(AggFn::Sum, "Weight", CmpOp::Gt, 200),
            agg(AggFn::Sum, "Weight", CmpOp::Lt, 400),
            agg(AggFn::Sum, "Price", CmpOp::Gt, 150),
        ]);
        let (w, stats) = enumerate_subsets(&base, &cond, &Limits::default()).unwrap();
        let i = item();
        let expected = [
            &[2u64, 9][..],
            &[1, 2, 9],
            &[1, 4, 9],
            &[4, 7, 9],
            &[1, 4, 7, 9],
        ];
        assert_eq!(w.subsets(), expected.map(|l| sub(&i, l)).as_slice());
        assert!(stats.nodes <= 32);
        w.validate().unwrap();
    }

    #[test]
    fn unsatisfiable_upper_bound_prunes_at_root() {
        let base = item();
        let (w, stats) = enumerate_subsets(
            &base,
            &agg(AggFn::Sum, "Weight", CmpOp::Lt, 0),
            &Limits::default(),
        )
        .unwrap();
        assert!(w.is_empty());
        assert!(stats.nodes <= base.len() as u64 + 1);
    }

    #[test]
    fn cardinality_example() {
        let base = filtered("Eatable");
        let cond = ConstraintExpr::all([
            agg(AggFn::Sum, "Weight", CmpOp::Gt, 190),
            ConstraintExpr::aggregate(AggregateTerm::count_sid("sid"), CmpOp::Ge, 4),
            ConstraintExpr::aggregate(AggregateTerm::count_sid("sid"), CmpOp::Le, 5),
        ]);
        let (w, _) = enumerate_subsets(&base, &cond, &Limits::default()).unwrap();
        assert_eq!(
            w.member_lists(),
            vec![vec![2, 4, 5, 7], vec![2, 4, 5, 7, 9]]
        );
    }

    #[test]
    fn true_condition_is_the_power_set() {
        let base = filtered("Non-Eatable");
        let (w, stats) =
            enumerate_subsets(&base, &ConstraintExpr::True, &Limits::default()).unwrap();
        assert_eq!(w, RelationOfSubsets::power_set(base, 20).unwrap());
        assert_eq!(stats.nodes, 32);
    }

    #[test]
    fn min_max_bounds_prune() {
        let base = item();
        // Rows lighter than 100 can never be included.
        let cond = agg(AggFn::Min, "Weight", CmpOp::Ge, 100);
        let (w, stats) = enumerate_subsets(&base, &cond, &Limits::default()).unwrap();
        let oracle = RelationOfSubsets::power_set(base.clone(), 20)
            .unwrap()
            .constraint_filter(&cond)
            .unwrap();
        assert_eq!(w, oracle);
        assert!(stats.nodes <= 32);
        let cond = agg(AggFn::Max, "Price", CmpOp::Le, 20);
        let (w, _) = enumerate_subsets(&base, &cond, &Limits::default()).unwrap();
        assert_eq!(
            w,
            RelationOfSubsets::power_set(base.clone(), 20)
                .unwrap()
                .constraint_filter(&cond)
                .unwrap()
        );
        let cond = agg(AggFn::Min, "Price", CmpOp::Eq, 15);
        let (w, _) = enumerate_subsets(&base, &cond, &Limits::default()).unwrap();
        assert_eq!(
            w,
            RelationOfSubsets::power_set(base, 20)
                .unwrap()
                .constraint_filter(&cond)
                .unwrap()
        );
    }

    #[test]
    fn limits_are_hard_errors() {
        let base = item();
        let tight = Limits {
            max_generated: 100,
            ..Limits::default()
        };
        let err = enumerate_subsets(&base, &ConstraintExpr::True, &tight).unwrap_err();
        assert!(err.to_string().contains("max_generated"));
        let few = Limits {
            max_results: 3,
            ..Limits::default()
        };
        let err = enumerate_subsets(&base, &ConstraintExpr::True, &few).unwrap_err();
        assert!(err.to_string().contains("max_results"));
    }

    #[test]
    fn negative_values_fall_back_safely() {
        let schema =
            crate::relation::Schema::new("T", [("v", crate::relation::Kind::Int)]).unwrap();
        let rows = [5, -3, 4, -1, 2].map(|v| vec![Value::Int(v)]).to_vec();
        let r = Arc::new(Relation::new("T", schema, rows).unwrap());
        for cond in [
            agg(AggFn::Sum, "v", CmpOp::Lt, 1),
            agg(AggFn::Sum, "v", CmpOp::Ge, 6),
            agg(AggFn::Sum, "v", CmpOp::Eq, 0),
        ] {
            let (w, _) = enumerate_subsets(&r, &cond, &Limits::default()).unwrap();
            let oracle = RelationOfSubsets::power_set(r.clone(), 20)
                .unwrap()
                .constraint_filter(&cond)
                .unwrap();
            assert_eq!(w, oracle, "{cond}");
        }
    }
}
