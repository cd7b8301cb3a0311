use std::collections::BTreeSet;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::relation::{
    AggArg, AggFn, AggregateTerm, CmpOp, ColumnRef, ConstraintExpr, Operand, Relation, Value,
};

/// A conjunct relating attributes of two or more sources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinAtom {
    pub cond: ConstraintExpr,
    pub sources: Vec<String>,
}

/// Subset size bounds implied by literal `count(..)` conjuncts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CardinalityBounds {
    pub lo: i64,
    pub hi: Option<i64>,
}

/// Conjuncts of a query condition sorted by where they can be applied.
/// Keys are source names as written in the FROM list; every column
/// reference is qualified with its owning source.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintClassification {
    /// Conditions on single tuples, applied before subsets are formed.
    pub per_tuple: IndexMap<String, ConstraintExpr>,
    /// Aggregate conditions on the subsets of a declared source.
    pub per_subset: IndexMap<String, ConstraintExpr>,
    pub join_atoms: Vec<JoinAtom>,
    /// Derived from the `count` atoms also present in `per_subset`.
    pub cardinality: IndexMap<String, CardinalityBounds>,
}

impl ConstraintClassification {
    pub fn per_tuple(&self, source: &str) -> ConstraintExpr {
        self.per_tuple
            .get(source)
            .cloned()
            .unwrap_or(ConstraintExpr::True)
    }

    pub fn per_subset(&self, source: &str) -> ConstraintExpr {
        self.per_subset
            .get(source)
            .cloned()
            .unwrap_or(ConstraintExpr::True)
    }
}

/// A FROM-list entry: the relation and, if declared in WITH SUBSETS, the
/// name of its subset identifier.
#[derive(Debug, Clone, Copy)]
pub struct Source<'a> {
    pub relation: &'a Relation,
    pub sid: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Bucket {
    Tuple(usize),
    Subset(usize),
    Join(BTreeSet<usize>),
}

/// Routes each top-level conjunct of `cond` to exactly one bucket.
pub fn classify_constraints(
    cond: &ConstraintExpr,
    sources: &[Source<'_>],
) -> Result<ConstraintClassification> {
    if sources.is_empty() {
        return Err(Error::semantic("a query needs at least one source"));
    }
    let mut out = ConstraintClassification::default();
    for conjunct in cond.conjuncts() {
        let mut bucket: Option<Bucket> = None;
        for (l, op, r) in conjunct.atoms() {
            let b = atom_bucket(l, op, r, sources)?;
            bucket = Some(match bucket {
                None => b,
                Some(prev) => merge(prev, b)
                    .ok_or_else(|| Error::CrossBucketDisjunction(conjunct.to_string()))?,
            });
        }
        let qualified = qualify(conjunct, sources)?;
        match bucket.unwrap_or(Bucket::Tuple(0)) {
            Bucket::Tuple(i) => push(&mut out.per_tuple, name(sources, i), qualified),
            Bucket::Subset(i) => {
                if let Some((op, v)) = count_atom(conjunct) {
                    let b = out.cardinality.entry(name(sources, i)).or_default();
                    tighten(b, op, v);
                }
                push(&mut out.per_subset, name(sources, i), qualified)
            }
            Bucket::Join(set) => out.join_atoms.push(JoinAtom {
                cond: qualified,
                sources: set.into_iter().map(|i| name(sources, i)).collect(),
            }),
        }
    }
    Ok(out)
}

fn name(sources: &[Source<'_>], i: usize) -> String {
    sources[i].relation.name().to_string()
}

fn push(map: &mut IndexMap<String, ConstraintExpr>, key: String, cond: ConstraintExpr) {
    let slot = map.entry(key).or_insert(ConstraintExpr::True);
    *slot = ConstraintExpr::all([std::mem::replace(slot, ConstraintExpr::True), cond]);
}

fn merge(a: Bucket, b: Bucket) -> Option<Bucket> {
    use Bucket::*;
    match (a, b) {
        (x, y) if x == y => Some(x),
        (Subset(_), _) | (_, Subset(_)) => None,
        (Tuple(i), Tuple(j)) => Some(Join([i, j].into())),
        (Tuple(i), Join(mut s)) | (Join(mut s), Tuple(i)) => {
            s.insert(i);
            Some(Join(s))
        }
        (Join(mut s), Join(t)) => {
            s.extend(t);
            Some(Join(s))
        }
    }
}

fn atom_bucket(l: &Operand, op: CmpOp, r: &Operand, sources: &[Source<'_>]) -> Result<Bucket> {
    let mut columns = BTreeSet::new();
    let mut aggregates = BTreeSet::new();
    for o in [l, r] {
        match o {
            Operand::Literal(_) => {}
            Operand::Column(c) => {
                columns.insert(owner(c, sources)?);
            }
            Operand::Aggregate(a) => {
                aggregates.insert(aggregate_owner(a, sources)?);
            }
        }
    }
    let atom = || format!("{l} {} {r}", op.symbol());
    if !aggregates.is_empty() {
        if !columns.is_empty() {
            return Err(Error::semantic(format!(
                "`{}` compares an aggregate with a per-tuple attribute",
                atom()
            )));
        }
        if aggregates.len() > 1 {
            return Err(Error::semantic(format!(
                "`{}` mixes aggregates of different sources",
                atom()
            )));
        }
        let i = *aggregates.first().unwrap();
        if sources[i].sid.is_none() {
            return Err(Error::semantic(format!(
                "`{}` aggregates over `{}`, which is not declared in WITH SUBSETS",
                atom(),
                sources[i].relation.name()
            )));
        }
        return Ok(Bucket::Subset(i));
    }
    Ok(match columns.len() {
        0 => Bucket::Tuple(0),
        1 => Bucket::Tuple(*columns.first().unwrap()),
        _ => Bucket::Join(columns),
    })
}

/// Index of the single source that owns `c`.
pub(crate) fn owner(c: &ColumnRef, sources: &[Source<'_>]) -> Result<usize> {
    let mut found = None;
    for (i, s) in sources.iter().enumerate() {
        let schema = s.relation.schema();
        let hit = match &c.table {
            Some(t) => t.eq_ignore_ascii_case(s.relation.name()) && schema.contains(c),
            None => match schema.resolve(c) {
                Ok(_) => true,
                Err(Error::UnknownAttribute(_)) => false,
                Err(e) => return Err(e),
            },
        };
        if hit {
            if found.is_some() {
                return Err(Error::AmbiguousAttribute(c.to_string()));
            }
            found = Some(i);
        }
    }
    found.ok_or_else(|| Error::UnknownAttribute(c.to_string()))
}

fn sid_owner(sid: &str, sources: &[Source<'_>]) -> Result<usize> {
    let mut hits = sources
        .iter()
        .enumerate()
        .filter(|(_, s)| s.sid.is_some_and(|x| x.eq_ignore_ascii_case(sid)));
    match (hits.next(), hits.next()) {
        (Some((i, _)), None) => Ok(i),
        (None, _) => Err(Error::UnknownAttribute(sid.to_string())),
        (Some(_), Some(_)) => Err(Error::AmbiguousAttribute(format!(
            "{sid} (several sources share this subset identifier)"
        ))),
    }
}

fn aggregate_owner(a: &AggregateTerm, sources: &[Source<'_>]) -> Result<usize> {
    match &a.arg {
        AggArg::Sid(s) => sid_owner(s, sources),
        AggArg::Column(c) => owner(c, sources),
    }
}

fn qualify(e: &ConstraintExpr, sources: &[Source<'_>]) -> Result<ConstraintExpr> {
    let mut err = None;
    let mut q = |c: &ColumnRef| match owner(c, sources) {
        Ok(i) => ColumnRef::qualified(sources[i].relation.name(), c.name.clone()),
        Err(e) => {
            err.get_or_insert(e);
            c.clone()
        }
    };
    let out = e.map_operands(&mut |o| match o {
        Operand::Column(c) => Operand::Column(q(c)),
        Operand::Aggregate(AggregateTerm {
            func,
            arg: AggArg::Column(c),
        }) => Operand::Aggregate(AggregateTerm {
            func: *func,
            arg: AggArg::Column(q(c)),
        }),
        other => other.clone(),
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// `count(..) op int` in either orientation, normalized to count on the left.
fn count_atom(e: &ConstraintExpr) -> Option<(CmpOp, i64)> {
    let ConstraintExpr::Compare { left, op, right } = e else {
        return None;
    };
    match (left, right) {
        (Operand::Aggregate(a), Operand::Literal(Value::Int(v))) if a.func == AggFn::Count => {
            Some((*op, *v))
        }
        (Operand::Literal(Value::Int(v)), Operand::Aggregate(a)) if a.func == AggFn::Count => {
            Some((op.flip(), *v))
        }
        _ => None,
    }
}

fn tighten(b: &mut CardinalityBounds, op: CmpOp, v: i64) {
    let mut lower = |x: i64| b.lo = b.lo.max(x);
    match op {
        CmpOp::Ge => lower(v),
        CmpOp::Gt => lower(v.saturating_add(1)),
        CmpOp::Eq => lower(v),
        _ => {}
    }
    let upper = match op {
        CmpOp::Le | CmpOp::Eq => Some(v),
        CmpOp::Lt => Some(v.saturating_sub(1)),
        _ => None,
    };
    if let Some(u) = upper {
        b.hi = Some(b.hi.map_or(u, |h| h.min(u)));
    }
}
