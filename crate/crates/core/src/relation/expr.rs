//! Boolean constraint expressions.
//!
//! A [`ConstraintExpr`] is the unresolved form produced by the parser or by
//! hand. Its atoms are comparisons whose operands are columns, literals or
//! aggregate terms. Binding it against a [`Schema`] yields a [`BoundExpr`]
//! with column indices and kind checks already done; evaluation then only
//! needs an [`EvalContext`] that can supply column values (one tuple) or
//! aggregate values (a subset or a group).

use std::cmp::Ordering;
use std::fmt;

use super::schema::Schema;
use super::tuple::Tuple;
use super::value::{Kind, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub table: Option<String>,
    pub name: String,
}

impl ColumnRef {
    pub fn new(name: impl Into<String>) -> Self {
        ColumnRef {
            table: None,
            name: name.into(),
        }
    }

    pub fn qualified(table: impl Into<String>, name: impl Into<String>) -> Self {
        ColumnRef {
            table: Some(table.into()),
            name: name.into(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.table {
            Some(t) => write!(f, "{t}.{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFn {
    Sum,
    Count,
    Min,
    Max,
    Avg,
}

impl AggFn {
    pub fn from_name(name: &str) -> Option<AggFn> {
        Some(match name.to_ascii_lowercase().as_str() {
            "sum" => AggFn::Sum,
            "count" => AggFn::Count,
            "min" => AggFn::Min,
            "max" => AggFn::Max,
            "avg" => AggFn::Avg,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            AggFn::Sum => "sum",
            AggFn::Count => "count",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Avg => "avg",
        }
    }
}

/// Argument of an aggregate: a column, or the subset-identifier
/// pseudo-attribute (only meaningful for `count`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AggArg {
    Sid(String),
    Column(ColumnRef),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AggregateTerm {
    pub func: AggFn,
    pub arg: AggArg,
}

impl AggregateTerm {
    pub fn new(func: AggFn, column: &str) -> Self {
        AggregateTerm {
            func,
            arg: AggArg::Column(ColumnRef::new(column)),
        }
    }

    pub fn count_sid(sid: &str) -> Self {
        AggregateTerm {
            func: AggFn::Count,
            arg: AggArg::Sid(sid.to_string()),
        }
    }

    pub fn column(&self) -> Option<&ColumnRef> {
        match &self.arg {
            AggArg::Column(c) => Some(c),
            AggArg::Sid(_) => None,
        }
    }

    pub fn bind(&self, schema: &Schema) -> Result<BoundAggregate> {
        let column = match &self.arg {
            AggArg::Sid(s) => {
                if self.func != AggFn::Count {
                    return Err(Error::KindMismatch(format!(
                        "{}({s}) is not defined; only count accepts a subset identifier",
                        self.func.name()
                    )));
                }
                None
            }
            AggArg::Column(c) => {
                let idx = schema.resolve(c)?;
                let kind = schema.attribute(idx).kind;
                if self.func != AggFn::Count && !kind.is_numeric() {
                    return Err(Error::KindMismatch(format!(
                        "{} requires a numeric attribute, `{c}` is {kind}",
                        self.func.name()
                    )));
                }
                Some(idx)
            }
        };
        let kind = match (self.func, column) {
            (AggFn::Count, _) => Kind::Int,
            (AggFn::Avg, _) => Kind::Dec,
            (_, Some(idx)) => schema.attribute(idx).kind,
            (_, None) => unreachable!("only count takes sid"),
        };
        Ok(BoundAggregate {
            func: self.func,
            column,
            kind,
        })
    }
}

impl fmt::Display for AggregateTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.arg {
            AggArg::Sid(s) => write!(f, "{}({s})", self.func.name()),
            AggArg::Column(c) => write!(f, "{}({c})", self.func.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }

    /// The operator that gives the same answer with operands swapped.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Column(ColumnRef),
    Literal(Value),
    Aggregate(AggregateTerm),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Column(c) => write!(f, "{c}"),
            Operand::Aggregate(a) => write!(f, "{a}"),
            Operand::Literal(Value::Str(s)) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Operand::Literal(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstraintExpr {
    True,
    Compare {
        left: Operand,
        op: CmpOp,
        right: Operand,
    },
    And(Vec<ConstraintExpr>),
    Or(Vec<ConstraintExpr>),
    Not(Box<ConstraintExpr>),
}

impl ConstraintExpr {
    pub fn compare(left: Operand, op: CmpOp, right: Operand) -> Self {
        ConstraintExpr::Compare { left, op, right }
    }

    /// `column op literal`
    pub fn column(name: &str, op: CmpOp, value: impl Into<Value>) -> Self {
        ConstraintExpr::compare(
            Operand::Column(ColumnRef::new(name)),
            op,
            Operand::Literal(value.into()),
        )
    }

    /// `term op literal`
    pub fn aggregate(term: AggregateTerm, op: CmpOp, value: impl Into<Value>) -> Self {
        ConstraintExpr::compare(Operand::Aggregate(term), op, Operand::Literal(value.into()))
    }

    /// Conjunction that drops `True` parts and collapses trivial cases.
    pub fn all(parts: impl IntoIterator<Item = ConstraintExpr>) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                ConstraintExpr::True => {}
                ConstraintExpr::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => ConstraintExpr::True,
            1 => flat.pop().unwrap(),
            _ => ConstraintExpr::And(flat),
        }
    }

    /// Top-level conjuncts, with nested `And`s flattened and `True` removed.
    pub fn conjuncts(&self) -> Vec<&ConstraintExpr> {
        fn walk<'a>(e: &'a ConstraintExpr, out: &mut Vec<&'a ConstraintExpr>) {
            match e {
                ConstraintExpr::True => {}
                ConstraintExpr::And(parts) => parts.iter().for_each(|p| walk(p, out)),
                other => out.push(other),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn is_true(&self) -> bool {
        self.conjuncts().is_empty()
    }

    /// Every comparison atom, in textual order.
    pub fn atoms(&self) -> Vec<(&Operand, CmpOp, &Operand)> {
        fn walk<'a>(e: &'a ConstraintExpr, out: &mut Vec<(&'a Operand, CmpOp, &'a Operand)>) {
            match e {
                ConstraintExpr::True => {}
                ConstraintExpr::Compare { left, op, right } => out.push((left, *op, right)),
                ConstraintExpr::And(p) | ConstraintExpr::Or(p) => {
                    p.iter().for_each(|x| walk(x, out))
                }
                ConstraintExpr::Not(x) => walk(x, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn has_aggregate(&self) -> bool {
        self.atoms().iter().any(|(l, _, r)| {
            matches!(l, Operand::Aggregate(_)) || matches!(r, Operand::Aggregate(_))
        })
    }

    pub fn has_column(&self) -> bool {
        self.atoms()
            .iter()
            .any(|(l, _, r)| matches!(l, Operand::Column(_)) || matches!(r, Operand::Column(_)))
    }

    /// Applies `f` to every operand, rebuilding the tree.
    pub fn map_operands(&self, f: &mut impl FnMut(&Operand) -> Operand) -> ConstraintExpr {
        match self {
            ConstraintExpr::True => ConstraintExpr::True,
            ConstraintExpr::Compare { left, op, right } => ConstraintExpr::Compare {
                left: f(left),
                op: *op,
                right: f(right),
            },
            ConstraintExpr::And(p) => {
                ConstraintExpr::And(p.iter().map(|x| x.map_operands(f)).collect())
            }
            ConstraintExpr::Or(p) => {
                ConstraintExpr::Or(p.iter().map(|x| x.map_operands(f)).collect())
            }
            ConstraintExpr::Not(x) => ConstraintExpr::Not(Box::new(x.map_operands(f))),
        }
    }

    pub fn bind(&self, schema: &Schema, scope: BindScope<'_>) -> Result<BoundExpr> {
        Ok(match self {
            ConstraintExpr::True => BoundExpr::True,
            ConstraintExpr::Compare { left, op, right } => {
                let (l, lk) = bind_operand(left, schema, scope)?;
                let (r, rk) = bind_operand(right, schema, scope)?;
                if !lk.comparable_with(rk) {
                    return Err(Error::KindMismatch(format!(
                        "cannot compare {left} ({lk}) with {right} ({rk})"
                    )));
                }
                if lk == Kind::Str && op.is_ordering() {
                    return Err(Error::KindMismatch(format!(
                        "text only supports = and != (in `{self}`)"
                    )));
                }
                BoundExpr::Compare(l, *op, r)
            }
            ConstraintExpr::And(p) => BoundExpr::And(
                p.iter()
                    .map(|x| x.bind(schema, scope))
                    .collect::<Result<_>>()?,
            ),
            ConstraintExpr::Or(p) => BoundExpr::Or(
                p.iter()
                    .map(|x| x.bind(schema, scope))
                    .collect::<Result<_>>()?,
            ),
            ConstraintExpr::Not(x) => BoundExpr::Not(Box::new(x.bind(schema, scope)?)),
        })
    }
}

fn bind_operand(
    op: &Operand,
    schema: &Schema,
    scope: BindScope<'_>,
) -> Result<(BoundOperand, Kind)> {
    match op {
        Operand::Literal(v) => Ok((BoundOperand::Literal(v.clone()), v.kind())),
        Operand::Column(c) => {
            let idx = schema.resolve(c)?;
            match scope {
                BindScope::Subset => {
                    return Err(Error::semantic(format!(
                        "per-tuple reference `{c}` in an aggregate condition"
                    )))
                }
                BindScope::Group(keys) if !keys.contains(&idx) => {
                    return Err(Error::semantic(format!(
                        "`{c}` in HAVING must be a grouping attribute"
                    )))
                }
                _ => {}
            }
            Ok((BoundOperand::Column(idx), schema.attribute(idx).kind))
        }
        Operand::Aggregate(a) => {
            if scope == BindScope::Tuple {
                return Err(Error::semantic(format!(
                    "aggregate `{a}` in a per-tuple condition"
                )));
            }
            let b = a.bind(schema)?;
            let kind = b.kind;
            Ok((BoundOperand::Aggregate(b), kind))
        }
    }
}

impl fmt::Display for ConstraintExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &ConstraintExpr, parent_prec: u8) -> fmt::Result {
            let prec = match e {
                ConstraintExpr::Or(_) => 1,
                ConstraintExpr::And(_) => 2,
                _ => 3,
            };
            // Same-precedence children need parens too, or they would be
            // flattened into the parent on reparse.
            if prec <= parent_prec {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            ConstraintExpr::True => f.write_str("1 = 1"),
            ConstraintExpr::Compare { left, op, right } => {
                write!(f, "{left} {} {right}", op.symbol())
            }
            ConstraintExpr::And(parts) | ConstraintExpr::Or(parts) => {
                let (word, prec) = if matches!(self, ConstraintExpr::And(_)) {
                    (" AND ", 2)
                } else {
                    (" OR ", 1)
                };
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(word)?;
                    }
                    child(f, p, prec)?;
                }
                Ok(())
            }
            ConstraintExpr::Not(x) => {
                f.write_str("NOT ")?;
                match **x {
                    ConstraintExpr::Compare { .. } | ConstraintExpr::Not(_) => write!(f, "{x}"),
                    _ => write!(f, "({x})"),
                }
            }
        }
    }
}

/// What kinds of operands a bound expression may contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindScope<'a> {
    /// Per-tuple condition: columns and literals only.
    Tuple,
    /// Whole-subset condition: aggregates and literals only.
    Subset,
    /// HAVING: aggregates, plus columns that are grouping keys.
    Group(&'a [usize]),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundAggregate {
    pub func: AggFn,
    /// `None` stands for the subset identifier (`count(sid)`).
    pub column: Option<usize>,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundOperand {
    Column(usize),
    Literal(Value),
    Aggregate(BoundAggregate),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundExpr {
    True,
    Compare(BoundOperand, CmpOp, BoundOperand),
    And(Vec<BoundExpr>),
    Or(Vec<BoundExpr>),
    Not(Box<BoundExpr>),
}

pub trait EvalContext {
    fn column(&self, idx: usize) -> Result<Value>;
    fn aggregate(&self, agg: &BoundAggregate) -> Result<Value>;
}

impl BoundExpr {
    pub fn eval(&self, ctx: &dyn EvalContext) -> Result<bool> {
        match self {
            BoundExpr::True => Ok(true),
            BoundExpr::Compare(l, op, r) => {
                let lv = operand_value(l, ctx)?;
                let rv = operand_value(r, ctx)?;
                Ok(op.holds(lv.compare(&rv)?))
            }
            BoundExpr::And(p) => {
                for x in p {
                    if !x.eval(ctx)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            BoundExpr::Or(p) => {
                for x in p {
                    if x.eval(ctx)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            BoundExpr::Not(x) => Ok(!x.eval(ctx)?),
        }
    }

    pub fn eval_tuple(&self, tuple: &Tuple) -> Result<bool> {
        self.eval(&TupleContext(tuple))
    }
}

fn operand_value(op: &BoundOperand, ctx: &dyn EvalContext) -> Result<Value> {
    match op {
        BoundOperand::Literal(v) => Ok(v.clone()),
        BoundOperand::Column(i) => ctx.column(*i),
        BoundOperand::Aggregate(a) => ctx.aggregate(a),
    }
}

/// Evaluation against a single tuple.
pub struct TupleContext<'a>(pub &'a Tuple);

impl EvalContext for TupleContext<'_> {
    fn column(&self, idx: usize) -> Result<Value> {
        Ok(self.0.values[idx].clone())
    }

    fn aggregate(&self, _agg: &BoundAggregate) -> Result<Value> {
        Err(Error::semantic(
            "aggregate evaluated against a single tuple",
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::new(
            "Item",
            [
                ("Weight", Kind::Int),
                ("Type", Kind::Str),
                ("Rating", Kind::Dec),
            ],
        )
        .unwrap()
    }

    #[test]
    fn kind_checks_at_bind_time() {
        let s = schema();
        let bad = ConstraintExpr::column("Type", CmpOp::Gt, "x");
        assert!(matches!(
            bad.bind(&s, BindScope::Tuple),
            Err(Error::KindMismatch(_))
        ));
        let bad = ConstraintExpr::column("Weight", CmpOp::Eq, "x");
        assert!(matches!(
            bad.bind(&s, BindScope::Tuple),
            Err(Error::KindMismatch(_))
        ));
        let bad = ConstraintExpr::aggregate(AggregateTerm::new(AggFn::Sum, "Type"), CmpOp::Gt, 1);
        assert!(matches!(
            bad.bind(&s, BindScope::Subset),
            Err(Error::KindMismatch(_))
        ));
        let ok = ConstraintExpr::aggregate(AggregateTerm::new(AggFn::Count, "Type"), CmpOp::Gt, 1);
        assert!(ok.bind(&s, BindScope::Subset).is_ok());
        let sid_sum = ConstraintExpr::aggregate(
            AggregateTerm {
                func: AggFn::Sum,
                arg: AggArg::Sid("sid".into()),
            },
            CmpOp::Gt,
            1,
        );
        assert!(sid_sum.bind(&s, BindScope::Subset).is_err());
    }

    #[test]
    fn scope_checks() {
        let s = schema();
        let agg = ConstraintExpr::aggregate(AggregateTerm::new(AggFn::Sum, "Weight"), CmpOp::Gt, 1);
        assert!(agg.bind(&s, BindScope::Tuple).is_err());
        let col = ConstraintExpr::column("Weight", CmpOp::Gt, 1);
        assert!(col.bind(&s, BindScope::Subset).is_err());
        assert!(col.bind(&s, BindScope::Group(&[0])).is_ok());
        assert!(col.bind(&s, BindScope::Group(&[1])).is_err());
    }

    #[test]
    fn tuple_eval_with_promotion() {
        let s = schema();
        let t = Tuple {
            rowid: 0,
            values: vec![Value::Int(60), Value::str("Eatable"), Value::dec("4.5")],
        };
        let e = ConstraintExpr::all([
            ConstraintExpr::column("Rating", CmpOp::Gt, 4),
            ConstraintExpr::column("Type", CmpOp::Eq, "Eatable"),
        ]);
        assert!(e
            .bind(&s, BindScope::Tuple)
            .unwrap()
            .eval_tuple(&t)
            .unwrap());
        let e = ConstraintExpr::Not(Box::new(ConstraintExpr::column("Weight", CmpOp::Ge, 60)));
        assert!(!e
            .bind(&s, BindScope::Tuple)
            .unwrap()
            .eval_tuple(&t)
            .unwrap());
    }

    #[test]
    fn conjunct_flattening() {
        let a = ConstraintExpr::column("a", CmpOp::Eq, 1);
        let b = ConstraintExpr::column("b", CmpOp::Eq, 2);
        let e = ConstraintExpr::all([
            ConstraintExpr::True,
            ConstraintExpr::And(vec![a.clone(), ConstraintExpr::True]),
            b.clone(),
        ]);
        assert_eq!(e.conjuncts(), vec![&a, &b]);
        assert!(ConstraintExpr::all([]).is_true());
    }

    #[test]
    fn display_parenthesizes_nested_same_precedence() {
        let a = ConstraintExpr::column("a", CmpOp::Eq, 1);
        let b = ConstraintExpr::column("b", CmpOp::Lt, Value::dec("2.5"));
        let c = ConstraintExpr::column("c", CmpOp::Eq, "x\"y");
        let e = ConstraintExpr::And(vec![
            a.clone(),
            ConstraintExpr::And(vec![b.clone(), c.clone()]),
            ConstraintExpr::Or(vec![a.clone(), ConstraintExpr::Not(Box::new(b.clone()))]),
        ]);
        assert_eq!(
            e.to_string(),
            "a = 1 AND (b < 2.5 AND c = \"x\"\"y\") AND (a = 1 OR NOT b < 2.5)"
        );
    }
}
