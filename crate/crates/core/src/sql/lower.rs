use std::sync::Arc;

use crate::engine::{
    classify_constraints, Catalog, ConstraintClassification, OutputItem, PlanNode, Source,
};
use crate::error::{Error, Result};
use crate::omega::{CombineMode, Criterion};
use crate::relation::{AggArg, ColumnRef, ConstraintExpr, Operand, Relation};

use super::ast::{Combinator, Query, SelectItem, SelectList, SubsetQuery};

/// Translates a parsed query into a plan over `catalog`. `criterion`
/// decides how MAXIMAL / MINIMAL compare subsets.
pub fn lower(query: &Query, catalog: &Catalog, criterion: Criterion) -> Result<PlanNode> {
    let l = Lowering { catalog, criterion };
    match query {
        Query::Subset(q) => l.subset_query(q),
        Query::Compound { .. } => {
            let plan = l.compound(query)?;
            let head = leftmost(query);
            let sources = l.sources(head)?;
            l.output(plan, head, &sources)
        }
    }
}

struct Lowering<'a> {
    catalog: &'a Catalog,
    criterion: Criterion,
}

struct Sources {
    relations: Vec<Arc<Relation>>,
    sids: Vec<Option<String>>,
}

impl Sources {
    fn view(&self) -> Vec<Source<'_>> {
        self.relations
            .iter()
            .zip(&self.sids)
            .map(|(r, s)| Source {
                relation: r,
                sid: s.as_deref(),
            })
            .collect()
    }

    fn is_sid(&self, name: &str) -> bool {
        self.sids
            .iter()
            .flatten()
            .any(|s| s.eq_ignore_ascii_case(name))
    }
}

fn leftmost(q: &Query) -> &SubsetQuery {
    match q {
        Query::Subset(s) => s,
        Query::Compound { left, .. } => leftmost(left),
    }
}

impl Lowering<'_> {
    fn sources(&self, q: &SubsetQuery) -> Result<Sources> {
        let mut relations: Vec<Arc<Relation>> = Vec::new();
        for name in &q.from {
            let r = self.catalog.get(name)?;
            if relations
                .iter()
                .any(|x| x.name().eq_ignore_ascii_case(name))
            {
                return Err(Error::semantic(format!(
                    "table `{name}` is listed twice in FROM"
                )));
            }
            relations.push(r.clone());
        }
        let mut sids = vec![None; relations.len()];
        for d in &q.decls {
            let i = relations
                .iter()
                .position(|r| r.name().eq_ignore_ascii_case(&d.table))
                .ok_or_else(|| {
                    Error::semantic(format!(
                        "`{}` in WITH SUBSETS is not listed in FROM",
                        d.table
                    ))
                })?;
            if sids[i].is_some() {
                return Err(Error::semantic(format!(
                    "`{}` is declared twice in WITH SUBSETS",
                    d.table
                )));
            }
            sids[i] = Some(d.sid.clone());
        }
        Ok(Sources { relations, sids })
    }

    fn classify(&self, q: &SubsetQuery, sources: &Sources) -> Result<ConstraintClassification> {
        if let Some(w) = &q.where_cond {
            if w.has_aggregate() {
                return Err(Error::semantic(
                    "aggregates are not allowed in WHERE; put them in CONSTRAINED BY",
                ));
            }
        }
        let cond = ConstraintExpr::all(q.where_cond.iter().chain(&q.constrained_by).cloned());
        classify_constraints(&cond, &sources.view())
    }

    /// The relation of subsets a subset query describes, before any unary
    /// combine or projection.
    fn omega(&self, q: &SubsetQuery, sources: &Sources) -> Result<PlanNode> {
        let k = self.classify(q, sources)?;
        let mut nodes = Vec::new();
        for (r, sid) in sources.relations.iter().zip(&sources.sids) {
            let name = r.name();
            let mut node = PlanNode::scan(name);
            let tuple = k.per_tuple(name);
            if !tuple.is_true() {
                node = node.tuple_select(tuple);
            }
            node = if sid.is_some() {
                let agg = k.per_subset(name);
                let w = node.power_set();
                if agg.is_true() {
                    w
                } else {
                    w.constraint_filter(agg)
                }
            } else {
                node.lift()
            };
            nodes.push(node);
        }

        let mut nodes = nodes.into_iter();
        let mut plan = nodes.next().expect("FROM is nonempty");
        let mut joined = vec![sources.relations[0].name().to_string()];
        let mut pending: Vec<_> = k.join_atoms.iter().collect();
        for (node, r) in nodes.zip(sources.relations.iter().skip(1)) {
            joined.push(r.name().to_string());
            let (ready, rest): (Vec<_>, Vec<_>) = pending
                .into_iter()
                .partition(|a| a.sources.iter().all(|s| joined.contains(s)));
            pending = rest;
            plan = if ready.is_empty() {
                plan.cross_product(node)
            } else {
                plan.cross_join(
                    node,
                    ConstraintExpr::all(ready.iter().map(|a| a.cond.clone())),
                )
            };
        }
        debug_assert!(pending.is_empty());

        if let Some(mode) = q.maxmin {
            plan = plan.maxmin(mode, self.criterion);
        }
        Ok(plan)
    }

    fn subset_query(&self, q: &SubsetQuery) -> Result<PlanNode> {
        let sources = self.sources(q)?;
        let mut plan = self.omega(q, &sources)?;
        if let Some(mode) = q.apply_unary {
            plan = plan.unary_combine(mode);
        }
        self.output(plan, q, &sources)
    }

    fn compound(&self, q: &Query) -> Result<PlanNode> {
        match q {
            Query::Subset(s) => {
                if s.apply_unary.is_some() || s.group_by.is_some() {
                    return Err(Error::semantic(
                        "APPLY UNARY and GROUP BY cannot appear inside a combined query",
                    ));
                }
                let sources = self.sources(s)?;
                self.omega(s, &sources)
            }
            Query::Compound { left, op, right } => {
                let (l, r) = (self.compound(left)?, self.compound(right)?);
                Ok(match op {
                    Combinator::Union => l.set_combine(r, CombineMode::Union),
                    Combinator::Intersection => l.set_combine(r, CombineMode::Intersection),
                    Combinator::CrossUnion => l.cross_combine(r, CombineMode::Union),
                    Combinator::CrossIntersection => l.cross_combine(r, CombineMode::Intersection),
                })
            }
        }
    }

    fn output(&self, plan: PlanNode, q: &SubsetQuery, sources: &Sources) -> Result<PlanNode> {
        let view = sources.view();
        let check_column = |c: &ColumnRef| crate::engine::classify::owner(c, &view).map(|_| ());
        let check_sid = |name: &str| {
            if sources.is_sid(name) {
                Ok(())
            } else {
                Err(Error::UnknownAttribute(name.to_string()))
            }
        };
        let items: Option<Vec<OutputItem>> = match &q.select {
            SelectList::Star => None,
            SelectList::Items(items) => Some(
                items
                    .iter()
                    .map(|i| {
                        Ok(match i {
                            SelectItem::Sid(s) => {
                                check_sid(s)?;
                                OutputItem::Sid
                            }
                            SelectItem::Column(c) => {
                                check_column(c)?;
                                OutputItem::Column(c.clone())
                            }
                            SelectItem::Aggregate(a) => {
                                match &a.arg {
                                    AggArg::Sid(s) => check_sid(s)?,
                                    AggArg::Column(c) => check_column(c)?,
                                }
                                OutputItem::Aggregate(a.clone())
                            }
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
        };

        if let Some(g) = &q.group_by {
            let Some(items) = items else {
                return Err(Error::semantic("SELECT * cannot be combined with GROUP BY"));
            };
            g.keys.iter().try_for_each(check_column)?;
            if let Some(h) = &g.having {
                for (l, _, r) in h.atoms() {
                    for o in [l, r] {
                        match o {
                            Operand::Column(c) => check_column(c)?,
                            Operand::Aggregate(a) => match &a.arg {
                                AggArg::Sid(s) => check_sid(s)?,
                                AggArg::Column(c) => check_column(c)?,
                            },
                            Operand::Literal(_) => {}
                        }
                    }
                }
            }
            return Ok(PlanNode::GroupBy {
                input: Box::new(plan),
                keys: g.keys.clone(),
                items,
                having: g.having.clone(),
            });
        }
        match items {
            None => Ok(plan),
            Some(items) => {
                let aggregates = items.iter().any(|i| matches!(i, OutputItem::Aggregate(_)));
                let columns = items.iter().any(|i| matches!(i, OutputItem::Column(_)));
                if aggregates && columns {
                    return Err(Error::MixedProjection);
                }
                Ok(plan.project(items))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{read_csv, CmpOp, Value};
    use crate::sql::parse;
    use crate::subset::tests::{ITEM_CSV, SHOP_CSV};

    fn catalog() -> Catalog {
        let mut c = Catalog::new();
        c.register(read_csv(ITEM_CSV.as_bytes(), "Item", None).unwrap())
            .unwrap();
        c.register(read_csv(SHOP_CSV.as_bytes(), "Shop", None).unwrap())
            .unwrap();
        c.register(
            read_csv(
                "ItemId,ShopId\n6,2\n3,5\n1,3\n6,5\n".as_bytes(),
                "Available",
                None,
            )
            .unwrap(),
        )
        .unwrap();
        c
    }

    fn plan(sql: &str) -> Result<PlanNode> {
        lower(&parse(sql)?, &catalog(), Criterion::Inclusion)
    }

    #[test]
    fn query_two_shape() {
        let p = plan(
            "SELECT * FROM Item WHERE Type = \"Non-Eatable\" WITH SUBSETS Item sid \
             CONSTRAINED BY sum(Weight) > 200 and sum(Weight) < 400 and sum(Price) > 150",
        )
        .unwrap();
        assert_eq!(
            p.to_string(),
            "ConstraintFilter [sum(Item.Weight) > 200 AND sum(Item.Weight) < 400 AND sum(Item.Price) > 150]\n  \
             PowerSet\n    TupleSelect [Item.Type = \"Non-Eatable\"]\n      Scan Item\n"
        );
    }

    #[test]
    fn bare_star_is_a_power_set() {
        assert_eq!(
            plan("SELECT * FROM Item WITH SUBSETS Item sid").unwrap(),
            PlanNode::scan("Item").power_set()
        );
    }

    #[test]
    fn unary_union_is_last_before_projection() {
        let p = plan(
            "SELECT * FROM Shop WHERE Rating>4.0 WITH SUBSETS Shop sid \
             CONSTRAINED BY sum(Distance)>30 and sum(Distance)<40 APPLY UNARY UNION",
        )
        .unwrap();
        assert!(matches!(
            p,
            PlanNode::UnaryCombine {
                mode: CombineMode::Union,
                ..
            }
        ));
    }

    #[test]
    fn three_source_join_chain() {
        let p = plan(
            "SELECT * FROM Item, Shop, Available WHERE Price<30 WITH SUBSETS Item sid,Shop sid \
             CONSTRAINED BY Item.ItemId = Available.ItemId and Shop.ShopId = Available.ShopId \
             and sum(Weight)>60 and sum(Weight)<90",
        )
        .unwrap();
        let PlanNode::CrossJoin { left, right, cond } = p else {
            panic!("{p}")
        };
        assert!(matches!(*left, PlanNode::CrossProduct { .. }));
        assert!(matches!(*right, PlanNode::Lift(_)));
        assert_eq!(cond.conjuncts().len(), 2);
    }

    #[test]
    fn compound_uses_left_projection() {
        let p = plan(
            "(SELECT sid, Location FROM Shop WITH SUBSETS Shop sid CONSTRAINED BY count(sid) = 1) \
             UNION (SELECT * FROM Shop WITH SUBSETS Shop s2 CONSTRAINED BY count(s2) = 2)",
        )
        .unwrap();
        let PlanNode::Project { input, items } = p else {
            panic!()
        };
        assert_eq!(items.len(), 2);
        assert!(matches!(*input, PlanNode::SetCombine { .. }));
    }

    #[test]
    fn semantic_errors() {
        let err = |s: &str| plan(s).unwrap_err();
        assert!(matches!(
            err("SELECT * FROM Nope WITH SUBSETS Nope sid"),
            Error::UnknownTable(_)
        ));
        assert!(matches!(
            err("SELECT * FROM Item WITH SUBSETS Item sid CONSTRAINED BY sum(Colour) > 1"),
            Error::UnknownAttribute(_)
        ));
        assert!(matches!(
            err("SELECT sid, Name, sum(Price) FROM Item WITH SUBSETS Item sid"),
            Error::MixedProjection
        ));
        assert!(matches!(
            err("SELECT * FROM Item WITH SUBSETS Item sid CONSTRAINED BY sum(Weight) > 1 or Price < 3"),
            Error::CrossBucketDisjunction(_)
        ));
        assert!(
            err("SELECT * FROM Item WHERE sum(Price) > 3 WITH SUBSETS Item sid")
                .to_string()
                .contains("WHERE")
        );
        assert!(err("SELECT * FROM Item WITH SUBSETS Shop sid")
            .to_string()
            .contains("not listed"));
        assert!(err("SELECT * FROM Item, Item WITH SUBSETS Item sid")
            .to_string()
            .contains("twice"));
        assert!(err(
            "(SELECT * FROM Shop WITH SUBSETS Shop sid APPLY UNARY UNION) UNION (SELECT * FROM Shop WITH SUBSETS Shop sid)"
        )
        .to_string()
        .contains("combined"));
        assert!(matches!(
            err("SELECT zid FROM Item WITH SUBSETS Item sid"),
            Error::UnknownAttribute(_)
        ));
    }

    #[test]
    fn per_tuple_atoms_in_constrained_by_move_before_subsets() {
        let p =
            plan("SELECT * FROM Shop WITH SUBSETS Shop sid CONSTRAINED BY Distance > 14").unwrap();
        assert_eq!(
            p,
            PlanNode::scan("Shop")
                .tuple_select(ConstraintExpr::compare(
                    Operand::Column(ColumnRef::qualified("Shop", "Distance")),
                    CmpOp::Gt,
                    Operand::Literal(Value::Int(14)),
                ))
                .power_set()
        );
    }
}
