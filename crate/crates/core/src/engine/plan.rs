use std::fmt;

use crate::error::{Error, Result};
use crate::omega::{CombineMode, Criterion, Extremum};
use crate::relation::{AggregateTerm, ColumnRef, ConstraintExpr};

/// One entry of a projection list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputItem {
    Sid,
    /// Every attribute of the base.
    Star,
    Column(ColumnRef),
    Aggregate(AggregateTerm),
}

impl fmt::Display for OutputItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputItem::Sid => f.write_str("sid"),
            OutputItem::Star => f.write_str("*"),
            OutputItem::Column(c) => write!(f, "{c}"),
            OutputItem::Aggregate(a) => write!(f, "{a}"),
        }
    }
}

/// What a plan node produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Relation,
    Omega,
    Subset,
    Rows,
}

/// Subset-algebra plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanNode {
    /// A catalog relation.
    Scan(String),
    /// Per-tuple selection on a relation, or inside every member of a
    /// relation of subsets.
    TupleSelect {
        input: Box<PlanNode>,
        cond: ConstraintExpr,
    },
    PowerSet(Box<PlanNode>),
    Lift(Box<PlanNode>),
    ConstraintFilter {
        input: Box<PlanNode>,
        cond: ConstraintExpr,
    },
    MaxMin {
        input: Box<PlanNode>,
        mode: Extremum,
        criterion: Criterion,
    },
    UnaryCombine {
        input: Box<PlanNode>,
        mode: CombineMode,
    },
    SetCombine {
        left: Box<PlanNode>,
        right: Box<PlanNode>,
        mode: CombineMode,
    },
    CrossCombine {
        left: Box<PlanNode>,
        right: Box<PlanNode>,
        mode: CombineMode,
    },
    CrossProduct {
        left: Box<PlanNode>,
        right: Box<PlanNode>,
    },
    CrossJoin {
        left: Box<PlanNode>,
        right: Box<PlanNode>,
        cond: ConstraintExpr,
    },
    Project {
        input: Box<PlanNode>,
        items: Vec<OutputItem>,
    },
    GroupBy {
        input: Box<PlanNode>,
        keys: Vec<ColumnRef>,
        items: Vec<OutputItem>,
        having: Option<ConstraintExpr>,
    },
}

impl PlanNode {
    pub fn scan(name: &str) -> Self {
        PlanNode::Scan(name.to_string())
    }

    pub fn tuple_select(self, cond: ConstraintExpr) -> Self {
        PlanNode::TupleSelect {
            input: Box::new(self),
            cond,
        }
    }

    pub fn power_set(self) -> Self {
        PlanNode::PowerSet(Box::new(self))
    }

    pub fn lift(self) -> Self {
        PlanNode::Lift(Box::new(self))
    }

    pub fn constraint_filter(self, cond: ConstraintExpr) -> Self {
        PlanNode::ConstraintFilter {
            input: Box::new(self),
            cond,
        }
    }

    pub fn maxmin(self, mode: Extremum, criterion: Criterion) -> Self {
        PlanNode::MaxMin {
            input: Box::new(self),
            mode,
            criterion,
        }
    }

    pub fn unary_combine(self, mode: CombineMode) -> Self {
        PlanNode::UnaryCombine {
            input: Box::new(self),
            mode,
        }
    }

    pub fn set_combine(self, right: PlanNode, mode: CombineMode) -> Self {
        PlanNode::SetCombine {
            left: Box::new(self),
            right: Box::new(right),
            mode,
        }
    }

    pub fn cross_combine(self, right: PlanNode, mode: CombineMode) -> Self {
        PlanNode::CrossCombine {
            left: Box::new(self),
            right: Box::new(right),
            mode,
        }
    }

    pub fn cross_product(self, right: PlanNode) -> Self {
        PlanNode::CrossProduct {
            left: Box::new(self),
            right: Box::new(right),
        }
    }

    pub fn cross_join(self, right: PlanNode, cond: ConstraintExpr) -> Self {
        PlanNode::CrossJoin {
            left: Box::new(self),
            right: Box::new(right),
            cond,
        }
    }

    pub fn project(self, items: Vec<OutputItem>) -> Self {
        PlanNode::Project {
            input: Box::new(self),
            items,
        }
    }

    /// Checks operand shapes bottom-up and returns this node's shape.
    pub fn shape(&self) -> Result<Shape> {
        let want = |node: &PlanNode, ok: &[Shape], what: &str| -> Result<Shape> {
            let s = node.shape()?;
            if ok.contains(&s) {
                Ok(s)
            } else {
                Err(Error::semantic(format!(
                    "{what} cannot take a {s:?} operand"
                )))
            }
        };
        use Shape::*;
        Ok(match self {
            PlanNode::Scan(_) => Relation,
            PlanNode::TupleSelect { input, .. } => want(input, &[Relation, Omega], "tuple select")?,
            PlanNode::PowerSet(r) => {
                want(r, &[Relation], "power set")?;
                Omega
            }
            PlanNode::Lift(r) => {
                want(r, &[Relation], "lift")?;
                Omega
            }
            PlanNode::ConstraintFilter { input, .. } => want(input, &[Omega], "constraint filter")?,
            PlanNode::MaxMin { input, .. } => want(input, &[Omega], "maximal/minimal")?,
            PlanNode::UnaryCombine { input, .. } => {
                want(input, &[Omega], "unary combine")?;
                Subset
            }
            PlanNode::SetCombine { left, right, .. }
            | PlanNode::CrossCombine { left, right, .. }
            | PlanNode::CrossProduct { left, right }
            | PlanNode::CrossJoin { left, right, .. } => {
                want(left, &[Omega], "binary subset operator")?;
                want(right, &[Omega], "binary subset operator")?;
                Omega
            }
            PlanNode::Project { input, .. } | PlanNode::GroupBy { input, .. } => {
                want(input, &[Omega, Subset], "projection")?;
                Rows
            }
        })
    }

    fn children(&self) -> Vec<&PlanNode> {
        match self {
            PlanNode::Scan(_) => vec![],
            PlanNode::TupleSelect { input, .. }
            | PlanNode::ConstraintFilter { input, .. }
            | PlanNode::MaxMin { input, .. }
            | PlanNode::UnaryCombine { input, .. }
            | PlanNode::Project { input, .. }
            | PlanNode::GroupBy { input, .. } => vec![input],
            PlanNode::PowerSet(r) | PlanNode::Lift(r) => vec![r],
            PlanNode::SetCombine { left, right, .. }
            | PlanNode::CrossCombine { left, right, .. }
            | PlanNode::CrossProduct { left, right }
            | PlanNode::CrossJoin { left, right, .. } => vec![left, right],
        }
    }

    fn label(&self) -> String {
        let mode = |m: &CombineMode| match m {
            CombineMode::Union => "union",
            CombineMode::Intersection => "intersection",
        };
        let list = |items: &[OutputItem]| {
            items
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        match self {
            PlanNode::Scan(name) => format!("Scan {name}"),
            PlanNode::TupleSelect { cond, .. } => format!("TupleSelect [{cond}]"),
            PlanNode::PowerSet(_) => "PowerSet".into(),
            PlanNode::Lift(_) => "Lift".into(),
            PlanNode::ConstraintFilter { cond, .. } => format!("ConstraintFilter [{cond}]"),
            PlanNode::MaxMin {
                mode, criterion, ..
            } => format!("{mode:?} by {criterion:?}"),
            PlanNode::UnaryCombine { mode: m, .. } => format!("UnaryCombine {}", mode(m)),
            PlanNode::SetCombine { mode: m, .. } => format!("SetCombine {}", mode(m)),
            PlanNode::CrossCombine { mode: m, .. } => format!("CrossCombine {}", mode(m)),
            PlanNode::CrossProduct { .. } => "CrossProduct".into(),
            PlanNode::CrossJoin { cond, .. } => format!("CrossJoin [{cond}]"),
            PlanNode::Project { items, .. } => format!("Project [{}]", list(items)),
            PlanNode::GroupBy {
                keys,
                items,
                having,
                ..
            } => {
                let keys = keys
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(", ");
                match having {
                    Some(h) => format!("GroupBy [{keys}] output [{}] having [{h}]", list(items)),
                    None => format!("GroupBy [{keys}] output [{}]", list(items)),
                }
            }
        }
    }

    fn write_tree(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        writeln!(f, "{:indent$}{}", "", self.label(), indent = depth * 2)?;
        for c in self.children() {
            c.write_tree(f, depth + 1)?;
        }
        Ok(())
    }
}

/// Indented operator tree, root first.
impl fmt::Display for PlanNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_tree(f, 0)
    }
}
