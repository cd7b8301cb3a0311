//! Relations of subsets: deduplicated, canonically ordered families of
//! nonempty subsets over one extension, and the operators on them.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::relation::{BindScope, ColumnRef, ConstraintExpr, Relation, RowId, Value};
use crate::subset::{common_base, AggregateTerm, GroupRow, Subset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Union,
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Maximal,
    Minimal,
}

/// How `MAXIMAL` / `MINIMAL` decide dominance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    /// Keep members with no proper superset (maximal) or subset (minimal).
    #[default]
    Inclusion,
    /// Keep members whose size equals the largest (smallest) size.
    Cardinality,
}

impl std::str::FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "inclusion" => Ok(Criterion::Inclusion),
            "cardinality" => Ok(Criterion::Cardinality),
            other => Err(format!("unknown maxmin criterion `{other}`")),
        }
    }
}

/// Projected rows of one member subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidRows {
    pub sid: usize,
    pub rows: Vec<(RowId, Vec<Value>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidGroups {
    pub sid: usize,
    pub groups: Vec<GroupRow>,
}

/// A set of nonempty subsets over one base extension. Members are kept in
/// canonical order (by size, then lexicographically by rowid); a member's
/// sid is its 1-based position in that order.
#[derive(Clone)]
pub struct RelationOfSubsets {
    base: Arc<Relation>,
    subsets: Vec<Subset>,
}

impl RelationOfSubsets {
    /// Canonicalizes `subsets` over `base`: empties dropped, duplicates
    /// merged, canonical order restored.
    pub fn new(base: Arc<Relation>, subsets: impl IntoIterator<Item = Subset>) -> Result<Self> {
        let mut out = Vec::new();
        for s in subsets {
            if s.is_empty() {
                continue;
            }
            if !Arc::ptr_eq(s.base(), &base) {
                if !s.base().same_base(&base) {
                    return Err(Error::BaseMismatch(
                        s.base().name().to_string(),
                        base.name().to_string(),
                    ));
                }
                if let Some(m) = s.members().iter().find(|&&m| base.tuple(m).is_none()) {
                    return Err(Error::semantic(format!(
                        "rowid {m} is outside the base extension of `{}`",
                        base.name()
                    )));
                }
            }
            out.push(s.rebase(&base));
        }
        Ok(Self::canonical(base, out))
    }

    /// Builds from raw member lists; handy for tests and fixtures.
    pub fn from_members(
        base: Arc<Relation>,
        members: impl IntoIterator<Item = Vec<RowId>>,
    ) -> Result<Self> {
        let subsets = members
            .into_iter()
            .map(|m| Subset::new(base.clone(), m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, subsets)
    }

    /// Caller guarantees every subset is already over `base`.
    pub(crate) fn canonical(base: Arc<Relation>, mut subsets: Vec<Subset>) -> Self {
        subsets.retain(|s| !s.is_empty());
        subsets.sort_by(|a, b| a.canonical_cmp(b));
        subsets.dedup_by(|a, b| a.members() == b.members());
        RelationOfSubsets { base, subsets }
    }

    pub fn empty(base: Arc<Relation>) -> Self {
        RelationOfSubsets {
            base,
            subsets: Vec::new(),
        }
    }

    pub fn base(&self) -> &Arc<Relation> {
        &self.base
    }

    pub fn subsets(&self) -> &[Subset] {
        &self.subsets
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// Subsets paired with their sids.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Subset)> + '_ {
        self.subsets.iter().enumerate().map(|(i, s)| (i + 1, s))
    }

    pub fn sid_of(&self, subset: &Subset) -> Option<usize> {
        self.subsets
            .binary_search_by(|s| s.canonical_cmp(subset))
            .ok()
            .map(|i| i + 1)
    }

    /// Member rowid lists in sid order.
    pub fn member_lists(&self) -> Vec<Vec<RowId>> {
        self.subsets.iter().map(|s| s.members().to_vec()).collect()
    }

    /// Checks the structural invariants: every member nonempty, over the
    /// shared base, strictly increasing in canonical order (hence distinct).
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.subsets.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::semantic(format!("member {} is empty", i + 1)));
            }
            if !Arc::ptr_eq(s.base(), &self.base) && !s.base().same_base(&self.base) {
                return Err(Error::semantic(format!(
                    "member {} has a foreign base",
                    i + 1
                )));
            }
            if !s.members().windows(2).all(|w| w[0] < w[1])
                || s.members().iter().any(|&m| self.base.tuple(m).is_none())
            {
                return Err(Error::semantic(format!("member {} is malformed", i + 1)));
            }
            if i > 0 && self.subsets[i - 1].canonical_cmp(s).is_ge() {
                return Err(Error::semantic(format!(
                    "members {} and {} are duplicated or out of order",
                    i,
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// All nonempty subsets of `r`. The naive reference form; refuses
    /// relations larger than `cap` rows.
    pub fn power_set(r: Arc<Relation>, cap: usize) -> Result<Self> {
        if r.len() > cap {
            return Err(Error::LimitExceeded {
                limit: "naive power set size",
                value: cap as u64,
            });
        }
        let rowids: Vec<RowId> = r.rowids().collect();
        let n = rowids.len();
        let mut subsets = Vec::with_capacity((1usize << n).saturating_sub(1));
        for mask in 1u64..(1u64 << n) {
            let members = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| rowids[i])
                .collect();
            subsets.push(Subset::from_sorted(r.clone(), members));
        }
        Ok(Self::canonical(r, subsets))
    }

    /// Keeps the members satisfying an aggregate condition.
    pub fn constraint_filter(&self, cond: &ConstraintExpr) -> Result<Self> {
        let bound = cond.bind(self.base.schema(), BindScope::Subset)?;
        let mut kept = Vec::new();
        for s in &self.subsets {
            if s.satisfies(&bound)? {
                kept.push(s.clone());
            }
        }
        Ok(RelationOfSubsets {
            base: self.base.clone(),
            subsets: kept,
        })
    }

    /// Applies a per-tuple condition inside every member; empty results are
    /// dropped and coinciding results merged.
    pub fn tuple_select(&self, cond: &ConstraintExpr) -> Result<Self> {
        let bound = cond.bind(self.base.schema(), BindScope::Tuple)?;
        let selected = self
            .subsets
            .iter()
            .map(|s| s.select_bound(&bound))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::canonical(self.base.clone(), selected))
    }

    pub fn project(&self, attrs: &[ColumnRef]) -> Result<Vec<SidRows>> {
        self.iter()
            .map(|(sid, s)| {
                Ok(SidRows {
                    sid,
                    rows: s.project(attrs)?,
                })
            })
            .collect()
    }

    /// Folds all members into one subset.
    pub fn unary_combine(&self, mode: CombineMode) -> Result<Subset> {
        let mut it = self.subsets.iter();
        let Some(first) = it.next() else {
            return match mode {
                CombineMode::Union => Ok(Subset::empty(self.base.clone())),
                CombineMode::Intersection => Err(Error::EmptyIntersection),
            };
        };
        it.try_fold(first.clone(), |acc, s| match mode {
            CombineMode::Union => acc.union(s),
            CombineMode::Intersection => acc.intersect(s),
        })
    }

    /// Family union or intersection of two relations of subsets over the
    /// same source.
    pub fn set_combine(&self, other: &Self, mode: CombineMode) -> Result<Self> {
        let base = common_base(&self.base, &other.base)?;
        let subsets: Vec<Subset> = match mode {
            CombineMode::Union => self
                .subsets
                .iter()
                .chain(&other.subsets)
                .map(|s| s.rebase(&base))
                .collect(),
            CombineMode::Intersection => {
                let theirs: HashSet<&[RowId]> = other.subsets.iter().map(|s| s.members()).collect();
                self.subsets
                    .iter()
                    .filter(|s| theirs.contains(s.members()))
                    .map(|s| s.rebase(&base))
                    .collect()
            }
        };
        Ok(Self::canonical(base, subsets))
    }

    /// Pairwise union or intersection of members; empty results dropped.
    pub fn cross_combine(&self, other: &Self, mode: CombineMode) -> Result<Self> {
        let base = common_base(&self.base, &other.base)?;
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.subsets {
            for b in &other.subsets {
                let c = match mode {
                    CombineMode::Union => a.union(b)?,
                    CombineMode::Intersection => a.intersect(b)?,
                };
                out.push(c.rebase(&base));
            }
        }
        Ok(Self::canonical(base, out))
    }

    /// Complement of every member; members equal to the whole base vanish.
    pub fn complement(&self) -> Self {
        let out = self.subsets.iter().map(Subset::complement).collect();
        Self::canonical(self.base.clone(), out)
    }

    pub fn cross_product(&self, other: &Self) -> Result<Self> {
        self.cross_join(other, &ConstraintExpr::True)
    }

    /// Joins every pair of members on `cond`; empty joins are dropped.
    pub fn cross_join(&self, other: &Self, cond: &ConstraintExpr) -> Result<Self> {
        let product = Arc::new(self.base.product(&other.base)?);
        let bound = cond.bind(product.schema(), BindScope::Tuple)?;
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.subsets {
            for b in &other.subsets {
                out.push(a.join_into(b, &product, &bound)?);
            }
        }
        Ok(Self::canonical(product, out))
    }

    pub fn group_by(
        &self,
        keys: &[ColumnRef],
        aggs: &[AggregateTerm],
        having: Option<&ConstraintExpr>,
    ) -> Result<Vec<SidGroups>> {
        self.iter()
            .map(|(sid, s)| {
                Ok(SidGroups {
                    sid,
                    groups: s.group_by(keys, aggs, having)?,
                })
            })
            .collect()
    }

    pub fn maxmin(&self, mode: Extremum, criterion: Criterion) -> Self {
        let subsets = match criterion {
            Criterion::Cardinality => {
                let target = match mode {
                    Extremum::Maximal => self.subsets.iter().map(Subset::len).max(),
                    Extremum::Minimal => self.subsets.iter().map(Subset::len).min(),
                };
                self.subsets
                    .iter()
                    .filter(|s| Some(s.len()) == target)
                    .cloned()
                    .collect()
            }
            Criterion::Inclusion => {
                // Visit dominating candidates first; a member is dominated
                // iff it is dominated by some already-kept member.
                let mut order: Vec<&Subset> = self.subsets.iter().collect();
                if mode == Extremum::Maximal {
                    order.reverse();
                }
                let mut kept: Vec<&Subset> = Vec::new();
                for s in order {
                    let dominated = kept.iter().any(|k| match mode {
                        Extremum::Maximal => s.is_subset_of(k),
                        Extremum::Minimal => k.is_subset_of(s),
                    });
                    if !dominated {
                        kept.push(s);
                    }
                }
                kept.into_iter().cloned().collect()
            }
        };
        Self::canonical(self.base.clone(), subsets)
    }

    /// A plain relation as a relation of subsets holding its whole extension.
    pub fn lift(r: Arc<Relation>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::semantic(format!(
                "cannot lift empty relation `{}`",
                r.name()
            )));
        }
        Ok(RelationOfSubsets {
            subsets: vec![Subset::whole(r.clone())],
            base: r,
        })
    }
}

impl PartialEq for RelationOfSubsets {
    fn eq(&self, other: &Self) -> bool {
        self.base.same_base(&other.base) && self.subsets == other.subsets
    }
}

impl Eq for RelationOfSubsets {}

impl fmt::Debug for RelationOfSubsets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.base.name(), self.member_lists())
    }
}
