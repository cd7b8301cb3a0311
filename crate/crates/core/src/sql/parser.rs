use crate::error::Result;
use crate::omega::{CombineMode, Extremum};
use crate::relation::{
    AggArg, AggFn, AggregateTerm, CmpOp, ColumnRef, ConstraintExpr, Operand, Value,
};

use super::ast::{Combinator, GroupClause, Query, SelectItem, SelectList, SubsetDecl, SubsetQuery};
use super::lexer::{syntax_error, tokenize, Keyword, Pos, Token, TokenKind};

/// Parses a single query; a trailing `;` is allowed.
pub fn parse(text: &str) -> Result<Query> {
    let mut p = Parser::new(text)?;
    let q = p.query()?;
    p.eat(&TokenKind::Semicolon);
    p.expect_end()?;
    Ok(q)
}

/// Parses a `;`-separated script. Empty statements are skipped.
pub fn parse_script(text: &str) -> Result<Vec<Query>> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    loop {
        while p.eat(&TokenKind::Semicolon) {}
        if p.at_end() {
            return Ok(out);
        }
        out.push(p.query()?);
        if !p.at_end() {
            p.expect(&TokenKind::Semicolon)?;
        }
    }
}

/// Parses a bare condition, as written after WHERE or CONSTRAINED BY.
pub fn parse_condition(text: &str) -> Result<ConstraintExpr> {
    let mut p = Parser::new(text)?;
    let c = p.condition()?;
    p.expect_end()?;
    Ok(c)
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
    end: Pos,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        let tokens = tokenize(text)?;
        let end = end_pos(text);
        Ok(Parser {
            tokens,
            idx: 0,
            end,
        })
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.idx).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&TokenKind> {
        self.tokens.get(self.idx + n).map(|t| &t.kind)
    }

    fn pos(&self) -> Pos {
        self.tokens.get(self.idx).map_or(self.end, |t| t.pos)
    }

    fn at_end(&self) -> bool {
        self.idx >= self.tokens.len()
    }

    fn advance(&mut self) -> Option<TokenKind> {
        let t = self.tokens.get(self.idx).map(|t| t.kind.clone());
        self.idx += 1;
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: Keyword) -> bool {
        self.eat(&TokenKind::Keyword(k))
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(k) => k.to_string(),
            None => "end of input".into(),
        }
    }

    fn error<T>(&self, expected: &str) -> Result<T> {
        Err(syntax_error(
            self.pos(),
            format!("expected {expected}, found {}", self.found()),
        ))
    }

    fn expect(&mut self, kind: &TokenKind) -> Result<()> {
        if self.eat(kind) {
            Ok(())
        } else {
            self.error(&kind.to_string())
        }
    }

    fn expect_kw(&mut self, k: Keyword) -> Result<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.error(k.as_str())
        }
    }

    fn expect_end(&self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            self.error("end of query")
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                self.idx += 1;
                Ok(s)
            }
            _ => self.error(what),
        }
    }

    fn query(&mut self) -> Result<Query> {
        if self.peek() != Some(&TokenKind::LParen) {
            return Ok(Query::Subset(Box::new(self.subset_query()?)));
        }
        let mut left = self.parenthesized()?;
        while let Some(op) = self.combinator()? {
            let right = self.parenthesized()?;
            left = Query::Compound {
                left: Box::new(left),
                op,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parenthesized(&mut self) -> Result<Query> {
        self.expect(&TokenKind::LParen)?;
        let q = self.query()?;
        self.expect(&TokenKind::RParen)?;
        Ok(q)
    }

    fn combinator(&mut self) -> Result<Option<Combinator>> {
        Ok(Some(if self.eat_kw(Keyword::Union) {
            Combinator::Union
        } else if self.eat_kw(Keyword::Intersection) {
            Combinator::Intersection
        } else if self.eat_kw(Keyword::Cross) {
            if self.eat_kw(Keyword::Union) {
                Combinator::CrossUnion
            } else if self.eat_kw(Keyword::Intersection) {
                Combinator::CrossIntersection
            } else {
                return self.error("UNION or INTERSECTION after CROSS");
            }
        } else {
            return Ok(None);
        }))
    }

    fn subset_query(&mut self) -> Result<SubsetQuery> {
        let start = self.pos();
        self.expect_kw(Keyword::Select)?;
        let select = if self.eat(&TokenKind::Star) {
            SelectList::Star
        } else {
            let mut items = vec![self.select_item()?];
            while self.eat(&TokenKind::Comma) {
                items.push(self.select_item()?);
            }
            SelectList::Items(items)
        };
        self.expect_kw(Keyword::From)?;
        let mut from = vec![self.ident("a table name")?];
        while self.eat(&TokenKind::Comma) {
            from.push(self.ident("a table name")?);
        }
        let where_cond = if self.eat_kw(Keyword::Where) {
            Some(self.condition()?)
        } else {
            None
        };
        if !self.eat_kw(Keyword::With) {
            if self.at_end() || self.peek() == Some(&TokenKind::Semicolon) {
                return Err(syntax_error(
                    start,
                    "a subset query needs a WITH SUBSETS clause; plain SQL is not supported here",
                ));
            }
            return self.error("WITH SUBSETS");
        }
        self.expect_kw(Keyword::Subsets)?;
        let mut decls = vec![self.decl()?];
        while self.eat(&TokenKind::Comma) {
            decls.push(self.decl()?);
        }
        let maxmin = if self.eat_kw(Keyword::Maximal) {
            Some(Extremum::Maximal)
        } else if self.eat_kw(Keyword::Minimal) {
            Some(Extremum::Minimal)
        } else {
            None
        };
        let constrained_by = if self.eat_kw(Keyword::Constrained) {
            self.expect_kw(Keyword::By)?;
            Some(self.condition()?)
        } else {
            None
        };
        let apply_unary = if self.eat_kw(Keyword::Apply) {
            self.expect_kw(Keyword::Unary)?;
            if self.eat_kw(Keyword::Union) {
                Some(CombineMode::Union)
            } else if self.eat_kw(Keyword::Intersection) {
                Some(CombineMode::Intersection)
            } else {
                return self.error("UNION or INTERSECTION after APPLY UNARY");
            }
        } else {
            None
        };
        let group_by = if self.eat_kw(Keyword::Group) {
            self.expect_kw(Keyword::By)?;
            let mut keys = vec![self.column()?];
            while self.eat(&TokenKind::Comma) {
                keys.push(self.column()?);
            }
            let having = if self.eat_kw(Keyword::Having) {
                Some(self.condition()?)
            } else {
                None
            };
            Some(GroupClause { keys, having })
        } else {
            None
        };
        if let Some(TokenKind::Keyword(
            k @ (Keyword::Where
            | Keyword::With
            | Keyword::Maximal
            | Keyword::Minimal
            | Keyword::Constrained
            | Keyword::Apply
            | Keyword::Group
            | Keyword::Having),
        )) = self.peek()
        {
            return Err(syntax_error(
                self.pos(),
                format!("clause {} is out of order", k.as_str()),
            ));
        }
        let mut q = SubsetQuery {
            select,
            from,
            where_cond,
            decls,
            maxmin,
            constrained_by,
            apply_unary,
            group_by,
        };
        resolve_sids(&mut q);
        Ok(q)
    }

    fn decl(&mut self) -> Result<SubsetDecl> {
        let table = self.ident("a table name")?;
        let sid = self.ident("a subset identifier name")?;
        Ok(SubsetDecl { table, sid })
    }

    fn column(&mut self) -> Result<ColumnRef> {
        match self.advance() {
            Some(TokenKind::Ident(s)) => Ok(ColumnRef::new(s)),
            Some(TokenKind::Qualified(t, c)) => Ok(ColumnRef::qualified(t, c)),
            _ => {
                self.idx -= 1;
                self.error("a column name")
            }
        }
    }

    /// `fn(arg)` when the current token is an aggregate name followed by `(`.
    fn aggregate(&mut self) -> Result<Option<AggregateTerm>> {
        let Some(TokenKind::Ident(name)) = self.peek() else {
            return Ok(None);
        };
        if self.peek_at(1) != Some(&TokenKind::LParen) {
            return Ok(None);
        }
        let Some(func) = AggFn::from_name(name) else {
            return Err(syntax_error(
                self.pos(),
                format!("unknown aggregate function `{name}`"),
            ));
        };
        self.idx += 2;
        let col = self.column()?;
        self.expect(&TokenKind::RParen)?;
        Ok(Some(AggregateTerm {
            func,
            arg: AggArg::Column(col),
        }))
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        if let Some(a) = self.aggregate()? {
            return Ok(SelectItem::Aggregate(a));
        }
        Ok(SelectItem::Column(self.column()?))
    }

    pub(crate) fn condition(&mut self) -> Result<ConstraintExpr> {
        let first = self.conjunction()?;
        if self.peek() != Some(&TokenKind::Keyword(Keyword::Or)) {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat_kw(Keyword::Or) {
            parts.push(self.conjunction()?);
        }
        Ok(ConstraintExpr::Or(parts))
    }

    fn conjunction(&mut self) -> Result<ConstraintExpr> {
        let first = self.negation()?;
        if self.peek() != Some(&TokenKind::Keyword(Keyword::And)) {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat_kw(Keyword::And) {
            parts.push(self.negation()?);
        }
        Ok(ConstraintExpr::And(parts))
    }

    fn negation(&mut self) -> Result<ConstraintExpr> {
        if self.eat_kw(Keyword::Not) {
            return Ok(ConstraintExpr::Not(Box::new(self.negation()?)));
        }
        if self.eat(&TokenKind::LParen) {
            let c = self.condition()?;
            self.expect(&TokenKind::RParen)?;
            return Ok(c);
        }
        let left = self.operand()?;
        let op = match self.peek() {
            Some(TokenKind::Eq) => CmpOp::Eq,
            Some(TokenKind::Ne) => CmpOp::Ne,
            Some(TokenKind::Lt) => CmpOp::Lt,
            Some(TokenKind::Le) => CmpOp::Le,
            Some(TokenKind::Gt) => CmpOp::Gt,
            Some(TokenKind::Ge) => CmpOp::Ge,
            _ => return self.error("a comparison operator"),
        };
        self.idx += 1;
        let right = self.operand()?;
        Ok(ConstraintExpr::Compare { left, op, right })
    }

    fn operand(&mut self) -> Result<Operand> {
        if let Some(a) = self.aggregate()? {
            return Ok(Operand::Aggregate(a));
        }
        let pos = self.pos();
        let negative = self.eat(&TokenKind::Minus);
        match self.peek().cloned() {
            Some(TokenKind::Number(n)) => {
                self.idx += 1;
                let text = if negative { format!("-{n}") } else { n };
                let v = if text.contains('.') {
                    text.parse().map(Value::Dec)
                } else {
                    text.parse::<i64>()
                        .map(Value::Int)
                        .map_err(|e| crate::error::Error::Load(e.to_string()))
                };
                v.map(Operand::Literal)
                    .map_err(|_| syntax_error(pos, format!("invalid numeric literal `{text}`")))
            }
            _ if negative => self.error("a number after `-`"),
            Some(TokenKind::Str(s)) => {
                self.idx += 1;
                Ok(Operand::Literal(Value::Str(s)))
            }
            Some(TokenKind::Ident(_) | TokenKind::Qualified(..)) => {
                Ok(Operand::Column(self.column()?))
            }
            _ => self.error("a column, literal or aggregate"),
        }
    }
}

fn end_pos(text: &str) -> Pos {
    let mut pos = Pos { line: 1, column: 1 };
    for c in text.chars() {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    }
    pos
}

/// Turns bare identifiers that name a declared subset identifier into sid
/// references, in the select list and inside aggregate arguments.
fn resolve_sids(q: &mut SubsetQuery) {
    let sids: Vec<String> = q.decls.iter().map(|d| d.sid.clone()).collect();
    let is_sid =
        |c: &ColumnRef| c.table.is_none() && sids.iter().any(|s| s.eq_ignore_ascii_case(&c.name));
    let fix_term = |a: &AggregateTerm| match &a.arg {
        AggArg::Column(c) if is_sid(c) => AggregateTerm {
            func: a.func,
            arg: AggArg::Sid(c.name.clone()),
        },
        _ => a.clone(),
    };
    let fix_cond = |e: &ConstraintExpr| {
        e.map_operands(&mut |o| match o {
            Operand::Aggregate(a) => Operand::Aggregate(fix_term(a)),
            other => other.clone(),
        })
    };
    if let SelectList::Items(items) = &mut q.select {
        for item in items.iter_mut() {
            *item = match &*item {
                SelectItem::Column(c) if is_sid(c) => SelectItem::Sid(c.name.clone()),
                SelectItem::Aggregate(a) => SelectItem::Aggregate(fix_term(a)),
                other => other.clone(),
            };
        }
    }
    q.where_cond = q.where_cond.as_ref().map(fix_cond);
    q.constrained_by = q.constrained_by.as_ref().map(fix_cond);
    if let Some(g) = &mut q.group_by {
        g.having = g.having.as_ref().map(fix_cond);
    }
}
