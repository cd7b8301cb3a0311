//! The subset query dialect: tokenizer, parser, syntax tree and lowering
//! to plans.

mod ast;
mod lexer;
mod lower;
mod parser;

pub use ast::{Combinator, GroupClause, Query, SelectItem, SelectList, SubsetDecl, SubsetQuery};
pub use lexer::{tokenize, Keyword, Pos, Token, TokenKind};
pub use lower::lower;
pub use parser::{parse, parse_condition, parse_script};
