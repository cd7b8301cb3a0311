use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Select,
    From,
    Where,
    With,
    Subsets,
    Constrained,
    By,
    Apply,
    Unary,
    Union,
    Intersection,
    Cross,
    Maximal,
    Minimal,
    Group,
    Having,
    And,
    Or,
    Not,
}

impl Keyword {
    const ALL: [Keyword; 19] = [
        Keyword::Select,
        Keyword::From,
        Keyword::Where,
        Keyword::With,
        Keyword::Subsets,
        Keyword::Constrained,
        Keyword::By,
        Keyword::Apply,
        Keyword::Unary,
        Keyword::Union,
        Keyword::Intersection,
        Keyword::Cross,
        Keyword::Maximal,
        Keyword::Minimal,
        Keyword::Group,
        Keyword::Having,
        Keyword::And,
        Keyword::Or,
        Keyword::Not,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Select => "SELECT",
            Keyword::From => "FROM",
            Keyword::Where => "WHERE",
            Keyword::With => "WITH",
            Keyword::Subsets => "SUBSETS",
            Keyword::Constrained => "CONSTRAINED",
            Keyword::By => "BY",
            Keyword::Apply => "APPLY",
            Keyword::Unary => "UNARY",
            Keyword::Union => "UNION",
            Keyword::Intersection => "INTERSECTION",
            Keyword::Cross => "CROSS",
            Keyword::Maximal => "MAXIMAL",
            Keyword::Minimal => "MINIMAL",
            Keyword::Group => "GROUP",
            Keyword::Having => "HAVING",
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Not => "NOT",
        }
    }

    pub fn lookup(word: &str) -> Option<Keyword> {
        Keyword::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(word))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    /// `table.column`
    Qualified(String, String),
    /// Unsigned numeric literal, as written.
    Number(String),
    Str(String),
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LParen,
    RParen,
    Comma,
    Star,
    Minus,
    Semicolon,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => f.write_str(k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Qualified(t, c) => write!(f, "identifier `{t}.{c}`"),
            TokenKind::Number(n) => write!(f, "number {n}"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Eq => f.write_str("`=`"),
            TokenKind::Ne => f.write_str("`!=`"),
            TokenKind::Lt => f.write_str("`<`"),
            TokenKind::Le => f.write_str("`<=`"),
            TokenKind::Gt => f.write_str("`>`"),
            TokenKind::Ge => f.write_str("`>=`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Semicolon => f.write_str("`;`"),
        }
    }
}

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

pub(crate) fn syntax_error(pos: Pos, message: impl Into<String>) -> Error {
    Error::Syntax {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|&c| pred(c)) {
            s.push(c);
            self.bump();
        }
        s
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits query text into tokens. `--` starts a comment running to the end
/// of the line.
pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, column: 1 },
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let pos = cur.pos;
        let kind = match c {
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '-' => {
                cur.bump();
                if cur.peek() == Some('-') {
                    cur.take_while(|c| c != '\n');
                    continue;
                }
                TokenKind::Minus
            }
            c if is_ident_start(c) => {
                let word = cur.take_while(is_ident_char);
                if cur.peek() == Some('.') {
                    cur.bump();
                    let col_pos = cur.pos;
                    let col = cur.take_while(is_ident_char);
                    if col.is_empty() || !col.starts_with(is_ident_start) {
                        return Err(syntax_error(
                            col_pos,
                            format!("expected a column name after `{word}.`"),
                        ));
                    }
                    TokenKind::Qualified(word, col)
                } else {
                    match Keyword::lookup(&word) {
                        Some(k) => TokenKind::Keyword(k),
                        None => TokenKind::Ident(word),
                    }
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut n = cur.take_while(|c| c.is_ascii_digit());
                if cur.peek() == Some('.') {
                    cur.bump();
                    let frac = cur.take_while(|c| c.is_ascii_digit());
                    if frac.is_empty() {
                        return Err(syntax_error(
                            cur.pos,
                            "expected digits after the decimal point",
                        ));
                    }
                    if n.is_empty() {
                        n.push('0');
                    }
                    n.push('.');
                    n.push_str(&frac);
                }
                if cur.peek().is_some_and(is_ident_start) {
                    return Err(syntax_error(cur.pos, "unexpected character after number"));
                }
                TokenKind::Number(n)
            }
            '"' | '\'' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(syntax_error(pos, "unterminated string literal")),
                        Some(q) if q == c => {
                            // A doubled quote stands for one literal quote.
                            if cur.peek() == Some(c) {
                                cur.bump();
                                s.push(c);
                            } else {
                                break;
                            }
                        }
                        Some(other) => s.push(other),
                    }
                }
                TokenKind::Str(s)
            }
            _ => {
                cur.bump();
                match c {
                    '=' => TokenKind::Eq,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    ',' => TokenKind::Comma,
                    '*' => TokenKind::Star,
                    ';' => TokenKind::Semicolon,
                    '!' if cur.peek() == Some('=') => {
                        cur.bump();
                        TokenKind::Ne
                    }
                    '<' => match cur.peek() {
                        Some('=') => {
                            cur.bump();
                            TokenKind::Le
                        }
                        Some('>') => {
                            cur.bump();
                            TokenKind::Ne
                        }
                        _ => TokenKind::Lt,
                    },
                    '>' if cur.peek() == Some('=') => {
                        cur.bump();
                        TokenKind::Ge
                    }
                    '>' => TokenKind::Gt,
                    other => return Err(syntax_error(pos, format!("illegal character `{other}`"))),
                }
            }
        };
        out.push(Token { kind, pos });
    }
    Ok(out)
}
