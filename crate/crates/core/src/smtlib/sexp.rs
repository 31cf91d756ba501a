//! S-expression reader shared by the problem parser and the solver-model
//! parser.

use std::fmt;

use num_bigint::BigInt;

use crate::error::{Error, Result};

/// Maximum list nesting accepted by the reader.
pub const MAX_DEPTH: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Numeral(BigInt),
    /// Simple or `|quoted|` symbol (bars stripped).
    Symbol(String),
    Keyword(String),
    Str(String),
    /// Decimals, hex and binary literals; parsed but never supported.
    Other(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(Atom, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn symbol(&self) -> Option<&str> {
        match self {
            SExpr::Atom(Atom::Symbol(s), _) => Some(s),
            _ => None,
        }
    }

    pub fn is_symbol(&self, name: &str) -> bool {
        self.symbol() == Some(name)
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(xs, _) => Some(xs),
            _ => None,
        }
    }

    pub fn syntax_error(&self, msg: impl Into<String>) -> Error {
        let p = self.pos();
        Error::Syntax {
            line: p.line,
            col: p.col,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a, _) => match a {
                Atom::Numeral(n) => write!(f, "{n}"),
                Atom::Symbol(s) => f.write_str(&super::print::quote_symbol(s)),
                Atom::Keyword(k) => write!(f, ":{k}"),
                Atom::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
                Atom::Other(s) => f.write_str(s),
            },
            SExpr::List(xs, _) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, msg: &str) -> Error {
        Error::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.to_string(),
        }
    }

    fn skip_blank(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
}

/// Reads every top-level s-expression in `text`.
pub fn read_all(text: &str) -> Result<Vec<SExpr>> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    // open lists: (start position, items)
    let mut stack: Vec<(Pos, Vec<SExpr>)> = Vec::new();
    loop {
        cur.skip_blank();
        let pos = cur.pos();
        let Some(c) = cur.peek() else {
            if !stack.is_empty() {
                return Err(cur.error("unexpected end of input: unbalanced `(`"));
            }
            return Ok(out);
        };
        let item = match c {
            '(' => {
                cur.bump();
                if stack.len() >= MAX_DEPTH {
                    return Err(cur.error("nesting too deep"));
                }
                stack.push((pos, Vec::new()));
                continue;
            }
            ')' => {
                cur.bump();
                let (start, items) = stack.pop().ok_or_else(|| cur.error("unbalanced `)`"))?;
                SExpr::List(items, start)
            }
            '"' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(cur.error("unterminated string literal")),
                        Some('"') if cur.peek() == Some('"') => {
                            cur.bump();
                            s.push('"');
                        }
                        Some('"') => break,
                        Some(ch) => s.push(ch),
                    }
                }
                SExpr::Atom(Atom::Str(s), pos)
            }
            '|' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(cur.error("unterminated quoted symbol")),
                        Some('|') => break,
                        Some('\\') => return Err(cur.error("backslash in quoted symbol")),
                        Some(ch) => s.push(ch),
                    }
                }
                SExpr::Atom(Atom::Symbol(s), pos)
            }
            ':' => {
                cur.bump();
                let mut s = String::new();
                while let Some(ch) = cur.peek().filter(|&ch| is_symbol_char(ch)) {
                    s.push(ch);
                    cur.bump();
                }
                SExpr::Atom(Atom::Keyword(s), pos)
            }
            c if is_symbol_char(c) || c == '#' => {
                let mut s = String::new();
                while let Some(ch) = cur.peek().filter(|&ch| is_symbol_char(ch) || ch == '#') {
                    s.push(ch);
                    cur.bump();
                }
                SExpr::Atom(classify(s), pos)
            }
            _ => return Err(cur.error(&format!("unexpected character `{c}`"))),
        };
        match stack.last_mut() {
            Some((_, items)) => items.push(item),
            None => out.push(item),
        }
    }
}

fn classify(s: String) -> Atom {
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if digits(&s) {
        return Atom::Numeral(s.parse().expect("digits"));
    }
    if let Some(rest) = s.strip_prefix('-') {
        if digits(rest) {
            return Atom::Numeral(s.parse().expect("signed digits"));
        }
    }
    let first = s.chars().next().unwrap_or(' ');
    if first.is_ascii_digit() || first == '#' {
        return Atom::Other(s);
    }
    Atom::Symbol(s)
}
