//! Minimal s-expression reader for the text formats.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Sexp {
    Atom {
        text: String,
        quoted: bool,
        line: usize,
        col: usize,
    },
    List {
        items: Vec<Sexp>,
        line: usize,
        col: usize,
    },
}

impl Sexp {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom { line, col, .. } | Sexp::List { line, col, .. } => (*line, *col),
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            _ => None,
        }
    }

    /// The items of a list whose head is the bare atom `head`.
    pub fn tagged(&self, head: &str) -> Option<&[Sexp]> {
        let items = self.as_list()?;
        match items.first() {
            Some(Sexp::Atom { text, quoted: false, .. }) if text == head => Some(&items[1..]),
            _ => None,
        }
    }
}

pub(crate) fn error_at(what: &str, s: &Sexp, msg: impl Into<String>) -> Error {
    let (l, c) = s.pos();
    Error::parse(what, l, c, msg)
}

/// Reads exactly one expression from `text`.
pub(crate) fn parse_one(text: &str, what: &str) -> Result<Sexp> {
    let mut r = Reader {
        chars: text.chars().collect(),
        i: 0,
        line: 1,
        col: 1,
        what,
    };
    r.skip_ws();
    if r.i >= r.chars.len() {
        return Err(Error::parse(what, 1, 1, "empty input"));
    }
    let s = r.expr()?;
    r.skip_ws();
    if r.i < r.chars.len() {
        return Err(Error::parse(what, r.line, r.col, "unexpected trailing input"));
    }
    Ok(s)
}

struct Reader<'a> {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
    what: &'a str,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = *self.chars.get(self.i)?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.i).is_some_and(|c| c.is_whitespace()) {
            self.bump();
        }
    }

    fn expr(&mut self) -> Result<Sexp> {
        let (line, col) = (self.line, self.col);
        match self.chars[self.i] {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.get(self.i) {
                        None => return Err(Error::parse(self.what, line, col, "unclosed `(`")),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List { items, line, col });
                        }
                        Some(_) => items.push(self.expr()?),
                    }
                }
            }
            ')' => Err(Error::parse(self.what, line, col, "unexpected `)`")),
            '"' => {
                self.bump();
                let mut text = String::new();
                loop {
                    match self.bump() {
                        None => return Err(Error::parse(self.what, line, col, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(c) => text.push(c),
                            None => {
                                return Err(Error::parse(self.what, line, col, "unterminated string"))
                            }
                        },
                        Some(c) => text.push(c),
                    }
                }
                Ok(Sexp::Atom { text, quoted: true, line, col })
            }
            _ => {
                let mut text = String::new();
                while let Some(&c) = self.chars.get(self.i) {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                Ok(Sexp::Atom { text, quoted: false, line, col })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_strings() {
        let s = parse_one("(u (v \"a b\") (v x))", "t").unwrap();
        let items = s.tagged("u").unwrap();
        assert_eq!(items.len(), 2);
        let v = items[0].tagged("v").unwrap();
        assert_eq!(v[0], Sexp::Atom { text: "a b".into(), quoted: true, line: 1, col: 7 });
    }

    #[test]
    fn reports_unbalanced_input() {
        assert!(parse_one("(u (v a)", "t").unwrap_err().is_parse());
        assert!(parse_one("(u) x", "t").unwrap_err().is_parse());
    }
}
