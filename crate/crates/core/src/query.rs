//! Select-project-join queries and their text syntax.
//!
//! ```text
//! RELATIONS Orders(oid,item); Store(location,item) AS S
//! WHERE Orders.item = Store.item AND Orders.oid != "02"
//! PROJECT Orders.oid, Orders.item
//! ```
//!
//! Atoms bind attribute names positionally to the stored relation's
//! columns; `R AS S(C,D)` introduces a second atom over relation `R`. An
//! atom without an attribute list takes the column names of the stored
//! relation, which requires parsing against a [`Database`].

use std::fmt;
use std::sync::Arc;

use crate::catalog::{AttrId, Database, Schema};
use crate::error::{Error, Result};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn eval(self, lhs: &Value, rhs: &Value) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
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

    pub fn from_symbol(s: &str) -> Option<CmpOp> {
        Some(match s {
            "=" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A comparison of an attribute with a constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstPredicate {
    pub attr: AttrId,
    pub op: CmpOp,
    pub value: Value,
}

#[derive(Clone, Debug)]
pub struct Query {
    schema: Arc<Schema>,
    equalities: Vec<(AttrId, AttrId)>,
    constants: Vec<ConstPredicate>,
    projection: Option<Vec<AttrId>>,
}

impl Query {
    /// A query over the atoms of `schema` with no conditions.
    pub fn new(schema: Arc<Schema>) -> Query {
        Query {
            schema,
            equalities: Vec::new(),
            constants: Vec::new(),
            projection: None,
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn equalities(&self) -> &[(AttrId, AttrId)] {
        &self.equalities
    }

    pub fn constants(&self) -> &[ConstPredicate] {
        &self.constants
    }

    /// Projection list, or `None` for all attributes.
    pub fn projection(&self) -> Option<&[AttrId]> {
        self.projection.as_deref()
    }

    /// The projection list with `None` expanded to every attribute.
    pub fn output_attrs(&self) -> Vec<AttrId> {
        match &self.projection {
            Some(p) => p.clone(),
            None => (0..self.schema.attr_count() as AttrId).collect(),
        }
    }

    pub fn equal(mut self, a: &str, b: &str) -> Result<Query> {
        let (a, b) = (self.schema.lookup(a)?, self.schema.lookup(b)?);
        self.equalities.push((a, b));
        Ok(self)
    }

    pub fn select(mut self, a: &str, op: CmpOp, value: Value) -> Result<Query> {
        let attr = self.schema.lookup(a)?;
        self.constants.push(ConstPredicate { attr, op, value });
        Ok(self)
    }

    pub fn project(mut self, attrs: &[&str]) -> Result<Query> {
        let ids = attrs
            .iter()
            .map(|a| self.schema.lookup(a))
            .collect::<Result<Vec<_>>>()?;
        self.projection = Some(ids);
        Ok(self)
    }

    pub fn push_equality(&mut self, a: AttrId, b: AttrId) {
        self.equalities.push((a, b));
    }

    pub fn set_projection(&mut self, attrs: Option<Vec<AttrId>>) {
        self.projection = attrs;
    }

    /// Parses a query whose atoms all carry explicit attribute lists.
    pub fn parse(text: &str) -> Result<Query> {
        Parser::new(text)?.query(None)
    }

    /// Parses a query against a database: omitted attribute lists are taken
    /// from the stored relations, and the query is validated against them.
    pub fn parse_with(text: &str, db: &Database) -> Result<Query> {
        let q = Parser::new(text)?.query(Some(db))?;
        q.validate(db)?;
        Ok(q)
    }

    /// Checks that every atom names a stored relation of matching arity and
    /// that constants match the domains of their columns.
    pub fn validate(&self, db: &Database) -> Result<()> {
        for atom in self.schema.atoms() {
            let rel = db.relation(&atom.relation)?;
            if rel.arity() != atom.attrs.len() {
                return Err(Error::Other(format!(
                    "atom {} lists {} attributes but relation {} has {}",
                    atom.name,
                    atom.attrs.len(),
                    rel.name(),
                    rel.arity()
                )));
            }
        }
        for c in &self.constants {
            let attr = self.schema.attr(c.attr);
            let rel = db.relation(&attr.relation)?;
            if !rel.is_empty() && rel.domains()[attr.column] != c.value.domain() {
                return Err(Error::TypeMismatch(format!(
                    "{} holds {} values, compared with {} constant {}",
                    self.schema.qualified(c.attr),
                    rel.domains()[attr.column],
                    c.value.domain(),
                    c.value.to_sexpr_token()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RELATIONS ")?;
        for (i, atom) in self.schema.atoms().iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            if atom.name == atom.relation {
                write!(f, "{}(", atom.name)?;
            } else {
                write!(f, "{} AS {}(", atom.relation, atom.name)?;
            }
            for (j, &a) in atom.attrs.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                f.write_str(&self.schema.attr(a).name)?;
            }
            f.write_str(")")?;
        }
        let mut conds: Vec<String> = self
            .equalities
            .iter()
            .map(|&(a, b)| format!("{} = {}", self.schema.qualified(a), self.schema.qualified(b)))
            .collect();
        conds.extend(self.constants.iter().map(|c| {
            let v = match c.value {
                Value::Int(i) => i.to_string(),
                Value::Str(_) => format!("\"{}\"", c.value.to_string().replace('\\', "\\\\").replace('"', "\\\"")),
            };
            format!("{} {} {}", self.schema.qualified(c.attr), c.op, v)
        }));
        if !conds.is_empty() {
            write!(f, " WHERE {}", conds.join(" AND "))?;
        }
        if let Some(p) = &self.projection {
            let names: Vec<&str> = p.iter().map(|&a| self.schema.qualified(a)).collect();
            write!(f, " PROJECT {}", names.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Sym(&'static str),
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

const WHAT: &str = "query";

impl Parser {
    fn new(text: &str) -> Result<Parser> {
        let mut toks = Vec::new();
        let chars: Vec<char> = text.chars().collect();
        let (mut i, mut line, mut col) = (0, 1, 1);
        while i < chars.len() {
            let c = chars[i];
            let (l0, c0) = (line, col);
            let advance = |i: &mut usize, line: &mut usize, col: &mut usize, ch: char| {
                *i += 1;
                if ch == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
            };
            if c.is_whitespace() {
                advance(&mut i, &mut line, &mut col, c);
                continue;
            }
            if c == '-' && chars.get(i + 1) == Some(&'-') {
                while i < chars.len() && chars[i] != '\n' {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    s.push(chars[i]);
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
                toks.push((Tok::Ident(s), l0, c0));
            } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
                let mut s = String::new();
                s.push(c);
                advance(&mut i, &mut line, &mut col, c);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
                match crate::value::canonical_int(&s) {
                    Some(v) => toks.push((Tok::Int(v), l0, c0)),
                    None => toks.push((Tok::Str(s), l0, c0)),
                }
            } else if c == '"' {
                advance(&mut i, &mut line, &mut col, c);
                let mut s = String::new();
                loop {
                    let Some(&ch) = chars.get(i) else {
                        return Err(Error::parse(WHAT, l0, c0, "unterminated string"));
                    };
                    advance(&mut i, &mut line, &mut col, ch);
                    match ch {
                        '"' => break,
                        '\\' => {
                            let Some(&esc) = chars.get(i) else {
                                return Err(Error::parse(WHAT, l0, c0, "unterminated string"));
                            };
                            advance(&mut i, &mut line, &mut col, esc);
                            s.push(esc);
                        }
                        _ => s.push(ch),
                    }
                }
                toks.push((Tok::Str(s), l0, c0));
            } else {
                let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
                let sym = match two.as_str() {
                    "!=" => Some("!="),
                    "<=" => Some("<="),
                    ">=" => Some(">="),
                    "<>" => Some("!="),
                    _ => None,
                };
                if let Some(s) = sym {
                    advance(&mut i, &mut line, &mut col, c);
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                    toks.push((Tok::Sym(s), l0, c0));
                    continue;
                }
                let s = match c {
                    '(' => "(",
                    ')' => ")",
                    ';' => ";",
                    ',' => ",",
                    '.' => ".",
                    '=' => "=",
                    '<' => "<",
                    '>' => ">",
                    _ => {
                        return Err(Error::parse(WHAT, l0, c0, format!("unexpected character `{c}`")))
                    }
                };
                advance(&mut i, &mut line, &mut col, c);
                toks.push((Tok::Sym(s), l0, c0));
            }
        }
        Ok(Parser { toks, pos: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(&(_, l, c)) => (l, c),
            None => (1, 1),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (l, c) = self.here();
        Err(Error::parse(WHAT, l, c, msg))
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        if self.is_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {kw}"))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(t)) if *t == s)
    }

    fn sym(&mut self, s: &str) -> Result<()> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected a name"),
        }
    }

    fn query(&mut self, db: Option<&Database>) -> Result<Query> {
        self.keyword("RELATIONS")?;
        let mut schema = Schema::new();
        loop {
            let (l, c) = self.here();
            let relation = self.ident()?;
            let name = if self.is_keyword("AS") {
                self.pos += 1;
                self.ident()?
            } else {
                relation.clone()
            };
            let attrs = if self.is_sym("(") {
                self.pos += 1;
                let mut attrs = vec![self.ident()?];
                while self.is_sym(",") {
                    self.pos += 1;
                    attrs.push(self.ident()?);
                }
                self.sym(")")?;
                attrs
            } else {
                match db {
                    Some(db) => db.relation(&relation)?.columns().to_vec(),
                    None => {
                        return Err(Error::parse(WHAT, l, c, format!("atom {name} needs an attribute list")))
                    }
                }
            };
            if let Err(e) = schema.add_atom(&name, &relation, attrs, None) {
                return Err(Error::parse(WHAT, l, c, e.to_string()));
            }
            if self.is_sym(";") {
                self.pos += 1;
                continue;
            }
            break;
        }
        if let Some(db) = db {
            for i in 0..schema.attr_count() as AttrId {
                let attr = schema.attr(i).clone();
                if let Ok(rel) = db.relation(&attr.relation) {
                    if attr.column < rel.arity() && !rel.is_empty() {
                        schema.set_domain(i, rel.domains()[attr.column]);
                    }
                }
            }
        }
        let mut q = Query::new(Arc::new(schema));
        if self.is_keyword("WHERE") {
            self.pos += 1;
            loop {
                self.condition(&mut q)?;
                if self.is_keyword("AND") {
                    self.pos += 1;
                    continue;
                }
                break;
            }
        }
        if self.is_keyword("PROJECT") {
            self.pos += 1;
            let mut attrs = vec![self.attr(&q)?];
            while self.is_sym(",") {
                self.pos += 1;
                attrs.push(self.attr(&q)?);
            }
            q.projection = Some(attrs);
        }
        if self.pos < self.toks.len() {
            return self.err("unexpected trailing input");
        }
        Ok(q)
    }

    fn attr(&mut self, q: &Query) -> Result<AttrId> {
        let (l, c) = self.here();
        let atom = self.ident()?;
        self.sym(".")?;
        let name = self.ident()?;
        let qualified = format!("{atom}.{name}");
        q.schema.lookup(&qualified).map_err(|_| {
            Error::parse(WHAT, l, c, format!("unknown attribute `{qualified}`"))
        })
    }

    fn condition(&mut self, q: &mut Query) -> Result<()> {
        let lhs = self.attr(q)?;
        let op = match self.peek() {
            Some(Tok::Sym(s)) => match CmpOp::from_symbol(s) {
                Some(op) => op,
                None => return self.err("expected a comparison"),
            },
            _ => return self.err("expected a comparison"),
        };
        self.pos += 1;
        let is_attr = matches!(self.peek(), Some(Tok::Ident(_)))
            && matches!(self.toks.get(self.pos + 1), Some((Tok::Sym("."), _, _)));
        if is_attr {
            if op != CmpOp::Eq {
                return self.err("attribute comparisons must be equalities");
            }
            let rhs = self.attr(q)?;
            q.equalities.push((lhs, rhs));
            return Ok(());
        }
        let value = match self.peek() {
            Some(Tok::Int(i)) => Value::Int(*i),
            Some(Tok::Str(s)) => Value::str(s),
            Some(Tok::Ident(s)) => Value::str(s),
            _ => return self.err("expected a constant"),
        };
        self.pos += 1;
        if let Some(d) = q.schema.attr(lhs).domain {
            if d != value.domain() {
                return Err(Error::TypeMismatch(format!(
                    "{} holds {d} values, compared with {} constant {}",
                    q.schema.qualified(lhs),
                    value.domain(),
                    value.to_sexpr_token()
                )));
            }
        }
        q.constants.push(ConstPredicate { attr: lhs, op, value });
        Ok(())
    }
}
