//! Data values: 64-bit integers and interned strings.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Mutex, OnceLock};

/// An interned string. Equal contents share one allocation, so equality and
/// hashing work on the pointer while ordering is bytewise on the contents.
#[derive(Clone, Copy)]
pub struct Symbol(&'static str);

fn interner() -> &'static Mutex<HashSet<&'static str>> {
    static INTERNER: OnceLock<Mutex<HashSet<&'static str>>> = OnceLock::new();
    INTERNER.get_or_init(|| Mutex::new(HashSet::new()))
}

impl Symbol {
    pub fn intern(s: &str) -> Symbol {
        let mut set = interner().lock().expect("interner poisoned");
        if let Some(existing) = set.get(s) {
            return Symbol(existing);
        }
        let leaked: &'static str = Box::leak(s.to_owned().into_boxed_str());
        set.insert(leaked);
        Symbol(leaked)
    }

    pub fn as_str(&self) -> &'static str {
        self.0
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.0.as_ptr(), other.0.as_ptr()) && self.0.len() == other.0.len()
    }
}

impl Eq for Symbol {}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.0.as_ptr() as usize).hash(state);
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            Ordering::Equal
        } else {
            self.0.as_bytes().cmp(other.0.as_bytes())
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// The value domain of a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Int,
    Str,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Int => f.write_str("integer"),
            Domain::Str => f.write_str("string"),
        }
    }
}

/// A single data value. Columns are homogeneous, so the derived ordering
/// (integers before strings) never compares values of different domains.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Str(Symbol),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Symbol::intern(s))
    }

    /// Reads an unquoted token. Only canonical decimal integers (no leading
    /// zeros, no `+`) become integers, so `01` stays the string "01".
    pub fn from_token(token: &str) -> Value {
        match canonical_int(token) {
            Some(i) => Value::Int(i),
            None => Value::str(token),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Value::Int(_) => Domain::Int,
            Value::Str(_) => Domain::Str,
        }
    }

    /// Renders the value for the s-expression formats, quoting strings that
    /// would otherwise not read back as the same value.
    pub fn to_sexpr_token(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Str(s) => {
                let s = s.as_str();
                if needs_quotes(s) {
                    let mut out = String::with_capacity(s.len() + 2);
                    out.push('"');
                    for c in s.chars() {
                        if c == '"' || c == '\\' {
                            out.push('\\');
                        }
                        out.push(c);
                    }
                    out.push('"');
                    out
                } else {
                    s.to_owned()
                }
            }
        }
    }
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s == "E"
        || canonical_int(s).is_some()
        || s
            .chars()
            .any(|c| c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == '\\')
}

pub(crate) fn canonical_int(token: &str) -> Option<i64> {
    let i: i64 = token.parse().ok()?;
    if i.to_string() == token {
        Some(i)
    } else {
        None
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => f.write_str(s.as_str()),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "{:?}", s.as_str()),
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::str(s)
    }
}
