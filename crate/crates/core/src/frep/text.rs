//! The representation text format.
//!
//! `E` is the empty relation and `()` the nullary one. A union over a node
//! is `(u (v VALUE SUB?) ...)` with ascending values; `SUB` is omitted for
//! leaves, is the child's union for nodes with one child, and is a product
//! `(x UNION UNION ...)` otherwise. A forest with several roots is a product
//! of the root unions. Unions appear in the child order of the companion
//! f-tree.

use super::{FRep, Group, Union};
use crate::error::Result;
use crate::ftree::{FTree, NodeId};
use crate::sexpr::{self, error_at, Sexp};
use crate::value::Value;

const WHAT: &str = "frep";

impl FRep {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self.roots() {
            None => out.push('E'),
            Some([]) => out.push_str("()"),
            Some([u]) => write_union(u, &mut out),
            Some(us) => write_product(us, &mut out),
        }
        out.push('\n');
        out
    }

    /// Reads a representation over `tree`, checking that it conforms to the
    /// tree and that every union is strictly ascending.
    pub fn parse(text: &str, tree: &FTree) -> Result<FRep> {
        let trimmed = text.trim();
        if trimmed == "E" {
            return Ok(FRep::empty(tree.clone()));
        }
        let top = sexpr::parse_one(text, WHAT)?;
        let roots = tree.roots();
        let unions = match top.as_list() {
            Some([]) if roots.is_empty() => Vec::new(),
            _ => read_factors(tree, roots, &top)?,
        };
        let rep = FRep::new(tree.clone(), Some(unions));
        rep.validate()?;
        Ok(rep)
    }
}

fn write_union(u: &Union, out: &mut String) {
    out.push_str("(u");
    for g in &u.groups {
        out.push_str(" (v ");
        out.push_str(&g.value.to_sexpr_token());
        match g.children.as_slice() {
            [] => {}
            [c] => {
                out.push(' ');
                write_union(c, out);
            }
            cs => {
                out.push(' ');
                write_product(cs, out);
            }
        }
        out.push(')');
    }
    out.push(')');
}

fn write_product(us: &[Union], out: &mut String) {
    out.push_str("(x");
    for u in us {
        out.push(' ');
        write_union(u, out);
    }
    out.push(')');
}

/// Reads the unions over `nodes`: a single union, or a product of one
/// union per node.
fn read_factors(tree: &FTree, nodes: &[NodeId], s: &Sexp) -> Result<Vec<Union>> {
    match nodes {
        [] => Err(error_at(WHAT, s, "sub-expression where the tree has no node")),
        [n] => Ok(vec![read_union(tree, *n, s)?]),
        _ => {
            let items = s
                .tagged("x")
                .ok_or_else(|| error_at(WHAT, s, format!("expected a product of {} unions", nodes.len())))?;
            if items.len() != nodes.len() {
                return Err(error_at(
                    WHAT,
                    s,
                    format!("product has {} factors, the tree has {}", items.len(), nodes.len()),
                ));
            }
            nodes
                .iter()
                .zip(items)
                .map(|(&n, x)| read_union(tree, n, x))
                .collect()
        }
    }
}

fn read_union(tree: &FTree, n: NodeId, s: &Sexp) -> Result<Union> {
    let items = s
        .tagged("u")
        .ok_or_else(|| error_at(WHAT, s, format!("expected a union over {}", tree.class_id(n))))?;
    let domain = tree
        .label(n)
        .iter()
        .find_map(|&a| tree.schema().attr(a).domain);
    let kids = tree.children(n);
    let mut groups: Vec<Group> = Vec::with_capacity(items.len());
    for item in items {
        let parts = item
            .tagged("v")
            .ok_or_else(|| error_at(WHAT, item, "expected (v VALUE ...)"))?;
        let value = match parts.first() {
            Some(Sexp::Atom { text, quoted: true, .. }) => Value::str(text),
            Some(Sexp::Atom { text, quoted: false, .. }) => Value::from_token(text),
            Some(other) => return Err(error_at(WHAT, other, "expected a value")),
            None => return Err(error_at(WHAT, item, "missing value")),
        };
        if let Some(d) = domain {
            if value.domain() != d {
                return Err(error_at(
                    WHAT,
                    &parts[0],
                    format!("expected a value of domain {d}, found {}", value.to_sexpr_token()),
                ));
            }
        }
        if let Some(prev) = groups.last() {
            if prev.value >= value {
                return Err(error_at(
                    WHAT,
                    &parts[0],
                    format!("values of {} are not strictly ascending", tree.class_id(n)),
                ));
            }
        }
        let children = match (kids.len(), parts.len()) {
            (0, 1) => Vec::new(),
            (0, _) => return Err(error_at(WHAT, &parts[1], "leaf value with a sub-expression")),
            (_, 2) => read_factors(tree, kids, &parts[1])?,
            _ => return Err(error_at(WHAT, item, format!("expected one sub-expression for {} children", kids.len()))),
        };
        groups.push(Group { value, children });
    }
    if groups.is_empty() {
        return Err(error_at(WHAT, s, "empty union"));
    }
    Ok(Union { groups })
}
