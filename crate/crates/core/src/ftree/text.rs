//! The f-tree text format.
//!
//! ```text
//! (ftree
//!   (deps (Orders Orders.item=Store.item Orders.oid) ...)
//!   (forest
//!     (node (attrs Orders.item Store.item)
//!       (children
//!         (node (attrs Orders.oid) (children))))))
//! ```
//!
//! Optional trailing sections `(hidden CLASS...)`, `(projected ATTR...)` and
//! `(const CLASS...)` carry projection and constant-selection state.

use std::fmt::Write as _;
use std::sync::Arc;

use super::{FTree, NodeId};
use crate::catalog::{AttrId, Schema};
use crate::error::{Error, Result};
use crate::sexpr::{self, error_at, Sexp};

const WHAT: &str = "ftree";

impl FTree {
    /// Class identifiers of the classes each atom touches, in the atom's
    /// attribute order.
    fn deps_lines(&self) -> Vec<(String, Vec<String>)> {
        let schema = self.schema();
        schema
            .atoms()
            .iter()
            .map(|atom| {
                let mut ids: Vec<String> = Vec::new();
                for &a in &atom.attrs {
                    let id = match self.node_of(a) {
                        Some(n) => self.class_id(n),
                        None => {
                            let class = self
                                .hidden()
                                .iter()
                                .find(|c| c.contains(&a))
                                .map(|c| c.as_slice())
                                .unwrap_or(std::slice::from_ref(&a));
                            schema.class_id(class)
                        }
                    };
                    if !ids.contains(&id) {
                        ids.push(id);
                    }
                }
                (atom.name.clone(), ids)
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("(ftree\n  (deps");
        for (atom, ids) in self.deps_lines() {
            let _ = write!(out, " ({atom}");
            for id in ids {
                let _ = write!(out, " {id}");
            }
            out.push(')');
        }
        out.push_str(")\n  (forest");
        for &r in self.roots() {
            out.push('\n');
            self.write_node(r, 2, &mut out);
        }
        out.push(')');
        if !self.hidden().is_empty() {
            out.push_str("\n  (hidden");
            for c in self.hidden() {
                let _ = write!(out, " {}", self.schema().class_id(c));
            }
            out.push(')');
        }
        let projected: Vec<&str> = (0..self.schema().attr_count() as AttrId)
            .filter(|&a| self.is_projected(a))
            .map(|a| self.schema().qualified(a))
            .collect();
        if !projected.is_empty() {
            let _ = write!(out, "\n  (projected {})", projected.join(" "));
        }
        let mut consts: Vec<String> = self
            .preorder()
            .into_iter()
            .filter(|&n| self.is_const(n))
            .map(|n| self.class_id(n))
            .collect();
        for (i, c) in self.hidden().iter().enumerate() {
            if self.hidden_is_const(i) {
                consts.push(self.schema().class_id(c));
            }
        }
        if !consts.is_empty() {
            let _ = write!(out, "\n  (const {})", consts.join(" "));
        }
        out.push_str(")\n");
        out
    }

    fn write_node(&self, n: NodeId, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        let mut names: Vec<&str> = self.label(n).iter().map(|&a| self.schema().qualified(a)).collect();
        names.sort_unstable();
        let _ = write!(out, "{pad}(node (attrs {}) (children", names.join(" "));
        for &c in self.children(n) {
            out.push('\n');
            self.write_node(c, depth + 1, out);
        }
        out.push_str("))");
    }

    /// Parses a tree. With a schema the attribute names are resolved
    /// against it; without one the schema is rebuilt from the `deps`
    /// section, each atom reading from a relation of the same name.
    pub fn parse(text: &str, schema: Option<&Arc<Schema>>) -> Result<FTree> {
        let top = sexpr::parse_one(text, WHAT)?;
        let items = top
            .tagged("ftree")
            .ok_or_else(|| error_at(WHAT, &top, "expected (ftree ...)"))?;
        let mut deps = None;
        let mut forest = None;
        let mut hidden = Vec::new();
        let mut projected = Vec::new();
        let mut consts = Vec::new();
        for item in items {
            if let Some(d) = item.tagged("deps") {
                deps = Some(d);
            } else if let Some(f) = item.tagged("forest") {
                forest = Some(f);
            } else if let Some(h) = item.tagged("hidden") {
                hidden.extend(h.iter());
            } else if let Some(p) = item.tagged("projected") {
                projected.extend(p.iter());
            } else if let Some(c) = item.tagged("const") {
                consts.extend(c.iter());
            } else {
                return Err(error_at(WHAT, item, "unknown section"));
            }
        }
        let deps = deps.ok_or_else(|| error_at(WHAT, &top, "missing (deps ...)"))?;
        let forest = forest.ok_or_else(|| error_at(WHAT, &top, "missing (forest ...)"))?;

        let mut dep_names = Vec::new();
        for d in deps {
            let list = d.as_list().ok_or_else(|| error_at(WHAT, d, "expected (ATOM CLASS...)"))?;
            let mut names = Vec::new();
            for x in list {
                names.push(
                    x.as_atom()
                        .ok_or_else(|| error_at(WHAT, x, "expected a name"))?
                        .to_owned(),
                );
            }
            if names.is_empty() {
                return Err(error_at(WHAT, d, "empty dependency set"));
            }
            dep_names.push((d, names));
        }

        let schema = match schema {
            Some(s) => {
                for (d, names) in &dep_names {
                    if !s.atoms().iter().any(|a| a.name == names[0]) {
                        return Err(error_at(WHAT, d, format!("unknown relation atom `{}`", names[0])));
                    }
                }
                if dep_names.len() != s.atoms().len() {
                    return Err(error_at(WHAT, &top, "dependency sets do not match the query's atoms"));
                }
                s.clone()
            }
            None => {
                let mut s = Schema::new();
                for (d, names) in &dep_names {
                    let atom = &names[0];
                    let prefix = format!("{atom}.");
                    let mut attrs: Vec<String> = Vec::new();
                    for class in &names[1..] {
                        for member in class.split('=') {
                            if let Some(attr) = member.strip_prefix(&prefix) {
                                if !attrs.iter().any(|a| a == attr) {
                                    attrs.push(attr.to_owned());
                                }
                            }
                        }
                    }
                    if attrs.is_empty() {
                        return Err(error_at(WHAT, d, format!("atom `{atom}` has no attributes")));
                    }
                    s.add_atom(atom, atom, attrs, None)
                        .map_err(|e| error_at(WHAT, d, e.to_string()))?;
                }
                Arc::new(s)
            }
        };

        let mut tree = FTree::new(schema.clone());
        for n in forest {
            parse_node(&mut tree, None, n)?;
        }
        let class_of = |x: &Sexp| -> Result<Vec<AttrId>> {
            let id = x.as_atom().ok_or_else(|| error_at(WHAT, x, "expected a class id"))?;
            id.split('=')
                .map(|m| schema.lookup(m).map_err(|e| error_at(WHAT, x, e.to_string())))
                .collect()
        };
        let mut hidden_classes = Vec::new();
        for h in hidden {
            hidden_classes.push(class_of(h)?);
        }
        let mut hidden_const = vec![false; hidden_classes.len()];
        let mut node_consts = Vec::new();
        for c in consts {
            let mut class = class_of(c)?;
            class.sort_unstable();
            match hidden_classes.iter().position(|h| {
                let mut h = h.clone();
                h.sort_unstable();
                h == class
            }) {
                Some(i) => hidden_const[i] = true,
                None => node_consts.push((c, class)),
            }
        }
        tree.set_hidden(hidden_classes, hidden_const);
        for p in projected {
            let name = p.as_atom().ok_or_else(|| error_at(WHAT, p, "expected an attribute"))?;
            let a = schema.lookup(name).map_err(|e| error_at(WHAT, p, e.to_string()))?;
            tree.mark_projected(&[a]);
        }
        for (c, class) in node_consts {
            let node = tree
                .node_of(class[0])
                .filter(|&n| tree.label(n) == class.as_slice())
                .ok_or_else(|| error_at(WHAT, c, "constant class labels no node"))?;
            if tree.parent(node).is_some() || !tree.children(node).is_empty() {
                return Err(error_at(WHAT, c, "constant nodes must be leaf roots"));
            }
            tree.set_const(node, true);
        }
        tree.validate()?;
        if let Err(v) = tree.check_path_constraint() {
            return Err(Error::InvalidTree(format!(
                "classes {} and {} of dependency set {{{}}} are not on one path",
                v.classes.0,
                v.classes.1,
                v.dependency.join(",")
            )));
        }
        Ok(tree)
    }
}

fn parse_node(tree: &mut FTree, parent: Option<NodeId>, s: &Sexp) -> Result<()> {
    let items = s
        .tagged("node")
        .ok_or_else(|| error_at(WHAT, s, "expected (node ...)"))?;
    let attrs = items
        .first()
        .and_then(|x| x.tagged("attrs"))
        .ok_or_else(|| error_at(WHAT, s, "expected (attrs ...)"))?;
    let mut label = Vec::new();
    for a in attrs {
        let name = a.as_atom().ok_or_else(|| error_at(WHAT, a, "expected an attribute"))?;
        label.push(
            tree.schema()
                .lookup(name)
                .map_err(|e| error_at(WHAT, a, e.to_string()))?,
        );
    }
    let id = tree
        .add_node(parent, &label)
        .map_err(|e| error_at(WHAT, s, e.to_string()))?;
    match items.get(1) {
        Some(c) => {
            let kids = c
                .tagged("children")
                .ok_or_else(|| error_at(WHAT, c, "expected (children ...)"))?;
            for k in kids {
                parse_node(tree, Some(id), k)?;
            }
        }
        None => {}
    }
    if items.len() > 2 {
        return Err(error_at(WHAT, &items[2], "unexpected node item"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "(ftree (deps (R R.A=S.D R.B R.C) (S R.A=S.D S.E S.F))
        (forest (node (attrs R.A S.D) (children
            (node (attrs R.B) (children (node (attrs R.C) (children))))
            (node (attrs S.E) (children (node (attrs S.F) (children))))))))";

    #[test]
    fn round_trips() {
        let t = FTree::parse(EXAMPLE, None).unwrap();
        assert_eq!(t.node_count(), 5);
        let text = t.to_text();
        let again = FTree::parse(&text, None).unwrap();
        assert_eq!(again.to_text(), text);
        assert!(again.same_shape(&t));
    }

    #[test]
    fn rejects_path_violations() {
        let bad = "(ftree (deps (R R.A R.B)) (forest (node (attrs R.A) (children)) (node (attrs R.B) (children))))";
        assert!(matches!(FTree::parse(bad, None), Err(Error::InvalidTree(_))));
    }

    #[test]
    fn rejects_missing_attributes() {
        let bad = "(ftree (deps (R R.A R.B)) (forest (node (attrs R.A) (children))))";
        assert!(matches!(FTree::parse(bad, None), Err(Error::InvalidTree(_))));
        assert!(FTree::parse("(ftree (deps (R R.A)) (forest (node (attrs R.Z))))", None)
            .unwrap_err()
            .is_parse());
    }
}
