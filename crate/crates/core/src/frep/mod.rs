//! Factorised representations.
//!
//! A representation over a forest is a product with one union per root; a
//! union holds groups `(value, children)` in strictly ascending value order,
//! where `children` has one union per child node of the union's f-tree node,
//! in the tree's child order. Empty unions never occur inside a
//! representation: emptiness propagates to the whole expression.

mod construct;
mod enumerate;
mod text;

use crate::catalog::AttrId;
use crate::error::{Error, Result};
use crate::ftree::{FTree, NodeId};
use crate::value::Value;

pub use construct::{factorise, factorise_with};
pub use enumerate::Tuples;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Union {
    pub groups: Vec<Group>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub value: Value,
    pub children: Vec<Union>,
}

impl Union {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn find(&self, v: &Value) -> Option<&Group> {
        self.groups
            .binary_search_by(|g| g.value.cmp(v))
            .ok()
            .map(|i| &self.groups[i])
    }
}

/// A factorised relation together with its f-tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FRep {
    tree: FTree,
    /// `None` is the empty relation; otherwise one union per root. A tree
    /// without nodes and an empty list is the nullary relation.
    roots: Option<Vec<Union>>,
}

impl PartialEq for FTree {
    fn eq(&self, other: &Self) -> bool {
        self.to_text() == other.to_text()
    }
}

impl Eq for FTree {}

impl FRep {
    pub fn new(tree: FTree, roots: Option<Vec<Union>>) -> FRep {
        let roots = match roots {
            Some(r) if r.iter().any(Union::is_empty) => None,
            other => other,
        };
        FRep { tree, roots }
    }

    pub fn empty(tree: FTree) -> FRep {
        FRep { tree, roots: None }
    }

    pub fn tree(&self) -> &FTree {
        &self.tree
    }

    pub fn roots(&self) -> Option<&[Union]> {
        self.roots.as_deref()
    }

    pub fn into_parts(self) -> (FTree, Option<Vec<Union>>) {
        (self.tree, self.roots)
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_none()
    }

    /// Number of singletons. Each value of a node contributes one singleton
    /// per attribute of the node that is not projected away.
    pub fn size(&self) -> u64 {
        fn go(t: &FTree, n: NodeId, u: &Union) -> u64 {
            let own = (u.groups.len() * t.visible(n)) as u64;
            let kids = t.children(n);
            own + u
                .groups
                .iter()
                .map(|g| kids.iter().zip(&g.children).map(|(&c, cu)| go(t, c, cu)).sum::<u64>())
                .sum::<u64>()
        }
        match &self.roots {
            None => 0,
            Some(r) => self.tree.roots().iter().zip(r).map(|(&n, u)| go(&self.tree, n, u)).sum(),
        }
    }

    /// Number of represented tuples, without enumerating them. Saturates
    /// at `u128::MAX`.
    pub fn count_tuples(&self) -> u128 {
        fn go(u: &Union) -> u128 {
            u.groups
                .iter()
                .map(|g| g.children.iter().map(go).fold(1u128, u128::saturating_mul))
                .fold(0u128, u128::saturating_add)
        }
        match &self.roots {
            None => 0,
            Some(r) => r.iter().map(go).fold(1u128, u128::saturating_mul),
        }
    }

    /// Attributes of the enumerated tuples, in tree preorder.
    pub fn columns(&self) -> Vec<AttrId> {
        self.tree.visible_attrs()
    }

    /// Streams the represented tuples in nested-union order.
    pub fn tuples(&self) -> Tuples<'_> {
        Tuples::new(self)
    }

    /// All tuples, materialised.
    pub fn enumerate(&self) -> Vec<Vec<Value>> {
        self.tuples().collect()
    }

    /// Checks conformance to the tree, the strict ascending order of every
    /// union, and the absence of empty unions.
    pub fn validate(&self) -> Result<()> {
        fn go(t: &FTree, n: NodeId, u: &Union) -> Result<()> {
            if u.groups.is_empty() {
                return Err(Error::InvalidTree(format!("empty union over {}", t.class_id(n))));
            }
            for w in u.groups.windows(2) {
                if w[0].value >= w[1].value {
                    return Err(Error::InvalidTree(format!(
                        "union over {} is not strictly ascending at {}",
                        t.class_id(n),
                        w[1].value.to_sexpr_token()
                    )));
                }
            }
            let kids = t.children(n);
            for g in &u.groups {
                if g.children.len() != kids.len() {
                    return Err(Error::InvalidTree(format!(
                        "value {} of {} has {} sub-expressions, the tree has {} children",
                        g.value.to_sexpr_token(),
                        t.class_id(n),
                        g.children.len(),
                        kids.len()
                    )));
                }
                for (&c, cu) in kids.iter().zip(&g.children) {
                    go(t, c, cu)?;
                }
            }
            if t.is_const(n) && u.groups.len() != 1 {
                return Err(Error::InvalidTree(format!("constant node {} has several values", t.class_id(n))));
            }
            Ok(())
        }
        if let Some(r) = &self.roots {
            if r.len() != self.tree.roots().len() {
                return Err(Error::InvalidTree("root count differs from the tree".into()));
            }
            for (&n, u) in self.tree.roots().iter().zip(r) {
                go(&self.tree, n, u)?;
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for FRep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_text())
    }
}
