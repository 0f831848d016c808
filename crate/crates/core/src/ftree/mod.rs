//! Factorisation trees.
//!
//! An f-tree is an unordered forest whose nodes are labelled by attribute
//! classes. Nodes live in an arena and keep their ids across the structural
//! transformations, so operators can refer to nodes of the input tree in the
//! output tree. Child order is presentation only, except that it fixes the
//! position of each sub-representation inside a factorised value.

mod cost;
mod lp;
mod text;

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::catalog::{AttrId, Schema};
use crate::error::{Error, Result};

pub use cost::{exact_size, Cost, CostMode, Estimator};
pub use lp::{fractional_cover, integral_cover};

pub type NodeId = usize;

#[derive(Clone, Debug)]
struct Node {
    label: Vec<AttrId>,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    alive: bool,
    konst: bool,
}

#[derive(Clone, Debug)]
pub struct FTree {
    schema: Arc<Schema>,
    nodes: Vec<Node>,
    roots: Vec<NodeId>,
    node_of: Vec<Option<NodeId>>,
    /// Attributes projected away but still labelling a node.
    projected: Vec<bool>,
    /// Classes whose nodes were removed by projection.
    hidden: Vec<Vec<AttrId>>,
    /// Hidden classes that were constant; they join no dependency sets.
    hidden_const: Vec<bool>,
    /// Representative of each atom's effective dependency group. Atoms
    /// sharing a hidden class stay transitively dependent.
    group: Vec<usize>,
}

/// A dependency set whose classes do not lie on one root-to-leaf path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathViolation {
    /// Atom names of the (effective) dependency set.
    pub dependency: Vec<String>,
    /// Two incomparable classes of that set.
    pub classes: (String, String),
}

impl FTree {
    /// An empty forest over `schema`.
    pub fn new(schema: Arc<Schema>) -> FTree {
        let n = schema.attr_count();
        let atoms = schema.atoms().len();
        FTree {
            schema,
            nodes: Vec::new(),
            roots: Vec::new(),
            node_of: vec![None; n],
            projected: vec![false; n],
            hidden: Vec::new(),
            hidden_const: Vec::new(),
            group: (0..atoms).collect(),
        }
    }

    /// Adds a node with the given label under `parent` (or as a new root),
    /// after any existing siblings.
    pub fn add_node(&mut self, parent: Option<NodeId>, label: &[AttrId]) -> Result<NodeId> {
        if label.is_empty() {
            return Err(Error::InvalidTree("empty node label".into()));
        }
        let id = self.nodes.len();
        let mut label = label.to_vec();
        label.sort_unstable();
        label.dedup();
        for &a in &label {
            if a as usize >= self.node_of.len() {
                return Err(Error::InvalidTree(format!("attribute id {a} out of range")));
            }
            if self.node_of[a as usize].is_some() {
                return Err(Error::InvalidTree(format!(
                    "{} labels two nodes",
                    self.schema.qualified(a)
                )));
            }
        }
        if let Some(p) = parent {
            if !self.is_live(p) {
                return Err(Error::InvalidTree(format!("no node {p}")));
            }
        }
        for &a in &label {
            self.node_of[a as usize] = Some(id);
        }
        self.nodes.push(Node {
            label,
            parent,
            children: Vec::new(),
            alive: true,
            konst: false,
        });
        match parent {
            Some(p) => self.nodes[p].children.push(id),
            None => self.roots.push(id),
        }
        Ok(id)
    }

    /// Adds a node labelled by qualified attribute names.
    pub fn add(&mut self, parent: Option<NodeId>, names: &[&str]) -> Result<NodeId> {
        let label = names
            .iter()
            .map(|n| self.schema.lookup(n))
            .collect::<Result<Vec<_>>>()?;
        self.add_node(parent, &label)
    }

    /// A single path with the classes in the given order, root first.
    pub fn path(schema: Arc<Schema>, classes: &[Vec<AttrId>]) -> Result<FTree> {
        let mut t = FTree::new(schema);
        let mut parent = None;
        for c in classes {
            parent = Some(t.add_node(parent, c)?);
        }
        Ok(t)
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.nodes[n].children
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.nodes[n].parent
    }

    pub fn label(&self, n: NodeId) -> &[AttrId] {
        &self.nodes[n].label
    }

    pub fn is_const(&self, n: NodeId) -> bool {
        self.nodes[n].konst
    }

    pub fn is_live(&self, n: NodeId) -> bool {
        self.nodes.get(n).is_some_and(|x| x.alive)
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Live node ids in arena order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&n| self.nodes[n].alive)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn node_of(&self, attr: AttrId) -> Option<NodeId> {
        self.node_of.get(attr as usize).copied().flatten()
    }

    /// Node labelled by the named attribute.
    pub fn find(&self, name: &str) -> Result<NodeId> {
        let a = self.schema.lookup(name)?;
        self.node_of(a)
            .ok_or_else(|| Error::UnknownAttribute(format!("{name} (not in the tree)")))
    }

    pub fn is_projected(&self, attr: AttrId) -> bool {
        self.projected[attr as usize]
    }

    pub fn hidden(&self) -> &[Vec<AttrId>] {
        &self.hidden
    }

    /// Number of attributes of `n` that are not projected away; each value
    /// of the node contributes this many singletons.
    pub fn visible(&self, n: NodeId) -> usize {
        self.nodes[n]
            .label
            .iter()
            .filter(|&&a| !self.projected[a as usize])
            .count()
    }

    /// Attributes of the tree that are not projected away, in preorder.
    pub fn visible_attrs(&self) -> Vec<AttrId> {
        self.preorder()
            .into_iter()
            .flat_map(|n| self.nodes[n].label.iter().copied())
            .filter(|&a| !self.projected[a as usize])
            .collect()
    }

    pub fn class_id(&self, n: NodeId) -> String {
        self.schema.class_id(&self.nodes[n].label)
    }

    pub fn depth(&self, n: NodeId) -> usize {
        let mut d = 0;
        let mut cur = self.nodes[n].parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.nodes[p].parent;
        }
        d
    }

    /// True if `a` is a proper ancestor of `b`.
    pub fn is_ancestor(&self, a: NodeId, b: NodeId) -> bool {
        let mut cur = self.nodes[b].parent;
        while let Some(p) = cur {
            if p == a {
                return true;
            }
            cur = self.nodes[p].parent;
        }
        false
    }

    /// Nodes from the root down to `n`, inclusive.
    pub fn ancestors_and_self(&self, n: NodeId) -> Vec<NodeId> {
        let mut path = vec![n];
        let mut cur = self.nodes[n].parent;
        while let Some(p) = cur {
            path.push(p);
            cur = self.nodes[p].parent;
        }
        path.reverse();
        path
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<NodeId> = self.roots.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    pub fn postorder(&self) -> Vec<NodeId> {
        fn go(t: &FTree, n: NodeId, out: &mut Vec<NodeId>) {
            for &c in &t.nodes[n].children {
                go(t, c, out);
            }
            out.push(n);
        }
        let mut out = Vec::with_capacity(self.nodes.len());
        for &r in &self.roots {
            go(self, r, &mut out);
        }
        out
    }

    /// `n` and all its descendants, in preorder.
    pub fn subtree(&self, n: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![n];
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(self.nodes[x].children.iter().rev());
        }
        out
    }

    /// Every root-to-leaf path.
    pub fn paths(&self) -> Vec<Vec<NodeId>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn go(t: &FTree, n: NodeId, cur: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
            cur.push(n);
            if t.nodes[n].children.is_empty() {
                out.push(cur.clone());
            }
            for &c in &t.nodes[n].children {
                go(t, c, cur, out);
            }
            cur.pop();
        }
        for &r in &self.roots {
            go(self, r, &mut cur, &mut out);
        }
        out
    }

    /// Position of `n` among its siblings (or among the roots).
    pub fn slot(&self, n: NodeId) -> usize {
        let list = match self.nodes[n].parent {
            Some(p) => &self.nodes[p].children,
            None => &self.roots,
        };
        list.iter().position(|&x| x == n).expect("node missing from parent")
    }

    /// Child-slot route from the top level down to `n`: the first entry is
    /// the root position, each following entry a child position.
    pub fn route(&self, n: NodeId) -> Vec<usize> {
        self.ancestors_and_self(n)
            .into_iter()
            .map(|x| self.slot(x))
            .collect()
    }

    /// Raw atom coverage of a node: bit `i` is set if atom `i` has an
    /// attribute in the node's label.
    pub fn cover_mask(&self, n: NodeId) -> u64 {
        self.nodes[n]
            .label
            .iter()
            .fold(0, |m, &a| m | 1u64 << self.schema.atom_of(a))
    }

    /// Effective dependency groups touched by a node. Constant nodes are
    /// independent of everything.
    pub fn group_mask(&self, n: NodeId) -> u64 {
        if self.nodes[n].konst {
            return 0;
        }
        self.nodes[n]
            .label
            .iter()
            .fold(0, |m, &a| m | 1u64 << self.group[self.schema.atom_of(a)])
    }

    fn subtree_mask(&self, n: NodeId) -> u64 {
        self.subtree(n)
            .into_iter()
            .fold(0, |m, x| m | self.group_mask(x))
    }

    /// Two nodes are dependent if some dependency set touches both.
    pub fn dependent(&self, a: NodeId, b: NodeId) -> bool {
        self.group_mask(a) & self.group_mask(b) != 0
    }

    /// True if `a` depends on `b` or on a descendant of `b`.
    pub fn depends_on_subtree(&self, a: NodeId, b: NodeId) -> bool {
        self.group_mask(a) & self.subtree_mask(b) != 0
    }

    /// Effective dependency sets as groups of atom indices.
    pub fn dependency_groups(&self) -> Vec<Vec<usize>> {
        let mut reps: Vec<usize> = self.group.clone();
        reps.sort_unstable();
        reps.dedup();
        reps.into_iter()
            .map(|r| (0..self.group.len()).filter(|&i| self.group[i] == r).collect())
            .collect()
    }

    pub fn check_path_constraint(&self) -> std::result::Result<(), PathViolation> {
        for grp in self.dependency_groups() {
            let bit = 1u64 << self.group[grp[0]];
            let mut touching: Vec<(usize, NodeId)> = self
                .node_ids()
                .filter(|&n| self.group_mask(n) & bit != 0)
                .map(|n| (self.depth(n), n))
                .collect();
            touching.sort_unstable();
            for w in touching.windows(2) {
                let (x, y) = (w[0].1, w[1].1);
                if !self.is_ancestor(x, y) {
                    return Err(PathViolation {
                        dependency: grp
                            .iter()
                            .map(|&i| self.schema.atoms()[i].name.clone())
                            .collect(),
                        classes: (self.class_id(x), self.class_id(y)),
                    });
                }
            }
        }
        Ok(())
    }

    /// True if no node can be pushed up.
    pub fn is_normalised(&self) -> bool {
        self.next_pushable().is_none()
    }

    /// First node in postorder whose parent depends neither on it nor on
    /// any of its descendants.
    pub fn next_pushable(&self) -> Option<NodeId> {
        self.postorder().into_iter().find(|&b| match self.nodes[b].parent {
            Some(a) => !self.depends_on_subtree(a, b),
            None => false,
        })
    }

    /// Structural checks: labels partition the schema's attributes (with
    /// the hidden classes) and parent links are consistent.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.schema.attr_count()];
        for n in self.node_ids() {
            let node = &self.nodes[n];
            if node.label.is_empty() {
                return Err(Error::InvalidTree("empty node label".into()));
            }
            for &a in &node.label {
                if std::mem::replace(&mut seen[a as usize], true) {
                    return Err(Error::InvalidTree(format!(
                        "{} labels two nodes",
                        self.schema.qualified(a)
                    )));
                }
            }
            for &c in &node.children {
                if self.nodes[c].parent != Some(n) || !self.nodes[c].alive {
                    return Err(Error::InvalidTree("inconsistent parent links".into()));
                }
            }
            if node.parent.is_none() && !self.roots.contains(&n) {
                return Err(Error::InvalidTree("detached node".into()));
            }
        }
        for class in &self.hidden {
            for &a in class {
                if std::mem::replace(&mut seen[a as usize], true) {
                    return Err(Error::InvalidTree(format!(
                        "{} is both hidden and labelled",
                        self.schema.qualified(a)
                    )));
                }
            }
        }
        if let Some(a) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidTree(format!(
                "{} labels no node",
                self.schema.qualified(a as AttrId)
            )));
        }
        Ok(())
    }

    /// Canonical identity of the tree up to sibling order.
    pub fn canonical_key(&self) -> Vec<u32> {
        fn enc(t: &FTree, n: NodeId) -> Vec<u32> {
            let node = &t.nodes[n];
            let mut out = vec![u32::MAX - 1];
            out.extend(node.label.iter().copied());
            if node.konst {
                out.push(u32::MAX - 2);
            }
            let mut kids: Vec<Vec<u32>> = node.children.iter().map(|&c| enc(t, c)).collect();
            kids.sort_unstable();
            for k in kids {
                out.extend(k);
            }
            out.push(u32::MAX);
            out
        }
        let mut roots: Vec<Vec<u32>> = self.roots.iter().map(|&r| enc(self, r)).collect();
        roots.sort_unstable();
        roots.concat()
    }

    /// Trees with the same canonical key.
    pub fn same_shape(&self, other: &FTree) -> bool {
        self.canonical_key() == other.canonical_key()
    }

    fn detach(&mut self, n: NodeId) -> usize {
        let pos = self.slot(n);
        match self.nodes[n].parent {
            Some(p) => {
                self.nodes[p].children.remove(pos);
            }
            None => {
                self.roots.remove(pos);
            }
        }
        pos
    }

    fn attach(&mut self, parent: Option<NodeId>, pos: usize, n: NodeId) {
        self.nodes[n].parent = parent;
        match parent {
            Some(p) => self.nodes[p].children.insert(pos, n),
            None => self.roots.insert(pos, n),
        }
    }

    fn sibling_list_len(&self, parent: Option<NodeId>) -> usize {
        match parent {
            Some(p) => self.nodes[p].children.len(),
            None => self.roots.len(),
        }
    }

    /// Moves `b` with its subtree next to its parent, as the last child of
    /// its grandparent (or the last root).
    pub fn push_up(&mut self, b: NodeId) -> Result<()> {
        let a = self.nodes[b]
            .parent
            .ok_or_else(|| Error::Precondition(format!("{} is a root", self.class_id(b))))?;
        if self.depends_on_subtree(a, b) {
            return Err(Error::Precondition(format!(
                "{} depends on {} or its descendants",
                self.class_id(a),
                self.class_id(b)
            )));
        }
        self.detach(b);
        let gp = self.nodes[a].parent;
        let end = self.sibling_list_len(gp);
        self.attach(gp, end, b);
        Ok(())
    }

    /// Splits the children of `b` into those independent of `a` and those
    /// whose subtree depends on `a`, as positions in `b`'s child list.
    pub fn swap_partition(&self, a: NodeId, b: NodeId) -> (Vec<usize>, Vec<usize>) {
        let mut tb = Vec::new();
        let mut tab = Vec::new();
        for (i, &c) in self.nodes[b].children.iter().enumerate() {
            if self.depends_on_subtree(a, c) {
                tab.push(i);
            } else {
                tb.push(i);
            }
        }
        (tb, tab)
    }

    /// Exchanges `b` with its parent `a`: `b` takes `a`'s place, keeps its
    /// children independent of `a`, and gets `a` as its last child; the
    /// other children of `b` move under `a`.
    pub fn swap(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        if self.nodes[b].parent != Some(a) || !self.is_live(a) {
            return Err(Error::Precondition(format!(
                "{} is not a child of {}",
                self.class_id(b),
                self.class_id(a)
            )));
        }
        let (tb, tab) = self.swap_partition(a, b);
        let b_children = std::mem::take(&mut self.nodes[b].children);
        let pos_a = self.detach(a);
        let gp = self.nodes[a].parent;
        let b_pos = self.nodes[a].children.iter().position(|&x| x == b).unwrap();
        self.nodes[a].children.remove(b_pos);
        for i in tab {
            let c = b_children[i];
            self.nodes[c].parent = Some(a);
            self.nodes[a].children.push(c);
        }
        for &i in &tb {
            self.nodes[b].children.push(b_children[i]);
        }
        self.nodes[a].parent = Some(b);
        self.nodes[b].children.push(a);
        self.attach(gp, pos_a, b);
        Ok(())
    }

    /// Merges sibling `b` into `a`: `a` takes the union of both labels and
    /// `b`'s children after its own.
    pub fn merge(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        if a == b || !self.is_live(a) || !self.is_live(b) || self.nodes[a].parent != self.nodes[b].parent {
            return Err(Error::Precondition("merge needs two sibling nodes".into()));
        }
        self.detach(b);
        let kids = std::mem::take(&mut self.nodes[b].children);
        for &c in &kids {
            self.nodes[c].parent = Some(a);
        }
        self.nodes[a].children.extend(kids);
        self.join_labels(a, b);
        Ok(())
    }

    /// Moves `b`'s label into its ancestor `a` and splices `b`'s children
    /// into `b`'s place. Does not normalise.
    pub fn absorb_label(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        if !self.is_live(a) || !self.is_live(b) || !self.is_ancestor(a, b) {
            return Err(Error::Precondition(format!(
                "absorb needs an ancestor and a descendant, got {} and {}",
                self.class_id(a),
                self.class_id(b)
            )));
        }
        let parent = self.nodes[b].parent;
        let pos = self.detach(b);
        let kids = std::mem::take(&mut self.nodes[b].children);
        for (i, &c) in kids.iter().enumerate() {
            self.attach(parent, pos + i, c);
        }
        self.join_labels(a, b);
        Ok(())
    }

    fn join_labels(&mut self, a: NodeId, b: NodeId) {
        let lb = std::mem::take(&mut self.nodes[b].label);
        for &x in &lb {
            self.node_of[x as usize] = Some(a);
        }
        self.nodes[a].label.extend(lb);
        self.nodes[a].label.sort_unstable();
        self.nodes[b].alive = false;
        self.nodes[b].parent = None;
        let k = self.nodes[a].konst && self.nodes[b].konst;
        self.nodes[a].konst = k;
    }

    /// Removes `n` from its place, splicing its children there, and makes it
    /// a constant leaf root at the end of the forest.
    pub fn hoist_const(&mut self, n: NodeId) -> Result<()> {
        let parent = self.nodes[n].parent;
        let pos = self.detach(n);
        let kids = std::mem::take(&mut self.nodes[n].children);
        for (i, &c) in kids.iter().enumerate() {
            self.attach(parent, pos + i, c);
        }
        let end = self.roots.len();
        self.attach(None, end, n);
        self.nodes[n].konst = true;
        Ok(())
    }

    /// Deletes a leaf whose attributes were all projected away. Its class
    /// is remembered so that its dependency sets stay joined.
    pub fn remove_leaf(&mut self, n: NodeId) -> Result<()> {
        if !self.is_live(n) || !self.nodes[n].children.is_empty() {
            return Err(Error::Precondition(format!("{} is not a leaf", self.class_id(n))));
        }
        self.detach(n);
        let label = std::mem::take(&mut self.nodes[n].label);
        for &a in &label {
            self.node_of[a as usize] = None;
        }
        self.nodes[n].alive = false;
        self.nodes[n].parent = None;
        self.hidden.push(label);
        self.hidden_const.push(self.nodes[n].konst);
        self.recompute_groups();
        Ok(())
    }

    pub fn mark_projected(&mut self, attrs: &[AttrId]) {
        for &a in attrs {
            self.projected[a as usize] = true;
        }
    }

    /// True if every attribute of `n` is projected away.
    pub fn fully_projected(&self, n: NodeId) -> bool {
        self.nodes[n].label.iter().all(|&a| self.projected[a as usize])
    }

    fn recompute_groups(&mut self) {
        let atoms = self.schema.atoms().len();
        let mut parent: Vec<usize> = (0..atoms).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for (class, _) in self.hidden.iter().zip(&self.hidden_const).filter(|(_, &k)| !k) {
            let atoms: BTreeSet<usize> = class.iter().map(|&a| self.schema.atom_of(a)).collect();
            let mut it = atoms.into_iter();
            if let Some(first) = it.next() {
                for other in it {
                    let (x, y) = (find(&mut parent, first), find(&mut parent, other));
                    if x != y {
                        parent[x.max(y)] = x.min(y);
                    }
                }
            }
        }
        self.group = (0..atoms).map(|i| find(&mut parent, i)).collect();
    }

    pub(crate) fn set_const(&mut self, n: NodeId, konst: bool) {
        self.nodes[n].konst = konst;
    }

    /// True if the `i`th hidden class was a constant node.
    pub fn hidden_is_const(&self, i: usize) -> bool {
        self.hidden_const[i]
    }

    pub(crate) fn set_hidden(&mut self, hidden: Vec<Vec<AttrId>>, konst: Vec<bool>) {
        self.hidden = hidden;
        self.hidden_const = konst;
        self.recompute_groups();
    }

    /// A copy of the tree over a different schema with the same attribute
    /// numbering.
    pub(crate) fn with_schema(&self, schema: Arc<Schema>) -> FTree {
        let mut t = self.clone();
        t.schema = schema;
        t
    }

    /// Appends the nodes of `other` (over attributes offset by
    /// `attr_offset`) as new roots. Atoms of `other` follow those of `self`
    /// in the schema.
    pub(crate) fn append_forest(&mut self, other: &FTree, attr_offset: u32) {
        let base = self.nodes.len();
        for node in &other.nodes {
            let mut n = node.clone();
            n.label = n.label.iter().map(|&a| a + attr_offset).collect();
            n.parent = n.parent.map(|p| p + base);
            n.children = n.children.iter().map(|&c| c + base).collect();
            if n.alive {
                for &a in &n.label {
                    self.node_of[a as usize] = Some(self.nodes.len());
                }
            }
            self.nodes.push(n);
        }
        self.roots.extend(other.roots.iter().map(|&r| r + base));
        for (i, &p) in other.projected.iter().enumerate() {
            self.projected[i + attr_offset as usize] = p;
        }
        self.hidden.extend(
            other
                .hidden
                .iter()
                .map(|c| c.iter().map(|&a| a + attr_offset).collect()),
        );
        self.hidden_const.extend(other.hidden_const.iter().copied());
        self.recompute_groups();
    }
}

impl std::fmt::Display for FTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_schema() -> Arc<Schema> {
        Schema::from_atoms(&[("R", &["A", "B"]), ("S", &["B", "C"]), ("T", &["C", "D"]), ("U", &["D", "E"])])
    }

    /// The normalisation example: deps {A,B},{B',C},{C',D},{D',E}.
    fn unnormalised() -> FTree {
        let mut t = FTree::new(chain_schema());
        let b = t.add(None, &["R.B", "S.B"]).unwrap();
        let a = t.add(Some(b), &["R.A"]).unwrap();
        let d = t.add(Some(a), &["T.D", "U.D"]).unwrap();
        let c = t.add(Some(d), &["S.C", "T.C"]).unwrap();
        t.add(Some(c), &["U.E"]).unwrap();
        t
    }

    #[test]
    fn normalisation_example() {
        let mut t = unnormalised();
        assert!(t.check_path_constraint().is_ok());
        assert!(!t.is_normalised());
        let e = t.find("U.E").unwrap();
        assert_eq!(t.next_pushable(), Some(e));
        t.push_up(e).unwrap();
        let d = t.find("T.D").unwrap();
        assert_eq!(t.next_pushable(), Some(d));
        t.push_up(d).unwrap();
        assert!(t.is_normalised());
        let b = t.find("R.B").unwrap();
        assert_eq!(t.children(b).len(), 2);
        assert_eq!(t.parent(e), Some(d));
    }

    #[test]
    fn push_up_rejects_dependent_parent() {
        let mut t = unnormalised();
        let a = t.find("R.A").unwrap();
        assert!(matches!(t.push_up(a), Err(Error::Precondition(_))));
    }

    #[test]
    fn independent_roots_violate_path_constraint() {
        let s = Schema::from_atoms(&[("R", &["A", "B"])]);
        let mut t = FTree::new(s);
        t.add(None, &["R.A"]).unwrap();
        t.add(None, &["R.B"]).unwrap();
        let v = t.check_path_constraint().unwrap_err();
        assert_eq!(v.dependency, vec!["R".to_string()]);
        assert_eq!(v.classes, ("R.A".to_string(), "R.B".to_string()));
    }

    #[test]
    fn swap_is_an_involution() {
        let mut t = unnormalised();
        while let Some(n) = t.next_pushable() {
            t.push_up(n).unwrap();
        }
        let key = t.canonical_key();
        let b = t.find("R.B").unwrap();
        let d = t.find("T.D").unwrap();
        t.swap(b, d).unwrap();
        assert_eq!(t.roots(), &[d]);
        assert!(t.check_path_constraint().is_ok());
        assert!(t.is_normalised());
        t.swap(d, b).unwrap();
        assert_eq!(t.canonical_key(), key);
    }

    #[test]
    fn removed_class_keeps_transitive_dependence() {
        let s = Schema::from_atoms(&[("R", &["A", "B"]), ("S", &["B", "C"])]);
        let mut t = FTree::new(s);
        let a = t.add(None, &["R.A"]).unwrap();
        let c = t.add(Some(a), &["S.C"]).unwrap();
        let b = t.add(Some(c), &["R.B", "S.B"]).unwrap();
        t.mark_projected(&t.label(b).to_vec());
        t.remove_leaf(b).unwrap();
        assert!(t.dependent(a, c));
        assert!(t.is_normalised());
        t.validate().unwrap();
    }
}
