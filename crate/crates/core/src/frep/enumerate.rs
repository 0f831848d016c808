//! Tuple enumeration with delay linear in the number of attributes.

use super::{FRep, Union};
use crate::value::Value;

/// Iterator over the tuples of a representation.
///
/// Keeps one cursor per tree node in preorder. Advancing moves the last
/// cursor that has a next value and resets every later cursor to the first
/// group of the union selected by its parent's current group, like an
/// odometer.
pub struct Tuples<'a> {
    /// Parent position in preorder and child slot, or root slot for roots.
    parent: Vec<Option<usize>>,
    slot: Vec<usize>,
    /// Visible attribute count per node.
    width: Vec<usize>,
    roots: &'a [Union],
    unions: Vec<&'a Union>,
    idx: Vec<usize>,
    state: State,
}

#[derive(PartialEq, Eq)]
enum State {
    Fresh,
    Running,
    Done,
}

impl<'a> Tuples<'a> {
    pub(super) fn new(rep: &'a FRep) -> Tuples<'a> {
        let tree = rep.tree();
        let order = tree.preorder();
        let mut pos = vec![usize::MAX; order.iter().copied().max().map_or(0, |m| m + 1)];
        for (i, &n) in order.iter().enumerate() {
            pos[n] = i;
        }
        let parent = order.iter().map(|&n| tree.parent(n).map(|p| pos[p])).collect();
        let slot = order.iter().map(|&n| tree.slot(n)).collect();
        let width = order.iter().map(|&n| tree.visible(n)).collect();
        let (roots, state): (&[Union], _) = match rep.roots() {
            Some(r) => (r, State::Fresh),
            None => (&[], State::Done),
        };
        Tuples {
            parent,
            slot,
            width,
            roots,
            unions: Vec::with_capacity(order.len()),
            idx: vec![0; order.len()],
            state,
        }
    }

    fn reset_from(&mut self, start: usize) {
        self.unions.truncate(start);
        for i in start..self.idx.len() {
            let u = match self.parent[i] {
                None => &self.roots[self.slot[i]],
                Some(p) => &self.unions[p].groups[self.idx[p]].children[self.slot[i]],
            };
            self.unions.push(u);
            self.idx[i] = 0;
        }
    }

    fn current(&self) -> Vec<Value> {
        let mut out = Vec::with_capacity(self.width.iter().sum());
        for (i, &w) in self.width.iter().enumerate() {
            let v = self.unions[i].groups[self.idx[i]].value;
            out.extend(std::iter::repeat(v).take(w));
        }
        out
    }
}

impl Iterator for Tuples<'_> {
    type Item = Vec<Value>;

    fn next(&mut self) -> Option<Vec<Value>> {
        match self.state {
            State::Done => None,
            State::Fresh => {
                self.state = State::Running;
                self.reset_from(0);
                if self.idx.is_empty() {
                    self.state = State::Done;
                }
                Some(self.current())
            }
            State::Running => {
                let mut i = self.idx.len();
                while i > 0 {
                    i -= 1;
                    if self.idx[i] + 1 < self.unions[i].groups.len() {
                        self.idx[i] += 1;
                        self.reset_from(i + 1);
                        return Some(self.current());
                    }
                }
                self.state = State::Done;
                None
            }
        }
    }
}
