//! Building representations of query results from flat relations.
//!
//! Every atom's tuples are restricted by the constants, projected onto one
//! column per tree node it touches, ordered by node depth, and sorted. The
//! tree is then walked top-down: the values of a node are the intersection
//! of its column in all atoms covering it, restricted to the row ranges
//! selected by the ancestors' values. A value is kept only if every child
//! subtree yields a non-empty union.

use std::cmp::Ordering;
use std::sync::Arc;

use super::{FRep, Group, Union};
use crate::catalog::{equivalence_classes, AttrId, Database};
use crate::error::{Error, Result};
use crate::ftree::{FTree, NodeId};
use crate::limits::Limits;
use crate::operators;
use crate::query::Query;
use crate::value::Value;

struct AtomRows {
    /// Tree nodes the atom touches, root first.
    levels: Vec<NodeId>,
    rows: Vec<Vec<Value>>,
}

pub fn factorise(db: &Database, query: &Query, tree: &FTree) -> Result<FRep> {
    factorise_with(db, query, tree, &Limits::none())
}

/// Factorises the result of `query` over `tree`. The tree must label every
/// attribute of the query, one attribute class per node; a projection of
/// the query is applied to the built representation.
pub fn factorise_with(db: &Database, query: &Query, tree: &FTree, limits: &Limits) -> Result<FRep> {
    let tree = bind_tree(query, tree)?;
    let schema = query.schema();

    let classes = equivalence_classes(query);
    for c in &classes {
        let node = tree.node_of(c.members[0]).ok_or_else(|| {
            Error::InvalidTree(format!("{} labels no node", schema.qualified(c.members[0])))
        })?;
        if tree.label(node) != c.members.as_slice() {
            return Err(Error::InvalidTree(format!(
                "node {} is not an attribute class of the query",
                tree.class_id(node)
            )));
        }
    }
    if let Err(v) = tree.check_path_constraint() {
        return Err(Error::InvalidTree(format!(
            "classes {} and {} of {{{}}} are not on one path",
            v.classes.0,
            v.classes.1,
            v.dependency.join(",")
        )));
    }

    let node_of = |a: AttrId| tree.node_of(a).expect("validated");
    let mut atoms: Vec<AtomRows> = Vec::new();
    let mut const_values: Vec<Option<Vec<Value>>> = vec![None; tree.node_ids().max().map_or(0, |m| m + 1)];
    for atom in schema.atoms() {
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
        let mut nodes: Vec<NodeId> = atom.attrs.iter().map(|&a| node_of(a)).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let col_of_node: Vec<usize> = nodes
            .iter()
            .map(|&n| {
                let a = *atom.attrs.iter().find(|&&a| node_of(a) == n).unwrap();
                schema.attr(a).column
            })
            .collect();
        let same: Vec<(usize, usize)> = atom
            .attrs
            .iter()
            .map(|&a| {
                let k = nodes.iter().position(|&n| n == node_of(a)).unwrap();
                (schema.attr(a).column, col_of_node[k])
            })
            .filter(|(x, y)| x != y)
            .collect();
        let preds: Vec<(usize, &crate::query::ConstPredicate)> = query
            .constants()
            .iter()
            .filter_map(|p| {
                let n = node_of(p.attr);
                nodes.iter().position(|&m| m == n).map(|k| (col_of_node[k], p))
            })
            .collect();

        let mut levels: Vec<(usize, NodeId, usize)> = Vec::new();
        let mut consts: Vec<(NodeId, usize)> = Vec::new();
        for (k, &n) in nodes.iter().enumerate() {
            if tree.is_const(n) {
                consts.push((n, col_of_node[k]));
            } else {
                levels.push((tree.depth(n), n, col_of_node[k]));
            }
        }
        levels.sort_unstable();
        let mut rows: Vec<Vec<Value>> = Vec::with_capacity(rel.len());
        let mut seen_consts: Vec<Vec<Value>> = vec![Vec::new(); consts.len()];
        for r in rel.rows() {
            limits.tick()?;
            if same.iter().all(|&(x, y)| r[x] == r[y]) && preds.iter().all(|(c, p)| p.op.eval(&r[*c], &p.value)) {
                rows.push(levels.iter().map(|&(_, _, c)| r[c]).collect());
                for (i, &(_, c)) in consts.iter().enumerate() {
                    seen_consts[i].push(r[c]);
                }
            }
        }
        rows.sort_unstable();
        rows.dedup();
        for (i, (n, _)) in consts.iter().enumerate() {
            let mut vals = std::mem::take(&mut seen_consts[i]);
            vals.sort_unstable();
            vals.dedup();
            const_values[*n] = Some(match const_values[*n].take() {
                None => vals,
                Some(prev) => prev.into_iter().filter(|v| vals.binary_search(v).is_ok()).collect(),
            });
        }
        atoms.push(AtomRows {
            levels: levels.into_iter().map(|(_, n, _)| n).collect(),
            rows,
        });
    }

    // For every node: (atom, column) pairs of the atoms covering it.
    let mut cover: Vec<Vec<(usize, usize)>> = vec![Vec::new(); const_values.len()];
    for (i, a) in atoms.iter().enumerate() {
        for (lvl, &n) in a.levels.iter().enumerate() {
            cover[n].push((i, lvl));
        }
    }

    let b = Builder { tree: &tree, atoms: &atoms, cover: &cover, limits };
    let mut ranges: Vec<(usize, usize)> = atoms.iter().map(|a| (0, a.rows.len())).collect();
    let mut roots = Vec::with_capacity(tree.roots().len());
    for &r in tree.roots() {
        let u = if tree.is_const(r) {
            let vals = const_values[r].clone().unwrap_or_default();
            Union {
                groups: vals
                    .into_iter()
                    .map(|value| Group { value, children: Vec::new() })
                    .collect(),
            }
        } else {
            b.build(r, &mut ranges)?
        };
        if u.is_empty() {
            return finish(FRep::empty(tree.clone()), query);
        }
        roots.push(u);
    }
    finish(FRep::new(tree.clone(), Some(roots)), query)
}

fn finish(rep: FRep, query: &Query) -> Result<FRep> {
    match query.projection() {
        Some(keep) => operators::project(rep, keep),
        None => Ok(rep),
    }
}

/// Rebinds a tree parsed over an equivalent schema to the query's schema.
fn bind_tree(query: &Query, tree: &FTree) -> Result<FTree> {
    let qs = query.schema();
    let ts = tree.schema();
    if Arc::ptr_eq(qs, ts) {
    } else if qs.attr_count() == ts.attr_count()
        && (0..qs.attr_count() as AttrId).all(|a| qs.qualified(a) == ts.qualified(a))
    {
    } else {
        return Err(Error::InvalidTree("the tree is over different attributes than the query".into()));
    }
    if !tree.hidden().is_empty() {
        return Err(Error::InvalidTree(
            "the tree must label every attribute of the query, including projected ones".into(),
        ));
    }
    tree.validate()?;
    Ok(tree.with_schema(qs.clone()))
}

struct Builder<'a> {
    tree: &'a FTree,
    atoms: &'a [AtomRows],
    cover: &'a [Vec<(usize, usize)>],
    limits: &'a Limits,
}

impl Builder<'_> {
    fn build(&self, n: NodeId, ranges: &mut Vec<(usize, usize)>) -> Result<Union> {
        let cov = &self.cover[n];
        debug_assert!(!cov.is_empty(), "node covered by no atom");
        let val = |k: usize, row: usize| -> &Value {
            let (a, l) = cov[k];
            &self.atoms[a].rows[row][l]
        };
        let mut pos: Vec<usize> = cov.iter().map(|&(a, _)| ranges[a].0).collect();
        let hi: Vec<usize> = cov.iter().map(|&(a, _)| ranges[a].1).collect();
        let kids = self.tree.children(n);
        let mut out = Vec::new();
        'outer: loop {
            if (0..cov.len()).any(|k| pos[k] >= hi[k]) {
                break;
            }
            let mut target = *(0..cov.len()).map(|k| val(k, pos[k])).max().unwrap();
            loop {
                let mut agreed = true;
                for k in 0..cov.len() {
                    let start = pos[k];
                    pos[k] = start + partition(hi[k] - start, |i| val(k, start + i) < &target);
                    if pos[k] >= hi[k] {
                        break 'outer;
                    }
                    let v = *val(k, pos[k]);
                    if v != target {
                        target = v;
                        agreed = false;
                    }
                }
                if agreed {
                    break;
                }
            }
            self.limits.tick()?;
            let ends: Vec<usize> = (0..cov.len())
                .map(|k| {
                    let start = pos[k];
                    start + partition(hi[k] - start, |i| val(k, start + i).cmp(&target) != Ordering::Greater)
                })
                .collect();
            let saved: Vec<(usize, usize)> = cov.iter().map(|&(a, _)| ranges[a]).collect();
            for (k, &(a, _)) in cov.iter().enumerate() {
                ranges[a] = (pos[k], ends[k]);
            }
            let mut children = Vec::with_capacity(kids.len());
            let mut ok = true;
            for &c in kids {
                let u = self.build(c, ranges)?;
                if u.is_empty() {
                    ok = false;
                    break;
                }
                children.push(u);
            }
            for (k, &(a, _)) in cov.iter().enumerate() {
                ranges[a] = saved[k];
            }
            if ok {
                out.push(Group { value: target, children });
            }
            pos = ends;
        }
        Ok(Union { groups: out })
    }
}

/// First index in `0..len` where `pred` turns false (`pred` is monotone).
fn partition(len: usize, pred: impl Fn(usize) -> bool) -> usize {
    // Galloping search keeps seeks cheap when the answer is near the start.
    let mut step = 1;
    let mut lo = 0;
    while lo + step <= len && pred(lo + step - 1) {
        lo += step;
        step *= 2;
    }
    let mut hi = (lo + step).min(len);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::partition;

    #[test]
    fn partition_point() {
        let v = [1, 2, 2, 3, 5, 8, 8, 9];
        for t in 0..11 {
            assert_eq!(partition(v.len(), |i| v[i] < t), v.partition_point(|&x| x < t));
        }
        assert_eq!(partition(0, |_| true), 0);
    }
}
