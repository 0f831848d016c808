//! Operators on factorised representations.
//!
//! Every operator takes a representation by value and returns the
//! transformed one; the f-tree is transformed alongside the data. Node ids
//! of the input tree stay valid in the output tree, except for nodes that
//! an operator removes.
//!
//! Data transformations locate a node's unions through its route: every
//! occurrence of the list of unions holding the node (the children of a
//! group of the parent node, or the root list) is rewritten in place. A
//! rewrite that leaves a union empty removes the enclosing group, and so on
//! upwards.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::catalog::{AttrId, Schema};
use crate::error::{Error, Result};
use crate::frep::{FRep, Group, Union};
use crate::ftree::{CostMode, FTree, NodeId};
use crate::query::CmpOp;
use crate::value::Value;

type Slots = Vec<Union>;

/// Applies `f` to every list of unions reached by following `prefix` from
/// `slots`, dropping groups whose lists end up holding an empty union.
/// Returns false if `slots` itself ends up holding an empty union.
fn walk(slots: &mut Slots, prefix: &[usize], f: &mut dyn FnMut(&mut Slots) -> Result<()>) -> Result<bool> {
    match prefix.split_first() {
        None => f(slots)?,
        Some((&i, rest)) => {
            let mut err = None;
            slots[i].groups.retain_mut(|g| {
                if err.is_some() {
                    return true;
                }
                match walk(&mut g.children, rest, f) {
                    Ok(keep) => keep,
                    Err(e) => {
                        err = Some(e);
                        true
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(slots.iter().all(|u| !u.is_empty()))
}

/// Rewrites the lists holding node `n` of the input tree and pairs the
/// result with `tree`.
fn rewrite(rep: FRep, tree: FTree, n: NodeId, f: &mut dyn FnMut(&mut Slots, usize) -> Result<()>) -> Result<FRep> {
    let route = rep.tree().route(n);
    let (_, roots) = rep.into_parts();
    let Some(mut roots) = roots else {
        return Ok(FRep::empty(tree));
    };
    let (&at, prefix) = route.split_last().expect("route of a live node");
    let keep = walk(&mut roots, prefix, &mut |slots: &mut Slots| f(slots, at))?;
    Ok(if keep { FRep::new(tree, Some(roots)) } else { FRep::empty(tree) })
}

fn live(tree: &FTree, n: NodeId) -> Result<()> {
    if tree.is_live(n) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("no node {n} in the tree")))
    }
}

/// Moves `b` and its subtree up next to its parent. The parent must depend
/// neither on `b` nor on its descendants.
pub fn pushup(rep: FRep, b: NodeId) -> Result<FRep> {
    live(rep.tree(), b)?;
    let a = rep
        .tree()
        .parent(b)
        .ok_or_else(|| Error::Precondition(format!("{} is a root", rep.tree().class_id(b))))?;
    let ib = rep.tree().slot(b);
    let mut tree = rep.tree().clone();
    tree.push_up(b)?;
    rewrite(rep, tree, a, &mut |slots, ia| {
        let mut moved = None;
        for g in &mut slots[ia].groups {
            let u = g.children.remove(ib);
            debug_assert!(moved.as_ref().map_or(true, |m| *m == u), "pushed-up unions differ");
            moved.get_or_insert(u);
        }
        slots.push(moved.expect("non-empty union"));
        Ok(())
    })
}

/// Pushes nodes up, bottom-up, until the tree is normalised.
pub fn normalise(mut rep: FRep) -> Result<FRep> {
    while let Some(b) = rep.tree().next_pushable() {
        rep = pushup(rep, b)?;
    }
    Ok(rep)
}

/// Exchanges child `b` with its parent `a`. Children of `b` whose subtrees
/// depend on `a` move under `a`; the others stay with `b`.
pub fn swap(rep: FRep, a: NodeId, b: NodeId) -> Result<FRep> {
    live(rep.tree(), a)?;
    live(rep.tree(), b)?;
    let ib = rep.tree().slot(b);
    let (tb, tab) = rep.tree().swap_partition(a, b);
    let mut tree = rep.tree().clone();
    tree.swap(a, b)?;
    rewrite(rep, tree, a, &mut |slots, ia| {
        let ua = std::mem::take(&mut slots[ia]);
        slots[ia] = swap_union(ua, ib, &tb, &tab);
        Ok(())
    })
}

/// Regroups `⋃_a ⟨a⟩ × E_a × ⋃_b (⟨b⟩ × F_b × G_ab)` into
/// `⋃_b ⟨b⟩ × F_b × ⋃_a (⟨a⟩ × E_a × G_ab)`, visiting the `(b, a)` pairs
/// in order with a priority queue holding the next `b` of every `a`.
fn swap_union(ua: Union, ib: usize, tb: &[usize], tab: &[usize]) -> Union {
    let mut rest: Vec<(Value, Vec<Union>)> = Vec::with_capacity(ua.groups.len());
    let mut inner: Vec<std::vec::IntoIter<Group>> = Vec::with_capacity(ua.groups.len());
    for mut g in ua.groups {
        let ub = g.children.remove(ib);
        rest.push((g.value, g.children));
        inner.push(ub.groups.into_iter());
    }
    let mut heads: Vec<Option<Group>> = inner.iter_mut().map(Iterator::next).collect();
    let mut heap: BinaryHeap<Reverse<(Value, usize)>> = heads
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.as_ref().map(|g| Reverse((g.value, i))))
        .collect();

    let mut out: Vec<Group> = Vec::new();
    while let Some(Reverse((b, i))) = heap.pop() {
        let gb = heads[i].take().expect("queued head");
        if let Some(next) = inner[i].next() {
            heap.push(Reverse((next.value, i)));
            heads[i] = Some(next);
        }
        let mut kids: Vec<Option<Union>> = gb.children.into_iter().map(Some).collect();
        let (value, ea) = &rest[i];
        let mut a_children = ea.clone();
        a_children.extend(tab.iter().map(|&k| kids[k].take().expect("child")));
        let ga = Group { value: *value, children: a_children };
        match out.last_mut() {
            Some(last) if last.value == b => last.children.last_mut().expect("A union").groups.push(ga),
            _ => {
                let mut children: Vec<Union> = tb.iter().map(|&k| kids[k].take().expect("child")).collect();
                children.push(Union { groups: vec![ga] });
                out.push(Group { value: b, children });
            }
        }
    }
    Union { groups: out }
}

/// The product of two representations over disjoint attributes. The
/// result ranges over the atoms of `left` followed by those of `right`.
pub fn product(left: FRep, right: FRep) -> Result<FRep> {
    let ls = left.tree().schema().clone();
    let rs = right.tree().schema().clone();
    let mut schema = Schema::clone(&ls);
    for atom in rs.atoms() {
        if ls.atoms().iter().any(|a| a.name == atom.name) {
            return Err(Error::Precondition(format!(
                "both operands range over relation atom `{}`",
                atom.name
            )));
        }
        let names = atom.attrs.iter().map(|&a| rs.attr(a).name.clone()).collect();
        let i = schema.add_atom(&atom.name, &atom.relation, names, None)?;
        let ids = schema.atoms()[i].attrs.clone();
        for (&new, &old) in ids.iter().zip(&atom.attrs) {
            if let Some(d) = rs.attr(old).domain {
                schema.set_domain(new, d);
            }
        }
    }
    let schema = Arc::new(schema);
    let mut tree = FTree::new(schema);
    tree.append_forest(left.tree(), 0);
    tree.append_forest(right.tree(), ls.attr_count() as AttrId);
    let (_, l) = left.into_parts();
    let (_, r) = right.into_parts();
    Ok(match (l, r) {
        (Some(mut l), Some(r)) => {
            l.extend(r);
            FRep::new(tree, Some(l))
        }
        _ => FRep::empty(tree),
    })
}

/// Merges sibling `b` into `a`, keeping the values present in both.
pub fn merge(rep: FRep, a: NodeId, b: NodeId) -> Result<FRep> {
    live(rep.tree(), a)?;
    live(rep.tree(), b)?;
    let ib = rep.tree().slot(b);
    let mut tree = rep.tree().clone();
    tree.merge(a, b)?;
    rewrite(rep, tree, a, &mut |slots, ia| {
        let ub = slots.remove(ib);
        let ia = if ib < ia { ia - 1 } else { ia };
        let ua = std::mem::take(&mut slots[ia]);
        slots[ia] = merge_unions(ua, ub);
        Ok(())
    })
}

fn merge_unions(ua: Union, ub: Union) -> Union {
    let mut out = Vec::with_capacity(ua.groups.len().min(ub.groups.len()));
    let mut bi = ub.groups.into_iter().peekable();
    for mut ga in ua.groups {
        while bi.peek().is_some_and(|g| g.value < ga.value) {
            bi.next();
        }
        if let Some(gb) = bi.next_if(|g| g.value == ga.value) {
            ga.children.extend(gb.children);
            out.push(ga);
        }
    }
    Union { groups: out }
}

/// Absorbs descendant `b` into its ancestor `a`: below every value of `a`,
/// only the equal value of `b` survives. The result is normalised.
pub fn absorb(rep: FRep, a: NodeId, b: NodeId) -> Result<FRep> {
    live(rep.tree(), a)?;
    live(rep.tree(), b)?;
    let depth_a = rep.tree().depth(a);
    let route_b = rep.tree().route(b);
    let mut tree = rep.tree().clone();
    tree.absorb_label(a, b)?;
    let (&ib, below) = route_b[depth_a + 1..].split_last().expect("b below a");
    let below = below.to_vec();
    let out = rewrite(rep, tree, a, &mut |slots, ia| {
        let mut err = None;
        slots[ia].groups.retain_mut(|g| {
            let v = g.value;
            let r = walk(&mut g.children, &below, &mut |list: &mut Slots| {
                let ub = list.remove(ib);
                match ub.groups.into_iter().find(|x| x.value == v) {
                    Some(gb) => {
                        for (k, c) in gb.children.into_iter().enumerate() {
                            list.insert(ib + k, c);
                        }
                    }
                    None => list.insert(ib, Union::default()),
                }
                Ok(())
            });
            match r {
                Ok(keep) => keep,
                Err(e) => {
                    err = Some(e);
                    true
                }
            }
        });
        err.map_or(Ok(()), Err)
    })?;
    normalise(out)
}

/// Keeps the values of `attr` satisfying `attr op value`. An equality also
/// factors the node out as a constant root, which the cost measures skip.
pub fn select_const(rep: FRep, attr: AttrId, op: CmpOp, value: Value) -> Result<FRep> {
    let tree = rep.tree();
    let n = tree.node_of(attr).ok_or_else(|| {
        Error::UnknownAttribute(format!("{} (not in the tree)", tree.schema().qualified(attr)))
    })?;
    check_domain(&rep, n, attr, &value)?;
    let hoist = op == CmpOp::Eq && !tree.is_const(n);
    let mut out_tree = tree.clone();
    if hoist {
        out_tree.hoist_const(n)?;
    }
    let out = rewrite(rep, out_tree, n, &mut |slots, i| {
        slots[i].groups.retain(|g| op.eval(&g.value, &value));
        if hoist && !slots[i].is_empty() {
            let u = slots.remove(i);
            let g = u.groups.into_iter().next().expect("one group");
            for (k, c) in g.children.into_iter().enumerate() {
                slots.insert(i + k, c);
            }
        }
        Ok(())
    })?;
    let out = if hoist {
        let (t, roots) = out.into_parts();
        let roots = roots.map(|mut r| {
            r.push(Union { groups: vec![Group { value, children: Vec::new() }] });
            r
        });
        FRep::new(t, roots)
    } else {
        out
    };
    normalise(out)
}

fn check_domain(rep: &FRep, n: NodeId, attr: AttrId, value: &Value) -> Result<()> {
    let tree = rep.tree();
    let domain = tree.schema().attr(attr).domain.or_else(|| {
        let route = tree.route(n);
        let mut slots = rep.roots()?;
        for (depth, &i) in route.iter().enumerate() {
            let u = slots.get(i)?;
            let g = u.groups.first()?;
            if depth + 1 == route.len() {
                return Some(g.value.domain());
            }
            slots = &g.children;
        }
        None
    });
    match domain {
        Some(d) if d != value.domain() => Err(Error::TypeMismatch(format!(
            "{} holds {d} values, compared with {}",
            tree.schema().qualified(attr),
            value.to_sexpr_token()
        ))),
        _ => Ok(()),
    }
}

/// Projects onto `keep`. Nodes whose attributes are all projected away are
/// swapped down until they are leaves and then removed; the dependency sets
/// they joined stay joined. The result is normalised.
pub fn project(rep: FRep, keep: &[AttrId]) -> Result<FRep> {
    let tree = rep.tree();
    for &a in keep {
        if a as usize >= tree.schema().attr_count() || tree.node_of(a).is_none() || tree.is_projected(a) {
            let name = if (a as usize) < tree.schema().attr_count() {
                tree.schema().qualified(a).to_owned()
            } else {
                format!("#{a}")
            };
            return Err(Error::UnknownAttribute(format!("{name} (not in the tree)")));
        }
    }
    let drop: Vec<AttrId> = tree
        .node_ids()
        .flat_map(|n| tree.label(n).iter().copied())
        .filter(|a| !keep.contains(a))
        .collect();
    let (mut t, roots) = rep.into_parts();
    t.mark_projected(&drop);
    let mut rep = FRep::new(t, roots);
    loop {
        let t = rep.tree();
        let marked: Vec<NodeId> = t.preorder().into_iter().filter(|&n| t.fully_projected(n)).collect();
        if let Some(&leaf) = marked.iter().find(|&&n| t.children(n).is_empty()) {
            rep = remove_leaf(rep, leaf)?;
            continue;
        }
        // The last marked node in preorder has no marked descendants, so
        // every swap moves it strictly down.
        let Some(&n) = marked.last() else { break };
        let mut best: Option<(crate::ftree::Cost, String, NodeId)> = None;
        for &c in t.children(n) {
            let mut trial = t.clone();
            trial.swap(n, c)?;
            let key = (trial.s_cost(CostMode::Fractional), t.class_id(c), c);
            if best.as_ref().map_or(true, |b| (&key.0, &key.1) < (&b.0, &b.1)) {
                best = Some(key);
            }
        }
        let (_, _, c) = best.expect("inner node has children");
        rep = swap(rep, n, c)?;
    }
    normalise(rep)
}

fn remove_leaf(rep: FRep, n: NodeId) -> Result<FRep> {
    let mut tree = rep.tree().clone();
    tree.remove_leaf(n)?;
    rewrite(rep, tree, n, &mut |slots, i| {
        slots.remove(i);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(v: i64) -> Group {
        Group { value: Value::Int(v), children: vec![] }
    }

    fn union(vs: &[i64]) -> Union {
        Union { groups: vs.iter().map(|&v| leaf(v)).collect() }
    }

    fn sorted(rep: &FRep) -> Vec<Vec<Value>> {
        let cols = rep.columns();
        let mut order: Vec<usize> = (0..cols.len()).collect();
        order.sort_by_key(|&i| cols[i]);
        let mut rows: Vec<Vec<Value>> = rep
            .enumerate()
            .into_iter()
            .map(|r| order.iter().map(|&i| r[i]).collect())
            .collect();
        rows.sort();
        rows
    }

    /// Path A - B over R(A, B) with A = 1, 2 and B depending on A.
    fn two_level() -> (FRep, NodeId, NodeId) {
        let s = Schema::from_atoms(&[("R", &["A", "B"])]);
        let mut t = FTree::new(s);
        let a = t.add(None, &["R.A"]).unwrap();
        let b = t.add(Some(a), &["R.B"]).unwrap();
        let groups = vec![
            Group { value: Value::Int(1), children: vec![union(&[5, 7])] },
            Group { value: Value::Int(2), children: vec![union(&[5, 6])] },
        ];
        (FRep::new(t, Some(vec![Union { groups }])), a, b)
    }

    #[test]
    fn swap_regroups_and_inverts() {
        let (rep, a, b) = two_level();
        let swapped = swap(rep.clone(), a, b).unwrap();
        swapped.validate().unwrap();
        assert_eq!(swapped.to_text(), "(u (v 5 (u (v 1) (v 2))) (v 6 (u (v 2))) (v 7 (u (v 1))))\n");
        assert_eq!(sorted(&swapped), sorted(&rep));
        let back = swap(swapped, b, a).unwrap();
        assert_eq!(back.to_text(), rep.to_text());
    }

    #[test]
    fn pushup_keeps_one_copy() {
        let s = Schema::from_atoms(&[("R", &["A"]), ("S", &["B"])]);
        let mut t = FTree::new(s);
        let a = t.add(None, &["R.A"]).unwrap();
        let b = t.add(Some(a), &["S.B"]).unwrap();
        let groups = (1..=2)
            .map(|v| Group { value: Value::Int(v), children: vec![union(&[8, 9])] })
            .collect();
        let rep = FRep::new(t, Some(vec![Union { groups }]));
        assert_eq!(rep.size(), 6);
        let up = pushup(rep.clone(), b).unwrap();
        assert_eq!(up.size(), 4);
        assert_eq!(up.tree().roots().len(), 2);
        assert_eq!(sorted(&up), sorted(&rep));
        assert_eq!(normalise(rep).unwrap().to_text(), up.to_text());
    }

    #[test]
    fn merge_and_select() {
        let s = Schema::from_atoms(&[("R", &["A"]), ("S", &["B"])]);
        let mut t = FTree::new(s);
        let a = t.add(None, &["R.A"]).unwrap();
        let b = t.add(None, &["S.B"]).unwrap();
        let rep = FRep::new(t, Some(vec![union(&[1, 2, 3]), union(&[2, 3, 4])]));
        let m = merge(rep.clone(), a, b).unwrap();
        assert_eq!(m.to_text(), "(u (v 2) (v 3))\n");
        assert_eq!(m.size(), 4);
        let none = merge(FRep::new(rep.tree().clone(), Some(vec![union(&[1]), union(&[2])])), a, b).unwrap();
        assert!(none.is_empty());
        let sel = select_const(rep.clone(), 0, CmpOp::Eq, Value::Int(2)).unwrap();
        assert_eq!(sel.count_tuples(), 3);
        assert!(sel.tree().is_const(a));
        assert!(matches!(
            select_const(rep, 0, CmpOp::Eq, Value::str("x")),
            Err(Error::TypeMismatch(_))
        ));
    }

    #[test]
    fn absorb_keeps_equal_values() {
        let (rep, a, b) = two_level();
        let out = absorb(rep, a, b).unwrap();
        assert!(out.is_empty());
        let (rep, a, b) = two_level();
        let (t, _) = rep.into_parts();
        let groups = vec![
            Group { value: Value::Int(5), children: vec![union(&[5, 7])] },
            Group { value: Value::Int(6), children: vec![union(&[5])] },
        ];
        let out = absorb(FRep::new(t, Some(vec![Union { groups }])), a, b).unwrap();
        assert_eq!(out.to_text(), "(u (v 5))\n");
        assert_eq!(out.size(), 2);
    }

    #[test]
    fn project_keeps_transitive_dependence() {
        let s = Schema::from_atoms(&[("R", &["A", "B"]), ("S", &["B", "C"])]);
        let mut t = FTree::new(s);
        let a = t.add(None, &["R.A"]).unwrap();
        let b = t.add(Some(a), &["R.B", "S.B"]).unwrap();
        t.add(Some(b), &["S.C"]).unwrap();
        let g = |bv: i64, cs: &[i64]| Group { value: Value::Int(bv), children: vec![union(cs)] };
        let groups = vec![
            Group { value: Value::Int(1), children: vec![Union { groups: vec![g(1, &[1]), g(2, &[2])] }] },
            Group { value: Value::Int(2), children: vec![Union { groups: vec![g(2, &[2])] }] },
        ];
        let rep = FRep::new(t, Some(vec![Union { groups }]));
        let p = project(rep, &[0, 3]).unwrap();
        assert_eq!(p.tree().roots().len(), 1);
        assert_eq!(p.tree().node_count(), 2);
        assert_eq!(p.to_text(), "(u (v 1 (u (v 1) (v 2))) (v 2 (u (v 2))))\n");
        p.validate().unwrap();
    }
}
