//! Exhaustive plan search over the graph of f-trees.
//!
//! Vertices are f-trees up to sibling order; edges are single operator
//! applications. In bound order a bottleneck variant of Dijkstra's
//! algorithm finds the smallest worst-case cost of reaching a tree where
//! every condition holds; the popped targets at that distance are then
//! compared by their own cost. In estimate order the distance is the sum
//! of the size estimates along the path.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::{rep_attr, target_groups, FPlan, Planner, PlanOrder, Step};
use crate::catalog::AttrId;
use crate::error::{Error, Result};
use crate::ftree::{Cost, FTree, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Dist {
    Bound(Cost),
    /// Total estimate and the tree's own estimate, as the bit patterns of
    /// non-negative floats, which sort like the floats themselves.
    Estimate(u64, u64),
}

struct Vertex {
    tree: FTree,
    prev: Option<usize>,
    steps: Vec<Step>,
    depth: usize,
    dist: Dist,
    own_cost: Cost,
    own_est: f64,
    done: bool,
}

/// Legal moves from `tree`: every swap of a node with its parent, and the
/// merges and absorptions of nodes that the conditions unify.
pub(super) fn moves(tree: &FTree, conditions: &[(AttrId, AttrId)]) -> Vec<Vec<Step>> {
    let mut out = Vec::new();
    for b in tree.preorder() {
        if let Some(a) = tree.parent(b) {
            out.push(vec![Step::Swap(rep_attr(tree, a), rep_attr(tree, b))]);
        }
    }
    for g in target_groups(tree, conditions) {
        for (i, &x) in g.iter().enumerate() {
            for &y in &g[i + 1..] {
                if let Some(s) = unify(tree, x, y) {
                    out.push(vec![s]);
                }
            }
        }
    }
    out
}

/// The merge or absorb step joining `x` and `y`, if they are siblings or
/// on one path.
pub(super) fn unify(tree: &FTree, x: NodeId, y: NodeId) -> Option<Step> {
    let (ax, ay) = (rep_attr(tree, x), rep_attr(tree, y));
    if tree.parent(x) == tree.parent(y) {
        Some(Step::Merge(ax, ay))
    } else if tree.is_ancestor(x, y) {
        Some(Step::Absorb(ax, ay))
    } else if tree.is_ancestor(y, x) {
        Some(Step::Absorb(ay, ax))
    } else {
        None
    }
}

pub(super) fn is_target(tree: &FTree, conditions: &[(AttrId, AttrId)]) -> bool {
    conditions.iter().all(|&(a, b)| tree.node_of(a) == tree.node_of(b))
}

/// Applies steps, appending a normalisation if the result needs one.
pub(super) fn apply_all(tree: &FTree, steps: &mut Vec<Step>) -> Result<FTree> {
    let mut t = tree.clone();
    for s in steps.iter() {
        t = s.apply_tree(&t)?;
    }
    if !t.is_normalised() {
        t = Step::Normalise.apply_tree(&t)?;
        steps.push(Step::Normalise);
    }
    Ok(t)
}

pub(super) fn exhaustive(p: &Planner, tree: &FTree, conditions: &[(AttrId, AttrId)]) -> Result<FPlan> {
    p.check(tree, conditions)?;
    if !tree.is_normalised() {
        return Err(Error::Precondition("the input f-tree is not normalised".into()));
    }
    let est = |t: &FTree| -> Result<f64> {
        match (p.order, p.stats) {
            (PlanOrder::Estimate, Some(st)) => t.size_estimate(st),
            _ => Ok(0.0),
        }
    };
    let dist_of = |prev: Option<&Vertex>, cost: Cost, e: f64| -> Dist {
        match p.order {
            PlanOrder::Bound => Dist::Bound(match prev {
                Some(Vertex { dist: Dist::Bound(d), .. }) => (*d).max(cost),
                _ => cost,
            }),
            PlanOrder::Estimate => {
                let base = match prev {
                    Some(Vertex { dist: Dist::Estimate(t, _), .. }) => f64::from_bits(*t),
                    _ => 0.0,
                };
                Dist::Estimate((base + e).to_bits(), e.to_bits())
            }
        }
    };

    let c0 = tree.s_cost(p.mode);
    let e0 = est(tree)?;
    let mut verts = vec![Vertex {
        tree: tree.clone(),
        prev: None,
        steps: Vec::new(),
        depth: 0,
        dist: dist_of(None, c0, e0),
        own_cost: c0,
        own_est: e0,
        done: false,
    }];
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    index.insert(tree.canonical_key(), 0);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((verts[0].dist, 0usize, 0usize)));

    let mut found: Option<Dist> = None;
    let mut targets: Vec<usize> = Vec::new();
    while let Some(Reverse((d, depth, i))) = heap.pop() {
        if verts[i].done || verts[i].dist != d || verts[i].depth != depth {
            continue;
        }
        if let Some(f) = found {
            if d > f {
                break;
            }
        }
        verts[i].done = true;
        if is_target(&verts[i].tree, conditions) {
            if p.order == PlanOrder::Estimate {
                targets.push(i);
                break;
            }
            found = Some(d);
            targets.push(i);
            continue;
        }
        for mut steps in moves(&verts[i].tree, conditions) {
            let next = apply_all(&verts[i].tree, &mut steps)?;
            let key = next.canonical_key();
            if let Some(&j) = index.get(&key) {
                if verts[j].done {
                    continue;
                }
                let nd = dist_of(Some(&verts[i]), verts[j].own_cost, verts[j].own_est);
                if (nd, depth + 1) < (verts[j].dist, verts[j].depth) {
                    let v = &mut verts[j];
                    v.dist = nd;
                    v.depth = depth + 1;
                    v.prev = Some(i);
                    v.steps = steps;
                    heap.push(Reverse((nd, depth + 1, j)));
                }
                continue;
            }
            if verts.len() >= p.budget {
                return Err(Error::Budget(p.budget));
            }
            let c = next.s_cost(p.mode);
            let e = est(&next)?;
            let nd = dist_of(Some(&verts[i]), c, e);
            let j = verts.len();
            index.insert(key, j);
            verts.push(Vertex {
                tree: next,
                prev: Some(i),
                steps,
                depth: depth + 1,
                dist: nd,
                own_cost: c,
                own_est: e,
                done: false,
            });
            heap.push(Reverse((nd, depth + 1, j)));
        }
    }

    let best = targets
        .iter()
        .copied()
        .min_by_key(|&i| (verts[i].own_cost, verts[i].depth, i))
        .ok_or_else(|| Error::Other("no f-tree satisfies the conditions".into()))?;
    let mut chain = Vec::new();
    let mut cur = Some(best);
    while let Some(i) = cur {
        chain.push(i);
        cur = verts[i].prev;
    }
    chain.reverse();
    let mut steps = Vec::new();
    let mut t = verts[chain[0]].tree.clone();
    let mut trees = vec![t.clone()];
    for &to in &chain[1..] {
        for s in &verts[to].steps {
            t = s.apply_tree(&t)?;
            trees.push(t.clone());
            steps.push(s.clone());
        }
    }
    p.plan(steps, trees)
}
