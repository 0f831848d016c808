//! Greedy plan construction.
//!
//! For every unsatisfied condition `A = B` three restructurings are costed:
//! swapping A upwards until it is an ancestor of B and absorbing B, the
//! same with the roles exchanged, and moving the deeper of the two upwards
//! until they are siblings and merging them. The cheapest sub-plan over all
//! conditions is appended and the process repeats on the new tree.

use super::search::is_target;
use super::{rep_attr, FPlan, PlanCost, PlanOrder, Planner, Step};
use crate::catalog::AttrId;
use crate::error::{Error, Result};
use crate::ftree::{FTree, NodeId};

#[derive(Clone, Copy)]
enum Scenario {
    /// Raise the first node above the second.
    Raise,
    Siblings,
}

type SubPlan = (Vec<Step>, Vec<FTree>);

/// Applies `step` to `tree`, normalising afterwards if needed, and records
/// every resulting tree.
fn push(tree: &FTree, step: Step, steps: &mut Vec<Step>, trees: &mut Vec<FTree>) -> Result<FTree> {
    let mut t = step.apply_tree(tree)?;
    trees.push(t.clone());
    steps.push(step);
    if !t.is_normalised() {
        t = Step::Normalise.apply_tree(&t)?;
        trees.push(t.clone());
        steps.push(Step::Normalise);
    }
    Ok(t)
}

fn raise(tree: &FTree, n: NodeId, steps: &mut Vec<Step>, trees: &mut Vec<FTree>) -> Result<FTree> {
    let p = tree.parent(n).expect("not a root");
    push(tree, Step::Swap(rep_attr(tree, p), rep_attr(tree, n)), steps, trees)
}

fn scenario(tree: &FTree, x: NodeId, y: NodeId, kind: Scenario) -> Result<Option<SubPlan>> {
    let mut steps = Vec::new();
    let mut trees = Vec::new();
    let mut t = tree.clone();
    let limit = 2 * tree.node_count() + 2;
    for _ in 0..limit {
        match kind {
            Scenario::Raise => {
                if t.is_ancestor(x, y) {
                    push(&t, Step::Absorb(rep_attr(&t, x), rep_attr(&t, y)), &mut steps, &mut trees)?;
                    return Ok(Some((steps, trees)));
                }
                if t.parent(x).is_none() {
                    return Ok(None);
                }
                t = raise(&t, x, &mut steps, &mut trees)?;
            }
            Scenario::Siblings => {
                if t.parent(x) == t.parent(y) {
                    push(&t, Step::Merge(rep_attr(&t, x), rep_attr(&t, y)), &mut steps, &mut trees)?;
                    return Ok(Some((steps, trees)));
                }
                if t.is_ancestor(x, y) || t.is_ancestor(y, x) {
                    return Ok(None);
                }
                let n = if t.depth(y) > t.depth(x) { y } else { x };
                t = raise(&t, n, &mut steps, &mut trees)?;
            }
        }
    }
    Err(Error::Other("restructuring did not terminate".into()))
}

fn cost(p: &Planner, start: &FTree, trees: &[FTree]) -> Result<PlanCost> {
    match p.order {
        PlanOrder::Bound => {
            let mut worst = start.s_cost(p.mode);
            for t in trees {
                worst = worst.max(t.s_cost(p.mode));
            }
            let last = trees.last().map_or(worst, |t| t.s_cost(p.mode));
            Ok(PlanCost::Bound { plan: worst, last })
        }
        PlanOrder::Estimate => {
            let st = p.stats.expect("checked");
            let mut total = 0.0;
            let mut last = 0.0;
            for t in trees {
                last = t.size_estimate(st)?;
                total += last;
            }
            Ok(PlanCost::Estimate { total, last })
        }
    }
}

pub(super) fn greedy(p: &Planner, tree: &FTree, conditions: &[(AttrId, AttrId)]) -> Result<FPlan> {
    p.check(tree, conditions)?;
    if !tree.is_normalised() {
        return Err(Error::Precondition("the input f-tree is not normalised".into()));
    }
    let mut cur = tree.clone();
    let mut steps = Vec::new();
    let mut trees = vec![cur.clone()];
    while !is_target(&cur, conditions) {
        let mut best: Option<(PlanCost, SubPlan)> = None;
        for &(a, b) in conditions {
            let (x, y) = (cur.node_of(a).unwrap(), cur.node_of(b).unwrap());
            if x == y {
                continue;
            }
            for (u, v, kind) in [(x, y, Scenario::Raise), (y, x, Scenario::Raise), (x, y, Scenario::Siblings)] {
                if let Some(sub) = scenario(&cur, u, v, kind)? {
                    let c = cost(p, &cur, &sub.1)?;
                    if best.as_ref().map_or(true, |(bc, _)| c < *bc) {
                        best = Some((c, sub));
                    }
                }
            }
        }
        let (_, (s, ts)) = best.ok_or_else(|| Error::Other("no restructuring satisfies the conditions".into()))?;
        cur = ts.last().expect("non-empty sub-plan").clone();
        steps.extend(s);
        trees.extend(ts);
    }
    p.plan(steps, trees)
}
