//! F-plan search.
//!
//! A plan is a sequence of operator steps together with the f-trees it
//! passes through. Plans are compared either by their worst asymptotic cost
//! (then the cost of the final tree) or by the sum of the estimated sizes of
//! all trees they pass through, the initial one included.

mod greedy;
mod optimal;
mod plan;
mod search;

use std::cmp::Ordering;

use crate::catalog::{AttrId, Catalogue};
use crate::error::{Error, Result};
use crate::frep::FRep;
use crate::ftree::{Cost, CostMode, FTree, NodeId};
use crate::operators;
use crate::query::{CmpOp, Query};
use crate::value::Value;

pub use optimal::{optimal_ftree, optimal_ftree_for, optimal_ftree_with};
pub use plan::TraceLine;

/// Default cap on the number of f-trees the exhaustive search may visit.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// One operator application. Nodes are named by any attribute they carry.
#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    PushUp(AttrId),
    Normalise,
    /// Parent, then child.
    Swap(AttrId, AttrId),
    Merge(AttrId, AttrId),
    /// Ancestor, then descendant.
    Absorb(AttrId, AttrId),
    Select(AttrId, CmpOp, Value),
    Project(Vec<AttrId>),
}

impl Step {
    fn node(tree: &FTree, a: AttrId) -> Result<NodeId> {
        tree.node_of(a).ok_or_else(|| {
            let name = if (a as usize) < tree.schema().attr_count() {
                tree.schema().qualified(a).to_owned()
            } else {
                format!("#{a}")
            };
            Error::UnknownAttribute(format!("{name} (not in the tree)"))
        })
    }

    /// Applies the step to a representation.
    pub fn apply(&self, rep: FRep) -> Result<FRep> {
        let t = rep.tree();
        match self {
            Step::PushUp(b) => {
                let b = Self::node(t, *b)?;
                operators::pushup(rep, b)
            }
            Step::Normalise => operators::normalise(rep),
            Step::Swap(a, b) => {
                let (a, b) = (Self::node(t, *a)?, Self::node(t, *b)?);
                operators::swap(rep, a, b)
            }
            Step::Merge(a, b) => {
                let (a, b) = (Self::node(t, *a)?, Self::node(t, *b)?);
                operators::merge(rep, a, b)
            }
            Step::Absorb(a, b) => {
                let (a, b) = (Self::node(t, *a)?, Self::node(t, *b)?);
                operators::absorb(rep, a, b)
            }
            Step::Select(a, op, v) => operators::select_const(rep, *a, *op, *v),
            Step::Project(keep) => operators::project(rep, keep),
        }
    }

    /// The f-tree after the step, without touching data.
    pub fn apply_tree(&self, tree: &FTree) -> Result<FTree> {
        Ok(self.apply(FRep::empty(tree.clone()))?.into_parts().0)
    }
}

/// How plans are compared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PlanOrder {
    /// Smallest worst-case cost over all trees, then smallest final cost.
    #[default]
    Bound,
    /// Smallest total estimated size, then smallest final estimate.
    Estimate,
}

/// A comparable plan cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlanCost {
    Bound { plan: Cost, last: Cost },
    Estimate { total: f64, last: f64 },
}

impl PartialOrd for PlanCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (PlanCost::Bound { plan: a, last: b }, PlanCost::Bound { plan: c, last: d }) => Some((a, b).cmp(&(c, d))),
            (PlanCost::Estimate { total: a, last: b }, PlanCost::Estimate { total: c, last: d }) => {
                Some(a.total_cmp(c).then(b.total_cmp(d)))
            }
            _ => None,
        }
    }
}

/// A plan together with the trees it passes through.
#[derive(Clone, Debug)]
pub struct FPlan {
    pub steps: Vec<Step>,
    /// The input tree followed by the tree after every step.
    pub trees: Vec<FTree>,
    /// Largest cost of any tree of the plan.
    pub bound_cost: Cost,
    pub final_cost: Cost,
    /// Sum of the size estimates of all trees, when statistics were given.
    pub estimate_cost: Option<f64>,
    /// Size estimate of the final tree, when statistics were given.
    pub final_estimate: Option<f64>,
}

impl FPlan {
    /// Replays `steps` on `tree` and records costs.
    pub fn from_steps(tree: &FTree, steps: Vec<Step>, mode: CostMode, stats: Option<&Catalogue>) -> Result<FPlan> {
        let mut trees = vec![tree.clone()];
        for s in &steps {
            let next = s.apply_tree(trees.last().unwrap())?;
            trees.push(next);
        }
        FPlan::from_trees(steps, trees, mode, stats)
    }

    pub(crate) fn from_trees(steps: Vec<Step>, trees: Vec<FTree>, mode: CostMode, stats: Option<&Catalogue>) -> Result<FPlan> {
        let costs: Vec<Cost> = trees.iter().map(|t| t.s_cost(mode)).collect();
        let (estimate_cost, final_estimate) = match stats {
            Some(st) => {
                let ests = trees.iter().map(|t| t.size_estimate(st)).collect::<Result<Vec<f64>>>()?;
                (Some(ests.iter().sum()), ests.last().copied())
            }
            None => (None, None),
        };
        Ok(FPlan {
            bound_cost: *costs.iter().max().unwrap(),
            final_cost: *costs.last().unwrap(),
            steps,
            trees,
            estimate_cost,
            final_estimate,
        })
    }

    pub fn input(&self) -> &FTree {
        &self.trees[0]
    }

    pub fn output(&self) -> &FTree {
        self.trees.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }
}

/// Cost of a plan under an order. Estimate order needs a plan built with
/// statistics.
pub fn plan_cost(plan: &FPlan, order: PlanOrder) -> Result<PlanCost> {
    match order {
        PlanOrder::Bound => Ok(PlanCost::Bound { plan: plan.bound_cost, last: plan.final_cost }),
        PlanOrder::Estimate => match (plan.estimate_cost, plan.final_estimate) {
            (Some(total), Some(last)) => Ok(PlanCost::Estimate { total, last }),
            _ => Err(Error::MissingStatistics("the plan (built without a catalogue)".into())),
        },
    }
}

/// Search settings shared by the exhaustive and greedy planners.
#[derive(Clone, Copy, Debug)]
pub struct Planner<'a> {
    pub order: PlanOrder,
    pub mode: CostMode,
    pub budget: usize,
    pub stats: Option<&'a Catalogue>,
}

impl<'a> Planner<'a> {
    pub fn new(order: PlanOrder) -> Planner<'a> {
        Planner { order, mode: CostMode::Fractional, budget: DEFAULT_BUDGET, stats: None }
    }

    pub fn stats(mut self, stats: &'a Catalogue) -> Planner<'a> {
        self.stats = Some(stats);
        self
    }

    pub fn budget(mut self, budget: usize) -> Planner<'a> {
        self.budget = budget;
        self
    }

    pub fn mode(mut self, mode: CostMode) -> Planner<'a> {
        self.mode = mode;
        self
    }

    /// Searches all f-trees reachable by swaps and by the merges and
    /// absorptions the conditions call for.
    pub fn exhaustive(&self, tree: &FTree, conditions: &[(AttrId, AttrId)]) -> Result<FPlan> {
        search::exhaustive(self, tree, conditions)
    }

    /// Satisfies one condition at a time, choosing the cheapest condition
    /// and restructuring scenario at every round.
    pub fn greedy(&self, tree: &FTree, conditions: &[(AttrId, AttrId)]) -> Result<FPlan> {
        greedy::greedy(self, tree, conditions)
    }

    fn check(&self, tree: &FTree, conditions: &[(AttrId, AttrId)]) -> Result<()> {
        if self.order == PlanOrder::Estimate && self.stats.is_none() {
            return Err(Error::MissingStatistics("estimate-based planning (no catalogue)".into()));
        }
        tree.validate()?;
        for &(a, b) in conditions {
            Step::node(tree, a)?;
            Step::node(tree, b)?;
        }
        Ok(())
    }

    fn plan(&self, steps: Vec<Step>, trees: Vec<FTree>) -> Result<FPlan> {
        FPlan::from_trees(steps, trees, self.mode, self.stats)
    }
}

pub fn exhaustive_plan(tree: &FTree, conditions: &[(AttrId, AttrId)], order: PlanOrder, stats: Option<&Catalogue>) -> Result<FPlan> {
    let mut p = Planner::new(order);
    p.stats = stats;
    p.exhaustive(tree, conditions)
}

pub fn greedy_plan(tree: &FTree, conditions: &[(AttrId, AttrId)], order: PlanOrder, stats: Option<&Catalogue>) -> Result<FPlan> {
    let mut p = Planner::new(order);
    p.stats = stats;
    p.greedy(tree, conditions)
}

/// Search used for the restructuring part of a query plan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Search {
    #[default]
    Exhaustive,
    Greedy,
}

/// The equalities of `query` whose attributes label different nodes of
/// `tree`.
pub fn unsatisfied(tree: &FTree, query: &Query) -> Vec<(AttrId, AttrId)> {
    query
        .equalities()
        .iter()
        .copied()
        .filter(|&(a, b)| tree.node_of(a) != tree.node_of(b))
        .collect()
}

/// A plan evaluating `query` on a representation over `tree`: its constant
/// selections, then the restructuring that satisfies its remaining
/// equalities, then its projection.
pub fn query_plan(p: &Planner, tree: &FTree, query: &Query, search: Search) -> Result<FPlan> {
    let mut steps = Vec::new();
    let mut cur = tree.clone();
    for c in query.constants() {
        let step = Step::Select(c.attr, c.op, c.value.clone());
        cur = step.apply_tree(&cur)?;
        steps.push(step);
    }
    let conditions = unsatisfied(&cur, query);
    let plan = match search {
        Search::Exhaustive => p.exhaustive(&cur, &conditions)?,
        Search::Greedy => p.greedy(&cur, &conditions)?,
    };
    steps.extend(plan.steps);
    if let Some(keep) = query.projection() {
        let visible = plan.trees.last().expect("non-empty").visible_attrs();
        if keep.len() != visible.len() || !visible.iter().all(|a| keep.contains(a)) {
            steps.push(Step::Project(keep.to_vec()));
        }
    }
    FPlan::from_steps(tree, steps, p.mode, p.stats)
}

/// Node pairs of `tree` that the conditions still require to be unified,
/// as a partition of the live nodes.
pub(crate) fn target_groups(tree: &FTree, conditions: &[(AttrId, AttrId)]) -> Vec<Vec<NodeId>> {
    let ids: Vec<NodeId> = tree.node_ids().collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let pos = |n: NodeId| ids.binary_search(&n).expect("live node");
    for &(a, b) in conditions {
        if let (Some(x), Some(y)) = (tree.node_of(a), tree.node_of(b)) {
            let (x, y) = (find(&mut parent, pos(x)), find(&mut parent, pos(y)));
            if x != y {
                parent[x.max(y)] = x.min(y);
            }
        }
    }
    let mut groups: Vec<Vec<NodeId>> = Vec::new();
    let mut slot = vec![usize::MAX; ids.len()];
    for i in 0..ids.len() {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(ids[i]);
    }
    groups
}

/// Smallest attribute of a node, used to name it in steps.
pub(crate) fn rep_attr(tree: &FTree, n: NodeId) -> AttrId {
    tree.label(n)[0]
}
