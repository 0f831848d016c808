//! Optimal f-trees for flat inputs.
//!
//! Classes covered by the same set of atoms are interchangeable: stacking
//! them on one path costs as much as a single one. They are grouped into
//! meta-classes, each placed as a chain. A connected set of meta-classes
//! becomes a tree: one meta-class is chosen as the root and the connected
//! components of the rest become its subtrees. The cost of a choice depends
//! only on the set and on the atom sets of the ancestors above it, which
//! key the memo table.
//!
//! Trees are compared by the exponents of their nodes, the cost of the
//! path from the root to each node, sorted in decreasing order. The first
//! entry is the tree's cost; the rest prefer trees with fewer nodes at
//! high exponents, since a factorisation holds about `|D|^e` values of a
//! node with exponent `e`.

use std::collections::HashMap;

use crate::catalog::{equivalence_classes, AttrId, Catalogue};
use crate::error::{Error, Result};
use crate::frep::FRep;
use crate::ftree::{fractional_cover, integral_cover, Cost, CostMode, Estimator, FTree, NodeId};
use crate::operators;
use crate::query::{CmpOp, Query};

/// An f-tree of `query` with the smallest fractional cost.
pub fn optimal_ftree(query: &Query) -> Result<FTree> {
    optimal_ftree_with(query, CostMode::Fractional)
}

/// An f-tree of `query` with the smallest cost under `mode`. Classes fixed
/// to a constant by an equality become constant roots. Among equally cheap
/// trees the one with the fewest nodes at high exponents wins, then the
/// first root choice in meta-class order.
pub fn optimal_ftree_with(query: &Query, mode: CostMode) -> Result<FTree> {
    let shape = Shape::of(query)?;
    let mut dp = Dp::new(&shape, mode);
    let mut tree = FTree::new(query.schema().clone());
    for comp in dp.components(shape.all()) {
        let anc = Vec::new();
        dp.build(comp, &anc, None, &shape.metas, &mut tree)?;
    }
    shape.finish(tree)
}

/// An f-tree of `query` with the smallest fractional cost and, among those,
/// the smallest size estimate under the catalogue `stats`.
pub fn optimal_ftree_for(query: &Query, stats: &Catalogue) -> Result<FTree> {
    let shape = Shape::of(query)?;
    let mut dp = Dp::new(&shape, CostMode::Fractional);
    let comps = dp.components(shape.all());
    let mut bound = Cost::from_integer(0);
    for &c in &comps {
        bound = bound.max(dp.solve(c, &[]).0[0]);
    }
    let est = Estimator::new(query.schema(), stats, equivalence_classes(query).into_iter().map(|c| c.members).collect());
    let output = query.output_attrs();
    let visible: Vec<Vec<f64>> = shape
        .metas
        .iter()
        .map(|(_, v)| v.iter().map(|c| c.iter().filter(|a| output.contains(a)).count() as f64).collect())
        .collect();
    let distinct = shape
        .metas
        .iter()
        .map(|(_, v)| v.iter().map(|c| est.class_distinct(c)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut fit = Fit { dp, bound, est, visible, distinct, memo: HashMap::new() };
    let mut tree = FTree::new(query.schema().clone());
    for c in comps {
        fit.build(c, 0, None, &shape.metas, &mut tree)?;
    }
    shape.finish(tree)
}

type Metas = Vec<(u64, Vec<Vec<AttrId>>)>;

/// Meta-classes of a query and its classes fixed to constants.
struct Shape {
    /// Meta-classes in order of their first class; members sorted by class
    /// id.
    metas: Metas,
    fixed: Vec<Vec<AttrId>>,
}

impl Shape {
    fn of(query: &Query) -> Result<Shape> {
        let schema = query.schema().clone();
        let mask_of = |members: &[AttrId]| members.iter().fold(0u64, |m, &a| m | 1 << schema.atom_of(a));
        let mut metas: Metas = Vec::new();
        let mut fixed = Vec::new();
        for c in equivalence_classes(query) {
            let konst = query
                .constants()
                .iter()
                .any(|p| p.op == CmpOp::Eq && c.members.contains(&p.attr));
            if konst {
                fixed.push(c.members);
                continue;
            }
            let m = mask_of(&c.members);
            match metas.iter_mut().find(|(mm, _)| *mm == m) {
                Some((_, v)) => v.push(c.members),
                None => metas.push((m, vec![c.members])),
            }
        }
        for (_, v) in &mut metas {
            v.sort_by_key(|c| schema.class_id(c));
        }
        if metas.len() > 128 {
            return Err(Error::Other(format!(
                "{} distinct attribute coverings exceed the supported 128",
                metas.len()
            )));
        }
        Ok(Shape { metas, fixed })
    }

    fn all(&self) -> u128 {
        if self.metas.len() == 128 {
            u128::MAX
        } else {
            (1u128 << self.metas.len()) - 1
        }
    }

    /// Adds the constant roots and normalises.
    fn finish(&self, mut tree: FTree) -> Result<FTree> {
        for c in &self.fixed {
            let n = tree.add_node(None, c)?;
            tree.set_const(n, true);
        }
        Ok(operators::normalise(FRep::empty(tree))?.into_parts().0)
    }
}

/// Node exponents in decreasing order.
type Profile = Vec<Cost>;

type Memo = HashMap<(u128, Vec<u64>), (Profile, usize)>;

fn merge_desc(a: &mut Profile, b: &[Cost]) {
    a.extend_from_slice(b);
    a.sort_unstable_by(|x, y| y.cmp(x));
}

struct Dp {
    masks: Vec<u64>,
    /// Number of classes of each meta-class.
    chain: Vec<usize>,
    mode: CostMode,
    memo: Memo,
}

fn bits(set: u128) -> impl Iterator<Item = usize> {
    (0..128).filter(move |&i| set >> i & 1 == 1)
}

/// Adds `m` to a sorted antichain of minimal masks.
fn with_mask(anc: &[u64], m: u64) -> Vec<u64> {
    if anc.iter().any(|&a| a & m == a) {
        return anc.to_vec();
    }
    let mut out: Vec<u64> = anc.iter().copied().filter(|&a| a & m != m).collect();
    out.push(m);
    out.sort_unstable();
    out
}

impl Dp {
    fn new(shape: &Shape, mode: CostMode) -> Dp {
        Dp {
            masks: shape.metas.iter().map(|(m, _)| *m).collect(),
            chain: shape.metas.iter().map(|(_, v)| v.len()).collect(),
            mode,
            memo: HashMap::new(),
        }
    }

    fn components(&self, set: u128) -> Vec<u128> {
        let mut left = set;
        let mut out = Vec::new();
        while left != 0 {
            let first = left.trailing_zeros() as usize;
            let mut comp = 1u128 << first;
            let mut cover = self.masks[first];
            loop {
                let grow: u128 = bits(left & !comp)
                    .filter(|&i| self.masks[i] & cover != 0)
                    .fold(0, |s, i| s | 1 << i);
                if grow == 0 {
                    break;
                }
                comp |= grow;
                cover = bits(comp).fold(0, |c, i| c | self.masks[i]);
            }
            out.push(comp);
            left &= !comp;
        }
        out
    }

    fn path_cost(&self, masks: &[u64]) -> Cost {
        match self.mode {
            CostMode::Fractional => fractional_cover(masks),
            CostMode::Integral => Cost::from_integer(integral_cover(masks) as i64),
        }
    }

    /// Best profile of a tree over the connected set `set` below ancestors
    /// with coverings `anc`, and the root achieving it.
    fn solve(&mut self, set: u128, anc: &[u64]) -> (Profile, usize) {
        let key = (set, anc.to_vec());
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let mut best: Option<(Profile, usize)> = None;
        for r in bits(set) {
            let below = with_mask(anc, self.masks[r]);
            let own = self.path_cost(&below);
            if best.as_ref().is_some_and(|(b, _)| own > b[0]) {
                continue;
            }
            let mut profile = vec![own; self.chain[r]];
            let rest = set & !(1u128 << r);
            for comp in self.components(rest) {
                let (p, _) = self.solve(comp, &below);
                merge_desc(&mut profile, &p);
            }
            if best.as_ref().map_or(true, |(b, _)| profile < *b) {
                best = Some((profile, r));
            }
        }
        let v = best.expect("non-empty set");
        self.memo.insert(key, v.clone());
        v
    }

    fn build(
        &mut self,
        set: u128,
        anc: &[u64],
        parent: Option<NodeId>,
        metas: &Metas,
        tree: &mut FTree,
    ) -> Result<()> {
        let (_, r) = self.solve(set, anc);
        let mut at = parent;
        for class in &metas[r].1 {
            at = Some(tree.add_node(at, class)?);
        }
        let below = with_mask(anc, self.masks[r]);
        let rest = set & !(1u128 << r);
        for comp in self.components(rest) {
            self.build(comp, &below, at, metas, tree)?;
        }
        Ok(())
    }
}

/// Smallest size estimate over trees whose paths all cost at most `bound`.
/// The estimate of a node depends on all its ancestors, so the memo is
/// keyed on the set of ancestor meta-classes.
struct Fit<'a> {
    dp: Dp,
    bound: Cost,
    est: Estimator<'a>,
    /// Visible attributes of every class of every meta-class.
    visible: Vec<Vec<f64>>,
    /// Distinct count of every class of every meta-class.
    distinct: Vec<Vec<f64>>,
    memo: HashMap<(u128, u128), Option<Choice>>,
}

/// Estimate, root meta-class and order of its classes.
type Choice = (f64, usize, Vec<usize>);

/// Longest chain whose order is searched exhaustively; longer chains are
/// sorted by distinct count.
const MAX_ORDERED_CHAIN: usize = 12;

/// The order of a chain of classes with distinct counts `d` and weights `w`
/// below `base` value combinations that minimises the sum of
/// `w * min(base * prefix product, cap)`, with that sum.
fn chain_order(d: &[f64], w: &[f64], base: f64, cap: f64) -> (f64, Vec<usize>) {
    let k = d.len();
    if k > MAX_ORDERED_CHAIN {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
        let mut p = base;
        let mut total = 0.0;
        for &i in &order {
            p *= d[i];
            total += w[i] * p.min(cap);
        }
        return (total, order);
    }
    // best[S]: cheapest way to place the classes of S first.
    let full = (1usize << k) - 1;
    let mut best = vec![(f64::INFINITY, usize::MAX); full + 1];
    best[0] = (0.0, usize::MAX);
    for set in 0..full {
        let (c, _) = best[set];
        if c == f64::INFINITY {
            continue;
        }
        let p = (0..k).filter(|&i| set >> i & 1 == 1).fold(base, |p, i| p * d[i]);
        for i in (0..k).filter(|&i| set >> i & 1 == 0) {
            let next = set | 1 << i;
            let cost = c + w[i] * (p * d[i]).min(cap);
            if cost < best[next].0 {
                best[next] = (cost, i);
            }
        }
    }
    let mut order = Vec::with_capacity(k);
    let mut set = full;
    while set != 0 {
        let i = best[set].1;
        order.push(i);
        set &= !(1 << i);
    }
    order.reverse();
    (best[full].0, order)
}

impl Fit<'_> {
    fn solve(&mut self, set: u128, anc: u128) -> Result<Option<Choice>> {
        if let Some(v) = self.memo.get(&(set, anc)) {
            return Ok(v.clone());
        }
        let masks = bits(anc).fold(Vec::new(), |a, i| with_mask(&a, self.dp.masks[i]));
        let covering = bits(anc).fold(0u64, |c, i| c | self.dp.masks[i]);
        let base: f64 = bits(anc).flat_map(|i| self.distinct[i].iter()).product();
        let mut best: Option<Choice> = None;
        for r in bits(set) {
            if self.dp.path_cost(&with_mask(&masks, self.dp.masks[r])) > self.bound {
                continue;
            }
            let cap = self.est.cap(covering | self.dp.masks[r])?;
            let (mut total, order) = chain_order(&self.distinct[r], &self.visible[r], base, cap);
            let below = anc | 1u128 << r;
            let mut feasible = true;
            for comp in self.dp.components(set & !(1u128 << r)) {
                match self.solve(comp, below)? {
                    Some((c, _, _)) => total += c,
                    None => {
                        feasible = false;
                        break;
                    }
                }
            }
            if feasible && best.as_ref().map_or(true, |(b, _, _)| total < *b) {
                best = Some((total, r, order));
            }
        }
        self.memo.insert((set, anc), best.clone());
        Ok(best)
    }

    fn build(&mut self, set: u128, anc: u128, parent: Option<NodeId>, metas: &Metas, tree: &mut FTree) -> Result<()> {
        let (_, r, order) = self.solve(set, anc)?.expect("the bound is attainable");
        let mut at = parent;
        for i in order {
            at = Some(tree.add_node(at, &metas[r].1[i])?);
        }
        for comp in self.dp.components(set & !(1u128 << r)) {
            self.build(comp, anc | 1u128 << r, at, metas, tree)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Schema;

    #[test]
    fn antichain_keeps_minimal_masks() {
        assert_eq!(with_mask(&[0b011], 0b111), vec![0b011]);
        assert_eq!(with_mask(&[0b011, 0b100], 0b001), vec![0b001, 0b100]);
    }

    #[test]
    fn chain_query_costs() {
        let s = Schema::from_atoms(&[("R", &["A", "B"]), ("S", &["B", "C"]), ("T", &["C", "D"])]);
        let q = Query::new(s).equal("R.B", "S.B").unwrap().equal("S.C", "T.C").unwrap();
        let t = optimal_ftree(&q).unwrap();
        assert_eq!(t.s_cost(CostMode::Fractional), Cost::from_integer(2));
        assert!(t.check_path_constraint().is_ok());
        assert!(t.is_normalised());
        assert_eq!(t.node_count(), 4);
        let single = Query::new(Schema::from_atoms(&[("R", &["A", "B", "C"])]));
        assert_eq!(optimal_ftree(&single).unwrap().s_cost(CostMode::Fractional), Cost::from_integer(1));
    }
}
