//! Cost measures of f-trees: the asymptotic exponent s(T) and the
//! catalogue-based size estimate.

use std::collections::HashSet;

use num_rational::Rational64;

use super::{lp, FTree};
use crate::baseline;
use crate::catalog::{AttrId, Catalogue, Database, Schema};
use crate::error::{Error, Result};
use crate::query::Query;
use crate::value::Value;

/// Exact cost bound: the size of any representation over the tree is
/// O(|D|^cost).
pub type Cost = Rational64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CostMode {
    #[default]
    Fractional,
    Integral,
}

impl FTree {
    /// Atom coverage masks of the non-constant classes of every
    /// root-to-leaf path.
    pub fn path_cover_masks(&self) -> Vec<Vec<u64>> {
        self.paths()
            .into_iter()
            .map(|p| {
                p.into_iter()
                    .filter(|&n| !self.is_const(n))
                    .map(|n| self.cover_mask(n))
                    .collect()
            })
            .collect()
    }

    /// s(T): the largest edge cover number over root-to-leaf paths.
    pub fn s_cost(&self, mode: CostMode) -> Cost {
        self.path_cover_masks()
            .iter()
            .map(|masks| match mode {
                CostMode::Fractional => lp::fractional_cover(masks),
                CostMode::Integral => Cost::from_integer(lp::integral_cover(masks) as i64),
            })
            .max()
            .unwrap_or_else(|| Cost::from_integer(0))
    }

    /// Estimated number of singletons of a representation over this tree.
    ///
    /// Each node contributes its visible attribute count times the estimated
    /// number of distinct value combinations on its root path, see
    /// [`Estimator::combinations`].
    pub fn size_estimate(&self, stats: &Catalogue) -> Result<f64> {
        let mut classes: Vec<Vec<AttrId>> = self.node_ids().map(|n| self.label(n).to_vec()).collect();
        classes.extend(self.hidden().iter().cloned());
        let est = Estimator::new(self.schema(), stats, classes);
        let mut total = 0.0;
        for n in self.node_ids() {
            let visible = self.visible(n);
            if visible == 0 {
                continue;
            }
            let path: Vec<&[AttrId]> = self
                .ancestors_and_self(n)
                .into_iter()
                .filter(|&p| !self.is_const(p))
                .map(|p| self.label(p))
                .collect();
            total += visible as f64 * est.combinations(&path)?;
        }
        Ok(total)
    }
}

/// Catalogue-based estimates of distinct value combinations.
pub struct Estimator<'a> {
    schema: &'a Schema,
    stats: &'a Catalogue,
    /// All classes of the query, for the join selectivities.
    classes: Vec<Vec<AttrId>>,
}

impl<'a> Estimator<'a> {
    pub fn new(schema: &'a Schema, stats: &'a Catalogue, classes: Vec<Vec<AttrId>>) -> Self {
        Estimator { schema, stats, classes }
    }

    fn attr_distinct(&self, a: AttrId) -> Result<f64> {
        let attr = self.schema.attr(a);
        self.stats
            .distinct_at(&attr.relation, attr.column, &attr.name)
            .map(|v| v as f64)
            .ok_or_else(|| Error::MissingStatistics(format!("{}.{}", attr.relation, attr.name)))
    }

    /// The smallest distinct count of the class's attributes.
    pub fn class_distinct(&self, label: &[AttrId]) -> Result<f64> {
        let mut v = f64::INFINITY;
        for &a in label {
            v = v.min(self.attr_distinct(a)?);
        }
        Ok(v)
    }

    /// Distinct value combinations of the classes `path`: the product of
    /// their distinct counts, capped by the System-R estimate of the join of
    /// the atoms covering them.
    pub fn combinations(&self, path: &[&[AttrId]]) -> Result<f64> {
        let mut product = 1.0;
        let mut covering = 0u64;
        for label in path {
            product *= self.class_distinct(label)?;
            covering |= label.iter().fold(0u64, |m, &a| m | 1 << self.schema.atom_of(a));
        }
        Ok(product.min(self.cap(covering)?))
    }

    /// System-R estimate of the size of the join of the atoms in `covering`.
    pub fn cap(&self, covering: u64) -> Result<f64> {
        let mut cap = 1.0;
        for (i, atom) in self.schema.atoms().iter().enumerate() {
            if covering >> i & 1 == 1 {
                let rows = self
                    .stats
                    .row_count(&atom.relation)
                    .ok_or_else(|| Error::MissingStatistics(atom.relation.clone()))?;
                cap *= rows as f64;
            }
        }
        for class in &self.classes {
            let inside: Vec<AttrId> = class
                .iter()
                .copied()
                .filter(|&a| covering >> self.schema.atom_of(a) & 1 == 1)
                .collect();
            if inside.len() >= 2 {
                let mut prod = 1.0;
                let mut min = f64::INFINITY;
                for &a in &inside {
                    let v = self.attr_distinct(a)?.max(1.0);
                    prod *= v;
                    min = min.min(v);
                }
                cap /= prod / min;
            }
        }
        Ok(cap)
    }
}

/// Exact number of singletons of the representation of `query`'s result
/// over `tree`: for every node, its visible attribute count times the
/// number of distinct value combinations on its root path, computed by the
/// flat engine.
pub fn exact_size(tree: &FTree, db: &Database, query: &Query) -> Result<u64> {
    let mut full = query.clone();
    full.set_projection(None);
    let result = baseline::eval_flat(db, &full)?;
    let column = |a: AttrId| result.column_of(a).expect("attribute missing from the flat result");
    let mut total = 0u64;
    for n in tree.node_ids() {
        let visible = tree.visible(n) as u64;
        if visible == 0 {
            continue;
        }
        let cols: Vec<usize> = tree
            .ancestors_and_self(n)
            .into_iter()
            .map(|p| column(tree.label(p)[0]))
            .collect();
        let distinct: HashSet<Vec<Value>> = result
            .rows()
            .iter()
            .map(|r| cols.iter().map(|&c| r[c]).collect())
            .collect();
        total += visible * distinct.len() as u64;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Schema;

    #[test]
    fn estimate_of_a_two_level_path() {
        let s = Schema::from_atoms(&[("R", &["A", "B"])]);
        let mut t = FTree::new(s);
        let a = t.add(None, &["R.A"]).unwrap();
        t.add(Some(a), &["R.B"]).unwrap();
        let mut stats = Catalogue::new();
        stats.set_row_count("R", 4);
        stats.set_distinct("R", "A", 2);
        stats.set_distinct("R", "B", 3);
        assert_eq!(t.size_estimate(&stats).unwrap(), 6.0);
    }

    #[test]
    fn missing_statistics_are_reported() {
        let s = Schema::from_atoms(&[("R", &["A"])]);
        let mut t = FTree::new(s);
        t.add(None, &["R.A"]).unwrap();
        let err = t.size_estimate(&Catalogue::new()).unwrap_err();
        assert!(matches!(err, Error::MissingStatistics(ref m) if m == "R.A"));
    }

    #[test]
    fn empty_forest_costs_nothing() {
        let t = FTree::new(Schema::from_atoms(&[]));
        assert_eq!(t.s_cost(CostMode::Fractional), Cost::from_integer(0));
    }
}
