//! Random databases and equi-join queries.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::zipf::Zipf;
use crate::catalog::{AttrId, Database, Relation, Schema};
use crate::error::{Error, Result};
use crate::query::Query;
use crate::value::{Domain, Value};

/// Parameters of one generated workload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    /// Number of relations (R).
    pub relations: usize,
    /// Total number of attributes over all relations (A).
    pub attributes: usize,
    /// Tuples per relation.
    pub tuples: usize,
    /// Values are drawn from `1..=max_value` (M).
    pub max_value: u32,
    /// Zipf skew; uniform values when absent.
    pub zipf: Option<f64>,
    /// Equalities of the flat query (K).
    pub k: usize,
    /// Further equalities of the follow-up query (L).
    pub l: usize,
    pub seed: u64,
    /// Explicit `(arity, tuples)` per relation, overriding `relations`,
    /// `attributes` and `tuples`.
    pub shapes: Option<Vec<(usize, usize)>>,
    /// Build every relation as the product of one value set per column:
    /// a relation of arity `a` and `d^a` tuples draws `d` distinct values
    /// per column.
    #[serde(default)]
    pub product: bool,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            relations: 3,
            attributes: 9,
            tuples: 100,
            max_value: 100,
            zipf: None,
            k: 2,
            l: 0,
            seed: 0,
            shapes: None,
            product: false,
        }
    }
}

impl GenSpec {
    /// `(arity, tuples)` of every relation, before the random remainder of
    /// attributes is placed.
    fn base_shapes(&self) -> Result<Vec<(usize, usize)>> {
        if let Some(s) = &self.shapes {
            if s.is_empty() || s.iter().any(|&(a, _)| a == 0) {
                return Err(Error::InfeasibleSpec("every relation needs an attribute".into()));
            }
            return Ok(s.clone());
        }
        if self.relations == 0 || self.attributes < self.relations {
            return Err(Error::InfeasibleSpec(format!(
                "{} attributes cannot be spread over {} relations",
                self.attributes, self.relations
            )));
        }
        Ok(vec![(self.attributes / self.relations, self.tuples); self.relations])
    }

    pub fn total_attributes(&self) -> usize {
        match &self.shapes {
            Some(s) => s.iter().map(|&(a, _)| a).sum(),
            None => self.attributes,
        }
    }

    pub fn relation_count(&self) -> usize {
        self.shapes.as_ref().map_or(self.relations, Vec::len)
    }

    /// Short description of the value distribution.
    pub fn dist_name(&self) -> String {
        match self.zipf {
            None => "uniform".to_owned(),
            Some(s) => format!("zipf({s})"),
        }
    }
}

/// A generated database with its flat query and follow-up conditions.
#[derive(Clone, Debug)]
pub struct Workload {
    pub db: Database,
    /// Join of all relations under K equalities.
    pub query: Query,
    /// L further equalities, each joining two classes of `query`.
    pub followup: Vec<(AttrId, AttrId)>,
    /// `query` with the follow-up equalities added.
    pub followup_query: Query,
}

struct Classes(Vec<usize>);

impl Classes {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[x] = r;
        r
    }

    /// Picks two distinct classes uniformly and a random member of each.
    fn random_pair(&mut self, rng: &mut ChaCha8Rng) -> (AttrId, AttrId) {
        let n = self.0.len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
        for x in 0..n {
            let r = self.find(x);
            members[r].push(x);
        }
        let classes: Vec<&Vec<usize>> = members.iter().filter(|m| !m.is_empty()).collect();
        let i = rng.gen_range(0..classes.len());
        let mut j = rng.gen_range(0..classes.len() - 1);
        if j >= i {
            j += 1;
        }
        let a = classes[i][rng.gen_range(0..classes[i].len())];
        let b = classes[j][rng.gen_range(0..classes[j].len())];
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra.max(rb)] = ra.min(rb);
        (a as AttrId, b as AttrId)
    }
}

/// The `d` with `d^arity == tuples`.
fn side(arity: usize, tuples: usize) -> Option<usize> {
    let d = (tuples as f64).powf(1.0 / arity as f64).round() as usize;
    (d.checked_pow(arity as u32) == Some(tuples)).then_some(d)
}

fn product(sets: &[Vec<u32>]) -> Vec<Vec<Value>> {
    let mut rows: Vec<Vec<Value>> = vec![Vec::new()];
    for set in sets {
        rows = rows
            .into_iter()
            .flat_map(|r| {
                set.iter().map(move |&v| {
                    let mut r = r.clone();
                    r.push(Value::Int(v as i64));
                    r
                })
            })
            .collect();
    }
    rows
}

/// Generates the workload of `spec`; the same spec always yields the same
/// workload.
pub fn generate(spec: &GenSpec) -> Result<Workload> {
    let mut shapes = spec.base_shapes()?;
    let total = spec.total_attributes();
    if spec.k + spec.l >= total {
        return Err(Error::InfeasibleSpec(format!(
            "K + L = {} must stay below the {} attributes",
            spec.k + spec.l,
            total
        )));
    }
    if spec.max_value == 0 {
        return Err(Error::InfeasibleSpec("values need a range 1..=M with M >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    if spec.shapes.is_none() {
        for i in sample(&mut rng, shapes.len(), spec.attributes % spec.relations) {
            shapes[i].0 += 1;
        }
    }
    let zipf = spec.zipf.map(|s| Zipf::new(spec.max_value, s));

    let mut db = Database::new();
    let mut schema = Schema::new();
    let mut next = 1;
    for (r, &(arity, tuples)) in shapes.iter().enumerate() {
        let name = format!("R{}", r + 1);
        let columns: Vec<String> = (next..next + arity).map(|i| format!("A{i}")).collect();
        next += arity;
        let draw = |rng: &mut ChaCha8Rng| -> u32 {
            match &zipf {
                Some(z) => z.sample(rng),
                None => rng.gen_range(1..=spec.max_value),
            }
        };
        let rows: Vec<Vec<Value>> = if spec.product {
            let d = side(arity, tuples).filter(|&d| d <= spec.max_value as usize).ok_or_else(|| {
                Error::InfeasibleSpec(format!("{name}: {tuples} tuples are not a product of {arity} value sets from 1..={}", spec.max_value))
            })?;
            let sets: Vec<Vec<u32>> = (0..arity)
                .map(|_| {
                    let mut set = BTreeSet::new();
                    while set.len() < d {
                        set.insert(draw(&mut rng));
                    }
                    set.into_iter().collect()
                })
                .collect();
            product(&sets)
        } else {
            (0..tuples)
                .map(|_| (0..arity).map(|_| Value::Int(draw(&mut rng) as i64)).collect())
                .collect()
        };
        schema.add_atom(&name, &name, columns.clone(), Some(vec![Domain::Int; arity]))?;
        db.insert(Relation::new(&name, columns, rows)?);
    }

    let mut query = Query::new(Arc::new(schema));
    let mut classes = Classes((0..total).collect());
    for _ in 0..spec.k {
        let (a, b) = classes.random_pair(&mut rng);
        query.push_equality(a, b);
    }
    let mut followup_query = query.clone();
    let mut followup = Vec::with_capacity(spec.l);
    for _ in 0..spec.l {
        let (a, b) = classes.random_pair(&mut rng);
        followup.push((a, b));
        followup_query.push_equality(a, b);
    }
    Ok(Workload { db, query, followup, followup_query })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::equivalence_classes;

    #[test]
    fn deterministic_and_non_redundant() {
        let spec = GenSpec { relations: 3, attributes: 10, k: 4, l: 3, seed: 7, ..GenSpec::default() };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        for r in a.db.relations() {
            assert_eq!(r.rows(), b.db.relation(r.name()).unwrap().rows());
        }
        assert_eq!(a.query.to_string(), b.query.to_string());
        assert_eq!(equivalence_classes(&a.query).len(), 10 - 4);
        assert_eq!(equivalence_classes(&a.followup_query).len(), 10 - 7);
        let arities: Vec<usize> = a.db.relations().map(|r| r.arity()).collect();
        assert_eq!(arities.iter().sum::<usize>(), 10);
        assert!(arities.iter().all(|&x| x == 3 || x == 4));
    }

    #[test]
    fn product_relations() {
        let spec = GenSpec {
            max_value: 20,
            k: 1,
            shapes: Some(vec![(2, 64), (3, 512)]),
            product: true,
            ..GenSpec::default()
        };
        let w = generate(&spec).unwrap();
        let r = w.db.relation("R2").unwrap();
        assert_eq!(r.len(), 512);
        assert!((0..3).all(|c| r.distinct_count(c) == 8));
        let bad = GenSpec { shapes: Some(vec![(2, 60)]), ..spec };
        assert!(matches!(generate(&bad), Err(Error::InfeasibleSpec(_))));
    }

    #[test]
    fn infeasible_specs() {
        let spec = GenSpec { attributes: 4, relations: 2, k: 4, ..GenSpec::default() };
        assert!(matches!(generate(&spec), Err(Error::InfeasibleSpec(_))));
        let spec = GenSpec { attributes: 2, relations: 3, k: 0, ..GenSpec::default() };
        assert!(matches!(generate(&spec), Err(Error::InfeasibleSpec(_))));
    }
}
