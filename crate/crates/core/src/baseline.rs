//! Flat relational engine: sort-merge joins over sets of tuples.
//!
//! Used as the correctness oracle for the factorised engine and as the
//! flat side of the experiments.

use std::collections::HashSet;

use crate::catalog::{equivalence_classes, AttrId, Database, Relation};
use crate::error::Result;
use crate::limits::Limits;
use crate::query::Query;
use crate::value::Value;

/// A flat query result under set semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatResult {
    attrs: Vec<AttrId>,
    names: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl FlatResult {
    pub fn new(attrs: Vec<AttrId>, names: Vec<String>, rows: Vec<Vec<Value>>) -> FlatResult {
        FlatResult { attrs, names, rows }
    }

    pub fn attrs(&self) -> &[AttrId] {
        &self.attrs
    }

    /// Qualified attribute names of the columns.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<Value>> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_of(&self, attr: AttrId) -> Option<usize> {
        self.attrs.iter().position(|&a| a == attr)
    }

    /// Rows in ascending lexicographic order.
    pub fn sorted_rows(&self) -> Vec<Vec<Value>> {
        let mut rows = self.rows.clone();
        rows.sort_unstable();
        rows
    }

    /// Number of distinct combinations of the given columns.
    pub fn distinct_count(&self, columns: &[usize]) -> usize {
        let set: HashSet<Vec<Value>> = self
            .rows
            .iter()
            .map(|r| columns.iter().map(|&c| r[c]).collect())
            .collect();
        set.len()
    }

    /// The result as a relation, for writing in the relation file format.
    pub fn to_relation(&self, name: &str) -> Result<Relation> {
        Relation::new(name, self.names.clone(), self.sorted_rows())
    }

    /// Keeps the rows whose columns for each pair of attributes are equal:
    /// a single scan.
    pub fn filter_equal(&self, pairs: &[(AttrId, AttrId)]) -> FlatResult {
        let cols: Vec<(usize, usize)> = pairs
            .iter()
            .map(|&(a, b)| {
                (
                    self.column_of(a).expect("attribute missing from result"),
                    self.column_of(b).expect("attribute missing from result"),
                )
            })
            .collect();
        FlatResult {
            attrs: self.attrs.clone(),
            names: self.names.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| cols.iter().all(|&(x, y)| r[x] == r[y]))
                .cloned()
                .collect(),
        }
    }
}

/// Intermediate relation: one column per attribute class.
struct Part {
    classes: Vec<usize>,
    rows: Vec<Vec<Value>>,
}

impl Part {
    fn distinct(&self, col: usize) -> usize {
        let mut v: Vec<&Value> = self.rows.iter().map(|r| &r[col]).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

pub fn eval_flat(db: &Database, query: &Query) -> Result<FlatResult> {
    eval_flat_with(db, query, &Limits::none())
}

/// Evaluates the query: constants are applied while scanning the inputs,
/// atoms are joined left-deep in ascending order of estimated intermediate
/// size, and the projection is applied last with duplicate elimination.
pub fn eval_flat_with(db: &Database, query: &Query, limits: &Limits) -> Result<FlatResult> {
    let schema = query.schema();
    let classes = equivalence_classes(query);
    let mut class_of = vec![0usize; schema.attr_count()];
    for (i, c) in classes.iter().enumerate() {
        for &m in &c.members {
            class_of[m as usize] = i;
        }
    }

    let mut parts = Vec::new();
    for atom in schema.atoms() {
        let rel = db.relation(&atom.relation)?;
        let mut cls: Vec<usize> = atom.attrs.iter().map(|&a| class_of[a as usize]).collect();
        cls.sort_unstable();
        cls.dedup();
        // Column of the relation that provides each class, and columns that
        // must agree with it.
        let first: Vec<usize> = cls
            .iter()
            .map(|&c| {
                atom.attrs
                    .iter()
                    .find(|&&a| class_of[a as usize] == c)
                    .map(|&a| schema.attr(a).column)
                    .unwrap()
            })
            .collect();
        let same: Vec<(usize, usize)> = atom
            .attrs
            .iter()
            .map(|&a| {
                let c = cls.binary_search(&class_of[a as usize]).unwrap();
                (schema.attr(a).column, first[c])
            })
            .filter(|(x, y)| x != y)
            .collect();
        let consts: Vec<_> = query
            .constants()
            .iter()
            .filter(|p| schema.atom_of(p.attr) == parts.len())
            .map(|p| (schema.attr(p.attr).column, p))
            .collect();
        let mut rows: Vec<Vec<Value>> = Vec::new();
        for r in rel.rows() {
            limits.tick()?;
            if same.iter().all(|&(x, y)| r[x] == r[y])
                && consts.iter().all(|(c, p)| p.op.eval(&r[*c], &p.value))
            {
                rows.push(first.iter().map(|&c| r[c]).collect());
            }
        }
        rows.sort_unstable();
        rows.dedup();
        parts.push(Part { classes: cls, rows });
    }
    // Constants on classes bind every attribute of the class.
    for p in query.constants() {
        let c = class_of[p.attr as usize];
        for part in parts.iter_mut() {
            if let Ok(col) = part.classes.binary_search(&c) {
                part.rows.retain(|r| p.op.eval(&r[col], &p.value));
            }
        }
    }

    let mut acc = if parts.is_empty() {
        Part { classes: Vec::new(), rows: vec![Vec::new()] }
    } else {
        let first = (0..parts.len()).min_by_key(|&i| (parts[i].rows.len(), i)).unwrap();
        parts.remove(first)
    };
    while !parts.is_empty() {
        let estimate = |p: &Part| -> f64 {
            let mut est = acc.rows.len() as f64 * p.rows.len() as f64;
            for (j, c) in p.classes.iter().enumerate() {
                if let Ok(i) = acc.classes.binary_search(c) {
                    est /= acc.distinct(i).max(p.distinct(j)).max(1) as f64;
                }
            }
            est
        };
        let connected = |p: &Part| p.classes.iter().any(|c| acc.classes.binary_search(c).is_ok());
        let next = (0..parts.len())
            .min_by(|&i, &j| {
                let ki = (!connected(&parts[i]), estimate(&parts[i]));
                let kj = (!connected(&parts[j]), estimate(&parts[j]));
                ki.0.cmp(&kj.0).then(ki.1.total_cmp(&kj.1)).then(i.cmp(&j))
            })
            .unwrap();
        let p = parts.remove(next);
        acc = join(acc, p, limits)?;
        if acc.rows.is_empty() {
            break;
        }
    }

    let out_attrs = query.output_attrs();
    let cols: Vec<Option<usize>> = out_attrs
        .iter()
        .map(|&a| acc.classes.binary_search(&class_of[a as usize]).ok())
        .collect();
    let mut rows: Vec<Vec<Value>> = if cols.iter().any(Option::is_none) {
        // Joining stopped early on an empty intermediate.
        Vec::new()
    } else {
        acc.rows
            .iter()
            .map(|r| cols.iter().map(|c| r[c.unwrap()]).collect())
            .collect()
    };
    limits.check_values(rows.len() * out_attrs.len())?;
    rows.sort_unstable();
    rows.dedup();
    Ok(FlatResult {
        names: out_attrs.iter().map(|&a| schema.qualified(a).to_owned()).collect(),
        attrs: out_attrs,
        rows,
    })
}

/// Sort-merge join of two parts on their shared classes.
fn join(left: Part, right: Part, limits: &Limits) -> Result<Part> {
    let shared: Vec<(usize, usize)> = left
        .classes
        .iter()
        .enumerate()
        .filter_map(|(i, c)| right.classes.binary_search(c).ok().map(|j| (i, j)))
        .collect();
    let extra: Vec<usize> = (0..right.classes.len())
        .filter(|j| !shared.iter().any(|&(_, s)| s == *j))
        .collect();
    let mut classes = left.classes.clone();
    classes.extend(extra.iter().map(|&j| right.classes[j]));
    // Output columns are re-sorted by class id below.
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by_key(|&i| classes[i]);

    let lkey = |r: &Vec<Value>| -> Vec<Value> { shared.iter().map(|&(i, _)| r[i]).collect() };
    let rkey = |r: &Vec<Value>| -> Vec<Value> { shared.iter().map(|&(_, j)| r[j]).collect() };
    let mut l = left.rows;
    let mut r = right.rows;
    l.sort_by_cached_key(lkey);
    r.sort_by_cached_key(rkey);

    let width = classes.len();
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < l.len() && j < r.len() {
        limits.tick()?;
        let (ki, kj) = (lkey(&l[i]), rkey(&r[j]));
        match ki.cmp(&kj) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let i_end = i + l[i..].iter().take_while(|x| lkey(x) == ki).count();
                let j_end = j + r[j..].iter().take_while(|x| rkey(x) == kj).count();
                limits.check_values((out.len() + (i_end - i) * (j_end - j)) * width)?;
                for a in &l[i..i_end] {
                    for b in &r[j..j_end] {
                        limits.tick()?;
                        let mut row = Vec::with_capacity(width);
                        row.extend(order.iter().map(|&k| {
                            if k < a.len() {
                                a[k]
                            } else {
                                b[extra[k - a.len()]]
                            }
                        }));
                        out.push(row);
                    }
                }
                i = i_end;
                j = j_end;
            }
        }
    }
    classes.sort_unstable();
    Ok(Part { classes, rows: out })
}

/// |π_attrs(Q(D))|: the number of distinct combinations of the given
/// attributes in the query result.
pub fn ancestor_projection_count(db: &Database, query: &Query, attrs: &[AttrId]) -> Result<u64> {
    let mut q = query.clone();
    q.set_projection(Some(attrs.to_vec()));
    Ok(eval_flat(db, &q)?.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db() -> Database {
        let mut db = Database::new();
        db.insert(Relation::parse("R\tA\tB\n1\t1\n1\t2\n2\t2\n", "R", None).unwrap());
        db.insert(Relation::parse("S\tB\tC\n1\t5\n2\t6\n2\t7\n", "S", None).unwrap());
        db
    }

    #[test]
    fn joins_and_projects() {
        let q = Query::parse("RELATIONS R(A,B); S(B,C) WHERE R.B = S.B").unwrap();
        let r = eval_flat(&db(), &q).unwrap();
        assert_eq!(r.len(), 5);
        let q = q.project(&["R.A"]).unwrap();
        assert_eq!(eval_flat(&db(), &q).unwrap().len(), 2);
    }

    #[test]
    fn cartesian_product_without_conditions() {
        let q = Query::parse("RELATIONS R(A,B); S(B,C)").unwrap();
        assert_eq!(eval_flat(&db(), &q).unwrap().len(), 9);
    }

    #[test]
    fn constants_filter_inputs() {
        let q = Query::parse("RELATIONS R(A,B); S(B,C) WHERE R.B = S.B AND S.C > 5").unwrap();
        assert_eq!(eval_flat(&db(), &q).unwrap().len(), 4);
        let q = Query::parse("RELATIONS R(A,B) WHERE R.A = R.B").unwrap();
        assert_eq!(eval_flat(&db(), &q).unwrap().len(), 2);
    }

    #[test]
    fn value_limit_is_enforced() {
        let q = Query::parse("RELATIONS R(A,B); S(B,C)").unwrap();
        let err = eval_flat_with(&db(), &q, &Limits::none().max_values(10)).unwrap_err();
        assert!(err.is_budget());
    }
}
