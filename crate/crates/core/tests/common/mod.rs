#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fdb_core::baseline::eval_flat;
use fdb_core::frep::factorise;
use fdb_core::optimizer::optimal_ftree;
use fdb_core::workload::{generate, GenSpec, Workload};
use fdb_core::{AttrId, Database, FRep, FTree, Query, Schema, Step, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn grocery() -> Database {
    Database::load_dir(&fixture("grocery")).unwrap()
}

pub fn grocery_query(name: &str, db: &Database) -> Query {
    Query::parse_with(&read(&fixture("grocery").join(name)), db).unwrap()
}

/// T1: item { oid, location { dispatcher } }.
pub fn t1(q1: &Query) -> FTree {
    let mut t = FTree::new(q1.schema().clone());
    let i = t.add(None, &["Orders.item", "Store.item"]).unwrap();
    t.add(Some(i), &["Orders.oid"]).unwrap();
    let l = t.add(Some(i), &["Store.location", "Disp.location"]).unwrap();
    t.add(Some(l), &["Disp.dispatcher"]).unwrap();
    t
}

/// T2: location { item { oid }, dispatcher }.
pub fn t2(q1: &Query) -> FTree {
    let mut t = FTree::new(q1.schema().clone());
    let l = t.add(None, &["Store.location", "Disp.location"]).unwrap();
    let i = t.add(Some(l), &["Orders.item", "Store.item"]).unwrap();
    t.add(Some(i), &["Orders.oid"]).unwrap();
    t.add(Some(l), &["Disp.dispatcher"]).unwrap();
    t
}

/// T3: supplier { item, location }.
pub fn t3(q2: &Query) -> FTree {
    let mut t = FTree::new(q2.schema().clone());
    let s = t.add(None, &["Produce.supplier", "Serve.supplier"]).unwrap();
    t.add(Some(s), &["Produce.item"]).unwrap();
    t.add(Some(s), &["Serve.location"]).unwrap();
    t
}

/// T4: item { supplier { location } }.
pub fn t4(q2: &Query) -> FTree {
    let mut t = FTree::new(q2.schema().clone());
    let i = t.add(None, &["Produce.item"]).unwrap();
    let s = t.add(Some(i), &["Produce.supplier", "Serve.supplier"]).unwrap();
    t.add(Some(s), &["Serve.location"]).unwrap();
    t
}

/// The five grocery relations as separate atoms.
pub fn grocery_all() -> Query {
    let s = Schema::from_atoms(&[
        ("Orders", &["oid", "item"]),
        ("Store", &["location", "item"]),
        ("Disp", &["dispatcher", "location"]),
        ("Produce", &["supplier", "item"]),
        ("Serve", &["supplier", "location"]),
    ]);
    Query::new(s)
}

/// T5: T1 and T4 joined on item.
pub fn t5(q: &Query) -> FTree {
    let mut t = FTree::new(q.schema().clone());
    let i = t.add(None, &["Orders.item", "Store.item", "Produce.item"]).unwrap();
    t.add(Some(i), &["Orders.oid"]).unwrap();
    let l = t.add(Some(i), &["Store.location", "Disp.location"]).unwrap();
    t.add(Some(l), &["Disp.dispatcher"]).unwrap();
    let s = t.add(Some(i), &["Produce.supplier", "Serve.supplier"]).unwrap();
    t.add(Some(s), &["Serve.location"]).unwrap();
    t
}

/// T6: T5 joined on location.
pub fn t6(q: &Query) -> FTree {
    let mut t = FTree::new(q.schema().clone());
    let i = t.add(None, &["Orders.item", "Store.item", "Produce.item"]).unwrap();
    t.add(Some(i), &["Orders.oid"]).unwrap();
    let l = t.add(Some(i), &["Store.location", "Disp.location", "Serve.location"]).unwrap();
    t.add(Some(l), &["Disp.dispatcher"]).unwrap();
    t.add(Some(l), &["Produce.supplier", "Serve.supplier"]).unwrap();
    t
}

pub struct Example6 {
    pub db: Database,
    pub query: Query,
    pub tree: FTree,
    pub rep: FRep,
    /// B = F.
    pub cond: (AttrId, AttrId),
}

pub fn example6() -> Example6 {
    let dir = fixture("example6");
    let db = Database::load_dir(&dir).unwrap();
    let query = Query::parse_with(&read(&dir.join("join.query")), &db).unwrap();
    let tree = FTree::parse(&read(&dir.join("t.ftree")), Some(query.schema())).unwrap();
    let rep = factorise(&db, &query, &tree).unwrap();
    let s = query.schema();
    let cond = (s.lookup("R.B").unwrap(), s.lookup("S.F").unwrap());
    Example6 { db, query, tree, rep, cond }
}

/// Tuples as attribute-to-value maps, sorted; independent of column order.
pub type Bag = Vec<BTreeMap<AttrId, Value>>;

pub fn bag(columns: &[AttrId], rows: impl IntoIterator<Item = Vec<Value>>) -> Bag {
    let mut out: Bag = rows.into_iter().map(|r| columns.iter().copied().zip(r).collect()).collect();
    out.sort();
    out
}

pub fn rep_bag(rep: &FRep) -> Bag {
    bag(&rep.columns(), rep.tuples())
}

pub fn flat_bag(db: &Database, q: &Query) -> Bag {
    let r = eval_flat(db, q).unwrap();
    bag(r.attrs(), r.rows().iter().cloned())
}

/// A small random workload of up to three relations.
pub fn random_workload(rng: &mut ChaCha8Rng, l: usize) -> Workload {
    loop {
        let relations = rng.gen_range(1..=3);
        let attributes = rng.gen_range(relations..=relations * 3).max(2);
        let kmax = 3.min(attributes - 1);
        if kmax < l {
            continue;
        }
        let spec = GenSpec {
            relations,
            attributes,
            tuples: rng.gen_range(1..=50),
            max_value: rng.gen_range(2..=6),
            zipf: if rng.gen_bool(0.5) { Some(1.0) } else { None },
            k: rng.gen_range(0..=kmax - l),
            l,
            seed: rng.gen(),
            shapes: None,
            product: false,
        };
        return generate(&spec).unwrap();
    }
}

/// A random f-tree of `query` satisfying the path constraint: a random
/// class becomes the root and each group of the remaining classes linked by
/// shared atoms becomes a subtree.
pub fn random_ftree(query: &Query, rng: &mut ChaCha8Rng) -> FTree {
    let classes = fdb_core::catalog::equivalence_classes(query);
    let schema = query.schema().clone();
    let masks: Vec<u64> = classes
        .iter()
        .map(|c| c.members.iter().fold(0, |m, &a| m | 1 << schema.atom_of(a)))
        .collect();
    let mut tree = FTree::new(schema);
    fn place(
        set: Vec<usize>,
        parent: Option<usize>,
        masks: &[u64],
        classes: &[fdb_core::catalog::AttributeClass],
        tree: &mut FTree,
        rng: &mut ChaCha8Rng,
    ) {
        for comp in components(&set, masks) {
            let r = *comp.choose(rng).unwrap();
            let n = tree.add_node(parent, &classes[r].members).unwrap();
            let rest: Vec<usize> = comp.into_iter().filter(|&c| c != r).collect();
            place(rest, Some(n), masks, classes, tree, rng);
        }
    }
    place((0..classes.len()).collect(), None, &masks, &classes, &mut tree, rng);
    tree
}

pub fn components(set: &[usize], masks: &[u64]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = set.to_vec();
    let mut out = Vec::new();
    while let Some(first) = left.pop() {
        let mut comp = vec![first];
        let mut cover = masks[first];
        loop {
            let (grow, keep): (Vec<usize>, Vec<usize>) = left.iter().partition(|&&c| masks[c] & cover != 0);
            if grow.is_empty() {
                break;
            }
            left = keep;
            for c in grow {
                cover |= masks[c];
                comp.push(c);
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// The optimal f-tree and `extra` random f-trees of `query`.
pub fn trees_for(query: &Query, extra: usize, rng: &mut ChaCha8Rng) -> Vec<FTree> {
    let mut out = vec![optimal_ftree(query).unwrap()];
    for _ in 0..extra {
        out.push(random_ftree(query, rng));
    }
    out
}

/// The flat-relation effect of a step on the tuples of a representation
/// over `tree`.
pub fn step_oracle(step: &Step, tree: &FTree, before: &Bag) -> Bag {
    // Nodes may be named by a projected attribute; compare a visible one.
    let shown = |a: AttrId| -> AttrId {
        let n = tree.node_of(a).expect("attribute in the tree");
        *tree.label(n).iter().find(|&&x| !tree.is_projected(x)).expect("a visible attribute")
    };
    let mut out: Bag = match step {
        Step::Merge(a, b) | Step::Absorb(a, b) => {
            let (a, b) = (shown(*a), shown(*b));
            before.iter().filter(|t| t[&a] == t[&b]).cloned().collect()
        }
        Step::Select(a, op, v) => before.iter().filter(|t| op.eval(&t[a], v)).cloned().collect(),
        Step::Project(keep) => {
            before
                .iter()
                .map(|t| t.iter().filter(|(k, _)| keep.contains(k)).map(|(k, v)| (*k, *v)).collect())
                .collect()
        }
        _ => before.clone(),
    };
    out.sort();
    out.dedup();
    out
}
