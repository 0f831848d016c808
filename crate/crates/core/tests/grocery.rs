mod common;

use common::*;
use fdb_core::baseline::eval_flat;
use fdb_core::frep::factorise;
use fdb_core::ftree::Cost;
use fdb_core::optimizer::optimal_ftree;
use fdb_core::{CostMode, FRep, FTree};

fn two() -> Cost {
    Cost::from_integer(2)
}

#[test]
fn q1_over_t1_matches_golden_files() {
    let db = grocery();
    let q1 = grocery_query("q1.query", &db);
    let rep = factorise(&db, &q1, &t1(&q1)).unwrap();
    assert_eq!(rep.size(), 23);
    assert_eq!(rep.count_tuples(), 14);
    let dir = fixture("grocery");
    assert_eq!(rep.to_text(), read(&dir.join("q1_t1.frep")));
    assert_eq!(rep.tree().to_text(), read(&dir.join("q1_t1.ftree")));
}

#[test]
fn q2_over_t3_matches_golden_files() {
    let db = grocery();
    let q2 = grocery_query("q2.query", &db);
    let rep = factorise(&db, &q2, &t3(&q2)).unwrap();
    assert_eq!(rep.size(), 12);
    let dir = fixture("grocery");
    assert_eq!(rep.to_text(), read(&dir.join("q2_t3.frep")));
    assert_eq!(rep.tree().to_text(), read(&dir.join("q2_t3.ftree")));
}

#[test]
fn flat_q1_has_fourteen_rows_of_four() {
    let db = grocery();
    let q1 = grocery_query("q1.query", &db);
    let flat = eval_flat(&db, &q1).unwrap();
    assert_eq!(flat.len(), 14);
    assert_eq!(flat.attrs().len(), 4);
}

#[test]
fn golden_files_read_back() {
    let dir = fixture("grocery");
    let tree = FTree::parse(&read(&dir.join("q1_t1.ftree")), None).unwrap();
    let rep = FRep::parse(&read(&dir.join("q1_t1.frep")), &tree).unwrap();
    assert_eq!(rep.size(), 23);
    assert_eq!(rep.to_text(), read(&dir.join("q1_t1.frep")));
}

#[test]
fn both_q1_trees_represent_the_flat_result() {
    let db = grocery();
    let q1 = grocery_query("q1.query", &db);
    let expected = flat_bag(&db, &q1);
    for t in [t1(&q1), t2(&q1)] {
        let rep = factorise(&db, &q1, &t).unwrap();
        assert_eq!(rep_bag(&rep), expected);
    }
}

#[test]
fn tree_costs() {
    let db = grocery();
    let q1 = grocery_query("q1.query", &db);
    let q2 = grocery_query("q2.query", &db);
    let all = grocery_all();
    let f = CostMode::Fractional;
    assert_eq!(t1(&q1).s_cost(f), two());
    assert_eq!(t2(&q1).s_cost(f), two());
    assert_eq!(t3(&q2).s_cost(f), Cost::from_integer(1));
    assert_eq!(t4(&q2).s_cost(f), two());
    assert_eq!(t5(&all).s_cost(f), two());
    assert_eq!(t6(&all).s_cost(f), two());
}

#[test]
fn optimal_costs_of_the_queries() {
    let db = grocery();
    let q1 = grocery_query("q1.query", &db);
    let q2 = grocery_query("q2.query", &db);
    assert_eq!(optimal_ftree(&q1).unwrap().s_cost(CostMode::Fractional), two());
    let t = optimal_ftree(&q2).unwrap();
    assert_eq!(t.s_cost(CostMode::Fractional), Cost::from_integer(1));
    assert!(t.same_shape(&t3(&q2)));
}

#[test]
fn enumeration_starts_with_the_smallest_item() {
    let db = grocery();
    let q1 = grocery_query("q1.query", &db);
    let rep = factorise(&db, &q1, &t1(&q1)).unwrap();
    let first = rep.tuples().next().unwrap();
    assert_eq!(first[0].to_string(), "Cheese");
    assert_eq!(rep.tuples().count(), 14);
}
