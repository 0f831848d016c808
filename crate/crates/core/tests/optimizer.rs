mod common;

use fdb_core::optimizer::{optimal_ftree, optimal_ftree_for, optimal_ftree_with};
use fdb_core::ftree::Cost;
use fdb_core::{operators, CostMode, FRep, FTree, Query, Schema};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn normalised(t: FTree) -> FTree {
    operators::normalise(FRep::empty(t)).unwrap().into_parts().0
}

#[test]
fn optimal_is_no_worse_than_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let w = common::random_workload(&mut rng, 0);
        let best = optimal_ftree(&w.query).unwrap();
        assert!(best.check_path_constraint().is_ok());
        assert!(best.is_normalised());
        let s = best.s_cost(CostMode::Fractional);
        for _ in 0..20 {
            let t = normalised(common::random_ftree(&w.query, &mut rng));
            assert!(s <= t.s_cost(CostMode::Fractional), "{}\n{}", w.query, t.to_text());
        }
        let int = optimal_ftree_with(&w.query, CostMode::Integral).unwrap();
        assert!(int.s_cost(CostMode::Integral) >= s);
        assert!(int.s_cost(CostMode::Integral) <= best.s_cost(CostMode::Integral));
    }
}

#[test]
fn statistics_pick_the_smallest_estimate_among_cheapest_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let w = common::random_workload(&mut rng, 0);
        let stats = w.db.stats();
        let plain = optimal_ftree(&w.query).unwrap();
        let fit = optimal_ftree_for(&w.query, stats).unwrap();
        let s = plain.s_cost(CostMode::Fractional);
        assert_eq!(fit.s_cost(CostMode::Fractional), s);
        assert!(fit.check_path_constraint().is_ok());
        let est = fit.size_estimate(stats).unwrap();
        assert!(est <= plain.size_estimate(stats).unwrap() * (1.0 + 1e-9));
        for _ in 0..20 {
            let t = normalised(common::random_ftree(&w.query, &mut rng));
            if t.s_cost(CostMode::Fractional) == s {
                assert!(est <= t.size_estimate(stats).unwrap() * (1.0 + 1e-9), "{}\n{}", w.query, t.to_text());
            }
        }
    }
}

#[test]
fn query_plans_match_the_flat_engine() {
    use fdb_core::frep::factorise;
    use fdb_core::optimizer::query_plan;
    use fdb_core::{CmpOp, PlanOrder, Planner, Search, Value};
    use rand::seq::SliceRandom;
    use rand::Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Le, CmpOp::Gt];
    let p = Planner::new(PlanOrder::Bound);
    for i in 0..60 {
        let w = common::random_workload(&mut rng, 1);
        let n = w.query.schema().attr_count();
        let mut q = w.followup_query.clone();
        let names: Vec<String> = (0..n).map(|a| w.query.schema().qualified(a as u32).to_owned()).collect();
        let a = names.choose(&mut rng).unwrap();
        q = q.select(a, *ops.choose(&mut rng).unwrap(), Value::Int(rng.gen_range(1..=3))).unwrap();
        let keep: Vec<&str> = names.iter().filter(|_| rng.gen_bool(0.6)).map(String::as_str).collect();
        if !keep.is_empty() {
            q = q.project(&keep).unwrap();
        }
        let rep = factorise(&w.db, &w.query, &optimal_ftree(&w.query).unwrap()).unwrap();
        let search = if i % 2 == 0 { Search::Exhaustive } else { Search::Greedy };
        let plan = query_plan(&p, rep.tree(), &q, search).unwrap();
        let out = plan.execute(rep, |_| {}).unwrap();
        out.validate().unwrap();
        assert_eq!(common::rep_bag(&out), common::flat_bag(&w.db, &q), "{q}");
    }
}

/// Every f-tree whose sibling subtrees share no atom, as (class, parent)
/// lists in insertion order. Joining independent subtrees onto one path
/// never lowers a cost, so these include a cheapest tree.
fn all_trees(set: &[usize], masks: &[u64]) -> Vec<Vec<(usize, Option<usize>)>> {
    let mut out = vec![Vec::new()];
    for comp in common::components(set, masks) {
        let mut next = Vec::new();
        for &r in &comp {
            let rest: Vec<usize> = comp.iter().copied().filter(|&c| c != r).collect();
            for sub in all_trees(&rest, masks) {
                for prefix in &out {
                    let base = prefix.len();
                    let mut t: Vec<(usize, Option<usize>)> = prefix.clone();
                    t.push((r, None));
                    t.extend(sub.iter().map(|&(c, p)| (c, Some(p.map_or(base, |p| base + 1 + p)))));
                    next.push(t);
                }
            }
        }
        out = next;
    }
    out
}

#[test]
fn chain_queries_match_enumeration() {
    let mut last = None;
    for n in 1..=7usize {
        let names: Vec<String> = (0..n).map(|i| format!("R{i}")).collect();
        let cols: Vec<[String; 2]> = (0..n).map(|i| [format!("A{i}"), format!("A{}", i + 1)]).collect();
        let cols: Vec<Vec<&str>> = cols.iter().map(|c| vec![c[0].as_str(), c[1].as_str()]).collect();
        let atoms: Vec<(&str, &[&str])> = names.iter().zip(&cols).map(|(n, c)| (n.as_str(), c.as_slice())).collect();
        let mut q = Query::new(Schema::from_atoms(&atoms));
        for i in 1..n {
            q = q.equal(&format!("R{}.A{i}", i - 1), &format!("R{i}.A{i}")).unwrap();
        }
        let classes = fdb_core::catalog::equivalence_classes(&q);
        let schema = q.schema().clone();
        let masks: Vec<u64> =
            classes.iter().map(|c| c.members.iter().fold(0, |m, &a| m | 1 << schema.atom_of(a))).collect();
        let mut best = None;
        for shape in all_trees(&(0..classes.len()).collect::<Vec<_>>(), &masks) {
            let mut t = FTree::new(schema.clone());
            let mut ids = Vec::new();
            for (c, p) in shape {
                ids.push(t.add_node(p.map(|p| ids[p]), &classes[c].members).unwrap());
            }
            assert!(t.check_path_constraint().is_ok());
            let s = t.s_cost(CostMode::Fractional);
            best = Some(best.map_or(s, |b: Cost| b.min(s)));
        }
        let s = optimal_ftree(&q).unwrap().s_cost(CostMode::Fractional);
        assert_eq!(Some(s), best, "chain of {n} relations");
        assert!(last.map_or(true, |l| l <= s), "cost decreased at n={n}");
        last = Some(s);
    }
}
