//! `fdb`: optimise, evaluate and benchmark queries over factorised data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use fdb_core::baseline::eval_flat;
use fdb_core::frep::factorise;
use fdb_core::optimizer::{optimal_ftree, optimal_ftree_for, query_plan, TraceLine};
use fdb_core::workload::{run_experiment, BenchOptions, Grid};
use fdb_core::{Database, Error, FPlan, FRep, FTree, PlanOrder, Planner, Query, Relation, Search, Value};

#[derive(Parser)]
#[command(name = "fdb", version, about = "Query evaluation on factorised databases")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the optimal f-tree of a query, or a plan from a given f-tree.
    Optimize {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// F-tree of the input representation; plans from it instead.
        #[arg(long)]
        ftree: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Algo::Exhaustive)]
        algo: Algo,
        #[arg(long, value_enum, default_value_t = CostArg::Bound)]
        cost: CostArg,
        /// Execute the plan on the data and print one line per step.
        #[arg(long)]
        trace: bool,
    },
    /// Evaluate a query on flat data or on a stored representation.
    Eval {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, requires = "in_ftree")]
        in_frep: Option<PathBuf>,
        #[arg(long, requires = "in_frep")]
        in_ftree: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Engine::Fdb)]
        engine: Engine,
        /// `estimate` picks among the cheapest f-trees, and orders plans,
        /// by the catalogue size estimate.
        #[arg(long, value_enum, default_value_t = CostArg::Bound)]
        cost: CostArg,
        /// Output file; the fdb engine also writes `<out>.ftree`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the result tuples.
        #[arg(long)]
        enumerate: bool,
        #[arg(long)]
        trace: bool,
    },
    /// Run an experiment over a grid and write CSV and gnuplot reports.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        exp: u8,
        /// Built-in grid name (tiny, desk, combinatorial) or TOML file.
        #[arg(long, default_value = "tiny")]
        grid: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per-run limit in seconds.
        #[arg(long, default_value_t = 100)]
        timeout: u64,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Exhaustive,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Bound,
    Estimate,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Engine {
    Fdb,
    Flat,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn load(query: &Path, data: &Path) -> Result<(Database, Query), Error> {
    let db = Database::load_dir(data)?;
    let q = Query::parse_with(&read(query)?, &db)?;
    Ok((db, q))
}

fn print_trace(line: &TraceLine) {
    println!("{line}");
}

/// The flat query a representation over `tree` holds: one equality per
/// pair of attributes sharing a node.
fn tree_query(tree: &FTree, query: &Query) -> Query {
    let mut q = Query::new(query.schema().clone());
    let classes = tree.node_ids().map(|n| tree.label(n)).chain(tree.hidden().iter().map(Vec::as_slice));
    for label in classes {
        for w in label.windows(2) {
            q.push_equality(w[0], w[1]);
        }
    }
    let visible = tree.visible_attrs();
    if visible.len() < query.schema().attr_count() {
        q.set_projection(Some(visible));
    }
    q
}

fn plan(db: &Database, tree: &FTree, query: &Query, algo: Algo, cost: CostArg) -> Result<FPlan, Error> {
    let order = match cost {
        CostArg::Bound => PlanOrder::Bound,
        CostArg::Estimate => PlanOrder::Estimate,
    };
    let p = Planner::new(order).stats(db.stats());
    let search = match algo {
        Algo::Exhaustive => Search::Exhaustive,
        Algo::Greedy => Search::Greedy,
    };
    query_plan(&p, tree, query, search)
}

fn optimize(query: &Path, data: &Path, ftree: Option<&Path>, algo: Algo, cost: CostArg, trace: bool) -> Result<(), Error> {
    let (db, q) = load(query, data)?;
    let Some(ftree) = ftree else {
        let tree = match cost {
            CostArg::Bound => optimal_ftree(&q)?,
            CostArg::Estimate => optimal_ftree_for(&q, db.stats())?,
        };
        print!("{}", tree.to_text());
        println!("s={}", tree.s_cost(Default::default()));
        println!("estimate={:.0}", tree.size_estimate(db.stats())?);
        return Ok(());
    };
    let tree = FTree::parse(&read(ftree)?, Some(q.schema()))?;
    let plan = plan(&db, &tree, &q, algo, cost)?;
    print!("{}", plan.to_text());
    println!("steps={} s(f)={} s_out={}", plan.len(), plan.bound_cost, plan.final_cost);
    if let Some(e) = plan.estimate_cost {
        println!("estimate={e:.0}");
    }
    if trace {
        let rep = factorise(&db, &tree_query(&tree, &q), &tree)?;
        plan.execute(rep, print_trace)?;
    }
    Ok(())
}

fn tsv(columns: Vec<String>, rows: Vec<Vec<Value>>) -> Result<String, Error> {
    Ok(Relation::new("result", columns, rows)?.to_text())
}

#[allow(clippy::too_many_arguments)]
fn eval(
    query: &Path,
    data: &Path,
    input: Option<(&Path, &Path)>,
    engine: Engine,
    cost: CostArg,
    out: Option<&Path>,
    enumerate: bool,
    trace: bool,
) -> Result<(), Error> {
    let (db, q) = load(query, data)?;
    if engine == Engine::Flat {
        if input.is_some() {
            return Err(Error::Other("the flat engine reads flat relations only".into()));
        }
        let res = eval_flat(&db, &q)?;
        let text = tsv(res.names().to_vec(), res.sorted_rows())?;
        match out {
            Some(path) => {
                write(path, &text)?;
                println!("tuples={}", res.len());
            }
            None => print!("{text}"),
        }
        return Ok(());
    }
    let rep = match input {
        None => {
            let tree = match cost {
                CostArg::Bound => optimal_ftree(&q)?,
                CostArg::Estimate => optimal_ftree_for(&q, db.stats())?,
            };
            factorise(&db, &q, &tree)?
        }
        Some((frep, ftree)) => {
            let tree = FTree::parse(&read(ftree)?, Some(q.schema()))?;
            let rep = FRep::parse(&read(frep)?, &tree)?;
            let plan = match plan(&db, &tree, &q, Algo::Exhaustive, cost) {
                Err(Error::Budget(_)) => plan(&db, &tree, &q, Algo::Greedy, cost)?,
                r => r?,
            };
            if trace {
                plan.execute(rep, print_trace)?
            } else {
                plan.execute(rep, |_| {})?
            }
        }
    };
    match out {
        Some(path) => {
            write(path, &rep.to_text())?;
            let mut tree_path = path.as_os_str().to_owned();
            tree_path.push(".ftree");
            write(Path::new(&tree_path), &rep.tree().to_text())?;
            println!("size={} tuples={}", rep.size(), rep.count_tuples());
        }
        None if !enumerate => print!("{}", rep.to_text()),
        None => {}
    }
    if enumerate {
        let schema = rep.tree().schema().clone();
        let names = rep.columns().iter().map(|&a| schema.qualified(a).to_owned()).collect();
        print!("{}", tsv(names, rep.enumerate())?);
    }
    Ok(())
}

fn bench(exp: u8, grid: &str, seed: u64, timeout: u64, runs: usize, out: &Path) -> Result<(), Error> {
    let grid = Grid::resolve(exp, grid)?;
    let opts = BenchOptions { seed, runs, timeout: Duration::from_secs(timeout), ..BenchOptions::default() };
    let report = run_experiment(exp, &grid, &opts)?;
    report.write(out)?;
    println!("{} rows -> {}", report.rows.len(), out.join(format!("exp{exp}.csv")).display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Optimize { query, data, ftree, algo, cost, trace } => {
            optimize(&query, &data, ftree.as_deref(), algo, cost, trace)
        }
        Cmd::Eval { query, data, in_frep, in_ftree, engine, cost, out, enumerate, trace } => {
            let input = in_frep.as_deref().zip(in_ftree.as_deref());
            eval(&query, &data, input, engine, cost, out.as_deref(), enumerate, trace)
        }
        Cmd::Bench { exp, grid, seed, timeout, runs, out } => bench(exp, &grid, seed, timeout, runs, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fdb: {e}");
            ExitCode::from(if e.is_parse() {
                2
            } else if e.is_budget() {
                4
            } else {
                3
            })
        }
    }
}
