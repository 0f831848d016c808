//! The desk-scale experiment harness.
//!
//! 1. optimal f-trees for flat queries;
//! 2. exhaustive against greedy f-plans for follow-up joins on factorised
//!    results;
//! 3. factorised against flat evaluation of the generated queries;
//! 4. follow-up joins executed as f-plans against one selection scan over
//!    the flat result.
//!
//! Each cell of a grid is run `runs` times with seeds
//! `seed + 1000 * cell + run` and averaged.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::Deserialize;

use super::gen::{generate, GenSpec, Workload};
use super::report::{mean, median, Report, ReportRow};
use crate::baseline::eval_flat_with;
use crate::error::{Error, Result};
use crate::frep::factorise_with;
use crate::ftree::{Cost, FTree};
use crate::limits::Limits;
use crate::optimizer::{optimal_ftree, optimal_ftree_for, FPlan, PlanOrder, Planner, DEFAULT_BUDGET};

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub seed: u64,
    pub runs: usize,
    /// Wall-clock limit of one run.
    pub timeout: Duration,
    /// Largest flat intermediate the baseline may build, in values.
    pub max_values: usize,
    /// Largest number of f-trees the exhaustive planner may visit.
    pub budget: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            seed: 1,
            runs: 5,
            timeout: Duration::from_secs(100),
            max_values: 50_000_000,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// The cells of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub cells: Vec<GenSpec>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CellSpec {
    relations: Option<OneOrMany<usize>>,
    attributes: Option<OneOrMany<usize>>,
    tuples: Option<OneOrMany<usize>>,
    max_value: Option<OneOrMany<u32>>,
    dist: Option<OneOrMany<String>>,
    skew: Option<OneOrMany<f64>>,
    k: Option<OneOrMany<usize>>,
    l: Option<OneOrMany<usize>>,
    shapes: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    product: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    cell: Vec<CellSpec>,
}

fn range(lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi).collect()
}

/// Cartesian product of the listed parameters, skipping combinations with
/// `K + L >= A` or more relations than attributes.
fn expand(
    relations: &[usize],
    attributes: &[usize],
    tuples: &[usize],
    max_values: &[u32],
    dists: &[Option<f64>],
    ks: &[usize],
    ls: &[usize],
    shapes: Option<&[(usize, usize)]>,
    product: bool,
) -> Vec<GenSpec> {
    let mut out = Vec::new();
    for &relations in relations {
        for &attributes in attributes {
            for &tuples in tuples {
                for &max_value in max_values {
                    for &zipf in dists {
                        for &k in ks {
                            for &l in ls {
                                let spec = GenSpec {
                                    relations,
                                    attributes,
                                    tuples,
                                    max_value,
                                    zipf,
                                    k,
                                    l,
                                    seed: 0,
                                    shapes: shapes.map(<[_]>::to_vec),
                                    product,
                                };
                                let total = spec.total_attributes();
                                if k + l < total && (shapes.is_some() || relations <= attributes) {
                                    out.push(spec);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

const BOTH: [Option<f64>; 2] = [None, Some(1.0)];

impl Grid {
    /// Built-in grids `tiny`, `desk` and, for experiments 3 and 4,
    /// `combinatorial`.
    pub fn builtin(exp: u8, name: &str) -> Option<Grid> {
        let combinatorial = [(2, 64), (2, 64), (3, 512), (3, 512)];
        let cells = match (exp, name) {
            (1, "tiny") => expand(&range(1, 3), &[12], &[10], &[100], &[None], &range(0, 3), &[0], None, false),
            (1, "desk") => expand(&range(1, 6), &[40], &[10], &[100], &[None], &range(0, 6), &[0], None, false),
            (2, "tiny") => expand(&[4], &[10], &[10], &[100], &[None], &range(2, 4), &range(1, 2), None, false),
            (2, "desk") => expand(&[4], &[10], &[10], &[100], &[None], &range(0, 8), &range(1, 6), None, false),
            (3, "tiny") => expand(&[3], &[9], &[50], &[100], &BOTH, &range(1, 3), &[0], None, false),
            (3, "desk") => expand(&[3], &[9], &[100, 300, 1000], &[100], &BOTH, &range(1, 4), &[0], None, false),
            (4, "tiny") => expand(&[3], &[9], &[50], &[100], &BOTH, &[2], &range(1, 2), None, false),
            (4, "desk") => expand(&[3], &[9], &[100, 300], &[100], &BOTH, &range(2, 3), &range(1, 3), None, false),
            (3 | 4, "combinatorial") => {
                let ls: Vec<usize> = if exp == 4 { range(1, 2) } else { vec![0] };
                expand(&[4], &[10], &[0], &[20], &BOTH, &range(1, 4), &ls, Some(&combinatorial), true)
            }
            _ => return None,
        };
        Some(Grid { cells })
    }

    /// Reads a TOML grid: a list of `[[cell]]` tables whose fields are
    /// scalars or lists, expanded into their cartesian product.
    pub fn parse(text: &str) -> Result<Grid> {
        let file: GridFile = toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(s) => line_col(text, s.start),
                None => (1, 1),
            };
            Error::parse("grid", line, column, e.message().to_owned())
        })?;
        let d = GenSpec::default();
        let mut cells = Vec::new();
        for (i, c) in file.cell.iter().enumerate() {
            let get = |v: &Option<OneOrMany<usize>>, dflt: usize| v.as_ref().map_or(vec![dflt], OneOrMany::values);
            let skews = c.skew.as_ref().map_or(vec![1.0], OneOrMany::values);
            let mut dists = Vec::new();
            for name in c.dist.as_ref().map_or(vec!["uniform".to_owned()], OneOrMany::values) {
                match name.as_str() {
                    "uniform" => dists.push(None),
                    "zipf" => dists.extend(skews.iter().map(|&s| Some(s))),
                    other => {
                        return Err(Error::parse("grid", 1, 1, format!("cell {}: unknown distribution `{other}`", i + 1)))
                    }
                }
            }
            let max_values = c.max_value.as_ref().map_or(vec![d.max_value], OneOrMany::values);
            cells.extend(expand(
                &get(&c.relations, d.relations),
                &get(&c.attributes, d.attributes),
                &get(&c.tuples, d.tuples),
                &max_values,
                &dists,
                &get(&c.k, d.k),
                &get(&c.l, d.l),
                c.shapes.as_deref(),
                c.product,
            ));
        }
        Ok(Grid { cells })
    }

    /// A built-in grid name or a TOML file.
    pub fn resolve(exp: u8, name_or_path: &str) -> Result<Grid> {
        if let Some(g) = Grid::builtin(exp, name_or_path) {
            return Ok(g);
        }
        let path = Path::new(name_or_path);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Grid::parse(&text)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

/// Measurements of one run; `None` where the run did not get that far.
#[derive(Clone, Debug, Default)]
struct Sample {
    opt_ms: Option<f64>,
    plan_cost: Option<f64>,
    final_cost: Option<f64>,
    fact_size: Option<f64>,
    flat_tuples: Option<f64>,
    flat_size: Option<f64>,
    fdb_ms: Option<f64>,
    base_ms: Option<f64>,
}

fn to_f64(c: Cost) -> f64 {
    *c.numer() as f64 / *c.denom() as f64
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Turns budget and timeout errors into a missing measurement.
fn soft<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_budget() => Ok(None),
        Err(e) => Err(e),
    }
}

/// Times `f` and drops the result if it ran past the timeout.
fn timed<T>(opts: &BenchOptions, f: impl FnOnce() -> Result<T>) -> Result<Option<(T, f64)>> {
    let start = Instant::now();
    let r = soft(f())?;
    let t = ms(start);
    Ok(r.filter(|_| start.elapsed() <= opts.timeout).map(|v| (v, t)))
}

fn exp1_run(w: &Workload, opts: &BenchOptions) -> Result<Sample> {
    let mut s = Sample::default();
    if let Some((tree, t)) = timed(opts, || optimal_ftree(&w.query))? {
        let c = to_f64(tree.s_cost(Default::default()));
        s.opt_ms = Some(t);
        s.plan_cost = Some(c);
        s.final_cost = Some(c);
    }
    Ok(s)
}

fn plan_sample(plan: &FPlan, t: f64) -> Sample {
    Sample {
        opt_ms: Some(t),
        plan_cost: Some(to_f64(plan.bound_cost)),
        final_cost: Some(to_f64(plan.final_cost)),
        ..Default::default()
    }
}

fn exp2_run(w: &Workload, opts: &BenchOptions) -> Result<[Sample; 2]> {
    let tree = optimal_ftree(&w.query)?;
    let p = Planner::new(PlanOrder::Bound).budget(opts.budget);
    let ex = timed(opts, || p.exhaustive(&tree, &w.followup))?;
    let gr = timed(opts, || p.greedy(&tree, &w.followup))?;
    let sample = |r: Option<(FPlan, f64)>| r.map_or_else(Sample::default, |(plan, t)| plan_sample(&plan, t));
    Ok([sample(ex), sample(gr)])
}

/// Factorised and flat evaluation of the flat query; also returns the
/// factorised result and the flat result when they were computed.
fn exp3_run(
    w: &Workload,
    opts: &BenchOptions,
) -> Result<(Sample, Option<crate::frep::FRep>, Option<crate::baseline::FlatResult>)> {
    let mut s = Sample::default();
    let tree: FTree = optimal_ftree_for(&w.query, w.db.stats())?;
    let c = to_f64(tree.s_cost(Default::default()));
    s.plan_cost = Some(c);
    s.final_cost = Some(c);
    let limits = Limits::with_timeout(opts.timeout);
    let start = Instant::now();
    let rep = soft(factorise_with(&w.db, &w.query, &tree, &limits))?;
    if let Some(rep) = &rep {
        s.fdb_ms = Some(ms(start));
        s.fact_size = Some(rep.size() as f64);
        let n = rep.count_tuples() as f64;
        s.flat_tuples = Some(n);
        s.flat_size = Some(n * rep.columns().len() as f64);
    }
    let limits = Limits::with_timeout(opts.timeout).max_values(opts.max_values);
    let start = Instant::now();
    let flat = soft(eval_flat_with(&w.db, &w.query, &limits))?;
    if flat.is_some() {
        s.base_ms = Some(ms(start));
    }
    Ok((s, rep, flat))
}

fn exp4_run(w: &Workload, opts: &BenchOptions) -> Result<Sample> {
    let (_, rep, flat) = exp3_run(w, opts)?;
    let mut s = Sample::default();
    let Some(rep) = rep else { return Ok(s) };
    let p = Planner::new(PlanOrder::Bound).budget(opts.budget);
    let planned = timed(opts, || match p.exhaustive(rep.tree(), &w.followup) {
        Err(Error::Budget(_)) => p.greedy(rep.tree(), &w.followup),
        r => r,
    })?;
    let Some((plan, t)) = planned else { return Ok(s) };
    s = plan_sample(&plan, t);
    if let Some((out, t)) = timed(opts, || plan.execute(rep, |_| {}))? {
        s.fdb_ms = Some(t);
        s.fact_size = Some(out.size() as f64);
        let n = out.count_tuples() as f64;
        s.flat_tuples = Some(n);
        s.flat_size = Some(n * out.columns().len() as f64);
    }
    if let Some(flat) = flat {
        let start = Instant::now();
        let res = flat.filter_equal(&w.followup);
        s.base_ms = Some(ms(start));
        std::hint::black_box(res);
    }
    Ok(s)
}

fn aggregate(exp: u8, cell: usize, spec: &GenSpec, algo: &str, samples: &[Sample]) -> ReportRow {
    let col = |f: fn(&Sample) -> Option<f64>| samples.iter().filter_map(f).collect::<Vec<f64>>();
    let primary = if exp <= 2 { col(|s| s.opt_ms) } else { col(|s| s.fdb_ms) };
    let opt = col(|s| s.opt_ms);
    let fdb = col(|s| s.fdb_ms);
    let base = col(|s| s.base_ms);
    ReportRow {
        exp,
        cell,
        relations: spec.relation_count(),
        attributes: spec.total_attributes(),
        tuples: if spec.shapes.is_some() { 0 } else { spec.tuples },
        shapes: spec
            .shapes
            .as_ref()
            .map(|s| s.iter().map(|(a, n)| format!("{a}x{n}")).collect::<Vec<_>>().join(";"))
            .unwrap_or_default(),
        max_value: spec.max_value,
        dist: spec.dist_name(),
        product: spec.product,
        k: spec.k,
        l: spec.l,
        algo: algo.to_owned(),
        runs: samples.len(),
        completed: primary.len(),
        opt_ms: mean(&opt),
        opt_ms_median: median(&opt),
        plan_cost: mean(&col(|s| s.plan_cost)),
        final_cost: mean(&col(|s| s.final_cost)),
        fact_size: mean(&col(|s| s.fact_size)),
        flat_tuples: mean(&col(|s| s.flat_tuples)),
        flat_size: mean(&col(|s| s.flat_size)),
        fdb_ms: mean(&fdb),
        fdb_ms_median: median(&fdb),
        base_completed: base.len(),
        base_ms: mean(&base),
        base_ms_median: median(&base),
    }
}

/// Runs experiment `exp` (1 to 4) over `grid`.
pub fn run_experiment(exp: u8, grid: &Grid, opts: &BenchOptions) -> Result<Report> {
    if !(1..=4).contains(&exp) {
        return Err(Error::Other(format!("there is no experiment {exp}")));
    }
    let mut rows = Vec::new();
    for (cell, base) in grid.cells.iter().enumerate() {
        let mut per_algo: Vec<Vec<Sample>> = vec![Vec::new(); if exp == 2 { 2 } else { 1 }];
        for run in 0..opts.runs {
            let spec = GenSpec { seed: opts.seed + 1000 * cell as u64 + run as u64, ..base.clone() };
            let w = generate(&spec)?;
            match exp {
                1 => per_algo[0].push(exp1_run(&w, opts)?),
                2 => {
                    let [a, b] = exp2_run(&w, opts)?;
                    per_algo[0].push(a);
                    per_algo[1].push(b);
                }
                3 => per_algo[0].push(exp3_run(&w, opts)?.0),
                _ => per_algo[0].push(exp4_run(&w, opts)?),
            }
        }
        let names: &[&str] = match exp {
            1 | 3 => &["optimal"],
            2 => &["exhaustive", "greedy"],
            _ => &["exhaustive"],
        };
        for (name, samples) in names.iter().zip(&per_algo) {
            rows.push(aggregate(exp, cell, base, name, samples));
        }
    }
    Ok(Report { exp, rows })
}

pub fn experiment1(grid: &Grid, opts: &BenchOptions) -> Result<Report> {
    run_experiment(1, grid, opts)
}

pub fn experiment2(grid: &Grid, opts: &BenchOptions) -> Result<Report> {
    run_experiment(2, grid, opts)
}

pub fn experiment3(grid: &Grid, opts: &BenchOptions) -> Result<Report> {
    run_experiment(3, grid, opts)
}

pub fn experiment4(grid: &Grid, opts: &BenchOptions) -> Result<Report> {
    run_experiment(4, grid, opts)
}
