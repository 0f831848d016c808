use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn fdb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdb")).args(args).output().expect("runs the binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    query: PathBuf,
    data: PathBuf,
}

fn grocery(q: &str) -> Fixture {
    let data = fixtures().join("grocery");
    Fixture { query: data.join(format!("{q}.query")), data }
}

fn example6(q: &str) -> Fixture {
    let data = fixtures().join("example6");
    Fixture { query: data.join(format!("{q}.query")), data }
}

/// Result rows of a TSV listing, header excluded.
fn rows(text: &str) -> usize {
    text.lines().count() - 1
}

#[test]
fn optimize_q2_has_cost_one() {
    let f = grocery("q2");
    let o = fdb(&["optimize", "--query", path(&f.query), "--data", path(&f.data)]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "s=1"), "{}", stdout(&o));
}

#[test]
fn optimize_example6_plan_and_trace() {
    let f = example6("followup");
    let t = f.data.join("t.ftree");
    let o = fdb(&["optimize", "--query", path(&f.query), "--data", path(&f.data), "--ftree", path(&t), "--algo", "exhaustive", "--trace"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("steps=2 s(f)=1 "), "{out}");
    let steps: Vec<&str> = out.lines().filter(|l| l.starts_with("STEP ")).collect();
    assert_eq!(steps.len(), 2);
    for (k, line) in steps.iter().enumerate() {
        let (head, rest) = line.split_once(": ").unwrap();
        assert_eq!(head, format!("STEP {}", k + 1));
        let fields: Vec<&str> = rest.split(' ').collect();
        assert!(fields[0].ends_with(')'));
        let keys: Vec<&str> = fields[1..].iter().map(|f| f.split_once('=').unwrap().0).collect();
        assert_eq!(keys, ["s_in", "s_out", "size_in", "size_out", "ms"]);
    }
}

#[test]
fn missing_file_exits_3() {
    let f = grocery("q1");
    let o = fdb(&["optimize", "--query", "no-such.query", "--data", path(&f.data)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no-such.query"));
}

#[test]
fn malformed_query_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("bad.query");
    std::fs::write(&q, "RELATIONS Orders(oid,item WHERE").unwrap();
    let f = grocery("q1");
    let o = fdb(&["optimize", "--query", path(&q), "--data", path(&f.data)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_q1_writes_the_representation() {
    let f = grocery("q1");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q1.frep");
    let o = fdb(&["eval", "--query", path(&f.query), "--data", path(&f.data), "--out", path(&out)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("size=23 "), "{}", stdout(&o));
    let golden = std::fs::read_to_string(f.data.join("q1_t1.frep")).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), golden);
    assert!(dir.path().join("q1.frep.ftree").exists());
}

#[test]
fn enumerated_and_flat_results_agree() {
    let f = grocery("q1");
    let e = fdb(&["eval", "--query", path(&f.query), "--data", path(&f.data), "--enumerate"]);
    let flat = fdb(&["eval", "--query", path(&f.query), "--data", path(&f.data), "--engine", "flat"]);
    assert!(e.status.success() && flat.status.success());
    assert_eq!(rows(&stdout(&e)), 14);
    assert_eq!(rows(&stdout(&flat)), 14);
    let sorted = |text: String, order: &[usize]| {
        let mut v: Vec<String> = text
            .lines()
            .skip(1)
            .map(|l| {
                let cells: Vec<&str> = l.split('\t').collect();
                order.iter().map(|&i| cells[i]).collect::<Vec<_>>().join("\t")
            })
            .collect();
        v.sort();
        v
    };
    let header = |text: &str| text.lines().next().unwrap().split('\t').skip(1).map(str::to_owned).collect::<Vec<_>>();
    let (he, hf) = (header(&stdout(&e)), header(&stdout(&flat)));
    let order: Vec<usize> = hf.iter().map(|c| he.iter().position(|x| x == c).unwrap()).collect();
    let identity: Vec<usize> = (0..hf.len()).collect();
    assert_eq!(sorted(stdout(&e), &order), sorted(stdout(&flat), &identity));
}

#[test]
fn stored_representation_feeds_a_follow_up_query() {
    let dir = tempfile::tempdir().unwrap();
    let join = example6("join");
    let out = dir.path().join("join.frep");
    assert!(fdb(&["eval", "--query", path(&join.query), "--data", path(&join.data), "--out", path(&out)]).status.success());
    let follow = example6("followup");
    let tree = dir.path().join("join.frep.ftree");
    let staged = fdb(&[
        "eval", "--query", path(&follow.query), "--data", path(&follow.data),
        "--in-frep", path(&out), "--in-ftree", path(&tree), "--enumerate",
    ]);
    let direct = fdb(&["eval", "--query", path(&follow.query), "--data", path(&follow.data), "--enumerate"]);
    assert!(staged.status.success(), "{}", String::from_utf8_lossy(&staged.stderr));
    let set = |o: &Output| {
        let text = stdout(o);
        let header: Vec<String> = text.lines().next().unwrap().split('\t').skip(1).map(str::to_owned).collect();
        let mut rows: Vec<Vec<(String, String)>> = text
            .lines()
            .skip(1)
            .map(|l| {
                let mut r: Vec<(String, String)> = header.iter().cloned().zip(l.split('\t').map(str::to_owned)).collect();
                r.sort();
                r
            })
            .collect();
        rows.sort();
        rows
    };
    assert_eq!(set(&staged), set(&direct));
    assert_eq!(set(&direct).len(), 3);
}

#[test]
fn bench_tiny_grid_completes() {
    let dir = tempfile::tempdir().unwrap();
    let o = fdb(&["bench", "--exp", "1", "--grid", "tiny", "--seed", "3", "--timeout", "10", "--out", path(dir.path())]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("exp1.csv")).unwrap();
    let mut r = csv.lines();
    let header: Vec<&str> = r.next().unwrap().split(',').collect();
    let (runs, done) = (header.iter().position(|&h| h == "runs").unwrap(), header.iter().position(|&h| h == "completed").unwrap());
    for line in r {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[runs], cells[done]);
    }
    assert!(dir.path().join("exp1.dat").exists());
}

#[test]
fn invalid_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.toml");
    std::fs::write(&grid, "[[cell]]\nrelations = \"three\"\n").unwrap();
    let o = fdb(&["bench", "--exp", "1", "--grid", path(&grid), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn combinatorial_results_stay_small() {
    let dir = tempfile::tempdir().unwrap();
    let o = fdb(&["bench", "--exp", "3", "--grid", "combinatorial", "--runs", "1", "--timeout", "20", "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("exp3.csv")).unwrap();
    let mut r = csv.lines();
    let header: Vec<&str> = r.next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "fact_size").unwrap();
    let mut n = 0;
    for line in r {
        let size: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert!(size < 4000.0, "{line}");
        n += 1;
    }
    assert_eq!(n, 8);
}
