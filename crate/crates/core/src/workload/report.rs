//! Experiment reports: CSV rows and gnuplot data files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One grid cell, averaged over its runs. Measurements of runs that timed
/// out or exhausted a budget are left out; a column is empty when no run
/// produced it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub exp: u8,
    pub cell: usize,
    pub relations: usize,
    pub attributes: usize,
    pub tuples: usize,
    /// `ARITYxTUPLES` per relation for cells with explicit shapes.
    pub shapes: String,
    pub max_value: u32,
    pub dist: String,
    /// Relations are products of per-column value sets.
    pub product: bool,
    pub k: usize,
    pub l: usize,
    pub algo: String,
    pub runs: usize,
    pub completed: usize,
    pub opt_ms: Option<f64>,
    pub opt_ms_median: Option<f64>,
    pub plan_cost: Option<f64>,
    pub final_cost: Option<f64>,
    pub fact_size: Option<f64>,
    pub flat_tuples: Option<f64>,
    pub flat_size: Option<f64>,
    pub fdb_ms: Option<f64>,
    pub fdb_ms_median: Option<f64>,
    pub base_completed: usize,
    pub base_ms: Option<f64>,
    pub base_ms_median: Option<f64>,
}

/// Columns holding wall-clock measurements.
pub const TIMING_COLUMNS: [&str; 6] = ["opt_ms", "opt_ms_median", "fdb_ms", "fdb_ms_median", "base_ms", "base_ms_median"];

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub exp: u8,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.serialize(ReportRow::default()).map_err(csv_err)?;
            let text = String::from_utf8(w.into_inner().map_err(|e| Error::Other(e.to_string()))?).expect("utf-8");
            return Ok(text.lines().next().unwrap_or_default().to_owned() + "\n");
        }
        for r in &self.rows {
            w.serialize(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Report> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r.deserialize().collect::<std::result::Result<Vec<ReportRow>, _>>().map_err(csv_err)?;
        Ok(Report { exp: rows.first().map_or(0, |r| r.exp), rows })
    }

    /// The CSV with every timing column blanked, for comparing runs.
    pub fn without_timings(&self) -> Report {
        let rows = self
            .rows
            .iter()
            .map(|r| ReportRow {
                opt_ms: None,
                opt_ms_median: None,
                fdb_ms: None,
                fdb_ms_median: None,
                base_ms: None,
                base_ms_median: None,
                ..r.clone()
            })
            .collect();
        Report { exp: self.exp, rows }
    }

    /// Gnuplot data: one block per series in order of first appearance,
    /// blocks separated by two blank lines so that `index` selects them.
    /// Missing values are `NaN`.
    pub fn to_dat(&self) -> String {
        let (x_name, x): (&str, fn(&ReportRow) -> usize) = match self.exp {
            2 | 4 => ("L", |r| r.l),
            _ => ("K", |r| r.k),
        };
        let mut out = format!(
            "# exp{} x={x_name}\n# {x_name} opt_ms plan_cost final_cost fact_size flat_size fdb_ms base_ms\n",
            self.exp
        );
        let mut series: Vec<(String, Vec<&ReportRow>)> = Vec::new();
        for r in &self.rows {
            let label = series_label(self.exp, r);
            match series.iter_mut().find(|(l, _)| *l == label) {
                Some((_, rows)) => rows.push(r),
                None => series.push((label, vec![r])),
            }
        }
        let f = |v: Option<f64>| v.map_or("NaN".to_owned(), |v| format!("{v}"));
        for (i, (label, rows)) in series.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            out.push_str(&format!("# series {label}\n"));
            for r in rows {
                out.push_str(&format!(
                    "{} {} {} {} {} {} {} {}\n",
                    x(r),
                    f(r.opt_ms),
                    f(r.plan_cost),
                    f(r.final_cost),
                    f(r.fact_size),
                    f(r.flat_size),
                    f(r.fdb_ms),
                    f(r.base_ms)
                ));
            }
        }
        out
    }

    /// Writes `expN.csv` and `expN.dat` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join(format!("exp{}.csv", self.exp));
        fs::write(&csv, self.to_csv()?).map_err(|e| Error::io(&csv, e))?;
        let dat = dir.join(format!("exp{}.dat", self.exp));
        fs::write(&dat, self.to_dat()).map_err(|e| Error::io(&dat, e))?;
        Ok(())
    }
}

fn series_label(exp: u8, r: &ReportRow) -> String {
    let size = if r.shapes.is_empty() { format!("N={}", r.tuples) } else { r.shapes.clone() };
    match exp {
        1 => format!("R={}", r.relations),
        2 => format!("{} K={}", r.algo, r.k),
        3 => format!("{} {size}", r.dist),
        _ => format!("{} {size} K={}", r.dist, r.k),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Other(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats() {
        assert_eq!(mean(&[1.0, 2.0, 6.0]), Some(3.0));
        assert_eq!(median(&[5.0, 1.0, 3.0]), Some(3.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn csv_round_trip_keeps_missing_values() {
        let row = ReportRow { exp: 3, cell: 1, k: 2, opt_ms: Some(1.5), algo: "optimal".into(), ..Default::default() };
        let rep = Report { exp: 3, rows: vec![row] };
        let text = rep.to_csv().unwrap();
        assert!(text.starts_with("exp,cell,relations,"));
        assert_eq!(Report::from_csv(&text).unwrap(), rep);
        assert!(rep.to_dat().contains("2 1.5 NaN"));
    }

    #[test]
    fn dat_groups_interleaved_series() {
        let row = |algo: &str, l| ReportRow { exp: 2, l, k: 3, algo: algo.into(), ..Default::default() };
        let rep = Report { exp: 2, rows: vec![row("exhaustive", 1), row("greedy", 1), row("exhaustive", 2), row("greedy", 2)] };
        let dat = rep.to_dat();
        let blocks: Vec<&str> = dat.split("\n\n\n").collect();
        assert_eq!(blocks.len(), 2);
        assert!(blocks[0].contains("# series exhaustive K=3\n1 NaN"));
        assert!(blocks[0].contains("\n2 NaN"));
        assert!(blocks[1].starts_with("# series greedy K=3"));
    }
}
