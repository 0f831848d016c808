//! Plan text format and plan execution.
//!
//! One step per line:
//!
//! ```text
//! swap PARENT CHILD
//! merge A B
//! absorb ANCESTOR DESCENDANT
//! pushup B
//! normalise
//! select ATTR OP CONST
//! project ATTR,ATTR,...
//! ```
//!
//! Nodes are written as class ids (member attributes joined by `=`); any
//! single member attribute is accepted on input. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt;
use std::time::Instant;

use super::{FPlan, Step};
use crate::catalog::{AttrId, Catalogue};
use crate::error::{Error, Result};
use crate::frep::FRep;
use crate::ftree::{Cost, CostMode, FTree};
use crate::query::CmpOp;
use crate::value::Value;

const WHAT: &str = "plan";

/// Measurements of one executed step.
#[derive(Clone, Debug)]
pub struct TraceLine {
    /// 1-based step number.
    pub step: usize,
    pub op: String,
    pub s_in: Cost,
    pub s_out: Cost,
    pub size_in: u64,
    pub size_out: u64,
    pub ms: f64,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "STEP {}: {} s_in={} s_out={} size_in={} size_out={} ms={:.3}",
            self.step, self.op, self.s_in, self.s_out, self.size_in, self.size_out, self.ms
        )
    }
}

fn class_of(tree: &FTree, a: AttrId) -> String {
    match tree.node_of(a) {
        Some(n) => tree.class_id(n),
        None => tree.schema().qualified(a).to_owned(),
    }
}

impl Step {
    /// The plan-file line of the step, naming nodes as in `tree`, the tree
    /// the step applies to.
    pub fn describe(&self, tree: &FTree) -> String {
        let c = |a: &AttrId| class_of(tree, *a);
        match self {
            Step::PushUp(b) => format!("pushup {}", c(b)),
            Step::Normalise => "normalise".to_owned(),
            Step::Swap(a, b) => format!("swap {} {}", c(a), c(b)),
            Step::Merge(a, b) => format!("merge {} {}", c(a), c(b)),
            Step::Absorb(a, b) => format!("absorb {} {}", c(a), c(b)),
            Step::Select(a, op, v) => format!("select {} {} {}", tree.schema().qualified(*a), op, v.to_sexpr_token()),
            Step::Project(keep) => format!(
                "project {}",
                keep.iter().map(|&a| tree.schema().qualified(a)).collect::<Vec<_>>().join(",")
            ),
        }
    }

    /// The trace form `op(args)`.
    pub fn trace_name(&self, tree: &FTree) -> String {
        let line = self.describe(tree);
        match line.split_once(' ') {
            Some((op, args)) => format!("{op}({})", args.split(' ').collect::<Vec<_>>().join(",")),
            None => format!("{line}()"),
        }
    }
}

impl FPlan {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, t) in self.steps.iter().zip(&self.trees) {
            out.push_str(&s.describe(t));
            out.push('\n');
        }
        out
    }

    /// Reads a plan for `tree` and replays it to record its trees and costs.
    pub fn parse(text: &str, tree: &FTree, mode: CostMode, stats: Option<&Catalogue>) -> Result<FPlan> {
        let steps = parse_steps(text, tree)?;
        FPlan::from_steps(tree, steps, mode, stats)
    }

    /// Runs the plan on `rep`, reporting every step to `trace`.
    pub fn execute(&self, mut rep: FRep, mut trace: impl FnMut(&TraceLine)) -> Result<FRep> {
        let mode = CostMode::Fractional;
        for (i, s) in self.steps.iter().enumerate() {
            let op = s.trace_name(rep.tree());
            let s_in = rep.tree().s_cost(mode);
            let size_in = rep.size();
            let start = Instant::now();
            rep = s.apply(rep)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            trace(&TraceLine {
                step: i + 1,
                op,
                s_in,
                s_out: rep.tree().s_cost(mode),
                size_in,
                size_out: rep.size(),
                ms,
            });
        }
        Ok(rep)
    }
}

pub(crate) fn parse_steps(text: &str, tree: &FTree) -> Result<Vec<Step>> {
    let schema = tree.schema();
    let mut steps = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let col_of = |word: &str| word.as_ptr() as usize - line.as_ptr() as usize + 1;
        let err = |word: &str, msg: String| Error::parse(WHAT, ln, col_of(word), msg);
        let words: Vec<&str> = trimmed.split_whitespace().collect();
        let node = |w: &str| -> Result<AttrId> {
            let first = w.split('=').next().unwrap_or(w);
            schema.lookup(first).map_err(|e| err(w, e.to_string()))
        };
        let arity = |n: usize| -> Result<()> {
            if words.len() == n + 1 {
                Ok(())
            } else {
                Err(err(words[0], format!("`{}` takes {n} argument(s)", words[0])))
            }
        };
        let step = match words[0] {
            "pushup" => {
                arity(1)?;
                Step::PushUp(node(words[1])?)
            }
            "normalise" | "normalize" => {
                arity(0)?;
                Step::Normalise
            }
            "swap" | "merge" | "absorb" => {
                arity(2)?;
                let (a, b) = (node(words[1])?, node(words[2])?);
                match words[0] {
                    "swap" => Step::Swap(a, b),
                    "merge" => Step::Merge(a, b),
                    _ => Step::Absorb(a, b),
                }
            }
            "select" => {
                if words.len() < 4 {
                    return Err(err(words[0], "expected `select ATTR OP CONST`".into()));
                }
                let a = schema.lookup(words[1]).map_err(|e| err(words[1], e.to_string()))?;
                let op = CmpOp::from_symbol(words[2]).ok_or_else(|| err(words[2], format!("unknown comparison `{}`", words[2])))?;
                let rest = &line[col_of(words[3]) - 1..];
                let value = read_const(rest.trim_end()).ok_or_else(|| err(words[3], "malformed constant".into()))?;
                Step::Select(a, op, value)
            }
            "project" => {
                let list = trimmed["project".len()..].trim();
                let mut keep = Vec::new();
                for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    keep.push(schema.lookup(name).map_err(|e| err(words[0], e.to_string()))?);
                }
                Step::Project(keep)
            }
            other => return Err(err(other, format!("unknown step `{other}`"))),
        };
        steps.push(step);
    }
    Ok(steps)
}

/// A constant token: a quoted string with `\"` and `\\` escapes, or a bare
/// token read like a relation value.
fn read_const(s: &str) -> Option<Value> {
    if let Some(body) = s.strip_prefix('"') {
        let mut out = String::new();
        let mut chars = body.chars();
        while let Some(c) = chars.next() {
            match c {
                '\\' => out.push(chars.next()?),
                '"' => return chars.as_str().is_empty().then(|| Value::str(&out)),
                c => out.push(c),
            }
        }
        None
    } else if s.contains(char::is_whitespace) {
        None
    } else {
        Some(Value::from_token(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Schema;

    #[test]
    fn steps_round_trip() {
        let s = Schema::from_atoms(&[("R", &["A", "B"]), ("S", &["C"])]);
        let mut t = FTree::new(s);
        let a = t.add(None, &["R.A"]).unwrap();
        t.add(Some(a), &["R.B"]).unwrap();
        t.add(None, &["S.C"]).unwrap();
        let text = "swap R.A R.B\nselect S.C = \"two words\"\nproject R.A,S.C\n";
        let plan = FPlan::parse(text, &t, CostMode::Fractional, None).unwrap();
        assert_eq!(plan.len(), 3);
        assert_eq!(plan.to_text(), text);
        assert_eq!(plan.steps[0].trace_name(&t), "swap(R.A,R.B)");
        let e = FPlan::parse("swap R.A\n", &t, CostMode::Fractional, None).unwrap_err();
        assert!(e.is_parse());
    }
}
