//! Fractional and integral edge covers of small hypergraphs.
//!
//! A class on a path is described by the bitmask of relation atoms that
//! cover it. The fractional cover number is found through the dual packing
//! problem, maximise the sum of y_c subject to, for every atom, the sum of
//! y_c over the classes it covers being at most one. Its origin is feasible,
//! so a single simplex phase with Bland's rule suffices.

use std::cell::RefCell;
use std::collections::HashMap;

use num_rational::{Ratio, Rational64};

type Q = Ratio<i128>;

/// Drops duplicate masks and masks that contain another mask: their cover
/// constraints are implied.
fn minimal_masks(classes: &[u64]) -> Vec<u64> {
    let mut masks: Vec<u64> = classes.to_vec();
    masks.sort_unstable_by_key(|m| (m.count_ones(), *m));
    masks.dedup();
    let mut out: Vec<u64> = Vec::with_capacity(masks.len());
    for m in masks {
        if !out.iter().any(|&k| k & m == k) {
            out.push(m);
        }
    }
    out.sort_unstable();
    out
}

thread_local! {
    static CACHE: RefCell<HashMap<Vec<u64>, Rational64>> = RefCell::new(HashMap::new());
}

/// Minimum total weight on atoms such that every class receives weight at
/// least one from the atoms covering it. Every mask must be non-zero.
pub fn fractional_cover(classes: &[u64]) -> Rational64 {
    let masks = minimal_masks(classes);
    if masks.is_empty() {
        return Rational64::from_integer(0);
    }
    assert!(masks[0] != 0, "a class covered by no relation");
    if masks.iter().fold(u64::MAX, |acc, &m| acc & m) != 0 {
        return Rational64::from_integer(1);
    }
    if let Some(hit) = CACHE.with(|c| c.borrow().get(&masks).copied()) {
        return hit;
    }
    let value = solve_packing(&masks);
    let value = Rational64::new(
        i64::try_from(*value.numer()).expect("cover numerator overflow"),
        i64::try_from(*value.denom()).expect("cover denominator overflow"),
    );
    CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() > 1 << 16 {
            c.clear();
        }
        c.insert(masks, value);
    });
    value
}

fn solve_packing(masks: &[u64]) -> Q {
    let union = masks.iter().fold(0u64, |a, &m| a | m);
    let atoms: Vec<u32> = (0..64).filter(|&i| union >> i & 1 == 1).collect();
    let m = atoms.len();
    let n = masks.len();
    let zero = Q::from_integer(0);
    let one = Q::from_integer(1);

    // Rows: one per atom, columns: n class variables then m slacks, then rhs.
    let width = n + m + 1;
    let mut t = vec![vec![zero; width]; m];
    for (r, &atom) in atoms.iter().enumerate() {
        for (j, &mask) in masks.iter().enumerate() {
            if mask >> atom & 1 == 1 {
                t[r][j] = one;
            }
        }
        t[r][n + r] = one;
        t[r][width - 1] = one;
    }
    // Reduced costs of the maximisation objective sum y_c.
    let mut obj = vec![zero; width];
    for c in obj.iter_mut().take(n) {
        *c = one;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        let Some(enter) = (0..n + m).find(|&j| obj[j] > zero) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = zero;
        for r in 0..m {
            if t[r][enter] > zero {
                let ratio = t[r][width - 1] / t[r][enter];
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best || (ratio == best && basis[r] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(p) = leave else {
            unreachable!("packing LP is bounded");
        };
        let pivot = t[p][enter];
        for x in t[p].iter_mut() {
            *x /= pivot;
        }
        let prow = t[p].clone();
        for (r, row) in t.iter_mut().enumerate() {
            if r != p && row[enter] != zero {
                let f = row[enter];
                for (x, &y) in row.iter_mut().zip(&prow) {
                    *x -= f * y;
                }
            }
        }
        let f = obj[enter];
        for (x, &y) in obj.iter_mut().zip(&prow) {
            *x -= f * y;
        }
        basis[p] = enter;
    }
    -obj[width - 1]
}

/// Minimum number of atoms covering every class.
pub fn integral_cover(classes: &[u64]) -> u32 {
    let masks = minimal_masks(classes);
    if masks.is_empty() {
        return 0;
    }
    assert!(masks[0] != 0, "a class covered by no relation");
    let union = masks.iter().fold(0u64, |a, &m| a | m);
    let atoms: Vec<u64> = (0..64).filter(|&i| union >> i & 1 == 1).map(|i| 1u64 << i).collect();
    let k = atoms.len();
    for size in 1..=k {
        // Gosper's hack over subsets of `size` atoms.
        let mut sub: u64 = (1u64 << size) - 1;
        let limit: u64 = if k == 64 { u64::MAX } else { 1u64 << k };
        while sub < limit {
            let chosen = (0..k).filter(|&i| sub >> i & 1 == 1).fold(0u64, |a, i| a | atoms[i]);
            if masks.iter().all(|&m| m & chosen != 0) {
                return size as u32;
            }
            let c = sub & sub.wrapping_neg();
            let r = sub + c;
            if r == 0 {
                break;
            }
            sub = (((r ^ sub) >> 2) / c) | r;
        }
    }
    k as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn triangle_needs_three_halves() {
        // Classes AB, BC, CA of a triangle over atoms R(A,B), S(B,C), T(C,A):
        // class A is covered by R and T, and so on.
        let a = 0b101;
        let b = 0b011;
        let c = 0b110;
        assert_eq!(fractional_cover(&[a, b, c]), r(3, 2));
        assert_eq!(integral_cover(&[a, b, c]), 2);
    }

    #[test]
    fn disjoint_classes_add_up() {
        assert_eq!(fractional_cover(&[0b1, 0b10, 0b100]), r(3, 1));
        assert_eq!(fractional_cover(&[]), r(0, 1));
        assert_eq!(fractional_cover(&[0b11, 0b10]), r(1, 1));
    }

    #[test]
    fn superset_constraints_are_implied() {
        assert_eq!(minimal_masks(&[0b111, 0b1, 0b1, 0b110]), vec![0b1, 0b110]);
    }

    #[test]
    fn four_cycle() {
        // A 4-cycle of binary atoms: each class is covered by two consecutive atoms.
        let masks = [0b1001, 0b0011, 0b0110, 0b1100];
        assert_eq!(fractional_cover(&masks), r(2, 1));
        assert_eq!(integral_cover(&masks), 2);
    }
}
