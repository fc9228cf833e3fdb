//! Dense exact simplex for small linear programs with a feasible origin.

use num_traits::{Signed, Zero};

use crate::rational::Q;

/// Maximizes `c·x` subject to `A x ≤ b`, `x ≥ 0`, where `b ≥ 0`.
/// Returns the optimum and a maximizer, or `None` if unbounded.
pub fn maximize(a: &[Vec<Q>], b: &[Q], c: &[Q]) -> Option<(Q, Vec<Q>)> {
    let m = a.len();
    let n = c.len();
    assert!(b.iter().all(|x| !x.is_negative()), "origin must be feasible");
    // tableau rows: [A | I | b], objective row: [-c | 0 | 0]
    let width = n + m + 1;
    let mut t: Vec<Vec<Q>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row = Vec::with_capacity(width);
        row.extend(a[i].iter().cloned());
        for j in 0..m {
            row.push(if i == j { Q::from_integer(1.into()) } else { Q::zero() });
        }
        row.push(b[i].clone());
        t.push(row);
    }
    let mut obj: Vec<Q> = c.iter().map(|x| -x).collect();
    obj.extend((0..=m).map(|_| Q::zero()));
    t.push(obj);
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        // Bland: least index with negative reduced cost
        let Some(col) = (0..n + m).find(|&j| t[m][j].is_negative()) else { break };
        let mut pivot: Option<(usize, Q)> = None;
        for i in 0..m {
            if t[i][col].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][col];
                let better = match &pivot {
                    None => true,
                    Some((pi, pr)) => ratio < *pr || (ratio == *pr && basis[i] < basis[*pi]),
                };
                if better {
                    pivot = Some((i, ratio));
                }
            }
        }
        let (row, _) = pivot?;
        let p = t[row][col].clone();
        for x in t[row].iter_mut() {
            *x /= &p;
        }
        let prow = t[row].clone();
        for (i, r) in t.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let f = r[col].clone();
            for (x, y) in r.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        basis[row] = col;
    }
    let mut x = vec![Q::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][width - 1].clone();
        }
    }
    Some((t[m][width - 1].clone(), x))
}
