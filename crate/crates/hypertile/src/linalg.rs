//! Dense exact linear algebra over ℚ and the lower-left Hermite normal form.
//!
//! Sizes here are tiny (ambient dimension ≤ a handful), so plain fraction-free
//! Gaussian elimination on `Rational` entries is the right tool.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::exact::{RVec, Rational};

/// Solves `A x = b` where `A` is given by columns. Returns `None` when the
/// system is inconsistent. When the columns are dependent a particular
/// solution is returned (free variables set to zero).
pub fn solve_columns(columns: &[RVec], b: &RVec, rows: usize) -> Option<Vec<Rational>> {
    let ncols = columns.len();
    // Augmented row-major matrix [A | b].
    let mut m: Vec<Vec<Rational>> = (0..rows)
        .map(|i| {
            let mut row: Vec<Rational> = columns.iter().map(|c| c.coord(i)).collect();
            row.push(b.coord(i));
            row
        })
        .collect();

    let mut pivot_col_of_row: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for c in col..=ncols {
            m[row][c] = &m[row][c] * &inv;
        }
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=ncols {
                    m[r][c] = &m[r][c] - &(&f * &m[row][c]);
                }
            }
        }
        pivot_col_of_row.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }

    // Inconsistent iff a zero row has nonzero rhs.
    for r in row..rows {
        if !m[r][ncols].is_zero() {
            return None;
        }
    }

    let mut x = vec![Rational::zero(); ncols];
    for (r, &c) in pivot_col_of_row.iter().enumerate() {
        x[c] = m[r][ncols].clone();
    }
    Some(x)
}

/// Rank over ℚ of the given vectors (as rows), with ambient dimension `dim`.
pub fn rank(vecs: &[RVec], dim: usize) -> usize {
    let mut m: Vec<Vec<Rational>> = vecs
        .iter()
        .map(|v| (0..dim).map(|i| v.coord(i)).collect())
        .collect();
    let mut r = 0;
    for col in 0..dim {
        let Some(p) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][col].recip();
        for c in col..dim {
            m[r][c] = &m[r][c] * &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for c in col..dim {
                    m[i][c] = &m[i][c] - &(&f * &m[r][c]);
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Is `v` in the ℚ-span of `family`?
pub fn in_span(family: &[RVec], v: &RVec, dim: usize) -> bool {
    if v.is_zero() {
        return true;
    }
    solve_columns(family, v, dim).is_some()
}

/// Lower-left Hermite normal form of the ℤ-row span of `rows` (ambient
/// width `n`). Zero rows are dropped.
///
/// Convention: basis rows are ordered so the index of the last nonzero entry
/// is strictly increasing, that trailing pivot is positive, and entries of
/// later rows in a pivot column are reduced into [0, pivot). With this
/// ordering the rows supported on the first k columns are exactly a ℤ-basis
/// of (row span) ∩ ℝᵏ, for every k.
pub fn hnf_lower_left(rows: Vec<Vec<BigInt>>, n: usize) -> Vec<Vec<BigInt>> {
    // Reverse columns, run the standard upper-left HNF, then undo.
    let reversed: Vec<Vec<BigInt>> = rows
        .into_iter()
        .map(|r| {
            let mut r = r;
            r.resize(n, BigInt::zero());
            r.reverse();
            r
        })
        .collect();
    let upper = hnf_upper(reversed, n);
    upper
        .into_iter()
        .rev()
        .map(|mut r| {
            r.reverse();
            r
        })
        .collect()
}

/// Standard row-style HNF: pivots at the first nonzero entry, strictly
/// increasing pivot columns, positive pivots, entries above each pivot
/// reduced into [0, pivot). Zero rows are dropped.
fn hnf_upper(mut m: Vec<Vec<BigInt>>, n: usize) -> Vec<Vec<BigInt>> {
    let mut pivot_rows: usize = 0;
    for col in 0..n {
        // Eliminate the column below `pivot_rows` down to a single entry by
        // repeated Euclidean steps.
        loop {
            let mut best: Option<usize> = None;
            for r in pivot_rows..m.len() {
                if !m[r][col].is_zero() {
                    best = match best {
                        None => Some(r),
                        Some(b) => {
                            if m[r][col].abs() < m[b][col].abs() {
                                Some(r)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
            }
            let Some(b) = best else { break };
            m.swap(pivot_rows, b);
            let mut others = false;
            for r in pivot_rows + 1..m.len() {
                if !m[r][col].is_zero() {
                    let q = div_floor_big(&m[r][col], &m[pivot_rows][col]);
                    if !q.is_zero() {
                        for c in 0..n {
                            let sub = &q * &m[pivot_rows][c];
                            m[r][c] = &m[r][c] - &sub;
                        }
                    }
                    if !m[r][col].is_zero() {
                        others = true;
                    }
                }
            }
            if !others {
                break;
            }
        }
        if m[pivot_rows..].iter().all(|r| r[col].is_zero()) {
            continue;
        }
        if m[pivot_rows][col].is_negative() {
            for c in 0..n {
                m[pivot_rows][c] = -m[pivot_rows][c].clone();
            }
        }
        // Reduce entries above the pivot into [0, pivot).
        for r in 0..pivot_rows {
            let q = div_floor_big(&m[r][col], &m[pivot_rows][col]);
            if !q.is_zero() {
                for c in 0..n {
                    let sub = &q * &m[pivot_rows][c];
                    m[r][c] = &m[r][c] - &sub;
                }
            }
        }
        pivot_rows += 1;
        if pivot_rows == m.len() {
            break;
        }
    }
    m.truncate(pivot_rows);
    m
}

fn div_floor_big(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.div_floor(b)
}
