//! Gauss-Jordan elimination over exact expressions.
//!
//! Pivots are chosen column by column in order; within a column the first row
//! whose entry tests non-zero is used. Entries the zero test proves zero are
//! cleared, so rows with only sampled-zero entries do not produce pivots.

use thiserror::Error;

use crate::symexpr::{Expr, Verdict, ZeroTest};

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// Solution with every free variable set to zero.
    pub particular: Vec<Expr>,
    /// One normalised basis vector per free column.
    pub kernel: Vec<Vec<Expr>>,
    /// Right-hand sides of eliminated rows that depend on coordinates and must vanish.
    pub residuals: Vec<Expr>,
    pub pivots: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("row {row} reduces to 0 = {residual}")]
    Inconsistent { row: usize, residual: Expr },
    #[error("cannot decide whether pivot candidate `{entry}` in column {col} vanishes")]
    Undecided { col: usize, entry: Expr },
}

struct Row {
    a: Vec<Expr>,
    b: Expr,
    orig: usize,
}

/// Solves `A x = b` for an `m x ncols` system, pivoting on coordinate-free entries when possible.
pub fn solve(a: &[Vec<Expr>], b: &[Expr], ncols: usize, zt: &ZeroTest) -> Result<Solution, SolveError> {
    assert_eq!(a.len(), b.len());
    let mut rows: Vec<Row> = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(i, (r, rhs))| {
            assert_eq!(r.len(), ncols);
            Row {
                a: r.clone(),
                b: rhs.clone(),
                orig: i,
            }
        })
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..ncols {
        let mut found = None;
        let mut undecided = None;
        for (i, row) in rows.iter_mut().enumerate().skip(rank) {
            let e = &row.a[col];
            if e.is_zero() {
                continue;
            }
            match zt.verdict(e) {
                Verdict::NonZero if e.is_coordinate_free() => {
                    found = Some(i);
                    break;
                }
                Verdict::NonZero => {
                    found.get_or_insert(i);
                }
                Verdict::Zero => row.a[col] = Expr::zero(),
                Verdict::Unknown => {
                    undecided.get_or_insert_with(|| e.clone());
                }
            }
        }
        let Some(p) = found else {
            if let Some(entry) = undecided {
                return Err(SolveError::Undecided { col, entry });
            }
            continue;
        };
        rows.swap(rank, p);
        let piv = rows[rank].a[col].clone();
        if !piv.is_one() {
            let inv = piv.recip().expect("pivot is non-zero");
            let r = &mut rows[rank];
            for e in r.a.iter_mut() {
                if !e.is_zero() {
                    *e = &*e * &inv;
                }
            }
            r.b = &r.b * &inv;
        }
        let (pa, pb) = (rows[rank].a.clone(), rows[rank].b.clone());
        for (i, row) in rows.iter_mut().enumerate() {
            if i == rank || row.a[col].is_zero() {
                continue;
            }
            let f = row.a[col].clone();
            for (e, pe) in row.a.iter_mut().zip(&pa) {
                if !pe.is_zero() {
                    *e = &*e - &(&f * pe);
                }
            }
            row.a[col] = Expr::zero();
            if !pb.is_zero() {
                row.b = &row.b - &(&f * &pb);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    let mut residuals = Vec::new();
    for row in &rows[rank..] {
        if row.b.is_zero() {
            continue;
        }
        match zt.verdict(&row.b) {
            Verdict::Zero => {}
            _ if row.b.is_coordinate_free() => {
                return Err(SolveError::Inconsistent {
                    row: row.orig,
                    residual: row.b.clone(),
                })
            }
            _ => {
                if !residuals.contains(&row.b) {
                    residuals.push(row.b.clone());
                }
            }
        }
    }
    let mut particular = vec![Expr::zero(); ncols];
    for (r, &c) in pivots.iter().enumerate() {
        particular[c] = rows[r].b.clone();
    }
    let mut kernel = Vec::new();
    for f in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Expr::zero(); ncols];
        v[f] = Expr::one();
        for (r, &c) in pivots.iter().enumerate() {
            v[c] = -&rows[r].a[f];
        }
        kernel.push(normalize_vector(&v));
    }
    Ok(Solution {
        particular,
        kernel,
        residuals,
        pivots,
    })
}

/// Null space basis of `A`.
pub fn kernel(a: &[Vec<Expr>], ncols: usize, zt: &ZeroTest) -> Result<Vec<Vec<Expr>>, SolveError> {
    let b = vec![Expr::zero(); a.len()];
    Ok(solve(a, &b, ncols, zt)?.kernel)
}

/// Clears denominators, removes polynomial content and makes the leading
/// coefficient of the first non-zero entry one.
pub fn normalize_vector(v: &[Expr]) -> Vec<Expr> {
    let mut l = Expr::one();
    for e in v {
        let d = e.denominator();
        if !d.is_one() {
            let g = l.numerator_gcd(&d);
            l = (&l * &d).checked_div(&g).expect("gcd is non-zero");
        }
    }
    let scaled: Vec<Expr> = v.iter().map(|e| e * &l).collect();
    let mut g: Option<Expr> = None;
    for e in scaled.iter().filter(|e| !e.is_zero()) {
        g = Some(match g {
            None => e.numerator_gcd(e),
            Some(g) => g.numerator_gcd(e),
        });
    }
    let Some(g) = g else {
        return scaled;
    };
    let mut out: Vec<Expr> = scaled
        .iter()
        .map(|e| e.checked_div(&g).expect("content is non-zero"))
        .collect();
    if let Some(first) = out.iter().find(|e| !e.is_zero()) {
        let lc = Expr::constant(first.leading_coefficient());
        let inv = lc.recip().expect("leading coefficient is non-zero");
        out = out.iter().map(|e| e * &inv).collect();
    }
    out
}

/// Numeric rank of a matrix by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn numeric_rank(m: &[Vec<f64>], tol: f64) -> usize {
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let scale = a.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let (p, best) = (rank..rows)
            .map(|r| (r, a[r][c].abs()))
            .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol * scale {
            continue;
        }
        a.swap(rank, p);
        for r in rank + 1..rows {
            let f = a[r][c] / a[rank][c];
            for k in c..cols {
                a[r][k] -= f * a[rank][k];
            }
        }
        rank += 1;
    }
    rank
}
