//! Small dense helpers: the infinitesimally stochastic weight matrix and a
//! Gaussian-elimination solver.

use nalgebra::{DMatrix, DVector};

use crate::graph::NetworkModel;

/// `C` with `C_ij = c_ij` on edges and rows summing to zero.
pub fn generator_matrix(model: &NetworkModel) -> DMatrix<f64> {
    let n = model.n();
    let mut c = DMatrix::zeros(n, n);
    for (i, j, w) in model.edges() {
        c[(i, j)] = w;
        c[(i, i)] -= w;
    }
    c
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `pivot_tol` times the largest
/// entry magnitude of `a`.
pub fn solve_partial_pivot(a: &DMatrix<f64>, b: &DVector<f64>, pivot_tol: f64) -> Option<DVector<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "square system expected");
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut rhs = b.clone();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, m[(r, col)].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= pivot_tol * scale {
            return None;
        }
        if pivot_row != col {
            m.swap_rows(pivot_row, col);
            rhs.swap_rows(pivot_row, col);
        }
        let pivot = m[(col, col)];
        for r in col + 1..n {
            let factor = m[(r, col)] / pivot;
            if factor == 0.0 {
                continue;
            }
            m[(r, col)] = 0.0;
            for c in col + 1..n {
                m[(r, c)] -= factor * m[(col, c)];
            }
            rhs[r] -= factor * rhs[col];
        }
    }

    let mut x = DVector::zeros(n);
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| m[(r, c)] * x[c]).sum();
        x[r] = (rhs[r] - tail) / m[(r, r)];
    }
    Some(x)
}
