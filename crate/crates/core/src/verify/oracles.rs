//! Brute-force references. None of these share code with the routines
//! they are used to check.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::generator::{sample_boundary, sample_interior};
use crate::dynamics::vector_field;
use crate::graph::{NetworkModel, RawNetwork};

/// `reach[s][t]`: whether `t` is reachable from `s` (reflexive), by boolean
/// transitive closure. Edges with out-of-range endpoints are ignored.
pub fn reachability_matrix(raw: &RawNetwork) -> Vec<Vec<bool>> {
    let n = raw.n;
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(s, d, _) in &raw.edges {
        if s < n && d < n {
            reach[s][d] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach
}

/// Vertices reachable from every vertex.
pub fn reachability_roots(raw: &RawNetwork) -> Vec<usize> {
    let reach = reachability_matrix(raw);
    let n = raw.n;
    (0..n).filter(|&t| (0..n).all(|s| reach[s][t])).collect()
}

/// Central-difference Jacobian of the vector field.
pub fn finite_difference_jacobian(model: &NetworkModel, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += h;
        xm[c] -= h;
        let fp = vector_field(model, &xp).expect("dimension matches");
        let fm = vector_field(model, &xm).expect("dimension matches");
        for r in 0..n {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// Newton iteration on `f(x) = 0` restricted to the hyperplane `Σx = 1`,
/// with the analytic Jacobian written out independently of the library's.
fn newton_refine(model: &NetworkModel, start: &[f64]) -> Option<Vec<f64>> {
    let n = start.len();
    let mut x = start.to_vec();
    for _ in 0..60 {
        let f = vector_field(model, &x).ok()?;
        let sum: f64 = x.iter().sum();
        let res = f.iter().fold((sum - 1.0).abs(), |m, v| m.max(v.abs()));
        if res < 1e-14 {
            return Some(x);
        }
        // ∂f_i/∂x_k: -(1 - 2x_i) on the diagonal, c_ki (1 - 2x_k) for k -> i.
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] -= 1.0 - 2.0 * x[i];
            for &(k, c) in model.in_edges(i) {
                jac[(i, k)] += c * (1.0 - 2.0 * x[k]);
            }
        }
        let mut rhs = DVector::from_iterator(n, f.iter().map(|v| -v));
        for c in 0..n {
            jac[(n - 1, c)] = 1.0;
        }
        rhs[n - 1] = 1.0 - sum;
        let dx = jac.lu().solve(&rhs)?;
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi += d;
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return None;
        }
    }
    let f = vector_field(model, &x).ok()?;
    (f.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-8).then_some(x)
}

/// Every equilibrium in the simplex found by Newton refinement from the
/// vertices' neighborhoods plus `samples` random interior and boundary
/// starts. Points closer than `1e-6` in the sup norm are merged.
pub fn find_equilibria<R: Rng>(model: &NetworkModel, rng: &mut R, samples: usize) -> Vec<Vec<f64>> {
    let n = model.n();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for delta in [0.0, 0.05] {
            let mut x = vec![delta / n as f64; n];
            x[i] += 1.0 - delta;
            starts.push(x);
        }
    }
    for k in 0..samples {
        let s = if k % 2 == 0 {
            sample_interior(rng, n)
        } else {
            sample_boundary(rng, n)
        };
        starts.push(s.to_vec());
    }

    let mut found: Vec<Vec<f64>> = Vec::new();
    for s in starts {
        let Some(x) = newton_refine(model, &s) else { continue };
        if x.iter().any(|v| !(-1e-9..=1.0 + 1e-9).contains(v)) {
            continue;
        }
        let dup = found
            .iter()
            .any(|y| y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-6));
        if !dup {
            found.push(x);
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{k3, k3_leaf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reachability_on_leaf_graph() {
        assert_eq!(reachability_roots(&k3_leaf().to_raw()), vec![0, 1, 2]);
    }

    #[test]
    fn reachability_without_roots() {
        let raw = RawNetwork {
            n: 4,
            edges: vec![(0, 1, 1.0), (2, 3, 1.0)],
        };
        assert!(reachability_roots(&raw).is_empty());
    }

    #[test]
    fn k3_has_four_equilibria() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let eq = find_equilibria(&k3(), &mut rng, 50);
        assert_eq!(eq.len(), 4);
        assert!(eq.iter().any(|x| x.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-12)));
    }
}
