//! The non-vertex equilibrium: stationary vector of the weight matrix,
//! closed-form solution through the scalar multiplier `μ`, and the
//! spectral stability certificate.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{vector_field, DynamicsError, SimplexState};
use crate::graph::{NetworkModel, QueryError};
use crate::linalg::{generator_matrix, solve_partial_pivot};

/// Stationary-vector entries below this magnitude are set to exactly zero.
pub const STATIONARY_CLAMP: f64 = 1e-13;
/// Eigenvalues with modulus below this count as zero.
pub const ZERO_EIG_TOL: f64 = 1e-8;
/// Non-zero eigenvalues must have real part below `-NEGATIVE_MARGIN`.
pub const NEGATIVE_MARGIN: f64 = 1e-10;
/// Row sums of the scaled coefficients must equal 1 to this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-10;

const NULL_RESIDUAL_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-14;
const BISECTION_REL_WIDTH: f64 = 1e-14;
const BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("stationary system is singular")]
    SingularSystem,
    #[error("stationary vector residual {0:e} exceeds tolerance")]
    NotNullVector(f64),
    #[error("stationary vector has v[{vertex}] = {value:e}, inconsistent with the root set")]
    SignPatternViolation { vertex: usize, value: f64 },
    #[error("stationary vector entry v[{vertex}] = {value} exceeds 1/3")]
    StationaryBoundViolated { vertex: usize, value: f64 },
    #[error("multiplier {mu} outside [0, {max}]")]
    MuOutOfRange { mu: f64, max: f64 },
    #[error("psi at the largest admissible multiplier is {0}, not above 1")]
    BisectionFailed(f64),
    #[error("eigenvalue computation did not converge")]
    EigenFailure,
    #[error("scaled coefficients into vertex {vertex} sum to {row_sum}, expected 1")]
    NotAnEquilibrium { vertex: usize, row_sum: f64 },
}

/// Left null vector of `C`, normalized to sum 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StationaryVector(Vec<f64>);

impl StationaryVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_entry(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// `μ₁ = 1 / (4 max_i v_i)`, the largest multiplier with real `x*_i(μ)`.
    pub fn mu_max(&self) -> f64 {
        1.0 / (4.0 * self.max_entry())
    }
}

/// Solves `Cᵀ v = 0, Σ v = 1` with the last equation replaced by the
/// normalization row, then checks the sign pattern and the 1/3 bound.
pub fn stationary_vector(model: &NetworkModel) -> Result<StationaryVector, EquilibriumError> {
    let n = model.n();
    let ct = generator_matrix(model).transpose();
    let mut a = ct.clone();
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let mut v = solve_partial_pivot(&a, &b, PIVOT_TOL).ok_or(EquilibriumError::SingularSystem)?;
    for e in v.iter_mut() {
        if e.abs() < STATIONARY_CLAMP {
            *e = 0.0;
        }
    }

    let residual = (&ct * &v).amax();
    if residual > NULL_RESIDUAL_TOL {
        return Err(EquilibriumError::NotNullVector(residual));
    }
    for (i, &value) in v.iter().enumerate() {
        let ok = if model.is_root(i) { value > 0.0 } else { value == 0.0 };
        if !ok {
            return Err(EquilibriumError::SignPatternViolation { vertex: i, value });
        }
        if value > 1.0 / 3.0 + 1e-12 {
            return Err(EquilibriumError::StationaryBoundViolated { vertex: i, value });
        }
    }
    Ok(StationaryVector(v.iter().copied().collect()))
}

fn root_coordinate(vi: f64, mu: f64) -> f64 {
    let arg = 1.0 - 4.0 * mu * vi;
    // Round-off at μ = μ₁ can push the argument a hair below zero.
    let arg = if (-1e-15..0.0).contains(&arg) { 0.0 } else { arg };
    0.5 * (1.0 - arg.sqrt())
}

/// `x*_i(μ) = (1 - √(1 - 4 μ v_i)) / 2`, zero wherever `v_i = 0`.
pub fn equilibrium_at(v: &StationaryVector, mu: f64) -> Result<Vec<f64>, EquilibriumError> {
    check_mu(v, mu)?;
    Ok(v.0.iter().map(|&vi| root_coordinate(vi, mu)).collect())
}

fn check_mu(v: &StationaryVector, mu: f64) -> Result<(), EquilibriumError> {
    let max = v.mu_max();
    if !(mu >= 0.0 && mu <= max) {
        return Err(EquilibriumError::MuOutOfRange { mu, max });
    }
    Ok(())
}

/// `ψ(μ) = Σ_i x*_i(μ)`, strictly increasing on `[0, μ₁]`.
pub fn psi(v: &StationaryVector, mu: f64) -> Result<f64, EquilibriumError> {
    check_mu(v, mu)?;
    Ok(v.0.iter().filter(|&&vi| vi > 0.0).map(|&vi| root_coordinate(vi, mu)).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Eigenvalues of the Jacobian, sorted by decreasing real part.
    pub spectrum: Vec<Complex64>,
    pub zero_eig_count: usize,
    /// Largest real part among the non-zero eigenvalues.
    pub max_other_real_part: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub x_star: SimplexState,
    pub mu: f64,
    pub stationary: StationaryVector,
    /// `‖f(x*)‖_∞`.
    pub residual: f64,
    pub stability: StabilityReport,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    x_star: &'a [f64],
    mu: f64,
    residual: f64,
    spectrum: Vec<[f64; 2]>,
    stable: bool,
}

impl EquilibriumReport {
    /// `{"x_star": [..], "mu": .., "residual": .., "spectrum": [[re, im], ..], "stable": ..}`
    pub fn to_json(&self) -> String {
        let doc = ReportJson {
            x_star: &self.x_star,
            mu: self.mu,
            residual: self.residual,
            spectrum: self.stability.spectrum.iter().map(|z| [z.re, z.im]).collect(),
            stable: self.stability.stable,
        };
        serde_json::to_string_pretty(&doc).expect("report serialization is infallible")
    }
}

/// Finds the unique `μ ∈ (0, μ₁]` with `ψ(μ) = 1` by bisection and returns
/// the corresponding equilibrium with its stability certificate.
pub fn solve_equilibrium(model: &NetworkModel) -> Result<EquilibriumReport, EquilibriumError> {
    let v = stationary_vector(model)?;
    let mu_max = v.mu_max();
    let top = psi(&v, mu_max)?;
    if !(top > 1.0) {
        return Err(EquilibriumError::BisectionFailed(top));
    }

    let (mut lo, mut hi) = (0.0, mu_max);
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_REL_WIDTH * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if psi(&v, mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let x = equilibrium_at(&v, mu)?;
    let residual = vector_field(model, &x)?.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let stability = stability_report(model, &x)?;
    let x_star = SimplexState::new(x)?;
    Ok(EquilibriumReport {
        x_star,
        mu,
        stationary: v,
        residual,
        stability,
    })
}

/// The `n` vertex equilibria `e_i`, which the solver never returns.
pub fn vertex_equilibria(n: usize) -> Vec<SimplexState> {
    (0..n).map(|i| SimplexState::vertex(n, i)).collect()
}

/// `J(x) = Cᵀ (I - 2X)`.
pub fn jacobian(model: &NetworkModel, x: &[f64]) -> Result<DMatrix<f64>, EquilibriumError> {
    model.check_dim(x.len())?;
    let mut j = generator_matrix(model).transpose();
    for (col, &xc) in x.iter().enumerate() {
        j.column_mut(col).scale_mut(1.0 - 2.0 * xc);
    }
    Ok(j)
}

/// Full spectrum of `J(x*)` and the stability verdict: exactly one zero
/// eigenvalue (the mode transverse to the simplex) and every other
/// eigenvalue in the open left half-plane.
pub fn stability_report(model: &NetworkModel, x_star: &[f64]) -> Result<StabilityReport, EquilibriumError> {
    let j = jacobian(model, x_star)?;
    let schur = Schur::try_new(j, f64::EPSILON, 100_000).ok_or(EquilibriumError::EigenFailure)?;
    let mut spectrum: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    if spectrum.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EquilibriumError::EigenFailure);
    }
    spectrum.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));

    let zero_eig_count = spectrum.iter().filter(|z| z.norm() < ZERO_EIG_TOL).count();
    let max_other_real_part = spectrum
        .iter()
        .filter(|z| z.norm() >= ZERO_EIG_TOL)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let stable = zero_eig_count == 1 && max_other_real_part < -NEGATIVE_MARGIN;
    Ok(StabilityReport {
        spectrum,
        zero_eig_count,
        max_other_real_part,
        stable,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCoefficients {
    /// `(j, i) -> c̃_ji` for every edge `j -> i` between roots.
    pub entries: BTreeMap<(usize, usize), f64>,
    /// `i -> Σ_j c̃_ji` for every root `i`.
    pub row_sums: BTreeMap<usize, f64>,
}

/// `c̃_ji = c_ji (1 - x*_j) x*_j / ((1 - x*_i) x*_i)` on the root subgraph.
/// At an equilibrium the coefficients into each root sum to 1.
pub fn scaled_coefficients(model: &NetworkModel, x_star: &[f64]) -> Result<ScaledCoefficients, EquilibriumError> {
    model.check_dim(x_star.len())?;
    let g = |v: f64| (1.0 - v) * v;
    let mut entries = BTreeMap::new();
    let mut row_sums = BTreeMap::new();
    for &i in model.roots() {
        let denom = g(x_star[i]);
        let mut sum = 0.0;
        for &(j, c) in model.in_edges(i) {
            if !model.is_root(j) {
                continue;
            }
            let scaled = c * g(x_star[j]) / denom;
            entries.insert((j, i), scaled);
            sum += scaled;
        }
        if !((sum - 1.0).abs() <= ROW_SUM_TOL) {
            return Err(EquilibriumError::NotAnEquilibrium { vertex: i, row_sum: sum });
        }
        row_sums.insert(i, sum);
    }
    Ok(ScaledCoefficients { entries, row_sums })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{k3, k3_leaf};
    use crate::graph::{validate_network, RawNetwork};

    const THIRD: f64 = 1.0 / 3.0;

    /// Four roots on a directed ring with chords, uneven weights.
    fn asymmetric4() -> NetworkModel {
        let raw = RawNetwork {
            n: 4,
            edges: vec![
                (0, 1, 0.5),
                (0, 2, 0.3),
                (0, 3, 0.2),
                (1, 2, 0.5),
                (1, 0, 0.5),
                (2, 3, 0.4),
                (2, 0, 0.35),
                (2, 1, 0.25),
                (3, 0, 0.5),
                (3, 1, 0.5),
            ],
        };
        validate_network(&raw).unwrap()
    }

    #[test]
    fn stationary_k3_and_leaf() {
        let v = stationary_vector(&k3()).unwrap();
        for &e in v.as_slice() {
            assert!((e - THIRD).abs() < 1e-15);
        }
        let v = stationary_vector(&k3_leaf()).unwrap();
        assert_eq!(v.as_slice()[3], 0.0);
        for &e in &v.as_slice()[..3] {
            assert!((e - THIRD).abs() < 1e-15);
        }
    }

    #[test]
    fn psi_closed_form() {
        let v = stationary_vector(&k3()).unwrap();
        assert_eq!(psi(&v, 0.0).unwrap(), 0.0);
        // 3 (1 - √(1/9)) / 2 = 1
        assert!((psi(&v, 2.0 / 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(psi(&v, v.mu_max()).unwrap() > 1.0);
        assert!(matches!(psi(&v, v.mu_max() * 1.01), Err(EquilibriumError::MuOutOfRange { .. })));
        assert!(matches!(psi(&v, -0.1), Err(EquilibriumError::MuOutOfRange { .. })));
    }

    #[test]
    fn k3_equilibrium_exact() {
        let r = solve_equilibrium(&k3()).unwrap();
        assert!((r.mu - 2.0 / 3.0).abs() <= 1e-12);
        for &x in r.x_star.iter() {
            assert!((x - THIRD).abs() <= 1e-12);
        }
        assert!(r.residual <= 1e-10);
        assert!(r.stability.stable);
        assert_eq!(r.stability.zero_eig_count, 1);
    }

    #[test]
    fn leaf_equilibrium() {
        let r = solve_equilibrium(&k3_leaf()).unwrap();
        assert_eq!(r.x_star[3], 0.0);
        for &x in &r.x_star[..3] {
            assert!((x - THIRD).abs() <= 1e-12);
        }
        assert!(r.stability.stable);
    }

    #[test]
    fn k3_spectrum_is_scaled_generator() {
        // J(x*) = Cᵀ/3; C for K3 with weights 1/2 has eigenvalues 0, -3/2, -3/2.
        let r = solve_equilibrium(&k3()).unwrap();
        let s = &r.stability.spectrum;
        assert!(s[0].norm() < 1e-12);
        for z in &s[1..] {
            assert!((z.re + 0.5).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
        assert!((r.stability.max_other_real_part + 0.5).abs() < 1e-12);
    }

    #[test]
    fn jacobian_at_zero_is_generator_transpose() {
        let m = k3_leaf();
        let j = jacobian(&m, &[0.0; 4]).unwrap();
        assert_eq!(j, generator_matrix(&m).transpose());
    }

    #[test]
    fn jacobian_column_sums_vanish_at_equilibrium() {
        let r = solve_equilibrium(&k3()).unwrap();
        let j = jacobian(&k3(), &r.x_star).unwrap();
        for c in 0..3 {
            assert!(j.column(c).sum().abs() < 1e-15);
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let m = asymmetric4();
        let x = [0.1, 0.2, 0.3, 0.4];
        let j = jacobian(&m, &x).unwrap();
        let h = 1e-6;
        for c in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let fp = vector_field(&m, &xp).unwrap();
            let fm = vector_field(&m, &xm).unwrap();
            for r in 0..4 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!((fd - j[(r, c)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scaled_coefficients_k3() {
        let r = solve_equilibrium(&k3()).unwrap();
        let s = scaled_coefficients(&k3(), &r.x_star).unwrap();
        assert_eq!(s.entries.len(), 6);
        for &c in s.entries.values() {
            assert!((c - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_coefficients_asymmetric() {
        let m = asymmetric4();
        let r = solve_equilibrium(&m).unwrap();
        let s = scaled_coefficients(&m, &r.x_star).unwrap();
        for &sum in s.row_sums.values() {
            assert!((sum - 1.0).abs() <= 1e-10);
        }
        let differs = s
            .entries
            .iter()
            .any(|(&(j, i), &c)| (c - m.weight(j, i).unwrap()).abs() > 1e-3);
        assert!(differs);
    }

    #[test]
    fn scaled_coefficients_reject_non_equilibrium() {
        let err = scaled_coefficients(&asymmetric4(), &[0.25; 4]).unwrap_err();
        assert!(matches!(err, EquilibriumError::NotAnEquilibrium { .. }));
    }

    #[test]
    fn report_json_shape() {
        let r = solve_equilibrium(&k3()).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let keys: Vec<&String> = doc.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 5);
        assert_eq!(doc["stable"], true);
        assert_eq!(doc["spectrum"].as_array().unwrap().len(), 3);
        assert_eq!(doc["spectrum"][0].as_array().unwrap().len(), 2);
    }

    #[test]
    fn vertices_enumerated_separately() {
        let vs = vertex_equilibria(4);
        assert_eq!(vs.len(), 4);
        for (i, v) in vs.iter().enumerate() {
            assert_eq!(v.vertex_index(), Some(i));
            assert_eq!(vector_field(&k3_leaf(), v).unwrap(), vec![0.0; 4]);
        }
    }
}
