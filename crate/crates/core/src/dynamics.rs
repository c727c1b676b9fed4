//! The self-appraisal vector field, its fixed-step integrator, the opinion
//! consensus co-process, and the region predicates used in the convergence
//! argument.

use std::io::{self, Write};
use std::ops::Deref;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{critical_supporting_path, support_structure, NetworkModel, QueryError};
use crate::linalg::generator_matrix;

/// Allowed deviation of a state's sum from 1.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Negative components no smaller than this are round-off and get clamped.
pub const CLAMP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("state is not in the unit simplex: {0}")]
    NotInSimplex(String),
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("simplex drift {drift:e} exceeds {limit:e} at t = {t}")]
    DriftExceeded { t: f64, drift: f64, limit: f64 },
    #[error("component {vertex} fell to {value:e} at t = {t}")]
    NegativeState { t: f64, vertex: usize, value: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("state is a vertex of the simplex")]
    VertexState,
    #[error("requested horizon {requested} exceeds the appraisal trajectory end {available}")]
    HorizonMismatch { requested: f64, available: f64 },
    #[error("n = {0} is too small, at least 3 required")]
    NTooSmall(usize),
}

/// A point of the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexState(Vec<f64>);

impl SimplexState {
    pub fn new(x: Vec<f64>) -> Result<Self, DynamicsError> {
        if x.is_empty() {
            return Err(DynamicsError::NotInSimplex("empty state".into()));
        }
        if let Some((i, v)) = x
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0 && **v <= 1.0))
        {
            return Err(DynamicsError::NotInSimplex(format!("x[{i}] = {v} outside [0, 1]")));
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(DynamicsError::NotInSimplex(format!("components sum to {sum}")));
        }
        Ok(Self(x))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        let mut x = vec![0.0; n];
        x[i] = 1.0;
        Self(x)
    }

    /// Index `i` if the state is (numerically) `e_i`.
    pub fn vertex_index(&self) -> Option<usize> {
        let i = self.0.iter().position(|&v| v > 0.5)?;
        (1.0 - self.0[i] <= SIMPLEX_TOL).then_some(i)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for SimplexState {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
fn influence(v: f64) -> f64 {
    (1.0 - v) * v
}

/// Writes `f(x)` into `out` with no dimension checks.
fn field_into(model: &NetworkModel, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let inflow: f64 = model
            .in_edges(i)
            .iter()
            .map(|&(j, c)| c * influence(x[j]))
            .sum();
        *o = inflow - influence(x[i]);
    }
}

/// `f_i(x) = -(1 - x_i) x_i + Σ_{j ∈ V_i^+} c_ji (1 - x_j) x_j`.
pub fn vector_field(model: &NetworkModel, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    model.check_dim(x.len())?;
    let mut out = vec![0.0; x.len()];
    field_into(model, x, &mut out);
    Ok(out)
}

/// The same field in matrix form, `Cᵀ (I - X) x`.
pub fn vector_field_matrix(model: &NetworkModel, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    model.check_dim(x.len())?;
    let c = generator_matrix(model);
    let g = DVector::from_iterator(x.len(), x.iter().map(|&v| influence(v)));
    Ok((c.transpose() * g).iter().copied().collect())
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, a| m.max(a.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub horizon: f64,
    /// Record every k-th step; the initial and final states are always kept.
    pub record_every: usize,
    /// Residual `‖f(x)‖_∞` below which the run counts as converged.
    pub convergence_tol: f64,
    /// Largest tolerated `|Σx - 1|` before the per-step correction.
    pub drift_tol: f64,
    /// Stop at the first converged step instead of running to the horizon.
    pub stop_on_convergence: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 0.01,
            horizon: 200.0,
            record_every: 1,
            convergence_tol: 1e-10,
            drift_tol: 1e-6,
            stop_on_convergence: false,
        }
    }
}

impl IntegratorConfig {
    pub const MAX_STEP: f64 = 0.1;

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: &str| Err(DynamicsError::InvalidConfig(m.to_string()));
        if !(self.step > 0.0 && self.step <= Self::MAX_STEP) {
            return bad("step must lie in (0, 0.1]");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be positive and finite");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        if !(self.convergence_tol > 0.0) || !(self.drift_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SimplexState>,
    /// First recorded time from which every later recorded state lies in Q.
    pub q_entry_time: Option<f64>,
    /// First step time with residual below the convergence tolerance.
    pub converged_at: Option<f64>,
    /// Largest `|Σx - 1|` seen before any per-step correction.
    pub max_simplex_drift: f64,
    /// Smallest component seen before clamping.
    pub min_component: f64,
    /// Steps taken.
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &SimplexState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial state")
    }

    /// Linear interpolation between recorded samples; clamps outside the
    /// recorded range.
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.states[0].to_vec();
        }
        if k == self.times.len() {
            return self.final_state().to_vec();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.states[k - 1]
            .iter()
            .zip(self.states[k].iter())
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// CSV with header `t,x0,..`, 17 significant digits, and event comments.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.len());
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((0..n).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{}", fmt_f64(*t))?;
            for v in x.iter() {
                write!(w, ",{}", fmt_f64(*v))?;
            }
            writeln!(w)?;
        }
        if let Some(t) = self.q_entry_time {
            writeln!(w, "# q_entry={}", fmt_f64(t))?;
        }
        if let Some(t) = self.converged_at {
            writeln!(w, "# converged={}", fmt_f64(t))?;
        }
        Ok(())
    }
}

/// Locale-independent round-trip formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Classical fourth-order Runge-Kutta with per-step simplex correction.
///
/// After every step, components in `[-1e-10, 0)` are clamped to zero and the
/// state is rescaled to sum 1. Larger excursions are errors.
pub fn integrate(model: &NetworkModel, x0: &SimplexState, cfg: &IntegratorConfig) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    model.check_dim(x0.len())?;
    let n = x0.len();
    let alpha = alpha_threshold(n)?;

    let mut x = x0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.clone()],
        q_entry_time: None,
        converged_at: None,
        max_simplex_drift: 0.0,
        min_component: x.iter().copied().fold(f64::INFINITY, f64::min),
        steps: 0,
    };

    field_into(model, &x, &mut k1);
    if sup_norm(&k1) < cfg.convergence_tol {
        traj.converged_at = Some(0.0);
    }
    let done_at_start = cfg.stop_on_convergence && traj.converged_at.is_some();

    let full_steps = (cfg.horizon / cfg.step).floor() as usize;
    let remainder = cfg.horizon - full_steps as f64 * cfg.step;
    let total = if remainder > 1e-12 * cfg.horizon { full_steps + 1 } else { full_steps };

    let mut idx = 0;
    while idx < total && !done_at_start {
        idx += 1;
        let t_prev = (idx - 1) as f64 * cfg.step;
        let t = if idx == total { cfg.horizon } else { idx as f64 * cfg.step };
        let h = t - t_prev;

        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        field_into(model, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        field_into(model, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        field_into(model, &tmp, &mut k4);
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        if x.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState { t });
        }
        let drift = (x.iter().sum::<f64>() - 1.0).abs();
        traj.max_simplex_drift = traj.max_simplex_drift.max(drift);
        if drift > cfg.drift_tol {
            return Err(DynamicsError::DriftExceeded {
                t,
                drift,
                limit: cfg.drift_tol,
            });
        }
        for (i, v) in x.iter_mut().enumerate() {
            traj.min_component = traj.min_component.min(*v);
            if *v < 0.0 {
                if *v < -CLAMP_TOL {
                    return Err(DynamicsError::NegativeState { t, vertex: i, value: *v });
                }
                *v = 0.0;
            }
        }
        let sum: f64 = x.iter().sum();
        for v in x.iter_mut() {
            *v /= sum;
        }
        traj.steps = idx;

        field_into(model, &x, &mut k1);
        let converged_now = traj.converged_at.is_none() && sup_norm(&k1) < cfg.convergence_tol;
        if converged_now {
            traj.converged_at = Some(t);
        }
        let stop = cfg.stop_on_convergence && converged_now;
        if idx % cfg.record_every == 0 || idx == total || stop {
            traj.times.push(t);
            traj.states.push(SimplexState(x.clone()));
        }
        if stop {
            break;
        }
    }

    traj.q_entry_time = q_entry(&traj, alpha);
    Ok(traj)
}

fn q_entry(traj: &Trajectory, alpha: f64) -> Option<f64> {
    let in_q = |x: &SimplexState| x.iter().all(|&v| v <= alpha);
    let mut entry = None;
    for (t, x) in traj.times.iter().zip(&traj.states).rev() {
        if !in_q(x) {
            break;
        }
        entry = Some(*t);
    }
    entry
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusConfig {
    pub step: f64,
    pub horizon: f64,
    pub record_every: usize,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        Self {
            step: 0.01,
            horizon: 200.0,
            record_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpinionTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl OpinionTrajectory {
    /// `max_i z_i - min_i z_i` at every sample.
    pub fn spreads(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|z| {
                let (lo, hi) = z
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                hi - lo
            })
            .collect()
    }
}

/// Integrates `ż_i = (1 - x_i(t)) (-z_i + Σ_j c_ij z_j)` driven by a recorded
/// appraisal trajectory, interpolated linearly between samples.
pub fn simulate_consensus(
    model: &NetworkModel,
    appraisals: &Trajectory,
    z0: &[f64],
    cfg: &ConsensusConfig,
) -> Result<OpinionTrajectory, DynamicsError> {
    model.check_dim(z0.len())?;
    if !(cfg.step > 0.0) || !(cfg.horizon > 0.0) || cfg.record_every == 0 {
        return Err(DynamicsError::InvalidConfig("consensus step, horizon and record_every must be positive".into()));
    }
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFiniteState { t: 0.0 });
    }
    let available = appraisals.end_time();
    if cfg.horizon > available + 1e-9 {
        return Err(DynamicsError::HorizonMismatch {
            requested: cfg.horizon,
            available,
        });
    }

    let n = z0.len();
    let rate = |t: f64, z: &[f64], out: &mut [f64]| {
        let x = appraisals.state_at(t);
        for (i, o) in out.iter_mut().enumerate() {
            let pull: f64 = model.out_edges(i).iter().map(|&(j, c)| c * z[j]).sum();
            *o = (1.0 - x[i]) * (pull - z[i]);
        }
    };

    let mut z = z0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut out = OpinionTrajectory {
        times: vec![0.0],
        states: vec![z.clone()],
    };

    let total = (cfg.horizon / cfg.step).ceil() as usize;
    for idx in 1..=total {
        let t0 = (idx - 1) as f64 * cfg.step;
        let t1 = if idx == total { cfg.horizon } else { idx as f64 * cfg.step };
        let h = t1 - t0;
        rate(t0, &z, &mut k1);
        for i in 0..n {
            tmp[i] = z[i] + 0.5 * h * k1[i];
        }
        rate(t0 + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = z[i] + 0.5 * h * k2[i];
        }
        rate(t0 + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = z[i] + h * k3[i];
        }
        rate(t1, &tmp, &mut k4);
        for i in 0..n {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState { t: t1 });
        }
        if idx % cfg.record_every == 0 || idx == total {
            out.times.push(t1);
            out.states.push(z.clone());
        }
    }
    Ok(out)
}

/// First non-vanishing time derivative of a zero appraisal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryDerivative {
    /// No supporting path: the appraisal stays at zero forever.
    AlwaysZero,
    /// `x_i^{(order)}(0) = value > 0`, all lower derivatives vanish.
    Leading { order: usize, value: f64 },
}

/// Predicts how a zero appraisal leaves the boundary, from the critical
/// supporting path length `k` and `Σ_{j ∈ D_i(k)} α_ji (1 - x_j) x_j`.
pub fn boundary_derivative(
    model: &NetworkModel,
    x: &SimplexState,
    target: usize,
) -> Result<BoundaryDerivative, DynamicsError> {
    model.check_dim(x.len())?;
    if x.vertex_index().is_some() {
        return Err(DynamicsError::VertexState);
    }
    let Some(path) = critical_supporting_path(model, x, target)? else {
        return Ok(BoundaryDerivative::AlwaysZero);
    };
    let support = support_structure(model, target)?;
    let value = support
        .difference(path.length)
        .iter()
        .map(|&j| support.alpha(j).unwrap() * influence(x[j]))
        .sum();
    Ok(BoundaryDerivative::Leading {
        order: path.length,
        value,
    })
}

/// Cap `α = 1/2 - 1/(4(2n - 3))` on every vertex threshold.
pub fn alpha_threshold(n: usize) -> Result<f64, DynamicsError> {
    if n < 3 {
        return Err(DynamicsError::NTooSmall(n));
    }
    Ok(0.5 - 1.0 / (4.0 * (2.0 * n as f64 - 3.0)))
}

/// `α_i = 1/2 - 1/(4(2 d_i - 1))` with `d_i` the in-degree; 0 when vertex
/// `i` has no incoming neighbors, since then `f_i < 0` on all of `(0, 1)`.
pub fn vertex_threshold(model: &NetworkModel, i: usize) -> f64 {
    match model.in_degree(i) {
        0 => 0.0,
        d => 0.5 - 1.0 / (4.0 * (2.0 * d as f64 - 1.0)),
    }
}

/// Membership in `Q = {x : x_i ≤ α for all i}`.
pub fn in_q(model: &NetworkModel, x: &[f64]) -> bool {
    let alpha = alpha_threshold(model.n()).expect("admissible networks have n >= 3");
    x.iter().all(|&v| v <= alpha)
}

/// Membership in the repeller region `P_i(ε) = {x : x_i ≥ ε}`.
pub fn in_repeller(x: &[f64], i: usize, eps: f64) -> bool {
    x[i] >= eps
}

/// Total appraisal held by the roots.
pub fn phi_r(model: &NetworkModel, x: &[f64]) -> f64 {
    model.roots().iter().map(|&i| x[i]).sum()
}

/// Time derivative of [`phi_r`]: the flow over edges from non-roots into
/// roots, `Σ c_ij (1 - x_i) x_i`. Never negative.
pub fn phi_r_rate(model: &NetworkModel, x: &[f64]) -> f64 {
    model
        .edges()
        .filter(|&(i, j, _)| !model.is_root(i) && model.is_root(j))
        .map(|(i, _, c)| c * influence(x[i]))
        .sum()
}
