use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::generator::{
    random_network, sample_boundary, sample_interior, sample_on_support, sample_root_supported, GeneratorSpec,
    Topology,
};
use super::oracles::{finite_difference_jacobian, find_equilibria, reachability_matrix, reachability_roots};
use super::VerifyError;
use crate::dynamics::{
    alpha_threshold, boundary_derivative, in_q, integrate, phi_r, phi_r_rate, simulate_consensus, vector_field,
    vector_field_matrix, vertex_threshold, BoundaryDerivative, ConsensusConfig, IntegratorConfig, SimplexState,
    Trajectory,
};
use crate::equilibrium::{jacobian, psi, scaled_coefficients, solve_equilibrium, stationary_vector};
use crate::graph::{enumerate_paths, path_weight, root_set, support_structure, NetworkModel, RawNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    Invariance,
    Repeller,
    Convergence,
    Equilibrium,
    Boundary,
    SupportOracle,
    Consensus,
}

impl SuiteName {
    pub const ALL: [SuiteName; 7] = [
        SuiteName::Invariance,
        SuiteName::Repeller,
        SuiteName::Convergence,
        SuiteName::Equilibrium,
        SuiteName::Boundary,
        SuiteName::SupportOracle,
        SuiteName::Consensus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Invariance => "invariance",
            SuiteName::Repeller => "repeller",
            SuiteName::Convergence => "convergence",
            SuiteName::Equilibrium => "equilibrium",
            SuiteName::Boundary => "boundary",
            SuiteName::SupportOracle => "support_oracle",
            SuiteName::Consensus => "consensus",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SuiteName::ALL
            .into_iter()
            .find(|name| name.as_str() == s)
            .ok_or_else(|| VerifyError::UnknownSuite(s.to_string()))
    }
}

/// One violated check, with enough context to replay it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub case: usize,
    pub spec: GeneratorSpec,
    pub state: Option<Vec<f64>>,
    pub invariant: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: SuiteName,
    pub seed: u64,
    pub cases: usize,
    pub checks: usize,
    /// Counts of the situations a suite exercised, e.g. `order_3`.
    pub coverage: BTreeMap<String, usize>,
    pub failures: Vec<Failure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Case {
    index: usize,
    spec: GeneratorSpec,
    model: NetworkModel,
    rng: ChaCha8Rng,
    checks: usize,
    coverage: BTreeMap<String, usize>,
    failures: Vec<Failure>,
}

impl Case {
    fn check(&mut self, ok: bool, invariant: &str, magnitude: f64, state: Option<&[f64]>) {
        self.checks += 1;
        if !ok {
            self.fail(invariant, magnitude, state);
        }
    }

    fn fail(&mut self, invariant: &str, magnitude: f64, state: Option<&[f64]>) {
        self.failures.push(Failure {
            case: self.index,
            spec: self.spec,
            state: state.map(<[f64]>::to_vec),
            invariant: invariant.to_string(),
            magnitude,
        });
    }

    fn cover(&mut self, key: &str) {
        *self.coverage.entry(key.to_string()).or_default() += 1;
    }

    fn run(&mut self, x0: &SimplexState, cfg: &IntegratorConfig) -> Option<Trajectory> {
        match integrate(&self.model, x0, cfg) {
            Ok(t) => Some(t),
            Err(e) => {
                self.checks += 1;
                self.fail(&format!("integration: {e}"), f64::NAN, Some(x0));
                None
            }
        }
    }

    /// Largest decrease of `φ_r` between records and the smallest rate seen.
    fn check_phi(&mut self, traj: &Trajectory) {
        let phis: Vec<f64> = traj.states.iter().map(|x| phi_r(&self.model, x)).collect();
        let drop = phis.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
        self.check(drop <= 1e-9, "root_mass_monotone", drop, None);
        let min_rate = traj
            .states
            .iter()
            .map(|x| phi_r_rate(&self.model, x))
            .fold(f64::INFINITY, f64::min);
        self.check(min_rate >= 0.0, "root_mass_rate_nonnegative", min_rate, None);
    }
}

/// Runs `count` independent cases of a suite. Case `k` draws from stream `k`
/// of a ChaCha generator seeded with `seed`, so results do not depend on the
/// number of worker threads.
pub fn run_suite(name: SuiteName, count: usize, seed: u64) -> SuiteReport {
    let cases: Vec<Case> = (0..count)
        .into_par_iter()
        .map(|index| run_case(name, seed, index))
        .collect();
    let mut report = SuiteReport {
        suite: name,
        seed,
        cases: count,
        checks: 0,
        coverage: BTreeMap::new(),
        failures: Vec::new(),
    };
    for case in cases {
        report.checks += case.checks;
        for (k, v) in case.coverage {
            *report.coverage.entry(k).or_default() += v;
        }
        report.failures.extend(case.failures);
    }
    report
}

fn run_case(name: SuiteName, seed: u64, index: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let max_n = if name == SuiteName::SupportOracle { 7 } else { 12 };
    let leafy = index % 2 == 1 && name != SuiteName::Consensus;
    let n = rng.random_range(if leafy { 4 } else { 3 }..=max_n);
    let topology = if leafy {
        Topology::RootedWithLeaves(rng.random_range(1..=n - 3))
    } else {
        Topology::StronglyConnected
    };
    let spec = GeneratorSpec {
        n,
        topology,
        seed: rng.random(),
        min_out_degree: 2,
    };
    let model = match random_network(&spec) {
        Ok(m) => m,
        Err(e) => {
            // Placeholder model so the failure can still be reported.
            let mut case = Case {
                index,
                spec,
                model: crate::graph::validate_network(&RawNetwork {
                    n: 3,
                    edges: vec![(0, 1, 0.5), (0, 2, 0.5), (1, 0, 0.5), (1, 2, 0.5), (2, 0, 0.5), (2, 1, 0.5)],
                })
                .expect("triad is admissible"),
                rng,
                checks: 1,
                coverage: BTreeMap::new(),
                failures: Vec::new(),
            };
            case.fail(&format!("generator: {e}"), f64::NAN, None);
            return case;
        }
    };
    let mut case = Case {
        index,
        spec,
        model,
        rng,
        checks: 0,
        coverage: BTreeMap::new(),
        failures: Vec::new(),
    };
    if leafy {
        case.cover("networks_with_leaves");
    } else {
        case.cover("strongly_connected_networks");
    }
    match name {
        SuiteName::Invariance => invariance(&mut case),
        SuiteName::Repeller => repeller(&mut case),
        SuiteName::Convergence => convergence(&mut case),
        SuiteName::Equilibrium => equilibrium(&mut case),
        SuiteName::Boundary => boundary(&mut case),
        SuiteName::SupportOracle => support_oracle(&mut case),
        SuiteName::Consensus => consensus(&mut case),
    }
    case
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_field(c: &mut Case, x: &[f64]) {
    let f = vector_field(&c.model, x).expect("dimension matches");
    let fm = vector_field_matrix(&c.model, x).expect("dimension matches");
    let total: f64 = f.iter().sum();
    c.check(total.abs() <= 1e-12, "field_sums_to_zero", total, Some(x));
    let diff = max_abs_diff(&f, &fm);
    c.check(diff <= 1e-12, "matrix_form_agrees", diff, Some(x));
}

fn invariance(c: &mut Case) {
    let n = c.model.n();
    let starts = [
        ("interior", sample_interior(&mut c.rng, n)),
        ("boundary", sample_boundary(&mut c.rng, n)),
        ("root_face", sample_root_supported(&mut c.rng, &c.model)),
    ];
    let cfg = IntegratorConfig {
        step: 0.01,
        horizon: 200.0,
        record_every: 1,
        ..IntegratorConfig::default()
    };
    for (label, x0) in starts {
        c.cover(label);
        check_field(c, &x0);
        let Some(traj) = c.run(&x0, &cfg) else { continue };
        c.check(traj.max_simplex_drift <= 1e-8, "simplex_drift", traj.max_simplex_drift, Some(&x0));
        c.check(traj.min_component >= -1e-8, "simplex_nonnegative", traj.min_component, Some(&x0));

        // Zero vertices whose whole supporting set starts at zero stay there.
        let closed: Vec<usize> = (0..n)
            .filter(|&i| x0[i] == 0.0 && c.model.supporting_union(&[i]).iter().zip(x0.iter()).all(|(&s, &v)| !s || v == 0.0))
            .collect();
        if !closed.is_empty() {
            c.cover("closed_zero_face");
            let face = c.model.supporting_union(&closed);
            let worst = traj
                .states
                .iter()
                .flat_map(|x| x.iter().zip(&face).filter(|(_, &f)| f).map(|(v, _)| v.abs()))
                .fold(0.0, f64::max);
            c.check(worst <= 1e-10, "zero_face_invariant", worst, Some(&x0));
        }
        if label == "root_face" {
            let worst = traj
                .states
                .iter()
                .flat_map(|x| (0..n).filter(|&i| !c.model.is_root(i)).map(move |i| x[i].abs()))
                .fold(0.0, f64::max);
            c.check(worst <= 1e-10, "root_face_invariant", worst, Some(&x0));
        }
        c.check_phi(&traj);
        for x in traj.states.iter().step_by(1000) {
            check_field(c, x);
        }
    }
}

fn repeller(c: &mut Case) {
    let n = c.model.n();
    for _ in 0..1000 {
        let i = c.rng.random_range(0..n);
        let lo = vertex_threshold(&c.model, i) + 1e-6;
        let xi = c.rng.random_range(lo..1.0 - 1e-6);
        let rest = if n > 3 && c.rng.random_bool(0.5) {
            sample_boundary(&mut c.rng, n - 1)
        } else {
            sample_interior(&mut c.rng, n - 1)
        };
        let mut x: Vec<f64> = rest.iter().map(|v| v * (1.0 - xi)).collect();
        x.insert(i, xi);
        let f = vector_field(&c.model, &x).expect("dimension matches");
        c.check(f[i] < 0.0, "repeller_outflow", f[i], Some(&x));
    }
    c.cover("repeller_samples");
}

fn convergence(c: &mut Case) {
    let n = c.model.n();
    let report = match solve_equilibrium(&c.model) {
        Ok(r) => r,
        Err(e) => {
            c.checks += 1;
            c.fail(&format!("equilibrium: {e}"), f64::NAN, None);
            return;
        }
    };
    let cfg = IntegratorConfig {
        step: 0.01,
        horizon: 500.0,
        record_every: 10,
        stop_on_convergence: true,
        ..IntegratorConfig::default()
    };
    for s in 0..5 {
        let x0 = if s < 3 {
            sample_interior(&mut c.rng, n)
        } else {
            sample_boundary(&mut c.rng, n)
        };
        c.cover(if s < 3 { "interior_start" } else { "boundary_start" });
        let Some(traj) = c.run(&x0, &cfg) else { continue };
        let converged = traj.converged_at.is_some();
        c.check(converged, "converged_within_horizon", traj.end_time(), Some(&x0));
        let dist: f64 = traj
            .final_state()
            .iter()
            .zip(report.x_star.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        c.check(dist < 1e-6, "limit_is_equilibrium", dist, Some(&x0));
        c.check(traj.q_entry_time.is_some(), "enters_q", f64::NAN, Some(&x0));
        if let Some(first) = traj.states.iter().position(|x| in_q(&c.model, x)) {
            let exits = traj.states[first..].iter().filter(|x| !in_q(&c.model, x)).count();
            c.check(exits == 0, "q_forward_invariant", exits as f64, Some(&x0));
        }
        let leaf_mass = (0..n)
            .filter(|&i| !c.model.is_root(i))
            .map(|i| traj.final_state()[i])
            .fold(0.0, f64::max);
        c.check(leaf_mass < 1e-6, "non_roots_vanish", leaf_mass, Some(&x0));
        c.check_phi(&traj);
    }
}

fn equilibrium(c: &mut Case) {
    let n = c.model.n();
    let v = match stationary_vector(&c.model) {
        Ok(v) => v,
        Err(e) => {
            c.checks += 1;
            c.fail(&format!("stationary: {e}"), f64::NAN, None);
            return;
        }
    };
    let vmax = v.max_entry();
    c.check(vmax <= 1.0 / 3.0 + 1e-12, "stationary_bound", vmax, None);
    let mu1 = v.mu_max();
    let top = psi(&v, mu1).unwrap_or(f64::NAN);
    c.check(top > 1.0, "psi_exceeds_one", top, None);
    let grid: Vec<f64> = (0..=100).map(|k| psi(&v, mu1 * (k as f64 / 100.0)).unwrap_or(f64::NAN)).collect();
    let monotone = grid.windows(2).all(|w| w[1] > w[0]);
    c.check(monotone, "psi_increasing", f64::NAN, None);

    let report = match solve_equilibrium(&c.model) {
        Ok(r) => r,
        Err(e) => {
            c.checks += 1;
            c.fail(&format!("equilibrium: {e}"), f64::NAN, None);
            return;
        }
    };
    let x = report.x_star.to_vec();
    c.check(report.residual <= 1e-10, "residual", report.residual, Some(&x));
    let alpha = alpha_threshold(n).expect("n >= 3");
    for i in 0..n {
        if c.model.is_root(i) {
            c.check(x[i] > 0.0 && x[i] <= alpha && alpha < 0.5, "root_bounds", x[i], Some(&x));
        } else {
            c.check(x[i] == 0.0, "non_root_zero", x[i], Some(&x));
        }
    }

    let st = &report.stability;
    c.check(st.zero_eig_count == 1, "simple_zero_eigenvalue", st.zero_eig_count as f64, Some(&x));
    c.check(st.max_other_real_part < -1e-10, "negative_spectrum", st.max_other_real_part, Some(&x));
    c.check(st.stable, "stable", f64::NAN, Some(&x));

    let jac = jacobian(&c.model, &x).expect("dimension matches");
    let fd = finite_difference_jacobian(&c.model, &x, 1e-6);
    let scale = jac.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let rel = (&jac - &fd).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
    c.check(rel <= 1e-5, "jacobian_matches_differences", rel, Some(&x));
    let col = (0..n).map(|k| jac.column(k).sum().abs()).fold(0.0, f64::max);
    c.check(col <= 1e-12, "jacobian_columns_sum_to_zero", col, Some(&x));

    let g: Vec<f64> = x.iter().map(|v| (1.0 - v) * v).collect();
    let balance = (0..n)
        .map(|i| (g[i] - c.model.in_edges(i).iter().map(|&(j, w)| w * g[j]).sum::<f64>()).abs())
        .fold(0.0, f64::max);
    c.check(balance <= 1e-10, "balance_identity", balance, Some(&x));
    match scaled_coefficients(&c.model, &x) {
        Ok(sc) => {
            let worst = sc.row_sums.values().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
            c.check(worst <= 1e-10, "scaled_rows_stochastic", worst, Some(&x));
        }
        Err(e) => {
            c.checks += 1;
            c.fail(&format!("scaled coefficients: {e}"), f64::NAN, Some(&x));
        }
    }

    let (sub, map) = c.model.root_subnetwork();
    match solve_equilibrium(&sub) {
        Ok(r) => {
            let worst = map
                .iter()
                .enumerate()
                .map(|(k, &i)| (r.x_star[k] - x[i]).abs())
                .fold(0.0, f64::max);
            c.check(worst <= 1e-10, "restriction_consistent", worst, Some(&x));
        }
        Err(e) => {
            c.checks += 1;
            c.fail(&format!("root subnetwork: {e}"), f64::NAN, Some(&x));
        }
    }

    if n <= 5 {
        c.cover("equilibrium_census");
        let found = find_equilibria(&c.model, &mut c.rng, 200);
        c.check(found.len() == n + 1, "equilibrium_count", found.len() as f64, Some(&x));
        let has_star = found.iter().any(|y| max_abs_diff(y, &x) < 1e-8);
        c.check(has_star, "census_contains_equilibrium", f64::NAN, Some(&x));
    }
}

fn boundary(c: &mut Case) {
    let n = c.model.n();
    let structures: Vec<_> = (0..n)
        .map(|i| support_structure(&c.model, i).expect("vertex in range"))
        .collect();

    for k in 1..=3usize {
        let candidates: Vec<usize> = (0..n)
            .filter(|&i| structures[i].max_depth() >= k && n - structures[i].layer(k - 1).len() >= 2)
            .collect();
        let Some(&i) = candidates.choose(&mut c.rng) else { continue };
        let zeroed = structures[i].layer(k - 1);
        let support: Vec<bool> = (0..n).map(|j| zeroed.binary_search(&j).is_err()).collect();
        let x0 = sample_on_support(&mut c.rng, &support);
        c.cover(&format!("order_{k}"));
        let value = match boundary_derivative(&c.model, &x0, i) {
            Ok(BoundaryDerivative::Leading { order, value }) if order == k && value > 0.0 => value,
            other => {
                c.checks += 1;
                c.fail(&format!("predicted order {k}, got {other:?}"), f64::NAN, Some(&x0));
                continue;
            }
        };
        c.checks += 1;
        let cfg = IntegratorConfig {
            step: 1e-4,
            horizon: 1e-2,
            record_every: 1,
            ..IntegratorConfig::default()
        };
        let Some(traj) = c.run(&x0, &cfg) else { continue };
        let fact: f64 = (1..=k).map(|m| m as f64).product();
        let t = traj.end_time();
        let predicted = value * t.powi(k as i32) / fact;
        let rel = (traj.final_state()[i] - predicted).abs() / predicted;
        c.check(rel <= 0.1, "leading_term_fit", rel, Some(&x0));
        let a = traj.state_at(1e-3)[i];
        let b = traj.state_at(2e-3)[i];
        let order = (b / a).log2();
        c.check((order - k as f64).abs() <= 0.15, "leading_order_fit", order, Some(&x0));
    }

    let candidates: Vec<usize> = (0..n)
        .filter(|&i| n - structures[i].support().len() >= 2)
        .collect();
    if let Some(&i) = candidates.choose(&mut c.rng) {
        let s = structures[i].support();
        let support: Vec<bool> = (0..n).map(|j| s.binary_search(&j).is_err()).collect();
        let x0 = sample_on_support(&mut c.rng, &support);
        c.cover("always_zero");
        let pred = boundary_derivative(&c.model, &x0, i);
        c.check(
            matches!(pred, Ok(BoundaryDerivative::AlwaysZero)),
            "predicted_always_zero",
            f64::NAN,
            Some(&x0),
        );
        let cfg = IntegratorConfig {
            step: 0.01,
            horizon: 50.0,
            record_every: 1,
            ..IntegratorConfig::default()
        };
        if let Some(traj) = c.run(&x0, &cfg) {
            let worst = traj
                .states
                .iter()
                .flat_map(|x| s.iter().map(move |&j| x[j].abs()))
                .fold(0.0, f64::max);
            c.check(worst <= 1e-12, "always_zero_holds", worst, Some(&x0));
        }
    }
}

fn support_oracle(c: &mut Case) {
    let n = c.model.n();
    let raw = c.model.to_raw();
    let oracle = reachability_roots(&raw);
    c.check(oracle == c.model.roots(), "root_set_matches_reachability", f64::NAN, None);
    c.check(root_set(&raw).as_deref() == Ok(&oracle[..]), "root_set_matches_reachability", f64::NAN, None);
    let closed = c
        .model
        .roots()
        .iter()
        .all(|&r| c.model.out_edges(r).iter().all(|&(j, _)| c.model.is_root(j)));
    c.check(closed, "roots_closed_under_out_edges", f64::NAN, None);

    let reach = reachability_matrix(&raw);
    for i in 0..n {
        let ss = support_structure(&c.model, i).expect("vertex in range");
        c.check(ss.max_depth() < n, "layers_stabilize", ss.max_depth() as f64, None);
        let expect: Vec<usize> = (0..n).filter(|&j| reach[j][i]).collect();
        c.check(ss.support() == expect, "support_matches_reachability", f64::NAN, None);

        for (j, a) in ss.alpha_entries() {
            let k = ss.depth_of(j).expect("member has a depth");
            for shorter in 1..k {
                let none = enumerate_paths(&c.model, j, i, shorter).is_empty();
                c.check(none, "depth_is_shortest_path", shorter as f64, None);
            }
            // An edge can only shorten the distance to the target by one.
            let closer: Vec<usize> = c
                .model
                .out_edges(j)
                .iter()
                .filter_map(|&(w, _)| ss.depth_of(w))
                .filter(|&d| d < k)
                .collect();
            c.check(
                !closer.is_empty() && closer.iter().all(|&d| d == k - 1),
                "layer_steps_by_one",
                k as f64,
                None,
            );
            if k <= 4 {
                c.cover("alpha_path_sums");
                let sum: f64 = enumerate_paths(&c.model, j, i, k)
                    .iter()
                    .map(|p| path_weight(&c.model, p))
                    .sum();
                c.check((a - sum).abs() <= 1e-12, "alpha_equals_path_sum", a - sum, None);
            }
        }
    }

    // Arbitrary digraphs, admissible or not.
    let m = c.rng.random_range(3..=7);
    let mut edges = Vec::new();
    for s in 0..m {
        for d in 0..m {
            if s != d && c.rng.random_bool(0.3) {
                edges.push((s, d, 1.0));
            }
        }
    }
    let raw = RawNetwork { n: m, edges };
    let oracle = reachability_roots(&raw);
    let got = root_set(&raw);
    let ok = if oracle.is_empty() { got.is_err() } else { got.as_deref() == Ok(&oracle[..]) };
    c.check(ok, "root_set_on_random_digraph", f64::NAN, None);
    c.cover(if oracle.is_empty() { "unrooted_digraph" } else { "rooted_digraph" });
}

fn consensus(c: &mut Case) {
    let n = c.model.n();
    let x0 = sample_interior(&mut c.rng, n);
    let cfg = IntegratorConfig {
        step: 0.01,
        horizon: 200.0,
        record_every: 1,
        ..IntegratorConfig::default()
    };
    let Some(traj) = c.run(&x0, &cfg) else { return };
    let ccfg = ConsensusConfig {
        step: 0.01,
        horizon: 200.0,
        record_every: 1000,
    };
    let z0: Vec<f64> = (0..n).map(|_| c.rng.random_range(-1.0..1.0)).collect();
    match simulate_consensus(&c.model, &traj, &z0, &ccfg) {
        Ok(op) => {
            let spread = *op.spreads().last().expect("nonempty");
            c.check(spread < 1e-6, "opinions_reach_consensus", spread, Some(&z0));
        }
        Err(e) => {
            c.checks += 1;
            c.fail(&format!("consensus: {e}"), f64::NAN, Some(&z0));
        }
    }
    let level = c.rng.random_range(-1.0..1.0);
    let flat = vec![level; n];
    if let Ok(op) = simulate_consensus(&c.model, &traj, &flat, &ccfg) {
        let spread = *op.spreads().last().expect("nonempty");
        c.check(spread <= 1e-12, "agreement_is_fixed", spread, Some(&flat));
    }
    c.cover("consensus_runs");
}
