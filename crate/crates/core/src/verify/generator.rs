use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::dynamics::SimplexState;
use crate::graph::{validate_network, NetworkModel, RawNetwork, MAX_WEIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    StronglyConnected,
    /// Root core plus this many non-root vertices.
    RootedWithLeaves(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub topology: Topology,
    pub seed: u64,
    pub min_out_degree: usize,
}

/// Draws an admissible network.
///
/// The root core is a directed Hamiltonian cycle plus random chords up to a
/// random out-degree of at least `min_out_degree`. Each leaf listens to at
/// least two core vertices and sometimes to one earlier leaf, so leaves form
/// chains but nothing in the core listens to a leaf. Vertex labels are
/// shuffled at the end.
pub fn random_network(spec: &GeneratorSpec) -> Result<NetworkModel, VerifyError> {
    let leaves = match spec.topology {
        Topology::StronglyConnected => 0,
        Topology::RootedWithLeaves(k) => k,
    };
    if spec.n < 3 || leaves > spec.n.saturating_sub(3) {
        return Err(VerifyError::InfeasibleSpec(format!(
            "n = {} with {} non-roots leaves fewer than 3 roots",
            spec.n, leaves
        )));
    }
    let core = spec.n - leaves;
    if spec.min_out_degree < 2 || spec.min_out_degree > core - 1 {
        return Err(VerifyError::InfeasibleSpec(format!(
            "min_out_degree {} not in [2, {}]",
            spec.min_out_degree,
            core - 1
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut labels: Vec<usize> = (0..spec.n).collect();
    labels.shuffle(&mut rng);
    let (core_labels, leaf_labels) = labels.split_at(core);

    let mut targets: Vec<Vec<usize>> = vec![Vec::new(); spec.n];
    for (k, &v) in core_labels.iter().enumerate() {
        targets[v].push(core_labels[(k + 1) % core]);
    }
    for &v in core_labels {
        let degree = rng.random_range(spec.min_out_degree..=core - 1);
        let mut pool: Vec<usize> = core_labels
            .iter()
            .copied()
            .filter(|&w| w != v && !targets[v].contains(&w))
            .collect();
        pool.shuffle(&mut rng);
        let missing = degree - targets[v].len();
        targets[v].extend(pool.into_iter().take(missing));
    }
    for (l, &v) in leaf_labels.iter().enumerate() {
        let into_core = rng.random_range(2..=core.min(4));
        targets[v].extend(core_labels.choose_multiple(&mut rng, into_core));
        if l > 0 && rng.random_bool(0.7) {
            targets[v].push(leaf_labels[rng.random_range(0..l)]);
        }
    }

    let mut edges = Vec::new();
    for (src, dsts) in targets.iter_mut().enumerate() {
        dsts.sort_unstable();
        let mut weights: Vec<f64> = dsts.iter().map(|_| rng.random_range(0.1..1.0)).collect();
        cap_weights(&mut weights);
        edges.extend(dsts.iter().zip(weights).map(|(&dst, w)| (src, dst, w)));
    }
    let raw = RawNetwork { n: spec.n, edges };
    validate_network(&raw).map_err(VerifyError::Generator)
}

/// Normalizes positive weights to sum 1, then repeatedly clips entries at
/// 1/2 and spreads the excess proportionally over the unclipped ones.
/// Needs at least two entries.
pub fn cap_weights(weights: &mut [f64]) {
    assert!(weights.len() >= 2, "capping needs at least two weights");
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    let mut clipped = vec![false; weights.len()];
    loop {
        let mut excess = 0.0;
        for (w, c) in weights.iter_mut().zip(clipped.iter_mut()) {
            if *w > MAX_WEIGHT {
                excess += *w - MAX_WEIGHT;
                *w = MAX_WEIGHT;
                *c = true;
            }
        }
        if excess == 0.0 {
            break;
        }
        let free: f64 = weights
            .iter()
            .zip(&clipped)
            .filter(|(_, &c)| !c)
            .map(|(w, _)| w)
            .sum();
        if free <= 0.0 {
            break;
        }
        for (w, _) in weights.iter_mut().zip(&clipped).filter(|(_, &c)| !c) {
            *w += excess * *w / free;
        }
    }
}

fn normalized(mut x: Vec<f64>) -> SimplexState {
    let sum: f64 = x.iter().sum();
    for v in x.iter_mut() {
        *v /= sum;
    }
    SimplexState::new(x).expect("normalized nonnegative vector lies in the simplex")
}

/// Uniform sample from the simplex via normalized exponentials.
pub fn sample_interior<R: Rng>(rng: &mut R, n: usize) -> SimplexState {
    normalized((0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect())
}

/// Zeroes a random subset of between 1 and `n - 2` coordinates of a uniform
/// sample, so the result is a boundary point but never a vertex.
pub fn sample_boundary<R: Rng>(rng: &mut R, n: usize) -> SimplexState {
    assert!(n >= 3, "boundary sampling needs n >= 3");
    let zeros = rng.random_range(1..=n - 2);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    for &i in &idx[..zeros] {
        x[i] = 0.0;
    }
    normalized(x)
}

/// Uniform sample from the face spanned by the roots.
pub fn sample_root_supported<R: Rng>(rng: &mut R, model: &NetworkModel) -> SimplexState {
    let x = (0..model.n())
        .map(|i| if model.is_root(i) { rng.sample::<f64, _>(Exp1) } else { 0.0 })
        .collect();
    normalized(x)
}

/// Positive random weights on the given support, zero elsewhere.
pub fn sample_on_support<R: Rng>(rng: &mut R, support: &[bool]) -> SimplexState {
    normalized(
        support
            .iter()
            .map(|&s| if s { rng.sample::<f64, _>(Exp1) } else { 0.0 })
            .collect(),
    )
}
