//! Fixture networks shared by the criterion benches.

use appraisal_core::verify::{random_network, GeneratorSpec, Topology};
use appraisal_core::NetworkModel;

/// A reproducible admissible network with `n` vertices, `leaves` of
/// which are non-roots.
pub fn fixture(n: usize, leaves: usize, seed: u64) -> NetworkModel {
    let topology = if leaves == 0 {
        Topology::StronglyConnected
    } else {
        Topology::RootedWithLeaves(leaves)
    };
    random_network(&GeneratorSpec {
        n,
        topology,
        seed,
        min_out_degree: 2,
    })
    .expect("bench fixture spec is feasible")
}
