//! Random admissible networks, brute-force oracles, and executable suites
//! for the invariance and convergence properties of the model.

mod generator;
pub mod oracles;
mod suites;

use thiserror::Error;

use crate::graph::ValidationError;

pub use generator::{
    cap_weights, random_network, sample_boundary, sample_interior, sample_on_support, sample_root_supported,
    GeneratorSpec, Topology,
};
pub use suites::{run_suite, Failure, SuiteName, SuiteReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),
    #[error("generator produced an inadmissible network: {0}")]
    Generator(ValidationError),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}
