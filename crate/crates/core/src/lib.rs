//! Continuous-time self-appraisal dynamics on weighted rooted digraphs.
//!
//! Each agent `i` carries a self-appraisal `x_i`, and the appraisals evolve by
//!
//! ```text
//! ẋ_i = -(1 - x_i) x_i + Σ_{j ∈ V_i^+} c_ji (1 - x_j) x_j
//! ```
//!
//! on the unit simplex. The crate validates networks, integrates the flow,
//! solves for the unique non-vertex equilibrium in closed form, certifies
//! its stability, and ships randomized suites that check the convergence
//! behaviour end to end.

pub mod dynamics;
pub mod equilibrium;
pub mod graph;
pub mod linalg;
pub mod verify;

pub use dynamics::{
    alpha_threshold, boundary_derivative, in_q, in_repeller, integrate, phi_r, phi_r_rate, simulate_consensus,
    vector_field, vector_field_matrix, vertex_threshold, BoundaryDerivative, ConsensusConfig, DynamicsError,
    IntegratorConfig, OpinionTrajectory, SimplexState, Trajectory,
};
pub use equilibrium::{
    jacobian, psi, scaled_coefficients, solve_equilibrium, stability_report, stationary_vector, EquilibriumError,
    EquilibriumReport, StabilityReport, StationaryVector,
};
pub use graph::{
    critical_supporting_path, enumerate_paths, root_set, support_structure, validate_network, Defect, NetworkModel,
    QueryError, RawNetwork, SupportStructure, ValidationError,
};
