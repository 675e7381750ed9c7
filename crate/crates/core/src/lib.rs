//! Consensus over i.i.d. random directed graphs.
//!
//! Every node `v` of a connected undirected candidate graph listens to each
//! neighbor independently with probability `p_v` in every time slot, and
//! replaces its state with the average over itself and the neighbors it
//! heard. All agents converge almost surely to a random consensus value
//! `x*`. This crate computes its mean and exact variance in closed form,
//! bounds the variance by a product of an initial-condition, a node and a
//! topology factor, simulates trajectories, and checks every closed form
//! against exhaustive enumeration on small graphs.
//!
//! ```
//! use randcons::{build_graph, expected_consensus_value, Graph};
//!
//! let g: Graph = build_graph(&[(0, 1), (1, 2)], &[0.5, 0.5, 0.5]).unwrap();
//! let mean = expected_consensus_value(&g, &[0.0, 0.0, 1.0]).unwrap();
//! assert!((mean - 0.3125).abs() < 1e-12);
//! ```
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases at the crate root fix `f64`.

pub mod analysis;
pub mod error;
pub mod format;
pub mod graph;
pub mod linalg;
pub mod moments;
pub mod montecarlo;
pub mod oracle;
pub mod random_net;
pub mod scalar;
pub mod scenario;

pub use analysis::{
    analyze, bound_chain, condition_number_of, dominant_left_eigvec_closed, exact_condition_number,
    exact_variance, expected_consensus_value, meyer_bound, ordered_eigenvalues, reweight_initial,
    spectral_summary, variance_bound_terms, variance_upper_bound, AnalysisReport, AnalyzeOptions,
};
pub use error::{Error, Result};
pub use graph::{
    build_graph, complete_graph, leader_follower_chain, leader_follower_ring, path_graph,
    random_connected_graph, DegreeBasis, LeaderFollower, LeaderProb, Layout, ProbabilityCheck,
};
pub use moments::{expected_weight_matrix, moment_m1, moment_m2, KronBudget};
pub use montecarlo::{run_ensemble, run_trajectory, EnsembleOptions, EnsembleSummary};
pub use oracle::{enumerate_expectations, verify_closed_forms, OracleReport};
pub use random_net::{sample_realization, trial_stream, DirectedRealization};
pub use scalar::Scalar;
pub use scenario::{parse_scenario, parse_scenario_str, ScenarioError};

pub type Graph = graph::CandidateGraph<f64>;
pub type Scenario = scenario::Scenario<f64>;
pub type ExpectedOperators = moments::ExpectedOperators<f64>;
pub type MeanWeights = analysis::MeanWeights<f64>;
pub type SpectralSummary = analysis::SpectralSummary<f64>;
pub type ExactVariance = analysis::ExactVariance<f64>;
pub type BoundTerms = analysis::BoundTerms<f64>;
pub type BoundChain = analysis::BoundChain<f64>;
pub type VarianceReport = analysis::VarianceReport<f64>;
pub type EnsembleStats = montecarlo::EnsembleStats<f64>;
pub type WeightMatrix = random_net::WeightMatrix<f64>;
