use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("candidate graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("listen probability {value} of node {node} is outside {range}")]
    InvalidProbability {
        node: usize,
        value: f64,
        range: &'static str,
    },
    #[error("self-loop at node {node}")]
    SelfLoop { node: usize },
    #[error("duplicate edge {{{u},{v}}}")]
    DuplicateEdge { u: usize, v: usize },
    #[error("node index {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Kronecker operators for n = {n} exceed the node cap {cap} (use --allow-large)")]
    BudgetExceeded { n: usize, cap: usize },
    #[error("chain has no unique stationary distribution: {0}")]
    SingularChain(String),
    #[error("eigensolver did not converge")]
    EigensolveFailure,
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("enumeration needs 2^{directed_edges} realizations (limit 2^{max})")]
    TooLarge { directed_edges: usize, max: usize },
    #[error(
        "verification failed at {check} [{row},{col}]: closed form {closed:e}, enumerated {enumerated:e}"
    )]
    VerificationFailure {
        check: &'static str,
        row: usize,
        col: usize,
        closed: f64,
        enumerated: f64,
    },
    #[error("none of the {trials} trials converged")]
    AllTrialsDiverged { trials: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
