use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("edge ({u}, {v}) has an endpoint outside 0..{n}")]
    NodeOutOfRange { u: usize, v: usize, n: usize },

    #[error("node index {index} out of range for graph with {n} nodes")]
    InvalidNode { index: usize, n: usize },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("node {0} has degree zero")]
    IsolatedNode(usize),

    #[error("graph has {n} nodes, above the dense limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver did not converge (residual norm {residual:.3e})")]
    NoConvergence { residual: f64 },

    #[error("operation requires a bundle computed with alpha = 1, got alpha = {0}")]
    NotRandomWalk(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate metric: {0}")]
    Degenerate(String),

    #[error("edge ({0}, {1}) is not present in the directional field")]
    EdgeMissing(usize, usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::NonFiniteLoss { .. } | Error::Degenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
