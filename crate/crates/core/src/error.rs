use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: expected two whitespace-separated integers, got {text:?}")]
    MalformedLine { line: usize, text: String },

    #[error("line {line}: self-loop at node {node}")]
    SelfLoop { line: usize, node: u64 },

    #[error("pattern graph has {p} nodes; exhaustive search is limited to {limit}")]
    SampleTooLarge { p: usize, limit: usize },

    #[error("graph too large for brute-force enumeration (n={n}, limit {limit})")]
    OracleGuard { n: usize, limit: usize },

    #[error("edge test requires two distinct nodes, got {0} twice")]
    EqualEndpoints(u64),

    #[error("binomial overflow: C({n}, {k}) does not fit in u128")]
    Overflow { n: u64, k: u64 },

    #[error("{0}")]
    Domain(String),

    #[error("{0}")]
    Structural(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
