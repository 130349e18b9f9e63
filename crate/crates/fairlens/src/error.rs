//! Error type shared across the toolkit.

use std::path::PathBuf;

/// Everything that can go wrong while loading data, querying graphs and
/// networks, or running an audit/repair pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at line {line}: {msg}")]
    Csv { line: u64, msg: String },

    /// Schema construction or validation failure (duplicate attributes,
    /// non-binary protected/decision domains, labels out of domain, ...).
    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("unknown category `{value}` for attribute `{attribute}`")]
    UnknownCategory { attribute: String, value: String },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("arc {from} -> {to} is not present")]
    MissingArc { from: String, to: String },

    #[error("directed cycle involving `{0}`")]
    Cycle(String),

    /// Conditioning event has no rows / zero probability. Deliberately an
    /// error state rather than NaN: the audit layer decides what to skip.
    #[error("undefined probability: {0}")]
    UndefinedProbability(String),

    /// Exhaustive block-set enumeration refused: exponential oracle gated by
    /// a node cap.
    #[error("oracle too large: {candidates} candidate nodes exceed the cap of {cap}")]
    OracleTooLarge { candidates: usize, cap: usize },

    /// Dense joint enumeration refused; use conditional queries instead.
    #[error("joint table of {cells} cells exceeds the cap of {cap}; use query() instead of joint()")]
    JointTooLarge { cells: u128, cap: u64 },

    /// CPT table dimensions do not match the node's parents/domain.
    #[error("cpt shape mismatch for node `{node}`: {msg}")]
    CptShape { node: String, msg: String },

    /// No topological ordering of the form {X, C, Y, Q, E, Z} with
    /// Z = descendants(E) exists for this graph.
    #[error("topological split {{X,C,Y,Q,E,Z}} infeasible: {0}")]
    TopoSplitInfeasible(String),

    /// A conditional-independence test had no nonempty stratum to work with.
    #[error("ci test undefined: {0}")]
    CiUndefined(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
