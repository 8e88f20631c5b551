use thiserror::Error;

use crate::world::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("map format error on line {line}: {message}")]
    MapFormat { line: usize, message: String },
    #[error("map has no navigable cells")]
    EmptyMap,
    #[error("node ({}, {}) is not navigable", .0.i, .0.j)]
    NotNavigable(NodeId),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("spawn failed: item {item} could not be placed after {attempts} draws")]
    Spawn { item: u32, attempts: u32 },
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("replay diverged at step {step} for agent {agent}: {reason}")]
    ReplayDivergence {
        step: u32,
        agent: usize,
        reason: String,
    },
    #[error("trace error on line {line}: {message}")]
    Trace { line: usize, message: String },
    #[error("unsupported trace version {found} (expected {expected})")]
    TraceVersion { found: u32, expected: u32 },
    #[error("episode {index} (seed {seed}) failed: {source}")]
    Episode {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
