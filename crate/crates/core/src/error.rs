use std::path::PathBuf;

use thiserror::Error;

use crate::graph::Partition;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains no tuples")]
    EmptyInput,

    #[error("tuple {index} has an empty person or club field")]
    MalformedTuple { index: usize },

    #[error("label {raw:?} is empty after normalization")]
    EmptyAfterNormalization { raw: String },

    #[error("node {label:?} not found in {partition} partition")]
    NodeNotFound { partition: Partition, label: String },

    #[error("{0} partition is empty")]
    EmptyPartition(Partition),

    #[error("graph has no nodes or no edges")]
    EmptyGraph,

    #[error("largest connected component has a single node")]
    DegenerateComponent,

    #[error("projection has fewer than two nodes")]
    DegenerateGraph,

    #[error("ground-truth tuple list is empty")]
    EmptyGroundTruth,

    #[error("recall {recall} keeps no edges out of {num_edges}")]
    BudgetUnderflow { num_edges: usize, recall: f64 },

    #[error("need {needed} non-edges but only {available} exist")]
    SaturatedGraph { needed: usize, available: usize },

    #[error("preferential sampling stalled after {attempts} consecutive rejections ({added} of {needed} edges added)")]
    SamplingStalled {
        attempts: usize,
        added: usize,
        needed: usize,
    },

    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(String),

    #[error("no non-null bias records for metric {metric:?}")]
    NoData { metric: String },

    #[error("malformed input at line {line}: {reason}")]
    MalformedInput { line: usize, reason: String },

    #[error("cannot infer tuple format from {0:?}; pass an explicit format")]
    UnknownFormat(PathBuf),

    #[error("invalid graph document: {0}")]
    InvalidGraph(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
