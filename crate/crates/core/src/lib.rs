//! Affiliation knowledge graphs: building them from extracted tuples,
//! scoring extractions against ground truth, computing network metrics, and
//! simulating extraction error to measure how metrics are biased by it.

pub mod analysis;
pub mod error;
pub mod error_models;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod normalize;
pub mod projections;
pub mod synth;
pub mod tuple_eval;

pub use analysis::{aggregate, bias_record, sign_consistency, BiasRecord, BiasRow, BiasTable};
pub use error::{Error, Result};
pub use error_models::{
    compute_budget, is_synthetic, overestimation_pct, perturb, EdgeBudget, ErrorModel, Perturbation,
    PerturbationReport, PerturbationSpec,
};
pub use experiment::{run_experiment, run_experiment_on, ExperimentConfig, ExperimentOutcome, F1Source, RunGroup};
pub use graph::{build_graph, AffiliationGraph, EdgeTuple, GraphBuilder, GraphDocument, NodeId, Partition};
pub use io::{load_graph, parse_tuple_file, read_graph, write_graph, write_json, TupleFormat};
pub use metrics::{MetricSuite, RmaeScope, SuiteOptions, METRIC_NAMES};
pub use normalize::{entities_match, normalize_label, persons_match, stripped, NormalizationConfig};
pub use projections::{project, projection_density, DensityConvention, ProjectionGraph};
pub use synth::{heavy_tailed_graph, HeavyTailedConfig};
pub use tuple_eval::{
    evaluate_tuples, evaluate_tuples_with, f1_bin, sample_false_positives, score_graphs, EvalOptions, EvalReport,
    F1Bin, GraphScore,
};
