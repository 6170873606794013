//! Batch simulation experiments: perturb a truth graph under many specs,
//! measure every run, and aggregate relative bias into a table.
//!
//! Layout of the output directory:
//!
//! ```text
//! manifest.json          config, per-run status, budgets and file list
//! truth_metrics.json
//! records.jsonl          one BiasRecord per (run, metric), sorted by run id
//! bias_table.csv
//! bias_table.json
//! runs/<run id>/graph.json
//! runs/<run id>/metrics.json
//! runs/<run id>/report.json
//! ```
//!
//! Nothing written depends on wall-clock time or thread scheduling, so the
//! same config reproduces every file byte for byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{aggregate, bias_record, BiasRecord, BiasTable};
use crate::error::{Error, Result};
use crate::error_models::{perturb, EdgeBudget, ErrorModel, PerturbationReport, PerturbationSpec};
use crate::graph::AffiliationGraph;
use crate::io::{load_graph, write_graph, write_json};
use crate::metrics::{MetricSuite, SuiteOptions, METRIC_NAMES};
use crate::normalize::NormalizationConfig;
use crate::projections::DensityConvention;
use crate::tuple_eval::{harmonic_mean, GraphScore};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Source {
    /// Harmonic mean of the spec's target precision and recall.
    #[default]
    Target,
    /// F1 of the perturbed graph measured against the truth graph.
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunGroup {
    pub model: ErrorModel,
    pub precision: f64,
    pub recall: f64,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Graph document (`.json`) or tuple file (`.csv`, `.jsonl`).
    pub truth: PathBuf,
    #[serde(default)]
    pub graph_id: Option<String>,
    pub runs: Vec<RunGroup>,
    /// Metrics to report; empty means all.
    #[serde(default)]
    pub metrics: Vec<String>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub f1_source: F1Source,
    #[serde(default)]
    pub density_convention: DensityConvention,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    /// Reads a config file, or the config embedded in a previous run's
    /// manifest.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        let value = match value.get("config") {
            Some(inner) if value.get("runs").is_some_and(|r| r.is_array()) => inner.clone(),
            _ => value,
        };
        Ok(serde_json::from_value(value)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            return Err(Error::InvalidConfig("no runs configured".into()));
        }
        for group in &self.runs {
            if group.replicates == 0 {
                return Err(Error::InvalidConfig(format!(
                    "{} at P={} R={}: replicates must be >= 1",
                    group.model, group.precision, group.recall
                )));
            }
            PerturbationSpec::new(group.model, group.precision, group.recall, 0).validate()?;
        }
        if let Some(unknown) = self.metrics.iter().find(|m| !METRIC_NAMES.contains(&m.as_str())) {
            return Err(Error::InvalidConfig(format!("unknown metric {unknown:?}")));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidConfig("jobs must be >= 1".into()));
        }
        Ok(())
    }

    fn selected_metrics(&self) -> Vec<&'static str> {
        METRIC_NAMES
            .into_iter()
            .filter(|m| self.metrics.is_empty() || self.metrics.iter().any(|s| s == m))
            .collect()
    }

    fn graph_id(&self) -> String {
        self.graph_id.clone().unwrap_or_else(|| {
            self.truth
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("truth")
                .to_owned()
        })
    }

    /// Every `(run id, spec, replicate)` in config order.
    pub fn expand(&self) -> Vec<(String, PerturbationSpec, usize)> {
        self.runs
            .iter()
            .flat_map(|g| {
                (0..g.replicates).map(move |rep| {
                    let seed = g.base_seed.wrapping_add(rep as u64);
                    let id = format!("{}_p{}_r{}_rep{:03}", g.model, g.precision, g.recall, rep);
                    (id, PerturbationSpec::new(g.model, g.precision, g.recall, seed), rep)
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status")]
pub enum RunStatus {
    Ok {
        budget: EdgeBudget,
        achieved: GraphScore,
        f1: f64,
        files: Vec<String>,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub run_id: String,
    pub spec: PerturbationSpec,
    pub replicate: usize,
    #[serde(flatten)]
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub truth_nodes: usize,
    pub truth_edges: usize,
    pub runs: Vec<ManifestEntry>,
    pub succeeded: usize,
    pub failed: usize,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub table: BiasTable,
    pub records: Vec<BiasRecord>,
    pub manifest: Manifest,
}

impl ExperimentOutcome {
    pub fn all_failed(&self) -> bool {
        self.manifest.succeeded == 0
    }
}

struct RunResult {
    entry: ManifestEntry,
    records: Vec<BiasRecord>,
}

/// Loads the truth graph named in the config and runs the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let truth = load_graph(&cfg.truth, &NormalizationConfig::default())?;
    run_experiment_on(&truth, cfg)
}

/// Runs the experiment against an in-memory truth graph. A failing run is
/// recorded in the manifest and the rest continue.
pub fn run_experiment_on(truth: &AffiliationGraph, cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let out_dir = &cfg.output_dir;
    fs::create_dir_all(out_dir.join("runs"))?;
    let opts = SuiteOptions {
        density_convention: cfg.density_convention,
    };
    let truth_suite = MetricSuite::compute(truth, Some(truth), &opts)?;
    write_json(out_dir.join("truth_metrics.json"), &truth_suite)?;

    let metrics = cfg.selected_metrics();
    let graph_id = cfg.graph_id();
    let work = cfg.expand();
    let execute = || -> Vec<RunResult> {
        work.par_iter()
            .map(|(run_id, spec, replicate)| {
                match run_one(truth, &truth_suite, cfg, &opts, &metrics, &graph_id, run_id, spec) {
                    Ok((status, records)) => RunResult {
                        entry: ManifestEntry {
                            run_id: run_id.clone(),
                            spec: *spec,
                            replicate: *replicate,
                            status,
                        },
                        records,
                    },
                    Err(err) => {
                        tracing::error!(run_id = %run_id, error = %err, "run failed");
                        RunResult {
                            entry: ManifestEntry {
                                run_id: run_id.clone(),
                                spec: *spec,
                                replicate: *replicate,
                                status: RunStatus::Failed { error: err.to_string() },
                            },
                            records: Vec::new(),
                        }
                    }
                }
            })
            .collect()
    };
    let mut results = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(execute),
        None => execute(),
    };
    results.sort_by(|a, b| a.entry.run_id.cmp(&b.entry.run_id));

    let records: Vec<BiasRecord> = results.iter().flat_map(|r| r.records.iter().cloned()).collect();
    let table = aggregate(&records);

    let mut jsonl = fs::File::create(out_dir.join("records.jsonl"))?;
    for r in &records {
        serde_json::to_writer(&mut jsonl, r)?;
        jsonl.write_all(b"\n")?;
    }
    table.write_csv(fs::File::create(out_dir.join("bias_table.csv"))?)?;
    write_json(out_dir.join("bias_table.json"), &table.to_json())?;

    let runs: Vec<ManifestEntry> = results.into_iter().map(|r| r.entry).collect();
    let succeeded = runs
        .iter()
        .filter(|e| matches!(e.status, RunStatus::Ok { .. }))
        .count();
    let manifest = Manifest {
        config: cfg.clone(),
        truth_nodes: truth.num_nodes(),
        truth_edges: truth.num_edges(),
        failed: runs.len() - succeeded,
        succeeded,
        runs,
        outputs: ["truth_metrics.json", "records.jsonl", "bias_table.csv", "bias_table.json"]
            .map(String::from)
            .to_vec(),
    };
    write_json(out_dir.join("manifest.json"), &manifest)?;
    tracing::info!(succeeded = manifest.succeeded, failed = manifest.failed, "experiment finished");
    Ok(ExperimentOutcome {
        table,
        records,
        manifest,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    truth: &AffiliationGraph,
    truth_suite: &MetricSuite,
    cfg: &ExperimentConfig,
    opts: &SuiteOptions,
    metrics: &[&str],
    graph_id: &str,
    run_id: &str,
    spec: &PerturbationSpec,
) -> Result<(RunStatus, Vec<BiasRecord>)> {
    let perturbed = perturb(truth, spec)?;
    let suite = MetricSuite::compute(&perturbed.graph, Some(truth), opts)?;
    let report: &PerturbationReport = &perturbed.report;
    let f1 = match cfg.f1_source {
        F1Source::Target => harmonic_mean(spec.target_precision, spec.target_recall),
        F1Source::Measured => report.achieved.f1,
    };

    let run_dir = cfg.output_dir.join("runs").join(run_id);
    fs::create_dir_all(&run_dir)?;
    write_graph(run_dir.join("graph.json"), &perturbed.graph)?;
    write_json(run_dir.join("metrics.json"), &suite)?;
    write_json(run_dir.join("report.json"), report)?;

    let truth_values = truth_suite.values();
    let records = suite
        .values()
        .into_iter()
        .zip(truth_values)
        .filter(|((name, _), _)| metrics.contains(name))
        .filter_map(|((name, extracted), (_, truth_value))| match (truth_value, extracted) {
            (Some(t), Some(e)) => Some(bias_record(name, t, e, f1).with_ids(graph_id, run_id)),
            _ => None,
        })
        .collect();
    let files = ["graph.json", "metrics.json", "report.json"]
        .iter()
        .map(|f| format!("runs/{run_id}/{f}"))
        .collect();
    Ok((
        RunStatus::Ok {
            budget: report.budget,
            achieved: report.achieved,
            f1,
            files,
        },
        records,
    ))
}
