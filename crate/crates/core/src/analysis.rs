//! Relative bias and relative MAE of metrics, binned by F1 and averaged into
//! tables.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tuple_eval::{f1_bin, F1Bin};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRecord {
    pub metric: String,
    pub truth: f64,
    pub extracted: f64,
    /// `(extracted - truth) / truth`; `None` when the truth value is 0.
    pub rel_bias: Option<f64>,
    pub rel_mae: Option<f64>,
    pub f1: f64,
    pub bin: F1Bin,
    #[serde(default)]
    pub graph_id: String,
    #[serde(default)]
    pub run_id: String,
}

impl BiasRecord {
    pub fn with_ids(mut self, graph_id: impl Into<String>, run_id: impl Into<String>) -> Self {
        self.graph_id = graph_id.into();
        self.run_id = run_id.into();
        self
    }
}

pub fn bias_record(metric: &str, truth: f64, extracted: f64, f1: f64) -> BiasRecord {
    let rel_bias = if truth == 0.0 {
        tracing::warn!(metric, extracted, "truth value is zero; relative bias undefined");
        None
    } else {
        Some((extracted - truth) / truth)
    };
    BiasRecord {
        metric: metric.to_owned(),
        truth,
        extracted,
        rel_bias,
        rel_mae: rel_bias.map(f64::abs),
        f1,
        bin: f1_bin(f1),
        graph_id: String::new(),
        run_id: String::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub mean_rel_bias: f64,
    pub mean_rel_mae: f64,
    /// Contributing (non-null) records.
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BiasTable {
    pub rows: BTreeMap<(F1Bin, String), BiasRow>,
    /// Records skipped because their truth value was 0.
    pub excluded_null: usize,
}

/// Sum in a canonical order so the result does not depend on input order.
fn canonical_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Averages records per `(bin, metric)`: first within each graph id, then
/// unweighted across graph ids. Null records are excluded and counted.
pub fn aggregate(records: &[BiasRecord]) -> BiasTable {
    type PerGraph = BTreeMap<String, (Vec<f64>, Vec<f64>)>;
    let mut groups: BTreeMap<(F1Bin, String), PerGraph> = BTreeMap::new();
    let mut excluded_null = 0;
    for r in records {
        let (Some(bias), Some(mae)) = (r.rel_bias, r.rel_mae) else {
            excluded_null += 1;
            continue;
        };
        let entry = groups
            .entry((r.bin, r.metric.clone()))
            .or_default()
            .entry(r.graph_id.clone())
            .or_default();
        entry.0.push(bias);
        entry.1.push(mae);
    }
    if excluded_null > 0 {
        tracing::warn!(excluded_null, "records with zero truth value excluded from means");
    }
    let rows = groups
        .into_iter()
        .map(|(key, per_graph)| {
            let n = per_graph.values().map(|(b, _)| b.len()).sum();
            let (biases, maes): (Vec<f64>, Vec<f64>) = per_graph
                .into_values()
                .map(|(b, m)| (canonical_mean(b), canonical_mean(m)))
                .unzip();
            let row = BiasRow {
                mean_rel_bias: canonical_mean(biases),
                mean_rel_mae: canonical_mean(maes),
                n,
            };
            debug_assert!(row.mean_rel_mae + 1e-12 >= row.mean_rel_bias.abs());
            (key, row)
        })
        .collect();
    BiasTable { rows, excluded_null }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CsvRow<'a> {
    bin: &'a str,
    metric: &'a str,
    mean_rel_bias: f64,
    mean_rel_mae: f64,
    n: usize,
}

impl BiasTable {
    pub fn get(&self, bin: F1Bin, metric: &str) -> Option<&BiasRow> {
        self.rows.get(&(bin, metric.to_owned()))
    }

    /// Columns `bin,metric,mean_rel_bias,mean_rel_mae,n`, rows in key order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for ((bin, metric), row) in &self.rows {
            w.serialize(CsvRow {
                bin: bin.label(),
                metric,
                mean_rel_bias: row.mean_rel_bias,
                mean_rel_mae: row.mean_rel_mae,
                n: row.n,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|((bin, metric), row)| {
                serde_json::json!({
                    "bin": bin.label(),
                    "metric": metric,
                    "mean_rel_bias": row.mean_rel_bias,
                    "mean_rel_mae": row.mean_rel_mae,
                    "n": row.n,
                })
            })
            .collect();
        serde_json::json!({ "rows": rows, "excluded_null": self.excluded_null })
    }
}

/// Fractions of a metric's non-null records with negative and with positive
/// relative bias. Zero biases count toward neither.
pub fn sign_consistency(records: &[BiasRecord], metric: &str) -> Result<(f64, f64)> {
    let biases: Vec<f64> = records
        .iter()
        .filter(|r| r.metric == metric)
        .filter_map(|r| r.rel_bias)
        .collect();
    if biases.is_empty() {
        return Err(Error::NoData {
            metric: metric.to_owned(),
        });
    }
    let n = biases.len() as f64;
    let neg = biases.iter().filter(|&&b| b < 0.0).count() as f64;
    let pos = biases.iter().filter(|&&b| b > 0.0).count() as f64;
    Ok((neg / n, pos / n))
}
