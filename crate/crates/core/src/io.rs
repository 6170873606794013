//! Reading tuple files and reading/writing graph documents.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, AffiliationGraph, EdgeTuple, GraphDocument};
use crate::normalize::NormalizationConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TupleFormat {
    #[default]
    Auto,
    Csv,
    Jsonl,
}

impl FromStr for TupleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(TupleFormat::Auto),
            "csv" => Ok(TupleFormat::Csv),
            "jsonl" => Ok(TupleFormat::Jsonl),
            other => Err(Error::InvalidConfig(format!("unknown tuple format {other:?}"))),
        }
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

fn resolve(path: &Path, format: TupleFormat) -> Result<TupleFormat> {
    match format {
        TupleFormat::Auto => match extension(path).as_deref() {
            Some("csv") => Ok(TupleFormat::Csv),
            Some("jsonl") | Some("ndjson") => Ok(TupleFormat::Jsonl),
            _ => Err(Error::UnknownFormat(path.to_path_buf())),
        },
        explicit => Ok(explicit),
    }
}

#[derive(Deserialize)]
struct CsvTuple {
    person: String,
    relation: String,
    club: String,
}

/// Tuples in file order, each tagged with its 1-based source line.
pub fn parse_tuple_file(path: impl AsRef<Path>, format: TupleFormat) -> Result<Vec<EdgeTuple>> {
    let path = path.as_ref();
    let format = resolve(path, format)?;
    let tuples = match format {
        TupleFormat::Csv => parse_csv(File::open(path)?)?,
        TupleFormat::Jsonl => parse_jsonl(BufReader::new(File::open(path)?))?,
        TupleFormat::Auto => unreachable!("format resolved above"),
    };
    if tuples.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(tuples)
}

fn parse_csv<R: std::io::Read>(reader: R) -> Result<Vec<EdgeTuple>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::Headers).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::MalformedInput {
        line: 1,
        reason: e.to_string(),
    })?;
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    for required in ["person", "relation", "club"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::MalformedInput {
                line: 1,
                reason: format!("missing column {required:?}"),
            });
        }
    }
    let headers = headers.clone();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::MalformedInput {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: CsvTuple = record.deserialize(Some(&headers)).map_err(|e| Error::MalformedInput {
            line,
            reason: e.to_string(),
        })?;
        out.push(EdgeTuple {
            person: row.person,
            relation: row.relation,
            club: row.club,
            line: Some(line),
        });
    }
    Ok(out)
}

fn parse_jsonl<R: BufRead>(reader: R) -> Result<Vec<EdgeTuple>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tuple: EdgeTuple = serde_json::from_str(&line).map_err(|e| Error::MalformedInput {
            line: line_no,
            reason: e.to_string(),
        })?;
        tuple.line = Some(line_no);
        out.push(tuple);
    }
    Ok(out)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<AffiliationGraph> {
    let doc: GraphDocument = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    AffiliationGraph::from_document(doc)
}

pub fn write_graph(path: impl AsRef<Path>, g: &AffiliationGraph) -> Result<()> {
    write_json(path, &g.to_document())
}

/// A graph from either a graph document (`.json`) or a tuple file, which is
/// normalized and built with `cfg`.
pub fn load_graph(path: impl AsRef<Path>, cfg: &NormalizationConfig) -> Result<AffiliationGraph> {
    let path = path.as_ref();
    if extension(path).as_deref() == Some("json") {
        read_graph(path)
    } else {
        build_graph(&parse_tuple_file(path, TupleFormat::Auto)?, cfg)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
