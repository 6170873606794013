use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use affilkg_core::{
    aggregate, evaluate_tuples, load_graph, parse_tuple_file, perturb, project, projection_density, run_experiment,
    sample_false_positives, write_graph, BiasRecord, DensityConvention, ErrorModel, ExperimentConfig, MetricSuite,
    NormalizationConfig, Partition, PerturbationSpec, SuiteOptions, TupleFormat,
};
use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "affilkg", version, about = "Evaluate, measure and perturb affiliation knowledge graphs")]
struct Cli {
    /// Seed for every random choice; overrides per-command and config seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predicted tuples against ground-truth tuples.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// JSON object mapping abbreviations to expansions.
        #[arg(long)]
        abbrev: Option<PathBuf>,
        /// Treat a title on one side only as a mismatch.
        #[arg(long)]
        strict_titles: bool,
        /// Include a random sample of this many false positives.
        #[arg(long)]
        fp_sample: Option<usize>,
        #[arg(long, default_value = "auto")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the metric suite of a graph.
    Metrics {
        #[arg(long)]
        graph: PathBuf,
        /// Ground truth for the club-degree RMAE fields.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Convention::Standard)]
        density_convention: Convention,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One-mode projection onto individuals or clubs.
    Project {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        onto: Onto,
        #[arg(long, value_enum, default_value_t = Convention::Standard)]
        density_convention: Convention,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perturb a graph to target precision and recall.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        model: ErrorModel,
        #[arg(long)]
        precision: f64,
        #[arg(long)]
        recall: f64,
        /// Perturbed graph document.
        #[arg(long)]
        out: PathBuf,
        /// Metric suite of the perturbed graph, with RMAE against the input.
        #[arg(long)]
        metrics_out: Option<PathBuf>,
        /// Run metadata; printed to stdout when omitted.
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Aggregate bias records into a table by F1 bin and metric.
    Bias {
        #[arg(long)]
        records: PathBuf,
        /// `.csv` or `.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a batch experiment from a config or a previous manifest.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Onto {
    Indiv,
    Club,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Standard,
    Paper,
}

impl From<Convention> for DensityConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Standard => DensityConvention::Standard,
            Convention::Paper => DensityConvention::Paper,
        }
    }
}

/// Failure classes that map onto exit codes.
enum Failure {
    Usage(anyhow::Error),
    Failed(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let usage = matches!(
            err.downcast_ref::<affilkg_core::Error>(),
            Some(affilkg_core::Error::InvalidSpec(_) | affilkg_core::Error::InvalidConfig(_))
        );
        if usage {
            Failure::Usage(err)
        } else {
            Failure::Failed(err)
        }
    }
}

impl From<affilkg_core::Error> for Failure {
    fn from(err: affilkg_core::Error) -> Self {
        anyhow::Error::from(err).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    if cli.jobs == Some(0) {
        tracing::error!("--jobs must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    if let Some(n) = cli.jobs {
        // Only fails if a pool was already built, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            tracing::error!(error = format!("{e:#}"), "invalid arguments");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Failed(e)) => {
            tracing::error!(error = format!("{e:#}"), "failed");
            ExitCode::from(EXIT_FAILED)
        }
    }
}

fn emit(out: Option<&Path>, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Evaluate {
            pred,
            truth,
            abbrev,
            strict_titles,
            fp_sample,
            format,
            out,
        } => {
            let format: TupleFormat = format.parse()?;
            let mut cfg = NormalizationConfig::default();
            cfg.strict_titles = strict_titles;
            if let Some(path) = abbrev {
                cfg.load_abbreviations(&path)
                    .with_context(|| format!("loading abbreviations from {}", path.display()))?;
            }
            let predicted = parse_tuple_file(&pred, format).with_context(|| format!("reading {}", pred.display()))?;
            let truth_tuples =
                parse_tuple_file(&truth, format).with_context(|| format!("reading {}", truth.display()))?;
            let report = evaluate_tuples(&predicted, &truth_tuples, &cfg)?;
            tracing::info!(
                precision = report.precision,
                recall = report.recall,
                f1 = report.f1,
                "evaluated"
            );
            let mut value = serde_json::to_value(&report).map_err(anyhow::Error::from)?;
            if let Some(n) = fp_sample {
                let sample = sample_false_positives(&report, &predicted, n, cli.seed.unwrap_or(0));
                value["false_positive_sample"] = serde_json::to_value(sample).map_err(anyhow::Error::from)?;
            }
            emit(out.as_deref(), &value)?;
        }
        Command::Metrics {
            graph,
            truth,
            density_convention,
            out,
        } => {
            let cfg = NormalizationConfig::default();
            let g = load_graph(&graph, &cfg).with_context(|| format!("reading {}", graph.display()))?;
            let t = truth
                .as_ref()
                .map(|p| load_graph(p, &cfg).with_context(|| format!("reading {}", p.display())))
                .transpose()?;
            let opts = SuiteOptions {
                density_convention: density_convention.into(),
            };
            let suite = MetricSuite::compute(&g, t.as_ref(), &opts)?;
            let mut value = serde_json::to_value(&suite).map_err(anyhow::Error::from)?;
            if t.is_none() {
                let obj = value.as_object_mut().expect("suite serializes to an object");
                obj.remove("rmae_all_clubs");
                obj.remove("rmae_top10_clubs");
            }
            emit(out.as_deref(), &value)?;
        }
        Command::Project {
            graph,
            onto,
            density_convention,
            out,
        } => {
            let g = load_graph(&graph, &NormalizationConfig::default())
                .with_context(|| format!("reading {}", graph.display()))?;
            let partition = match onto {
                Onto::Indiv => Partition::Indiv,
                Onto::Club => Partition::Club,
            };
            let p = project(&g, partition)?;
            tracing::info!(
                nodes = p.num_nodes(),
                edges = p.num_edges(),
                density = projection_density(&p, density_convention.into()).ok(),
                "projected"
            );
            emit(
                out.as_deref(),
                &serde_json::to_value(p.to_document()).map_err(anyhow::Error::from)?,
            )?;
        }
        Command::Simulate {
            graph,
            model,
            precision,
            recall,
            out,
            metrics_out,
            report_out,
        } => {
            let truth = load_graph(&graph, &NormalizationConfig::default())
                .with_context(|| format!("reading {}", graph.display()))?;
            let spec = PerturbationSpec::new(model, precision, recall, cli.seed.unwrap_or(0));
            spec.validate()?;
            let result = perturb(&truth, &spec)?;
            write_graph(&out, &result.graph)?;
            if let Some(path) = metrics_out {
                let suite = MetricSuite::compute(&result.graph, Some(&truth), &SuiteOptions::default())?;
                emit(Some(&path), &serde_json::to_value(suite).map_err(anyhow::Error::from)?)?;
            }
            tracing::info!(
                precision = result.report.achieved.precision,
                recall = result.report.achieved.recall,
                "perturbed"
            );
            emit(
                report_out.as_deref(),
                &serde_json::to_value(&result.report).map_err(anyhow::Error::from)?,
            )?;
        }
        Command::Bias { records, out } => {
            let table = aggregate(&read_records(&records)?);
            if table.excluded_null > 0 {
                tracing::warn!(excluded = table.excluded_null, "records with zero truth value excluded");
            }
            match out.extension().and_then(|e| e.to_str()) {
                Some("csv") => table.write_csv(fs::File::create(&out).map_err(anyhow::Error::from)?)?,
                Some("json") => emit(Some(&out), &table.to_json())?,
                _ => {
                    return Err(Failure::Usage(anyhow::anyhow!(
                        "--out must end in .csv or .json: {}",
                        out.display()
                    )))
                }
            }
        }
        Command::Experiment { config, output_dir } => {
            let mut cfg = ExperimentConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            if let Some(seed) = cli.seed {
                for group in &mut cfg.runs {
                    group.base_seed = seed;
                }
            }
            if cli.jobs.is_some() {
                cfg.jobs = cli.jobs;
            }
            let outcome = run_experiment(&cfg)?;
            if outcome.all_failed() {
                return Err(Failure::Failed(anyhow::anyhow!(
                    "all {} runs failed",
                    outcome.manifest.failed
                )));
            }
        }
    }
    Ok(())
}

fn read_records(path: &Path) -> anyhow::Result<Vec<BiasRecord>> {
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut records = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), k + 1))?;
        records.push(record);
    }
    if records.is_empty() {
        bail!("no records in {}", path.display());
    }
    Ok(records)
}
