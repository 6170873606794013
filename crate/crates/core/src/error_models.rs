//! Error models that perturb a ground-truth graph to hit a target precision
//! and recall.
//!
//! Every model keeps `e_keep = floor(recall * |E|)` original edges, chosen
//! uniformly, and adds `e_add = floor((1/precision - 1) * e_keep)` false
//! edges; the models differ only in what the false edges look like.
//!
//! Randomness comes from ChaCha8 keyed by the spec's seed. Each phase draws
//! from its own stream of that key: stream 1 for choosing which true edges
//! survive, stream 2 for placing false edges, stream 3 for endpoint choices
//! (preferential draws and which endpoint a misspelling replaces). Results
//! are therefore fixed by `(graph, spec)` alone.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AffiliationGraph, GraphBuilder, Partition};
use crate::normalize::stripped;
use crate::tuple_eval::{score_graphs, GraphScore};

pub const STREAM_REMOVAL: u64 = 1;
pub const STREAM_ADDITION: u64 = 2;
pub const STREAM_ENDPOINT: u64 = 3;

/// Prefix of every label created by an error model.
pub const SYNTHETIC_PREFIX: &str = "~syn:";

/// Consecutive rejected preferential draws allowed per requested edge.
pub const PREFERENTIAL_ATTEMPTS_PER_EDGE: usize = 100;

/// The RNG for one phase of a perturbation run.
pub fn phase_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorModel {
    #[serde(rename = "random")]
    RandomEdge,
    #[serde(rename = "pref")]
    PreferentialAttachment,
    #[serde(rename = "node-add")]
    NodeAddition,
    #[serde(rename = "node-split")]
    NodeDisaggregation,
}

impl ErrorModel {
    pub const ALL: [ErrorModel; 4] = [
        ErrorModel::RandomEdge,
        ErrorModel::PreferentialAttachment,
        ErrorModel::NodeAddition,
        ErrorModel::NodeDisaggregation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorModel::RandomEdge => "random",
            ErrorModel::PreferentialAttachment => "pref",
            ErrorModel::NodeAddition => "node-add",
            ErrorModel::NodeDisaggregation => "node-split",
        }
    }
}

impl fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ErrorModel::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown error model {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub model: ErrorModel,
    pub target_precision: f64,
    pub target_recall: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(model: ErrorModel, target_precision: f64, target_recall: f64, seed: u64) -> Self {
        PerturbationSpec {
            model,
            target_precision,
            target_recall,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("precision", self.target_precision), ("recall", self.target_recall)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidSpec(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeBudget {
    pub e_keep: usize,
    pub e_add: usize,
}

/// Floor that treats values within 1e-9 (relative) below an integer as that
/// integer, so decimal targets such as 0.8 behave as written rather than as
/// their nearest binary fraction.
fn decimal_floor(x: f64) -> usize {
    (x + 1e-9 * x.abs().max(1.0)).floor().max(0.0) as usize
}

pub fn compute_budget(num_edges: usize, precision: f64, recall: f64) -> Result<EdgeBudget> {
    if num_edges == 0 {
        return Err(Error::EmptyGraph);
    }
    PerturbationSpec::new(ErrorModel::RandomEdge, precision, recall, 0).validate()?;
    let e_keep = decimal_floor(recall * num_edges as f64).min(num_edges);
    if e_keep == 0 {
        return Err(Error::BudgetUnderflow { num_edges, recall });
    }
    let e_add = decimal_floor((1.0 / precision - 1.0) * e_keep as f64);
    Ok(EdgeBudget { e_keep, e_add })
}

/// What a perturbation run did, for run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub spec: PerturbationSpec,
    pub budget: EdgeBudget,
    /// Exact edge-set agreement of the output with the input graph.
    pub achieved: GraphScore,
    pub synthetic_indiv: usize,
    pub synthetic_club: usize,
    /// Node disaggregation only: edges redirected to misspelled nodes.
    pub redirected_edges: usize,
    /// Node disaggregation only: redirected edges deleted because they
    /// exceeded the false-positive budget.
    pub reconciliation_deleted: usize,
    /// Node disaggregation only: extra synthetic edges added to reach the
    /// false-positive budget.
    pub reconciliation_added: usize,
}

#[derive(Debug, Clone)]
pub struct Perturbation {
    pub graph: AffiliationGraph,
    pub report: PerturbationReport,
}

/// Fresh node labels that collide with no original label, either verbatim or
/// after space/punctuation stripping.
struct SyntheticLabels {
    taken: HashSet<String>,
    next: [usize; 2],
    created: [usize; 2],
}

impl SyntheticLabels {
    fn new(g: &AffiliationGraph) -> Self {
        let taken = [Partition::Indiv, Partition::Club]
            .into_iter()
            .flat_map(|p| g.labels(p).iter())
            .flat_map(|l| [l.clone(), stripped(l)])
            .collect();
        SyntheticLabels {
            taken,
            next: [0; 2],
            created: [0; 2],
        }
    }

    fn fresh(&mut self, partition: Partition) -> String {
        let slot = partition as usize;
        loop {
            self.next[slot] += 1;
            let label = format!("{SYNTHETIC_PREFIX}{partition}:{:06}", self.next[slot]);
            if !self.taken.contains(&label) && !self.taken.contains(&stripped(&label)) {
                self.created[slot] += 1;
                return label;
            }
        }
    }
}

pub fn is_synthetic(label: &str) -> bool {
    label.starts_with(SYNTHETIC_PREFIX)
}

/// Shared output assembly: all original nodes, the surviving true edges and
/// the false edges given by label.
struct Assembly<'g> {
    source: &'g AffiliationGraph,
    builder: GraphBuilder,
    labels: SyntheticLabels,
}

impl<'g> Assembly<'g> {
    fn new(source: &'g AffiliationGraph) -> Self {
        let mut builder = GraphBuilder::new();
        for p in [Partition::Indiv, Partition::Club] {
            for label in source.labels(p) {
                builder.add_node(p, label.clone());
            }
        }
        Assembly {
            source,
            builder,
            labels: SyntheticLabels::new(source),
        }
    }

    fn keep_edges(&mut self, edge_indices: impl IntoIterator<Item = usize>) {
        for e in edge_indices {
            let (i, j) = self.source.edges()[e];
            self.builder.add_edge(
                self.source.labels(Partition::Indiv)[i].clone(),
                self.source.labels(Partition::Club)[j].clone(),
            );
        }
    }

    fn add_original_pair(&mut self, i: usize, j: usize) {
        self.builder.add_edge(
            self.source.labels(Partition::Indiv)[i].clone(),
            self.source.labels(Partition::Club)[j].clone(),
        );
    }

    /// Connects original node `index` of `partition` to a new synthetic node
    /// in the opposite partition.
    fn attach_synthetic(&mut self, partition: Partition, index: usize) -> (String, String) {
        let original = self.source.labels(partition)[index].clone();
        let fresh = self.labels.fresh(partition.other());
        match partition {
            Partition::Indiv => (original, fresh),
            Partition::Club => (fresh, original),
        }
    }

    fn add_pair(&mut self, (indiv, club): (String, String)) {
        self.builder.add_edge(indiv, club);
    }

    fn finish(self, spec: &PerturbationSpec, budget: EdgeBudget) -> Perturbation {
        let graph = self.builder.build();
        let achieved = score_graphs(self.source, &graph);
        Perturbation {
            graph,
            report: PerturbationReport {
                spec: *spec,
                budget,
                achieved,
                synthetic_indiv: self.labels.created[Partition::Indiv as usize],
                synthetic_club: self.labels.created[Partition::Club as usize],
                redirected_edges: 0,
                reconciliation_deleted: 0,
                reconciliation_added: 0,
            },
        }
    }
}

fn sample_sorted(rng: &mut ChaCha8Rng, length: usize, amount: usize) -> Vec<usize> {
    let mut picked = index::sample(rng, length, amount).into_vec();
    picked.sort_unstable();
    picked
}

fn prepare(g: &AffiliationGraph, spec: &PerturbationSpec) -> Result<EdgeBudget> {
    spec.validate()?;
    compute_budget(g.num_edges(), spec.target_precision, spec.target_recall)
}

fn random_original_node(g: &AffiliationGraph, rng: &mut ChaCha8Rng) -> (Partition, usize) {
    let partition = if rng.gen_bool(0.5) {
        Partition::Indiv
    } else {
        Partition::Club
    };
    (partition, rng.gen_range(0..g.partition_len(partition)))
}

pub fn perturb(g: &AffiliationGraph, spec: &PerturbationSpec) -> Result<Perturbation> {
    match spec.model {
        ErrorModel::RandomEdge => perturb_random_edge(g, spec),
        ErrorModel::PreferentialAttachment => perturb_preferential(g, spec),
        ErrorModel::NodeAddition => perturb_node_addition(g, spec),
        ErrorModel::NodeDisaggregation => perturb_node_disaggregation(g, spec),
    }
}

/// Uniform edge removal plus false edges drawn uniformly, without
/// replacement, from pairs that are not edges of the original graph.
pub fn perturb_random_edge(g: &AffiliationGraph, spec: &PerturbationSpec) -> Result<Perturbation> {
    let budget = prepare(g, spec)?;
    let total_pairs = g.num_indiv() as u128 * g.num_club() as u128;
    let available = total_pairs - g.num_edges() as u128;
    if available < budget.e_add as u128 {
        return Err(Error::SaturatedGraph {
            needed: budget.e_add,
            available: available as usize,
        });
    }
    let mut out = Assembly::new(g);
    out.keep_edges(sample_sorted(&mut phase_rng(spec.seed, STREAM_REMOVAL), g.num_edges(), budget.e_keep));

    let mut rng = phase_rng(spec.seed, STREAM_ADDITION);
    if (budget.e_add as u128) * 4 >= available {
        // Dense regime: enumerate the complement and sample indices from it.
        let non_edges: Vec<(usize, usize)> = (0..g.num_indiv())
            .flat_map(|i| (0..g.num_club()).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.contains_edge(i, j))
            .collect();
        for k in sample_sorted(&mut rng, non_edges.len(), budget.e_add) {
            out.add_original_pair(non_edges[k].0, non_edges[k].1);
        }
    } else {
        // Sparse regime: rejection keeps each accepted pair uniform over the
        // remaining non-edges.
        let mut added = BTreeSet::new();
        while added.len() < budget.e_add {
            let i = rng.gen_range(0..g.num_indiv());
            let j = rng.gen_range(0..g.num_club());
            if !g.contains_edge(i, j) {
                added.insert((i, j));
            }
        }
        for (i, j) in added {
            out.add_original_pair(i, j);
        }
    }
    Ok(out.finish(spec, budget))
}

/// Draws `(indiv, club)` index pairs with each endpoint chosen independently
/// in proportion to its degree in the original graph.
pub struct DegreeSampler {
    indiv: WeightedIndex<u64>,
    club: WeightedIndex<u64>,
}

impl DegreeSampler {
    pub fn new(g: &AffiliationGraph) -> Result<Self> {
        let weights = |p| -> Result<WeightedIndex<u64>> {
            WeightedIndex::new(g.degrees(p).into_iter().map(|d| d as u64)).map_err(|_| Error::EmptyGraph)
        };
        Ok(DegreeSampler {
            indiv: weights(Partition::Indiv)?,
            club: weights(Partition::Club)?,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let i = self.indiv.sample(rng);
        let j = self.club.sample(rng);
        (i, j)
    }
}

/// Uniform edge removal plus false edges whose endpoints are drawn in
/// proportion to original degree; draws hitting an original or already added
/// edge are rejected.
pub fn perturb_preferential(g: &AffiliationGraph, spec: &PerturbationSpec) -> Result<Perturbation> {
    let budget = prepare(g, spec)?;
    let sampler = DegreeSampler::new(g)?;
    let mut out = Assembly::new(g);
    out.keep_edges(sample_sorted(&mut phase_rng(spec.seed, STREAM_REMOVAL), g.num_edges(), budget.e_keep));

    let mut rng = phase_rng(spec.seed, STREAM_ENDPOINT);
    let limit = PREFERENTIAL_ATTEMPTS_PER_EDGE * budget.e_add;
    let mut added = BTreeSet::new();
    let mut failures = 0;
    while added.len() < budget.e_add {
        let (i, j) = sampler.draw(&mut rng);
        if !g.contains_edge(i, j) && added.insert((i, j)) {
            failures = 0;
            continue;
        }
        failures += 1;
        if failures >= limit {
            return Err(Error::SamplingStalled {
                attempts: failures,
                added: added.len(),
                needed: budget.e_add,
            });
        }
    }
    for (i, j) in added {
        out.add_original_pair(i, j);
    }
    Ok(out.finish(spec, budget))
}

/// Uniform edge removal plus one new synthetic node per false edge, attached
/// to a uniformly chosen original node of a uniformly chosen partition.
pub fn perturb_node_addition(g: &AffiliationGraph, spec: &PerturbationSpec) -> Result<Perturbation> {
    let budget = prepare(g, spec)?;
    let mut out = Assembly::new(g);
    out.keep_edges(sample_sorted(&mut phase_rng(spec.seed, STREAM_REMOVAL), g.num_edges(), budget.e_keep));
    let mut rng = phase_rng(spec.seed, STREAM_ADDITION);
    for _ in 0..budget.e_add {
        let (partition, index) = random_original_node(g, &mut rng);
        let pair = out.attach_synthetic(partition, index);
        out.add_pair(pair);
    }
    Ok(out.finish(spec, budget))
}

/// Splits entities by redirecting edges to fresh "misspelled" nodes.
///
/// `floor(max(P, R) * |E|)` edges stay intact; every other edge keeps one
/// endpoint (fair coin) and has the other replaced by a new node of the same
/// partition. Intact edges beyond `e_keep` are then removed uniformly. The
/// redirected edges are the false positives: when there are more than
/// `e_add` of them the excess is deleted uniformly (together with its
/// synthetic node), when there are fewer, synthetic attachments are added as
/// in [`perturb_node_addition`].
pub fn perturb_node_disaggregation(g: &AffiliationGraph, spec: &PerturbationSpec) -> Result<Perturbation> {
    let budget = prepare(g, spec)?;
    if g.num_edges() < 2 {
        return Err(Error::InvalidSpec("node disaggregation needs at least two edges".into()));
    }
    let num_edges = g.num_edges();
    let intact_target = decimal_floor(spec.target_precision.max(spec.target_recall) * num_edges as f64)
        .clamp(budget.e_keep, num_edges);

    let mut removal = phase_rng(spec.seed, STREAM_REMOVAL);
    let intact = sample_sorted(&mut removal, num_edges, intact_target);
    let misspelled: Vec<usize> = {
        let keep: HashSet<usize> = intact.iter().copied().collect();
        (0..num_edges).filter(|e| !keep.contains(e)).collect()
    };

    let mut out = Assembly::new(g);
    let mut endpoint = phase_rng(spec.seed, STREAM_ENDPOINT);
    let mut redirected = Vec::with_capacity(misspelled.len());
    for &e in &misspelled {
        let (i, j) = g.edges()[e];
        let keep_indiv = endpoint.gen_bool(0.5);
        let pair = if keep_indiv {
            out.attach_synthetic(Partition::Indiv, i)
        } else {
            out.attach_synthetic(Partition::Club, j)
        };
        redirected.push(pair);
    }

    let surviving: Vec<usize> = if intact.len() > budget.e_keep {
        sample_sorted(&mut removal, intact.len(), budget.e_keep)
            .into_iter()
            .map(|k| intact[k])
            .collect()
    } else {
        intact
    };
    out.keep_edges(surviving);

    let mut addition = phase_rng(spec.seed, STREAM_ADDITION);
    let redirected_count = redirected.len();
    let mut deleted = 0;
    let mut extra = 0;
    if redirected.len() > budget.e_add {
        deleted = redirected.len() - budget.e_add;
        let kept = sample_sorted(&mut addition, redirected.len(), budget.e_add);
        let mut slots: Vec<Option<(String, String)>> = redirected.into_iter().map(Some).collect();
        for k in kept {
            let pair = slots[k].take().expect("sampled indices are distinct");
            out.add_pair(pair);
        }
        // Synthetic nodes of deleted edges were never added to the builder;
        // they only consumed label numbers.
        for pair in slots.into_iter().flatten() {
            let synthetic_side = if is_synthetic(&pair.0) {
                Partition::Indiv
            } else {
                Partition::Club
            };
            out.labels.created[synthetic_side as usize] -= 1;
        }
    } else {
        for pair in redirected {
            out.add_pair(pair);
        }
        while redirected_count + extra < budget.e_add {
            let (partition, index) = random_original_node(g, &mut addition);
            let pair = out.attach_synthetic(partition, index);
            out.add_pair(pair);
            extra += 1;
        }
    }

    let mut result = out.finish(spec, budget);
    result.report.redirected_edges = redirected_count;
    result.report.reconciliation_deleted = deleted;
    result.report.reconciliation_added = extra;
    if deleted > 0 {
        tracing::warn!(
            deleted,
            e_add = budget.e_add,
            "node disaggregation redirected more edges than the false-positive budget; excess deleted"
        );
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountKind {
    Nodes,
    Edges,
}

/// Signed percentage by which the extracted node or edge count exceeds the
/// truth count.
pub fn overestimation_pct(truth: &AffiliationGraph, extracted: &AffiliationGraph, what: CountKind) -> Result<f64> {
    let (t, e) = match what {
        CountKind::Nodes => (truth.num_nodes(), extracted.num_nodes()),
        CountKind::Edges => (truth.num_edges(), extracted.num_edges()),
    };
    if t == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(100.0 * (e as f64 - t as f64) / t as f64)
}
