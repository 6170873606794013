//! Edge-tuple scoring: one-to-one matching of predicted tuples against
//! ground truth and the resulting precision, recall and F1.
//!
//! Matching runs in two passes. The first pairs tuples whose normalized
//! person and club are identical. The second walks the remaining predicted
//! tuples in input order and pairs each with the first remaining truth tuple
//! (in input order) accepted by [`persons_match`] and [`entities_match`].
//! Paired tuples leave both pools.
//!
//! [`persons_match`]: crate::normalize::persons_match
//! [`entities_match`]: crate::normalize::entities_match

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AffiliationGraph, EdgeTuple, Partition};
use crate::normalize::{
    expanded_key, normalize_label, split_title, stripped, stripped_match, titles_compatible, NormalizationConfig,
};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Require the relation field to equal "member" (case-insensitive) on both
    /// sides of a match. Off by default: the graphs have a single relation.
    pub require_member_relation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    /// `(predicted index, truth index)` into the caller's input lists.
    pub matched_pairs: Vec<(usize, usize)>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
    /// How many of the matched pairs came from the flexible (second) pass.
    pub fuzzy_matches: usize,
    /// Input indices dropped as exact repeats of an earlier tuple.
    pub duplicate_predicted: Vec<usize>,
    pub duplicate_truth: Vec<usize>,
}

/// Precision, recall and F1 from raw counts. Empty predictions give
/// precision 0; F1 is 0 when precision and recall are both 0.
pub fn precision_recall_f1(true_positives: usize, predicted: usize, truth: usize) -> (f64, f64, f64) {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let p = ratio(true_positives, predicted);
    let r = ratio(true_positives, truth);
    (p, r, harmonic_mean(p, r))
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

struct Prepared {
    input_index: usize,
    person: String,
    club: String,
    relation_ok: bool,
}

fn prepare(
    tuples: &[EdgeTuple],
    cfg: &NormalizationConfig,
    opts: &EvalOptions,
) -> Result<(Vec<Prepared>, Vec<usize>)> {
    let mut seen = HashMap::new();
    let mut kept = Vec::with_capacity(tuples.len());
    let mut duplicates = Vec::new();
    for (index, t) in tuples.iter().enumerate() {
        let person = normalize_label(&t.person, cfg).map_err(|_| Error::MalformedTuple { index })?;
        let club = normalize_label(&t.club, cfg).map_err(|_| Error::MalformedTuple { index })?;
        let relation_ok = !opts.require_member_relation || t.relation.trim().eq_ignore_ascii_case("member");
        let key = (person.clone(), club.clone(), opts.require_member_relation.then(|| t.relation.trim().to_lowercase()));
        if seen.insert(key, index).is_some() {
            duplicates.push(index);
            continue;
        }
        kept.push(Prepared {
            input_index: index,
            person,
            club,
            relation_ok,
        });
    }
    Ok((kept, duplicates))
}

/// Comparison keys for the flexible pass, computed once per tuple.
struct FlexKey {
    title: Option<String>,
    person: String,
    club: String,
    person_expanded: Option<String>,
    club_expanded: Option<String>,
}

impl FlexKey {
    fn new(t: &Prepared, cfg: &NormalizationConfig) -> Self {
        let (title, rest) = split_title(&t.person, cfg);
        let expand = |s: &str| (!cfg.abbreviations().is_empty()).then(|| expanded_key(s, cfg));
        FlexKey {
            title: title.map(str::to_lowercase),
            person: stripped(rest),
            club: stripped(&t.club),
            person_expanded: expand(rest),
            club_expanded: expand(&t.club),
        }
    }

    fn matches(&self, other: &FlexKey, cfg: &NormalizationConfig) -> bool {
        let field = |a: &str, b: &str, ea: &Option<String>, eb: &Option<String>| {
            stripped_match(a, b, cfg.min_substring_len) || matches!((ea, eb), (Some(x), Some(y)) if x == y)
        };
        titles_compatible(self.title.as_deref(), other.title.as_deref(), cfg.strict_titles)
            && field(&self.person, &other.person, &self.person_expanded, &other.person_expanded)
            && field(&self.club, &other.club, &self.club_expanded, &other.club_expanded)
    }

    fn exact_key(&self) -> (Option<String>, String, String) {
        (self.title.clone(), self.person.clone(), self.club.clone())
    }
}

impl NormalizationConfig {
    fn flexible_rules_disabled(&self) -> bool {
        self.abbreviations().is_empty() && self.min_substring_len == usize::MAX && self.strict_titles
    }
}

pub fn evaluate_tuples(
    predicted: &[EdgeTuple],
    truth: &[EdgeTuple],
    cfg: &NormalizationConfig,
) -> Result<EvalReport> {
    evaluate_tuples_with(predicted, truth, cfg, &EvalOptions::default())
}

pub fn evaluate_tuples_with(
    predicted: &[EdgeTuple],
    truth: &[EdgeTuple],
    cfg: &NormalizationConfig,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if truth.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let (pred, duplicate_predicted) = prepare(predicted, cfg, opts)?;
    let (gold, duplicate_truth) = prepare(truth, cfg, opts)?;

    let mut pred_match: Vec<Option<usize>> = vec![None; pred.len()];
    let mut gold_taken = vec![false; gold.len()];

    // Pass 1: identical normalized endpoints.
    let gold_index: HashMap<(&str, &str), usize> = gold
        .iter()
        .enumerate()
        .filter(|(_, g)| g.relation_ok)
        .map(|(k, g)| ((g.person.as_str(), g.club.as_str()), k))
        .collect();
    for (k, p) in pred.iter().enumerate() {
        if !p.relation_ok {
            continue;
        }
        if let Some(&g) = gold_index.get(&(p.person.as_str(), p.club.as_str())) {
            if !gold_taken[g] {
                gold_taken[g] = true;
                pred_match[k] = Some(g);
            }
        }
    }

    // Pass 2: flexible matching over what is left.
    let mut fuzzy_matches = 0;
    let gold_keys: Vec<Option<FlexKey>> = gold
        .iter()
        .zip(&gold_taken)
        .map(|(g, &taken)| (!taken && g.relation_ok).then(|| FlexKey::new(g, cfg)))
        .collect();
    let pending: Vec<usize> = (0..pred.len())
        .filter(|&k| pred_match[k].is_none() && pred[k].relation_ok)
        .collect();
    if cfg.flexible_rules_disabled() {
        // Only stripped equality remains, so candidates can be bucketed.
        let mut buckets: HashMap<_, BTreeSet<usize>> = HashMap::new();
        for (g, key) in gold_keys.iter().enumerate() {
            if let Some(key) = key {
                buckets.entry(key.exact_key()).or_default().insert(g);
            }
        }
        for k in pending {
            let key = FlexKey::new(&pred[k], cfg).exact_key();
            if let Some(bucket) = buckets.get_mut(&key) {
                if let Some(g) = bucket.pop_first() {
                    gold_taken[g] = true;
                    pred_match[k] = Some(g);
                    fuzzy_matches += 1;
                }
            }
        }
    } else {
        for k in pending {
            let key = FlexKey::new(&pred[k], cfg);
            let hit = gold_keys.iter().enumerate().find_map(|(g, gk)| match gk {
                Some(gk) if !gold_taken[g] && key.matches(gk, cfg) => Some(g),
                _ => None,
            });
            if let Some(g) = hit {
                gold_taken[g] = true;
                pred_match[k] = Some(g);
                fuzzy_matches += 1;
            }
        }
    }

    let matched_pairs: Vec<(usize, usize)> = pred
        .iter()
        .zip(&pred_match)
        .filter_map(|(p, m)| m.map(|g| (p.input_index, gold[g].input_index)))
        .collect();
    let false_positives: Vec<usize> = pred
        .iter()
        .zip(&pred_match)
        .filter(|(_, m)| m.is_none())
        .map(|(p, _)| p.input_index)
        .collect();
    let false_negatives: Vec<usize> = gold
        .iter()
        .zip(&gold_taken)
        .filter(|(_, &taken)| !taken)
        .map(|(g, _)| g.input_index)
        .collect();
    let tp = matched_pairs.len();
    let (precision, recall, f1) = precision_recall_f1(tp, pred.len(), gold.len());
    Ok(EvalReport {
        precision,
        recall,
        f1,
        true_positives: tp,
        matched_pairs,
        false_positives,
        false_negatives,
        fuzzy_matches,
        duplicate_predicted,
        duplicate_truth,
    })
}

/// Edge-set agreement between two graphs whose labels are already
/// canonical: an extracted edge is a true positive iff the same
/// `(person, club)` label pair is an edge of the truth graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn score_graphs(truth: &AffiliationGraph, extracted: &AffiliationGraph) -> GraphScore {
    let tp = extracted
        .edge_labels()
        .filter(|(p, c)| {
            match (truth.index_of(Partition::Indiv, p), truth.index_of(Partition::Club, c)) {
                (Some(i), Some(j)) => truth.contains_edge(i, j),
                _ => false,
            }
        })
        .count();
    let (precision, recall, f1) = precision_recall_f1(tp, extracted.num_edges(), truth.num_edges());
    GraphScore {
        true_positives: tp,
        false_positives: extracted.num_edges() - tp,
        false_negatives: truth.num_edges() - tp,
        precision,
        recall,
        f1,
    }
}

/// The F1 ranges results are grouped by. The top bin also holds F1 = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum F1Bin {
    From092,
    From084,
    From076,
    From040,
    BelowRange,
}

impl F1Bin {
    pub const ALL: [F1Bin; 5] = [
        F1Bin::From092,
        F1Bin::From084,
        F1Bin::From076,
        F1Bin::From040,
        F1Bin::BelowRange,
    ];

    pub fn label(self) -> &'static str {
        match self {
            F1Bin::From092 => "[0.92,1.00)",
            F1Bin::From084 => "[0.84,0.92)",
            F1Bin::From076 => "[0.76,0.84)",
            F1Bin::From040 => "[0.40,0.76)",
            F1Bin::BelowRange => "below 0.40",
        }
    }

    pub fn from_label(label: &str) -> Option<F1Bin> {
        F1Bin::ALL.into_iter().find(|b| b.label() == label)
    }
}

impl fmt::Display for F1Bin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for F1Bin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for F1Bin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let label = String::deserialize(d)?;
        F1Bin::from_label(&label)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown F1 bin {label:?}")))
    }
}

pub fn f1_bin(f1: f64) -> F1Bin {
    if f1 >= 0.92 {
        F1Bin::From092
    } else if f1 >= 0.84 {
        F1Bin::From084
    } else if f1 >= 0.76 {
        F1Bin::From076
    } else if f1 >= 0.40 {
        F1Bin::From040
    } else {
        F1Bin::BelowRange
    }
}

/// Uniform sample without replacement of up to `n` false-positive tuples,
/// returned in input order.
pub fn sample_false_positives(
    report: &EvalReport,
    predicted: &[EdgeTuple],
    n: usize,
    seed: u64,
) -> Vec<EdgeTuple> {
    let fps = &report.false_positives;
    let amount = n.min(fps.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, fps.len(), amount)
        .into_iter()
        .map(|k| fps[k])
        .collect();
    picked.sort_unstable();
    picked.into_iter().map(|i| predicted[i].clone()).collect()
}
