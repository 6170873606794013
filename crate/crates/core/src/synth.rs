//! Seeded synthetic affiliation graphs with heavy-tailed club sizes, for
//! simulation studies and benchmarks when no ground-truth data is at hand.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error_models::phase_rng;
use crate::graph::{AffiliationGraph, GraphBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyTailedConfig {
    pub num_indiv: usize,
    pub num_club: usize,
    /// Size of the largest club; club `k` (0-based) gets
    /// `max(2, round(max_club_size / (k + 1)^exponent))` members.
    pub max_club_size: usize,
    pub exponent: f64,
    pub seed: u64,
}

impl Default for HeavyTailedConfig {
    fn default() -> Self {
        HeavyTailedConfig {
            num_indiv: 500,
            num_club: 100,
            max_club_size: 120,
            exponent: 0.8,
            seed: 0,
        }
    }
}

/// Club members are drawn uniformly without replacement; any individual left
/// without a club then joins one uniformly chosen club, so no node is
/// isolated.
pub fn heavy_tailed_graph(cfg: &HeavyTailedConfig) -> AffiliationGraph {
    let mut rng = phase_rng(cfg.seed, 0);
    let indiv_label = |i: usize| format!("person {i:05}");
    let club_label = |k: usize| format!("club {k:04}");
    let mut covered = vec![false; cfg.num_indiv];
    let mut b = GraphBuilder::new();
    for k in 0..cfg.num_club {
        let size = (cfg.max_club_size as f64 / ((k + 1) as f64).powf(cfg.exponent))
            .round()
            .max(2.0) as usize;
        for i in index::sample(&mut rng, cfg.num_indiv, size.min(cfg.num_indiv)) {
            covered[i] = true;
            b.add_edge(indiv_label(i), club_label(k));
        }
    }
    for (i, _) in covered.iter().enumerate().filter(|(_, &c)| !c) {
        b.add_edge(indiv_label(i), club_label(rng.gen_range(0..cfg.num_club)));
    }
    b.build()
}
