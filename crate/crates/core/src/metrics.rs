//! Downstream metrics of an affiliation graph.
//!
//! Everything here is a pure function of an immutable graph. Where work is
//! spread over threads (all-pairs BFS, clustering) the reductions are done on
//! integers or in a fixed order, so results do not depend on the thread count.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AffiliationGraph, Partition};
use crate::projections::{avg_clustering, project, projection_density, DensityConvention};

/// Mean and population standard deviation of degrees in one partition.
pub fn degree_stats(g: &AffiliationGraph, partition: Partition) -> Result<(f64, f64)> {
    let degrees = g.degrees(partition);
    if degrees.is_empty() {
        return Err(Error::EmptyPartition(partition));
    }
    let n = degrees.len() as f64;
    let mean = degrees.iter().sum::<usize>() as f64 / n;
    let var = degrees
        .iter()
        .map(|&d| (d as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok((mean, var.sqrt()))
}

/// `|E| / (|V_indiv| * |V_club|)`.
pub fn bipartite_density(g: &AffiliationGraph) -> Result<f64> {
    for p in [Partition::Indiv, Partition::Club] {
        if g.partition_len(p) == 0 {
            return Err(Error::EmptyPartition(p));
        }
    }
    Ok(g.num_edges() as f64 / (g.num_indiv() as f64 * g.num_club() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RmaeScope {
    All,
    TopK(usize),
}

/// Mean over truth clubs of `|deg_extracted - deg_truth| / deg_truth`.
///
/// Clubs are aligned by label. A truth club missing from the extracted graph
/// counts with degree 0; extracted-only clubs are ignored. Truth clubs with
/// degree 0 have no defined relative error and are left out. `TopK` keeps the
/// `k` truth clubs of largest degree, ties broken by label.
pub fn rmae_club_degrees(truth: &AffiliationGraph, extracted: &AffiliationGraph, scope: RmaeScope) -> Result<f64> {
    let mut clubs: Vec<(usize, usize)> = (0..truth.num_club())
        .map(|j| (j, truth.degree_at(Partition::Club, j)))
        .filter(|&(_, d)| d > 0)
        .collect();
    if clubs.is_empty() {
        return Err(Error::EmptyPartition(Partition::Club));
    }
    if let RmaeScope::TopK(k) = scope {
        if k == 0 {
            return Err(Error::InvalidConfig("top-k RMAE needs k >= 1".into()));
        }
        // Labels are sorted, so index order is label order.
        clubs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        clubs.truncate(k);
    }
    let labels = truth.labels(Partition::Club);
    let total: f64 = clubs
        .iter()
        .map(|&(j, d)| {
            let extracted_deg = extracted
                .index_of(Partition::Club, &labels[j])
                .map_or(0, |k| extracted.degree_at(Partition::Club, k));
            (extracted_deg as f64 - d as f64).abs() / d as f64
        })
        .sum();
    Ok(total / clubs.len() as f64)
}

/// `(component count, |largest| / |V|, mean size of the other components)`.
pub fn component_metrics(g: &AffiliationGraph) -> Result<(usize, f64, f64)> {
    if g.num_nodes() == 0 {
        return Err(Error::EmptyGraph);
    }
    let components = g.component_indices();
    let largest = components[0].len();
    let rest = &components[1..];
    let avg_rest = if rest.is_empty() {
        0.0
    } else {
        rest.iter().map(Vec::len).sum::<usize>() as f64 / rest.len() as f64
    };
    Ok((
        components.len(),
        largest as f64 / g.num_nodes() as f64,
        avg_rest,
    ))
}

fn bfs_distances(adj: &[Vec<usize>], source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
    dist.fill(u32::MAX);
    dist[source] = 0;
    queue.clear();
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
}

/// `(diameter, average shortest path)` of the largest connected component,
/// in hops, averaging over unordered pairs of distinct nodes.
pub fn path_metrics(g: &AffiliationGraph) -> Result<(usize, f64)> {
    if g.num_nodes() == 0 {
        return Err(Error::EmptyGraph);
    }
    let components = g.component_indices();
    let members = &components[0];
    if members.len() < 2 {
        return Err(Error::DegenerateComponent);
    }
    let adj = g.unified_adjacency();
    let n = adj.len();
    let (ecc_max, dist_sum) = members
        .par_iter()
        .map_init(
            || (vec![u32::MAX; n], VecDeque::new()),
            |(dist, queue), &s| {
                bfs_distances(&adj, s, dist, queue);
                members.iter().fold((0u32, 0u64), |(mx, sum), &t| {
                    (mx.max(dist[t]), sum + dist[t] as u64)
                })
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    let k = members.len() as f64;
    Ok((ecc_max as usize, dist_sum as f64 / (k * (k - 1.0))))
}

/// Newman modularity (resolution 1) of a node partition of an undirected
/// graph given as adjacency lists.
pub fn modularity(adj: &[Vec<usize>], communities: &[Vec<usize>]) -> f64 {
    let two_m: usize = adj.iter().map(Vec::len).sum();
    if two_m == 0 {
        return 0.0;
    }
    let mut label = vec![usize::MAX; adj.len()];
    for (c, members) in communities.iter().enumerate() {
        for &u in members {
            label[u] = c;
        }
    }
    let mut internal = vec![0usize; communities.len()];
    let mut degree = vec![0usize; communities.len()];
    for (u, ns) in adj.iter().enumerate() {
        degree[label[u]] += ns.len();
        internal[label[u]] += ns.iter().filter(|&&v| label[v] == label[u]).count();
    }
    let m2 = two_m as f64;
    internal
        .iter()
        .zip(&degree)
        .map(|(&l2, &d)| l2 as f64 / m2 - (d as f64 / m2).powi(2))
        .sum()
}

/// Clauset-Newman-Moore agglomeration on an undirected graph.
///
/// Starting from singletons, repeatedly merges the pair of adjacent
/// communities with the largest modularity gain and stops once no merge has a
/// positive gain. Gains are compared as exact integers
/// (`2m * e_cd - d_c * d_d`, proportional to the real gain) so ties are
/// detected exactly; ties go to the smallest `(c, d)` index pair. Isolated
/// nodes stay as singleton communities. Returns communities as ascending
/// member lists, ordered by smallest member.
pub fn greedy_modularity_communities(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let two_m: i128 = adj.iter().map(|ns| ns.len() as i128).sum();
    let mut degree: Vec<i128> = adj.iter().map(|ns| ns.len() as i128).collect();
    let mut links: Vec<BTreeMap<usize, i128>> = adj
        .iter()
        .map(|ns| ns.iter().map(|&v| (v, 1)).collect())
        .collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|u| vec![u]).collect();
    let mut alive = vec![true; n];

    loop {
        let mut best: Option<(i128, usize, usize)> = None;
        for c in 0..n {
            if !alive[c] {
                continue;
            }
            for (&d, &e) in links[c].range(c + 1..) {
                let gain = two_m * e - degree[c] * degree[d];
                if best.is_none_or(|(b, _, _)| gain > b) {
                    best = Some((gain, c, d));
                }
            }
        }
        let Some((gain, c, d)) = best else { break };
        if gain <= 0 {
            break;
        }
        // Absorb d into c.
        let absorbed = std::mem::take(&mut links[d]);
        for (e, k) in absorbed {
            if e == c {
                continue;
            }
            *links[c].entry(e).or_insert(0) += k;
            let back = &mut links[e];
            back.remove(&d);
            *back.entry(c).or_insert(0) += k;
        }
        links[c].remove(&d);
        degree[c] += degree[d];
        degree[d] = 0;
        alive[d] = false;
        let moved = std::mem::take(&mut members[d]);
        members[c].extend(moved);
    }

    let mut out: Vec<Vec<usize>> = members
        .into_iter()
        .zip(alive)
        .filter_map(|(mut m, a)| {
            a.then(|| {
                m.sort_unstable();
                m
            })
        })
        .collect();
    out.sort_by_key(|m| m[0]);
    out
}

/// Number of greedy-modularity communities of the graph viewed as an
/// ordinary undirected graph.
pub fn count_communities(g: &AffiliationGraph) -> Result<usize> {
    if g.num_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(greedy_modularity_communities(&g.unified_adjacency()).len())
}

pub const METRIC_NAMES: [&str; 18] = [
    "degree_mean_indiv",
    "degree_std_indiv",
    "degree_mean_club",
    "degree_std_club",
    "num_connected_components",
    "num_communities",
    "bipartite_density",
    "prop_largest_cc",
    "avg_shortest_path_largest_cc",
    "diameter_largest_cc",
    "avg_size_rest_components",
    "rmae_all_clubs",
    "rmae_top10_clubs",
    "comembership_density",
    "comembership_avg_clustering",
    "club_projection_density",
    "club_projection_avg_clustering",
    "num_nodes",
];

/// Every downstream metric for one graph. `None` marks a metric that is
/// undefined for this graph (serialized as `null`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSuite {
    pub degree_mean_indiv: Option<f64>,
    pub degree_std_indiv: Option<f64>,
    pub degree_mean_club: Option<f64>,
    pub degree_std_club: Option<f64>,
    pub num_connected_components: usize,
    pub num_communities: Option<usize>,
    pub bipartite_density: Option<f64>,
    pub prop_largest_cc: f64,
    pub avg_shortest_path_largest_cc: Option<f64>,
    pub diameter_largest_cc: Option<usize>,
    pub avg_size_rest_components: f64,
    pub rmae_all_clubs: Option<f64>,
    pub rmae_top10_clubs: Option<f64>,
    pub comembership_density: Option<f64>,
    pub comembership_avg_clustering: Option<f64>,
    pub club_projection_density: Option<f64>,
    pub club_projection_avg_clustering: Option<f64>,
    pub num_nodes: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub density_convention: DensityConvention,
}

impl MetricSuite {
    /// Computes the suite for `g`. RMAE fields need the truth graph and stay
    /// `None` without it.
    pub fn compute(g: &AffiliationGraph, truth: Option<&AffiliationGraph>, opts: &SuiteOptions) -> Result<Self> {
        let (num_cc, prop_largest, avg_rest) = component_metrics(g)?;
        let (dmi, dsi) = split(degree_stats(g, Partition::Indiv).ok());
        let (dmc, dsc) = split(degree_stats(g, Partition::Club).ok());
        let (diameter, aspl) = split(path_metrics(g).ok());
        let projection = |onto| {
            project(g, onto).ok().map(|p| {
                (
                    projection_density(&p, opts.density_convention).ok(),
                    Some(avg_clustering(&p)),
                )
            })
        };
        let (co_density, co_clust) = projection(Partition::Indiv).unwrap_or((None, None));
        let (club_density, club_clust) = projection(Partition::Club).unwrap_or((None, None));
        Ok(MetricSuite {
            degree_mean_indiv: dmi,
            degree_std_indiv: dsi,
            degree_mean_club: dmc,
            degree_std_club: dsc,
            num_connected_components: num_cc,
            num_communities: count_communities(g).ok(),
            bipartite_density: bipartite_density(g).ok(),
            prop_largest_cc: prop_largest,
            avg_shortest_path_largest_cc: aspl,
            diameter_largest_cc: diameter,
            avg_size_rest_components: avg_rest,
            rmae_all_clubs: truth.and_then(|t| rmae_club_degrees(t, g, RmaeScope::All).ok()),
            rmae_top10_clubs: truth.and_then(|t| rmae_club_degrees(t, g, RmaeScope::TopK(10)).ok()),
            comembership_density: co_density,
            comembership_avg_clustering: co_clust,
            club_projection_density: club_density,
            club_projection_avg_clustering: club_clust,
            num_nodes: g.num_nodes(),
        })
    }

    /// `(name, value)` for every field, in [`METRIC_NAMES`] order, integers
    /// widened to `f64`.
    pub fn values(&self) -> Vec<(&'static str, Option<f64>)> {
        let int = |v: usize| Some(v as f64);
        let vals = [
            self.degree_mean_indiv,
            self.degree_std_indiv,
            self.degree_mean_club,
            self.degree_std_club,
            int(self.num_connected_components),
            self.num_communities.map(|v| v as f64),
            self.bipartite_density,
            Some(self.prop_largest_cc),
            self.avg_shortest_path_largest_cc,
            self.diameter_largest_cc.map(|v| v as f64),
            Some(self.avg_size_rest_components),
            self.rmae_all_clubs,
            self.rmae_top10_clubs,
            self.comembership_density,
            self.comembership_avg_clustering,
            self.club_projection_density,
            self.club_projection_avg_clustering,
            int(self.num_nodes),
        ];
        METRIC_NAMES.into_iter().zip(vals).collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values()
            .into_iter()
            .find(|(n, _)| *n == name)
            .and_then(|(_, v)| v)
    }
}

fn split<A, B>(pair: Option<(A, B)>) -> (Option<A>, Option<B>) {
    match pair {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    }
}
