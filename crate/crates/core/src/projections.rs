//! One-mode projections of an affiliation graph: the comembership network
//! over individuals and the shared-member network over clubs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AffiliationGraph, Partition};

/// How projection density counts possible edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityConvention {
    /// `2|E| / (|V|(|V|-1))`, the usual undirected density.
    #[default]
    Standard,
    /// `|E| / (|V|(|V|-1))`, counting ordered pairs.
    Paper,
}

/// Unweighted simple graph on one partition of the source graph. Every node
/// of that partition is kept, including ones with no projected edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionGraph {
    partition: Partition,
    nodes: Vec<String>,
    adj: Vec<Vec<usize>>,
    num_edges: usize,
}

impl ProjectionGraph {
    pub fn from_edges(partition: Partition, nodes: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); nodes.len()];
        for &(u, v) in edges {
            if u == v || u >= nodes.len() || v >= nodes.len() {
                return Err(Error::InvalidGraph(format!("bad projection edge [{u}, {v}]")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        let num_edges = adj.iter().map(Vec::len).sum::<usize>() / 2;
        Ok(ProjectionGraph {
            partition,
            nodes,
            adj,
            num_edges,
        })
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn to_document(&self) -> ProjectionDocument {
        ProjectionDocument {
            partition: self.partition,
            nodes: self.nodes.clone(),
            edges: self.edges().map(|(u, v)| [u, v]).collect(),
        }
    }

    pub fn from_document(doc: ProjectionDocument) -> Result<Self> {
        let edges: Vec<(usize, usize)> = doc.edges.iter().map(|&[u, v]| (u, v)).collect();
        Self::from_edges(doc.partition, doc.nodes, &edges)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionDocument {
    pub partition: Partition,
    pub nodes: Vec<String>,
    pub edges: Vec<[usize; 2]>,
}

/// Connects two nodes of `onto` iff they share at least one neighbour in the
/// other partition.
pub fn project(g: &AffiliationGraph, onto: Partition) -> Result<ProjectionGraph> {
    let n = g.partition_len(onto);
    if n == 0 {
        return Err(Error::EmptyPartition(onto));
    }
    let via = onto.other();
    let adj: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut ns: Vec<usize> = g
                .neighbors(onto, u)
                .iter()
                .flat_map(|&w| g.neighbors(via, w).iter().copied())
                .filter(|&v| v != u)
                .collect();
            ns.sort_unstable();
            ns.dedup();
            ns
        })
        .collect();
    let num_edges = adj.iter().map(Vec::len).sum::<usize>() / 2;
    Ok(ProjectionGraph {
        partition: onto,
        nodes: g.labels(onto).to_vec(),
        adj,
        num_edges,
    })
}

pub fn projection_density(p: &ProjectionGraph, convention: DensityConvention) -> Result<f64> {
    let n = p.num_nodes();
    if n < 2 {
        return Err(Error::DegenerateGraph);
    }
    let factor = match convention {
        DensityConvention::Standard => 2.0,
        DensityConvention::Paper => 1.0,
    };
    Ok(factor * p.num_edges() as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// Local clustering `2T(v) / (deg(v)(deg(v)-1))`, zero when `deg(v) < 2`.
pub fn local_clustering(p: &ProjectionGraph) -> Vec<f64> {
    (0..p.num_nodes())
        .into_par_iter()
        .map(|v| {
            let ns = p.neighbors(v);
            let d = ns.len();
            if d < 2 {
                return 0.0;
            }
            let mut triangles = 0usize;
            for (k, &u) in ns.iter().enumerate() {
                // Count neighbours w of v with w > u that are adjacent to u
                // by merging the two sorted lists.
                let (mut a, mut b) = (&ns[k + 1..], p.neighbors(u));
                while let (Some(&x), Some(&y)) = (a.first(), b.first()) {
                    match x.cmp(&y) {
                        std::cmp::Ordering::Less => a = &a[1..],
                        std::cmp::Ordering::Greater => b = &b[1..],
                        std::cmp::Ordering::Equal => {
                            triangles += 1;
                            a = &a[1..];
                            b = &b[1..];
                        }
                    }
                }
            }
            2.0 * triangles as f64 / (d as f64 * (d as f64 - 1.0))
        })
        .collect()
}

/// Mean local clustering over all nodes; nodes of degree < 2 contribute 0.
pub fn avg_clustering(p: &ProjectionGraph) -> f64 {
    let local = local_clustering(p);
    if local.is_empty() {
        return 0.0;
    }
    local.iter().sum::<f64>() / local.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::g0;
    use crate::graph::GraphBuilder;

    fn simple(n: usize, edges: &[(usize, usize)]) -> ProjectionGraph {
        let nodes = (0..n).map(|i| format!("n{i}")).collect();
        ProjectionGraph::from_edges(Partition::Indiv, nodes, edges).unwrap()
    }

    #[test]
    fn project_g0() {
        let p = project(&g0(), Partition::Indiv).unwrap();
        assert_eq!(p.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        let c = project(&g0(), Partition::Club).unwrap();
        assert_eq!(c.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn star_projects_to_clique() {
        let mut b = GraphBuilder::new();
        for k in 0..5 {
            b.add_edge("hub", format!("leaf{k}"));
        }
        let p = project(&b.build(), Partition::Club).unwrap();
        assert_eq!(p.num_edges(), 10);
        assert_eq!(projection_density(&p, DensityConvention::Standard).unwrap(), 1.0);
    }

    #[test]
    fn empty_partition() {
        let mut b = GraphBuilder::new();
        b.add_node(Partition::Indiv, "a");
        assert!(matches!(
            project(&b.build(), Partition::Club),
            Err(Error::EmptyPartition(Partition::Club))
        ));
    }

    #[test]
    fn densities() {
        let k4 = simple(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(projection_density(&k4, DensityConvention::Standard).unwrap(), 1.0);
        assert_eq!(projection_density(&k4, DensityConvention::Paper).unwrap(), 0.5);
        let p = project(&g0(), Partition::Indiv).unwrap();
        assert_eq!(projection_density(&p, DensityConvention::Standard).unwrap(), 2.0 / 3.0);
        assert_eq!(projection_density(&simple(3, &[]), DensityConvention::Standard).unwrap(), 0.0);
        assert!(matches!(
            projection_density(&simple(1, &[]), DensityConvention::Standard),
            Err(Error::DegenerateGraph)
        ));
    }

    #[test]
    fn clustering() {
        assert_eq!(avg_clustering(&simple(3, &[(0, 1), (1, 2), (0, 2)])), 1.0);
        assert_eq!(avg_clustering(&simple(3, &[(0, 1), (1, 2)])), 0.0);
        // K4 minus the edge (2, 3).
        let k4_minus = simple(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(local_clustering(&k4_minus), vec![2.0 / 3.0, 2.0 / 3.0, 1.0, 1.0]);
        assert!((avg_clustering(&k4_minus) - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn document_round_trip() {
        let p = project(&g0(), Partition::Indiv).unwrap();
        let doc = p.to_document();
        assert_eq!(doc.partition, Partition::Indiv);
        assert_eq!(ProjectionGraph::from_document(doc).unwrap(), p);
    }
}
