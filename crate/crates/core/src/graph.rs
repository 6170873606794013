//! Bipartite affiliation graph: individuals on one side, clubs on the other,
//! a single undirected membership relation between them.
//!
//! Node labels are kept sorted within each partition and edges are stored as
//! sorted `(indiv index, club index)` pairs, so every iteration order in the
//! crate is deterministic. Many algorithms work on a "unified" index space
//! where individual `i` is node `i` and club `j` is node `num_indiv + j`;
//! that order coincides with the `NodeId` ordering (individuals first, then
//! clubs, each by label).

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::{normalize_label, NormalizationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Indiv,
    Club,
}

impl Partition {
    pub fn other(self) -> Partition {
        match self {
            Partition::Indiv => Partition::Club,
            Partition::Club => Partition::Indiv,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Indiv => "indiv",
            Partition::Club => "club",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A node is identified by its partition and its normalized label. The same
/// string may appear once in each partition as two distinct nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub partition: Partition,
    pub label: String,
}

impl NodeId {
    pub fn indiv(label: impl Into<String>) -> Self {
        NodeId {
            partition: Partition::Indiv,
            label: label.into(),
        }
    }

    pub fn club(label: impl Into<String>) -> Self {
        NodeId {
            partition: Partition::Club,
            label: label.into(),
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.partition, self.label)
    }
}

/// One `<person, relation, club>` record as produced by an extractor or an
/// annotator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeTuple {
    pub person: String,
    #[serde(default = "default_relation")]
    pub relation: String,
    pub club: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

fn default_relation() -> String {
    "member".to_owned()
}

impl EdgeTuple {
    pub fn new(person: impl Into<String>, club: impl Into<String>) -> Self {
        EdgeTuple {
            person: person.into(),
            relation: default_relation(),
            club: club.into(),
            line: None,
        }
    }

    pub fn with_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

/// Accumulates labelled nodes and edges, then freezes them into an
/// [`AffiliationGraph`].
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    indiv: BTreeSet<String>,
    club: BTreeSet<String>,
    edges: BTreeSet<(String, String)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, partition: Partition, label: impl Into<String>) -> &mut Self {
        match partition {
            Partition::Indiv => self.indiv.insert(label.into()),
            Partition::Club => self.club.insert(label.into()),
        };
        self
    }

    pub fn add_edge(&mut self, indiv: impl Into<String>, club: impl Into<String>) -> &mut Self {
        let (indiv, club) = (indiv.into(), club.into());
        self.indiv.insert(indiv.clone());
        self.club.insert(club.clone());
        self.edges.insert((indiv, club));
        self
    }

    pub fn build(self) -> AffiliationGraph {
        let indiv: Vec<String> = self.indiv.into_iter().collect();
        let club: Vec<String> = self.club.into_iter().collect();
        let edges = self
            .edges
            .iter()
            .map(|(p, c)| {
                let i = indiv.binary_search(p).expect("edge endpoint registered");
                let j = club.binary_search(c).expect("edge endpoint registered");
                (i, j)
            })
            .collect();
        AffiliationGraph::from_sorted_parts(indiv, club, edges)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffiliationGraph {
    indiv: Vec<String>,
    club: Vec<String>,
    edges: Vec<(usize, usize)>,
    indiv_adj: Vec<Vec<usize>>,
    club_adj: Vec<Vec<usize>>,
}

impl AffiliationGraph {
    /// Assembles a graph from already sorted, unique labels and sorted,
    /// unique, in-range edges.
    fn from_sorted_parts(indiv: Vec<String>, club: Vec<String>, edges: Vec<(usize, usize)>) -> Self {
        let mut indiv_adj = vec![Vec::new(); indiv.len()];
        let mut club_adj = vec![Vec::new(); club.len()];
        for &(i, j) in &edges {
            indiv_adj[i].push(j);
            club_adj[j].push(i);
        }
        for adj in club_adj.iter_mut() {
            adj.sort_unstable();
        }
        AffiliationGraph {
            indiv,
            club,
            edges,
            indiv_adj,
            club_adj,
        }
    }

    /// Validating constructor used for deserialized documents. Labels must be
    /// non-empty, strictly increasing, and edges must reference valid indices.
    /// Duplicate edges are collapsed.
    pub fn from_parts(indiv: Vec<String>, club: Vec<String>, edges: Vec<(usize, usize)>) -> Result<Self> {
        for (name, labels) in [("indiv", &indiv), ("club", &club)] {
            if labels.iter().any(|l| l.is_empty()) {
                return Err(Error::InvalidGraph(format!("empty {name} label")));
            }
            if labels.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGraph(format!(
                    "{name} labels must be sorted and unique"
                )));
            }
        }
        if let Some(&(i, j)) = edges
            .iter()
            .find(|&&(i, j)| i >= indiv.len() || j >= club.len())
        {
            return Err(Error::InvalidGraph(format!("edge [{i}, {j}] out of range")));
        }
        let mut edges = edges;
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_sorted_parts(indiv, club, edges))
    }

    pub fn num_indiv(&self) -> usize {
        self.indiv.len()
    }

    pub fn num_club(&self) -> usize {
        self.club.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.indiv.len() + self.club.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn partition_len(&self, partition: Partition) -> usize {
        self.labels(partition).len()
    }

    /// Sorted labels of one partition.
    pub fn labels(&self, partition: Partition) -> &[String] {
        match partition {
            Partition::Indiv => &self.indiv,
            Partition::Club => &self.club,
        }
    }

    pub fn index_of(&self, partition: Partition, label: &str) -> Option<usize> {
        self.labels(partition)
            .binary_search_by(|l| l.as_str().cmp(label))
            .ok()
    }

    pub fn contains_node(&self, node: &NodeId) -> bool {
        self.index_of(node.partition, &node.label).is_some()
    }

    /// Sorted `(indiv index, club index)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn contains_edge(&self, indiv: usize, club: usize) -> bool {
        self.edges.binary_search(&(indiv, club)).is_ok()
    }

    pub fn edge_labels(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges
            .iter()
            .map(|&(i, j)| (self.indiv[i].as_str(), self.club[j].as_str()))
    }

    /// Neighbour indices (into the opposite partition) of a node, ascending.
    pub fn neighbors(&self, partition: Partition, index: usize) -> &[usize] {
        match partition {
            Partition::Indiv => &self.indiv_adj[index],
            Partition::Club => &self.club_adj[index],
        }
    }

    pub fn degree_at(&self, partition: Partition, index: usize) -> usize {
        self.neighbors(partition, index).len()
    }

    pub fn degrees(&self, partition: Partition) -> Vec<usize> {
        (0..self.partition_len(partition))
            .map(|i| self.degree_at(partition, i))
            .collect()
    }

    pub fn degree(&self, node: &NodeId) -> Result<usize> {
        self.index_of(node.partition, &node.label)
            .map(|i| self.degree_at(node.partition, i))
            .ok_or_else(|| Error::NodeNotFound {
                partition: node.partition,
                label: node.label.clone(),
            })
    }

    pub fn unified_index(&self, partition: Partition, index: usize) -> usize {
        match partition {
            Partition::Indiv => index,
            Partition::Club => self.indiv.len() + index,
        }
    }

    pub fn node_at(&self, unified: usize) -> NodeId {
        if unified < self.indiv.len() {
            NodeId::indiv(self.indiv[unified].clone())
        } else {
            NodeId::club(self.club[unified - self.indiv.len()].clone())
        }
    }

    /// Adjacency lists in the unified index space, each list ascending.
    pub fn unified_adjacency(&self) -> Vec<Vec<usize>> {
        let offset = self.indiv.len();
        let mut adj = Vec::with_capacity(self.num_nodes());
        adj.extend(
            self.indiv_adj
                .iter()
                .map(|ns| ns.iter().map(|&j| j + offset).collect::<Vec<_>>()),
        );
        adj.extend(self.club_adj.iter().cloned());
        adj
    }

    /// Connected components as unified indices, ordered by descending size,
    /// then by smallest member. Members within a component are ascending.
    pub fn component_indices(&self) -> Vec<Vec<usize>> {
        let adj = self.unified_adjacency();
        let n = adj.len();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut members = Vec::new();
            while let Some(u) = queue.pop_front() {
                members.push(u);
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        // Discovery order already ascends by smallest member; a stable sort
        // on size keeps that as the tie-break.
        components.sort_by_key(|c| std::cmp::Reverse(c.len()));
        components
    }

    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        self.component_indices()
            .into_iter()
            .map(|c| c.into_iter().map(|u| self.node_at(u)).collect())
            .collect()
    }

    /// One tuple per edge, in edge order.
    pub fn to_tuples(&self) -> Vec<EdgeTuple> {
        self.edge_labels()
            .map(|(p, c)| EdgeTuple::new(p, c))
            .collect()
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            indiv: self.indiv.clone(),
            club: self.club.clone(),
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }

    pub fn from_document(doc: GraphDocument) -> Result<Self> {
        let edges = doc.edges.into_iter().map(|[i, j]| (i, j)).collect();
        Self::from_parts(doc.indiv, doc.club, edges)
    }
}

/// On-disk graph form: sorted label arrays plus index pairs into them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub indiv: Vec<String>,
    pub club: Vec<String>,
    pub edges: Vec<[usize; 2]>,
}

/// Normalizes every tuple's endpoints and collapses repeats into a set of
/// edges. The relation field is not used.
pub fn build_graph(tuples: &[EdgeTuple], cfg: &NormalizationConfig) -> Result<AffiliationGraph> {
    if tuples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut builder = GraphBuilder::new();
    for (index, t) in tuples.iter().enumerate() {
        if t.person.trim().is_empty() || t.club.trim().is_empty() {
            return Err(Error::MalformedTuple { index });
        }
        let person = normalize_label(&t.person, cfg).map_err(|_| Error::MalformedTuple { index })?;
        let club = normalize_label(&t.club, cfg).map_err(|_| Error::MalformedTuple { index })?;
        builder.add_edge(person, club);
    }
    Ok(builder.build())
}
