//! Random network topologies: Erdős–Rényi graphs repaired to be connected,
//! with a designated set of entry nodes.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Undirected graph over dense node ids `0..node_count` plus entry nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    edges: BTreeSet<(usize, usize)>,
    entry_nodes: BTreeSet<usize>,
}

#[derive(Serialize, Deserialize)]
struct TopologyDoc {
    node_count: usize,
    edges: Vec<[usize; 2]>,
    entry_nodes: Vec<usize>,
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Topology {
    /// An edgeless graph with no entry nodes.
    pub fn empty(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::invalid("a topology needs at least one node"));
        }
        Ok(Self {
            node_count,
            edges: BTreeSet::new(),
            entry_nodes: BTreeSet::new(),
        })
    }

    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        entry_nodes: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut t = Self::empty(node_count)?;
        for (u, v) in edges {
            t.add_edge(u, v)?;
        }
        for e in entry_nodes {
            if e >= node_count {
                return Err(Error::invalid(format!("entry node {e} out of range")));
            }
            t.entry_nodes.insert(e);
        }
        Ok(t)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&ordered(u, v))
    }

    pub fn entry_nodes(&self) -> &BTreeSet<usize> {
        &self.entry_nodes
    }

    pub fn set_entry_nodes(&mut self, nodes: impl IntoIterator<Item = usize>) -> Result<()> {
        let nodes: BTreeSet<usize> = nodes.into_iter().collect();
        if let Some(&bad) = nodes.iter().find(|&&n| n >= self.node_count) {
            return Err(Error::invalid(format!("entry node {bad} out of range")));
        }
        self.entry_nodes = nodes;
        Ok(())
    }

    /// Adds an undirected edge; returns whether it was new.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        if u >= self.node_count || v >= self.node_count {
            return Err(Error::invalid(format!("edge ({u},{v}) out of range")));
        }
        if u == v {
            return Err(Error::invalid(format!("self-loop on node {u}")));
        }
        Ok(self.edges.insert(ordered(u, v)))
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.neighbors();
        let mut seen = vec![false; self.node_count];
        let mut out = Vec::new();
        for start in 0..self.node_count {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.node_count)?;
        Self::from_edges(
            self.node_count,
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])),
            self.entry_nodes.iter().map(|&e| perm[e]),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = TopologyDoc {
            node_count: self.node_count,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
            entry_nodes: self.entry_nodes.iter().copied().collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TopologyDoc = serde_json::from_str(text)?;
        Self::from_edges(
            doc.node_count,
            doc.edges.into_iter().map(|[u, v]| (u, v)),
            doc.entry_nodes,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::invalid("permutation length mismatch"));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::invalid("not a permutation"));
        }
    }
    Ok(())
}

/// G(n, p) followed by connectivity repair. Entry nodes are left empty.
pub fn generate_er_graph(n: usize, p: f64, rng: &mut Rng) -> Result<Topology> {
    let t = er_stage(n, p, rng)?;
    Ok(connect_components(t, rng))
}

/// The raw Erdős–Rényi stage without repair.
pub fn er_stage(n: usize, p: f64, rng: &mut Rng) -> Result<Topology> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("edge probability {p} outside [0,1]")));
    }
    let mut t = Topology::empty(n)?;
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(p) {
                t.edges.insert((u, v));
            }
        }
    }
    Ok(t)
}

/// Joins components pairwise at random until the graph is connected.
///
/// Each merge picks two distinct components uniformly and links a uniformly
/// chosen node of each, so exactly `components - 1` edges are added.
pub fn connect_components(mut graph: Topology, rng: &mut Rng) -> Topology {
    let mut comps = graph.components();
    while comps.len() > 1 {
        let i = rng.random_range(0..comps.len());
        let mut j = rng.random_range(0..comps.len() - 1);
        if j >= i {
            j += 1;
        }
        let u = comps[i][rng.random_range(0..comps[i].len())];
        let v = comps[j][rng.random_range(0..comps[j].len())];
        graph.edges.insert(ordered(u, v));
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let absorbed = comps.swap_remove(hi);
        comps[lo].extend(absorbed);
    }
    graph
}

/// Designates a uniformly random `count`-subset of nodes as entry nodes.
pub fn select_entry_nodes(mut graph: Topology, count: usize, rng: &mut Rng) -> Result<Topology> {
    if count == 0 || count > graph.node_count {
        return Err(Error::invalid(format!(
            "entry count {count} must be in 1..={}",
            graph.node_count
        )));
    }
    graph.entry_nodes = index::sample(rng, graph.node_count, count).into_iter().collect();
    Ok(graph)
}
