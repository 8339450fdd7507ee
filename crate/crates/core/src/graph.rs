//! Undirected simple graphs in compressed sparse row form.
//!
//! Nodes are dense indices `0..n`. The edge list keeps each undirected edge
//! once as `(u, v)` with `u < v`; self-loops never appear in it and are held
//! in a per-node bitmap instead. The CSR view lists, for every node, its
//! sorted neighbours plus the node itself when its self-loop bit is set.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    self_loops: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub component_count: usize,
    pub component_of: Vec<usize>,
}

impl ConnectivityReport {
    pub fn is_connected(&self) -> bool {
        self.component_count == 1
    }
}

/// Builds a simple undirected graph, dropping duplicates and self-loops.
pub fn build_graph(n: usize, raw_edges: &[(usize, usize)]) -> Result<Graph> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut edges = Vec::with_capacity(raw_edges.len());
    for &(u, v) in raw_edges {
        if u >= n || v >= n {
            return Err(Error::NodeOutOfRange { u, v, n });
        }
        if u != v {
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(Graph::assemble(n, edges, vec![false; n]))
}

impl Graph {
    /// `edges` must be sorted, deduplicated and oriented `u < v`.
    fn assemble(n: usize, edges: Vec<(usize, usize)>, self_loops: Vec<bool>) -> Graph {
        let mut counts = vec![0usize; n];
        for &(u, v) in &edges {
            counts[u] += 1;
            counts[v] += 1;
        }
        for (i, &looped) in self_loops.iter().enumerate() {
            if looped {
                counts[i] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let mut lists: Vec<Vec<usize>> = counts.iter().map(|&c| Vec::with_capacity(c)).collect();
        for &(u, v) in &edges {
            lists[u].push(v);
            lists[v].push(u);
        }
        for (i, &looped) in self_loops.iter().enumerate() {
            if looped {
                lists[i].push(i);
            }
        }
        let mut targets = Vec::with_capacity(*offsets.last().unwrap());
        for mut list in lists {
            list.sort_unstable();
            targets.extend(list);
        }
        Graph {
            n,
            edges,
            offsets,
            targets,
            self_loops,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Undirected non-loop edges, sorted, each as `(u, v)` with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Number of directed CSR entries (two per edge, one per self-loop).
    pub fn num_directed(&self) -> usize {
        self.targets.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Neighbours excluding `i` itself.
    pub fn proper_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors(i).iter().copied().filter(move |&j| j != i)
    }

    pub fn has_self_loop(&self, i: usize) -> bool {
        self.self_loops[i]
    }

    pub fn self_loops(&self) -> &[bool] {
        &self.self_loops
    }

    pub fn num_self_loops(&self) -> usize {
        self.self_loops.iter().filter(|&&b| b).count()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u == v {
            return self.self_loops[u];
        }
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Position of `(u, v)` in the CSR arrays, if present.
    pub fn directed_index(&self, u: usize, v: usize) -> Option<usize> {
        self.neighbors(u)
            .binary_search(&v)
            .ok()
            .map(|k| self.offsets[u] + k)
    }

    /// Degree counting a self-loop once.
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Degree ignoring any self-loop.
    pub fn simple_degree(&self, i: usize) -> usize {
        self.degree(i) - usize::from(self.self_loops[i])
    }

    pub fn check_node(&self, index: usize) -> Result<()> {
        if index < self.n {
            Ok(())
        } else {
            Err(Error::InvalidNode { index, n: self.n })
        }
    }

    /// Same edge set with self-loops on exactly `nodes`.
    pub fn with_self_loops_at(&self, nodes: &[usize]) -> Result<Graph> {
        let mut loops = vec![false; self.n];
        for &i in nodes {
            self.check_node(i)?;
            loops[i] = true;
        }
        Ok(Graph::assemble(self.n, self.edges.clone(), loops))
    }

    /// Same edge set without any self-loops.
    pub fn without_self_loops(&self) -> Graph {
        Graph::assemble(self.n, self.edges.clone(), vec![false; self.n])
    }

    /// Graph on the same nodes with the given edges removed and added.
    pub fn with_edge_changes(&self, removed: &[(usize, usize)], added: &[(usize, usize)]) -> Graph {
        let mut removed: Vec<_> = removed.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        removed.sort_unstable();
        let mut edges: Vec<_> = self
            .edges
            .iter()
            .copied()
            .filter(|e| removed.binary_search(e).is_err())
            .collect();
        edges.extend(
            added
                .iter()
                .filter(|(u, v)| u != v)
                .map(|&(u, v)| (u.min(v), u.max(v))),
        );
        edges.sort_unstable();
        edges.dedup();
        Graph::assemble(self.n, edges, self.self_loops.clone())
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::Shape(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.n
            )));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
            seen[p] = true;
        }
        let mut edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (perm[u], perm[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        let mut loops = vec![false; self.n];
        for (i, &l) in self.self_loops.iter().enumerate() {
            loops[perm[i]] = l;
        }
        Ok(Graph::assemble(self.n, edges, loops))
    }

    /// Induced subgraph on `nodes` (in the given order), returned with the
    /// kept node ids.
    pub fn induced(&self, nodes: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            index[v] = k;
        }
        let mut edges: Vec<_> = self
            .edges
            .iter()
            .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
            .map(|&(u, v)| {
                let (a, b) = (index[u], index[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        let loops = nodes.iter().map(|&v| self.self_loops[v]).collect();
        Graph::assemble(nodes.len(), edges, loops)
    }
}

pub fn degrees(g: &Graph) -> Vec<usize> {
    (0..g.n()).map(|i| g.degree(i)).collect()
}

/// Labels connected components by breadth-first search in node order.
pub fn connectivity(g: &Graph) -> ConnectivityReport {
    let mut component_of = vec![usize::MAX; g.n()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..g.n() {
        if component_of[start] != usize::MAX {
            continue;
        }
        component_of[start] = count;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if component_of[v] == usize::MAX {
                    component_of[v] = count;
                    queue.push_back(v);
                }
            }
        }
        count += 1;
    }
    ConnectivityReport {
        component_count: count,
        component_of,
    }
}

pub fn add_self_loops(g: &Graph) -> Graph {
    Graph::assemble(g.n, g.edges.clone(), vec![true; g.n])
}

/// Nodes of the largest connected component (lowest component id on ties),
/// in increasing order.
pub fn largest_component(g: &Graph) -> Vec<usize> {
    let report = connectivity(g);
    let mut sizes = vec![0usize; report.component_count];
    for &c in &report.component_of {
        sizes[c] += 1;
    }
    let mut best = 0;
    for (c, &s) in sizes.iter().enumerate() {
        if s > sizes[best] {
            best = c;
        }
    }
    (0..g.n())
        .filter(|&v| report.component_of[v] == best)
        .collect()
}
