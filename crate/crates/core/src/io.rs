//! File formats.
//!
//! Graph JSON: `{"n": 4, "edges": [[0, 1], [1, 2]], "self_loops": [0, 3]}`
//! (`self_loops` optional). Edge-list text: one `u v` pair per line separated
//! by whitespace; `#` starts a comment; a `# nodes: N` line fixes the node
//! count, which otherwise is one more than the largest index.
//!
//! Dataset JSON adds `labels`, `num_classes`, `features` (one row per node),
//! `split` (`train`/`val`/`test` node lists) and an optional `meta` object
//! describing the generator run. A labeled graph is a dataset file read
//! without its features and split.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph};
use crate::metrics::LabeledGraph;
use crate::synth::{NodeDataset, Split, SynthMeta};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    self_loops: Vec<usize>,
}

impl GraphFile {
    fn from_graph(g: &Graph) -> Self {
        GraphFile {
            n: g.n(),
            edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
            self_loops: (0..g.n()).filter(|&i| g.has_self_loop(i)).collect(),
        }
    }

    fn into_graph(self) -> Result<Graph> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = build_graph(self.n, &edges)?;
        if self.self_loops.is_empty() {
            Ok(g)
        } else {
            g.with_self_loops_at(&self.self_loops)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetFile {
    #[serde(flatten)]
    graph: GraphFile,
    labels: Vec<usize>,
    #[serde(default)]
    num_classes: Option<usize>,
    #[serde(default)]
    features: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    split: Option<Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<SynthMeta>,
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn graph_to_json(g: &Graph) -> Result<String> {
    to_pretty(&GraphFile::from_graph(g))
}

pub fn graph_from_json(text: &str) -> Result<Graph> {
    serde_json::from_str::<GraphFile>(text)
        .map_err(|e| Error::Format(format!("graph JSON: {e}")))?
        .into_graph()
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let (body, comment) = match line.find('#') {
            Some(k) => (&line[..k], Some(&line[k + 1..])),
            None => (line, None),
        };
        if let Some(c) = comment {
            if let Some(rest) = c.trim().strip_prefix("nodes:") {
                let n = rest
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Format(format!("line {}: node count: {e}", lineno + 1)))?;
                declared = Some(n);
            }
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        match fields.as_slice() {
            [] => continue,
            [u, v] => {
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| Error::Format(format!("line {}: '{s}': {e}", lineno + 1)))
                };
                edges.push((parse(u)?, parse(v)?));
            }
            _ => {
                return Err(Error::Format(format!(
                    "line {}: expected two node ids, found {}",
                    lineno + 1,
                    fields.len()
                )))
            }
        }
    }
    let inferred = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    build_graph(declared.unwrap_or(inferred), &edges)
}

pub fn edge_list_to_string(g: &Graph) -> String {
    let mut out = format!("# nodes: {}\n", g.n());
    for &(u, v) in g.edges() {
        out.push_str(&format!("{u}\t{v}\n"));
    }
    out
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// Reads a graph from JSON (`.json`) or an edge list (any other extension).
/// A dataset file is accepted too; its extra fields are ignored.
pub fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path)?;
    if is_json(path) {
        graph_from_json(&text)
    } else {
        parse_edge_list(&text)
    }
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    let text = if is_json(path) {
        graph_to_json(g)?
    } else {
        edge_list_to_string(g)
    };
    fs::write(path, text)?;
    Ok(())
}

fn parse_dataset_file(text: &str) -> Result<DatasetFile> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("dataset JSON: {e}")))
}

pub fn labeled_graph_from_json(text: &str) -> Result<LabeledGraph> {
    let f = parse_dataset_file(text)?;
    LabeledGraph::new(f.graph.into_graph()?, f.labels, f.num_classes)
}

pub fn read_labeled_graph(path: &Path) -> Result<LabeledGraph> {
    labeled_graph_from_json(&fs::read_to_string(path)?)
}

pub fn dataset_to_json(d: &NodeDataset) -> Result<String> {
    to_pretty(&DatasetFile {
        graph: GraphFile::from_graph(&d.graph),
        labels: d.labels.clone(),
        num_classes: Some(d.num_classes),
        features: Some(d.features.outer_iter().map(|r| r.to_vec()).collect()),
        split: Some(d.split.clone()),
        meta: d.meta.clone(),
    })
}

pub fn dataset_from_json(text: &str) -> Result<NodeDataset> {
    let f = parse_dataset_file(text)?;
    let graph = f.graph.into_graph()?;
    let n = graph.n();
    let rows = f
        .features
        .ok_or_else(|| Error::Format("dataset JSON: missing 'features'".into()))?;
    let dim = rows.first().map_or(0, Vec::len);
    if rows.len() != n || rows.iter().any(|r| r.len() != dim) || dim == 0 {
        return Err(Error::Format(format!(
            "dataset JSON: features must be {n} rows of equal, non-zero width"
        )));
    }
    let features = Array2::from_shape_vec((n, dim), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Format(format!("dataset JSON: {e}")))?;
    let num_classes = f
        .num_classes
        .unwrap_or_else(|| f.labels.iter().max().map_or(0, |m| m + 1));
    let d = NodeDataset {
        graph,
        labels: f.labels,
        num_classes,
        features,
        split: f
            .split
            .ok_or_else(|| Error::Format("dataset JSON: missing 'split'".into()))?,
        meta: f.meta,
    };
    d.validate()?;
    Ok(d)
}

pub fn read_dataset(path: &Path) -> Result<NodeDataset> {
    dataset_from_json(&fs::read_to_string(path)?)
}

pub fn write_dataset(path: &Path, d: &NodeDataset) -> Result<()> {
    fs::write(path, dataset_to_json(d)?)?;
    Ok(())
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_pretty(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn edge_list_parsing() {
        let g = parse_edge_list("# a comment\n0 1\n1\t2 # trailing\n\n2 1\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        let g = parse_edge_list("# nodes: 5\n0 1\n").unwrap();
        assert_eq!(g.n(), 5);
        assert!(matches!(parse_edge_list("0 1 2\n"), Err(Error::Format(_))));
        assert!(matches!(parse_edge_list("0 x\n"), Err(Error::Format(_))));
    }

    #[test]
    fn graph_json_round_trip_is_byte_stable() {
        let g = build_graph(4, &[(0, 1), (2, 1), (3, 0)])
            .unwrap()
            .with_self_loops_at(&[2])
            .unwrap();
        let text = graph_to_json(&g).unwrap();
        let back = graph_from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(graph_to_json(&back).unwrap(), text);
        assert_eq!(
            parse_edge_list(&edge_list_to_string(&g.without_self_loops())).unwrap(),
            g.without_self_loops()
        );
    }

    #[test]
    fn dataset_round_trip_is_byte_stable() {
        let d = generate(&SynthConfig {
            n: 30,
            classes: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let text = dataset_to_json(&d).unwrap();
        let back = dataset_from_json(&text).unwrap();
        assert_eq!(back.features, d.features);
        assert_eq!(dataset_to_json(&back).unwrap(), text);
        let lg = labeled_graph_from_json(&text).unwrap();
        assert_eq!(lg.labels, d.labels);
    }

    #[test]
    fn malformed_json_is_named() {
        let err = graph_from_json("{\"n\": 2}").unwrap_err();
        assert!(err.to_string().contains("graph JSON"));
        assert!(dataset_from_json("{\"n\": 2, \"edges\": [], \"labels\": [0, 1]}").is_err());
    }
}
