//! Entity graphs: nodes with pixel positions, model features and concept
//! attributes, plus the thresholded kNN topology that connects them.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single node of a cell-graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    /// Centroid in pixels.
    #[serde(rename = "pos")]
    pub position: [f64; 2],
    /// Centroid scaled into the unit square by [`normalize_positions`].
    #[serde(skip)]
    pub normalized_position: Option<[f64; 2]>,
    /// Model input row.
    pub features: Vec<f64>,
    /// Named concept attributes (area, perimeter, ...).
    #[serde(default)]
    pub attributes: BTreeMap<String, f64>,
}

impl NodeRecord {
    pub fn new(position: [f64; 2], features: Vec<f64>) -> Self {
        Self {
            position,
            normalized_position: None,
            features,
            attributes: BTreeMap::new(),
        }
    }
}

/// Attributed undirected graph `G = (V, E, H)`.
///
/// Edges are stored once as `(u, v)` with `u < v`; the neighbour lists are
/// derived from them and kept sorted so that iteration order never depends on
/// insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphWire", into = "GraphWire")]
pub struct EntityGraph {
    nodes: Vec<NodeRecord>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    pub label: Option<usize>,
}

impl EntityGraph {
    /// Builds a graph, canonicalising the edge list (`u < v`, sorted).
    ///
    /// Self-loops, out-of-range endpoints and duplicate edges are rejected.
    pub fn new(
        nodes: Vec<NodeRecord>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        label: Option<usize>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidInput(
                "graph must have at least one node".into(),
            ));
        }
        let n = nodes.len();
        let mut canonical = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop on node {u}")));
            }
            if !canonical.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidInput(format!("duplicate edge ({u}, {v})")));
            }
        }
        let edges: Vec<_> = canonical.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self {
            nodes,
            edges,
            neighbors,
            label,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [NodeRecord] {
        &mut self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbour indices `N(v)`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn feature_dim(&self) -> usize {
        self.nodes[0].features.len()
    }

    /// Dense symmetric 0/1 adjacency matrix with zero diagonal.
    pub fn adjacency(&self) -> Array2<u8> {
        let n = self.num_nodes();
        let mut a = Array2::zeros((n, n));
        for &(u, v) in &self.edges {
            a[[u, v]] = 1;
            a[[v, u]] = 1;
        }
        a
    }

    /// Node feature matrix `H` (|V| x d).
    pub fn feature_matrix(&self) -> Result<Array2<f64>> {
        let d = self.feature_dim();
        let mut h = Array2::zeros((self.num_nodes(), d));
        for (i, node) in self.nodes.iter().enumerate() {
            if node.features.len() != d {
                return Err(Error::shape(
                    format!("{d} features"),
                    format!("{} features on node {i}", node.features.len()),
                ));
            }
            for (j, &x) in node.features.iter().enumerate() {
                h[[i, j]] = x;
            }
        }
        Ok(h)
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.nodes.iter().map(|n| n.position).collect()
    }

    /// Relabels nodes so that old node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidInput(
                "not a permutation of the node set".into(),
            ));
        }
        let mut nodes = self.nodes.clone();
        for (old, node) in self.nodes.iter().enumerate() {
            nodes[perm[old]] = node.clone();
        }
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v]));
        Self::new(nodes, edges, self.label)
    }

    /// Copy of the graph with every edge incident to `v` removed.
    pub fn isolate(&self, v: usize) -> Self {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(a, b)| a != v && b != v);
        Self::new(self.nodes.clone(), edges, self.label).expect("subset of valid edges")
    }

    fn validate_finite(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            let finite = node.position.iter().all(|x| x.is_finite())
                && node.features.iter().all(|x| x.is_finite())
                && node.attributes.values().all(|x| x.is_finite());
            if !finite {
                return Err(Error::InvalidInput(format!("non-finite value on node {i}")));
            }
        }
        Ok(())
    }
}

/// On-disk form of a graph: one JSON object per line.
#[derive(Serialize, Deserialize)]
struct GraphWire {
    label: Option<usize>,
    nodes: Vec<NodeRecord>,
    #[serde(default)]
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphWire> for EntityGraph {
    type Error = Error;

    fn try_from(w: GraphWire) -> Result<Self> {
        let g = EntityGraph::new(w.nodes, w.edges.into_iter().map(|[u, v]| (u, v)), w.label)?;
        g.validate_finite()?;
        Ok(g)
    }
}

impl From<EntityGraph> for GraphWire {
    fn from(g: EntityGraph) -> Self {
        Self {
            label: g.label,
            edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
            nodes: g.nodes,
        }
    }
}

/// Ordered class names and the fixed list of unordered class pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSet {
    names: Vec<String>,
}

impl ClassSet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidInput("class set is empty".into()));
        }
        let unique: BTreeSet<_> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::InvalidInput("class names must be unique".into()));
        }
        Ok(Self { names })
    }

    /// Classes named `"0"`, `"1"`, ...
    pub fn numbered(n: usize) -> Self {
        Self {
            names: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class: usize) -> &str {
        &self.names[class]
    }

    /// All unordered pairs `(x, y)` with `x < y`, lexicographic by index.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.names.len();
        (0..n)
            .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
            .collect()
    }

    /// Display key used in reports and prior files, e.g. `benign-malignant`.
    pub fn pair_key(&self, pair: (usize, usize)) -> String {
        format!("{}-{}", self.names[pair.0], self.names[pair.1])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Parameters of the thresholded kNN topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    pub max_dist: f64,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self {
            k: 5,
            max_dist: 50.0,
        }
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Indices of the `k` nearest other points to `positions[i]`, nearest first.
/// Equal distances are resolved in favour of the lower index.
pub(crate) fn nearest_neighbors(positions: &[[f64; 2]], i: usize, k: usize) -> Vec<(usize, f64)> {
    let mut cand: Vec<(usize, f64)> = positions
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, &p)| (j, distance(positions[i], p)))
        .collect();
    let by_dist = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    if k < cand.len() {
        cand.select_nth_unstable_by(k, by_dist);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_dist);
    cand
}

/// Thresholded kNN edge set: every node links to its `k` nearest neighbours
/// that lie within `max_dist`, and the directed selections are merged by
/// union into undirected edges.
pub fn build_knn_edges(positions: &[[f64; 2]], params: KnnParams) -> Result<Vec<(usize, usize)>> {
    if positions.is_empty() {
        return Err(Error::InvalidInput("no positions to connect".into()));
    }
    if params.k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if !(params.max_dist > 0.0) {
        return Err(Error::InvalidInput("max_dist must be positive".into()));
    }
    if positions.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite position".into()));
    }
    let mut edges = BTreeSet::new();
    for i in 0..positions.len() {
        for (j, d) in nearest_neighbors(positions, i, params.k) {
            if d <= params.max_dist {
                edges.insert((i.min(j), i.max(j)));
            }
        }
    }
    Ok(edges.into_iter().collect())
}

/// Replaces the topology of `graph` with the thresholded kNN graph over its
/// pixel positions.
pub fn build_knn_graph(graph: &EntityGraph, params: KnnParams) -> Result<EntityGraph> {
    let edges = build_knn_edges(&graph.positions(), params)?;
    EntityGraph::new(graph.nodes.clone(), edges, graph.label)
}

/// Scales centroids by the RoI dimensions; pixel positions are kept.
pub fn normalize_positions(
    graph: &EntityGraph,
    roi_width: f64,
    roi_height: f64,
) -> Result<EntityGraph> {
    if !(roi_width > 0.0 && roi_height > 0.0) {
        return Err(Error::InvalidInput(format!(
            "RoI dimensions must be positive, got {roi_width}x{roi_height}"
        )));
    }
    let mut out = graph.clone();
    for node in &mut out.nodes {
        let [x, y] = node.position;
        node.normalized_position = Some([x / roi_width, y / roi_height]);
    }
    Ok(out)
}

/// Per-attribute value range observed across a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeNormalization {
    pub ranges: BTreeMap<String, (f64, f64)>,
    pub warnings: Vec<String>,
}

/// Min-max scales every named attribute to `[0, 1]` over all nodes of all
/// graphs. Constant attributes collapse to 0 and are reported in `warnings`.
pub fn normalize_attributes_dataset(graphs: &mut [EntityGraph]) -> Result<AttributeNormalization> {
    let names: Vec<String> = graphs
        .iter()
        .flat_map(|g| g.nodes.first())
        .map(|n| n.attributes.keys().cloned().collect())
        .next()
        .ok_or_else(|| Error::Schema("dataset has no nodes".into()))?;

    let mut ranges: BTreeMap<String, (f64, f64)> = names
        .iter()
        .map(|n| (n.clone(), (f64::INFINITY, f64::NEG_INFINITY)))
        .collect();
    for (gi, g) in graphs.iter().enumerate() {
        for (ni, node) in g.nodes.iter().enumerate() {
            if node.attributes.len() != names.len() {
                return Err(Error::Schema(format!(
                    "graph {gi} node {ni} has {} attributes, expected {}",
                    node.attributes.len(),
                    names.len()
                )));
            }
            for name in &names {
                let v = *node.attributes.get(name).ok_or_else(|| {
                    Error::Schema(format!(
                        "graph {gi} node {ni} is missing attribute `{name}`"
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::Schema(format!(
                        "graph {gi} node {ni}: attribute `{name}` is not finite"
                    )));
                }
                let r = ranges.get_mut(name).expect("known name");
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
    }

    let mut warnings = Vec::new();
    for (name, &(lo, hi)) in &ranges {
        if hi <= lo {
            let msg = format!("attribute `{name}` is constant ({lo}); mapped to 0");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    for g in graphs.iter_mut() {
        for node in &mut g.nodes {
            for (name, v) in node.attributes.iter_mut() {
                let (lo, hi) = ranges[name];
                *v = if hi > lo {
                    ((*v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
    }
    Ok(AttributeNormalization { ranges, warnings })
}
