//! Startup-investor multigraph and the symmetric renormalized adjacency.
//!
//! Companies that also invest occupy two distinct nodes. Parallel edges sum
//! into integer multiplicities, every node carries a self-loop, and investor
//! feature rows are all zero apart from the node-type indicator.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use ndarray::{Array2, ArrayView2, Axis};

use crate::features::{FeatureVector, FEATURE_COUNT};
use crate::ingest::{CompanyId, EntityStore, InvestorId, Sample};

/// Feature width: the assembled features plus a two-way node-type one-hot.
pub const NODE_FEATURE_COUNT: usize = FEATURE_COUNT + 2;

/// What a graph node stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeRef {
    Startup(CompanyId),
    Investor(InvestorId),
}

#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    pub nodes: Vec<NodeRef>,
    /// N x D node features.
    pub x: Array2<f64>,
    /// Undirected startup-investor edges (node, node, multiplicity);
    /// self-loops are implicit and added at normalization.
    pub edges: Vec<(u32, u32, f64)>,
    pub train_mask: Vec<bool>,
    pub eval_mask: Vec<bool>,
    /// Class per node; meaningful only where a mask is set.
    pub labels: Vec<u8>,
}

impl BipartiteGraph {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn startup_node(&self, company: &CompanyId) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| matches!(n, NodeRef::Startup(c) if c == company))
    }

    pub fn investor_node(&self, investor: &InvestorId) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| matches!(n, NodeRef::Investor(i) if i == investor))
    }

    /// Concatenate graphs into one block-diagonal graph; nodes keep their
    /// per-block features, masks, and labels, and no edges cross blocks.
    pub fn disjoint_union(graphs: Vec<BipartiteGraph>) -> BipartiteGraph {
        let total: usize = graphs.iter().map(|g| g.n_nodes()).sum();
        let d = graphs
            .first()
            .map(|g| g.x.ncols())
            .unwrap_or(NODE_FEATURE_COUNT);
        let mut x = Array2::<f64>::zeros((total, d));
        let mut nodes = Vec::with_capacity(total);
        let mut edges = Vec::new();
        let mut train_mask = Vec::with_capacity(total);
        let mut eval_mask = Vec::with_capacity(total);
        let mut labels = Vec::with_capacity(total);
        let mut offset = 0u32;
        let mut row = 0usize;
        for graph in graphs {
            for source_row in graph.x.axis_iter(Axis(0)) {
                x.row_mut(row).assign(&source_row);
                row += 1;
            }
            for &(i, j, w) in &graph.edges {
                edges.push((i + offset, j + offset, w));
            }
            offset += graph.n_nodes() as u32;
            nodes.extend(graph.nodes);
            train_mask.extend(graph.train_mask);
            eval_mask.extend(graph.eval_mask);
            labels.extend(graph.labels);
        }
        BipartiteGraph {
            nodes,
            x,
            edges,
            train_mask,
            eval_mask,
            labels,
        }
    }
}

/// Which mask the sampled startup nodes land in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskRole {
    Train,
    Eval,
}

/// Build the snapshot multigraph: every company founded by `as_of` becomes a
/// startup node (not only sampled ones), every backer of a round by `as_of`
/// an investor node. One edge per (round, investor) incidence.
///
/// `features` supplies the assembled row per startup; missing entries fall
/// back to zeros. Sampled startup nodes get mask + label entries under
/// `role`.
pub fn build_bipartite_graph(
    store: &EntityStore,
    samples: &[Sample],
    as_of: NaiveDate,
    features: &HashMap<CompanyId, FeatureVector>,
    role: MaskRole,
) -> BipartiteGraph {
    assert!(
        samples.iter().all(|s| s.as_of == as_of),
        "samples must share the graph's as_of"
    );

    let startup_ids: Vec<CompanyId> = store
        .companies()
        .iter()
        .filter(|c| c.founded_on <= as_of)
        .map(|c| c.id.clone())
        .collect();
    let startup_index: HashMap<&CompanyId, usize> = startup_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id, i))
        .collect();

    let mut investor_set: BTreeSet<InvestorId> = BTreeSet::new();
    for round in store.rounds() {
        if round.announced_on <= as_of {
            investor_set.extend(round.investor_ids.iter().cloned());
        }
    }
    let investor_ids: Vec<InvestorId> = investor_set.into_iter().collect();
    let investor_index: HashMap<&InvestorId, usize> = investor_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id, i))
        .collect();

    let n_startups = startup_ids.len();
    let n = n_startups + investor_ids.len();
    let mut x = Array2::<f64>::zeros((n, NODE_FEATURE_COUNT));
    for (i, id) in startup_ids.iter().enumerate() {
        if let Some(row) = features.get(id) {
            for (k, &v) in row.values.iter().enumerate() {
                x[[i, k]] = v;
            }
        }
        x[[i, FEATURE_COUNT]] = 1.0;
    }
    for i in 0..investor_ids.len() {
        x[[n_startups + i, FEATURE_COUNT + 1]] = 1.0;
    }

    let mut multiplicity: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for round in store.rounds() {
        if round.announced_on > as_of {
            continue;
        }
        let Some(&s) = startup_index.get(&round.company_id) else {
            continue;
        };
        for investor in &round.investor_ids {
            let inv_node = (n_startups + investor_index[investor]) as u32;
            *multiplicity.entry((s as u32, inv_node)).or_insert(0.0) += 1.0;
        }
    }
    let edges: Vec<(u32, u32, f64)> = multiplicity
        .into_iter()
        .map(|((i, j), w)| (i, j, w))
        .collect();

    let mut train_mask = vec![false; n];
    let mut eval_mask = vec![false; n];
    let mut labels = vec![0u8; n];
    for sample in samples {
        let node = startup_index[&sample.company_id];
        match role {
            MaskRole::Train => train_mask[node] = true,
            MaskRole::Eval => eval_mask[node] = true,
        }
        labels[node] = u8::from(sample.label);
    }

    let mut nodes: Vec<NodeRef> = startup_ids.into_iter().map(NodeRef::Startup).collect();
    nodes.extend(investor_ids.into_iter().map(NodeRef::Investor));

    BipartiteGraph {
        nodes,
        x,
        edges,
        train_mask,
        eval_mask,
        labels,
    }
}

/// Compressed sparse rows, symmetric.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub data: Vec<f64>,
}

impl CsrMatrix {
    pub fn matmul(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(self.n, x.nrows());
        let cols = x.ncols();
        let mut out = Array2::<f64>::zeros((self.n, cols));
        let mut acc = vec![0.0f64; cols];
        for i in 0..self.n {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k] as usize;
                let w = self.data[k];
                let row = x.row(j);
                for (a, &v) in acc.iter_mut().zip(row.iter()) {
                    *a += w * v;
                }
            }
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&acc[..]));
        }
        out
    }
}

/// The renormalized propagation matrix in either layout.
#[derive(Debug, Clone)]
pub enum NormalizedAdjacency {
    Dense(Array2<f64>),
    Sparse(CsrMatrix),
}

impl NormalizedAdjacency {
    pub fn n_nodes(&self) -> usize {
        match self {
            NormalizedAdjacency::Dense(a) => a.nrows(),
            NormalizedAdjacency::Sparse(c) => c.n,
        }
    }

    pub fn matmul(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        match self {
            NormalizedAdjacency::Dense(a) => a.dot(&x),
            NormalizedAdjacency::Sparse(c) => c.matmul(x),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            NormalizedAdjacency::Dense(a) => a.clone(),
            NormalizedAdjacency::Sparse(c) => {
                let mut out = Array2::<f64>::zeros((c.n, c.n));
                for i in 0..c.n {
                    for k in c.indptr[i]..c.indptr[i + 1] {
                        out[[i, c.indices[k] as usize]] = c.data[k];
                    }
                }
                out
            }
        }
    }
}

/// Matrix layout choice; `Auto` switches to CSR above a node budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdjacencyLayout {
    #[default]
    Auto,
    Dense,
    Sparse,
}

const DENSE_NODE_BUDGET: usize = 2048;

/// `D^(-1/2) A D^(-1/2)` where A carries multiplicities plus a self-loop per
/// node and D is its row-sum diagonal. Symmetric; an isolated node's row is
/// 1 at the diagonal.
pub fn normalize_adjacency(graph: &BipartiteGraph, layout: AdjacencyLayout) -> NormalizedAdjacency {
    let n = graph.n_nodes();
    // Symmetrized entries including self-loops.
    let mut entries: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for i in 0..n as u32 {
        entries.insert((i, i), 1.0);
    }
    for &(i, j, w) in &graph.edges {
        if i == j {
            *entries.get_mut(&(i, i)).expect("diagonal present") += w;
        } else {
            *entries.entry((i, j)).or_insert(0.0) += w;
            *entries.entry((j, i)).or_insert(0.0) += w;
        }
    }
    let mut degree = vec![0.0f64; n];
    for (&(i, _), &w) in &entries {
        degree[i as usize] += w;
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|&d| 1.0 / d.sqrt()).collect();

    let dense = match layout {
        AdjacencyLayout::Dense => true,
        AdjacencyLayout::Sparse => false,
        AdjacencyLayout::Auto => n <= DENSE_NODE_BUDGET,
    };
    if dense {
        let mut a = Array2::<f64>::zeros((n, n));
        for (&(i, j), &w) in &entries {
            a[[i as usize, j as usize]] = inv_sqrt[i as usize] * w * inv_sqrt[j as usize];
        }
        NormalizedAdjacency::Dense(a)
    } else {
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len());
        for (&(i, j), &w) in &entries {
            indptr[i as usize + 1] += 1;
            indices.push(j);
            data.push(inv_sqrt[i as usize] * w * inv_sqrt[j as usize]);
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        NormalizedAdjacency::Sparse(CsrMatrix {
            n,
            indptr,
            indices,
            data,
        })
    }
}
