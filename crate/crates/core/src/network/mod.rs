//! Co-investment graph and betweenness-centrality investor features.
//!
//! Investors are linked when they backed the same portfolio company; edge
//! weight is the number of distinct shared companies. Betweenness runs over
//! edge distance `1 / weight`, so stronger co-investment ties are shorter.

use std::collections::{BTreeSet, BinaryHeap, HashMap};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::ingest::{CompanyId, EntityStore, InvestorId};

/// Weighted undirected co-investment graph at a snapshot date.
#[derive(Debug, Clone)]
pub struct InvestorGraph {
    as_of: NaiveDate,
    nodes: Vec<InvestorId>,
    index: HashMap<InvestorId, usize>,
    /// Per node: (neighbor, weight), sorted by neighbor index.
    adjacency: Vec<Vec<(usize, u32)>>,
    /// Distinct portfolio companies per investor.
    portfolio_size: Vec<u32>,
}

impl InvestorGraph {
    pub fn as_of(&self) -> NaiveDate {
        self.as_of
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[InvestorId] {
        &self.nodes
    }

    pub fn position(&self, id: &InvestorId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, u32)] {
        &self.adjacency[node]
    }

    pub fn portfolio_size(&self, node: usize) -> u32 {
        self.portfolio_size[node]
    }

    /// Edge weight between two investors, if linked.
    pub fn weight(&self, a: &InvestorId, b: &InvestorId) -> Option<u32> {
        let (a, b) = (self.position(a)?, self.position(b)?);
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, w)| w)
    }

    /// Undirected edges (i, j, weight) with i < j, in node order.
    pub fn edges(&self) -> Vec<(&InvestorId, &InvestorId, u32)> {
        let mut out = Vec::new();
        for (i, neighbors) in self.adjacency.iter().enumerate() {
            for &(j, w) in neighbors {
                if i < j {
                    out.push((&self.nodes[i], &self.nodes[j], w));
                }
            }
        }
        out
    }

    /// Build a graph directly from per-company investor lists (used by
    /// tests and oracles); node order is lexicographic.
    pub fn from_portfolios(as_of: NaiveDate, portfolios: &[(CompanyId, Vec<InvestorId>)]) -> Self {
        let mut node_set: BTreeSet<InvestorId> = BTreeSet::new();
        for (_, investors) in portfolios {
            node_set.extend(investors.iter().cloned());
        }
        let nodes: Vec<InvestorId> = node_set.into_iter().collect();
        let index: HashMap<InvestorId, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();

        let mut company_investors: HashMap<&CompanyId, BTreeSet<usize>> = HashMap::new();
        for (company, investors) in portfolios {
            let entry = company_investors.entry(company).or_default();
            for inv in investors {
                entry.insert(index[inv]);
            }
        }

        let mut portfolio_size = vec![0u32; nodes.len()];
        let mut pair_weight: HashMap<(usize, usize), u32> = HashMap::new();
        for investors in company_investors.values() {
            let members: Vec<usize> = investors.iter().copied().collect();
            for &m in &members {
                portfolio_size[m] += 1;
            }
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    *pair_weight.entry((i, j)).or_insert(0) += 1;
                }
            }
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (&(i, j), &w) in &pair_weight {
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for neighbors in &mut adjacency {
            neighbors.sort_by_key(|&(n, _)| n);
        }

        InvestorGraph {
            as_of,
            nodes,
            index,
            adjacency,
            portfolio_size,
        }
    }
}

/// Build the co-investment graph over rounds announced on or before `as_of`.
pub fn build_coinvestment_graph(store: &EntityStore, as_of: NaiveDate) -> InvestorGraph {
    let mut by_company: HashMap<CompanyId, Vec<InvestorId>> = HashMap::new();
    for round in store.rounds() {
        if round.announced_on > as_of {
            continue;
        }
        by_company
            .entry(round.company_id.clone())
            .or_default()
            .extend(round.investor_ids.iter().cloned());
    }
    let mut portfolios: Vec<(CompanyId, Vec<InvestorId>)> = by_company.into_iter().collect();
    portfolios.sort_by(|a, b| a.0.cmp(&b.0));
    InvestorGraph::from_portfolios(as_of, &portfolios)
}

/// Normalized betweenness and portfolio sizes at a snapshot date.
#[derive(Debug, Clone)]
pub struct CentralityTable {
    as_of: NaiveDate,
    ids: Vec<InvestorId>,
    index: HashMap<InvestorId, usize>,
    betweenness: Vec<f64>,
    portfolio_size: Vec<u32>,
}

impl CentralityTable {
    pub fn as_of(&self) -> NaiveDate {
        self.as_of
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn betweenness_of(&self, id: &InvestorId) -> f64 {
        self.index.get(id).map(|&i| self.betweenness[i]).unwrap_or(0.0)
    }

    pub fn portfolio_of(&self, id: &InvestorId) -> u32 {
        self.index
            .get(id)
            .map(|&i| self.portfolio_size[i])
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&InvestorId, f64, u32)> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id, self.betweenness[i], self.portfolio_size[i]))
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Min-heap on distance (reversed), ties by node for determinism.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Single-source dependency accumulation (Brandes) with Dijkstra over edge
/// distance `1 / weight`. Adds each node's dependency into `into`.
fn accumulate_source(graph: &InvestorGraph, source: usize, into: &mut [f64]) {
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();

    dist[source] = 0.0;
    sigma[source] = 1.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });

    while let Some(HeapEntry { dist: d, node: v }) = heap.pop() {
        if settled[v] {
            continue;
        }
        debug_assert_eq!(d, dist[v]);
        settled[v] = true;
        order.push(v);
        for &(w, weight) in graph.neighbors(v) {
            let candidate = dist[v] + 1.0 / weight as f64;
            if candidate < dist[w] {
                dist[w] = candidate;
                sigma[w] = sigma[v];
                preds[w].clear();
                preds[w].push(v);
                heap.push(HeapEntry {
                    dist: candidate,
                    node: w,
                });
            } else if candidate == dist[w] {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }

    let mut delta = vec![0.0f64; n];
    for &w in order.iter().rev() {
        for &v in &preds[w] {
            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
        }
        if w != source {
            into[w] += delta[w];
        }
    }
}

/// Weighted betweenness centrality, normalized to [0, 1].
///
/// Raw dependencies count ordered pairs; the undirected double count is
/// halved and scaled by `2 / ((n - 1)(n - 2))`. Graphs with fewer than three
/// nodes have all-zero centralities.
pub fn betweenness(graph: &InvestorGraph) -> CentralityTable {
    let n = graph.node_count();
    let mut raw = vec![0.0f64; n];
    if n >= 3 {
        // Fixed-size chunks with an ordered merge keep float accumulation
        // deterministic under any thread schedule.
        let sources: Vec<usize> = (0..n).collect();
        let chunks: Vec<Vec<f64>> = sources
            .par_chunks(32)
            .map(|chunk| {
                let mut local = vec![0.0f64; n];
                for &s in chunk {
                    accumulate_source(graph, s, &mut local);
                }
                local
            })
            .collect();
        for chunk in chunks {
            for (acc, v) in raw.iter_mut().zip(chunk) {
                *acc += v;
            }
        }
        let scale = 0.5 * 2.0 / ((n - 1) as f64 * (n - 2) as f64);
        for b in &mut raw {
            *b *= scale;
        }
    }
    CentralityTable {
        as_of: graph.as_of(),
        ids: graph.nodes().to_vec(),
        index: graph
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect(),
        betweenness: raw,
        portfolio_size: (0..n).map(|i| graph.portfolio_size(i)).collect(),
    }
}

/// Aggregated investor features for one company at the table's snapshot.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InvestorFeatures {
    pub n_investors: usize,
    pub max_centrality: f64,
    pub mean_centrality: f64,
    pub sum_centrality: f64,
    pub max_portfolio: u32,
}

/// Aggregates over the distinct investors of the company's rounds announced
/// on or before `as_of`. A company with no recorded investors gets zeros.
pub fn investor_features(
    company: &CompanyId,
    as_of: NaiveDate,
    table: &CentralityTable,
    store: &EntityStore,
) -> InvestorFeatures {
    let investors = store.investors_of_until(company, as_of);
    if investors.is_empty() {
        return InvestorFeatures::default();
    }
    let mut max_c = 0.0f64;
    let mut sum_c = 0.0f64;
    let mut max_p = 0u32;
    for inv in &investors {
        let c = table.betweenness_of(inv);
        max_c = max_c.max(c);
        sum_c += c;
        max_p = max_p.max(table.portfolio_of(inv));
    }
    InvestorFeatures {
        n_investors: investors.len(),
        max_centrality: max_c,
        mean_centrality: sum_c / investors.len() as f64,
        sum_centrality: sum_c,
        max_portfolio: max_p,
    }
}
