//! Cosine similarity, competitor identification, and the three competition
//! features.

use std::collections::HashMap;

use chrono::NaiveDate;
use ndarray::{s, Array2, ArrayView1};
use rayon::prelude::*;

use crate::dates::shift_years;
use crate::error::{Error, Result};
use crate::ingest::{impute_amount, CompanyId, EntityStore};

use super::sif::DocVector;

/// Threshold and SIF parameters for competitor identification.
#[derive(Debug, Clone)]
pub struct CompetitionConfig {
    /// Minimum cosine similarity for two companies to be "in competition".
    pub min_sim: f64,
    /// SIF weighting parameter.
    pub sif_a: f64,
}

impl Default for CompetitionConfig {
    fn default() -> Self {
        CompetitionConfig {
            min_sim: 0.5,
            sif_a: super::sif::DEFAULT_SIF_A,
        }
    }
}

/// Companies similar to a target, sorted by descending similarity.
#[derive(Debug, Clone, Default)]
pub struct CompetitorSet {
    pub company_id: CompanyId,
    pub competitors: Vec<(CompanyId, f64)>,
}

/// The embedded universe: document vectors with founding dates attached.
#[derive(Debug, Clone)]
pub struct DocVectors {
    ids: Vec<CompanyId>,
    founded: Vec<NaiveDate>,
    token_counts: Vec<usize>,
    vectors: Array2<f64>,
    normalized: Array2<f64>,
    index: HashMap<CompanyId, usize>,
}

impl DocVectors {
    pub fn build(docs: Vec<DocVector>, store: &EntityStore) -> Self {
        let dim = docs.first().map(|d| d.vector.len()).unwrap_or(0);
        let mut ids = Vec::with_capacity(docs.len());
        let mut founded = Vec::with_capacity(docs.len());
        let mut token_counts = Vec::with_capacity(docs.len());
        let mut vectors = Array2::<f64>::zeros((docs.len(), dim));
        for (i, doc) in docs.into_iter().enumerate() {
            let company = store
                .company(&doc.company_id)
                .unwrap_or_else(|| panic!("embedded unknown company {}", doc.company_id));
            founded.push(company.founded_on);
            token_counts.push(doc.token_count);
            vectors.row_mut(i).assign(&doc.vector);
            ids.push(doc.company_id);
        }
        let mut normalized = vectors.clone();
        for mut row in normalized.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|x| x / norm);
            }
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        DocVectors {
            ids,
            founded,
            token_counts,
            vectors,
            normalized,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[CompanyId] {
        &self.ids
    }

    pub fn contains(&self, id: &CompanyId) -> bool {
        self.index.contains_key(id)
    }

    pub fn position(&self, id: &CompanyId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn founded_on(&self, position: usize) -> NaiveDate {
        self.founded[position]
    }

    pub fn token_count(&self, position: usize) -> usize {
        self.token_counts[position]
    }

    pub fn vector(&self, position: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(position)
    }
}

/// Cosine similarity `A·B / (||A|| ||B||)`, 0 when either norm is 0, clamped
/// to [-1, 1].
pub fn cosine_similarity(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (norm_a.sqrt() * norm_b.sqrt())).clamp(-1.0, 1.0))
}

/// Companies founded on or before `as_of` with similarity to `target` at or
/// above `min_sim`, excluding the target, sorted by descending similarity
/// (ties by id).
pub fn find_competitors(
    target: &CompanyId,
    universe: &DocVectors,
    config: &CompetitionConfig,
    as_of: NaiveDate,
) -> Result<CompetitorSet> {
    let target_pos = universe
        .position(target)
        .ok_or_else(|| Error::NotEmbedded(target.to_string()))?;
    let target_vec = universe.vector(target_pos);
    let mut competitors = Vec::new();
    for other in 0..universe.len() {
        if other == target_pos || universe.founded_on(other) > as_of {
            continue;
        }
        let sim = cosine_similarity(target_vec, universe.vector(other))?;
        if sim >= config.min_sim {
            competitors.push((universe.ids()[other].clone(), sim));
        }
    }
    competitors.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(CompetitorSet {
        company_id: target.clone(),
        competitors,
    })
}

/// All pairs (i, j, similarity) with i < j and similarity >= `min_sim`,
/// via blocked products of the normalized vectors.
pub fn competitor_edges(universe: &DocVectors, min_sim: f64) -> Vec<(u32, u32, f64)> {
    let n = universe.len();
    if n == 0 {
        return Vec::new();
    }
    const BLOCK: usize = 256;
    let starts: Vec<usize> = (0..n).step_by(BLOCK).collect();
    let per_block: Vec<Vec<(u32, u32, f64)>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + BLOCK).min(n);
            let sims = universe
                .normalized
                .slice(s![start..end, ..])
                .dot(&universe.normalized.t());
            let mut out = Vec::new();
            for i in start..end {
                for j in (i + 1)..n {
                    let sim = sims[[i - start, j]].clamp(-1.0, 1.0);
                    if sim >= min_sim {
                        out.push((i as u32, j as u32, sim));
                    }
                }
            }
            out
        })
        .collect();
    per_block.concat()
}

/// Group precomputed similarity edges into per-company competitor sets at a
/// snapshot date. Only companies founded on or before `as_of` participate.
pub fn competitor_sets_at(
    universe: &DocVectors,
    edges: &[(u32, u32, f64)],
    as_of: NaiveDate,
) -> HashMap<CompanyId, CompetitorSet> {
    let mut sets: HashMap<CompanyId, CompetitorSet> = HashMap::new();
    for &(i, j, sim) in edges {
        let (i, j) = (i as usize, j as usize);
        if universe.founded_on(i) > as_of || universe.founded_on(j) > as_of {
            continue;
        }
        let (id_i, id_j) = (&universe.ids()[i], &universe.ids()[j]);
        sets.entry(id_i.clone())
            .or_insert_with(|| CompetitorSet {
                company_id: id_i.clone(),
                ..CompetitorSet::default()
            })
            .competitors
            .push((id_j.clone(), sim));
        sets.entry(id_j.clone())
            .or_insert_with(|| CompetitorSet {
                company_id: id_j.clone(),
                ..CompetitorSet::default()
            })
            .competitors
            .push((id_i.clone(), sim));
    }
    for set in sets.values_mut() {
        set.competitors
            .sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    }
    sets
}

/// Competitor count plus total and trailing-year funding of competitors.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompetitionFeatures {
    pub count: usize,
    pub total_funding_usd: f64,
    pub funding_last_year_usd: f64,
}

/// Sum (imputed) amounts of competitor rounds announced on or before
/// `as_of`; the trailing-year sum covers `(as_of - 1y, as_of]`.
pub fn competition_features(
    as_of: NaiveDate,
    competitors: &CompetitorSet,
    store: &EntityStore,
) -> CompetitionFeatures {
    let year_ago = shift_years(as_of, -1);
    let mut total = 0.0;
    let mut last_year = 0.0;
    for (company_id, _) in &competitors.competitors {
        for &ri in store.rounds_of_until(company_id, as_of) {
            let round = store.round(ri);
            let amount = impute_amount(round, store);
            total += amount;
            if round.announced_on > year_ago {
                last_year += amount;
            }
        }
    }
    CompetitionFeatures {
        count: competitors.competitors.len(),
        total_funding_usd: total,
        funding_last_year_usd: last_year,
    }
}
